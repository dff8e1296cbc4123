#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hoverdepth {

enum class ErrorCode {
  kInvalidInput,
  kIo,
  kNonPositiveDepth,
  kDegeneratePlane,
  kDegenerateConfiguration,
  kRayParallelToPlane,
  kNegativeIntersection,
  kInsufficientSeeds,
  kNoInitializedNeighbor,
  kEmptyCloud,
  kAmbiguousSweep,
  kUninitializableSegment,
  kPatchOutOfBounds,
  kNoOverlap,
  kNonDecreasingGuard,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers can route recoverable conditions (e.g. an ambiguous sweep) without
// parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hoverdepth
