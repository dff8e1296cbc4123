#include "hoverdepth/error.hpp"

namespace hoverdepth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kDegeneratePlane: return "DegeneratePlane";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kRayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::kNegativeIntersection: return "NegativeIntersection";
    case ErrorCode::kInsufficientSeeds: return "InsufficientSeeds";
    case ErrorCode::kNoInitializedNeighbor: return "NoInitializedNeighbor";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kAmbiguousSweep: return "AmbiguousSweep";
    case ErrorCode::kUninitializableSegment: return "UninitializableSegment";
    case ErrorCode::kPatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kNonDecreasingGuard: return "NonDecreasingGuard";
  }
  return "Unknown";
}

}  // namespace hoverdepth
