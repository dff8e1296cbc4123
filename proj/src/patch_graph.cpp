#include "hoverdepth/patch_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

// Label lookup restricted to a bounding box; -1 outside.
class LocalGrid {
 public:
  LocalGrid(int x0, int y0, int x1, int y1)
      : x0_(x0), y0_(y0), w_(x1 - x0 + 1), h_(y1 - y0 + 1),
        cells_(static_cast<std::size_t>(w_) * h_, -1) {}

  int get(int x, int y) const {
    const int lx = x - x0_;
    const int ly = y - y0_;
    if (lx < 0 || ly < 0 || lx >= w_ || ly >= h_) return -1;
    return cells_[static_cast<std::size_t>(ly) * w_ + lx];
  }
  void set(int x, int y, int v) {
    cells_[static_cast<std::size_t>(y - y0_) * w_ + (x - x0_)] = v;
  }

 private:
  int x0_, y0_, w_, h_;
  std::vector<int> cells_;
};

template <typename Range>
LocalGrid grid_for(const Range& pixels) {
  int x0 = pixels.front().x, x1 = x0, y0 = pixels.front().y, y1 = y0;
  for (const Pixel& p : pixels) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return LocalGrid(x0, y0, x1, y1);
}

bool touches_outside(const LocalGrid& labels, const Pixel& p, int w, int h) {
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int k = 0; k < 4; ++k) {
    const int x = p.x + kDx[k];
    const int y = p.y + kDy[k];
    if (x < 0 || y < 0 || x >= w || y >= h) continue;
    if (labels.get(x, y) < 0) return true;
  }
  return false;
}

void finalize_patch(Patch& patch) {
  std::sort(patch.pixels.begin(), patch.pixels.end(), [](const Pixel& a, const Pixel& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  patch.bbox_min = patch.pixels.front();
  patch.bbox_max = patch.pixels.front();
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const Pixel& p : patch.pixels) {
    patch.bbox_min.x = std::min(patch.bbox_min.x, p.x);
    patch.bbox_min.y = std::min(patch.bbox_min.y, p.y);
    patch.bbox_max.x = std::max(patch.bbox_max.x, p.x);
    patch.bbox_max.y = std::max(patch.bbox_max.y, p.y);
    sum += Eigen::Vector2d(p.x, p.y);
  }
  patch.center = sum / static_cast<double>(patch.pixels.size());
}

}  // namespace

std::vector<Patch> tessellate(const ImageSegment& segment, int width, int height,
                              int patch_size) {
  if (patch_size < 4) throw Error(ErrorCode::kInvalidInput, "patch size must be >= 4");
  if (segment.pixels.empty()) return {};
  (void)height;
  std::vector<Pixel> pixels;
  pixels.reserve(segment.pixels.size());
  for (int idx : segment.pixels) pixels.push_back({idx % width, idx / width});

  // Mask: 0 = inside segment, unlabelled.
  LocalGrid comp = grid_for(pixels);
  for (const Pixel& p : pixels) comp.set(p.x, p.y, -2);

  // Connected pieces of each grid cell.
  std::vector<std::vector<Pixel>> pieces;
  std::deque<Pixel> queue;
  for (const Pixel& seed : pixels) {
    if (comp.get(seed.x, seed.y) != -2) continue;
    const int id = static_cast<int>(pieces.size());
    const int cx = seed.x / patch_size;
    const int cy = seed.y / patch_size;
    pieces.emplace_back();
    comp.set(seed.x, seed.y, id);
    queue.assign(1, seed);
    while (!queue.empty()) {
      const Pixel cur = queue.front();
      queue.pop_front();
      pieces[id].push_back(cur);
      for (int k = 0; k < 4; ++k) {
        const int nx = cur.x + kDx[k];
        const int ny = cur.y + kDy[k];
        if (comp.get(nx, ny) != -2) continue;
        if (nx / patch_size != cx || ny / patch_size != cy) continue;
        comp.set(nx, ny, id);
        queue.push_back({nx, ny});
      }
    }
  }

  // Merge small pieces into the neighbour with the longest shared border.
  const std::size_t min_size = static_cast<std::size_t>(patch_size * patch_size) / 4;
  std::vector<int> owner(pieces.size());
  std::iota(owner.begin(), owner.end(), 0);
  auto root = [&](int a) {
    while (owner[a] != a) a = owner[a] = owner[owner[a]];
    return a;
  };
  std::vector<std::size_t> size(pieces.size());
  std::vector<std::vector<int>> members(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    size[i] = pieces[i].size();
    members[i] = {static_cast<int>(i)};
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const int r = root(static_cast<int>(i));
      if (r != static_cast<int>(i) || size[r] >= min_size) continue;
      std::map<int, int> border;  // neighbour root -> shared edge count
      for (int j : members[r]) {
        for (const Pixel& p : pieces[j]) {
          for (int k = 0; k < 4; ++k) {
            const int n = comp.get(p.x + kDx[k], p.y + kDy[k]);
            if (n < 0) continue;
            const int nr = root(n);
            if (nr != r) ++border[nr];
          }
        }
      }
      if (border.empty()) continue;
      int best = -1;
      int best_len = -1;
      bool best_big = false;
      for (const auto& [n, len] : border) {
        const bool big = size[n] >= min_size;
        if (best < 0 || (big && !best_big) || (big == best_big && len > best_len)) {
          best = n;
          best_len = len;
          best_big = big;
        }
      }
      const int keep = std::min(r, best);
      const int drop = std::max(r, best);
      owner[drop] = keep;
      size[keep] += size[drop];
      members[keep].insert(members[keep].end(), members[drop].begin(), members[drop].end());
      members[drop].clear();
      changed = true;
    }
  }

  std::map<int, Patch> grouped;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    auto& patch = grouped[root(static_cast<int>(i))];
    patch.pixels.insert(patch.pixels.end(), pieces[i].begin(), pieces[i].end());
  }
  std::vector<Patch> patches;
  patches.reserve(grouped.size());
  for (auto& [r, patch] : grouped) {
    finalize_patch(patch);
    patches.push_back(std::move(patch));
  }
  // Order by first pixel in raster order.
  std::sort(patches.begin(), patches.end(), [](const Patch& a, const Patch& b) {
    const Pixel& pa = a.pixels.front();
    const Pixel& pb = b.pixels.front();
    return pa.y < pb.y || (pa.y == pb.y && pa.x < pb.x);
  });
  for (std::size_t i = 0; i < patches.size(); ++i) patches[i].id = static_cast<int>(i);
  return patches;
}

std::vector<PatchPair> adjacency(std::span<const Patch> patches, int width,
                                 int height) {
  (void)width;
  (void)height;
  std::vector<PatchPair> pairs;
  if (patches.empty()) return pairs;
  std::vector<Pixel> all;
  for (const auto& patch : patches) all.insert(all.end(), patch.pixels.begin(), patch.pixels.end());
  LocalGrid labels = grid_for(all);
  for (const auto& patch : patches) {
    for (const Pixel& p : patch.pixels) labels.set(p.x, p.y, patch.id);
  }

  std::map<std::pair<int, int>, std::size_t> index;
  for (const auto& patch : patches) {
    const int a = patch.id;
    for (const Pixel& p : patch.pixels) {
      for (int k = 0; k < 4; ++k) {
        const int b = labels.get(p.x + kDx[k], p.y + kDy[k]);
        if (b < 0 || b == a) continue;
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = index.find(key);
        if (it == index.end()) {
          it = index.emplace(key, pairs.size()).first;
          PatchPair pair;
          pair.p = key.first;
          pair.q = key.second;
          pairs.push_back(std::move(pair));
        }
        auto& side = a < b ? pairs[it->second].border : pairs[it->second].far_border;
        if (side.empty() || !(side.back() == p)) side.push_back(p);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const PatchPair& x, const PatchPair& y) {
    return x.p < y.p || (x.p == y.p && x.q < y.q);
  });
  return pairs;
}

double pair_weight(const PatchPair& pair, const GrayImage& gradient) {
  if (pair.border.empty()) throw Error(ErrorCode::kInvalidInput, "empty pair border");
  double sum = 0.0;
  for (const Pixel& p : pair.border) sum += gradient(p.x, p.y);
  return sum / static_cast<double>(pair.border.size());
}

double warped_area_ratio(const Patch& patch, const CameraView& reference,
                         const CameraView& target, const PlaneSurface& plane) {
  const Eigen::Matrix3d h = plane_homography(reference, target, plane);
  double area = 0.0;
  for (const Pixel& p : patch.pixels) {
    const Eigen::Vector2d c[4] = {
        apply_homography(h, {p.x - 0.5, p.y - 0.5}),
        apply_homography(h, {p.x + 0.5, p.y - 0.5}),
        apply_homography(h, {p.x + 0.5, p.y + 0.5}),
        apply_homography(h, {p.x - 0.5, p.y + 0.5}),
    };
    double twice = 0.0;
    for (int i = 0; i < 4; ++i) {
      const auto& a = c[i];
      const auto& b = c[(i + 1) % 4];
      twice += a.x() * b.y() - b.x() * a.y();
    }
    area += 0.5 * std::abs(twice);
  }
  return area / static_cast<double>(patch.pixels.size());
}

double patch_weight(const Patch& patch, std::span<const CameraView> views,
                    std::size_t reference, const PlaneSurface& plane) {
  if (views.empty()) return 1.0;
  std::vector<double> ratios;
  ratios.reserve(views.size());
  for (const auto& view : views) {
    ratios.push_back(warped_area_ratio(patch, views[reference], view, plane));
  }
  const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) /
                      static_cast<double>(ratios.size());
  double var = 0.0;
  for (double r : ratios) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratios.size());
  return 1.0 + std::sqrt(var);
}

std::vector<SeedObservation> observe_cloud(std::span<const SparsePoint> points,
                                           const CameraView& reference) {
  std::vector<SeedObservation> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d xc = reference.to_camera(points[i].position);
    if (!(xc.z() > kGeomEpsilon) || !points[i].position.allFinite()) continue;
    const Eigen::Vector2d px = project(reference, points[i].position);
    const long x = std::lround(px.x());
    const long y = std::lround(px.y());
    if (x < 0 || y < 0 || x >= reference.width() || y >= reference.height()) continue;
    out[i] = {static_cast<int>(i), points[i].position, px, xc.z(), points[i].reproj_error};
  }
  return out;
}

SegmentGraph build_segment_graph(const ImageSegment& segment,
                                  const CameraView& reference,
                                  std::span<const SeedObservation> observations,
                                  int patch_size) {
  const int w = reference.width();
  const int h = reference.height();
  SegmentGraph graph;
  graph.segment_id = segment.id;
  graph.width = w;
  graph.height = h;
  graph.patches = tessellate(segment, w, h, patch_size);
  graph.pairs = adjacency(graph.patches, w, h);
  graph.incident.assign(graph.patches.size(), {});
  for (std::size_t e = 0; e < graph.pairs.size(); ++e) {
    graph.incident[graph.pairs[e].p].push_back(static_cast<int>(e));
    graph.incident[graph.pairs[e].q].push_back(static_cast<int>(e));
    graph.pairs[e].weight = pair_weight(graph.pairs[e], reference.gradient);
  }
  if (graph.patches.empty()) return graph;

  std::vector<Pixel> all;
  for (const auto& patch : graph.patches) all.insert(all.end(), patch.pixels.begin(), patch.pixels.end());
  LocalGrid labels = grid_for(all);
  for (const auto& patch : graph.patches) {
    for (const Pixel& p : patch.pixels) labels.set(p.x, p.y, patch.id);
  }
  for (const auto& obs : observations) {
    if (obs.point < 0) continue;
    const int x = static_cast<int>(std::lround(obs.pixel.x()));
    const int y = static_cast<int>(std::lround(obs.pixel.y()));
    const int id = labels.get(x, y);
    if (id >= 0) graph.patches[id].seeds.push_back(obs);
  }
  for (auto& patch : graph.patches) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(patch.seeds.size());
    for (const auto& s : patch.seeds) pts.push_back(s.pixel);
    patch.seed_area = convex_hull_area(pts);
    // Pixels next to the segment boundary measure the boundary, not texture.
    double g = 0.0;
    for (const Pixel& p : patch.pixels) {
      if (touches_outside(labels, p, w, h)) continue;
      g += reference.gradient(p.x, p.y);
    }
    patch.gradient_score = g;
  }
  return graph;
}

}  // namespace hoverdepth
