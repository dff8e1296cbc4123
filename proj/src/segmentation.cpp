#include "hoverdepth/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <utility>

#include "hoverdepth/error.hpp"
#include "hoverdepth/kdtree.hpp"

namespace hoverdepth {

namespace {

// ---- bilateral filter ------------------------------------------------------

inline float range_distance_sq(float a, float b) { return (a - b) * (a - b); }
inline float range_distance_sq(const Rgb& a, const Rgb& b) {
  return (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) +
         (a.b - b.b) * (a.b - b.b);
}

struct Accum1 {
  double v = 0.0;
  void add(double w, float x) { v += w * x; }
  float get(double inv) const { return static_cast<float>(v * inv); }
};
struct Accum3 {
  double r = 0.0, g = 0.0, b = 0.0;
  void add(double w, const Rgb& x) { r += w * x.r; g += w * x.g; b += w * x.b; }
  Rgb get(double inv) const {
    return {static_cast<float>(r * inv), static_cast<float>(g * inv),
            static_cast<float>(b * inv)};
  }
};

template <typename T> struct AccumFor;
template <> struct AccumFor<float> { using type = Accum1; };
template <> struct AccumFor<Rgb> { using type = Accum3; };

struct BilateralKernel {
  int radius = 0;
  std::vector<double> spatial;  // (2r+1)^2 weights
  double range_coeff = 0.0;
};

BilateralKernel make_kernel(double spatial_sigma, double range_sigma) {
  if (!(spatial_sigma > 0.0) || !(range_sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "bilateral sigmas must be positive");
  }
  BilateralKernel k;
  k.radius = static_cast<int>(std::ceil(2.0 * spatial_sigma));
  const int side = 2 * k.radius + 1;
  k.spatial.resize(static_cast<std::size_t>(side) * side);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      k.spatial[(dy + k.radius) * side + (dx + k.radius)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * spatial_sigma * spatial_sigma));
    }
  }
  k.range_coeff = -1.0 / (2.0 * range_sigma * range_sigma);
  return k;
}

template <typename T>
void bilateral_row(const Image<T>& in, Image<T>& out, const BilateralKernel& k,
                   int y) {
  const int w = in.width();
  const int h = in.height();
  const int side = 2 * k.radius + 1;
  for (int x = 0; x < w; ++x) {
    const T& center = in(x, y);
    typename AccumFor<T>::type acc;
    double wsum = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= h) continue;
      const double* srow = &k.spatial[(dy + k.radius) * side + k.radius];
      for (int dx = -k.radius; dx <= k.radius; ++dx) {
        const int xx = x + dx;
        if (xx < 0 || xx >= w) continue;
        const T& v = in(xx, yy);
        const double wt = srow[dx] * std::exp(k.range_coeff * range_distance_sq(v, center));
        acc.add(wt, v);
        wsum += wt;
      }
    }
    out(x, y) = acc.get(1.0 / wsum);
  }
}

template <typename T>
Image<T> bilateral_impl(const Image<T>& image, double spatial_sigma,
                        double range_sigma, bool parallel) {
  const BilateralKernel k = make_kernel(spatial_sigma, range_sigma);
  Image<T> out(image.width(), image.height());
  const int h = image.height();
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) bilateral_row(image, out, k, y);
  } else {
    for (int y = 0; y < h; ++y) bilateral_row(image, out, k, y);
  }
  return out;
}

// ---- union-find ------------------------------------------------------------

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  // The smaller root wins so results do not depend on union order.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<int> parent_;
};

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

}  // namespace

ColorImage bilateral_filter(const ColorImage& image, double spatial_sigma,
                            double range_sigma) {
  return bilateral_impl(image, spatial_sigma, range_sigma, true);
}
GrayImage bilateral_filter(const GrayImage& image, double spatial_sigma,
                           double range_sigma) {
  return bilateral_impl(image, spatial_sigma, range_sigma, true);
}
ColorImage bilateral_filter_serial(const ColorImage& image, double spatial_sigma,
                                   double range_sigma) {
  return bilateral_impl(image, spatial_sigma, range_sigma, false);
}
GrayImage bilateral_filter_serial(const GrayImage& image, double spatial_sigma,
                                  double range_sigma) {
  return bilateral_impl(image, spatial_sigma, range_sigma, false);
}

double adaptive_radius(std::span<const SparsePoint> points,
                       const Eigen::Vector3d& center, double factor) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : points) sum += (p.position - center).norm();
  return factor * sum / static_cast<double>(points.size());
}

std::vector<PointCluster> cluster_sparse_cloud(std::span<const SparsePoint> points,
                                               const Eigen::Vector3d& reference_center,
                                               const SegmentationParams& params) {
  std::vector<PointCluster> clusters;
  if (points.empty()) return clusters;
  const double radius = adaptive_radius(points, reference_center, params.proximity_factor);

  std::vector<Eigen::Vector3d> positions;
  positions.reserve(points.size());
  for (const auto& p : points) positions.push_back(p.position);
  const KdTree3 tree(positions);

  DisjointSets sets(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int j : tree.radius_search(positions[i], radius)) {
      if (static_cast<std::size_t>(j) <= i) continue;
      if (color_distance(points[i].color, points[j].color) <
          params.cluster_color_threshold) {
        sets.unite(static_cast<int>(i), j);
      }
    }
  }

  std::vector<int> cluster_of(points.size(), -1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int root = sets.find(static_cast<int>(i));
    if (cluster_of[root] < 0) {
      cluster_of[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[cluster_of[root]].members.push_back(static_cast<int>(i));
  }
  for (auto& c : clusters) {
    double r = 0.0, g = 0.0, b = 0.0;
    c.box_min = c.box_max = points[c.members.front()].position;
    for (int m : c.members) {
      r += points[m].color.r;
      g += points[m].color.g;
      b += points[m].color.b;
      c.box_min = c.box_min.cwiseMin(points[m].position);
      c.box_max = c.box_max.cwiseMax(points[m].position);
    }
    const double n = static_cast<double>(c.members.size());
    c.mean_color = {static_cast<float>(r / n), static_cast<float>(g / n),
                    static_cast<float>(b / n)};
  }
  return clusters;
}

Segmentation relabel(int width, int height, std::span<const int> labels,
                     const ColorImage& colors) {
  Segmentation out;
  out.width = width;
  out.height = height;
  out.labels.assign(labels.size(), -1);
  std::vector<int> remap;
  std::vector<std::array<double, 3>> sums;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int old = labels[i];
    if (old >= static_cast<int>(remap.size())) remap.resize(old + 1, -1);
    if (remap[old] < 0) {
      remap[old] = static_cast<int>(out.segments.size());
      ImageSegment seg;
      seg.id = remap[old];
      out.segments.push_back(std::move(seg));
      sums.push_back({0.0, 0.0, 0.0});
    }
    const int id = remap[old];
    out.labels[i] = id;
    out.segments[id].pixels.push_back(static_cast<int>(i));
    const Rgb& c = colors[i];
    sums[id][0] += c.r;
    sums[id][1] += c.g;
    sums[id][2] += c.b;
  }
  for (auto& seg : out.segments) {
    const double n = static_cast<double>(seg.pixels.size());
    seg.mean_color = {static_cast<float>(sums[seg.id][0] / n),
                      static_cast<float>(sums[seg.id][1] / n),
                      static_cast<float>(sums[seg.id][2] / n)};
  }
  return out;
}

namespace {

// Absorbs regions below `min_size` into the adjacent region with the
// closest mean color until no small region has a neighbor.
void absorb_small_regions(int width, int height, std::vector<int>& labels,
                          const ColorImage& colors, int min_size) {
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<double> size(count, 0.0);
  std::vector<std::array<double, 3>> sum(count, {0.0, 0.0, 0.0});
  std::vector<std::set<int>> adj(count);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const int a = labels[i];
      size[a] += 1.0;
      sum[a][0] += colors[i].r;
      sum[a][1] += colors[i].g;
      sum[a][2] += colors[i].b;
      if (x + 1 < width && labels[i + 1] != a) {
        adj[a].insert(labels[i + 1]);
        adj[labels[i + 1]].insert(a);
      }
      if (y + 1 < height && labels[i + width] != a) {
        adj[a].insert(labels[i + width]);
        adj[labels[i + width]].insert(a);
      }
    }
  }
  DisjointSets sets(count);
  std::vector<bool> alive(count, true);
  auto mean_dist = [&](int a, int b) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double diff = sum[a][c] / size[a] - sum[b][c] / size[b];
      d += diff * diff;
    }
    return d;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> small;
    for (int s = 0; s < count; ++s) {
      if (alive[s] && size[s] < min_size && !adj[s].empty()) small.push_back(s);
    }
    std::sort(small.begin(), small.end(), [&](int a, int b) {
      return size[a] < size[b] || (size[a] == size[b] && a < b);
    });
    for (int s : small) {
      if (!alive[s] || size[s] >= min_size || adj[s].empty()) continue;
      int best = -1;
      double best_d = 0.0;
      for (int n : adj[s]) {
        const double d = mean_dist(s, n);
        if (best < 0 || d < best_d) {
          best = n;
          best_d = d;
        }
      }
      // Merge s into best.
      alive[s] = false;
      sets.unite(s, best);
      size[best] += size[s];
      for (int c = 0; c < 3; ++c) sum[best][c] += sum[s][c];
      for (int n : adj[s]) {
        adj[n].erase(s);
        if (n != best) {
          adj[n].insert(best);
          adj[best].insert(n);
        }
      }
      adj[best].erase(s);
      adj[s].clear();
      changed = true;
    }
  }
  for (auto& l : labels) l = sets.find(l);
}

}  // namespace

Segmentation region_grow(const ColorImage& filtered, double color_threshold,
                         int min_segment_size) {
  if (!(color_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "region threshold must be positive");
  }
  const int w = filtered.width();
  const int h = filtered.height();
  std::vector<int> labels(filtered.size(), -1);
  int next = 0;
  std::deque<int> queue;
  for (std::size_t seed = 0; seed < labels.size(); ++seed) {
    if (labels[seed] >= 0) continue;
    const int id = next++;
    labels[seed] = id;
    double mr = filtered[seed].r, mg = filtered[seed].g, mb = filtered[seed].b;
    double n = 1.0;
    queue.assign(1, static_cast<int>(seed));
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      const int cx = cur % w;
      const int cy = cur / w;
      for (int k = 0; k < 4; ++k) {
        const int nx = cx + kDx[k];
        const int ny = cy + kDy[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int ni = ny * w + nx;
        if (labels[ni] >= 0) continue;
        const Rgb& c = filtered[ni];
        const Rgb mean{static_cast<float>(mr), static_cast<float>(mg),
                       static_cast<float>(mb)};
        if (color_distance(c, mean) < color_threshold) {
          labels[ni] = id;
          n += 1.0;
          mr += (c.r - mr) / n;
          mg += (c.g - mg) / n;
          mb += (c.b - mb) / n;
          queue.push_back(ni);
        }
      }
    }
  }
  if (min_segment_size > 1) absorb_small_regions(w, h, labels, filtered, min_segment_size);
  return relabel(w, h, labels, filtered);
}

Segmentation merge_segments(const Segmentation& segmentation,
                            std::span<const PointCluster> clusters,
                            std::span<const SparsePoint> points,
                            const CameraView& reference) {
  const int w = segmentation.width;
  const int h = segmentation.height;
  const int count = static_cast<int>(segmentation.segments.size());

  // Clusters hitting each segment.
  std::vector<std::vector<int>> hits(count);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int m : clusters[c].members) {
      const Eigen::Vector3d xc = reference.to_camera(points[m].position);
      if (!(xc.z() > kGeomEpsilon)) continue;
      const Eigen::Vector2d px = project(reference, points[m].position);
      const int x = static_cast<int>(std::lround(px.x()));
      const int y = static_cast<int>(std::lround(px.y()));
      if (x < 0 || y < 0 || x >= w || y >= h) continue;
      auto& list = hits[segmentation.labels[static_cast<std::size_t>(y) * w + x]];
      if (list.empty() || list.back() != static_cast<int>(c)) list.push_back(static_cast<int>(c));
    }
  }
  for (auto& list : hits) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  // Only 4-adjacent segments merge, which keeps every segment connected.
  std::set<std::pair<int, int>> adjacent;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const int a = segmentation.labels[i];
      if (x + 1 < w && segmentation.labels[i + 1] != a) {
        const int b = segmentation.labels[i + 1];
        adjacent.emplace(std::min(a, b), std::max(a, b));
      }
      if (y + 1 < h && segmentation.labels[i + w] != a) {
        const int b = segmentation.labels[i + w];
        adjacent.emplace(std::min(a, b), std::max(a, b));
      }
    }
  }
  DisjointSets sets(count);
  for (const auto& [a, b] : adjacent) {
    const auto& ha = hits[a];
    const auto& hb = hits[b];
    std::size_t i = 0, j = 0;
    while (i < ha.size() && j < hb.size()) {
      if (ha[i] == hb[j]) {
        sets.unite(a, b);
        break;
      }
      if (ha[i] < hb[j]) ++i; else ++j;
    }
  }

  std::vector<int> labels(segmentation.labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = sets.find(segmentation.labels[i]);

  // Mean colors are carried over by pixel-count weighting.
  ColorImage colors(w, h);
  for (const auto& seg : segmentation.segments) {
    for (int p : seg.pixels) colors[p] = seg.mean_color;
  }
  Segmentation out = relabel(w, h, labels, colors);
  for (int s = 0; s < count; ++s) {
    const int id = out.labels[segmentation.segments[s].pixels.front()];
    auto& dst = out.segments[id].clusters;
    dst.insert(dst.end(), hits[s].begin(), hits[s].end());
  }
  for (auto& seg : out.segments) {
    std::sort(seg.clusters.begin(), seg.clusters.end());
    seg.clusters.erase(std::unique(seg.clusters.begin(), seg.clusters.end()),
                       seg.clusters.end());
  }
  return out;
}

bool is_valid_partition(const Segmentation& s) {
  const std::size_t n = static_cast<std::size_t>(s.width) * s.height;
  if (s.labels.size() != n) return false;
  std::size_t total = 0;
  std::vector<char> seen(n, 0);
  for (std::size_t id = 0; id < s.segments.size(); ++id) {
    const auto& seg = s.segments[id];
    if (seg.id != static_cast<int>(id) || seg.pixels.empty()) return false;
    for (int p : seg.pixels) {
      if (p < 0 || static_cast<std::size_t>(p) >= n || s.labels[p] != seg.id) return false;
    }
    total += seg.pixels.size();
    // Connectivity by flood fill restricted to the label.
    std::deque<int> queue{seg.pixels.front()};
    seen[seg.pixels.front()] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      const int cx = cur % s.width;
      const int cy = cur / s.width;
      for (int k = 0; k < 4; ++k) {
        const int nx = cx + kDx[k];
        const int ny = cy + kDy[k];
        if (nx < 0 || ny < 0 || nx >= s.width || ny >= s.height) continue;
        const int ni = ny * s.width + nx;
        if (seen[ni] || s.labels[ni] != seg.id) continue;
        seen[ni] = 1;
        ++reached;
        queue.push_back(ni);
      }
    }
    if (reached != seg.pixels.size()) return false;
  }
  return total == n;
}

}  // namespace hoverdepth
