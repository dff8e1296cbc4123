#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hoverdepth/error.hpp"
#include "hoverdepth/segmentation.hpp"
#include "support.hpp"

using namespace hoverdepth;

namespace {

GrayImage bilateral_oracle(const GrayImage& img, double ss, double sr) {
  const int r = static_cast<int>(std::ceil(2.0 * ss));
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double num = 0.0, den = 0.0;
      for (int v = y - r; v <= y + r; ++v) {
        for (int u = x - r; u <= x + r; ++u) {
          if (!img.contains(u, v)) continue;
          const double d = img(u, v) - img(x, y);
          const double w = std::exp(-((u - x) * (u - x) + (v - y) * (v - y)) / (2 * ss * ss) -
                                    d * d / (2 * sr * sr));
          num += w * img(u, v);
          den += w;
        }
      }
      out(x, y) = static_cast<float>(num / den);
    }
  }
  return out;
}

std::vector<std::vector<int>> cluster_oracle(std::span<const SparsePoint> pts, double r, double c) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((pts[i].position - pts[j].position).norm() < r &&
          color_distance(pts[i].color, pts[j].color) < c) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [_, g] : groups) out.push_back(g);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> members_of(const std::vector<PointCluster>& clusters) {
  std::vector<std::vector<int>> out;
  for (const auto& c : clusters) out.push_back(c.members);
  std::sort(out.begin(), out.end());
  return out;
}

ColorImage constant_image(int w, int h, Rgb c) { return ColorImage(w, h, c); }

// Point at depth 1 that projects onto pixel (x, y) of an identity view.
SparsePoint point_at(const CameraView& v, double x, double y, Rgb color) {
  SparsePoint p;
  p.position = {(x - v.intrinsics.cx) / v.intrinsics.fx, (y - v.intrinsics.cy) / v.intrinsics.fy, 1.0};
  p.color = color;
  return p;
}

Segmentation from_labels(int w, int h, const std::vector<int>& labels) {
  return relabel(w, h, labels, ColorImage(w, h));
}

}  // namespace

TEST(Bilateral, ConstantImageUnchanged) {
  const ColorImage img = constant_image(20, 15, {40, 50, 60});
  EXPECT_EQ(bilateral_filter(img, 3.0, 12.0), img);
}

TEST(Bilateral, StepEdgeStaysPut) {
  GrayImage img(30, 10, 20.0f);
  for (int y = 0; y < 10; ++y) {
    for (int x = 15; x < 30; ++x) img(x, y) = 220.0f;
  }
  const GrayImage out = bilateral_filter(img, 3.0, 5.0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 30; ++x) EXPECT_EQ(out(x, y) > 120.0f, x >= 15);
  }
}

TEST(Bilateral, MatchesBruteForceOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  GrayImage img(16, 16);
  for (float& v : img.data()) v = u(rng);
  const GrayImage out = bilateral_filter(img, 2.0, 30.0);
  const GrayImage ref = bilateral_oracle(img, 2.0, 30.0);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-3);
}

TEST(Bilateral, ConvexCombinationAndSerialTwin) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(10.0f, 200.0f);
  ColorImage img(37, 23);
  for (auto& c : img.data()) c = {u(rng), u(rng), u(rng)};
  const ColorImage a = bilateral_filter(img, 3.0, 12.0);
  const ColorImage b = bilateral_filter_serial(img, 3.0, 12.0);
  EXPECT_EQ(a, b);
  for (const auto& c : a.data()) {
    EXPECT_GE(c.r, 10.0f - 1e-3f);
    EXPECT_LE(c.r, 200.0f + 1e-3f);
  }
  EXPECT_THROW(bilateral_filter(img, 0.0, 12.0), Error);
}

TEST(Cluster, AdaptiveRadius) {
  std::vector<SparsePoint> pts(2);
  pts[0].position = {0, 0, 2};
  pts[1].position = {0, 0, 4};
  EXPECT_DOUBLE_EQ(adaptive_radius(pts, Eigen::Vector3d::Zero(), 0.05), 0.15);
}

TEST(Cluster, SeparatedBlobs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<SparsePoint> pts;
  for (int i = 0; i < 60; ++i) {
    SparsePoint p;
    p.position = Eigen::Vector3d(i < 30 ? -1.0 : 1.0, 0, 3) + Eigen::Vector3d(g(rng), g(rng), g(rng));
    p.color = {100, 100, 100};
    pts.push_back(p);
  }
  const auto clusters = cluster_sparse_cloud(pts, Eigen::Vector3d::Zero(), {});
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].members.size(), 30u);
  EXPECT_EQ(clusters[0].members.front(), 0);
}

TEST(Cluster, ColorSplitsInterleavedBlob) {
  std::vector<SparsePoint> pts;
  for (int i = 0; i < 40; ++i) {
    SparsePoint p;
    p.position = {0.001 * i, 0, 2};
    p.color = i % 2 ? Rgb{200, 20, 20} : Rgb{20, 20, 200};
    pts.push_back(p);
  }
  const auto clusters = cluster_sparse_cloud(pts, Eigen::Vector3d::Zero(), {});
  ASSERT_EQ(clusters.size(), 2u);
  for (const auto& c : clusters) EXPECT_EQ(c.members.size(), 20u);
}

TEST(Cluster, MatchesUnionFindOracleAndIsOrderFree) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<float> c(0.0f, 90.0f);
  std::vector<SparsePoint> pts;
  for (int i = 0; i < 600; ++i) {
    SparsePoint p;
    p.position = {u(rng), u(rng), 3.0 + u(rng)};
    p.color = {c(rng), c(rng), c(rng)};
    pts.push_back(p);
  }
  SegmentationParams params;
  params.proximity_factor = 0.05;
  const double r = adaptive_radius(pts, Eigen::Vector3d::Zero(), params.proximity_factor);
  const auto clusters = cluster_sparse_cloud(pts, Eigen::Vector3d::Zero(), params);
  EXPECT_EQ(members_of(clusters), cluster_oracle(pts, r, params.cluster_color_threshold));
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    EXPECT_LT(clusters[i - 1].members.front(), clusters[i].members.front());
  }

  std::vector<int> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<SparsePoint> shuffled;
  for (int i : perm) shuffled.push_back(pts[i]);
  auto again = members_of(cluster_sparse_cloud(shuffled, Eigen::Vector3d::Zero(), params));
  for (auto& g : again) {
    for (int& m : g) m = perm[m];
    std::sort(g.begin(), g.end());
  }
  std::sort(again.begin(), again.end());
  EXPECT_EQ(again, members_of(clusters));
}

TEST(RegionGrow, TwoTones) {
  ColorImage img(40, 30, Rgb{50, 50, 50});
  for (int y = 0; y < 30; ++y) {
    for (int x = 20; x < 40; ++x) img(x, y) = {150, 150, 150};
  }
  const Segmentation s = region_grow(img, 8.0);
  EXPECT_EQ(s.segments.size(), 2u);
  EXPECT_TRUE(is_valid_partition(s));
  EXPECT_EQ(s.segments[0].pixels.size(), 600u);
}

TEST(RegionGrow, ConstantImage) {
  const Segmentation s = region_grow(constant_image(33, 17, {9, 9, 9}), 8.0);
  EXPECT_EQ(s.segments.size(), 1u);
  EXPECT_TRUE(is_valid_partition(s));
}

TEST(RegionGrow, SmallRegionsAreAbsorbed) {
  ColorImage img(40, 40, Rgb{50, 50, 50});
  for (int y = 10; y < 14; ++y) {
    for (int x = 10; x < 14; ++x) img(x, y) = {200, 200, 200};
  }
  EXPECT_EQ(region_grow(img, 8.0, 64).segments.size(), 1u);
  EXPECT_EQ(region_grow(img, 8.0, 1).segments.size(), 2u);
}

TEST(RegionGrow, NoisyThreeRegions) {
  const int w = 90, h = 60;
  std::mt19937_64 rng(6);
  std::normal_distribution<float> noise(0.0f, 2.5f);
  ColorImage img(w, h);
  std::vector<int> truth(w * h);
  const Rgb tones[3] = {{60, 80, 100}, {160, 60, 60}, {90, 170, 90}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int t = x < 30 ? 0 : (y < 30 ? 1 : 2);
      truth[y * w + x] = t;
      const float n = noise(rng);
      img(x, y) = {tones[t].r + n, tones[t].g + n, tones[t].b + n};
    }
  }
  const Segmentation s = region_grow(bilateral_filter(img, 3.0, 12.0), 8.0);
  EXPECT_TRUE(is_valid_partition(s));
  std::map<int, std::map<int, int>> votes;
  for (int i = 0; i < w * h; ++i) ++votes[truth[i]][s.labels[i]];
  int agree = 0;
  std::set<int> used;
  for (auto& [t, m] : votes) {
    const auto best = std::max_element(m.begin(), m.end(),
                                       [](auto& a, auto& b) { return a.second < b.second; });
    agree += best->second;
    used.insert(best->first);
  }
  EXPECT_EQ(used.size(), 3u);
  EXPECT_GE(agree, 0.95 * w * h);
}

TEST(Merge, ClusterJoinsAdjacentFragments) {
  const int w = 30, h = 10;
  std::vector<int> labels(w * h);
  for (int i = 0; i < w * h; ++i) labels[i] = (i % w) / 10;
  const Segmentation s = from_labels(w, h, labels);
  ASSERT_EQ(s.segments.size(), 3u);
  const CameraView ref = hdtest::flat_view(w, h, 20.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  std::vector<SparsePoint> pts{point_at(ref, 5, 5, {}), point_at(ref, 15, 5, {}),
                               point_at(ref, 25, 5, {})};
  PointCluster c;
  c.members = {0, 1, 2};
  const std::vector<PointCluster> clusters{c};
  const Segmentation m = merge_segments(s, clusters, pts, ref);
  EXPECT_EQ(m.segments.size(), 1u);
  EXPECT_EQ(m.segments[0].clusters, std::vector<int>{0});
  EXPECT_TRUE(is_valid_partition(m));
}

TEST(Merge, DistinctClustersStaySeparate) {
  const int w = 20, h = 10;
  std::vector<int> labels(w * h);
  for (int i = 0; i < w * h; ++i) labels[i] = (i % w) / 10;
  const Segmentation s = from_labels(w, h, labels);
  const CameraView ref = hdtest::flat_view(w, h, 20.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  std::vector<SparsePoint> pts{point_at(ref, 5, 5, {}), point_at(ref, 15, 5, {})};
  PointCluster a, b;
  a.members = {0};
  b.members = {1};
  const std::vector<PointCluster> clusters{a, b};
  const Segmentation m = merge_segments(s, clusters, pts, ref);
  EXPECT_EQ(m.segments.size(), 2u);
  EXPECT_EQ(m.labels, s.labels);
  const Segmentation again = merge_segments(m, clusters, pts, ref);
  EXPECT_EQ(again.labels, m.labels);
}

TEST(Merge, RandomOversegmentationOfTwoPlanes) {
  hoverdepth::SceneSpec spec = hdtest::plane_scene(2.0, 96, 72, 2);
  spec.surfaces[0] = fronto_surface(2.0, -10000, -10000, 48, 10000, {200, 60, 60});
  spec.surfaces[0].texture = TextureKind::kNone;
  spec.surfaces.push_back(fronto_surface(3.0, 48, -10000, 10000, 10000, {60, 60, 200}));
  spec.surfaces[1].texture = TextureKind::kNone;
  spec.seed_density = 0.15;
  const SyntheticScene scene = generate_synthetic(spec);
  const auto views = hdtest::views_of(scene.dataset);
  const auto clusters = cluster_sparse_cloud(scene.dataset.cloud, views[0].center(), {});
  ASSERT_EQ(clusters.size(), 2u);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::uniform_int_distribution<int> cut(8, 40);
    const int cx = cut(rng), cy = cut(rng) + 10;
    std::vector<int> labels(96 * 72);
    for (int y = 0; y < 72; ++y) {
      for (int x = 0; x < 96; ++x) {
        const int side = x < 48 ? 0 : 1;
        labels[y * 96 + x] = side * 4 + ((x % 48) < cx ? 0 : 1) + (y < cy ? 0 : 2);
      }
    }
    const Segmentation over = from_labels(96, 72, labels);
    ASSERT_EQ(over.segments.size(), 8u);
    const Segmentation m = merge_segments(over, clusters, scene.dataset.cloud, views[0]);
    ASSERT_EQ(m.segments.size(), 2u);
    for (int i = 0; i < 96 * 72; ++i) EXPECT_EQ(m.labels[i], scene.labels[i]);
    EXPECT_EQ(merge_segments(m, clusters, scene.dataset.cloud, views[0]).labels, m.labels);
  }
}
