#include "hoverdepth/io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hoverdepth/config.hpp"
#include "hoverdepth/error.hpp"

namespace hoverdepth {

using nlohmann::json;

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

std::uint8_t to_byte(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 255.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInvalidInput, "color must be [r, g, b]");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInvalidInput, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* texture_name(TextureKind t) {
  switch (t) {
    case TextureKind::kNone: return "none";
    case TextureKind::kNoise: return "noise";
    case TextureKind::kLinear: return "linear";
  }
  return "none";
}

json solve_to_json(const SolveReport& s) {
  return {{"initial_cost", s.initial_cost}, {"final_cost", s.final_cost},
          {"sweeps", s.sweeps},             {"accepted_moves", s.accepted_moves},
          {"free_patches", s.free_count},   {"stable_patches", s.stable_count},
          {"wall_time", s.wall_time},       {"cost_history", s.cost_history}};
}

}  // namespace

void write_pfm(const fs::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  std::vector<std::uint32_t> row(static_cast<std::size_t>(depth.width));
  for (int y = depth.height - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width; ++x) {
      const float v = depth.is_valid(x, y) ? static_cast<float>(depth.at(x, y)) : -1.0f;
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
      row[static_cast<std::size_t>(x)] = bits;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

DepthMap read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0) {
    throw Error(ErrorCode::kIo, "not a single-channel PFM: " + path.string());
  }
  in.get();
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  DepthMap depth(w, h);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
    if (!in) throw Error(ErrorCode::kIo, "truncated PFM: " + path.string());
    for (int x = 0; x < w; ++x) {
      std::uint32_t bits = row[static_cast<std::size_t>(x)];
      if (swap) bits = byteswap32(bits);
      const float v = std::bit_cast<float>(bits);
      if (std::isfinite(v) && v > 0.0f) depth.set(x, y, v);
    }
  }
  return depth;
}

void write_png(const fs::path& path, const ColorImage& image) {
  std::vector<std::uint8_t> buf(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) {
    buf[3 * i] = to_byte(image[i].r);
    buf[3 * i + 1] = to_byte(image[i].g);
    buf[3 * i + 2] = to_byte(image[i].b);
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + png.message);
  }
}

ColorImage read_png(const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + png.message);
  }
  ColorImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  for (std::size_t i = 0; i < image.size(); ++i) {
    image[i] = {static_cast<float>(buf[3 * i]), static_cast<float>(buf[3 * i + 1]),
                static_cast<float>(buf[3 * i + 2])};
  }
  return image;
}

Rgb inferno(double t) {
  static constexpr std::array<std::array<float, 3>, 11> kStops{{
      {0, 0, 4},      {22, 11, 57},   {66, 10, 104},  {106, 23, 110},
      {147, 38, 103}, {188, 55, 84},  {221, 81, 58},  {243, 120, 25},
      {252, 165, 10}, {246, 215, 70}, {252, 255, 164}}};
  if (!(t > 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double s = t * 10.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(s), 9);
  const auto f = static_cast<float>(s - static_cast<double>(i));
  const auto& a = kStops[i];
  const auto& b = kStops[i + 1];
  return {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])};
}

ColorImage colorize_depth(const DepthMap& depth) {
  ColorImage out(depth.width, depth.height);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (!depth.valid[i]) continue;
    const double inv = 1.0 / depth.depth[i];
    lo = std::min(lo, inv);
    hi = std::max(hi, inv);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  // Keep the darkest stop for invalid pixels.
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    out[i] = depth.valid[i] ? inferno(0.08 + 0.92 * (1.0 / depth.depth[i] - lo) / span)
                            : Rgb{0.0f, 0.0f, 0.0f};
  }
  return out;
}

ColorImage overlay_labels(const ColorImage& base, std::span<const int> labels, double alpha) {
  if (labels.size() != base.size()) throw Error(ErrorCode::kInvalidInput, "label size mismatch");
  ColorImage out = base;
  const auto a = static_cast<float>(alpha);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (labels[i] < 0) continue;
    std::uint64_t h = static_cast<std::uint64_t>(labels[i]) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    const Rgb c{static_cast<float>(h & 0xff), static_cast<float>((h >> 8) & 0xff),
                static_cast<float>((h >> 16) & 0xff)};
    out[i] = {(1 - a) * base[i].r + a * c.r, (1 - a) * base[i].g + a * c.g,
              (1 - a) * base[i].b + a * c.b};
  }
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<SparsePoint> load_cloud(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SparsePoint> cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    SparsePoint p;
    double r = 0, g = 0, b = 0;
    if (!(ss >> p.position.x() >> p.position.y() >> p.position.z() >> r >> g >> b >>
          p.reproj_error)) {
      throw Error(ErrorCode::kInvalidInput,
                  path.string() + ":" + std::to_string(line_no) + ": expected 7 numbers");
    }
    p.color = {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
    cloud.push_back(p);
  }
  return cloud;
}

void save_cloud(const fs::path& path, std::span<const SparsePoint> cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : cloud) {
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
        << p.color.r << ' ' << p.color.g << ' ' << p.color.b << ' ' << p.reproj_error << '\n';
  }
}

Dataset load_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  Dataset ds;
  try {
    const auto& k = j.at("intrinsics");
    ds.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                     k.at("cx").get<double>(), k.at("cy").get<double>()};
    for (const auto& img : j.at("images")) ds.images.push_back(read_png(dir / img.get<std::string>()));
    for (const auto& pj : j.at("poses")) {
      const auto& r = pj.at("R");
      const auto& t = pj.at("t");
      if (r.size() != 9 || t.size() != 3) {
        throw Error(ErrorCode::kInvalidInput, "pose needs 9 rotation and 3 translation values");
      }
      Pose pose;
      for (int i = 0; i < 9; ++i) pose.rotation(i / 3, i % 3) = r[i].get<double>();
      for (int i = 0; i < 3; ++i) pose.translation[i] = t[i].get<double>();
      ds.poses.push_back(pose);
    }
    ds.cloud = load_cloud(dir / j.at("cloud").get<std::string>());
    ds.reference = j.value("reference_index", std::size_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, path.string() + ": " + e.what());
  }
  return ds;
}

void save_manifest(const fs::path& path, const Dataset& dataset) {
  const fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  json j;
  j["intrinsics"] = {{"fx", dataset.intrinsics.fx}, {"fy", dataset.intrinsics.fy},
                     {"cx", dataset.intrinsics.cx}, {"cy", dataset.intrinsics.cy}};
  j["images"] = json::array();
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03zu.png", i);
    write_png(dir / name, dataset.images[i]);
    j["images"].push_back(name);
  }
  j["poses"] = json::array();
  for (const auto& p : dataset.poses) {
    json r = json::array();
    for (int i = 0; i < 9; ++i) r.push_back(p.rotation(i / 3, i % 3));
    j["poses"].push_back({{"R", r}, {"t", {p.translation.x(), p.translation.y(), p.translation.z()}}});
  }
  save_cloud(dir / "cloud.txt", dataset.cloud);
  j["cloud"] = "cloud.txt";
  j["reference_index"] = dataset.reference;
  write_json(path, j);
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  try {
    s.width = get_or(j, "width", s.width);
    s.height = get_or(j, "height", s.height);
    s.intrinsics.cx = (s.width - 1) / 2.0;
    s.intrinsics.cy = (s.height - 1) / 2.0;
    if (j.contains("intrinsics")) {
      const auto& k = j["intrinsics"];
      s.intrinsics.fx = k.at("fx").get<double>();
      s.intrinsics.fy = get_or(k, "fy", s.intrinsics.fx);
      s.intrinsics.cx = get_or(k, "cx", s.intrinsics.cx);
      s.intrinsics.cy = get_or(k, "cy", s.intrinsics.cy);
    }
    s.views = get_or(j, "views", s.views);
    s.baseline = get_or(j, "baseline", s.baseline);
    s.max_rotation_deg = get_or(j, "max_rotation_deg", s.max_rotation_deg);
    s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
    s.seed_density = get_or(j, "seed_density", s.seed_density);
    s.reproj_min = get_or(j, "reproj_min", s.reproj_min);
    s.reproj_max = get_or(j, "reproj_max", s.reproj_max);
    s.position_noise = get_or(j, "position_noise", s.position_noise);
    s.seed = get_or(j, "seed", s.seed);
    if (j.contains("background")) s.background = rgb_from_json(j["background"]);
    for (const auto& sj : j.at("surfaces")) {
      SurfaceSpec f;
      if (sj.contains("depth")) {
        f.plane.point = {0.0, 0.0, sj["depth"].get<double>()};
        f.plane.normal = {0.0, 0.0, -1.0};
      } else {
        f.plane.point = vec3_from_json(sj.at("point"));
        f.plane.normal = vec3_from_json(sj.at("normal")).normalized();
      }
      const auto& r = sj.at("region");
      if (r.size() != 4) throw Error(ErrorCode::kInvalidInput, "region must be [x0, y0, x1, y1]");
      f.x0 = r[0].get<int>();
      f.y0 = r[1].get<int>();
      f.x1 = r[2].get<int>();
      f.y1 = r[3].get<int>();
      if (sj.contains("color")) f.color = rgb_from_json(sj["color"]);
      const std::string tex = get_or<std::string>(sj, "texture", "noise");
      if (tex == "none") f.texture = TextureKind::kNone;
      else if (tex == "noise") f.texture = TextureKind::kNoise;
      else if (tex == "linear") f.texture = TextureKind::kLinear;
      else throw Error(ErrorCode::kInvalidInput, "unknown texture: " + tex);
      f.amplitude = get_or(sj, "amplitude", f.amplitude);
      f.period = get_or(sj, "period", f.period);
      f.dropout = get_or(sj, "dropout", f.dropout);
      s.surfaces.push_back(f);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("scene: ") + e.what());
  }
  return s;
}

json scene_to_json(const SceneSpec& s) {
  json j;
  j["width"] = s.width;
  j["height"] = s.height;
  j["intrinsics"] = {{"fx", s.intrinsics.fx}, {"fy", s.intrinsics.fy},
                     {"cx", s.intrinsics.cx}, {"cy", s.intrinsics.cy}};
  j["views"] = s.views;
  j["baseline"] = s.baseline;
  j["max_rotation_deg"] = s.max_rotation_deg;
  j["noise_sigma"] = s.noise_sigma;
  j["seed_density"] = s.seed_density;
  j["reproj_min"] = s.reproj_min;
  j["reproj_max"] = s.reproj_max;
  j["position_noise"] = s.position_noise;
  j["seed"] = s.seed;
  j["background"] = {s.background.r, s.background.g, s.background.b};
  j["surfaces"] = json::array();
  for (const auto& f : s.surfaces) {
    j["surfaces"].push_back(
        {{"point", {f.plane.point.x(), f.plane.point.y(), f.plane.point.z()}},
         {"normal", {f.plane.normal.x(), f.plane.normal.y(), f.plane.normal.z()}},
         {"region", {f.x0, f.y0, f.x1, f.y1}},
         {"color", {f.color.r, f.color.g, f.color.b}},
         {"texture", texture_name(f.texture)},
         {"amplitude", f.amplitude},
         {"period", f.period},
         {"dropout", f.dropout}});
  }
  return j;
}

SceneSpec load_scene(const fs::path& path) { return scene_from_json(read_json(path)); }

void save_synthetic(const fs::path& dir, const SyntheticScene& scene) {
  fs::create_directories(dir);
  save_manifest(dir / "manifest.json", scene.dataset);
  write_pfm(dir / "truth.pfm", scene.truth);
  write_png(dir / "truth.png", colorize_depth(scene.truth));
}

json metrics_to_json(const DepthMetrics& m) {
  return {{"mae", m.mae},           {"rmse", m.rmse},           {"within_1pct", m.within_1},
          {"within_5pct", m.within_5}, {"within_10pct", m.within_10}, {"coverage", m.coverage},
          {"count", m.count}};
}

json report_to_json(const RunResult& r, const PipelineConfig& config) {
  json j;
  j["config"] = config_to_json(config);
  j["warnings"] = r.warnings;
  j["intensity_scale"] = r.intensity_scale;
  j["width"] = r.depth.width;
  j["height"] = r.depth.height;
  j["valid_pixels"] = r.depth.valid_count();
  j["segment_count"] = r.segments.size();
  j["patch_count"] = r.total_patches;
  j["cluster_count"] = r.clusters.size();
  const auto& t = r.times;
  j["timing"] = {{"prepare", t.prepare}, {"filter", t.filter}, {"cluster", t.cluster},
                 {"region_grow", t.region_grow}, {"merge", t.merge}, {"graph", t.graph},
                 {"init", t.init}, {"solve", t.solve}, {"render", t.render}, {"total", t.total}};
  j["segments"] = json::array();
  for (const auto& s : r.segments) {
    json sj = {{"id", s.segment_id}, {"pixels", s.pixels}, {"patches", s.patches},
               {"seeds", s.seeds},   {"valid", s.valid}};
    sj["init"] = {{"seeded", s.init.seeded},
                  {"propagated", s.init.propagated},
                  {"swept", s.init.swept},
                  {"sweep_invocations", s.init.sweep_invocations},
                  {"uninitialized", s.init.uninitialized}};
    if (s.solve) sj["solve"] = solve_to_json(*s.solve);
    if (!s.error.empty()) sj["error"] = s.error;
    j["segments"].push_back(sj);
  }
  return j;
}

}  // namespace hoverdepth
