#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>

#include <unistd.h>

namespace facex::testing {

TempDir::TempDir(std::string_view prefix) {
  static std::atomic<unsigned> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() / (std::string(prefix) + "-" + std::to_string(::getpid()) + "-" +
                                       std::to_string(stamp) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

namespace {

void fill(RegionLabelMap& m, double unit, int dy, int dx, int y0, int y1, int x0, int x1, Label label) {
  const int r0 = std::clamp(static_cast<int>((y0 + dy) * unit), 0, m.height);
  const int r1 = std::clamp(static_cast<int>((y1 + dy) * unit), 0, m.height);
  const int c0 = std::clamp(static_cast<int>((x0 + dx) * unit), 0, m.width);
  const int c1 = std::clamp(static_cast<int>((x1 + dx) * unit), 0, m.width);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) m(r, c) = label;
  }
}

}  // namespace

RegionLabelMap face_layout(int size, const FaceOptions& options, std::mt19937_64& rng) {
  const auto table = RegionTable::face_parsing_default();
  auto L = [&](std::string_view name) { return table.at(name); };
  RegionLabelMap m(size, size, 0);
  const double unit = size / 64.0;
  std::uniform_int_distribution<int> jitter(-1, 1);
  const int dy = jitter(rng);
  const int dx = jitter(rng);
  auto rect = [&](int y0, int y1, int x0, int x1, std::string_view name) { fill(m, unit, dy, dx, y0, y1, x0, x1, L(name)); };

  rect(54, 64, 6, 58, "cloth");
  rect(42, 55, 24, 40, "neck");
  if (options.necklace) rect(49, 51, 24, 40, "neck_l");
  rect(6, 40, 12, 52, "hair");
  if (options.hat) rect(1, 8, 14, 50, "hat");
  rect(22, 32, 10, 13, "r_ear");
  rect(22, 32, 51, 54, "l_ear");
  if (options.earrings) {
    rect(32, 35, 10, 13, "ear_r");
    rect(32, 35, 51, 54, "ear_r");
  }
  rect(14, 45, 16, 48, "skin");
  rect(19, 21, 20, 28, "r_brow");
  rect(19, 21, 36, 44, "l_brow");
  if (options.glasses) {
    rect(21, 27, 19, 30, "eye_g");
    rect(21, 27, 34, 45, "eye_g");
  }
  rect(23, 25, 21, 27, "r_eye");
  rect(23, 25, 37, 43, "l_eye");
  rect(26, 33, 29, 35, "nose");
  rect(35, 37, 25, 39, "u_lip");
  rect(37, 38, 26, 38, "mouth");
  rect(38, 40, 25, 39, "l_lip");
  return m;
}

RgbImage face_image(const RegionLabelMap& labels, std::mt19937_64& rng) {
  static const Rgb kPalette[] = {{235, 235, 240}, {224, 180, 150}, {90, 60, 40},   {90, 60, 40},  {40, 40, 60},
                                 {40, 40, 60},    {20, 20, 20},    {210, 160, 130}, {210, 160, 130}, {250, 210, 40},
                                 {215, 165, 135}, {120, 30, 40},   {190, 70, 80},  {190, 70, 80}, {215, 170, 140},
                                 {240, 240, 220}, {40, 70, 140},   {230, 200, 90}, {150, 30, 30}};
  std::uniform_int_distribution<int> noise(-12, 12);
  RgbImage image(labels.width, labels.height);
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      const Rgb base = kPalette[labels(r, c) % std::size(kPalette)];
      auto jitter = [&](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0, 255)); };
      image.set(r, c, {jitter(base.r), jitter(base.g), jitter(base.b)});
    }
  }
  return image;
}

fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticOptions& options) {
  fs::create_directories(dir / "data");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  const auto table = RegionTable::face_parsing_default();
  const Label focus = table.at(options.focus_region);

  Manifest manifest;
  manifest.height = options.size;
  manifest.width = options.size;
  for (std::size_t i = 0; i < options.samples; ++i) {
    FaceOptions face{i % 3 == 0, i % 4 == 1, i % 5 == 2, i % 2 == 0};
    // The focus region is always present.
    if (options.focus_region == "hat") face.hat = true;
    if (options.focus_region == "eye_g") face.glasses = true;
    if (options.focus_region == "ear_r") face.earrings = true;
    if (options.focus_region == "neck_l") face.necklace = true;
    const auto labels = face_layout(options.size, face, rng);
    AttributionMap attribution(options.size, options.size);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      attribution.values[p] = labels.values[p] == focus ? 0.7f + 0.3f * unit(rng) : 0.2f * unit(rng);
    }
    const std::string id = "s" + std::to_string(1000 + i);
    write_attribution(attribution, dir / "data" / (id + ".f32"));
    write_mask(labels, dir / "data" / (id + ".lbl"));
    write_png(face_image(labels, rng), dir / "data" / (id + ".png"));
    SampleRecord record{id, "data/" + id + ".png", "data/" + id + ".f32", "data/" + id + ".lbl",
                        {{"Target", static_cast<int>(i % 2)}, {"Attr", static_cast<int>((i / 2) % 2)}},
                        static_cast<int>(i % 2), std::nullopt};
    manifest.samples.push_back(std::move(record));
  }
  const auto path = dir / "manifest.json";
  write_manifest(manifest, path);
  return path;
}

RandomPair random_pair(int height, int width, std::size_t region_count, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> value(0.0f, 1.0f);
  std::uniform_int_distribution<int> label(0, static_cast<int>(region_count) - 1);
  std::bernoulli_distribution zero(0.1);
  RandomPair pair{AttributionMap(height, width), RegionLabelMap(height, width)};
  for (std::size_t i = 0; i < pair.mask.size(); ++i) {
    pair.attribution.values[i] = zero(rng) ? 0.0f : value(rng);
    pair.mask.values[i] = static_cast<Label>(label(rng));
  }
  return pair;
}

fs::path write_manifest_for(const fs::path& dir, const std::vector<RandomPair>& pairs, const RegionTable& table) {
  fs::create_directories(dir);
  Manifest manifest;
  manifest.region_table = table;
  manifest.height = pairs.empty() ? 4 : pairs.front().mask.height;
  manifest.width = pairs.empty() ? 4 : pairs.front().mask.width;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string id = "p" + std::to_string(i);
    write_attribution(pairs[i].attribution, dir / (id + ".f32"));
    write_mask(pairs[i].mask, dir / (id + ".lbl"));
    write_png(RgbImage(manifest.width, manifest.height, {128, 128, 128}), dir / (id + ".png"));
    manifest.samples.push_back({id, id + ".png", id + ".f32", id + ".lbl", {}, std::nullopt, std::nullopt});
  }
  const auto path = dir / "manifest.json";
  write_manifest(manifest, path);
  return path;
}

std::vector<std::pair<std::string, std::vector<std::byte>>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::vector<std::byte>>> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files.emplace_back(entry.path().lexically_relative(dir).generic_string(), read_file_bytes(entry.path()));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace facex::testing
