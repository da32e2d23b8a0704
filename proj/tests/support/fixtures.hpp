#pragma once

// Synthetic datasets for tests. Nothing here is used by the engine.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "facex/image.hpp"
#include "facex/interchange.hpp"

namespace facex::testing {

class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "facex");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

struct FaceOptions {
  bool hat = false;
  bool glasses = false;
  bool earrings = false;
  bool necklace = false;
};

/// Cartoon face label map on a size×size grid (size multiple of 8 advised),
/// jittered by up to one layout unit.
[[nodiscard]] RegionLabelMap face_layout(int size, const FaceOptions& options, std::mt19937_64& rng);

/// Flat per-region colors plus noise.
[[nodiscard]] RgbImage face_image(const RegionLabelMap& labels, std::mt19937_64& rng);

struct SyntheticOptions {
  int size = 64;
  std::size_t samples = 50;
  std::string focus_region = "hair";
  std::uint64_t seed = 1;
};

/// Writes images, .f32/.lbl grids and manifest.json into dir with attribution
/// mass concentrated in focus_region. Accessory regions (hat, eye_g, ear_r,
/// neck_l) appear in a subset of samples, the focus region in all of them.
/// Returns the manifest path.
fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticOptions& options);

/// Random grid pair with labels < region_count (values may be zero).
struct RandomPair {
  AttributionMap attribution;
  RegionLabelMap mask;
};
[[nodiscard]] RandomPair random_pair(int height, int width, std::size_t region_count, std::mt19937_64& rng);

/// Writes a manifest whose samples are the given grid pairs, plus flat
/// gray PNGs. Returns the manifest path.
fs::path write_manifest_for(const fs::path& dir, const std::vector<RandomPair>& pairs,
                            const RegionTable& table = RegionTable::face_parsing_default());

/// All regular files below dir with their bytes, keyed by relative path.
[[nodiscard]] std::vector<std::pair<std::string, std::vector<std::byte>>> snapshot(const fs::path& dir);

}  // namespace facex::testing
