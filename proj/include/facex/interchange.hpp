#pragma once

// On-disk data model shared with the model-side extractor.
//
// A manifest (JSON text) lists samples; each sample points at a raw
// little-endian float32 attribution grid (.f32), a raw uint8 region label
// grid (.lbl) and a source PNG. Grid dimensions live in the manifest only.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace facex {

namespace fs = std::filesystem;

using Label = std::uint8_t;

inline constexpr int kManifestFormatVersion = 1;

/// Ordered label → region name table. Label 0 is always "background".
class RegionTable {
 public:
  /// The 19-label face parsing protocol (18 face regions + background).
  static RegionTable face_parsing_default();

  /// Names are indexed by label id. Throws Errc::parse when the table is
  /// empty, larger than 256 entries, has duplicate/empty names or does not
  /// start with "background".
  explicit RegionTable(std::vector<std::string> names);

  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] const std::string& name(Label id) const;
  [[nodiscard]] std::optional<Label> find(std::string_view name) const noexcept;
  /// Like find() but throws Errc::invalid_region for unknown names.
  [[nodiscard]] Label at(std::string_view name) const;
  [[nodiscard]] std::span<const std::string> names() const noexcept { return names_; }

  friend bool operator==(const RegionTable&, const RegionTable&) = default;

 private:
  std::vector<std::string> names_;
};

struct SampleRecord {
  std::string id;
  // Paths are kept as written in the manifest; relative paths resolve
  // against the manifest's directory.
  std::string image_path;
  std::string attribution_path;
  std::string mask_path;
  std::map<std::string, int> attributes;
  std::optional<int> label;
  std::optional<int> prediction;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
  int format_version = kManifestFormatVersion;
  int height = 0;
  int width = 0;
  RegionTable region_table = RegionTable::face_parsing_default();
  std::vector<SampleRecord> samples;
  /// Directory used to resolve relative sample paths. Not serialized.
  fs::path base_dir;

  [[nodiscard]] fs::path resolve(const std::string& path) const;
  [[nodiscard]] std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
};

/// Dense row-major H×W grid.
template <class T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  [[nodiscard]] T& operator()(int row, int col) {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
  }
  [[nodiscard]] const T& operator()(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
  }
  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

/// Normalized attribution values in [0,1].
using AttributionMap = Grid<float>;
/// One region label per pixel; binary region masks are (labels == r).
using RegionLabelMap = Grid<Label>;

// Manifest document

[[nodiscard]] Manifest parse_manifest(std::string_view text, fs::path base_dir = {});
[[nodiscard]] Manifest read_manifest(const fs::path& path);
/// Canonical document form (2-space indented JSON, fixed field order).
[[nodiscard]] std::string manifest_document(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const fs::path& path);
/// Hex SHA-256 of the canonical document; identifies the sample set in
/// every derived artifact.
[[nodiscard]] std::string manifest_hash(const Manifest& manifest);

// Grids

[[nodiscard]] AttributionMap decode_attribution(std::span<const std::byte> bytes, int height, int width);
[[nodiscard]] RegionLabelMap decode_mask(std::span<const std::byte> bytes, int height, int width,
                                         const RegionTable& table);
[[nodiscard]] std::vector<std::byte> encode_attribution(const AttributionMap& map);
[[nodiscard]] std::vector<std::byte> encode_mask(const RegionLabelMap& map);

[[nodiscard]] AttributionMap load_attribution(const SampleRecord& record, const Manifest& manifest);
[[nodiscard]] RegionLabelMap load_mask(const SampleRecord& record, const Manifest& manifest);
void write_attribution(const AttributionMap& map, const fs::path& path);
void write_mask(const RegionLabelMap& map, const fs::path& path);

[[nodiscard]] std::vector<std::byte> read_file_bytes(const fs::path& path);
void write_file_bytes(const fs::path& path, std::span<const std::byte> bytes);
void write_text_file(const fs::path& path, std::string_view text);
[[nodiscard]] std::string read_text_file(const fs::path& path);

// Balanced subsets

/// Draw key for a sample: counter-based hash of (seed, id), independent of
/// iteration order.
[[nodiscard]] std::uint64_t sample_draw_key(std::uint64_t seed, std::string_view sample_id) noexcept;

/// Keeps n samples from each (target, attribute) ∈ {0,1}² cell, n being the
/// smallest cell size. Within a cell the n samples with the smallest draw
/// keys are kept; output preserves manifest order.
[[nodiscard]] Manifest balance_subset(const Manifest& manifest, std::string_view target,
                                      std::string_view attribute, std::uint64_t seed);

}  // namespace facex
