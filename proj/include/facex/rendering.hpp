#pragma once

// Face-prototype heatmap (SVG), color scale and the static HTML report.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "facex/aggregation.hpp"
#include "facex/image.hpp"
#include "facex/patches.hpp"

namespace facex {

enum class Normalization { relative, absolute };

[[nodiscard]] std::string_view to_string(Normalization mode) noexcept;
/// Accepts "relative" or "absolute"; throws Errc::invalid_argument.
[[nodiscard]] Normalization parse_normalization(std::string_view text);

/// Blue (low) to red (high) along the HSL hue circle at full saturation and
/// 50% lightness.
struct ColorScale {
  double low_hue = 240.0;
  double high_hue = 0.0;
  Normalization normalization = Normalization::relative;

  [[nodiscard]] Rgb low_color() const;
  [[nodiscard]] Rgb high_color() const;
};

/// HSL(h, 1, 0.5) → 8-bit RGB, channels rounded half away from zero.
[[nodiscard]] Rgb hsl_to_rgb(double hue_degrees, double saturation, double lightness);

/// Hue interpolated linearly from low_hue (v = 0) to high_hue (v = 1).
/// Throws Errc::value_out_of_range for v outside [0,1] or NaN.
[[nodiscard]] Rgb color_of(double v, const ColorScale& scale = {});

/// Per-label display value; std::nullopt marks regions that are not
/// rendered or have no data (N_r = 0).
using DisplayValues = std::vector<std::optional<double>>;

/// relative: (ior − min)/(max − min) over rendered present regions, 0.5 for
/// all when max = min. absolute: the raw IoR. Throws Errc::no_region_present.
[[nodiscard]] DisplayValues normalize_for_display(const IoRSummary& summary, std::span<const Label> rendered,
                                                  Normalization mode = Normalization::relative);

/// Every non-background label of the table.
[[nodiscard]] std::vector<Label> rendered_regions(const RegionTable& table);

struct TemplateShape {
  std::string region;
  std::string path;  // SVG path data
  bool evenodd = false;
};

struct PrototypeTemplate {
  double width = 0;
  double height = 0;
  struct Box {
    double x = 0, y = 0, width = 0, height = 0;
  } legend_box;
  std::vector<TemplateShape> shapes;  // paint order

  /// The face prototype shipped in assets/face_prototype.json.
  static PrototypeTemplate builtin();
  /// Throws Errc::parse, including for duplicate region paths.
  static PrototypeTemplate parse(std::string_view text);

  [[nodiscard]] const TemplateShape* find(std::string_view region) const noexcept;
  /// Throws Errc::template_missing_region naming the first uncovered region.
  void require(const RegionTable& table, std::span<const Label> regions) const;
};

[[nodiscard]] std::string hex_color(Rgb c);

/// Deterministic SVG document: one path per rendered region carrying
/// data-region / data-ior, no-data regions in 20% gray with hatching, and a
/// legend with the raw IoR min/max.
[[nodiscard]] std::string render_heatmap(const IoRSummary& summary, const PrototypeTemplate& prototype,
                                         const ColorScale& scale = {});

struct RegionPatches {
  std::string region;
  std::string manifest_hash;
  int patch_size = 0;
  std::vector<PatchRecord> records;
  std::vector<std::byte> mosaic_png;  // empty when no patch was selected
};

struct ReportInputs {
  IoRSummary summary;
  RegionRanking ranking;
  std::string ranking_manifest_hash;
  std::string heatmap_svg;
  std::vector<RegionPatches> patches;
  std::vector<std::pair<std::string, std::string>> config;
};

/// Self-contained HTML (images inlined as base64). Throws
/// Errc::manifest_mismatch when the inputs stem from different manifests.
[[nodiscard]] std::string render_report(const ReportInputs& inputs);

}  // namespace facex
