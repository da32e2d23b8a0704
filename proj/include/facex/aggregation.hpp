#pragma once

// Intersection over Region (IoR): mean attribution inside each region mask,
// aggregated over a sample set with per-region presence counts.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facex/interchange.hpp"

namespace facex {

struct SampleIoR {
  std::string sample_id;
  /// Indexed by label; engaged exactly for regions with ≥ 1 pixel.
  std::vector<std::optional<double>> values;

  [[nodiscard]] bool present(Label region) const noexcept {
    return region < values.size() && values[region].has_value();
  }
};

/// IoR_{i,r} = Σ_{label(p)=r} G(p) / |{p : label(p)=r}| for every region
/// present in the mask. Accumulation is row-major in double precision.
[[nodiscard]] SampleIoR sample_ior(const AttributionMap& attribution, const RegionLabelMap& mask,
                                   std::size_t region_count, std::string sample_id = {});

struct RegionStat {
  double ior_mean = 0.0;  // meaningful only when count ≥ 1
  std::size_t count = 0;  // N_r

  [[nodiscard]] bool present() const noexcept { return count > 0; }
};

struct IoRSummary {
  std::string class_of_interest;
  std::size_t sample_count = 0;
  RegionTable region_table = RegionTable::face_parsing_default();
  std::vector<RegionStat> per_region;  // indexed by label
  std::string manifest_hash;           // empty when not derived from a manifest
};

/// Ordered reducer. Samples must be added in manifest order; the sums are
/// then bit-identical however the per-sample work was scheduled.
class IoRAccumulator {
 public:
  explicit IoRAccumulator(std::size_t region_count);

  void add(const SampleIoR& sample);

  [[nodiscard]] std::size_t sample_count() const noexcept { return samples_; }
  /// Throws Errc::empty_input when no sample was added.
  [[nodiscard]] IoRSummary finish(const RegionTable& table, std::string class_of_interest,
                                  std::string manifest_hash = {}) const;

 private:
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::size_t samples_ = 0;
};

/// IoR_r = Σ_i IoR_{i,r} / N_r, N_r counting samples where r is present.
[[nodiscard]] IoRSummary aggregate(std::span<const SampleIoR> samples, const RegionTable& table,
                                   std::string class_of_interest);

struct RankedRegion {
  Label region;
  double ior;
  std::size_t count;
};

struct RegionRanking {
  std::vector<RankedRegion> ranked;  // ior descending, ties by label ascending
  std::vector<Label> absent;         // N_r = 0, label ascending
};

/// Throws Errc::no_region_present when nothing can be ranked.
[[nodiscard]] RegionRanking rank_regions(const IoRSummary& summary, bool include_background = false);

// Documents

[[nodiscard]] std::string summary_document(const IoRSummary& summary);
[[nodiscard]] IoRSummary parse_summary_document(std::string_view text);
[[nodiscard]] std::string ranking_document(const IoRSummary& summary, const RegionRanking& ranking,
                                           bool include_background);

}  // namespace facex
