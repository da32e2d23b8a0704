#pragma once

// Bias-detection metrics: where does the region tied to a biased attribute
// land in the IoR ranking?

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facex/aggregation.hpp"
#include "facex/interchange.hpp"

namespace facex {

/// 1-based ranking position; std::nullopt means "unranked" (none of the
/// attribute's regions is present in any sample).
using RankPosition = std::optional<std::size_t>;

class AttributeRegionMapping {
 public:
  /// Blond_Hair→hair, Eyeglasses→eye_g, Smiling→mouth, Wearing_Earrings→ear_r,
  /// Wearing_Lipstick→{u_lip,l_lip}, Wearing_Necklace→neck_l, Wearing_Hat→hat,
  /// Race→skin.
  static AttributeRegionMapping face_attributes_default(const RegionTable& table);

  /// Region names are resolved against the table; throws
  /// Errc::invalid_region for unknown names and Errc::invalid_argument for
  /// empty sets.
  static AttributeRegionMapping from_names(const std::map<std::string, std::vector<std::string>>& names,
                                           const RegionTable& table);

  /// Throws Errc::unmapped_attribute.
  [[nodiscard]] const std::vector<Label>& regions(std::string_view attribute) const;
  [[nodiscard]] bool contains(std::string_view attribute) const;
  [[nodiscard]] const std::map<std::string, std::vector<Label>, std::less<>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::map<std::string, std::vector<Label>, std::less<>> entries_;
};

[[nodiscard]] AttributeRegionMapping parse_mapping_document(std::string_view text, const RegionTable& table);

struct ExperimentSpec {
  std::string target;
  std::vector<std::string> biased_attributes;  // one or two

  /// Throws Errc::invalid_argument / Errc::unmapped_attribute.
  void validate(const AttributeRegionMapping& mapping) const;
};

struct RankingResult {
  std::vector<std::pair<std::string, RankPosition>> per_attribute;  // spec order
  RankPosition rp1;  // best position
  RankPosition rp2;  // worse position; meaningful iff two attributes
  bool tied = false;

  [[nodiscard]] bool two_attributes() const noexcept { return per_attribute.size() == 2; }
  [[nodiscard]] bool any_unranked() const noexcept;
};

/// Position of the best-ranked region among the attribute's regions.
[[nodiscard]] RankPosition ranking_position(std::span<const RankedRegion> ranking, std::string_view attribute,
                                            const AttributeRegionMapping& mapping);

[[nodiscard]] RankingResult evaluate_experiment(const IoRSummary& summary, const ExperimentSpec& spec,
                                                const AttributeRegionMapping& mapping,
                                                bool include_background = false);

/// Exact mean of integer positions.
struct MeanRank {
  std::size_t sum = 0;
  std::size_t count = 0;

  [[nodiscard]] double value() const noexcept { return static_cast<double>(sum) / static_cast<double>(count); }
  /// Rounded half away from zero to 2 decimals, computed in integers.
  [[nodiscard]] std::string two_decimals() const;
};

/// Throws Errc::empty_input, or Errc::unranked_in_mean if any entry is
/// unranked.
[[nodiscard]] MeanRank mean_ranking(std::span<const RankPosition> positions);
[[nodiscard]] MeanRank mean_ranking(std::span<const std::size_t> positions);

struct EvaluatedExperiment {
  ExperimentSpec spec;
  RankingResult result;
};

[[nodiscard]] std::string evaluation_document(std::span<const EvaluatedExperiment> experiments);

}  // namespace facex
