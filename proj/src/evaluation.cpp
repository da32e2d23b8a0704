#include "facex/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "facex/error.hpp"
#include "json.hpp"

namespace facex {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kTieTolerance = 1e-12;

}  // namespace

AttributeRegionMapping AttributeRegionMapping::face_attributes_default(const RegionTable& table) {
  return from_names({{"Blond_Hair", {"hair"}},
                     {"Eyeglasses", {"eye_g"}},
                     {"Smiling", {"mouth"}},
                     {"Wearing_Earrings", {"ear_r"}},
                     {"Wearing_Lipstick", {"u_lip", "l_lip"}},
                     {"Wearing_Necklace", {"neck_l"}},
                     {"Wearing_Hat", {"hat"}},
                     {"Race", {"skin"}}},
                    table);
}

AttributeRegionMapping AttributeRegionMapping::from_names(
    const std::map<std::string, std::vector<std::string>>& names, const RegionTable& table) {
  AttributeRegionMapping mapping;
  for (const auto& [attribute, regions] : names) {
    if (regions.empty()) {
      throw Error(Errc::invalid_argument, "attribute '" + attribute + "' maps to no region");
    }
    std::vector<Label> labels;
    for (const auto& region : regions) {
      auto id = table.find(region);
      if (!id) {
        throw Error(Errc::invalid_region,
                    "attribute '" + attribute + "' maps to region '" + region + "' which is not in the region table");
      }
      labels.push_back(*id);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    mapping.entries_.emplace(attribute, std::move(labels));
  }
  return mapping;
}

const std::vector<Label>& AttributeRegionMapping::regions(std::string_view attribute) const {
  auto it = entries_.find(attribute);
  if (it == entries_.end()) {
    throw Error(Errc::unmapped_attribute, "attribute '" + std::string(attribute) + "' has no region mapping");
  }
  return it->second;
}

bool AttributeRegionMapping::contains(std::string_view attribute) const { return entries_.find(attribute) != entries_.end(); }

AttributeRegionMapping parse_mapping_document(std::string_view text, const RegionTable& table) {
  try {
    auto doc = ordered_json::parse(text);
    if (doc.contains("mapping")) doc = doc.at("mapping");
    std::map<std::string, std::vector<std::string>> names;
    for (const auto& [attribute, value] : doc.items()) {
      if (value.is_string()) {
        names[attribute] = {value.get<std::string>()};
      } else {
        names[attribute] = value.get<std::vector<std::string>>();
      }
    }
    return AttributeRegionMapping::from_names(names, table);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("mapping: ") + e.what());
  }
}

void ExperimentSpec::validate(const AttributeRegionMapping& mapping) const {
  if (biased_attributes.empty() || biased_attributes.size() > 2) {
    throw Error(Errc::invalid_argument, "experiment '" + target + "' needs one or two biased attributes, got " +
                                            std::to_string(biased_attributes.size()));
  }
  for (const auto& a : biased_attributes) (void)mapping.regions(a);
}

bool RankingResult::any_unranked() const noexcept {
  return std::any_of(per_attribute.begin(), per_attribute.end(), [](const auto& p) { return !p.second; });
}

RankPosition ranking_position(std::span<const RankedRegion> ranking, std::string_view attribute,
                              const AttributeRegionMapping& mapping) {
  const auto& regions = mapping.regions(attribute);
  if (ranking.empty()) throw Error(Errc::empty_input, "empty ranking");
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (std::find(regions.begin(), regions.end(), ranking[i].region) != regions.end()) return i + 1;
  }
  return std::nullopt;
}

RankingResult evaluate_experiment(const IoRSummary& summary, const ExperimentSpec& spec,
                                  const AttributeRegionMapping& mapping, bool include_background) {
  spec.validate(mapping);
  const auto ranking = rank_regions(summary, include_background);
  const auto& ranked = ranking.ranked;

  auto tie_at = [&](std::size_t position) {
    const std::size_t i = position - 1;
    const double v = ranked[i].ior;
    if (i > 0 && std::abs(ranked[i - 1].ior - v) <= kTieTolerance) return true;
    if (i + 1 < ranked.size() && std::abs(ranked[i + 1].ior - v) <= kTieTolerance) return true;
    return false;
  };

  RankingResult result;
  std::vector<std::size_t> positions;
  for (const auto& attribute : spec.biased_attributes) {
    const auto p = ranking_position(ranked, attribute, mapping);
    result.per_attribute.emplace_back(attribute, p);
    if (p) {
      positions.push_back(*p);
      result.tied = result.tied || tie_at(*p);
    }
  }
  std::sort(positions.begin(), positions.end());
  if (!positions.empty()) result.rp1 = positions.front();
  if (spec.biased_attributes.size() == 2 && positions.size() == 2) result.rp2 = positions.back();
  return result;
}

std::string MeanRank::two_decimals() const {
  // round(sum / count, 2) half away from zero, all in integers.
  const std::size_t hundredths = (200 * sum + count) / (2 * count);
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(hundredths / 100) + "." + frac;
}

MeanRank mean_ranking(std::span<const RankPosition> positions) {
  if (positions.empty()) throw Error(Errc::empty_input, "mean of an empty ranking list");
  MeanRank mean;
  for (const auto& p : positions) {
    if (!p) throw Error(Errc::unranked_in_mean, "unranked entry in mean; filter and report it separately");
    mean.sum += *p;
    ++mean.count;
  }
  return mean;
}

MeanRank mean_ranking(std::span<const std::size_t> positions) {
  if (positions.empty()) throw Error(Errc::empty_input, "mean of an empty ranking list");
  MeanRank mean;
  for (auto p : positions) mean.sum += p;
  mean.count = positions.size();
  return mean;
}

std::string evaluation_document(std::span<const EvaluatedExperiment> experiments) {
  auto position_json = [](const RankPosition& p) -> ordered_json {
    return p ? ordered_json(*p) : ordered_json("unranked");
  };
  ordered_json doc;
  auto list = ordered_json::array();
  std::vector<std::size_t> rp1s;
  std::vector<std::size_t> rp2s;
  std::size_t unranked = 0;
  for (const auto& e : experiments) {
    ordered_json node;
    node["target"] = e.spec.target;
    node["attributes"] = e.spec.biased_attributes;
    ordered_json rp = ordered_json::object();
    for (const auto& [attribute, p] : e.result.per_attribute) rp[attribute] = position_json(p);
    node["rp"] = std::move(rp);
    node["rp1"] = position_json(e.result.rp1);
    node["rp2"] = e.result.two_attributes() ? position_json(e.result.rp2) : ordered_json(nullptr);
    node["tied"] = e.result.tied;
    list.push_back(std::move(node));

    if (e.result.any_unranked()) ++unranked;
    if (e.result.rp1) rp1s.push_back(*e.result.rp1);
    if (e.result.two_attributes() && e.result.rp2) rp2s.push_back(*e.result.rp2);
  }
  doc["experiments"] = std::move(list);
  doc["mean_rp1"] = rp1s.empty() ? ordered_json(nullptr) : ordered_json(mean_ranking(rp1s).value());
  doc["mean_rp2"] = rp2s.empty() ? ordered_json(nullptr) : ordered_json(mean_ranking(rp2s).value());
  doc["unranked_experiments"] = unranked;
  return doc.dump(2) + "\n";
}

}  // namespace facex
