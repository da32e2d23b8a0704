#include "facex/aggregation.hpp"

#include <algorithm>

#include "facex/error.hpp"
#include "facex/util.hpp"
#include "json.hpp"

namespace facex {

using ordered_json = nlohmann::ordered_json;

SampleIoR sample_ior(const AttributionMap& attribution, const RegionLabelMap& mask, std::size_t region_count,
                     std::string sample_id) {
  if (attribution.height != mask.height || attribution.width != mask.width) {
    throw Error(Errc::dimension_mismatch,
                "attribution is " + std::to_string(attribution.height) + "x" + std::to_string(attribution.width) +
                    " but mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width));
  }
  std::vector<double> sums(region_count, 0.0);
  std::vector<std::size_t> pixels(region_count, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const Label r = mask.values[i];
    if (r >= region_count) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(r) + " exceeds region count " +
                                                std::to_string(region_count));
    }
    sums[r] += static_cast<double>(attribution.values[i]);
    ++pixels[r];
  }
  SampleIoR out{std::move(sample_id), std::vector<std::optional<double>>(region_count)};
  for (std::size_t r = 0; r < region_count; ++r) {
    if (pixels[r] > 0) out.values[r] = sums[r] / static_cast<double>(pixels[r]);
  }
  return out;
}

IoRAccumulator::IoRAccumulator(std::size_t region_count)
    : sums_(region_count, 0.0), counts_(region_count, 0) {}

void IoRAccumulator::add(const SampleIoR& sample) {
  const std::size_t n = std::min(sums_.size(), sample.values.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (sample.values[r]) {
      sums_[r] += *sample.values[r];
      ++counts_[r];
    }
  }
  ++samples_;
}

IoRSummary IoRAccumulator::finish(const RegionTable& table, std::string class_of_interest,
                                  std::string manifest_hash) const {
  if (samples_ == 0) throw Error(Errc::empty_input, "no samples to aggregate");
  IoRSummary summary;
  summary.class_of_interest = std::move(class_of_interest);
  summary.sample_count = samples_;
  summary.region_table = table;
  summary.manifest_hash = std::move(manifest_hash);
  summary.per_region.resize(table.size());
  for (std::size_t r = 0; r < table.size() && r < sums_.size(); ++r) {
    if (counts_[r] > 0) {
      summary.per_region[r] = {sums_[r] / static_cast<double>(counts_[r]), counts_[r]};
    }
  }
  return summary;
}

IoRSummary aggregate(std::span<const SampleIoR> samples, const RegionTable& table,
                     std::string class_of_interest) {
  IoRAccumulator acc(table.size());
  for (const auto& s : samples) acc.add(s);
  return acc.finish(table, std::move(class_of_interest));
}

RegionRanking rank_regions(const IoRSummary& summary, bool include_background) {
  RegionRanking out;
  for (std::size_t r = 0; r < summary.per_region.size(); ++r) {
    if (r == 0 && !include_background) continue;
    const auto& stat = summary.per_region[r];
    const auto label = static_cast<Label>(r);
    if (stat.present()) {
      out.ranked.push_back({label, stat.ior_mean, stat.count});
    } else {
      out.absent.push_back(label);
    }
  }
  if (out.ranked.empty()) throw Error(Errc::no_region_present, "no region is present in any sample");
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const RankedRegion& a, const RankedRegion& b) {
    return a.ior != b.ior ? a.ior > b.ior : a.region < b.region;
  });
  return out;
}

std::string summary_document(const IoRSummary& summary) {
  ordered_json doc;
  doc["class_of_interest"] = summary.class_of_interest;
  doc["sample_count"] = summary.sample_count;
  auto regions = ordered_json::array();
  auto absent = ordered_json::array();
  for (std::size_t r = 0; r < summary.per_region.size(); ++r) {
    const auto& name = summary.region_table.name(static_cast<Label>(r));
    const auto& stat = summary.per_region[r];
    if (stat.present()) {
      regions.push_back({{"id", r}, {"name", name}, {"ior", round_sig9(stat.ior_mean)}, {"count", stat.count}});
    } else {
      absent.push_back({{"id", r}, {"name", name}});
    }
  }
  doc["regions"] = std::move(regions);
  doc["absent_regions"] = std::move(absent);
  doc["manifest_hash"] = summary.manifest_hash;
  return doc.dump(2) + "\n";
}

IoRSummary parse_summary_document(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
    IoRSummary summary;
    summary.class_of_interest = doc.at("class_of_interest").get<std::string>();
    summary.sample_count = doc.at("sample_count").get<std::size_t>();
    summary.manifest_hash = doc.value("manifest_hash", std::string{});

    struct Row {
      std::size_t id;
      std::string name;
      RegionStat stat;
    };
    std::vector<Row> rows;
    for (const auto& node : doc.at("regions")) {
      rows.push_back({node.at("id").get<std::size_t>(), node.at("name").get<std::string>(),
                      {node.at("ior").get<double>(), node.at("count").get<std::size_t>()}});
    }
    for (const auto& node : doc.at("absent_regions")) {
      rows.push_back({node.at("id").get<std::size_t>(), node.at("name").get<std::string>(), {}});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
    std::vector<std::string> names;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].id != i) throw Error(Errc::parse, "summary: region ids are not contiguous from 0");
      if (rows[i].stat.present() && (rows[i].stat.ior_mean < 0.0 || rows[i].stat.ior_mean > 1.0)) {
        throw Error(Errc::parse, "summary: ior of '" + rows[i].name + "' outside [0,1]");
      }
      names.push_back(rows[i].name);
      summary.per_region.push_back(rows[i].stat);
    }
    summary.region_table = RegionTable(std::move(names));
    return summary;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("summary: ") + e.what());
  }
}

std::string ranking_document(const IoRSummary& summary, const RegionRanking& ranking, bool include_background) {
  ordered_json doc;
  doc["class_of_interest"] = summary.class_of_interest;
  doc["sample_count"] = summary.sample_count;
  doc["include_background"] = include_background;
  auto ranked = ordered_json::array();
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
    const auto& e = ranking.ranked[i];
    ranked.push_back({{"position", i + 1},
                      {"id", e.region},
                      {"name", summary.region_table.name(e.region)},
                      {"ior", round_sig9(e.ior)},
                      {"count", e.count}});
  }
  doc["ranking"] = std::move(ranked);
  auto absent = ordered_json::array();
  for (Label r : ranking.absent) absent.push_back({{"id", r}, {"name", summary.region_table.name(r)}});
  doc["absent_regions"] = std::move(absent);
  doc["manifest_hash"] = summary.manifest_hash;
  return doc.dump(2) + "\n";
}

}  // namespace facex
