#include "facex/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>

#include "facex/evaluation.hpp"
#include "facex/parallel.hpp"
#include "facex/util.hpp"
#include "json.hpp"

namespace facex {

using ordered_json = nlohmann::ordered_json;

int exit_status_for(Errc code) noexcept {
  switch (code) {
    case Errc::parse:
    case Errc::unsupported_version:
    case Errc::invalid_dimensions:
    case Errc::invalid_argument:
    case Errc::invalid_patch_size:
      return kExitUsageError;
    case Errc::io:
    case Errc::duplicate_id:
    case Errc::size_mismatch:
    case Errc::non_finite:
    case Errc::value_out_of_range:
    case Errc::label_out_of_range:
    case Errc::missing_attribute:
    case Errc::empty_cell:
    case Errc::dimension_mismatch:
    case Errc::empty_input:
    case Errc::no_region_present:
    case Errc::invalid_region:
    case Errc::unmapped_attribute:
    case Errc::unranked_in_mean:
    case Errc::missing_image:
    case Errc::image_decode:
    case Errc::template_missing_region:
    case Errc::manifest_mismatch:
      return kExitValidationFailure;
  }
  return kExitInternalError;
}

void RunConfig::validate() const {
  if (top_k < 1) throw Error(Errc::invalid_argument, "--top-k must be at least 1");
  if (workers < 1) throw Error(Errc::invalid_argument, "--workers must be at least 1");
  if (patch_size < 0) throw Error(Errc::invalid_argument, "--patch-size must be at least 1");
}

namespace {

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(Errc::invalid_argument, std::string(flag) + " is required");
}

Manifest load_manifest(const RunConfig& config) {
  require_path(config.manifest_path, "--manifest");
  return read_manifest(config.manifest_path);
}

PrototypeTemplate load_template(const RunConfig& config) {
  return config.template_path.empty() ? PrototypeTemplate::builtin()
                                      : PrototypeTemplate::parse(read_text_file(config.template_path));
}

void print_ranking(std::ostream& out, const IoRSummary& summary, const RegionRanking& ranking) {
  out << "class: " << summary.class_of_interest << "  samples: " << summary.sample_count << '\n';
  out << std::left << std::setw(6) << "rank" << std::setw(10) << "region" << std::setw(14) << "IoR" << "N\n";
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
    const auto& e = ranking.ranked[i];
    out << std::left << std::setw(6) << i + 1 << std::setw(10) << summary.region_table.name(e.region)
        << std::setw(14) << format_number(e.ior) << e.count << '\n';
  }
  if (!ranking.absent.empty()) {
    out << "absent:";
    for (Label r : ranking.absent) out << ' ' << summary.region_table.name(r);
    out << '\n';
  }
  out << std::right;
}

void write_summary_files(const fs::path& dir, const IoRSummary& summary, const RegionRanking& ranking,
                         bool include_background) {
  write_text_file(dir / "summary.json", summary_document(summary));
  write_text_file(dir / "ranking.json", ranking_document(summary, ranking, include_background));
}

/// Writes patches/<region>.json and mosaics/<region>.png; returns the
/// report sections in request order.
std::vector<RegionPatches> write_patch_files(const fs::path& dir, const Manifest& manifest,
                                             std::span<const TopKSet> sets, const std::string& hash,
                                             std::ostream& err) {
  fs::create_directories(dir / "patches");
  std::vector<RegionPatches> sections;
  for (const auto& set : sets) {
    const auto& name = manifest.region_table.name(set.region);
    write_text_file(dir / "patches" / (name + ".json"), patch_report_document(set, manifest.region_table, hash));
    RegionPatches section{name, hash, set.patch_size, set.records, {}};
    if (set.records.empty()) {
      err << "warning: region '" << name << "' has no patch with positive score\n";
    } else {
      std::vector<RgbImage> tiles;
      tiles.reserve(set.records.size());
      std::map<std::size_t, RgbImage> cache;
      for (const auto& record : set.records) {
        auto it = cache.find(record.sample_index);
        if (it == cache.end()) it = cache.emplace(record.sample_index, load_source_image(record, manifest)).first;
        const auto& b = record.bbox;
        tiles.push_back(it->second.crop(b.row, b.col, b.height, b.width));
      }
      section.mosaic_png = encode_png(compose_mosaic(tiles));
      fs::create_directories(dir / "mosaics");
      write_file_bytes(dir / "mosaics" / (name + ".png"), section.mosaic_png);
    }
    sections.push_back(std::move(section));
  }
  return sections;
}

std::vector<std::pair<std::string, std::string>> run_settings(const RunConfig& config, int patch_size) {
  return {{"class_of_interest", config.class_of_interest},
          {"patch_size", std::to_string(patch_size)},
          {"top_k", std::to_string(config.top_k)},
          {"per_sample_cap", std::to_string(config.per_sample_cap)},
          {"include_background", config.include_background ? "true" : "false"},
          {"norm", std::string(to_string(config.normalization))},
          {"seed", std::to_string(config.seed)}};
}

std::string settings_document(const RunConfig& config, int patch_size, const std::string& hash) {
  ordered_json doc;
  doc["manifest_hash"] = hash;
  doc["class_of_interest"] = config.class_of_interest;
  doc["patch_size"] = patch_size;
  doc["top_k"] = config.top_k;
  doc["per_sample_cap"] = config.per_sample_cap;
  doc["include_background"] = config.include_background;
  doc["norm"] = std::string(to_string(config.normalization));
  doc["seed"] = config.seed;
  return doc.dump(2) + "\n";
}

std::vector<Label> patch_regions_for(const RunConfig& config, const RegionTable& table) {
  if (config.regions.empty()) return analysis_regions(table, config.include_background);
  std::vector<Label> out;
  for (const auto& name : config.regions) out.push_back(table.at(name));
  return out;
}

int resolved_patch_size(const RunConfig& config, const Manifest& manifest) {
  return config.patch_size > 0 ? config.patch_size : default_patch_size(manifest.height);
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_status_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << '\n';
    return kExitValidationFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
}

}  // namespace

std::vector<Label> analysis_regions(const RegionTable& table, bool include_background) {
  std::vector<Label> out;
  for (std::size_t r = include_background ? 0 : 1; r < table.size(); ++r) out.push_back(static_cast<Label>(r));
  return out;
}

std::vector<Finding> validate_manifest(const Manifest& manifest, std::size_t workers) {
  std::vector<Finding> findings;
  ordered_parallel_for(
      manifest.samples.size(), workers,
      [&](std::size_t i) {
        const auto& s = manifest.samples[i];
        std::vector<Finding> local;
        auto check = [&](auto&& fn) {
          try {
            fn();
          } catch (const Error& e) {
            local.push_back({s.id, std::string(to_string(e.code())), e.what()});
          }
        };
        check([&] { (void)load_attribution(s, manifest); });
        check([&] { (void)load_mask(s, manifest); });
        check([&] {
          const auto [w, h] = png_dimensions(manifest.resolve(s.image_path));
          if (w != manifest.width || h != manifest.height) {
            throw Error(Errc::dimension_mismatch, "sample '" + s.id + "': image is " + std::to_string(h) + "x" +
                                                      std::to_string(w) + " but manifest is " +
                                                      std::to_string(manifest.height) + "x" +
                                                      std::to_string(manifest.width));
          }
        });
        return local;
      },
      [&](std::size_t, std::vector<Finding> local) {
        findings.insert(findings.end(), std::make_move_iterator(local.begin()), std::make_move_iterator(local.end()));
      });
  return findings;
}

std::string findings_document(const std::vector<Finding>& findings) {
  ordered_json doc;
  doc["clean"] = findings.empty();
  auto list = ordered_json::array();
  for (const auto& f : findings) list.push_back({{"sample_id", f.sample_id}, {"kind", f.kind}, {"message", f.message}});
  doc["findings"] = std::move(list);
  return doc.dump(2) + "\n";
}

Analysis analyze(const Manifest& manifest, const RunConfig& config, std::span<const Label> patch_regions) {
  config.validate();
  if (manifest.samples.empty()) throw Error(Errc::empty_input, "manifest has no samples");
  const std::size_t region_count = manifest.region_table.size();
  const bool with_patches = !patch_regions.empty();
  std::optional<PatchGrid> grid;
  if (with_patches) grid.emplace(manifest.height, manifest.width, resolved_patch_size(config, manifest));
  const std::size_t local_k =
      config.per_sample_cap > 0 ? std::min(config.per_sample_cap, config.top_k) : config.top_k;

  struct PerSample {
    SampleIoR ior;
    std::vector<TopKQueue> best;
  };

  IoRAccumulator acc(region_count);
  std::vector<TopKQueue> global(patch_regions.size(), TopKQueue(config.top_k));
  ordered_parallel_for(
      manifest.samples.size(), config.workers,
      [&](std::size_t i) {
        const auto& record = manifest.samples[i];
        const auto attribution = load_attribution(record, manifest);
        const auto mask = load_mask(record, manifest);
        PerSample result{sample_ior(attribution, mask, region_count, record.id), {}};
        if (with_patches) {
          const auto scores = score_all_patches(attribution, mask, *grid, region_count);
          result.best.assign(patch_regions.size(), TopKQueue(local_k));
          for (std::size_t j = 0; j < patch_regions.size(); ++j) {
            for (int q = 0; q < grid->count(); ++q) {
              result.best[j].offer({scores[static_cast<std::size_t>(q) * region_count + patch_regions[j]], i, q});
            }
          }
        }
        return result;
      },
      [&](std::size_t, PerSample result) {
        acc.add(result.ior);
        for (std::size_t j = 0; j < result.best.size(); ++j) global[j].merge(result.best[j]);
      });

  Analysis analysis{acc.finish(manifest.region_table, config.class_of_interest, manifest_hash(manifest)), {}};
  for (std::size_t j = 0; j < patch_regions.size(); ++j) {
    analysis.topk.push_back(
        make_topk_set(manifest, *grid, patch_regions[j], config.top_k, global[j].sorted()));
  }
  return analysis;
}

// Commands

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    Manifest manifest;
    try {
      manifest = load_manifest(config);
    } catch (const Error& e) {
      err << "error [" << to_string(e.code()) << "]: cannot read manifest: " << e.what() << '\n';
      return kExitUsageError;
    }
    const auto findings = validate_manifest(manifest, config.workers);
    const auto doc = findings_document(findings);
    out << doc;
    if (!config.output_dir.empty()) {
      fs::create_directories(config.output_dir);
      write_text_file(config.output_dir / "validation.json", doc);
    }
    return findings.empty() ? kExitOk : kExitValidationFailure;
  });
}

int cmd_subset(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.output_dir, "--out");
    if (config.target.empty() || config.attribute.empty()) {
      throw Error(Errc::invalid_argument, "--target and --attribute are required");
    }
    const auto manifest = load_manifest(config);
    auto subset = balance_subset(manifest, config.target, config.attribute, config.seed);

    fs::create_directories(config.output_dir);
    const auto out_dir = fs::absolute(config.output_dir).lexically_normal();
    for (auto& s : subset.samples) {
      for (auto* p : {&s.image_path, &s.attribution_path, &s.mask_path}) {
        *p = fs::absolute(manifest.resolve(*p)).lexically_normal().lexically_relative(out_dir).generic_string();
      }
    }
    write_manifest(subset, config.output_dir / "manifest.json");
    out << "kept " << subset.samples.size() << " of " << manifest.samples.size() << " samples ("
        << subset.samples.size() / 4 << " per cell)\n";
    return kExitOk;
  });
}

int cmd_aggregate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.output_dir, "--out");
    const auto manifest = load_manifest(config);
    const auto analysis = analyze(manifest, config, {});
    const auto ranking = rank_regions(analysis.summary, config.include_background);
    fs::create_directories(config.output_dir);
    write_summary_files(config.output_dir, analysis.summary, ranking, config.include_background);
    print_ranking(out, analysis.summary, ranking);
    return kExitOk;
  });
}

int cmd_patches(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.output_dir, "--out");
    config.validate();
    const auto manifest = load_manifest(config);
    const auto regions = patch_regions_for(config, manifest.region_table);
    TopKOptions options{resolved_patch_size(config, manifest), config.top_k, config.per_sample_cap, config.workers};
    const auto sets = topk_patches(manifest, regions, options);
    fs::create_directories(config.output_dir);
    write_patch_files(config.output_dir, manifest, sets, manifest_hash(manifest), err);
    for (const auto& set : sets) {
      out << manifest.region_table.name(set.region) << ": " << set.records.size() << " patches";
      if (!set.records.empty()) out << ", best " << format_number(set.records.front().score);
      out << '\n';
    }
    return kExitOk;
  });
}

namespace {

struct ExperimentEntry {
  ExperimentSpec spec;
  fs::path summary_path;
};

struct ExperimentFile {
  std::vector<ExperimentEntry> experiments;
  std::optional<std::string> mapping_text;
};

ExperimentFile read_experiment_file(const fs::path& path) {
  try {
    const auto doc = ordered_json::parse(read_text_file(path));
    ExperimentFile file;
    auto parse_entry = [&](const ordered_json& node) {
      ExperimentEntry entry;
      entry.spec.target = node.at("target").get<std::string>();
      const auto& attrs = node.contains("attributes") ? node.at("attributes") : node.at("biased_attributes");
      entry.spec.biased_attributes = attrs.get<std::vector<std::string>>();
      if (node.contains("summary")) {
        fs::path p = node.at("summary").get<std::string>();
        entry.summary_path = p.is_absolute() ? p : path.parent_path() / p;
      }
      file.experiments.push_back(std::move(entry));
    };
    if (doc.contains("experiments")) {
      for (const auto& node : doc.at("experiments")) parse_entry(node);
    } else {
      parse_entry(doc);
    }
    if (doc.contains("mapping")) file.mapping_text = doc.at("mapping").dump();
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, "experiment spec: " + std::string(e.what()));
  }
}

std::string position_text(const RankPosition& p) { return p ? std::to_string(*p) : "unranked"; }

}  // namespace

int cmd_rank(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.spec_path, "--spec");
    const auto file = read_experiment_file(config.spec_path);
    if (file.experiments.empty()) throw Error(Errc::invalid_argument, "experiment spec lists no experiment");

    std::map<fs::path, IoRSummary> summaries;
    auto summary_for = [&](const fs::path& p) -> const IoRSummary& {
      auto it = summaries.find(p);
      if (it == summaries.end()) it = summaries.emplace(p, parse_summary_document(read_text_file(p))).first;
      return it->second;
    };
    auto mapping_for = [&](const RegionTable& table) {
      if (!config.mapping_path.empty()) return parse_mapping_document(read_text_file(config.mapping_path), table);
      if (file.mapping_text) return parse_mapping_document(*file.mapping_text, table);
      return AttributeRegionMapping::face_attributes_default(table);
    };

    std::vector<EvaluatedExperiment> results;
    for (const auto& entry : file.experiments) {
      const fs::path path = entry.summary_path.empty() ? config.summary_path : entry.summary_path;
      require_path(path, "--summary (or a per-experiment \"summary\")");
      const auto& summary = summary_for(path);
      const auto mapping = mapping_for(summary.region_table);
      results.push_back({entry.spec, evaluate_experiment(summary, entry.spec, mapping, config.include_background)});
    }

    const auto doc = evaluation_document(results);
    if (!config.output_dir.empty()) {
      fs::create_directories(config.output_dir);
      write_text_file(config.output_dir / "evaluation.json", doc);
    }

    out << std::left << std::setw(12) << "target" << std::setw(40) << "attributes" << std::setw(10) << "RP1"
        << std::setw(10) << "RP2" << "tied\n";
    std::vector<std::size_t> rp1s;
    std::vector<std::size_t> rp2s;
    bool unranked = false;
    for (const auto& e : results) {
      std::string attrs;
      for (const auto& a : e.spec.biased_attributes) attrs += (attrs.empty() ? "" : ", ") + a;
      out << std::setw(12) << e.spec.target << std::setw(40) << attrs << std::setw(10) << position_text(e.result.rp1)
          << std::setw(10) << (e.result.two_attributes() ? position_text(e.result.rp2) : "-")
          << (e.result.tied ? "yes" : "no") << '\n';
      if (e.result.rp1) rp1s.push_back(*e.result.rp1);
      if (e.result.two_attributes() && e.result.rp2) rp2s.push_back(*e.result.rp2);
      unranked = unranked || e.result.any_unranked();
    }
    out << std::setw(52) << "mean" << std::setw(10) << (rp1s.empty() ? "-" : mean_ranking(rp1s).two_decimals())
        << (rp2s.empty() ? "-" : mean_ranking(rp2s).two_decimals()) << '\n'
        << std::right;
    if (unranked) {
      err << "warning: some attribute regions are absent from every sample (unranked); they are excluded from means\n";
      return kExitValidationFailure;
    }
    return kExitOk;
  });
}

int cmd_render(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.summary_path, "--summary");
    require_path(config.output_dir, "--out");
    const auto summary = parse_summary_document(read_text_file(config.summary_path));
    const auto svg = render_heatmap(summary, load_template(config), {240.0, 0.0, config.normalization});
    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "heatmap.svg", svg);
    out << "wrote " << (config.output_dir / "heatmap.svg").string() << '\n';
    return kExitOk;
  });
}

namespace {

ReportInputs read_bundle(const fs::path& dir, const RunConfig& config) {
  ReportInputs in;
  in.summary = parse_summary_document(read_text_file(dir / "summary.json"));
  bool include_background = config.include_background;
  try {
    const auto ranking = ordered_json::parse(read_text_file(dir / "ranking.json"));
    in.ranking_manifest_hash = ranking.value("manifest_hash", std::string{});
    include_background = ranking.value("include_background", include_background);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("ranking: ") + e.what());
  }
  in.ranking = rank_regions(in.summary, include_background);
  in.heatmap_svg = fs::exists(dir / "heatmap.svg")
                       ? read_text_file(dir / "heatmap.svg")
                       : render_heatmap(in.summary, load_template(config), {240.0, 0.0, config.normalization});

  std::vector<std::pair<std::size_t, RegionPatches>> sections;
  if (fs::exists(dir / "patches")) {
    for (const auto& entry : fs::directory_iterator(dir / "patches")) {
      if (entry.path().extension() != ".json") continue;
      auto report = parse_patch_report(read_text_file(entry.path()));
      const Label label = in.summary.region_table.at(report.region);
      RegionPatches section{report.region, report.manifest_hash, report.patch_size, std::move(report.records), {}};
      const auto mosaic = dir / "mosaics" / (report.region + ".png");
      if (!section.records.empty() && fs::exists(mosaic)) section.mosaic_png = read_file_bytes(mosaic);
      sections.emplace_back(label, std::move(section));
    }
  }
  std::sort(sections.begin(), sections.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [label, section] : sections) in.patches.push_back(std::move(section));

  if (fs::exists(dir / "config.json")) {
    try {
      const auto doc = ordered_json::parse(read_text_file(dir / "config.json"));
      for (const auto& [k, v] : doc.items()) {
        if (k != "manifest_hash") in.config.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, std::string("config: ") + e.what());
    }
  }
  return in;
}

}  // namespace

int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.output_dir, "--out");
    const fs::path in_dir = config.summary_path.empty() ? config.output_dir : config.summary_path.parent_path();
    const auto inputs = read_bundle(in_dir, config);
    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "report.html", render_report(inputs));
    out << "wrote " << (config.output_dir / "report.html").string() << '\n';
    return kExitOk;
  });
}

int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_path(config.output_dir, "--out");
    config.validate();
    const auto manifest = load_manifest(config);
    if (manifest.samples.empty()) throw Error(Errc::empty_input, "no samples in manifest");

    const fs::path final_dir = config.output_dir;
    if (fs::exists(final_dir) && !fs::is_empty(final_dir) && !fs::exists(final_dir / "summary.json")) {
      throw Error(Errc::invalid_argument, "refusing to replace non-empty directory '" + final_dir.string() +
                                              "' that does not hold a previous bundle");
    }
    const auto prototype = load_template(config);
    const auto regions = analysis_regions(manifest.region_table, config.include_background);
    prototype.require(manifest.region_table, rendered_regions(manifest.region_table));

    fs::path staging = final_dir;
    staging += ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging);
    try {
      const auto analysis = analyze(manifest, config, regions);
      const auto ranking = rank_regions(analysis.summary, config.include_background);
      const auto& hash = analysis.summary.manifest_hash;
      const auto settings = run_settings(config, resolved_patch_size(config, manifest));

      write_summary_files(staging, analysis.summary, ranking, config.include_background);
      write_text_file(staging / "config.json", settings_document(config, resolved_patch_size(config, manifest), hash));
      auto sections = write_patch_files(staging, manifest, analysis.topk, hash, err);
      const auto svg = render_heatmap(analysis.summary, prototype, {240.0, 0.0, config.normalization});
      write_text_file(staging / "heatmap.svg", svg);
      ReportInputs report{analysis.summary, ranking, hash, svg, std::move(sections), settings};
      write_text_file(staging / "report.html", render_report(report));

      if (fs::exists(final_dir)) fs::remove_all(final_dir);
      fs::rename(staging, final_dir);
      print_ranking(out, analysis.summary, ranking);
    } catch (...) {
      std::error_code ignored;
      fs::remove_all(staging, ignored);
      throw;
    }
    return kExitOk;
  });
}

}  // namespace facex
