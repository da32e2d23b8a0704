// facex: region attribution summaries for face attribute classifiers.
//
//   facex validate --manifest m.json
//   facex subset   --manifest m.json --target Gender --attribute Smiling --seed 7 --out balanced/
//   facex pipeline --manifest m.json --out bundle/ --class female --workers 8
//   facex rank     --summary bundle/summary.json --spec experiments.json
//
// Flags may also come from a TOML/INI file given with --config; command
// line flags win.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "facex/commands.hpp"

int main(int argc, char** argv) {
  using namespace facex;

  CLI::App app{"Summarize pixel attributions over facial regions: IoR rankings, high-impact patches, heatmaps"};
  app.set_config("--config", "", "TOML/INI file with default flag values");
  app.require_subcommand(1);

  RunConfig config;
  std::string manifest;
  std::string out;
  std::string mapping;
  std::string template_path;
  std::string summary;
  std::string spec;
  std::string norm = "relative";

  app.add_option("--manifest", manifest, "Manifest document");
  app.add_option("--out", out, "Output directory");
  app.add_option("--class", config.class_of_interest, "Class the attributions explain")->capture_default_str();
  app.add_option("--patch-size", config.patch_size, "Patch size Z in pixels (default: height/8)");
  app.add_option("--top-k", config.top_k, "Patches kept per region")->capture_default_str();
  app.add_flag("--include-background", config.include_background, "Rank the background region too");
  app.add_option("--norm", norm, "Heatmap normalization: relative|absolute")
      ->check(CLI::IsMember({"relative", "absolute"}))
      ->capture_default_str();
  app.add_option("--mapping", mapping, "Attribute to region mapping document");
  app.add_option("--seed", config.seed, "Seed for balanced subsets")->capture_default_str();
  app.add_option("--workers", config.workers, "Worker threads")->capture_default_str();
  app.add_option("--per-sample-cap", config.per_sample_cap, "Max patches per sample in a top-k set (0: no cap)");
  app.add_option("--template", template_path, "Custom face prototype template");
  app.add_option("--target", config.target, "Target attribute (subset)");
  app.add_option("--attribute", config.attribute, "Second attribute to balance against (subset)");
  app.add_option("--summary", summary, "Summary document (rank, render, report)");
  app.add_option("--spec", spec, "Experiment spec document (rank)");
  app.add_option("--region", config.regions, "Restrict patches to these regions (repeatable)");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, std::ostream&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"validate", "Check every sample's grids and image against the manifest", cmd_validate},
      {"subset", "Write a manifest balanced over (target, attribute)", cmd_subset},
      {"aggregate", "Compute per-region IoR summary and ranking", cmd_aggregate},
      {"patches", "Select top-k high-impact patches per region and build mosaics", cmd_patches},
      {"rank", "Ranking positions of attribute regions (RP1/RP2)", cmd_rank},
      {"render", "Render the face prototype heatmap from a summary", cmd_render},
      {"report", "Assemble the HTML report from a bundle directory", cmd_report},
      {"pipeline", "Run aggregate, patches, render and report into one bundle", cmd_pipeline},
  };
  const Command* selected = nullptr;
  for (const auto& c : commands) {
    app.add_subcommand(c.name, c.help)->fallthrough()->callback([&selected, &c] { selected = &c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  config.manifest_path = manifest;
  config.output_dir = out;
  config.mapping_path = mapping;
  config.template_path = template_path;
  config.summary_path = summary;
  config.spec_path = spec;
  config.normalization = parse_normalization(norm);

  try {
    return selected->run(config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
}
