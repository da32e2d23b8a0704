#pragma once

// Command implementations behind the `facex` executable. Each command
// writes human-readable output to `out`, diagnostics to `err`, and returns
// the process exit status.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "facex/aggregation.hpp"
#include "facex/error.hpp"
#include "facex/interchange.hpp"
#include "facex/patches.hpp"
#include "facex/rendering.hpp"

namespace facex {

enum ExitStatus : int {
  kExitOk = 0,
  kExitValidationFailure = 1,
  kExitUsageError = 2,
  kExitInternalError = 3,
};

[[nodiscard]] int exit_status_for(Errc code) noexcept;

struct RunConfig {
  fs::path manifest_path;
  fs::path output_dir;
  std::string class_of_interest = "positive";
  int patch_size = 0;  // 0 → H/8
  std::size_t top_k = 20;
  bool include_background = false;
  Normalization normalization = Normalization::relative;
  fs::path mapping_path;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t per_sample_cap = 0;
  fs::path template_path;

  // subset
  std::string target;
  std::string attribute;
  // rank / render / report
  fs::path summary_path;
  fs::path spec_path;
  // patches: restrict to these region names (empty → every rendered region)
  std::vector<std::string> regions;

  /// Throws Errc::invalid_argument when top_k, workers or patch_size are out
  /// of range.
  void validate() const;
};

struct Finding {
  std::string sample_id;
  std::string kind;
  std::string message;
};

/// Checks every sample's grids and source image. Findings are ordered by
/// manifest position, then attribution/mask/image.
[[nodiscard]] std::vector<Finding> validate_manifest(const Manifest& manifest, std::size_t workers = 1);
[[nodiscard]] std::string findings_document(const std::vector<Finding>& findings);

struct Analysis {
  IoRSummary summary;
  std::vector<TopKSet> topk;  // one per requested region, in request order
};

/// One ordered pass over the manifest computing the IoR summary and,
/// for `patch_regions`, the global top-k patches.
[[nodiscard]] Analysis analyze(const Manifest& manifest, const RunConfig& config,
                               std::span<const Label> patch_regions);

/// Regions shown in rankings, heatmaps and patch reports.
[[nodiscard]] std::vector<Label> analysis_regions(const RegionTable& table, bool include_background);

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_subset(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_aggregate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_patches(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_rank(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_render(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace facex
