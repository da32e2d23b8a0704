#pragma once

// High-impact patches: the image is tiled into Z×Z patches, each patch gets
// the attribution mass it holds inside a region, and the global top-k per
// region is kept with a bounded best-k structure.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facex/image.hpp"
#include "facex/interchange.hpp"

namespace facex {

struct BBox {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

class PatchGrid {
 public:
  /// Throws Errc::invalid_patch_size unless 1 ≤ Z and Z divides H and W.
  PatchGrid(int height, int width, int patch_size);

  [[nodiscard]] int patch_size() const noexcept { return patch_size_; }
  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] int count() const noexcept { return rows_ * cols_; }
  [[nodiscard]] BBox bbox(int patch_index) const;
  [[nodiscard]] int index_of(int row, int col) const noexcept {
    return (row / patch_size_) * cols_ + col / patch_size_;
  }

 private:
  int patch_size_;
  int rows_;
  int cols_;
};

/// Default patch size giving an 8-row patch grid (Z = H/8).
[[nodiscard]] int default_patch_size(int height) noexcept;

/// V_q = Σ_{p ∈ patch q} G(p)·[label(p) = region] for all Q patches.
[[nodiscard]] std::vector<double> score_patches(const AttributionMap& attribution, const RegionLabelMap& mask,
                                                const PatchGrid& grid, Label region, std::size_t region_count);

/// All regions in one pass: element [q * region_count + r] holds V_{q,r}.
/// Per (q, r) the summation order is row-major, as in score_patches.
[[nodiscard]] std::vector<double> score_all_patches(const AttributionMap& attribution, const RegionLabelMap& mask,
                                                    const PatchGrid& grid, std::size_t region_count);

struct PatchCandidate {
  double score = 0.0;
  std::size_t sample_index = 0;  // manifest position
  int patch_index = 0;

  friend bool operator==(const PatchCandidate&, const PatchCandidate&) = default;
};

/// Total order used for selection: score descending, then manifest position
/// ascending, then patch index ascending.
[[nodiscard]] constexpr bool ranks_before(const PatchCandidate& a, const PatchCandidate& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  if (a.sample_index != b.sample_index) return a.sample_index < b.sample_index;
  return a.patch_index < b.patch_index;
}

/// Bounded best-k structure. Zero (and negative) scores are rejected.
/// merge() is associative and commutative: any merge tree yields the same
/// sorted() result.
class TopKQueue {
 public:
  explicit TopKQueue(std::size_t k);

  bool offer(const PatchCandidate& candidate);
  void merge(const TopKQueue& other);

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t size() const noexcept { return heap_.size(); }
  [[nodiscard]] std::vector<PatchCandidate> sorted() const;

 private:
  std::size_t k_;
  std::vector<PatchCandidate> heap_;  // front is the worst kept candidate
};

struct PatchRecord {
  std::string sample_id;
  std::size_t sample_index = 0;
  int patch_index = 0;
  Label region = 0;
  double score = 0.0;
  BBox bbox;
};

struct TopKSet {
  Label region = 0;
  std::size_t k = 0;
  int patch_size = 0;
  std::vector<PatchRecord> records;  // best first
};

struct TopKOptions {
  int patch_size = 0;  // 0 → default_patch_size(H)
  std::size_t k = 20;
  std::size_t per_sample_cap = 0;  // 0 → unlimited
  std::size_t workers = 1;
};

/// Global top-k for one region over every sample of the manifest.
[[nodiscard]] TopKSet topk_patches(const Manifest& manifest, Label region, const TopKOptions& options);

/// Global top-k for several regions in a single pass over the samples.
[[nodiscard]] std::vector<TopKSet> topk_patches(const Manifest& manifest, std::span<const Label> regions,
                                                const TopKOptions& options);

/// Builds TopKSet records from selected candidates.
[[nodiscard]] TopKSet make_topk_set(const Manifest& manifest, const PatchGrid& grid, Label region, std::size_t k,
                                    std::span<const PatchCandidate> selected);

/// Decodes the record's source image; throws Errc::missing_image or
/// Errc::dimension_mismatch (image size differs from the manifest).
[[nodiscard]] RgbImage load_source_image(const PatchRecord& record, const Manifest& manifest);

/// Crops the record's bbox out of the sample's source image.
[[nodiscard]] RgbImage extract_patch_pixels(const PatchRecord& record, const Manifest& manifest);

/// Patches in rank order, 10 per row, separated and framed by 2 black pixels.
[[nodiscard]] RgbImage compose_mosaic(std::span<const RgbImage> patches, int per_row = 10, int separator = 2);

[[nodiscard]] std::string patch_report_document(const TopKSet& set, const RegionTable& table,
                                                std::string_view manifest_hash);

struct PatchReport {
  std::string region;
  std::size_t k = 0;
  int patch_size = 0;
  std::vector<PatchRecord> records;  // region field unset, sample_index unknown
  std::string manifest_hash;
};
[[nodiscard]] PatchReport parse_patch_report(std::string_view text);

}  // namespace facex
