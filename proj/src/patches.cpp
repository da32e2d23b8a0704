#include "facex/patches.hpp"

#include <algorithm>
#include <map>

#include "facex/error.hpp"
#include "facex/parallel.hpp"
#include "facex/util.hpp"
#include "json.hpp"

namespace facex {

using ordered_json = nlohmann::ordered_json;

PatchGrid::PatchGrid(int height, int width, int patch_size) : patch_size_(patch_size) {
  if (patch_size < 1) {
    throw Error(Errc::invalid_patch_size, "patch size must be at least 1, got " + std::to_string(patch_size));
  }
  if (height % patch_size != 0 || width % patch_size != 0) {
    throw Error(Errc::invalid_patch_size,
                "patch size " + std::to_string(patch_size) + " does not divide " + std::to_string(height) + "x" +
                    std::to_string(width) + "; re-extract the maps at a resolution divisible by the patch size");
  }
  rows_ = height / patch_size;
  cols_ = width / patch_size;
}

BBox PatchGrid::bbox(int patch_index) const {
  if (patch_index < 0 || patch_index >= count()) {
    throw Error(Errc::invalid_argument, "patch index " + std::to_string(patch_index) + " out of range");
  }
  return {(patch_index / cols_) * patch_size_, (patch_index % cols_) * patch_size_, patch_size_, patch_size_};
}

int default_patch_size(int height) noexcept { return std::max(1, height / 8); }

namespace {

void check_inputs(const AttributionMap& attribution, const RegionLabelMap& mask, const PatchGrid& grid) {
  if (attribution.height != mask.height || attribution.width != mask.width) {
    throw Error(Errc::dimension_mismatch, "attribution and mask dimensions differ");
  }
  if (grid.rows() * grid.patch_size() != mask.height || grid.cols() * grid.patch_size() != mask.width) {
    throw Error(Errc::invalid_patch_size, "patch grid does not match map dimensions");
  }
}

}  // namespace

std::vector<double> score_patches(const AttributionMap& attribution, const RegionLabelMap& mask,
                                  const PatchGrid& grid, Label region, std::size_t region_count) {
  check_inputs(attribution, mask, grid);
  if (region >= region_count) {
    throw Error(Errc::invalid_region, "region " + std::to_string(region) + " not in table");
  }
  std::vector<double> scores(static_cast<std::size_t>(grid.count()), 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask(y, x) == region) scores[static_cast<std::size_t>(grid.index_of(y, x))] += attribution(y, x);
    }
  }
  return scores;
}

std::vector<double> score_all_patches(const AttributionMap& attribution, const RegionLabelMap& mask,
                                      const PatchGrid& grid, std::size_t region_count) {
  check_inputs(attribution, mask, grid);
  std::vector<double> scores(static_cast<std::size_t>(grid.count()) * region_count, 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const Label r = mask(y, x);
      if (r >= region_count) throw Error(Errc::label_out_of_range, "label exceeds region count");
      scores[static_cast<std::size_t>(grid.index_of(y, x)) * region_count + r] += attribution(y, x);
    }
  }
  return scores;
}

// TopKQueue

namespace {

// Heap comparator: the element that ranks last sits at the front.
bool heap_order(const PatchCandidate& a, const PatchCandidate& b) noexcept { return ranks_before(a, b); }

}  // namespace

TopKQueue::TopKQueue(std::size_t k) : k_(k) {
  if (k == 0) throw Error(Errc::invalid_argument, "k must be at least 1");
  heap_.reserve(std::min<std::size_t>(k + 1, 4096));
}

bool TopKQueue::offer(const PatchCandidate& candidate) {
  if (!(candidate.score > 0.0)) return false;
  if (heap_.size() < k_) {
    heap_.push_back(candidate);
    std::push_heap(heap_.begin(), heap_.end(), heap_order);
    return true;
  }
  if (!ranks_before(candidate, heap_.front())) return false;
  std::pop_heap(heap_.begin(), heap_.end(), heap_order);
  heap_.back() = candidate;
  std::push_heap(heap_.begin(), heap_.end(), heap_order);
  return true;
}

void TopKQueue::merge(const TopKQueue& other) {
  for (const auto& c : other.heap_) offer(c);
}

std::vector<PatchCandidate> TopKQueue::sorted() const {
  std::vector<PatchCandidate> out = heap_;
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

// Selection over a manifest

TopKSet make_topk_set(const Manifest& manifest, const PatchGrid& grid, Label region, std::size_t k,
                      std::span<const PatchCandidate> selected) {
  TopKSet set{region, k, grid.patch_size(), {}};
  set.records.reserve(selected.size());
  for (const auto& c : selected) {
    set.records.push_back({manifest.samples.at(c.sample_index).id, c.sample_index, c.patch_index, region, c.score,
                           grid.bbox(c.patch_index)});
  }
  return set;
}

std::vector<TopKSet> topk_patches(const Manifest& manifest, std::span<const Label> regions,
                                  const TopKOptions& options) {
  const int z = options.patch_size > 0 ? options.patch_size : default_patch_size(manifest.height);
  const PatchGrid grid(manifest.height, manifest.width, z);
  const std::size_t region_count = manifest.region_table.size();
  for (Label r : regions) {
    if (r >= region_count) throw Error(Errc::invalid_region, "region " + std::to_string(r) + " not in table");
  }
  if (options.k == 0) throw Error(Errc::invalid_argument, "k must be at least 1");
  const std::size_t local_k = options.per_sample_cap > 0 ? std::min(options.per_sample_cap, options.k) : options.k;

  std::vector<TopKQueue> global(regions.size(), TopKQueue(options.k));
  ordered_parallel_for(
      manifest.samples.size(), options.workers,
      [&](std::size_t i) {
        const auto& record = manifest.samples[i];
        const auto scores =
            score_all_patches(load_attribution(record, manifest), load_mask(record, manifest), grid, region_count);
        std::vector<TopKQueue> local(regions.size(), TopKQueue(local_k));
        for (std::size_t j = 0; j < regions.size(); ++j) {
          for (int q = 0; q < grid.count(); ++q) {
            local[j].offer({scores[static_cast<std::size_t>(q) * region_count + regions[j]], i, q});
          }
        }
        return local;
      },
      [&](std::size_t, std::vector<TopKQueue> local) {
        for (std::size_t j = 0; j < regions.size(); ++j) global[j].merge(local[j]);
      });

  std::vector<TopKSet> out;
  out.reserve(regions.size());
  for (std::size_t j = 0; j < regions.size(); ++j) {
    out.push_back(make_topk_set(manifest, grid, regions[j], options.k, global[j].sorted()));
  }
  return out;
}

TopKSet topk_patches(const Manifest& manifest, Label region, const TopKOptions& options) {
  const Label regions[] = {region};
  return std::move(topk_patches(manifest, regions, options).front());
}

RgbImage load_source_image(const PatchRecord& record, const Manifest& manifest) {
  auto it = std::find_if(manifest.samples.begin(), manifest.samples.end(),
                         [&](const SampleRecord& s) { return s.id == record.sample_id; });
  if (it == manifest.samples.end()) {
    throw Error(Errc::invalid_argument, "sample '" + record.sample_id + "' not in manifest");
  }
  RgbImage image;
  try {
    image = read_png(manifest.resolve(it->image_path));
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + record.sample_id + "': " + e.what());
  }
  if (image.height != manifest.height || image.width != manifest.width) {
    throw Error(Errc::dimension_mismatch,
                "sample '" + record.sample_id + "': image is " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) + " but manifest is " + std::to_string(manifest.height) + "x" +
                    std::to_string(manifest.width));
  }
  return image;
}

RgbImage extract_patch_pixels(const PatchRecord& record, const Manifest& manifest) {
  const auto image = load_source_image(record, manifest);
  const auto& b = record.bbox;
  if (b.row < 0 || b.col < 0 || b.row + b.height > image.height || b.col + b.width > image.width) {
    throw Error(Errc::invalid_argument, "sample '" + record.sample_id + "': bbox outside image");
  }
  return image.crop(b.row, b.col, b.height, b.width);
}

RgbImage compose_mosaic(std::span<const RgbImage> patches, int per_row, int separator) {
  if (patches.empty()) throw Error(Errc::empty_input, "no patches to compose");
  if (per_row < 1 || separator < 0) throw Error(Errc::invalid_argument, "invalid mosaic layout");
  const int tile_h = patches.front().height;
  const int tile_w = patches.front().width;
  for (const auto& p : patches) {
    if (p.height != tile_h || p.width != tile_w) {
      throw Error(Errc::dimension_mismatch, "mosaic patches must share one size");
    }
  }
  const int n = static_cast<int>(patches.size());
  const int cols = std::min(n, per_row);
  const int rows = (n + per_row - 1) / per_row;
  RgbImage mosaic(cols * tile_w + (cols + 1) * separator, rows * tile_h + (rows + 1) * separator);
  for (int i = 0; i < n; ++i) {
    const int r = i / per_row;
    const int c = i % per_row;
    mosaic.paste(patches[static_cast<std::size_t>(i)], separator + r * (tile_h + separator),
                 separator + c * (tile_w + separator));
  }
  return mosaic;
}

std::string patch_report_document(const TopKSet& set, const RegionTable& table, std::string_view manifest_hash) {
  ordered_json doc;
  doc["region"] = table.name(set.region);
  doc["k"] = set.k;
  doc["Z"] = set.patch_size;
  auto patches = ordered_json::array();
  for (const auto& r : set.records) {
    patches.push_back({{"sample_id", r.sample_id},
                       {"patch_index", r.patch_index},
                       {"score", round_sig9(r.score)},
                       {"bbox", {r.bbox.row, r.bbox.col, r.bbox.height, r.bbox.width}}});
  }
  doc["patches"] = std::move(patches);
  doc["manifest_hash"] = std::string(manifest_hash);
  return doc.dump(2) + "\n";
}

PatchReport parse_patch_report(std::string_view text) {
  try {
    const auto doc = ordered_json::parse(text);
    PatchReport report;
    report.region = doc.at("region").get<std::string>();
    report.k = doc.at("k").get<std::size_t>();
    report.patch_size = doc.at("Z").get<int>();
    report.manifest_hash = doc.value("manifest_hash", std::string{});
    for (const auto& node : doc.at("patches")) {
      PatchRecord r;
      r.sample_id = node.at("sample_id").get<std::string>();
      r.patch_index = node.at("patch_index").get<int>();
      r.score = node.at("score").get<double>();
      const auto& b = node.at("bbox");
      r.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
      report.records.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("patch report: ") + e.what());
  }
}

}  // namespace facex
