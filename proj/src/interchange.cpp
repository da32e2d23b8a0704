#include "facex/interchange.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "facex/error.hpp"
#include "facex/util.hpp"
#include "json.hpp"

namespace facex {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::array<const char*, 19> kDefaultRegions = {
    "background", "skin",  "l_brow", "r_brow", "l_eye", "r_eye", "eye_g",
    "l_ear",      "r_ear", "ear_r",  "nose",   "mouth", "u_lip", "l_lip",
    "neck",       "neck_l", "cloth", "hair",   "hat"};

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(Errc::parse, "manifest: " + what);
}

int require_int(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) parse_fail(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

std::string require_string(const ordered_json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    parse_fail(context + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::optional<int> optional_int(const ordered_json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  if (!it->is_number_integer()) parse_fail(context + ": field '" + key + "' must be an integer");
  return it->get<int>();
}

SampleRecord parse_sample(const ordered_json& node, std::size_t position) {
  const std::string context = "sample #" + std::to_string(position);
  if (!node.is_object()) parse_fail(context + " is not an object");
  SampleRecord record;
  record.id = require_string(node, "id", context);
  if (record.id.empty()) parse_fail(context + ": empty id");
  record.image_path = require_string(node, "image_path", context);
  record.attribution_path = require_string(node, "attribution_path", context);
  record.mask_path = require_string(node, "mask_path", context);
  if (auto attrs = node.find("attributes"); attrs != node.end()) {
    if (!attrs->is_object()) parse_fail(context + ": attributes must be an object");
    for (const auto& [name, value] : attrs->items()) {
      if (value.is_boolean()) {
        record.attributes[name] = value.get<bool>() ? 1 : 0;
      } else if (value.is_number_integer()) {
        record.attributes[name] = value.get<int>();
      } else {
        parse_fail(context + ": attribute '" + name + "' must be 0/1");
      }
    }
  }
  record.label = optional_int(node, "label", context);
  record.prediction = optional_int(node, "prediction", context);
  return record;
}

std::uint32_t load_le32(const std::byte* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_le32(std::byte* p, std::uint32_t v) noexcept {
  p[0] = static_cast<std::byte>(v & 0xffu);
  p[1] = static_cast<std::byte>((v >> 8) & 0xffu);
  p[2] = static_cast<std::byte>((v >> 16) & 0xffu);
  p[3] = static_cast<std::byte>((v >> 24) & 0xffu);
}

std::string pixel_position(std::size_t index, int width) {
  const auto w = static_cast<std::size_t>(width);
  return "pixel " + std::to_string(index) + " (row " + std::to_string(index / w) + ", col " +
         std::to_string(index % w) + ")";
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

// RegionTable

RegionTable RegionTable::face_parsing_default() {
  return RegionTable(std::vector<std::string>(kDefaultRegions.begin(), kDefaultRegions.end()));
}

RegionTable::RegionTable(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty() || names_.size() > 256) {
    throw Error(Errc::parse, "region table must have between 1 and 256 entries");
  }
  if (names_.front() != "background") {
    throw Error(Errc::parse, "region table label 0 must be named 'background'");
  }
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(Errc::parse, "region table contains an empty name");
    if (!seen.insert(n).second) throw Error(Errc::parse, "duplicate region name '" + n + "'");
  }
}

const std::string& RegionTable::name(Label id) const {
  if (id >= names_.size()) {
    throw Error(Errc::invalid_region, "region label " + std::to_string(id) + " not in table");
  }
  return names_[id];
}

std::optional<Label> RegionTable::find(std::string_view name) const noexcept {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Label>(it - names_.begin());
}

Label RegionTable::at(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw Error(Errc::invalid_region, "unknown region '" + std::string(name) + "'");
}

fs::path Manifest::resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

// Manifest document

Manifest parse_manifest(std::string_view text, fs::path base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail(e.what());
  }
  if (!doc.is_object()) parse_fail("document root must be an object");

  Manifest manifest;
  manifest.base_dir = std::move(base_dir);
  manifest.format_version = require_int(doc, "format_version");
  if (manifest.format_version != kManifestFormatVersion) {
    throw Error(Errc::unsupported_version,
                "manifest: unknown format_version " + std::to_string(manifest.format_version));
  }
  manifest.height = require_int(doc, "height");
  manifest.width = require_int(doc, "width");
  if (manifest.height <= 0 || manifest.width <= 0) {
    throw Error(Errc::invalid_dimensions, "manifest: height and width must be positive, got " +
                                              std::to_string(manifest.height) + "x" +
                                              std::to_string(manifest.width));
  }

  if (auto table = doc.find("region_table"); table != doc.end()) {
    if (!table->is_array()) parse_fail("region_table must be an array");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < table->size(); ++i) {
      const auto& entry = (*table)[i];
      if (!entry.is_object()) parse_fail("region_table entry is not an object");
      if (require_int(entry, "id") != static_cast<int>(i)) {
        parse_fail("region_table ids must be contiguous from 0 in document order");
      }
      names.push_back(require_string(entry, "name", "region_table"));
    }
    manifest.region_table = RegionTable(std::move(names));
  }

  auto samples = doc.find("samples");
  if (samples == doc.end() || !samples->is_array()) parse_fail("samples must be an array");
  std::set<std::string> ids;
  manifest.samples.reserve(samples->size());
  for (std::size_t i = 0; i < samples->size(); ++i) {
    auto record = parse_sample((*samples)[i], i);
    if (!ids.insert(record.id).second) {
      throw Error(Errc::duplicate_id, "manifest: duplicate sample id '" + record.id + "'");
    }
    manifest.samples.push_back(std::move(record));
  }
  return manifest;
}

Manifest read_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

std::string manifest_document(const Manifest& manifest) {
  ordered_json doc;
  doc["format_version"] = manifest.format_version;
  doc["height"] = manifest.height;
  doc["width"] = manifest.width;
  auto table = ordered_json::array();
  for (std::size_t i = 0; i < manifest.region_table.size(); ++i) {
    table.push_back({{"id", i}, {"name", manifest.region_table.name(static_cast<Label>(i))}});
  }
  doc["region_table"] = std::move(table);
  auto samples = ordered_json::array();
  for (const auto& s : manifest.samples) {
    ordered_json node;
    node["id"] = s.id;
    node["image_path"] = s.image_path;
    node["attribution_path"] = s.attribution_path;
    node["mask_path"] = s.mask_path;
    node["attributes"] = ordered_json::object();
    for (const auto& [k, v] : s.attributes) node["attributes"][k] = v;
    if (s.label) node["label"] = *s.label;
    if (s.prediction) node["prediction"] = *s.prediction;
    samples.push_back(std::move(node));
  }
  doc["samples"] = std::move(samples);
  return doc.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_text_file(path, manifest_document(manifest));
}

std::string manifest_hash(const Manifest& manifest) {
  const std::string doc = manifest_document(manifest);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(doc.data(), doc.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

// Grids

AttributionMap decode_attribution(std::span<const std::byte> bytes, int height, int width) {
  AttributionMap map(height, width);
  const std::size_t expected = map.size() * 4;
  if (bytes.size() != expected) {
    throw Error(Errc::size_mismatch, "attribution grid has " + std::to_string(bytes.size()) +
                                         " bytes, expected " + std::to_string(expected) + " (" +
                                         std::to_string(height) + "x" + std::to_string(width) +
                                         " float32)");
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float v = std::bit_cast<float>(load_le32(bytes.data() + 4 * i));
    if (!std::isfinite(v)) {
      throw Error(Errc::non_finite, "non-finite attribution value at " + pixel_position(i, width));
    }
    if (v < 0.0f || v > 1.0f) {
      throw Error(Errc::value_out_of_range, "attribution value " + format_number(v) +
                                                " outside [0,1] at " + pixel_position(i, width));
    }
    map.values[i] = v;
  }
  return map;
}

RegionLabelMap decode_mask(std::span<const std::byte> bytes, int height, int width,
                           const RegionTable& table) {
  RegionLabelMap map(height, width);
  if (bytes.size() != map.size()) {
    throw Error(Errc::size_mismatch, "mask grid has " + std::to_string(bytes.size()) +
                                         " bytes, expected " + std::to_string(map.size()));
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto label = static_cast<Label>(bytes[i]);
    if (label >= table.size()) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(label) + " at " +
                                                pixel_position(i, width) + " exceeds region table size " +
                                                std::to_string(table.size()));
    }
    map.values[i] = label;
  }
  return map;
}

std::vector<std::byte> encode_attribution(const AttributionMap& map) {
  std::vector<std::byte> bytes(map.size() * 4);
  for (std::size_t i = 0; i < map.size(); ++i) {
    store_le32(bytes.data() + 4 * i, std::bit_cast<std::uint32_t>(map.values[i]));
  }
  return bytes;
}

std::vector<std::byte> encode_mask(const RegionLabelMap& map) {
  std::vector<std::byte> bytes(map.size());
  std::transform(map.values.begin(), map.values.end(), bytes.begin(),
                 [](Label l) { return static_cast<std::byte>(l); });
  return bytes;
}

AttributionMap load_attribution(const SampleRecord& record, const Manifest& manifest) {
  const auto bytes = read_file_bytes(manifest.resolve(record.attribution_path));
  try {
    return decode_attribution(bytes, manifest.height, manifest.width);
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + record.id + "': " + e.what());
  }
}

RegionLabelMap load_mask(const SampleRecord& record, const Manifest& manifest) {
  const auto bytes = read_file_bytes(manifest.resolve(record.mask_path));
  try {
    return decode_mask(bytes, manifest.height, manifest.width, manifest.region_table);
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + record.id + "': " + e.what());
  }
}

void write_attribution(const AttributionMap& map, const fs::path& path) {
  write_file_bytes(path, encode_attribution(map));
}

void write_mask(const RegionLabelMap& map, const fs::path& path) {
  write_file_bytes(path, encode_mask(map));
}

std::vector<std::byte> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::transform(raw.begin(), raw.end(), bytes.begin(), [](char c) { return static_cast<std::byte>(c); });
  return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

void write_text_file(const fs::path& path, std::string_view text) {
  write_file_bytes(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Balanced subsets

std::uint64_t sample_draw_key(std::uint64_t seed, std::string_view sample_id) noexcept {
  // FNV-1a over the UTF-8 bytes, then mixed with the seed.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : sample_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return splitmix64(splitmix64(seed) ^ h);
}

Manifest balance_subset(const Manifest& manifest, std::string_view target, std::string_view attribute,
                        std::uint64_t seed) {
  auto binary_value = [](const SampleRecord& s, std::string_view name) {
    auto it = s.attributes.find(std::string(name));
    if (it == s.attributes.end()) {
      throw Error(Errc::missing_attribute,
                  "sample '" + s.id + "' has no attribute '" + std::string(name) + "'");
    }
    if (it->second != 0 && it->second != 1) {
      throw Error(Errc::invalid_argument, "sample '" + s.id + "' attribute '" + std::string(name) +
                                              "' is not binary");
    }
    return it->second;
  };

  struct Entry {
    std::uint64_t key;
    std::size_t position;
  };
  std::array<std::vector<Entry>, 4> cells;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto& s = manifest.samples[i];
    const int cell = 2 * binary_value(s, target) + binary_value(s, attribute);
    cells[static_cast<std::size_t>(cell)].push_back({sample_draw_key(seed, s.id), i});
  }

  std::size_t n = cells[0].size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].empty()) {
      throw Error(Errc::empty_cell, "cell (" + std::string(target) + "=" + std::to_string(c / 2) + ", " +
                                        std::string(attribute) + "=" + std::to_string(c % 2) +
                                        ") has no samples");
    }
    n = std::min(n, cells[c].size());
  }

  std::vector<bool> keep(manifest.samples.size(), false);
  for (auto& cell : cells) {
    std::sort(cell.begin(), cell.end(), [](const Entry& a, const Entry& b) {
      return a.key != b.key ? a.key < b.key : a.position < b.position;
    });
    for (std::size_t j = 0; j < n; ++j) keep[cell[j].position] = true;
  }

  Manifest out = manifest;
  out.samples.clear();
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (keep[i]) out.samples.push_back(manifest.samples[i]);
  }
  return out;
}

}  // namespace facex
