#include "facex/rendering.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "facex/error.hpp"
#include "facex/prototype_asset.hpp"
#include "facex/util.hpp"
#include "json.hpp"

namespace facex {

std::string_view to_string(Normalization mode) noexcept {
  return mode == Normalization::relative ? "relative" : "absolute";
}

Normalization parse_normalization(std::string_view text) {
  if (text == "relative") return Normalization::relative;
  if (text == "absolute") return Normalization::absolute;
  throw Error(Errc::invalid_argument, "normalization must be 'relative' or 'absolute', got '" + std::string(text) + "'");
}

Rgb hsl_to_rgb(double hue_degrees, double saturation, double lightness) {
  double h = std::fmod(hue_degrees, 360.0);
  if (h < 0) h += 360.0;
  // Channels are carried on the 0..255 scale; the ramp is 255·t/60 with t in
  // degrees so that exact halves (hue 222 → 76.5) survive until rounding.
  const double chroma = (1.0 - std::abs(2.0 * lightness - 1.0)) * saturation * 255.0;
  const double t = 60.0 - std::abs(std::fmod(h, 120.0) - 60.0);
  const double x = chroma * t / 60.0;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = chroma, g = x; break;
    case 1: r = x, g = chroma; break;
    case 2: g = chroma, b = x; break;
    case 3: g = x, b = chroma; break;
    case 4: r = x, b = chroma; break;
    default: r = chroma, b = x; break;
  }
  const double m = lightness * 255.0 - chroma / 2.0;
  auto channel = [m](double c) { return static_cast<std::uint8_t>(std::clamp(std::round(c + m), 0.0, 255.0)); };
  return {channel(r), channel(g), channel(b)};
}

Rgb ColorScale::low_color() const { return hsl_to_rgb(low_hue, 1.0, 0.5); }
Rgb ColorScale::high_color() const { return hsl_to_rgb(high_hue, 1.0, 0.5); }

Rgb color_of(double v, const ColorScale& scale) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(Errc::value_out_of_range, "display value " + format_number(v) + " outside [0,1]");
  }
  return hsl_to_rgb(scale.low_hue + (scale.high_hue - scale.low_hue) * v, 1.0, 0.5);
}

std::vector<Label> rendered_regions(const RegionTable& table) {
  std::vector<Label> out;
  for (std::size_t r = 1; r < table.size(); ++r) out.push_back(static_cast<Label>(r));
  return out;
}

DisplayValues normalize_for_display(const IoRSummary& summary, std::span<const Label> rendered, Normalization mode) {
  DisplayValues values(summary.per_region.size());
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (Label r : rendered) {
    if (r >= summary.per_region.size() || !summary.per_region[r].present()) continue;
    const double v = summary.per_region[r].ior_mean;
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  if (!any) throw Error(Errc::no_region_present, "no rendered region has data");
  for (Label r : rendered) {
    if (r >= summary.per_region.size() || !summary.per_region[r].present()) continue;
    const double v = summary.per_region[r].ior_mean;
    if (mode == Normalization::absolute) {
      values[r] = std::clamp(v, 0.0, 1.0);
    } else {
      values[r] = hi == lo ? 0.5 : (v - lo) / (hi - lo);
    }
  }
  return values;
}

// Template

PrototypeTemplate PrototypeTemplate::builtin() { return parse(kFacePrototypeJson); }

PrototypeTemplate PrototypeTemplate::parse(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    PrototypeTemplate t;
    t.width = doc.at("canvas").at("width").get<double>();
    t.height = doc.at("canvas").at("height").get<double>();
    const auto& box = doc.at("legend_box");
    t.legend_box = {box.at("x").get<double>(), box.at("y").get<double>(), box.at("width").get<double>(),
                    box.at("height").get<double>()};
    std::set<std::string> seen;
    for (const auto& node : doc.at("shapes")) {
      TemplateShape shape{node.at("region").get<std::string>(), node.at("path").get<std::string>(),
                          node.value("fill_rule", std::string("nonzero")) == "evenodd"};
      if (!seen.insert(shape.region).second) {
        throw Error(Errc::parse, "template: more than one path for region '" + shape.region + "'");
      }
      t.shapes.push_back(std::move(shape));
    }
    if (t.width <= 0 || t.height <= 0) throw Error(Errc::parse, "template: canvas must be positive");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("template: ") + e.what());
  }
}

const TemplateShape* PrototypeTemplate::find(std::string_view region) const noexcept {
  auto it = std::find_if(shapes.begin(), shapes.end(), [&](const TemplateShape& s) { return s.region == region; });
  return it == shapes.end() ? nullptr : &*it;
}

void PrototypeTemplate::require(const RegionTable& table, std::span<const Label> regions) const {
  for (Label r : regions) {
    if (!find(table.name(r))) {
      throw Error(Errc::template_missing_region, "template has no path for region '" + table.name(r) + "'");
    }
  }
}

std::string hex_color(Rgb c) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s = "#";
  for (std::uint8_t v : {c.r, c.g, c.b}) {
    s.push_back(kHex[v >> 4]);
    s.push_back(kHex[v & 0xf]);
  }
  return s;
}

namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr const char* kNoDataFill = "#cccccc";

}  // namespace

std::string render_heatmap(const IoRSummary& summary, const PrototypeTemplate& prototype, const ColorScale& scale) {
  const auto regions = rendered_regions(summary.region_table);
  prototype.require(summary.region_table, regions);
  const auto display = normalize_for_display(summary, regions, scale.normalization);

  double raw_min = 1.0;
  double raw_max = 0.0;
  for (Label r : regions) {
    if (!summary.per_region[r].present()) continue;
    raw_min = std::min(raw_min, summary.per_region[r].ior_mean);
    raw_max = std::max(raw_max, summary.per_region[r].ior_mean);
  }

  const std::string w = format_number(prototype.width);
  const std::string h = format_number(prototype.height);
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\" data-class=\"" << xml_escape(summary.class_of_interest) << "\" data-normalization=\""
      << to_string(scale.normalization) << "\">\n"
      << "  <defs>\n"
      << "    <pattern id=\"nodata-hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
         "patternTransform=\"rotate(45)\">\n"
      << "      <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#7f7f7f\" stroke-width=\"1.5\"/>\n"
      << "    </pattern>\n"
      << "    <linearGradient id=\"legend-gradient\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  for (int i = 0; i <= 8; ++i) {
    const double v = i / 8.0;
    svg << "      <stop offset=\"" << format_number(v) << "\" stop-color=\"" << hex_color(color_of(v, scale))
        << "\"/>\n";
  }
  svg << "    </linearGradient>\n"
      << "  </defs>\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n"
      << "  <g id=\"regions\" stroke=\"#404040\" stroke-width=\"1\">\n";

  for (const auto& shape : prototype.shapes) {
    const auto label = summary.region_table.find(shape.region);
    if (!label || *label == 0) continue;
    const std::string name = xml_escape(shape.region);
    const std::string rule = shape.evenodd ? " fill-rule=\"evenodd\"" : "";
    const auto& stat = summary.per_region[*label];
    if (display[*label]) {
      svg << "    <path id=\"region-" << name << "\" data-region=\"" << name << "\" data-ior=\""
          << format_number(stat.ior_mean) << "\" data-count=\"" << stat.count << "\" fill=\""
          << hex_color(color_of(*display[*label], scale)) << "\"" << rule << " d=\"" << xml_escape(shape.path)
          << "\"><title>" << name << ": IoR " << format_number(stat.ior_mean) << " (N=" << stat.count
          << ")</title></path>\n";
    } else {
      svg << "    <path id=\"region-" << name << "\" data-region=\"" << name
          << "\" data-ior=\"\" data-nodata=\"true\" fill=\"" << kNoDataFill << "\"" << rule << " d=\""
          << xml_escape(shape.path) << "\"><title>" << name << ": no data</title></path>\n"
          << "    <path class=\"nodata-hatch\" fill=\"url(#nodata-hatch)\"" << rule
          << " stroke=\"none\" pointer-events=\"none\" d=\"" << xml_escape(shape.path) << "\"/>\n";
    }
  }
  svg << "  </g>\n";

  const auto& box = prototype.legend_box;
  const bool relative = scale.normalization == Normalization::relative;
  const std::string top_label = relative ? format_number(raw_max) : "1";
  const std::string bottom_label = relative ? format_number(raw_min) : "0";
  svg << "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\" data-ior-min=\"" << format_number(raw_min)
      << "\" data-ior-max=\"" << format_number(raw_max) << "\">\n"
      << "    <text x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y - 22) << "\">IoR</text>\n"
      << "    <rect x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y) << "\" width=\""
      << format_number(box.width) << "\" height=\"" << format_number(box.height)
      << "\" fill=\"url(#legend-gradient)\" stroke=\"#404040\"/>\n"
      << "    <text x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y - 6) << "\">" << top_label
      << "</text>\n"
      << "    <text x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y + box.height + 16) << "\">"
      << bottom_label << "</text>\n";
  if (!relative) {
    svg << "    <text x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y + box.height + 32)
        << "\">range " << format_number(raw_min) << "-" << format_number(raw_max) << "</text>\n";
  }
  svg << "    <rect x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y + box.height + 44)
      << "\" width=\"" << format_number(box.width) << "\" height=\"12\" fill=\"" << kNoDataFill << "\"/>\n"
      << "    <rect x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y + box.height + 44)
      << "\" width=\"" << format_number(box.width) << "\" height=\"12\" fill=\"url(#nodata-hatch)\"/>\n"
      << "    <text x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y + box.height + 70)
      << "\">no data</text>\n"
      << "  </g>\n"
      << "</svg>\n";
  return svg.str();
}

// Report

std::string render_report(const ReportInputs& in) {
  const std::string& hash = in.summary.manifest_hash;
  if (in.ranking_manifest_hash != hash) {
    throw Error(Errc::manifest_mismatch, "ranking was computed from a different manifest than the summary");
  }
  for (const auto& p : in.patches) {
    if (p.manifest_hash != hash) {
      throw Error(Errc::manifest_mismatch,
                  "patch report for '" + p.region + "' was computed from a different manifest than the summary");
    }
  }

  const auto& table = in.summary.region_table;
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Region attribution report: "
       << xml_escape(in.summary.class_of_interest) << "</title>\n"
       << "<style>\nbody{font-family:sans-serif;margin:2em;max-width:70em}\n"
          "table{border-collapse:collapse}td,th{border:1px solid #999;padding:.2em .6em;text-align:left}\n"
          ".notice{color:#666;font-style:italic}\nimg.mosaic{image-rendering:pixelated}\n</style>\n"
       << "</head>\n<body>\n"
       << "<h1>Region attribution report</h1>\n"
       << "<p>Class of interest: <b>" << xml_escape(in.summary.class_of_interest) << "</b>; samples: "
       << in.summary.sample_count << "</p>\n";

  html << "<h2>Region heatmap</h2>\n<img id=\"heatmap\" alt=\"region heatmap\" src=\"data:image/svg+xml;base64,"
       << base64_encode(std::as_bytes(std::span(in.heatmap_svg.data(), in.heatmap_svg.size()))) << "\">\n";

  html << "<h2>Region ranking</h2>\n<table id=\"ranking\">\n<tr><th>#</th><th>region</th><th>IoR</th><th>N</th></tr>\n";
  for (std::size_t i = 0; i < in.ranking.ranked.size(); ++i) {
    const auto& e = in.ranking.ranked[i];
    html << "<tr class=\"ranked\"><td>" << i + 1 << "</td><td>" << xml_escape(table.name(e.region)) << "</td><td>"
         << format_number(e.ior) << "</td><td>" << e.count << "</td></tr>\n";
  }
  html << "</table>\n";
  if (!in.ranking.absent.empty()) {
    html << "<p>Absent in every sample:";
    for (Label r : in.ranking.absent) html << ' ' << xml_escape(table.name(r));
    html << "</p>\n";
  }

  html << "<h2>High-impact patches</h2>\n";
  for (const auto& p : in.patches) {
    html << "<section class=\"patches\" data-region=\"" << xml_escape(p.region) << "\">\n<h3>"
         << xml_escape(p.region) << "</h3>\n";
    if (p.records.empty() || p.mosaic_png.empty()) {
      html << "<p class=\"notice\">no activated patches</p>\n";
    } else {
      html << "<img class=\"mosaic\" alt=\"top patches for " << xml_escape(p.region)
           << "\" src=\"data:image/png;base64," << base64_encode(p.mosaic_png) << "\">\n<p>" << p.records.size()
           << " patches of " << p.patch_size << "x" << p.patch_size << " px; best score "
           << format_number(p.records.front().score) << "</p>\n";
    }
    html << "</section>\n";
  }

  html << "<h2>Run configuration</h2>\n<table id=\"config\">\n<tr><th>manifest_hash</th><td>" << hash
       << "</td></tr>\n";
  for (const auto& [key, value] : in.config) {
    html << "<tr><th>" << xml_escape(key) << "</th><td>" << xml_escape(value) << "</td></tr>\n";
  }
  html << "</table>\n</body>\n</html>\n";
  return html.str();
}

}  // namespace facex
