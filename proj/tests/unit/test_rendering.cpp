#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <regex>

#include "doctest.h"
#include "facex/error.hpp"
#include "facex/rendering.hpp"
#include "facex/util.hpp"

using namespace facex;

namespace doctest {
template <>
struct StringMaker<Rgb> {
  static String convert(const Rgb& c) { return hex_color(c).c_str(); }
};
}  // namespace doctest

namespace {

const RegionTable kTable = RegionTable::face_parsing_default();

// HSL to RGB by the piecewise-linear channel formula.
Rgb oracle_hsl(double hue, double s, double l) {
  const double a = s * std::min(l, 1.0 - l);
  auto f = [&](double n) {
    const double k = std::fmod(n + hue / 30.0, 12.0);
    const double v = l - a * std::max(-1.0, std::min({k - 3.0, 9.0 - k, 1.0}));
    // Channels that are exact halves (e.g. hue 234 gives G = 25.5) can land
    // a few ulps below .5; the small bias rounds them away from zero.
    return static_cast<std::uint8_t>(std::round(v * 255.0 + 1e-9));
  };
  return {f(0), f(8), f(4)};
}

IoRSummary summary_with(std::initializer_list<std::pair<const char*, double>> values) {
  IoRSummary s;
  s.class_of_interest = "female";
  s.sample_count = 5;
  s.manifest_hash = "hash-a";
  s.per_region.resize(kTable.size());
  for (const auto& [name, v] : values) s.per_region[kTable.at(name)] = {v, 5};
  return s;
}

struct PathInfo {
  std::string fill;
  std::string ior;
  bool nodata = false;
};

std::map<std::string, PathInfo> region_paths(const std::string& svg) {
  std::map<std::string, PathInfo> out;
  const std::regex path_re(R"re(<path id="region-([a-z_]+)"([^>]*)>)re");
  const std::regex fill_re(R"re(fill="([^"]*)")re");
  const std::regex ior_re(R"re(data-ior="([^"]*)")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), path_re); it != std::sregex_iterator(); ++it) {
    const std::string attrs = (*it)[2];
    std::smatch m;
    PathInfo info;
    if (std::regex_search(attrs, m, fill_re)) info.fill = m[1];
    if (std::regex_search(attrs, m, ior_re)) info.ior = m[1];
    info.nodata = attrs.find("data-nodata=\"true\"") != std::string::npos;
    out[(*it)[1]] = info;
  }
  return out;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

}  // namespace

TEST_CASE("color scale endpoints") {
  CHECK(color_of(0.0) == Rgb{0, 0, 255});
  CHECK(color_of(1.0) == Rgb{255, 0, 0});
  CHECK(color_of(0.5) == Rgb{0, 255, 0});
  const ColorScale scale;
  CHECK(scale.low_color() == Rgb{0, 0, 255});
  CHECK(scale.high_color() == Rgb{255, 0, 0});
  CHECK(code_of([] { (void)color_of(1.0001); }) == Errc::value_out_of_range);
  CHECK(code_of([] { (void)color_of(-0.1); }) == Errc::value_out_of_range);
  CHECK(code_of([] { (void)color_of(std::nan("")); }) == Errc::value_out_of_range);
}

TEST_CASE("color_of agrees with the HSL channel formula") {
  for (int i = 0; i <= 10000; ++i) {
    const double v = i / 10000.0;
    const Rgb expected = oracle_hsl(240.0 - 240.0 * v, 1.0, 0.5);
    INFO("v = ", v);
    REQUIRE(color_of(v) == expected);
  }
  for (int hue = 0; hue < 360; ++hue) {
    REQUIRE(hsl_to_rgb(hue, 1.0, 0.5) == oracle_hsl(hue, 1.0, 0.5));
    REQUIRE(hsl_to_rgb(hue + 0.5, 0.6, 0.3) == oracle_hsl(hue + 0.5, 0.6, 0.3));
  }
}

TEST_CASE("hue decreases monotonically with the value") {
  // Blue-to-red path: blue falls while green rises, then green falls while red rises.
  Rgb previous = color_of(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const Rgb c = color_of(i / 1000.0);
    if (i <= 500) {
      CHECK(c.b <= previous.b);
      CHECK(c.g >= previous.g);
    } else {
      CHECK(c.g <= previous.g);
      CHECK(c.r >= previous.r);
    }
    previous = c;
  }
}

TEST_CASE("hex colors") {
  CHECK(hex_color({0, 0, 255}) == "#0000ff");
  CHECK(hex_color({255, 16, 1}) == "#ff1001");
}

TEST_CASE("display normalization") {
  const auto regions = rendered_regions(kTable);
  CHECK(regions.size() == kTable.size() - 1);
  CHECK(regions.front() == 1);

  SUBCASE("relative maps min and max to the ends") {
    const auto s = summary_with({{"hair", 0.8}, {"skin", 0.2}, {"nose", 0.5}});
    const auto d = normalize_for_display(s, regions);
    CHECK(*d[kTable.at("hair")] == 1.0);
    CHECK(*d[kTable.at("skin")] == 0.0);
    CHECK(*d[kTable.at("nose")] == doctest::Approx(0.5));
    CHECK_FALSE(d[kTable.at("hat")].has_value());
    CHECK_FALSE(d[0].has_value());
  }
  SUBCASE("equal values map to the middle") {
    const auto s = summary_with({{"hair", 0.3}, {"skin", 0.3}});
    const auto d = normalize_for_display(s, regions);
    CHECK(*d[kTable.at("hair")] == 0.5);
    CHECK(*d[kTable.at("skin")] == 0.5);
  }
  SUBCASE("absolute keeps raw values") {
    const auto s = summary_with({{"hair", 0.3}, {"skin", 0.1}});
    const auto d = normalize_for_display(s, regions, Normalization::absolute);
    CHECK(*d[kTable.at("hair")] == 0.3);
    CHECK(*d[kTable.at("skin")] == 0.1);
  }
  SUBCASE("scaling all IoR values keeps relative colors") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
      auto a = summary_with({});
      for (Label r = 1; r < kTable.size(); ++r) {
        if (rng() % 3) a.per_region[r] = {u(rng), 1};
      }
      a.per_region[1] = {0.25, 1};
      auto b = a;
      for (auto& stat : b.per_region) stat.ior_mean *= 0.5;
      const auto da = normalize_for_display(a, regions);
      const auto db = normalize_for_display(b, regions);
      for (Label r : regions) {
        REQUIRE(da[r].has_value() == db[r].has_value());
        if (da[r]) REQUIRE(color_of(*da[r]) == color_of(*db[r]));
      }
    }
  }
  SUBCASE("nothing to show") {
    const auto s = summary_with({});
    CHECK(code_of([&] { (void)normalize_for_display(s, regions); }) == Errc::no_region_present);
  }
}

TEST_CASE("prototype template") {
  const auto t = PrototypeTemplate::builtin();
  CHECK(t.width > 0);
  CHECK(t.height > 0);
  t.require(kTable, rendered_regions(kTable));
  CHECK(t.find("background") == nullptr);
  CHECK(t.find("ear_r")->evenodd);

  const auto partial = PrototypeTemplate::parse(
      R"({"canvas":{"width":10,"height":10},"legend_box":{"x":0,"y":0,"width":1,"height":5},"shapes":[{"region":"hair","path":"M0 0 L1 1 Z"}]})");
  CHECK(code_of([&] { partial.require(kTable, rendered_regions(kTable)); }) == Errc::template_missing_region);
  CHECK(code_of([] {
          (void)PrototypeTemplate::parse(
              R"({"canvas":{"width":10,"height":10},"legend_box":{"x":0,"y":0,"width":1,"height":5},"shapes":[{"region":"hair","path":"M0 0"},{"region":"hair","path":"M1 1"}]})");
        }) == Errc::parse);
}

TEST_CASE("heatmap fills follow the color scale") {
  const auto t = PrototypeTemplate::builtin();
  const auto regions = rendered_regions(kTable);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto mode : {Normalization::relative, Normalization::absolute}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto s = summary_with({});
      for (Label r = 1; r < kTable.size(); ++r) {
        if (rng() % 4) s.per_region[r] = {u(rng), 1 + rng() % 5};
      }
      s.per_region[kTable.at("hair")] = {0.75, 3};
      const ColorScale scale{240.0, 0.0, mode};
      const auto svg = render_heatmap(s, t, scale);
      const auto paths = region_paths(svg);
      const auto display = normalize_for_display(s, regions, mode);
      REQUIRE(paths.size() == regions.size());
      for (Label r : regions) {
        const auto& info = paths.at(kTable.name(r));
        if (s.per_region[r].present()) {
          CHECK_FALSE(info.nodata);
          CHECK(info.fill == hex_color(color_of(*display[r], scale)));
          CHECK(info.ior == format_number(s.per_region[r].ior_mean));
        } else {
          CHECK(info.nodata);
          CHECK(info.fill == "#cccccc");
          CHECK(info.ior.empty());
        }
      }
      CHECK(svg == render_heatmap(s, t, scale));
    }
  }
}

TEST_CASE("heatmap legend and background") {
  auto s = summary_with({{"hair", 0.6}, {"skin", 0.2}});
  s.per_region[0] = {0.99, 5};
  const auto svg = render_heatmap(s, PrototypeTemplate::builtin());
  CHECK(svg.find("region-background") == std::string::npos);
  CHECK(svg.find("data-ior-min=\"0.2\"") != std::string::npos);
  CHECK(svg.find("data-ior-max=\"0.6\"") != std::string::npos);
  CHECK(svg.find("stop-color=\"#0000ff\"") != std::string::npos);
  CHECK(svg.find("stop-color=\"#ff0000\"") != std::string::npos);
  const auto paths = region_paths(svg);
  CHECK(paths.at("hair").fill == "#ff0000");
  CHECK(paths.at("skin").fill == "#0000ff");
}

TEST_CASE("report") {
  const auto s = summary_with({{"hair", 0.6}, {"skin", 0.2}});
  ReportInputs in;
  in.summary = s;
  in.ranking = rank_regions(s);
  in.ranking_manifest_hash = s.manifest_hash;
  in.heatmap_svg = render_heatmap(s, PrototypeTemplate::builtin());
  const std::vector<std::byte> png = encode_png(RgbImage(4, 4, Rgb{1, 2, 3}));
  in.patches.push_back({"hair", s.manifest_hash, 4, {{"x", 0, 0, kTable.at("hair"), 1.0, {0, 0, 4, 4}}}, png});
  in.patches.push_back({"hat", s.manifest_hash, 4, {}, {}});
  in.config = {{"class_of_interest", "female"}, {"top_k", "20"}};

  const auto html = render_report(in);
  CHECK(html.find("<img id=\"heatmap\"") != std::string::npos);
  CHECK(html.find("data:image/svg+xml;base64," +
                  base64_encode(std::as_bytes(std::span(in.heatmap_svg.data(), in.heatmap_svg.size())))) !=
        std::string::npos);
  std::size_t ranked_rows = 0;
  for (auto pos = html.find("class=\"ranked\""); pos != std::string::npos; pos = html.find("class=\"ranked\"", pos + 1)) {
    ++ranked_rows;
  }
  CHECK(ranked_rows == 2);
  CHECK(html.find("<section class=\"patches\" data-region=\"hair\">") != std::string::npos);
  CHECK(html.find("data:image/png;base64," + base64_encode(png)) != std::string::npos);
  const auto hat = html.find("data-region=\"hat\"");
  REQUIRE(hat != std::string::npos);
  CHECK(html.find("no activated patches", hat) != std::string::npos);
  CHECK(html.find("<table id=\"config\">") != std::string::npos);
  CHECK(html.find("hash-a") != std::string::npos);
  CHECK(html.find("<script") == std::string::npos);

  SUBCASE("mismatched inputs are refused") {
    auto bad = in;
    bad.patches[0].manifest_hash = "hash-b";
    CHECK(code_of([&] { (void)render_report(bad); }) == Errc::manifest_mismatch);
    bad = in;
    bad.ranking_manifest_hash = "hash-b";
    CHECK(code_of([&] { (void)render_report(bad); }) == Errc::manifest_mismatch);
  }
}

TEST_CASE("base64") {
  const std::string text = "any carnal pleas";
  CHECK(base64_encode(std::as_bytes(std::span(text.data(), text.size()))) == "YW55IGNhcm5hbCBwbGVhcw==");
  CHECK(base64_encode(std::span<const std::byte>{}).empty());
}
