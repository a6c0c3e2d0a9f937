#include <doctest.h>

#include <filesystem>

#include "tokred/backbone.h"
#include "tokred/document.h"
#include "tokred/errors.h"
#include "tokred/layer_schedule.h"

using namespace tokred;

namespace {

SensitivityReport report_from(std::vector<double> ratios, std::set<std::size_t> excluded = {}) {
  SensitivityReport r;
  r.global_layer_count = ratios.size() + excluded.size();
  std::size_t next = 0;
  for (double ratio : ratios) {
    while (excluded.contains(next)) ++next;
    r.layers.push_back({next++, ratio, 0.0});
  }
  r.excluded_layers = std::move(excluded);
  return r;
}

}  // namespace

TEST_CASE("build_schedule two-tier rule") {
  CHECK(build_schedule(report_from({1.0, 1.2, 1.04}), 8, 1.05, 3).assignments() ==
        std::vector<std::size_t>{24, 8, 24});
  CHECK(build_schedule(report_from({1.0, 1.2, 1.04}), 8, 1.05, 1).assignments() ==
        std::vector<std::size_t>{8, 8, 8});
  CHECK(build_schedule(report_from({0.9, 1.0, 1.05}), 8, 1.05, 3).assignments() ==
        std::vector<std::size_t>{24, 24, 24});
}

TEST_CASE("build_schedule: excluded layers keep the base factor and are flagged") {
  const auto s = build_schedule(report_from({1.0, 1.0, 1.0}, {1, 3}), 4, 1.05, 3);
  REQUIRE(s.layers.size() == 5);
  CHECK(s.assignments() == std::vector<std::size_t>{12, 4, 12, 4, 12});
  CHECK(s.layers[1].excluded);
  CHECK_FALSE(s.layers[1].ratio.has_value());
  for (const auto& e : s.layers)
    if (e.excluded) CHECK(s.tier(e) == Tier::Excluded);
}

TEST_CASE("raising the threshold never promotes a layer to the high tier") {
  const auto report = report_from({0.97, 1.01, 1.03, 1.06, 1.2, 1.5, 1.049, 1.051});
  for (double lo : {0.95, 1.0, 1.03, 1.05, 1.1})
    for (double hi : {lo, lo + 0.01, lo + 0.2}) {
      const auto a = build_schedule(report, 8, lo, 3);
      const auto b = build_schedule(report, 8, hi, 3);
      for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.tier(a.layers[i]) == Tier::Low) CHECK(b.tier(b.layers[i]) == Tier::Low);
      }
    }
}

TEST_CASE("published 24-layer tiering: sensitive at 11-16") {
  std::vector<double> ratios(24, 1.01);
  for (std::size_t i = 11; i <= 16; ++i) ratios[i] = 1.2;
  const auto s = build_schedule(report_from(ratios), 8, 1.05, 3);
  for (std::size_t i = 0; i < 24; ++i) {
    CHECK(s.layers[i].assigned_r_kv == (i >= 11 && i <= 16 ? 8u : 24u));
  }
}

TEST_CASE("probe_sensitivity") {
  BackboneSpec spec = BackboneSpec::alternating(8, 8, 6, 3);
  const ProbeOptions small{2, 16, std::nullopt};

  SUBCASE("no-op global layers give ratio 1 everywhere") {
    spec.weight_scale = 0.0;
    const Model model = init_backbone(spec);
    const auto x = gen_synthetic_sequence(16, spec.layout, spec.dim, SequenceMode::SmoothWalk, 1);
    const auto report = probe_sensitivity(model, x, small);
    REQUIRE(report.layers.size() == 4);
    for (const auto& l : report.layers) CHECK(l.degradation_ratio == 1.0);
  }

  SUBCASE("too few frames for the probe factor") {
    const Model model = init_backbone(spec);
    const auto x = gen_synthetic_sequence(15, spec.layout, spec.dim, SequenceMode::SmoothWalk, 1);
    CHECK_THROWS_AS(probe_sensitivity(model, x, small), InvalidInput);
    CHECK_THROWS_AS(probe_sensitivity(model, x, {8, 4, std::nullopt}), InvalidInput);
  }

  SUBCASE("deterministic and honours exclusions") {
    spec.excluded_global_layers = {2};
    const Model model = init_backbone(spec);
    const auto x = gen_synthetic_sequence(16, spec.layout, spec.dim, SequenceMode::SmoothWalk, 1);
    const auto a = probe_sensitivity(model, x, small);
    const auto b = probe_sensitivity(model, x, small);
    REQUIRE(a.layers.size() == 3);
    CHECK(a.find(2) == nullptr);
    CHECK(a.base_error > 0.0);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      CHECK(a.layers[i].index == b.layers[i].index);
      CHECK(a.layers[i].degradation_ratio == b.layers[i].degradation_ratio);
    }
    CHECK_THROWS_AS(probe_sensitivity(model, x, {2, 16, std::set<std::size_t>{9}}), ConfigError);
  }
}

TEST_CASE("schedule documents") {
  const auto schedule = build_schedule(report_from({1.0, 1.2, 1.0 / 3.0}, {3}), 8, 1.05, 3);

  SUBCASE("save then load is structurally equal and byte stable") {
    const auto path = std::filesystem::temp_directory_path() / "tokred_schedule_roundtrip.yaml";
    save_schedule(path, schedule);
    const auto loaded = load_schedule(path);
    CHECK(loaded == schedule);
    CHECK(serialize_schedule(loaded) == read_text_file(path));
    std::filesystem::remove(path);
  }

  SUBCASE("hand-written three-layer file") {
    const auto s = parse_schedule(
        "base_r_kv: 5\n"
        "threshold: 1.05\n"
        "multiplier_l: 2\n"
        "layers:\n"
        "  - index: 0\n"
        "    ratio: 1.3\n"
        "    assigned_r_kv: 5\n"
        "    excluded: false\n"
        "  - index: 1\n"
        "    ratio: 0.98\n"
        "    assigned_r_kv: 10\n"
        "    excluded: false\n"
        "  - index: 2\n"
        "    assigned_r_kv: 5\n"
        "    excluded: true\n");
    CHECK(s.assignments() == std::vector<std::size_t>{5, 10, 5});
    CHECK(s.tier_of(0) == Tier::High);
    CHECK(s.tier_of(1) == Tier::Low);
    CHECK(s.tier_of(2) == Tier::Excluded);
  }

  SUBCASE("unknown field is named") {
    try {
      parse_schedule("base_r_kv: 8\nthreshold: 1.05\nmultiplier_l: 3\nlayers: []\nbogus: 1\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.field() == "bogus");
      CHECK(e.line() == 5);
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }

  SUBCASE("malformed values carry line and field") {
    try {
      parse_schedule("base_r_kv: 8\nthreshold: 1.05\nmultiplier_l: 3\nlayers:\n  - index: x\n    assigned_r_kv: 8\n    excluded: false\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.field() == "index");
      CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(parse_schedule("base_r_kv: [1\n"), ParseError);
    CHECK_THROWS_AS(parse_schedule("threshold: 1.05\nmultiplier_l: 3\nlayers: []\n"), ParseError);
    CHECK_THROWS_AS(parse_schedule("base_r_kv: 8\nthreshold: 1.05\nmultiplier_l: 3\nlayers:\n"
                                   "  - {index: 0, ratio: 1.0, assigned_r_kv: 8, excluded: false}\n"),
                    ParseError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_schedule("/nonexistent/tokred/schedule.yaml"), ParseError);
  }
}
