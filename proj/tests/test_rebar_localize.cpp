#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "rebar2bim/rebar_localize.hpp"
#include "rebar2bim/synth_oracle.hpp"
#include "support.hpp"

using namespace rebar2bim;
using testing::throws_code;

namespace {

BScan blank(int rows, int cols) {
  BScan s;
  s.device.n_samples = rows;
  s.n_traces = cols;
  s.amplitudes = Grid(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  s.scan_id = "t";
  return s;
}

// Direct evaluation of the clamped sliding-mean formula.
Grid sliding_mean_oracle(const Grid& in, int window) {
  const int half = window / 2;
  const int cols = static_cast<int>(in.cols());
  Grid out(in.rows(), in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0;
      int n = 0;
      for (int k = c - half; k <= c + half; ++k) {
        if (k < 0 || k >= cols) continue;
        sum += in(r, static_cast<std::size_t>(k));
        ++n;
      }
      out(r, static_cast<std::size_t>(c)) = std::abs(in(r, static_cast<std::size_t>(c)) - sum / n);
    }
  }
  return out;
}

ScanLayout one_bar_layout(int n_traces, int trace, int depth_px) {
  const DeviceProfile dev;
  ScanLayout l;
  l.scan_id = "syn";
  l.n_traces = n_traces;
  l.span_m = n_traces * dev.trace_spacing;
  l.thickness_m = 0.3;
  l.bars = {{trace * dev.trace_spacing, depth_px * dev.depth_per_sample()}};
  return l;
}

bool near(const RebarPick& p, int trace, int depth, int tol = 2) {
  return std::abs(p.trace_px - trace) <= tol && std::abs(p.depth_px - depth) <= tol;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("constant rows vanish when the window covers the scan") {
    BScan s = blank(4, 7);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 7; ++c) s.amplitudes(r, c) = 3.5 + static_cast<double>(r);
    }
    DetectorParams p;
    p.background_window = 15;
    const BScan out = preprocess(s, p);
    for (double v : out.amplitudes.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("zero grid stays zero") {
    const BScan out = preprocess(blank(5, 9), DetectorParams{});
    CHECK(out.amplitudes == Grid(5, 9));
  }

  TEST_CASE("5x5 impulse matches the sliding-mean oracle") {
    BScan s = blank(5, 5);
    s.amplitudes(2, 2) = 1.0;
    DetectorParams p;
    p.background_window = 3;
    const BScan out = preprocess(s, p);
    const Grid expected = sliding_mean_oracle(s.amplitudes, 3);
    for (std::size_t i = 0; i < expected.data().size(); ++i) {
      CHECK(out.amplitudes.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
    }
    // Frozen from the oracle: 1 - 1/3 at the impulse, 1/3 beside it.
    CHECK(out.amplitudes(2, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(out.amplitudes(2, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(out.amplitudes(2, 0) == doctest::Approx(0.0));
    for (std::size_t c = 0; c < 5; ++c) {
      if (c != 2) CHECK(out.amplitudes(2, c) < out.amplitudes(2, 2));
    }
  }

  TEST_CASE("random grids match the oracle and keep metadata") {
    SeededRng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      BScan s = blank(3 + trial % 4, 10 + 3 * trial);
      for (double& v : s.amplitudes.data()) v = rng.normal();
      s.timestamp = 42 + trial;
      s.direction = ScanDirection::D2;
      DetectorParams p;
      p.background_window = 1 + 2 * trial;
      const BScan out = preprocess(s, p);
      const Grid expected = sliding_mean_oracle(s.amplitudes, p.background_window);
      for (std::size_t i = 0; i < expected.data().size(); ++i) {
        CHECK(out.amplitudes.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-9));
      }
      CHECK(out.timestamp == s.timestamp);
      CHECK(out.direction == s.direction);
      CHECK(out.n_traces == s.n_traces);
    }
  }
}

TEST_SUITE("hyperbola_template") {
  TEST_CASE("apex row at zero offset") {
    const DeviceProfile dev;
    for (int z0 : {1, 37, 200, 624}) CHECK(hyperbola_template(z0, dev, 10).at(0) == z0);
  }

  TEST_CASE("hand-evaluated arm at offset 20") {
    DeviceProfile dev;  // dx 5 mm, dz 0.48 mm
    CHECK(hyperbola_template(200, dev, 25).at(20) == 289);
    CHECK(hyperbola_template(200, dev, 25).at(-20) == 289);
  }

  TEST_CASE("symmetric in the offset") {
    const DeviceProfile dev;
    for (int z0 = 1; z0 < dev.n_samples; z0 += 13) {
      const auto curve = hyperbola_template(z0, dev, 40);
      for (int d = 1; d <= 40; ++d) CHECK(curve.at(d) == curve.at(-d));
    }
  }

  TEST_CASE("apex outside the scan") {
    const DeviceProfile dev;
    CHECK(throws_code([&] { hyperbola_template(0, dev, 5); }, ErrorCode::DepthOob));
    CHECK(throws_code([&] { hyperbola_template(625, dev, 5); }, ErrorCode::DepthOob));
  }
}

TEST_SUITE("detect_rebars") {
  TEST_CASE("zero scan has no picks") {
    CHECK(detect_rebars(blank(625, 300), DetectorParams{}).empty());
    CHECK(locate_rebars(blank(625, 300), DetectorParams{}).empty());
  }

  TEST_CASE("one planted hyperbola at (100, 200)") {
    const BScan s = synth_bscan(one_bar_layout(1000, 100, 200), DeviceProfile{}, 0, 0);
    const auto picks = locate_rebars(s, DetectorParams{});
    REQUIRE(picks.size() == 1);
    CHECK(near(picks[0], 100, 200));
    CHECK(picks[0].score > 0.55);
    CHECK(picks[0].score <= 1.0);
  }

  TEST_CASE("two hyperbolas 200 traces apart give two picks") {
    ScanLayout l = one_bar_layout(1000, 300, 150);
    l.bars.push_back({500 * 0.005, 180 * DeviceProfile{}.depth_per_sample()});
    const auto picks = locate_rebars(synth_bscan(l, DeviceProfile{}, 0, 0), DetectorParams{});
    REQUIRE(picks.size() == 2);
    CHECK(near(picks[0], 300, 150));
    CHECK(near(picks[1], 500, 180));
  }

  TEST_CASE("50 random single-bar layouts recover the apex") {
    SeededRng rng(2024);
    const DeviceProfile dev;
    for (int trial = 0; trial < 50; ++trial) {
      const int n_traces = rng.uniform_int(400, 1200);
      const int trace = rng.uniform_int(30, n_traces - 31);
      const int depth = rng.uniform_int(40, 300);
      const ScanLayout l = one_bar_layout(n_traces, trace, depth);
      const auto [t_true, z_true] = planted_apex(l.bars[0], l, dev);
      const auto picks = locate_rebars(synth_bscan(l, dev, 0, 0), DetectorParams{});
      CAPTURE(trial);
      CAPTURE(t_true);
      CAPTURE(z_true);
      REQUIRE(picks.size() == 1);
      CHECK(near(picks[0], t_true, z_true));
    }
  }

  TEST_CASE("shifting the bar shifts the pick") {
    const DeviceProfile dev;
    const auto base = locate_rebars(synth_bscan(one_bar_layout(800, 200, 180), dev, 0, 0), DetectorParams{});
    REQUIRE(base.size() == 1);
    for (int shift : {1, 7, 50, 333}) {
      const auto moved =
          locate_rebars(synth_bscan(one_bar_layout(800, 200 + shift, 180), dev, 0, 0), DetectorParams{});
      REQUIRE(moved.size() == 1);
      CHECK(std::abs(moved[0].trace_px - (base[0].trace_px + shift)) <= 2);
    }
  }

  TEST_CASE("output is sorted by trace then depth") {
    SeededRng rng(17);
    const DeviceProfile dev;
    for (int trial = 0; trial < 5; ++trial) {
      ScanLayout l = one_bar_layout(1000, 60, 100);
      l.bars.clear();
      for (int k = 0; k < 5; ++k) {
        l.bars.push_back({(60 + 180 * k + rng.uniform_int(0, 40)) * dev.trace_spacing,
                          rng.uniform_int(60, 250) * dev.depth_per_sample()});
      }
      const auto picks = locate_rebars(synth_bscan(l, dev, 0.05, trial), DetectorParams{});
      CHECK(std::is_sorted(picks.begin(), picks.end(), [](const RebarPick& a, const RebarPick& b) {
        return a.trace_px != b.trace_px ? a.trace_px < b.trace_px : a.depth_px < b.depth_px;
      }));
      for (std::size_t i = 1; i < picks.size(); ++i) CHECK(picks[i - 1].trace_px < picks[i].trace_px);
    }
  }

  TEST_CASE("same input, same picks") {
    const BScan s = synth_bscan(one_bar_layout(600, 300, 120), DeviceProfile{}, 0.2, 9);
    CHECK(locate_rebars(s, DetectorParams{}) == locate_rebars(s, DetectorParams{}));
  }

  TEST_CASE("parameter ranges are enforced") {
    const BScan s = blank(625, 50);
    DetectorParams p;
    p.correlation_threshold = 0;
    CHECK(throws_code([&] { detect_rebars(s, p); }, ErrorCode::Oob));
    p = DetectorParams{};
    p.nms_radius = 0;
    CHECK(throws_code([&] { detect_rebars(s, p); }, ErrorCode::Oob));
    p = DetectorParams{};
    p.depth_grid = {0};
    CHECK(throws_code([&] { detect_rebars(s, p); }, ErrorCode::Oob));
    p.depth_grid = {625};
    CHECK(throws_code([&] { detect_rebars(s, p); }, ErrorCode::Oob));
  }
}

TEST_SUITE("pick conversion") {
  TEST_CASE("ratio examples") {
    CHECK(pick_to_ratio(0, 1000) == 0.0);
    CHECK(pick_to_ratio(500, 1000) == 0.5);
    CHECK(pick_to_ratio(999, 1000) == 0.999);
  }

  TEST_CASE("depth examples") {
    CHECK(pick_to_depth(0, 625, 0.30) == 0.0);
    CHECK(pick_to_depth(625, 625, 0.30) == doctest::Approx(0.30).epsilon(1e-15));
    CHECK(pick_to_depth(125, 625, 0.30) == doctest::Approx(0.06).epsilon(1e-15));
  }

  TEST_CASE("out of range") {
    CHECK(throws_code([] { pick_to_ratio(1000, 1000); }, ErrorCode::Oob));
    CHECK(throws_code([] { pick_to_ratio(-1, 1000); }, ErrorCode::Oob));
    CHECK(throws_code([] { pick_to_ratio(0, 1); }, ErrorCode::Oob));
    CHECK(throws_code([] { pick_to_depth(626, 625, 0.3); }, ErrorCode::Oob));
    CHECK(throws_code([] { pick_to_depth(-1, 625, 0.3); }, ErrorCode::Oob));
    CHECK(throws_code([] { pick_to_depth(0, 1, 0.3); }, ErrorCode::Oob));
  }

  TEST_CASE("depth is linear in the pixel row and bounded") {
    SeededRng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const int h = rng.uniform_int(2, 2000);
      const int d = rng.uniform_int(0, h);
      const double dm = rng.uniform(0.01, 2.0);
      const double v = pick_to_depth(d, h, dm);
      CHECK(v >= 0.0);
      CHECK(v <= dm);
      if (d > 0) {
        for (int k = 2; k * d <= h && k < 6; ++k) {
          CHECK(pick_to_depth(k * d, h, dm) == doctest::Approx(k * v).epsilon(1e-12));
        }
      }
      const int l = rng.uniform_int(2, 5000);
      const double r = pick_to_ratio(rng.uniform_int(0, l - 1), l);
      CHECK(r >= 0.0);
      CHECK(r < 1.0);
    }
  }
}

TEST_CASE("picks.json round trip") {
  const std::vector<ScanPicks> all{{"a", {{1, 2, 0.75}, {10, 20, 0.5}}}, {"b", {}}};
  const auto back = picks_from_json(picks_to_json(all));
  REQUIRE(back.size() == 2);
  CHECK(back[0].scan_id == "a");
  CHECK(back[0].picks == all[0].picks);
  CHECK(back[1].picks.empty());
  CHECK(throws_code([] { picks_from_json(R"([{"scan_id": "a"}])"); }, ErrorCode::Schema));
}
