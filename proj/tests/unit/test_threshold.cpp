#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fallcloud/synthetic.hpp"
#include "fallcloud/threshold.hpp"
#include "unit/helpers.hpp"

using namespace fallcloud;
using testutil::from_rms;

namespace {

Window window_with_peak(double peak, Label label = Label::Fall) {
  Window w;
  w.samples = {{0.5, 0, 0}, {peak, 0, 0}, {1.0, 0, 0}};
  w.label = label;
  w.dataset = "test";
  return w;
}

}  // namespace

TEST_CASE("fit_threshold uses the weakest training fall") {
  const std::vector<double> peaks{30, 25, 40};
  CHECK(fit_threshold_from_peaks(peaks, 1.0).tau == 25.0);
  CHECK(fit_threshold_from_peaks(peaks, 0.9).tau == doctest::Approx(22.5).epsilon(1e-15));

  std::vector<Window> ws;
  for (double p : peaks) ws.push_back(window_with_peak(p));
  ws.push_back(window_with_peak(1.0, Label::Adl));  // ignored
  const auto th = fit_threshold(ws, 0.9);
  CHECK(th.tau == doctest::Approx(22.5));
  CHECK(th.fall_count == 3);
  CHECK(th.safety_factor == 0.9);
  CHECK(th.datasets == std::vector<std::string>{"test"});
}

TEST_CASE("fit_threshold errors") {
  CHECK_ERRC(fit_threshold(std::vector<Window>{window_with_peak(3, Label::Adl)}), Errc::CannotFit);
  CHECK_ERRC(fit_threshold(std::vector<Window>{}), Errc::CannotFit);
  const std::vector<double> peaks{1.0};
  CHECK_ERRC(fit_threshold_from_peaks(peaks, 0.0), Errc::Parameter);
  CHECK_ERRC(fit_threshold_from_peaks(peaks, 1.5), Errc::Parameter);
  CHECK_NOTHROW(fit_threshold_from_peaks(peaks, 1.0));
}

TEST_CASE("gate boundary semantics") {
  Threshold th;
  th.tau = 25;
  CHECK(gate({3, 4, 0}, th) == GateDecision::StayMobile);
  th.tau = 5;
  CHECK(gate({3, 4, 0}, th) == GateDecision::Escalate);
  th.tau = 0;
  CHECK(gate({0, 0, 0}, th) == GateDecision::Escalate);
  CHECK(gate({1e-300, 0, 0}, th) == GateDecision::Escalate);
}

TEST_CASE("fitted threshold retains every training fall") {
  SyntheticSpec spec;
  spec.falls = 150;
  spec.adls = 40;
  const auto recs = generate_synthetic(spec);
  const auto windows = segment_all(recs, DatasetConfig::synthetic());
  for (double safety : {1.0, 0.9, 0.5}) {
    const auto th = fit_threshold(windows, safety);
    std::size_t falls = 0, escalated = 0;
    for (const auto& w : windows) {
      if (w.label != Label::Fall) continue;
      ++falls;
      const auto series = rms_series(w.samples);
      const auto peak = static_cast<std::size_t>(std::max_element(series.begin(), series.end()) - series.begin());
      escalated += gate(w.samples[peak], th) == GateDecision::Escalate;
      CHECK(escalates(w, th));
    }
    CHECK(falls == 150);
    CHECK(escalated == falls);
    CHECK(th.tau <= safety * fit_threshold(windows, 1.0).tau);
  }
}

TEST_CASE("gate is monotone in tau and invariant to axis permutation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-4, 4);
  std::vector<TriaxialSample> samples(2000);
  for (auto& s : samples) s = {d(rng), d(rng), d(rng)};
  std::vector<double> taus{0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 8.0};
  std::vector<std::size_t> previous;
  for (auto it = taus.rbegin(); it != taus.rend(); ++it) {
    Threshold th;
    th.tau = *it;
    std::vector<std::size_t> escalated;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const auto g = gate(s, th);
      CHECK(gate({s.y, s.z, s.x}, th) == g);
      CHECK(gate({s.z, s.x, s.y}, th) == g);
      CHECK(gate({s.y, s.x, s.z}, th) == g);
      if (g == GateDecision::Escalate) escalated.push_back(i);
    }
    // Lower tau: superset of the previously escalated samples.
    CHECK(std::includes(escalated.begin(), escalated.end(), previous.begin(), previous.end()));
    previous = escalated;
  }
  CHECK(previous.size() == samples.size());
}

TEST_CASE("gate_stream") {
  Threshold th;
  th.tau = 3.0;
  SUBCASE("all zero stream") {
    const auto r = gate_stream(from_rms(std::vector<double>(100, 0.0)), th, 10, 5);
    CHECK(r.events.empty());
    CHECK(r.partial_triggers.empty());
  }
  SUBCASE("single spike") {
    std::vector<double> v(100, 1.0);
    v[40] = 6.0;
    const auto r = gate_stream(from_rms(v), th, 10, 5);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].trigger_index == 40);
    CHECK(r.events[0].peak_index == 40);
    CHECK(r.events[0].window.start == 35);
    CHECK(r.events[0].window.samples.size() == 10);
    CHECK(r.events[0].window.samples[5].x == 6.0);
  }
  SUBCASE("peak after the trigger is centred") {
    std::vector<double> v(100, 1.0);
    v[40] = 3.5;
    v[42] = 7.0;
    const auto r = gate_stream(from_rms(v), th, 10, 5);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].peak_index == 42);
    CHECK(r.events[0].window.start == 37);
  }
  SUBCASE("refractory period suppresses nearby spikes") {
    std::vector<double> v(100, 1.0);
    v[40] = v[45] = v[49] = 6.0;
    CHECK(gate_stream(from_rms(v), th, 10, 5).events.size() == 1);
  }
  SUBCASE("two spikes further apart than a window") {
    std::vector<double> v(100, 1.0);
    v[20] = 6.0;
    v[60] = 6.0;
    const auto r = gate_stream(from_rms(v), th, 10, 5);
    REQUIRE(r.events.size() == 2);
    CHECK(r.events[0].trigger_index == 20);
    CHECK(r.events[1].trigger_index == 60);
  }
  SUBCASE("spike too close to the end is partial") {
    std::vector<double> v(50, 1.0);
    v[47] = 6.0;
    const auto r = gate_stream(from_rms(v), th, 10, 5);
    CHECK(r.events.empty());
    CHECK(r.partial_triggers == std::vector<std::size_t>{47});
  }
  SUBCASE("spike at the stream start is shifted right") {
    std::vector<double> v(50, 1.0);
    v[1] = 6.0;
    const auto r = gate_stream(from_rms(v), th, 10, 5);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].window.start == 0);
  }
  SUBCASE("parameter checks") {
    CHECK_ERRC(gate_stream(from_rms({1}), th, 10, 10), Errc::Parameter);
    CHECK_ERRC(gate_stream(from_rms({1}), th, 0, 0), Errc::Parameter);
  }
}

TEST_CASE("gate_stream counts spikes of synthetic jumps") {
  // ADL recording with landings far apart.
  std::vector<double> v(1000, 1.0);
  const std::vector<std::size_t> at{100, 300, 520, 800};
  for (auto i : at) v[i] = 5.0;
  Threshold th;
  th.tau = 2.0;
  const auto r = gate_stream(from_rms(v), th, 100, 50);
  REQUIRE(r.events.size() == at.size());
  for (std::size_t k = 0; k < at.size(); ++k) CHECK(r.events[k].peak_index == at[k]);
}

TEST_CASE("threshold file round trip is bit stable") {
  Threshold th;
  th.tau = 0.1 + 0.2;
  th.safety_factor = 0.9;
  th.fall_count = 1798;
  th.datasets = {"sisfall", "mobiact"};
  std::stringstream ss;
  write_threshold(ss, th);
  const auto back = read_threshold(ss);
  CHECK(back == th);
  CHECK(std::bit_cast<std::uint64_t>(back.tau) == std::bit_cast<std::uint64_t>(th.tau));
}

TEST_CASE("threshold file errors") {
  std::istringstream bad_version("version=2\ntau=1\n");
  CHECK_ERRC(read_threshold(bad_version), Errc::VersionMismatch);
  std::istringstream no_tau("version=1\n");
  CHECK_ERRC(read_threshold(no_tau), Errc::Corrupt);
  std::istringstream garbage("version=1\ntau=abc\n");
  CHECK_ERRC(read_threshold(garbage), Errc::Corrupt);
  std::istringstream negative("version=1\ntau=-1\n");
  CHECK_ERRC(read_threshold(negative), Errc::Corrupt);
}
