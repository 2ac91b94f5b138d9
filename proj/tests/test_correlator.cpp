#include <algorithm>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "zpl/correlator.hpp"
#include "zpl/emission.hpp"
#include "zpl/random.hpp"
#include "zpl/units.hpp"

using namespace zpl;

TEST_SUITE_BEGIN("correlator");

namespace {

PhotonStream poisson_stream(double rate_cps, double duration_s, std::uint64_t seed,
                            Origin origin = Origin::Background) {
  PhotonStream s;
  s.duration_ps = seconds_to_ps(duration_s);
  Rng rng(seed);
  const double mean_gap_ps = kPsPerS / rate_cps;
  std::int64_t t = 0;
  for (;;) {
    t += static_cast<std::int64_t>(std::llround(rng.exponential(mean_gap_ps)));
    if (t >= s.duration_ps) break;
    s.tags.push_back({t, origin, -1});
  }
  return s;
}

PhotonStream stream_of(std::vector<std::int64_t> times, double duration_s) {
  PhotonStream s;
  s.duration_ps = seconds_to_ps(duration_s);
  for (std::int64_t t : times) s.tags.push_back({t, Origin::Zpl, 0});
  return s;
}

}  // namespace

TEST_CASE("beamsplit extremes and exact partition") {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{301, 0.002, 1};
  const PhotonStream input = simulate_cw_stream(mol, 3.5, cfg);

  auto [none, all] = beamsplit(input, 0.0, 302);
  CHECK(none.empty());
  CHECK(all.tags == input.tags);

  auto [a, b] = beamsplit(input, 0.5, 303);
  CHECK(a.size() + b.size() == input.size());
  const double n = static_cast<double>(input.size());
  CHECK(std::abs(static_cast<double>(a.size()) - 0.5 * n) < 3.0 * std::sqrt(n * 0.25));

  // merging the halves reproduces the input exactly
  const PhotonStream merged = merge_streams(a, b);
  CHECK(merged.tags == input.tags);

  CHECK_THROWS_AS(beamsplit(input, 1.5, 304), std::invalid_argument);
}

TEST_CASE("start-stop basics") {
  const PhotonStream starts = stream_of({0}, 1e-6);
  const PhotonStream stops = stream_of({5000}, 1e-6);  // 5 ns
  const CoincidenceHistogram h = start_stop_histogram(starts, stops, 512, 100000);
  CHECK(h.total_counts() == 1);
  CHECK(h.counts[5000 / 512] == 1);
  CHECK(h.n_starts == 1);

  // only the FIRST stop after each start is recorded
  const PhotonStream two_stops = stream_of({1000, 2000}, 1e-6);
  const CoincidenceHistogram h2 = start_stop_histogram(starts, two_stops, 512, 100000);
  CHECK(h2.total_counts() == 1);
  CHECK(h2.counts[1000 / 512] == 1);

  // stops at or before the start are ignored, delays beyond tau_max too
  const PhotonStream late = stream_of({200000}, 1e-6);
  CHECK(start_stop_histogram(starts, late, 512, 100000).total_counts() == 0);
}

TEST_CASE("unsorted input is rejected") {
  PhotonStream bad;
  bad.duration_ps = 1000000;
  bad.tags = {{500, Origin::Zpl, 0}, {100, Origin::Zpl, 0}};
  const PhotonStream good = stream_of({10}, 1e-6);
  CHECK_THROWS_AS(start_stop_histogram(bad, good, 512, 100000), std::invalid_argument);
  CHECK_THROWS_AS(full_correlation_histogram(good, bad, 512, -1000, 1000), std::invalid_argument);
}

TEST_CASE("start-stop of Poisson stops follows the first-arrival density") {
  // starts on a sparse grid, stops Poisson at rate r: the first-stop delay
  // density is r exp(-r tau), so bin k expects n_starts (e^{-r lo} - e^{-r hi})
  const double rate = 2e6;
  const double duration = 0.5;
  PhotonStream starts;
  starts.duration_ps = seconds_to_ps(duration);
  for (std::int64_t t = 0; t < starts.duration_ps; t += 5'000'000)  // every 5 us
    starts.tags.push_back({t, Origin::Zpl, 0});
  const PhotonStream stops = poisson_stream(rate, duration, 311);

  const std::int64_t bin = 20000, tau_max = 2'000'000;  // 20 ns bins to 2 us
  const CoincidenceHistogram h = start_stop_histogram(starts, stops, bin, tau_max);

  const double r_per_ps = rate / kPsPerS;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < h.n_bins(); ++i) {
    const double lo = static_cast<double>(i) * static_cast<double>(bin);
    const double hi = lo + static_cast<double>(bin);
    const double expected =
        static_cast<double>(h.n_starts) * (std::exp(-r_per_ps * lo) - std::exp(-r_per_ps * hi));
    if (std::abs(static_cast<double>(h.counts[i]) - expected) > 3.0 * std::sqrt(expected)) ++outside;
  }
  CHECK(static_cast<double>(outside) / static_cast<double>(h.n_bins()) < 0.03);
}

TEST_CASE("full correlation of independent Poisson streams is flat") {
  const double ra = 1e6, rb = 1.5e6, duration = 0.2;
  const PhotonStream a = poisson_stream(ra, duration, 313);
  const PhotonStream b = poisson_stream(rb, duration, 317);
  const std::int64_t bin = 50000, tau = 1'000'000;
  const CoincidenceHistogram h = full_correlation_histogram(a, b, bin, -tau, tau);
  const double expected = ra * rb * duration * static_cast<double>(bin) / kPsPerS;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < h.n_bins(); ++i)
    if (std::abs(static_cast<double>(h.counts[i]) - expected) > 3.0 * std::sqrt(expected)) ++outside;
  CHECK(static_cast<double>(outside) / static_cast<double>(h.n_bins()) < 0.03);
}

TEST_CASE("full correlation pair symmetry") {
  const PhotonStream a = poisson_stream(5e5, 0.05, 331);
  const PhotonStream b = poisson_stream(7e5, 0.05, 337);
  const std::int64_t bin = 1000, tau = 200000;
  const CoincidenceHistogram ab = full_correlation_histogram(a, b, bin, -tau, tau);
  const CoincidenceHistogram ba = full_correlation_histogram(b, a, bin, -tau, tau);
  REQUIRE(ab.n_bins() == ba.n_bins());
  for (std::size_t i = 0; i < ab.n_bins(); ++i)
    CHECK(ab.counts[i] == ba.counts[ab.n_bins() - 1 - i]);

  // one lonely tag against itself: nothing lands away from zero
  const PhotonStream one = stream_of({12345}, 1e-6);
  const CoincidenceHistogram self = full_correlation_histogram(one, one, 100, 50, 10000);
  CHECK(self.total_counts() == 0);
}

TEST_CASE("start-stop equals full correlation at low rates") {
  const double rate = 1e4, duration = 40.0;  // rate * tau_max = 0.005
  const PhotonStream a = poisson_stream(rate, duration, 341);
  const PhotonStream b = poisson_stream(rate, duration, 347);
  const std::int64_t bin = 50000, tau = 500'000;
  const CoincidenceHistogram ss = start_stop_histogram(a, b, bin, tau);
  const CoincidenceHistogram full = full_correlation_histogram(a, b, bin, 0, tau);
  REQUIRE(ss.n_bins() == full.n_bins());
  for (std::size_t i = 0; i < ss.n_bins(); ++i) {
    REQUIRE(full.counts[i] > 0);
    const double rel = std::abs(static_cast<double>(ss.counts[i]) -
                                static_cast<double>(full.counts[i])) /
                       static_cast<double>(full.counts[i]);
    CHECK(rel < 0.02);
  }
}

TEST_CASE("antibunching: the zero-delay bin of a split single-emitter stream is empty") {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{353, 0.005, 1};
  const PhotonStream stream = simulate_cw_stream(mol, 0.84, cfg);
  auto [a, b] = beamsplit(stream, 0.5, 354);

  std::int64_t min_gap = stream.duration_ps;
  for (std::size_t i = 1; i < stream.tags.size(); ++i)
    min_gap = std::min(min_gap, stream.tags[i].time_ps - stream.tags[i - 1].time_ps);
  REQUIRE(min_gap > 1);

  const std::int64_t bin = std::max<std::int64_t>(min_gap - 1, 1);
  const CoincidenceHistogram h = full_correlation_histogram(a, b, bin, -10 * bin, 10 * bin);
  // the two bins straddling zero delay hold every pair closer than one gap
  CHECK(h.counts[h.n_bins() / 2] == 0);
  CHECK(h.counts[h.n_bins() / 2 - 1] == 0);
}

TEST_CASE("symmetric start-stop covers both delay signs") {
  const PhotonStream a = stream_of({0, 100000}, 1e-6);
  const PhotonStream b = stream_of({3000}, 1e-6);
  const CoincidenceHistogram h = symmetric_start_stop_histogram(a, b, 1000, 50000);
  CHECK(h.n_starts == 3);
  // a[0] -> b[0] at +3 ns, b[0] -> a[1] at +97 ns (outside), b->a none else
  CHECK(h.total_counts() == 1);
  const auto idx = static_cast<std::size_t>((3000 + 50000) / 1000);
  CHECK(h.counts[idx] == 1);
}

TEST_CASE("peak areas on a synthetic comb") {
  // triangular peaks at multiples of 1000 ps on a flat floor of 2 per bin
  CoincidenceHistogram h;
  h.bin_width_ps = 10;
  h.tau_min_ps = -5000;
  h.tau_max_ps = 5000;
  h.mode = HistogramMode::Full;
  h.counts.assign(1000, 2);
  auto add_peak = [&](std::int64_t center, std::uint64_t amp) {
    for (std::int64_t k = -20; k <= 20; ++k) {
      const std::int64_t tau = center + k * 10;
      const auto idx = static_cast<std::size_t>((tau - h.tau_min_ps) / h.bin_width_ps);
      h.counts[idx] += amp - static_cast<std::uint64_t>(std::abs(k)) * (amp / 25);
    }
  };
  for (int k = -4; k <= 4; ++k)
    if (k != 0) add_peak(k * 1000, 100);

  const PeakTable table = peak_areas(h, 1000, 1000, 4);
  REQUIRE(table.peaks.size() == 9);
  CHECK(table.peaks[4].index == 0);
  // central window holds only floor counts: 100 bins on each side of 0 times 2
  const std::uint64_t floor_area = table.peaks[4].area;
  CHECK(floor_area == 2 * 100);
  CHECK(table.central_to_lateral_ratio ==
        doctest::Approx(static_cast<double>(floor_area) /
                        static_cast<double>(table.peaks[3].area)));

  // an ideal comb with no floor has a vanishing central ratio
  for (auto& c : h.counts) c -= 2;
  const PeakTable clean = peak_areas(h, 1000, 1000, 4);
  CHECK(clean.peaks[4].area == 0);
  CHECK(clean.central_to_lateral_ratio == 0.0);

  CHECK_THROWS_AS(peak_areas(h, 1000, 1200, 4), std::invalid_argument);  // window overlap
  CHECK_THROWS_AS(peak_areas(h, 0, 100, 4), std::invalid_argument);
}

TEST_CASE("performance: linear-time correlation of 2e7 tags" * doctest::skip(true)) {
  // exercised by the acceptance suite (criterion 8); kept here for manual runs
  const PhotonStream a = poisson_stream(1e6, 10.0, 361);
  const PhotonStream b = poisson_stream(1e6, 10.0, 367);
  const auto t0 = std::chrono::steady_clock::now();
  const CoincidenceHistogram h = full_correlation_histogram(a, b, 1000, -500000, 500000);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(h.total_counts() > 0);
  CHECK(dt < 10.0);
}

TEST_SUITE_END();
