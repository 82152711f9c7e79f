#include <doctest.h>

#include <cmath>
#include <random>

#include "mspgd/errors.hpp"
#include "mspgd/metrics.hpp"

using namespace mspgd;
using namespace mspgd::metrics;

TEST_CASE("relative standard deviation") {
  const std::vector<double> s{1.0, 3.0};
  CHECK(rsd(s) == doctest::Approx(70.7107).epsilon(1e-5));
  const std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK(rsd(flat) == 0.0);
  CHECK_THROWS_AS(rsd(std::vector<double>{1.0}), NumericalError);
  CHECK_THROWS_AS(rsd(std::vector<double>{-1.0, -2.0}), NumericalError);
}

TEST_CASE("dB improvement") {
  const std::vector<double> open{0.10, 0.10};
  CHECK(improvement_db(open, std::vector<double>{0.2042, 0.2042}) == doctest::Approx(3.10).epsilon(1e-3));
  // Published mean coupled powers of 3.0 and 7.6 give 4.04 dB.
  CHECK(improvement_db(std::vector<double>{3.0}, std::vector<double>{7.6}) == doctest::Approx(4.0369).epsilon(1e-4));
  CHECK(improvement_db(open, open) == 0.0);
  CHECK_THROWS_AS(improvement_db(std::vector<double>{}, open), NumericalError);
  CHECK_THROWS_AS(improvement_db(std::vector<double>{0.0}, open), NumericalError);
}

TEST_CASE("metrics are invariant under a common scale") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.6);
  std::vector<double> a(500), b(500), a2, b2;
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = 0.2 + 0.5 * u(rng);
  for (double v : a) a2.push_back(7.5 * v);
  for (double v : b) b2.push_back(7.5 * v);
  CHECK(improvement_db(a2, b2) == doctest::Approx(improvement_db(a, b)).epsilon(1e-12));
  CHECK(rsd(a2) == doctest::Approx(rsd(a)).epsilon(1e-12));
}

TEST_CASE("histogram") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  std::vector<double> s(1000);
  for (auto& v : s) v = u(rng);
  const auto h = histogram(s, 25);
  CHECK(h.counts.size() == 25);
  CHECK(h.total() == s.size());
  CHECK(h.lo == 0.0);
  CHECK(h.hi == doctest::Approx(*std::max_element(s.begin(), s.end())));
  CHECK(h.bin_center(0) == doctest::Approx(h.bin_width() / 2));
  CHECK_THROWS(histogram(s, 1));

  const auto fixed = histogram(std::vector<double>{0.1, 0.1, 0.9}, 2, 1.0);
  CHECK(fixed.counts == std::vector<std::uint64_t>{2, 1});
  CHECK(histogram_csv(fixed).rfind("bin_center,count\n", 0) == 0);
}

TEST_CASE("quantiles") {
  const std::vector<double> s{4, 1, 3, 2, 5};
  CHECK(quantile(s, 0.5) == 3.0);
  CHECK(quantile(s, 0.0) == 1.0);
  CHECK(quantile(s, 1.0) == 5.0);
  CHECK(interquartile_range(s) == doctest::Approx(2.0));
}

TEST_CASE("run summary is consistent with the series") {
  const std::vector<double> open{0.1, 0.2, 0.05, 0.15};
  const std::vector<double> closed{0.3, 0.25, 0.28, 0.35};
  const auto s = summarize("unit", 5.4, open, closed, 2.0, {1, 2}, 10);
  CHECK(s.mean_eta_open == doctest::Approx(mean(open)));
  CHECK(s.mean_eta_closed == doctest::Approx(mean(closed)));
  CHECK(s.improvement_db == doctest::Approx(improvement_db(open, closed)));
  CHECK(s.rsd_open == doctest::Approx(rsd(open)));
  CHECK(s.rsd_closed == doctest::Approx(rsd(closed)));
  CHECK(s.histogram_open.hi == s.histogram_closed.hi);
  CHECK(s.histogram_open.total() == 4);
  const auto kv = to_key_value(s);
  CHECK(kv.find("improvement_db = ") != std::string::npos);
  const auto header = csv_header();
  const auto header_fields = std::count(header.begin(), header.end(), ',');
  const auto row = to_csv_row(s);
  CHECK(std::count(row.begin(), row.end(), ',') == header_fields);
}
