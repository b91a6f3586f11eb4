#include <algorithm>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "sofic/packing.hpp"

using namespace sofic;

namespace {

// Points of a random metric space: l1 distances between random vectors,
// scaled into [0, 1].
std::vector<std::vector<double>> random_family(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t dim = 1 + rng() % 4;
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = unit(rng);
  }
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < dim; ++k) d[i][j] += std::abs(pts[i][k] - pts[j][k]);
      d[i][j] /= static_cast<double>(dim);
    }
  }
  return d;
}

double hamming(const std::string& a, const std::string& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("small packing and covering examples") {
  const FiniteMetricFamily single(std::vector<std::vector<double>>{{0.0}});
  CHECK(sep_exact(single, 0.3) == 1);
  CHECK(span_exact(single, 0.3) == 1);
  CHECK(cov_exact(single, 0.3) == 1);

  const std::vector<std::string> words{"00", "01", "11"};
  const FiniteMetricFamily family(3, [&](std::size_t i, std::size_t j) { return hamming(words[i], words[j]); });
  CHECK(sep_exact(family, 0.6) == 2);
  CHECK(sep_exact(family, 0.4) == 3);

  const FiniteMetricFamily pair(std::vector<std::vector<double>>{{0, 1}, {1, 0}});
  CHECK(span_exact(pair, 0.5) == 2);
  CHECK(cov_exact(pair, 0.5) == 2);

  const FiniteMetricFamily same(4, [](std::size_t, std::size_t) { return 0.0; });
  CHECK(greedy_sep_lower(same, 0.1) == 1);
  CHECK(greedy_cov_upper(same, 0.1) == 1);
  CHECK(sep_exact(same, 0.1) == 1);

  CHECK_THROWS(span_exact(pair, 0.0));
  CHECK_THROWS(cov_exact(pair, -1.0));
}

TEST_CASE("ties at exactly eps: sep counts them as close, span as far") {
  // With strict conventions on both sides two points at distance exactly eps
  // give sep = 1 but span = 2, so span <= sep needs eps off the distance set.
  const FiniteMetricFamily pair(std::vector<std::vector<double>>{{0, 0.5}, {0.5, 0}});
  CHECK(sep_exact(pair, 0.5) == 1);
  CHECK(span_exact(pair, 0.5) == 2);
  CHECK(span_exact(pair, 0.5000001) == 1);
}

TEST_CASE("exact engines agree with subset enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.05, 0.6);
  for (int trial = 0; trial < 150; ++trial) {
    const auto d = random_family(rng, 1 + rng() % 10);
    const FiniteMetricFamily family(d);
    CHECK(family.is_pseudo_metric());
    const double eps = unit(rng);
    CHECK(sep_exact(family, eps) == oracle::sep(d, eps));
    CHECK(span_exact(family, eps) == oracle::span(d, eps));
    CHECK(cov_exact(family, eps) == oracle::cov(d, eps));
  }
}

TEST_CASE("chain inequality and greedy brackets") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unit(0.02, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const FiniteMetricFamily family(random_family(rng, 2 + rng() % 11));
    const double eps = unit(rng);
    const auto sep = sep_exact(family, eps);
    const auto span = span_exact(family, eps);
    CHECK(cov_exact(family, 2 * eps) <= span);
    CHECK(span <= sep);
    CHECK(sep <= cov_exact(family, eps));
    CHECK(greedy_sep_lower(family, eps) <= sep);
    CHECK(greedy_cov_upper(family, eps) >= cov_exact(family, eps));
  }
}

TEST_CASE("sep equals the number of distinct labelings below the Hamming resolution") {
  std::mt19937_64 rng(23);
  std::vector<std::string> words;
  for (int k = 0; k < 40; ++k) {
    std::string w(10, '0');
    for (auto& c : w) c = rng() % 2 ? '1' : '0';
    if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
  }
  const FiniteMetricFamily family(words.size(), [&](std::size_t i, std::size_t j) { return hamming(words[i], words[j]); });
  CHECK(sep_exact(family, 0.09) == words.size());
}

TEST_CASE("exact engines refuse oversized families") {
  const FiniteMetricFamily big(FiniteMetricFamily::kExactLimit + 1, [](std::size_t, std::size_t) { return 1.0; });
  CHECK_THROWS_AS(sep_exact(big, 0.5), std::length_error);
  CHECK(greedy_sep_lower(big, 0.5) == big.size());
}
