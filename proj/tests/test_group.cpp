#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "sofic/group.hpp"

using namespace sofic;

TEST_CASE("multiplication on the three group models") {
  const auto Z = GroupModel::integer_lattice(1);
  CHECK(Z.multiply(Z.lattice({3}), Z.lattice({4})) == Z.lattice({7}));

  const auto F2 = GroupModel::free_group(2);
  CHECK(F2.multiply(F2.word("ab"), F2.word("Ba")) == F2.word("aa"));
  CHECK(F2.format(F2.multiply(F2.word("ab"), F2.word("Ba"))) == "aa");
  CHECK(F2.is_identity(F2.multiply(F2.word("abA"), F2.word("aBA"))));

  const auto R = GroupModel::real_line(0.25);
  CHECK(R.real_value(R.multiply(R.real(0.5), R.real(0.75))) == doctest::Approx(1.25));
}

TEST_CASE("mismatched and malformed elements are rejected") {
  const auto Z = GroupModel::integer_lattice(1);
  const auto Z2 = GroupModel::integer_lattice(2);
  const auto F2 = GroupModel::free_group(2);
  CHECK_THROWS_AS(Z.multiply(Z.lattice({1}), F2.word("a")), std::invalid_argument);
  CHECK_THROWS_AS(Z.multiply(Z.lattice({1}), Z2.lattice({1, 1})), std::invalid_argument);
  CHECK_THROWS(F2.word("c"));
  CHECK_FALSE(F2.contains(FreeWord{{1, -1}}));
  CHECK_THROWS(GroupModel::real_line(0.25).real(0.3));
  CHECK_THROWS(GroupModel::real_line(0.0));
  CHECK_THROWS(GroupModel::integer_lattice(0));
}

TEST_CASE("balls and Haar measure") {
  const auto Z = GroupModel::integer_lattice(1);
  const auto b1 = Z.ball(1);
  CHECK(b1.size() == 3);
  CHECK(haar(b1) == 3);
  CHECK(b1.contains(Z.lattice({-1})));
  CHECK(haar(Z.ball(2)) == 5);

  const auto F2 = GroupModel::free_group(2);
  const auto f1 = F2.ball(1);
  CHECK(haar(f1) == 5);
  for (const char* w : {"e", "a", "A", "b", "B"}) CHECK(f1.contains(F2.word(w)));
  CHECK(haar(F2.ball(2)) == 17);

  const auto R = GroupModel::real_line(0.5);
  const auto r1 = R.ball(1);
  CHECK(r1.size() == 3);
  CHECK(haar(r1) == doctest::Approx(1.5));
  CHECK_FALSE(r1.contains(R.real(1.0)));
  CHECK(haar(GroupModel::real_line(0.25).ball(1)) == doctest::Approx(1.75));

  CHECK(haar(WeightedElementSet{}) == 0);
}

TEST_CASE("lattice balls have (2 floor(r) + 1)^d elements and grow with r") {
  for (int d = 1; d <= 3; ++d) {
    const auto G = GroupModel::integer_lattice(d);
    double previous = 0.0;
    for (double r : {0.0, 0.5, 1.0, 1.7, 2.0, 3.0}) {
      const double h = haar(G.ball(r));
      CHECK(h == doctest::Approx(std::pow(2 * std::floor(r) + 1, d)));
      CHECK(h >= previous);
      previous = h;
    }
  }
}

TEST_CASE("inverse and reduction properties on random words") {
  const auto F3 = GroupModel::free_group(3);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> letter(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int k = 0; k < 8; ++k) text.push_back("aAbBcC"[letter(rng)]);
    const auto g = F3.word(text);
    CHECK(F3.contains(g));
    CHECK(F3.word(F3.format(g)) == g);
    CHECK(F3.is_identity(F3.multiply(g, F3.inverse(g))));
    CHECK(F3.is_identity(F3.multiply(F3.inverse(g), g)));
  }
  const auto Z2 = GroupModel::integer_lattice(2);
  const auto v = Z2.lattice({3, -2});
  CHECK(Z2.is_identity(Z2.multiply(v, Z2.inverse(v))));
  CHECK(Z2.is_identity(Z2.identity()));
  CHECK(Z2.inverse(Z2.identity()) == Z2.identity());
}

TEST_CASE("ball product property on concrete sets") {
  const auto Z = GroupModel::integer_lattice(1);
  const auto full = check_ball_product(Z, 1, 2, 4, 0.1, Z.ball(1), Z.ball(4));
  CHECK(full.hypotheses_hold);
  CHECK(full.conclusion_holds);

  WeightedElementSet w0;
  w0.insert(Z.lattice({-1}), 1);
  w0.insert(Z.lattice({0}), 1);
  WeightedElementSet w2;
  const auto b4 = Z.ball(4);
  for (const auto& e : b4.entries()) {
    if (!(e.element == Z.lattice({3}))) w2.insert(e.element, 1);
  }
  const auto partial = check_ball_product(Z, 1, 2, 4, 0.2, w0, w2);
  // Haar(W0) = 2 is not above 0.8 * 3, so nothing is promised here.
  CHECK_FALSE(partial.hypotheses_hold);
  std::set<std::int64_t> sums;
  for (auto a : {-1, 0}) {
    for (const auto& e : w2.entries()) sums.insert(a + std::get<LatticeVector>(e.element).coords[0]);
  }
  bool covers = true;
  for (int x = -2; x <= 2; ++x) covers = covers && sums.count(x) > 0;
  CHECK(partial.conclusion_holds == covers);

  const auto wide = check_ball_product(Z, 2, 3, 5, 0.01, Z.ball(2), Z.ball(5));
  CHECK_FALSE(wide.hypotheses_hold);

  CHECK_THROWS(check_ball_product(Z, 1, 2, 4, 0.1, Z.ball(2), Z.ball(4)));
  CHECK_THROWS(check_ball_product(Z, 2, 1, 4, 0.1, Z.ball(2), Z.ball(4)));
}

TEST_CASE("randomized ball product instances never contradict the property") {
  const auto Z = GroupModel::integer_lattice(1);
  std::mt19937_64 rng(11);
  int applicable = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int r2 = 3 + static_cast<int>(rng() % 6);
    const int r0 = 1 + static_cast<int>(rng() % (r2 - 2));
    const int r1 = r0 + 1 + static_cast<int>(rng() % std::max(1, r2 - r0 - 1));
    if (r1 >= r2) continue;
    const double delta = 0.01 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng);
    auto thin = [&](int r, double keep) {
      WeightedElementSet w;
      const auto ball = Z.ball(r);
      for (const auto& e : ball.entries()) {
        if (std::uniform_real_distribution<double>(0, 1)(rng) < keep) w.insert(e.element, 1);
      }
      return w;
    };
    const auto v = check_ball_product(Z, r0, r1, r2, delta, thin(r0, 0.9), thin(r2, 0.95));
    if (v.hypotheses_hold) {
      ++applicable;
      CHECK(v.conclusion_holds);
    }
  }
  CHECK(applicable > 0);
}
