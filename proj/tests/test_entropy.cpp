#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "sofic/entropy.hpp"

using namespace sofic;

namespace {

const GroupModel Z = GroupModel::integer_lattice(1);
const ModelFamily cyclic{ModelKind::cyclic};

Schedule schedule(std::vector<std::size_t> sizes, std::vector<double> deltas, std::vector<double> epsilons,
                  std::vector<double> etas = {}, std::vector<std::int64_t> window = {0}) {
  Schedule s;
  s.sizes = std::move(sizes);
  s.radii = {1};
  s.deltas = std::move(deltas);
  s.epsilons = std::move(epsilons);
  s.etas = std::move(etas);
  for (auto k : window) s.window.push_back(Z.lattice({k}));
  return s;
}

EstimateOptions strict_only() {
  EstimateOptions o;
  o.engines = {Engine::strict};
  return o;
}

double log_binomial_sum(unsigned n, unsigned lo, unsigned hi) {
  double total = 0.0;
  for (unsigned k = lo; k <= hi; ++k) total += static_cast<double>(oracle::choose(n, k));
  return std::log(total);
}

double golden_mean_limit() { return std::log((1.0 + std::sqrt(5.0)) / 2.0); }

}  // namespace

TEST_CASE("topological estimates on the full shift and the golden mean") {
  const auto full = h_top_estimate(cyclic, ShiftSystem::full_shift(Z, 2), schedule({16}, {0.1}, {1.0 / 32}));
  CHECK(full.estimate(Engine::strict).value.value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(full.estimate(Engine::soft).value.value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(full.cells.front().count == 65536);
  CHECK(full.oracle_checked == full.cells.size());
  CHECK(full.oracle_agreed == full.oracle_checked);

  const auto gm = h_top_estimate(cyclic, ShiftSystem::golden_mean(Z), schedule({8, 16}, {0.0}, {0.01}), strict_only());
  CHECK(gm.cells.back().count == 2207);
  CHECK(*gm.estimate(Engine::strict).value == doctest::Approx(std::log(2207.0) / 16));
  CHECK(std::abs(*gm.estimate(Engine::strict).value - golden_mean_limit()) < 0.02);
  CHECK(gm.oracle_agreed == gm.oracle_checked);
  CHECK(gm.limsup.size() == 1);
}

TEST_CASE("strict full-shift estimate is log |A| at every size") {
  for (std::size_t n : {4, 7, 10}) {
    const auto r = h_top_estimate(cyclic, ShiftSystem::full_shift(Z, 3), schedule({n}, {0.0}, {0.5 / n}), strict_only());
    CHECK(*r.estimate(Engine::strict).value == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  }
}

TEST_CASE("separated sets above the resolution agree with subset enumeration") {
  const auto gm = ShiftSystem::golden_mean(Z);
  const auto r = h_top_estimate(cyclic, gm, schedule({6}, {0.0}, {0.5, 0.34, 0.2, 0.1}), strict_only());
  std::vector<Labeling> members;
  const auto M = cyclic_quotient(6);
  oracle::for_each_labeling(6, 2, [&](const Labeling& omega) {
    if (oracle::defective_points(M, omega, gm) == 0) members.push_back(omega);
  });
  REQUIRE(members.size() == 18);
  std::vector<std::vector<double>> d(members.size(), std::vector<double>(members.size(), 0.0));
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = 0; j < members.size(); ++j) {
      for (std::size_t p = 0; p < 6; ++p) d[i][j] += members[i][p] != members[j][p] ? 1.0 / 6 : 0.0;
    }
  }
  for (const auto& cell : r.cells) {
    if (cell.method == SepMethod::count) {
      CHECK(cell.sep == 18);
    } else {
      CHECK(cell.method == SepMethod::exact);
      CHECK(cell.sep == oracle::sep(d, cell.epsilon));
    }
  }
  CHECK(r.monotonicity.empty());
}

TEST_CASE("averaged estimates") {
  const auto gm = ShiftSystem::golden_mean(Z);
  for (const auto& family : {cyclic, ModelFamily{ModelKind::interval}}) {
    const auto s = schedule({8, 12}, {0.3, 0.1, 0.05}, {0.05});
    const auto top = h_top_estimate(family, gm, s);
    const auto avg = h_avg_estimate(family, gm, s);
    REQUIRE(top.cells.size() == avg.cells.size());
    for (std::size_t i = 0; i < top.cells.size(); ++i) CHECK(avg.cells[i].count >= top.cells[i].count);
  }
  const auto s = schedule({12}, {0.05}, {0.05});
  const auto top = h_top_estimate(cyclic, gm, s);
  const auto avg = h_avg_estimate(cyclic, gm, s);
  CHECK(std::abs(*avg.estimate(Engine::strict).value - *top.estimate(Engine::strict).value) <= 0.05);

  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto a = h_top_estimate(cyclic, full, schedule({10}, {0.1}, {0.05}));
  const auto b = h_avg_estimate(cyclic, full, schedule({10}, {0.1}, {0.05}));
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].value == b.cells[i].value);
}

TEST_CASE("measure estimates against binomial oracles") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto half = h_meas_estimate(cyclic, full, InvariantMeasure::bernoulli({0.5, 0.5}), schedule({64}, {0.0}, {0.01}, {0.0}),
                                    strict_only());
  CHECK(half.cells.front().count == binomial(64, 32));
  CHECK(*half.estimate(Engine::strict).value == doctest::Approx(oracle::log_choose(64, 32) / 64).epsilon(1e-12));

  const auto quarter = h_meas_estimate(cyclic, full, InvariantMeasure::bernoulli({0.75, 0.25}),
                                       schedule({64}, {0.0}, {0.01}, {0.0}), strict_only());
  const double value = *quarter.estimate(Engine::strict).value;
  CHECK(value == doctest::Approx(oracle::log_choose(64, 16) / 64).epsilon(1e-12));
  const double H = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(std::abs(value - H) < 0.05);

  const auto point = h_meas_estimate(cyclic, ShiftSystem::golden_mean(Z), InvariantMeasure::bernoulli({1.0, 0.0}),
                                     schedule({12}, {0.0}, {0.05}, {0.0}));
  CHECK(*point.estimate(Engine::strict).value == 0.0);
  CHECK(*point.estimate(Engine::soft).value == 0.0);

  CHECK_THROWS(h_meas_estimate(cyclic, ShiftSystem::golden_mean(Z), InvariantMeasure::bernoulli({0.5, 0.5}),
                               schedule({12}, {0.0}, {0.05}, {0.0})));
}

TEST_CASE("measure estimates never exceed the topological ones") {
  const auto gm = ShiftSystem::golden_mean(Z);
  Eigen::MatrixXd P(2, 2);
  P << 0.6, 0.4, 1.0, 0.0;
  const auto mu = InvariantMeasure::markov(P);
  const auto s = schedule({8, 10}, {0.2, 0.0}, {0.2, 0.05}, {0.3}, {0, 1});
  const auto meas = h_meas_estimate(cyclic, gm, mu, s);
  const auto top = h_top_estimate(cyclic, gm, s);
  REQUIRE(meas.cells.size() == top.cells.size());
  for (std::size_t i = 0; i < top.cells.size(); ++i) CHECK(meas.cells[i].count <= top.cells[i].count);
  CHECK(meas.monotonicity.empty());
}

TEST_CASE("eta-indexed cells shrink with eta") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto r = h_meas_estimate(cyclic, full, InvariantMeasure::bernoulli({0.7, 0.3}),
                                 schedule({20}, {0.0}, {0.01}, {0.4, 0.2, 0.1, 0.0}), strict_only());
  REQUIRE(r.cells.size() == 4);
  for (std::size_t i = 1; i < r.cells.size(); ++i) CHECK(r.cells[i].count <= r.cells[i - 1].count);
  // eta = 0.1 keeps k ones with |k/20 - 0.3| <= 0.1
  Count expected = 0;
  for (unsigned k = 4; k <= 8; ++k) expected += binomial(20, k);
  CHECK(r.cells[2].count == expected);
  CHECK(r.cells[3].count == binomial(20, 6));
  CHECK(r.monotonicity.empty());
}

TEST_CASE("measure-preserving estimates") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto third = h_meas_mp_estimate(cyclic, full, InvariantMeasure::bernoulli({1.0 / 3, 2.0 / 3}),
                                        schedule({9}, {0.0}, {0.05}), strict_only());
  CHECK(third.cells.front().count == 84);
  REQUIRE(third.quantization.size() == 1);
  CHECK(third.quantization.front().counts == std::vector<std::int64_t>{3, 6});
  CHECK(third.quantization.front().tv_to_target == doctest::Approx(0.0).epsilon(1e-12));

  const auto mu = InvariantMeasure::bernoulli({0.5, 0.5});
  const auto mp = h_meas_mp_estimate(cyclic, full, mu, schedule({64}, {0.0}, {0.01}), strict_only());
  const auto meas = h_meas_estimate(cyclic, full, mu, schedule({64}, {0.0}, {0.01}, {0.0}), strict_only());
  CHECK(mp.cells.front().value == meas.cells.front().value);

  const auto bern = InvariantMeasure::bernoulli({0.7, 0.3});
  double previous = 1.0;
  for (std::size_t n : {10, 40, 160}) {
    const auto a = h_meas_mp_estimate(cyclic, full, bern, schedule({n}, {0.0}, {0.5 / n}), strict_only());
    const auto b = h_meas_estimate(cyclic, full, bern, schedule({n}, {0.0}, {0.5 / n}, {1.0 / n}), strict_only());
    const double gap = std::abs(*a.estimate(Engine::strict).value - *b.estimate(Engine::strict).value);
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous < 0.03);
}

TEST_CASE("estimates relative to a set of measures") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto everything = h_rel_A_estimate(cyclic, full, {{{0.0, 0.0}, {1.0, 1.0}}}, schedule({12}, {0.0}, {0.05}));
  const auto top = h_top_estimate(cyclic, full, schedule({12}, {0.0}, {0.05}));
  for (std::size_t i = 0; i < top.cells.size(); ++i) CHECK(everything.cells[i].value == top.cells[i].value);

  const auto point = h_rel_A_estimate(cyclic, full, {{{0.5, 0.5}, {0.5, 0.5}}}, schedule({16}, {0.0}, {0.05}), strict_only());
  const auto meas = h_meas_estimate(cyclic, full, InvariantMeasure::bernoulli({0.5, 0.5}),
                                    schedule({16}, {0.0}, {0.05}, {0.0}), strict_only());
  CHECK(point.cells.front().value == meas.cells.front().value);

  const auto band = h_rel_A_estimate(cyclic, full, {{{0.7, 0.2}, {0.8, 0.3}}}, schedule({64}, {0.0}, {0.01}), strict_only());
  CHECK(*band.estimate(Engine::strict).value == doctest::Approx(log_binomial_sum(64, 13, 19) / 64).epsilon(1e-12));

  CHECK_THROWS(h_rel_A_estimate(cyclic, full, {{{0.0}, {1.0}}}, schedule({8}, {0.0}, {0.05})));
  CHECK_THROWS(h_rel_A_estimate(cyclic, full, {}, schedule({8}, {0.0}, {0.05})));
}

TEST_CASE("empty microstate sets are reported as -infinity") {
  // period-2 system on an odd cycle has no admissible labeling
  const ShiftSystem alternating(Z, Alphabet::of_size(2),
                                {Pattern{{Z.lattice({0}), Z.lattice({1})}, {0, 0}},
                                 Pattern{{Z.lattice({0}), Z.lattice({1})}, {1, 1}}});
  const auto r = h_top_estimate(cyclic, alternating, schedule({7, 8}, {0.0}, {0.05}), strict_only());
  CHECK_FALSE(r.cells.front().value.has_value());
  CHECK(r.cells.front().count == 0);
  CHECK(*r.estimate(Engine::strict).value == doctest::Approx(std::log(2.0) / 8));
  const auto odd = h_top_estimate(cyclic, alternating, schedule({9}, {0.0}, {0.05}), strict_only());
  CHECK_FALSE(odd.estimate(Engine::strict).value.has_value());
}

TEST_CASE("the final estimate lies below the proxies it infimizes") {
  const auto gm = ShiftSystem::golden_mean(Z);
  Schedule s = schedule({6, 8}, {0.3, 0.1, 0.0}, {0.3, 0.05});
  s.radii = {1, 2};
  for (const auto& family : {cyclic, ModelFamily{ModelKind::interval}}) {
    const auto r = h_top_estimate(family, gm, s);
    for (const auto& est : r.estimates) {
      for (const auto& c : r.limsup) {
        if (c.engine != est.engine || c.epsilon != s.epsilons.back()) continue;
        if (!c.value) {
          CHECK_FALSE(est.value.has_value());
        } else if (est.value) {
          CHECK(*est.value <= *c.value);
        }
      }
    }
    CHECK(r.monotonicity.empty());
  }
}

TEST_CASE("relabeling the alphabet leaves the report unchanged") {
  const auto gm = ShiftSystem::golden_mean(Z);
  Eigen::MatrixXd P(2, 2);
  P << 0.65, 0.35, 1.0, 0.0;
  const auto mu = InvariantMeasure::markov(P);
  const auto s = schedule({6, 8, 12}, {0.1, 0.0}, {0.3, 0.05}, {0.3, 0.1}, {0, 1});
  const auto a = h_meas_estimate(cyclic, gm, mu, s);
  const auto b = h_meas_estimate(cyclic, gm.relabeled({1, 0}), mu.relabeled({1, 0}), s);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& x = a.cells[i];
    const auto& y = b.cells[i];
    CHECK(x.count == y.count);
    // the clique budget can run out on one side only, leaving a lower bound
    if (x.method != SepMethod::greedy && y.method != SepMethod::greedy) CHECK(x.value == y.value);
    if (x.method == SepMethod::greedy && y.method != SepMethod::greedy) CHECK(x.sep <= y.sep);
    if (y.method == SepMethod::greedy && x.method != SepMethod::greedy) CHECK(y.sep <= x.sep);
  }
}

TEST_CASE("worker count does not change reports") {
  const auto gm = ShiftSystem::golden_mean(Z);
  const auto s = schedule({10, 16}, {0.2, 0.05}, {0.05, 0.01});
  EstimateOptions one;
  EstimateOptions four;
  four.workers = 4;
  const auto a = h_top_estimate(cyclic, gm, s, one);
  const auto b = h_top_estimate(cyclic, gm, s, four);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].count == b.cells[i].count);
    CHECK(a.cells[i].sep == b.cells[i].sep);
  }
}

TEST_CASE("schedules are validated") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  CHECK_THROWS(h_top_estimate(cyclic, full, schedule({8, 8}, {0.0}, {0.1})));
  CHECK_THROWS(h_top_estimate(cyclic, full, schedule({8}, {0.0, 0.1}, {0.1})));
  CHECK_THROWS(h_top_estimate(cyclic, full, schedule({8}, {0.0}, {0.0})));
  CHECK_THROWS(h_meas_estimate(cyclic, full, InvariantMeasure::bernoulli({0.5, 0.5}), schedule({8}, {0.0}, {0.1})));
  CHECK_THROWS(h_top_estimate(ModelFamily{ModelKind::schreier}, full, schedule({8}, {0.0}, {0.1})));
}

TEST_CASE("equidistribution of accepted microstates") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  MapSpaceSpec spec;
  spec.U = Z.ball(1);
  spec.delta = 0.05;
  const std::vector<GroupElement> pair{Z.lattice({0}), Z.lattice({1})};
  CHECK(equidistribution_check(cyclic_quotient(20), full, spec, pair, 30, 1) == 0.0);

  // only constant labelings survive
  const ShiftSystem constant(Z, Alphabet::of_size(2),
                             {Pattern{{Z.lattice({0}), Z.lattice({1})}, {0, 1}},
                              Pattern{{Z.lattice({0}), Z.lattice({1})}, {1, 0}}});
  CHECK(equidistribution_check(cyclic_quotient(12), constant, spec, {Z.lattice({0})}, 5, 2) == 0.0);

  const auto I = interval_space(30);
  spec.delta = 0.2;
  CHECK(equidistribution_check(I, full, spec, {Z.lattice({0})}, 40, 3) <= 1.0 / 30 + 1e-12);

  const auto F2 = GroupModel::free_group(2);
  const auto S = random_schreier_space(200, 2, 5);
  MapSpaceSpec fspec;
  fspec.U = F2.ball(1);
  fspec.delta = 0.01;
  const double kappa = 1.0 - sofic_quality(S, F2.ball(2));
  const auto full2 = ShiftSystem::full_shift(F2, 2);
  CHECK(equidistribution_check(S, full2, fspec, {F2.identity()}, 50, 4) <= fspec.delta + kappa + 0.02);
  CHECK(equidistribution_check(S, full2, fspec, {F2.identity(), F2.word("a")}, 50, 4) <= fspec.delta + kappa + 0.02);

  fspec.mode = MapMode::averaged;
  CHECK_THROWS(equidistribution_check(S, full2, fspec, {F2.identity()}, 5, 4));
}

TEST_CASE("variational scans") {
  const auto full = ShiftSystem::full_shift(Z, 2);
  const auto s = schedule({64}, {0.0}, {0.01}, {0.0});
  const auto scan = variational_scan(cyclic, full, {MeasureGrid::Kind::bernoulli, 0.05}, s, strict_only());
  CHECK(scan.points.size() == 21);
  REQUIRE(scan.argmax.size() == 1);
  CHECK(scan.argmax[0] == doctest::Approx(0.5));
  CHECK(*scan.sup == doctest::Approx(oracle::log_choose(64, 32) / 64));
  CHECK(*scan.gap >= -1e-12);

  // the golden mean supports a single Bernoulli measure
  const auto gm = ShiftSystem::golden_mean(Z);
  const auto single = variational_scan(cyclic, gm, {MeasureGrid::Kind::bernoulli, 0.25}, schedule({12}, {0.0}, {0.05}, {0.0}),
                                       strict_only());
  CHECK(single.points.size() == 1);
  CHECK(*single.sup == 0.0);
  CHECK(*single.gap >= -1e-12);

  const auto grid = MeasureGrid{MeasureGrid::Kind::markov, 0.25}.build(gm);
  CHECK(grid.size() == 5);
  CHECK(MeasureGrid{MeasureGrid::Kind::markov, 0.5}.build(full).size() == 8);
  CHECK_THROWS(MeasureGrid{MeasureGrid::Kind::bernoulli, 0.3}.build(full));
}
