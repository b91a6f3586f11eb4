#include "sofic/counting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "sofic/parallel.hpp"

namespace sofic {

namespace {

constexpr std::size_t kMaxMemoFrontier = 48;
constexpr double kPruneSlack = 1e-9;

// Static part of the search: when each check and window resolves, and which
// assigned labels and defect flags the remaining search can still see.
struct SearchPlan {
  const MicrostateRules* rules = nullptr;
  std::size_t n = 0;
  int A = 2;
  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> checks_at;
  std::vector<std::vector<std::size_t>> windows_at;
  std::vector<std::vector<std::size_t>> label_frontier;
  std::vector<std::vector<std::size_t>> flag_frontier;
  std::vector<std::int64_t> windows_left;  // windows resolving at positions >= t
  std::int64_t certain = 0;
  bool memo = true;
  bool track_defects = false;

  explicit SearchPlan(const MicrostateRules& r) : rules(&r) {
    const auto& M = r.model();
    n = M.size();
    A = r.alphabet_size();
    order = M.traversal_order();
    std::vector<std::size_t> pos(n);
    for (std::size_t t = 0; t < n; ++t) pos[order[t]] = t;

    checks_at.assign(n, {});
    windows_at.assign(n, {});
    windows_left.assign(n + 1, 0);
    std::vector<std::int64_t> last_use(n, -1);
    std::vector<std::int64_t> first_check(n, std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> last_check(n, -1);
    const auto& certain_flags = r.certain_defects();
    certain = std::count(certain_flags.begin(), certain_flags.end(), true);

    const auto& checks = r.checks();
    for (std::size_t c = 0; c < checks.size(); ++c) {
      if (certain_flags[checks[c].point]) continue;
      std::int64_t resolve = 0;
      for (auto cell : checks[c].cells) resolve = std::max(resolve, static_cast<std::int64_t>(pos[cell]));
      checks_at[static_cast<std::size_t>(resolve)].push_back(c);
      for (auto cell : checks[c].cells) last_use[cell] = std::max(last_use[cell], resolve);
      auto& lo = first_check[checks[c].point];
      auto& hi = last_check[checks[c].point];
      lo = std::min(lo, resolve);
      hi = std::max(hi, resolve);
    }
    if (r.constraint()) {
      const auto& windows = r.window_cells();
      for (std::size_t p = 0; p < n; ++p) {
        if (windows[p].empty() && !r.constraint()->window.empty()) continue;
        std::int64_t resolve = 0;
        for (auto cell : windows[p]) resolve = std::max(resolve, static_cast<std::int64_t>(pos[cell]));
        windows_at[static_cast<std::size_t>(resolve)].push_back(p);
        for (auto cell : windows[p]) last_use[cell] = std::max(last_use[cell], resolve);
        for (std::size_t t = 0; t <= static_cast<std::size_t>(resolve); ++t) ++windows_left[t];
      }
    }

    // Flags only matter when several defective points are tolerated.
    track_defects = r.defect_allowance() > 0;
    label_frontier.assign(n + 1, {});
    flag_frontier.assign(n + 1, {});
    std::size_t widest = 0;
    for (std::size_t t = 0; t <= n; ++t) {
      for (std::size_t k = 0; k < t; ++k) {
        const auto q = order[k];
        if (last_use[q] >= static_cast<std::int64_t>(t)) label_frontier[t].push_back(q);
      }
      if (track_defects) {
        for (std::size_t p = 0; p < n; ++p) {
          if (first_check[p] < static_cast<std::int64_t>(t) && last_check[p] >= static_cast<std::int64_t>(t)) {
            flag_frontier[t].push_back(p);
          }
        }
      }
      widest = std::max(widest, label_frontier[t].size() + flag_frontier[t].size());
    }
    memo = widest <= kMaxMemoFrontier;
  }
};

class SearchState {
 public:
  SearchState(const SearchPlan& plan, const CountOptions& options)
      : plan_(plan), rules_(*plan.rules), options_(options) {
    labels_.assign(plan_.n, -1);
    flagged_ = rules_.certain_defects();
    defects_ = plan_.certain;
    if (rules_.constraint()) {
      const auto& c = *rules_.constraint();
      const double universe = std::pow(static_cast<double>(plan_.A), static_cast<double>(c.window.size()));
      counts_.assign(static_cast<std::size_t>(universe), 0);
      if (c.kind == MeasureConstraint::Kind::tv_ball) {
        const double u = static_cast<double>(rules_.undefined_windows());
        const double shift = u - static_cast<double>(plan_.n) * c.center.undefined;
        undefined_term_ = 0.5 * (shift + std::abs(shift));
      }
    }
    memo_.resize(plan_.n + 1);
  }

  bool root_feasible() const { return rules_.defect_allowance() >= 0 && defects_ <= rules_.defect_allowance(); }

  Count count(std::size_t t) {
    if (t == plan_.n) return rules_.constraint_holds(counts_) ? Count(1) : Count(0);
    std::string key;
    if (plan_.memo) {
      key = memo_key(t);
      auto it = memo_[t].find(key);
      if (it != memo_[t].end()) return it->second;
    }
    if (++nodes_ > options_.node_limit) {
      throw std::runtime_error(fmt::format("microstate search exceeded {} nodes", options_.node_limit));
    }
    Count total = 0;
    for (int a = 0; a < plan_.A; ++a) {
      const auto mark = push(t, a);
      if (mark.feasible) total += count(t + 1);
      pop(t, mark);
    }
    if (plan_.memo && memo_entries_ < options_.memo_limit) {
      memo_[t].emplace(std::move(key), total);
      ++memo_entries_;
    }
    return total;
  }

  // Applies a fixed prefix of labels in traversal order; false if pruned.
  bool apply_prefix(const std::vector<int>& prefix) {
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      if (!push(t, prefix[t]).feasible) return false;
    }
    return true;
  }

  void enumerate(std::size_t t, std::vector<Labeling>& out) {
    if (t == plan_.n) {
      out.push_back(labels_);
      return;
    }
    for (int a = 0; a < plan_.A; ++a) {
      const auto mark = push(t, a);
      if (mark.feasible && count(t + 1) > 0) enumerate(t + 1, out);
      pop(t, mark);
    }
  }

  Labeling sample(const Count& total, std::mt19937_64& rng) {
    Count r = random_below(total, rng);
    std::vector<Mark> marks;
    for (std::size_t t = 0; t < plan_.n; ++t) {
      bool placed = false;
      for (int a = 0; a < plan_.A && !placed; ++a) {
        const auto mark = push(t, a);
        const Count c = mark.feasible ? count(t + 1) : Count(0);
        if (r < c) {
          marks.push_back(mark);
          placed = true;
        } else {
          r -= c;
          pop(t, mark);
        }
      }
      if (!placed) throw std::logic_error("sampler lost its way; subtree counts are inconsistent");
    }
    Labeling out = labels_;
    for (std::size_t t = plan_.n; t-- > 0;) pop(t, marks[t]);
    return out;
  }

  std::uint64_t nodes() const { return nodes_; }

 private:
  struct Mark {
    bool feasible;
    std::size_t flags;
    std::size_t codes;
    std::int64_t defects;
    double excess;
  };

  static Count random_below(const Count& bound, std::mt19937_64& rng) {
    const auto bits = boost::multiprecision::msb(bound) + 64;
    Count x = 0;
    for (std::size_t b = 0; b < bits; b += 64) {
      x <<= 64;
      x += rng();
    }
    return x % bound;
  }

  Mark push(std::size_t t, int a) {
    Mark mark{true, flag_stack_.size(), code_stack_.size(), defects_, excess_};
    labels_[plan_.order[t]] = a;
    const auto& checks = rules_.checks();
    for (auto c : plan_.checks_at[t]) {
      const auto& check = checks[c];
      if (flagged_[check.point]) continue;
      bool match = true;
      for (std::size_t i = 0; i < check.cells.size() && match; ++i) {
        match = labels_[check.cells[i]] == check.symbols[i];
      }
      if (match) {
        flagged_[check.point] = true;
        flag_stack_.push_back(check.point);
        if (++defects_ > rules_.defect_allowance()) {
          mark.feasible = false;
          return mark;
        }
      }
    }
    if (!rules_.constraint()) return mark;
    const auto& constraint = *rules_.constraint();
    const auto& windows = rules_.window_cells();
    for (auto p : plan_.windows_at[t]) {
      std::int64_t code = 0;
      for (auto cell : windows[p]) code = code * plan_.A + labels_[cell];
      const auto c = static_cast<std::size_t>(code);
      ++counts_[c];
      code_stack_.push_back(c);
      switch (constraint.kind) {
        case MeasureConstraint::Kind::exact_counts:
          if (counts_[c] > constraint.counts[c]) mark.feasible = false;
          break;
        case MeasureConstraint::Kind::tv_ball: {
          const double target = constraint.center.mass[c] * static_cast<double>(plan_.n);
          const auto now = static_cast<double>(counts_[c]);
          excess_ += std::max(0.0, now - target) - std::max(0.0, now - 1.0 - target);
          break;
        }
        case MeasureConstraint::Kind::boxes:
          break;
      }
    }
    if (!mark.feasible) return mark;
    if (constraint.kind == MeasureConstraint::Kind::tv_ball) {
      const double bound = (excess_ + undefined_term_) / static_cast<double>(plan_.n);
      if (bound > constraint.eta + kPruneSlack) mark.feasible = false;
    } else if (constraint.kind == MeasureConstraint::Kind::boxes && !plan_.windows_at[t].empty()) {
      mark.feasible = any_box_reachable(plan_.windows_left[t + 1]);
    }
    return mark;
  }

  void pop(std::size_t t, const Mark& mark) {
    while (code_stack_.size() > mark.codes) {
      --counts_[code_stack_.back()];
      code_stack_.pop_back();
    }
    while (flag_stack_.size() > mark.flags) {
      flagged_[flag_stack_.back()] = false;
      flag_stack_.pop_back();
    }
    defects_ = mark.defects;
    excess_ = mark.excess;
    labels_[plan_.order[t]] = -1;
  }

  bool any_box_reachable(std::int64_t remaining) const {
    const auto n = static_cast<double>(plan_.n);
    for (const auto& box : rules_.constraint()->boxes) {
      bool ok = true;
      double needed = 0.0;
      for (std::size_t c = 0; c < counts_.size() && ok; ++c) {
        const auto k = static_cast<double>(counts_[c]);
        if (k > box.upper[c] * n + kPruneSlack) ok = false;
        needed += std::max(0.0, box.lower[c] * n - k);
      }
      if (ok && needed <= static_cast<double>(remaining) + kPruneSlack) return true;
    }
    return false;
  }

  std::string memo_key(std::size_t t) const {
    std::string key;
    key.reserve(plan_.label_frontier[t].size() + plan_.flag_frontier[t].size() + 8 * (counts_.size() + 1));
    for (auto q : plan_.label_frontier[t]) key.push_back(static_cast<char>(labels_[q]));
    for (auto p : plan_.flag_frontier[t]) key.push_back(flagged_[p] ? 1 : 0);
    auto put = [&key](std::int64_t v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
    if (plan_.track_defects) put(defects_);
    for (auto c : counts_) put(c);
    return key;
  }

  const SearchPlan& plan_;
  const MicrostateRules& rules_;
  CountOptions options_;
  Labeling labels_;
  std::vector<bool> flagged_;
  std::int64_t defects_ = 0;
  std::vector<std::int64_t> counts_;
  double excess_ = 0.0;
  double undefined_term_ = 0.0;
  std::vector<std::size_t> flag_stack_;
  std::vector<std::size_t> code_stack_;
  std::vector<std::unordered_map<std::string, Count>> memo_;
  std::size_t memo_entries_ = 0;
  std::uint64_t nodes_ = 0;
};

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SOFIC_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

CountResult count_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                              const ShiftSystem& system, const CountOptions& options) {
  const MicrostateRules rules(M, system, spec);
  const SearchPlan plan(rules);
  CountResult result;
  result.engine = fmt::format("dfs-{}{}", to_string(spec.engine), plan.memo ? "-memo" : "");

  SearchState root(plan, options);
  if (!root.root_feasible()) {
    result.lower = result.upper = 0;
    return result;
  }
  const int workers = resolve_workers(options.workers);
  if (workers <= 1) {
    result.lower = result.upper = root.count(0);
    result.nodes = root.nodes();
    return result;
  }

  std::size_t depth = 0;
  std::size_t tasks = 1;
  while (depth < plan.n && tasks < static_cast<std::size_t>(8 * workers)) {
    ++depth;
    tasks *= static_cast<std::size_t>(plan.A);
  }
  std::vector<Count> partial(tasks);
  std::vector<std::uint64_t> nodes(tasks, 0);
  parallel_for(tasks, workers, [&](std::size_t task) {
    std::vector<int> prefix(depth);
    std::size_t code = task;
    for (std::size_t k = depth; k-- > 0;) {
      prefix[k] = static_cast<int>(code % static_cast<std::size_t>(plan.A));
      code /= static_cast<std::size_t>(plan.A);
    }
    SearchState state(plan, options);
    if (state.apply_prefix(prefix)) partial[task] = state.count(depth);
    nodes[task] = state.nodes();
  });
  Count total = 0;
  for (std::size_t task = 0; task < tasks; ++task) {
    total += partial[task];
    result.nodes += nodes[task];
  }
  result.lower = result.upper = total;
  return result;
}

std::vector<Labeling> enumerate_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                                            const ShiftSystem& system, std::size_t limit,
                                            const CountOptions& options) {
  const MicrostateRules rules(M, system, spec);
  const SearchPlan plan(rules);
  SearchState state(plan, options);
  if (!state.root_feasible()) return {};
  const Count total = state.count(0);
  if (total > limit) {
    throw std::length_error(fmt::format("{} microstates exceed the enumeration limit {}", total.str(), limit));
  }
  std::vector<Labeling> out;
  out.reserve(static_cast<std::size_t>(total));
  state.enumerate(0, out);
  return out;
}

std::vector<Labeling> sample_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                                         const ShiftSystem& system, std::size_t samples,
                                         std::mt19937_64& rng, const CountOptions& options) {
  const MicrostateRules rules(M, system, spec);
  const SearchPlan plan(rules);
  SearchState state(plan, options);
  const Count total = state.root_feasible() ? state.count(0) : Count(0);
  if (total == 0) throw std::runtime_error("no accepted microstates to sample from");
  std::vector<Labeling> out;
  for (std::size_t s = 0; s < samples; ++s) out.push_back(state.sample(total, rng));
  return out;
}

Count transfer_matrix_count(const ShiftSystem& system, std::size_t n) {
  if (n == 0) throw std::invalid_argument("transfer-matrix count needs n >= 1");
  const auto T = system.transfer_matrix();
  const std::size_t k = T.size();
  using Matrix = std::vector<std::vector<Count>>;
  auto multiply = [k](const Matrix& a, const Matrix& b) {
    Matrix c(k, std::vector<Count>(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t l = 0; l < k; ++l) {
        if (a[i][l] == 0) continue;
        for (std::size_t j = 0; j < k; ++j) c[i][j] += a[i][l] * b[l][j];
      }
    }
    return c;
  };
  Matrix base(k, std::vector<Count>(k, 0));
  Matrix power(k, std::vector<Count>(k, 0));
  for (std::size_t i = 0; i < k; ++i) {
    power[i][i] = 1;
    for (std::size_t j = 0; j < k; ++j) base[i][j] = T[i][j];
  }
  for (std::size_t e = n; e > 0; e >>= 1) {
    if (e & 1U) power = multiply(power, base);
    base = multiply(base, base);
  }
  Count trace = 0;
  for (std::size_t i = 0; i < k; ++i) trace += power[i][i];
  return trace;
}

double log_count(const Count& c) {
  if (c <= 0) return -std::numeric_limits<double>::infinity();
  const auto bits = boost::multiprecision::msb(c);
  if (bits < 60) return std::log(c.convert_to<double>());
  const auto shift = bits - 60;
  const Count top = c >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

Count binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  Count out = 1;
  for (unsigned i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

}  // namespace sofic
