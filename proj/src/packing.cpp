#include "sofic/packing.hpp"

#include <algorithm>
#include <limits>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

  void set(std::size_t i) { w_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { w_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (w_[i / 64] >> (i % 64)) & 1U; }
  bool none() const {
    return std::all_of(w_.begin(), w_.end(), [](std::uint64_t x) { return x == 0; });
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto x : w_) c += static_cast<std::size_t>(std::popcount(x));
    return c;
  }
  std::size_t first() const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      if (w_[k] != 0) return k * 64 + static_cast<std::size_t>(std::countr_zero(w_[k]));
    }
    return n_;
  }
  Bits operator&(const Bits& o) const {
    Bits r = *this;
    for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] &= o.w_[k];
    return r;
  }
  Bits minus(const Bits& o) const {
    Bits r = *this;
    for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] &= ~o.w_[k];
    return r;
  }
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      std::uint64_t x = w_[k];
      while (x != 0) {
        f(k * 64 + static_cast<std::size_t>(std::countr_zero(x)));
        x &= x - 1;
      }
    }
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

void require_exact_size(const FiniteMetricFamily& family) {
  if (family.size() > FiniteMetricFamily::kExactLimit) {
    throw std::length_error(fmt::format("exact packing is limited to {} elements, family has {}",
                                        FiniteMetricFamily::kExactLimit, family.size()));
  }
}

template <class Pred>
std::vector<Bits> adjacency(const FiniteMetricFamily& family, Pred edge) {
  const std::size_t n = family.size();
  std::vector<Bits> adj(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (edge(i, j)) adj[i].set(j);
    }
  }
  return adj;
}

// Maximum clique with greedy-colouring bounds.
class CliqueSearch {
 public:
  CliqueSearch(std::vector<Bits> adj, std::size_t floor, std::uint64_t budget)
      : adj_(std::move(adj)), best_(floor), budget_(budget) {}

  std::size_t run() {
    const std::size_t n = adj_.size();
    if (n == 0) return 0;
    Bits all(n);
    for (std::size_t i = 0; i < n; ++i) all.set(i);
    best_ = std::max<std::size_t>(best_, 1);
    expand(all, 0);
    return best_;
  }

  bool finished() const { return !aborted_; }

 private:
  void expand(Bits P, std::size_t size) {
    if (aborted_ || ++nodes_ > budget_) {
      aborted_ = true;
      return;
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> bound;
    Bits uncolored = P;
    std::size_t color = 0;
    while (!uncolored.none()) {
      ++color;
      Bits q = uncolored;
      while (!q.none()) {
        const auto v = q.first();
        q.reset(v);
        q = q.minus(adj_[v]);
        uncolored.reset(v);
        order.push_back(v);
        bound.push_back(color);
      }
    }
    for (std::size_t k = order.size(); k-- > 0;) {
      if (size + bound[k] <= best_) return;
      const auto v = order[k];
      Bits next = P & adj_[v];
      if (next.none()) {
        best_ = std::max(best_, size + 1);
      } else {
        expand(next, size + 1);
        if (aborted_) return;
      }
      P.reset(v);
    }
  }

  std::vector<Bits> adj_;
  std::size_t best_ = 0;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  bool aborted_ = false;
};

class DominatingSearch {
 public:
  explicit DominatingSearch(std::vector<Bits> closed) : closed_(std::move(closed)) {}

  std::size_t run() {
    const std::size_t n = closed_.size();
    if (n == 0) return 0;
    Bits all(n);
    for (std::size_t i = 0; i < n; ++i) all.set(i);
    best_ = greedy(all);
    search(all, 0);
    return best_;
  }

 private:
  std::size_t greedy(Bits undominated) const {
    std::size_t used = 0;
    while (!undominated.none()) {
      std::size_t pick = 0;
      std::size_t gain = 0;
      for (std::size_t v = 0; v < closed_.size(); ++v) {
        const auto g = (closed_[v] & undominated).count();
        if (g > gain) {
          gain = g;
          pick = v;
        }
      }
      undominated = undominated.minus(closed_[pick]);
      ++used;
    }
    return used;
  }

  void search(const Bits& undominated, std::size_t used) {
    if (undominated.none()) {
      best_ = std::min(best_, used);
      return;
    }
    std::size_t max_gain = 0;
    for (const auto& nb : closed_) max_gain = std::max(max_gain, (nb & undominated).count());
    const std::size_t remaining = undominated.count();
    const std::size_t lower = (remaining + max_gain - 1) / max_gain;
    if (used + lower >= best_) return;

    // branch on the undominated element with the fewest possible dominators
    std::size_t target = 0;
    std::size_t fewest = closed_.size() + 1;
    undominated.for_each([&](std::size_t u) {
      const auto c = closed_[u].count();
      if (c < fewest) {
        fewest = c;
        target = u;
      }
    });
    std::vector<std::pair<std::size_t, std::size_t>> options;
    closed_[target].for_each([&](std::size_t v) {
      options.emplace_back((closed_[v] & undominated).count(), v);
    });
    std::sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (const auto& [gain, v] : options) search(undominated.minus(closed_[v]), used + 1);
  }

  std::vector<Bits> closed_;
  std::size_t best_ = 0;
};

// Exact colouring by DSATUR branch and bound.
class ColoringSearch {
 public:
  ColoringSearch(std::vector<Bits> adj, std::size_t upper) : adj_(std::move(adj)), best_(upper) {}

  std::size_t run() {
    color_.assign(adj_.size(), -1);
    if (!adj_.empty()) search(0, 0);
    return best_;
  }

 private:
  void search(std::size_t colored, std::size_t used) {
    if (used >= best_) return;
    if (colored == adj_.size()) {
      best_ = used;
      return;
    }
    std::size_t pick = adj_.size();
    std::size_t best_sat = 0;
    std::size_t best_deg = 0;
    for (std::size_t v = 0; v < adj_.size(); ++v) {
      if (color_[v] >= 0) continue;
      std::vector<bool> seen(used, false);
      std::size_t sat = 0;
      std::size_t deg = 0;
      adj_[v].for_each([&](std::size_t u) {
        if (color_[u] >= 0) {
          if (!seen[static_cast<std::size_t>(color_[u])]) {
            seen[static_cast<std::size_t>(color_[u])] = true;
            ++sat;
          }
        } else {
          ++deg;
        }
      });
      if (pick == adj_.size() || sat > best_sat || (sat == best_sat && deg > best_deg)) {
        pick = v;
        best_sat = sat;
        best_deg = deg;
      }
    }
    for (std::size_t c = 0; c <= used && c < best_; ++c) {
      bool clash = false;
      adj_[pick].for_each([&](std::size_t u) { clash = clash || color_[u] == static_cast<int>(c); });
      if (clash) continue;
      color_[pick] = static_cast<int>(c);
      search(colored + 1, std::max(used, c + 1));
      color_[pick] = -1;
    }
  }

  std::vector<Bits> adj_;
  std::vector<int> color_;
  std::size_t best_;
};

}  // namespace

FiniteMetricFamily::FiniteMetricFamily(std::size_t size,
                                       const std::function<double(std::size_t, std::size_t)>& distance)
    : d_(size, std::vector<double>(size, 0.0)) {
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = i + 1; j < size; ++j) d_[i][j] = d_[j][i] = distance(i, j);
  }
}

FiniteMetricFamily::FiniteMetricFamily(std::vector<std::vector<double>> distances)
    : d_(std::move(distances)) {
  for (const auto& row : d_) {
    if (row.size() != d_.size()) throw std::invalid_argument("distance matrix must be square");
  }
}

bool FiniteMetricFamily::is_pseudo_metric(double tolerance) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d_[i][i]) > tolerance) return false;
    for (std::size_t j = 0; j < n; ++j) {
      if (d_[i][j] < -tolerance || std::abs(d_[i][j] - d_[j][i]) > tolerance) return false;
      for (std::size_t k = 0; k < n; ++k) {
        if (d_[i][k] > d_[i][j] + d_[j][k] + tolerance) return false;
      }
    }
  }
  return true;
}

std::size_t sep_exact(const FiniteMetricFamily& family, double eps) {
  return sep_budgeted(family, eps, std::numeric_limits<std::uint64_t>::max()).value;
}

SepBound sep_budgeted(const FiniteMetricFamily& family, double eps, std::uint64_t node_budget) {
  require_exact_size(family);
  const auto adj = adjacency(family, [&](std::size_t i, std::size_t j) { return i != j && family(i, j) > eps; });
  const std::size_t n = adj.size();

  // vertices by non-increasing degree
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
    degree[i] = adj[i].count();
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  std::vector<Bits> sorted(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adj[order[i]].test(order[j])) sorted[i].set(j);
    }
  }

  std::size_t floor = 0;
  Bits candidates(n);
  for (std::size_t i = 0; i < n; ++i) candidates.set(i);
  while (!candidates.none()) {
    const auto v = candidates.first();
    ++floor;
    candidates = candidates & sorted[v];
  }
  floor = std::max(floor, greedy_sep_lower(family, eps));

  CliqueSearch search(std::move(sorted), floor, node_budget);
  const auto value = search.run();
  return {value, search.finished()};
}

std::size_t span_exact(const FiniteMetricFamily& family, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("spanning radius must be positive");
  require_exact_size(family);
  DominatingSearch search(adjacency(family, [&](std::size_t i, std::size_t j) { return family(i, j) < eps; }));
  return search.run();
}

std::size_t cov_exact(const FiniteMetricFamily& family, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cover diameter bound must be positive");
  require_exact_size(family);
  ColoringSearch search(
      adjacency(family, [&](std::size_t i, std::size_t j) { return i != j && family(i, j) >= eps; }),
      greedy_cov_upper(family, eps));
  return search.run();
}

std::size_t greedy_sep_lower(const FiniteMetricFamily& family, double eps) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const bool separated = std::all_of(chosen.begin(), chosen.end(),
                                       [&](std::size_t s) { return family(i, s) > eps; });
    if (separated) chosen.push_back(i);
  }
  return chosen.size();
}

std::size_t greedy_cov_upper(const FiniteMetricFamily& family, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cover diameter bound must be positive");
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < family.size(); ++i) {
    auto fits = [&](const std::vector<std::size_t>& g) {
      return std::all_of(g.begin(), g.end(), [&](std::size_t m) { return family(i, m) < eps; });
    };
    auto it = std::find_if(groups.begin(), groups.end(), fits);
    if (it == groups.end()) {
      groups.push_back({i});
    } else {
      it->push_back(i);
    }
  }
  return groups.size();
}

}  // namespace sofic
