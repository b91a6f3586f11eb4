#include "sofic/shift.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

// Z-pattern as (offset - min offset, symbol) pairs.
struct ZPattern {
  std::vector<std::pair<std::int64_t, int>> cells;
  std::int64_t span = 1;
};

ZPattern normalize_z(const Pattern& q) {
  ZPattern out;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool first = true;
  for (const auto& g : q.window) {
    const auto c = std::get<LatticeVector>(g).coords[0];
    lo = first ? c : std::min(lo, c);
    hi = first ? c : std::max(hi, c);
    first = false;
  }
  for (std::size_t i = 0; i < q.window.size(); ++i) {
    out.cells.emplace_back(std::get<LatticeVector>(q.window[i]).coords[0] - lo, q.symbols[i]);
  }
  std::sort(out.cells.begin(), out.cells.end());
  out.span = hi - lo + 1;
  return out;
}

bool word_allowed(const std::vector<int>& word, const std::vector<ZPattern>& patterns) {
  const auto len = static_cast<std::int64_t>(word.size());
  for (const auto& q : patterns) {
    for (std::int64_t s = 0; s + q.span <= len; ++s) {
      bool match = true;
      for (const auto& [off, sym] : q.cells) {
        if (word[static_cast<std::size_t>(s + off)] != sym) {
          match = false;
          break;
        }
      }
      if (match) return false;
    }
  }
  return true;
}

bool is_z(const GroupModel& g) {
  return g.kind() == GroupKind::integer_lattice && g.dim() == 1;
}

}  // namespace

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw std::invalid_argument("alphabet needs at least one symbol");
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) throw std::invalid_argument("alphabet symbol names must be unique");
}

Alphabet Alphabet::of_size(int size) {
  if (size < 1) throw std::invalid_argument("alphabet needs at least one symbol");
  std::vector<std::string> names;
  for (int s = 0; s < size; ++s) names.push_back(std::to_string(s));
  return Alphabet(std::move(names));
}

std::int64_t pattern_code(const std::vector<int>& symbols, int alphabet_size) {
  std::int64_t code = 0;
  for (int s : symbols) code = code * alphabet_size + s;
  return code;
}

std::vector<int> pattern_symbols(std::int64_t code, std::size_t length, int alphabet_size) {
  std::vector<int> out(length);
  for (std::size_t i = length; i-- > 0;) {
    out[i] = static_cast<int>(code % alphabet_size);
    code /= alphabet_size;
  }
  return out;
}

ShiftSystem::ShiftSystem(GroupModel group, Alphabet alphabet, std::vector<Pattern> forbidden,
                         std::string name)
    : group_(std::move(group)),
      alphabet_(std::move(alphabet)),
      forbidden_(std::move(forbidden)),
      name_(std::move(name)) {
  std::set<std::vector<std::pair<GroupElement, int>>> seen;
  for (const auto& q : forbidden_) {
    if (q.window.empty() || q.window.size() != q.symbols.size()) {
      throw std::invalid_argument("forbidden pattern needs one symbol per window element");
    }
    std::vector<std::pair<GroupElement, int>> canon;
    for (std::size_t i = 0; i < q.window.size(); ++i) {
      if (!group_.contains(q.window[i])) {
        throw std::invalid_argument("forbidden pattern window is not in the system's group");
      }
      if (q.symbols[i] < 0 || q.symbols[i] >= alphabet_.size()) {
        throw std::invalid_argument(fmt::format("symbol {} outside the alphabet", q.symbols[i]));
      }
      canon.emplace_back(q.window[i], q.symbols[i]);
    }
    std::sort(canon.begin(), canon.end());
    for (std::size_t i = 1; i < canon.size(); ++i) {
      if (canon[i].first == canon[i - 1].first) {
        throw std::invalid_argument("forbidden pattern window has repeated elements");
      }
    }
    if (!seen.insert(canon).second) throw std::invalid_argument("duplicate forbidden pattern");
  }
  if (z_nonempty() == false) throw std::invalid_argument("shift system has no configurations");
}

ShiftSystem ShiftSystem::full_shift(const GroupModel& group, int alphabet_size) {
  return ShiftSystem(group, Alphabet::of_size(alphabet_size), {}, "full-shift");
}

ShiftSystem ShiftSystem::golden_mean(const GroupModel& group) {
  std::vector<Pattern> forbidden;
  for (int i = 0; i < group.generator_count(); ++i) {
    forbidden.push_back({{group.identity(), group.generator(i)}, {1, 1}});
  }
  return ShiftSystem(group, Alphabet::of_size(2), std::move(forbidden), "golden-mean");
}

ShiftSystem ShiftSystem::rotation(const GroupModel& group, int period) {
  if (group.kind() != GroupKind::real_line) throw std::invalid_argument("rotation flow needs the real line");
  if (period < 1) throw std::invalid_argument("rotation period must be >= 1 cell");
  std::vector<Pattern> forbidden;
  for (int k = 1; k < period; ++k) {
    forbidden.push_back({{group.identity(), GridReal{k}}, {1, 1}});
  }
  Pattern blank;
  for (int k = 0; k < period; ++k) {
    blank.window.push_back(GridReal{k});
    blank.symbols.push_back(0);
  }
  forbidden.push_back(std::move(blank));
  return ShiftSystem(group, Alphabet::of_size(2), std::move(forbidden), "rotation");
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size(), -1);
  for (std::size_t s = 0; s < perm.size(); ++s) {
    const int t = perm[s];
    if (t < 0 || static_cast<std::size_t>(t) >= perm.size() || inv[static_cast<std::size_t>(t)] != -1) {
      throw std::invalid_argument("not a permutation of the alphabet");
    }
    inv[static_cast<std::size_t>(t)] = static_cast<int>(s);
  }
  return inv;
}

ShiftSystem ShiftSystem::relabeled(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != alphabet_.size()) {
    throw std::invalid_argument("permutation size differs from the alphabet size");
  }
  const auto inv = inverse_permutation(perm);
  std::vector<std::string> names(perm.size());
  for (std::size_t t = 0; t < perm.size(); ++t) {
    names[t] = alphabet_.names()[static_cast<std::size_t>(inv[t])];
  }
  std::vector<Pattern> forbidden = forbidden_;
  for (auto& q : forbidden) {
    for (auto& s : q.symbols) s = perm[static_cast<std::size_t>(s)];
  }
  return ShiftSystem(group_, Alphabet(std::move(names)), std::move(forbidden), name_);
}

bool ShiftSystem::is_nearest_neighbor_z() const {
  if (!is_z(group_)) return false;
  return std::all_of(forbidden_.begin(), forbidden_.end(),
                     [](const Pattern& q) { return normalize_z(q).span <= 2; });
}

std::vector<std::vector<int>> ShiftSystem::transfer_matrix() const {
  if (!is_nearest_neighbor_z()) {
    throw std::invalid_argument("transfer matrix needs a nearest-neighbor Z-system");
  }
  const auto A = static_cast<std::size_t>(alphabet_.size());
  std::vector<std::vector<int>> T(A, std::vector<int>(A, 1));
  for (const auto& q : forbidden_) {
    const auto z = normalize_z(q);
    if (z.cells.size() == 1) {
      const auto s = static_cast<std::size_t>(z.cells[0].second);
      for (std::size_t b = 0; b < A; ++b) T[s][b] = T[b][s] = 0;
    } else {
      T[static_cast<std::size_t>(z.cells[0].second)][static_cast<std::size_t>(z.cells[1].second)] = 0;
    }
  }
  return T;
}

std::optional<bool> ShiftSystem::z_nonempty() const {
  if (!is_z(group_)) return std::nullopt;
  if (forbidden_.empty()) return true;
  std::vector<ZPattern> patterns;
  std::int64_t w = 1;
  for (const auto& q : forbidden_) {
    patterns.push_back(normalize_z(q));
    w = std::max(w, patterns.back().span);
  }
  const int A = alphabet_.size();
  if (w == 1) {
    for (int s = 0; s < A; ++s) {
      if (word_allowed({s}, patterns)) return true;
    }
    return false;
  }
  const double states = std::pow(static_cast<double>(A), static_cast<double>(w - 1));
  if (states > 1 << 20) return std::nullopt;
  const auto count = static_cast<std::int64_t>(states);
  const auto len = static_cast<std::size_t>(w - 1);
  std::vector<bool> alive(static_cast<std::size_t>(count), false);
  for (std::int64_t c = 0; c < count; ++c) {
    alive[static_cast<std::size_t>(c)] = word_allowed(pattern_symbols(c, len, A), patterns);
  }
  // edge u -> v when u extended by v's last symbol is allowed
  std::vector<std::vector<std::int64_t>> succ(static_cast<std::size_t>(count));
  std::vector<std::vector<std::int64_t>> pred(static_cast<std::size_t>(count));
  for (std::int64_t u = 0; u < count; ++u) {
    if (!alive[static_cast<std::size_t>(u)]) continue;
    auto word = pattern_symbols(u, len, A);
    word.push_back(0);
    for (int s = 0; s < A; ++s) {
      word.back() = s;
      const std::int64_t v = (u * A + s) % count;
      if (alive[static_cast<std::size_t>(v)] && word_allowed(word, patterns)) {
        succ[static_cast<std::size_t>(u)].push_back(v);
        pred[static_cast<std::size_t>(v)].push_back(u);
      }
    }
  }
  std::vector<std::size_t> outdeg(static_cast<std::size_t>(count), 0);
  std::deque<std::int64_t> dead;
  for (std::int64_t u = 0; u < count; ++u) {
    outdeg[static_cast<std::size_t>(u)] = succ[static_cast<std::size_t>(u)].size();
    if (alive[static_cast<std::size_t>(u)] && outdeg[static_cast<std::size_t>(u)] == 0) dead.push_back(u);
  }
  std::int64_t remaining = std::count(alive.begin(), alive.end(), true);
  while (!dead.empty()) {
    const auto u = dead.front();
    dead.pop_front();
    if (!alive[static_cast<std::size_t>(u)]) continue;
    alive[static_cast<std::size_t>(u)] = false;
    --remaining;
    for (auto p : pred[static_cast<std::size_t>(u)]) {
      if (alive[static_cast<std::size_t>(p)] && --outdeg[static_cast<std::size_t>(p)] == 0) dead.push_back(p);
    }
  }
  return remaining > 0;
}

MollifiedMetric::MollifiedMetric(GroupModel group, WeightedElementSet density)
    : group_(std::move(group)), density_(std::move(density)) {
  double total = 0.0;
  for (const auto& e : density_.entries()) {
    if (!(e.weight > 0.0)) throw std::invalid_argument("mollifier weights must be positive");
    if (!group_.contains(e.element)) throw std::invalid_argument("mollifier support outside the group");
    total += e.weight * group_.point_weight();
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("mollifier is not normalized (total {})", total));
  }
}

double MollifiedMetric::operator()(const Pattern& x, const Pattern& y) const {
  auto value_at = [](const Pattern& q, const GroupElement& h) {
    for (std::size_t i = 0; i < q.window.size(); ++i) {
      if (q.window[i] == h) return q.symbols[i];
    }
    throw std::invalid_argument("pattern does not cover the mollifier support");
  };
  double out = 0.0;
  for (const auto& e : density_.entries()) {
    const auto h = group_.inverse(e.element);
    if (value_at(x, h) != value_at(y, h)) out += e.weight * group_.point_weight();
  }
  return std::min(out, 1.0);
}

MollifiedMetric mollify(const GroupModel& group, const WeightedElementSet& density) {
  return MollifiedMetric(group, density);
}

WeightedElementSet uniform_density(const GroupModel& group, const WeightedElementSet& set) {
  if (set.empty()) throw std::invalid_argument("uniform density on an empty set");
  WeightedElementSet out;
  const double w = 1.0 / (static_cast<double>(set.size()) * group.point_weight());
  for (const auto& e : set.entries()) out.insert(e.element, w);
  return out;
}

}  // namespace sofic
