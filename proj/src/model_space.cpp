#include "sofic/model_space.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

constexpr double kTolerance = 1e-12;

ActionMap cyclic_table(std::size_t n, std::int64_t shift) {
  ActionMap t(n);
  const auto m = static_cast<std::int64_t>(n);
  for (std::int64_t p = 0; p < m; ++p) t[static_cast<std::size_t>(p)] = ((p + shift) % m + m) % m;
  return t;
}

std::int64_t wrap_steps(std::int64_t steps, std::int64_t period) {
  return period > 0 ? steps % period : steps;
}

}  // namespace

LocalGSpace LocalGSpace::from_tables(GroupModel group, ModelKind kind, double weight,
                                     std::vector<ActionMap> forward,
                                     std::vector<ActionMap> backward, std::string label,
                                     std::vector<std::int64_t> dims, bool validate) {
  if (!(weight > 0.0)) throw std::invalid_argument("point weight must be positive");
  if (forward.empty() || forward.size() != backward.size() ||
      static_cast<int>(forward.size()) != group.generator_count()) {
    throw std::invalid_argument("need one forward and one backward table per generator");
  }
  const std::size_t n = forward.front().size();
  if (n == 0) throw std::invalid_argument("model needs at least one point");
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (forward[i].size() != n || backward[i].size() != n) {
      throw std::invalid_argument("action tables have inconsistent sizes");
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (auto v : {forward[i][p], backward[i][p]}) {
        if (v != kNoPoint && (v < 0 || v >= static_cast<std::int64_t>(n))) {
          throw std::invalid_argument("action table entry out of range");
        }
      }
    }
  }
  LocalGSpace M(std::move(group));
  M.kind_ = kind;
  M.size_ = n;
  M.weight_ = weight;
  M.forward_ = std::move(forward);
  M.backward_ = std::move(backward);
  M.label_ = std::move(label);
  M.dims_ = std::move(dims);
  if (validate && !M.check_axioms()) {
    throw std::invalid_argument("action tables violate the inverse axiom");
  }
  return M;
}

bool LocalGSpace::check_axioms() const {
  for (std::size_t p = 0; p < size_; ++p) {
    if (act(group_.identity(), p) != p) return false;
  }
  for (std::size_t i = 0; i < forward_.size(); ++i) {
    for (std::size_t p = 0; p < size_; ++p) {
      const auto q = forward_[i][p];
      if (q != kNoPoint && backward_[i][static_cast<std::size_t>(q)] != static_cast<std::int64_t>(p)) {
        return false;
      }
      const auto r = backward_[i][p];
      if (r != kNoPoint && forward_[i][static_cast<std::size_t>(r)] != static_cast<std::int64_t>(p)) {
        return false;
      }
    }
  }
  return true;
}

const ActionMap& LocalGSpace::generator_table(int i, bool backward) const {
  if (i < 0 || static_cast<std::size_t>(i) >= forward_.size()) {
    throw std::out_of_range("generator index");
  }
  return backward ? backward_[static_cast<std::size_t>(i)] : forward_[static_cast<std::size_t>(i)];
}

std::optional<std::size_t> LocalGSpace::step(int generator, bool inverse, std::size_t p) const {
  const auto q = generator_table(generator, inverse)[p];
  if (q == kNoPoint) return std::nullopt;
  return static_cast<std::size_t>(q);
}

std::optional<std::size_t> LocalGSpace::act(const GroupElement& g, std::size_t p) const {
  if (p >= size_) throw std::out_of_range("point index");
  if (!group_.contains(g)) throw std::invalid_argument("element does not belong to the model's group");
  std::optional<std::size_t> cur = p;
  auto power = [&](int gen, std::int64_t k) {
    // Total cyclic actions only need k mod the period.
    if (kind_ != ModelKind::interval && kind_ != ModelKind::schreier) {
      k = wrap_steps(k, dims_.empty() ? 0 : dims_[static_cast<std::size_t>(gen)]);
    }
    const bool inv = k < 0;
    for (std::int64_t s = 0; s < std::abs(k) && cur; ++s) cur = step(gen, inv, *cur);
  };
  if (const auto* v = std::get_if<LatticeVector>(&g)) {
    for (std::size_t i = v->coords.size(); i-- > 0 && cur;) power(static_cast<int>(i), v->coords[i]);
  } else if (const auto* w = std::get_if<FreeWord>(&g)) {
    for (auto it = w->letters.rbegin(); it != w->letters.rend() && cur; ++it) {
      cur = step(std::abs(*it) - 1, *it < 0, *cur);
    }
  } else {
    power(0, std::get<GridReal>(g).steps);
  }
  return cur;
}

ActionMap LocalGSpace::action_map(const GroupElement& g) const {
  ActionMap out(size_);
  for (std::size_t p = 0; p < size_; ++p) {
    const auto q = act(g, p);
    out[p] = q ? static_cast<std::int64_t>(*q) : kNoPoint;
  }
  return out;
}

std::vector<std::size_t> LocalGSpace::traversal_order() const {
  std::vector<std::size_t> order(size_);
  if (kind_ != ModelKind::schreier) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }
  order.clear();
  std::vector<bool> seen(size_, false);
  for (std::size_t root = 0; root < size_; ++root) {
    if (seen[root]) continue;
    std::deque<std::size_t> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
      const auto p = queue.front();
      queue.pop_front();
      order.push_back(p);
      for (std::size_t i = 0; i < forward_.size(); ++i) {
        for (const auto* table : {&forward_[i], &backward_[i]}) {
          const auto q = (*table)[p];
          if (q != kNoPoint && !seen[static_cast<std::size_t>(q)]) {
            seen[static_cast<std::size_t>(q)] = true;
            queue.push_back(static_cast<std::size_t>(q));
          }
        }
      }
    }
  }
  return order;
}

std::size_t LocalGSpace::circle_point(double x) const {
  if (kind_ != ModelKind::circle) throw std::logic_error("circle_point on a non-circle model");
  const double L = volume();
  double y = std::fmod(x, L);
  if (y < 0) y += L;
  auto p = static_cast<std::size_t>(std::floor(y / weight_ + 1e-9));
  return p % size_;
}

double LocalGSpace::circle_position(std::size_t p) const {
  if (kind_ != ModelKind::circle) throw std::logic_error("circle_position on a non-circle model");
  return (static_cast<double>(p) + 0.5) * weight_;
}

std::size_t LocalGSpace::torus_point(const std::vector<std::int64_t>& coords) const {
  if (kind_ != ModelKind::torus && kind_ != ModelKind::cyclic) {
    throw std::logic_error("torus_point on a non-torus model");
  }
  if (coords.size() != dims_.size()) throw std::invalid_argument("coordinate count mismatch");
  std::int64_t index = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto c = ((coords[i] % dims_[i]) + dims_[i]) % dims_[i];
    index = index * dims_[i] + c;
  }
  return static_cast<std::size_t>(index);
}

double LocalGSpace::quantization_error(double t) const {
  if (kind_ != ModelKind::circle) return 0.0;
  return group_.quantize(t).second;
}

LocalGSpace cyclic_quotient(std::size_t n) {
  if (n < 1) throw std::invalid_argument("cyclic quotient needs n >= 1");
  return LocalGSpace::from_tables(GroupModel::integer_lattice(1), ModelKind::cyclic, 1.0,
                                  {cyclic_table(n, 1)}, {cyclic_table(n, -1)},
                                  fmt::format("cyclic(n={})", n), {static_cast<std::int64_t>(n)});
}

LocalGSpace torus_quotient(const std::vector<std::int64_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("torus needs at least one dimension");
  std::size_t n = 1;
  for (auto d : dims) {
    if (d < 1) throw std::invalid_argument("torus side lengths must be >= 1");
    n *= static_cast<std::size_t>(d);
  }
  std::vector<ActionMap> fwd(dims.size(), ActionMap(n));
  std::vector<ActionMap> bwd(dims.size(), ActionMap(n));
  // stride of coordinate j in the mixed-radix index
  std::vector<std::int64_t> stride(dims.size(), 1);
  for (std::size_t j = dims.size() - 1; j-- > 0;) stride[j] = stride[j + 1] * dims[j + 1];
  for (std::size_t p = 0; p < n; ++p) {
    const auto ip = static_cast<std::int64_t>(p);
    for (std::size_t j = 0; j < dims.size(); ++j) {
      const std::int64_t c = (ip / stride[j]) % dims[j];
      const std::int64_t up = (c + 1) % dims[j];
      const std::int64_t down = (c + dims[j] - 1) % dims[j];
      fwd[j][p] = ip + (up - c) * stride[j];
      bwd[j][p] = ip + (down - c) * stride[j];
    }
  }
  return LocalGSpace::from_tables(GroupModel::integer_lattice(static_cast<int>(dims.size())),
                                  ModelKind::torus, 1.0, std::move(fwd), std::move(bwd),
                                  fmt::format("torus({})", fmt::join(dims, "x")), dims);
}

LocalGSpace schreier_space(const std::vector<std::vector<std::size_t>>& perms) {
  if (perms.empty()) throw std::invalid_argument("Schreier space needs at least one permutation");
  const std::size_t n = perms.front().size();
  if (n == 0) throw std::invalid_argument("Schreier space needs at least one point");
  std::vector<ActionMap> fwd, bwd;
  for (const auto& perm : perms) {
    if (perm.size() != n) throw std::invalid_argument("permutations act on different point sets");
    ActionMap f(n), b(n, kNoPoint);
    for (std::size_t p = 0; p < n; ++p) {
      if (perm[p] >= n || b[perm[p]] != kNoPoint) {
        throw std::invalid_argument("generator table is not a bijection");
      }
      f[p] = static_cast<std::int64_t>(perm[p]);
      b[perm[p]] = static_cast<std::int64_t>(p);
    }
    fwd.push_back(std::move(f));
    bwd.push_back(std::move(b));
  }
  return LocalGSpace::from_tables(GroupModel::free_group(static_cast<int>(perms.size())),
                                  ModelKind::schreier, 1.0, std::move(fwd), std::move(bwd),
                                  fmt::format("schreier(n={},rank={})", n, perms.size()));
}

LocalGSpace random_schreier_space(std::size_t n, int rank, std::uint64_t seed) {
  if (n < 1 || rank < 1) throw std::invalid_argument("random Schreier space needs n, rank >= 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> perms;
  for (int r = 0; r < rank; ++r) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    perms.push_back(std::move(perm));
  }
  return schreier_space(perms);
}

LocalGSpace circle_space(double L, double h) {
  if (!(L > 0.0) || !(h > 0.0)) throw std::invalid_argument("circle needs L > 0 and h > 0");
  const double ratio = L / h;
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  if (n < 1 || std::abs(static_cast<double>(n) - ratio) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument(fmt::format("L={} is not a multiple of h={}", L, h));
  }
  const auto count = static_cast<std::size_t>(n);
  return LocalGSpace::from_tables(GroupModel::real_line(h), ModelKind::circle, h,
                                  {cyclic_table(count, 1)}, {cyclic_table(count, -1)},
                                  fmt::format("circle(L={},h={})", L, h), {n});
}

LocalGSpace interval_space(std::size_t n) {
  if (n < 1) throw std::invalid_argument("interval needs n >= 1");
  ActionMap f(n, kNoPoint), b(n, kNoPoint);
  for (std::size_t p = 0; p + 1 < n; ++p) {
    f[p] = static_cast<std::int64_t>(p + 1);
    b[p + 1] = static_cast<std::int64_t>(p);
  }
  return LocalGSpace::from_tables(GroupModel::integer_lattice(1), ModelKind::interval, 1.0, {f},
                                  {b}, fmt::format("interval(n={})", n),
                                  {static_cast<std::int64_t>(n)});
}

LocalGSpace corrupt_action_table(const LocalGSpace& M, int generator, std::size_t p,
                                 std::size_t q) {
  if (p >= M.size() || q >= M.size() || p == q) throw std::invalid_argument("bad corruption target");
  std::vector<ActionMap> fwd = M.forward_tables();
  std::vector<ActionMap> bwd;
  for (int i = 0; i < M.group().generator_count(); ++i) bwd.push_back(M.generator_table(i, true));
  auto& table = fwd.at(static_cast<std::size_t>(generator));
  table[p] = table[q];
  return LocalGSpace::from_tables(M.group(), M.kind(), M.weight(), std::move(fwd), std::move(bwd),
                                  M.label() + "+corrupted", M.dims(), false);
}

std::vector<std::size_t> good_points(const LocalGSpace& M, const WeightedElementSet& U) {
  const auto& group = M.group();
  const auto elements = U.elements();
  std::vector<ActionMap> maps;
  maps.reserve(elements.size());
  for (const auto& g : elements) maps.push_back(M.action_map(g));

  std::map<GroupElement, std::size_t> index;
  for (std::size_t i = 0; i < elements.size(); ++i) index.emplace(elements[i], i);
  struct Triple {
    std::size_t g, h, gh;
  };
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    for (std::size_t j = 0; j < elements.size(); ++j) {
      auto it = index.find(group.multiply(elements[i], elements[j]));
      if (it != index.end()) triples.push_back({i, j, it->second});
    }
  }

  std::vector<std::size_t> good;
  std::vector<std::int64_t> images(elements.size());
  for (std::size_t p = 0; p < M.size(); ++p) {
    bool ok = true;
    for (std::size_t i = 0; i < maps.size() && ok; ++i) {
      images[i] = maps[i][p];
      ok = images[i] != kNoPoint;
    }
    for (const auto& t : triples) {
      if (!ok) break;
      const auto hp = maps[t.h][p];
      if (hp == kNoPoint) {
        ok = false;
        break;
      }
      const auto ghp = maps[t.g][static_cast<std::size_t>(hp)];
      ok = ghp != kNoPoint && ghp == maps[t.gh][p];
    }
    if (!ok) continue;
    std::sort(images.begin(), images.end());
    if (std::adjacent_find(images.begin(), images.end()) == images.end()) good.push_back(p);
  }
  return good;
}

double sofic_quality(const LocalGSpace& M, const WeightedElementSet& U) {
  const auto good = good_points(M, U);
  return static_cast<double>(good.size()) * M.weight() / M.volume();
}

bool check_local_mp(const LocalGSpace& M, const GroupElement& g, const std::vector<std::size_t>& K) {
  std::vector<std::size_t> domain = K;
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  std::vector<std::size_t> image;
  image.reserve(domain.size());
  for (auto p : domain) {
    const auto q = M.act(g, p);
    if (!q) throw std::invalid_argument("action undefined on part of K");
    image.push_back(*q);
  }
  std::sort(image.begin(), image.end());
  image.erase(std::unique(image.begin(), image.end()), image.end());
  const double vol_k = static_cast<double>(domain.size()) * M.weight();
  const double vol_gk = static_cast<double>(image.size()) * M.weight();
  return std::abs(vol_k - vol_gk) <= kTolerance * std::max(1.0, vol_k);
}

bool is_atomless(const LocalGSpace&) { return false; }

GroupModel ModelFamily::group() const {
  switch (kind) {
    case ModelKind::cyclic:
    case ModelKind::interval:
      return GroupModel::integer_lattice(1);
    case ModelKind::torus:
      return GroupModel::integer_lattice(dim);
    case ModelKind::schreier:
      return GroupModel::free_group(rank);
    case ModelKind::circle:
      return GroupModel::real_line(step);
  }
  throw std::logic_error("unknown model kind");
}

LocalGSpace ModelFamily::build(std::size_t size) const {
  switch (kind) {
    case ModelKind::cyclic:
      return cyclic_quotient(size);
    case ModelKind::interval:
      return interval_space(size);
    case ModelKind::torus:
      return torus_quotient(std::vector<std::int64_t>(static_cast<std::size_t>(dim),
                                                      static_cast<std::int64_t>(size)));
    case ModelKind::schreier:
      return random_schreier_space(size, rank, perm_seed);
    case ModelKind::circle:
      return circle_space(static_cast<double>(size) * step, step);
  }
  throw std::logic_error("unknown model kind");
}

void SoficApproximation::add(LocalGSpace model, double U_radius, double epsilon) {
  if (!(epsilon >= 0.0) || !(U_radius >= 0.0)) {
    throw std::invalid_argument("certificate needs U radius >= 0 and epsilon >= 0");
  }
  if (!entries_.empty()) {
    const auto& last = entries_.back();
    if (epsilon > last.epsilon) throw std::invalid_argument("epsilon certificates must not increase");
    if (U_radius < last.U_radius) throw std::invalid_argument("U radii must not decrease");
    if (!(model.group() == last.model.group())) {
      throw std::invalid_argument("all models must carry the same group");
    }
  }
  entries_.push_back({std::move(model), U_radius, epsilon});
}

std::vector<double> SoficApproximation::qualities() const {
  std::vector<double> out;
  for (const auto& e : entries_) out.push_back(sofic_quality(e.model, e.model.group().ball(e.U_radius)));
  return out;
}

bool SoficApproximation::certified() const {
  const auto q = qualities();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < 1.0 - entries_[i].epsilon - kTolerance) return false;
  }
  return true;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cyclic:
      return "cyclic";
    case ModelKind::torus:
      return "torus";
    case ModelKind::schreier:
      return "schreier";
    case ModelKind::circle:
      return "circle";
    case ModelKind::interval:
      return "interval";
  }
  return "unknown";
}

}  // namespace sofic
