#include "sofic/group.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

constexpr double kGridTolerance = 1e-9;

void append_reduced(std::vector<int>& out, int letter) {
  if (!out.empty() && out.back() == -letter) {
    out.pop_back();
  } else {
    out.push_back(letter);
  }
}

}  // namespace

GroupModel GroupModel::integer_lattice(int dim) {
  if (dim < 1) throw std::invalid_argument("integer lattice needs dim >= 1");
  return GroupModel(GroupKind::integer_lattice, dim, 0.0);
}

GroupModel GroupModel::free_group(int rank) {
  if (rank < 1) throw std::invalid_argument("free group needs rank >= 1");
  if (rank > 26) throw std::invalid_argument("free group rank is limited to 26 generators");
  return GroupModel(GroupKind::free_group, rank, 0.0);
}

GroupModel GroupModel::real_line(double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("real line needs a positive quadrature step");
  }
  return GroupModel(GroupKind::real_line, 1, step);
}

int GroupModel::dim() const {
  if (kind_ != GroupKind::integer_lattice) throw std::logic_error("dim() on a non-lattice group");
  return dim_;
}

int GroupModel::rank() const {
  if (kind_ != GroupKind::free_group) throw std::logic_error("rank() on a non-free group");
  return dim_;
}

double GroupModel::step() const {
  if (kind_ != GroupKind::real_line) throw std::logic_error("step() on a discrete group");
  return step_;
}

int GroupModel::generator_count() const { return kind_ == GroupKind::real_line ? 1 : dim_; }

double GroupModel::point_weight() const { return kind_ == GroupKind::real_line ? step_ : 1.0; }

GroupElement GroupModel::identity() const {
  switch (kind_) {
    case GroupKind::integer_lattice:
      return LatticeVector{std::vector<std::int64_t>(static_cast<std::size_t>(dim_), 0)};
    case GroupKind::free_group:
      return FreeWord{};
    case GroupKind::real_line:
      return GridReal{0};
  }
  throw std::logic_error("unknown group kind");
}

GroupElement GroupModel::generator(int index) const {
  if (index < 0 || index >= generator_count()) throw std::out_of_range("generator index");
  switch (kind_) {
    case GroupKind::integer_lattice: {
      LatticeVector v{std::vector<std::int64_t>(static_cast<std::size_t>(dim_), 0)};
      v.coords[static_cast<std::size_t>(index)] = 1;
      return v;
    }
    case GroupKind::free_group:
      return FreeWord{{index + 1}};
    case GroupKind::real_line:
      return GridReal{1};
  }
  throw std::logic_error("unknown group kind");
}

bool GroupModel::contains(const GroupElement& g) const {
  switch (kind_) {
    case GroupKind::integer_lattice: {
      const auto* v = std::get_if<LatticeVector>(&g);
      return v != nullptr && v->coords.size() == static_cast<std::size_t>(dim_);
    }
    case GroupKind::free_group: {
      const auto* w = std::get_if<FreeWord>(&g);
      if (w == nullptr) return false;
      for (std::size_t i = 0; i < w->letters.size(); ++i) {
        const int letter = w->letters[i];
        if (letter == 0 || std::abs(letter) > dim_) return false;
        if (i > 0 && w->letters[i - 1] == -letter) return false;
      }
      return true;
    }
    case GroupKind::real_line:
      return std::holds_alternative<GridReal>(g);
  }
  return false;
}

void GroupModel::require(const GroupElement& g) const {
  if (!contains(g)) {
    throw std::invalid_argument("group element does not belong to this group model");
  }
}

bool GroupModel::is_identity(const GroupElement& g) const {
  require(g);
  return g == identity();
}

GroupElement GroupModel::multiply(const GroupElement& g, const GroupElement& h) const {
  require(g);
  require(h);
  switch (kind_) {
    case GroupKind::integer_lattice: {
      LatticeVector out = std::get<LatticeVector>(g);
      const auto& rhs = std::get<LatticeVector>(h).coords;
      for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] += rhs[i];
      return out;
    }
    case GroupKind::free_group: {
      FreeWord out = std::get<FreeWord>(g);
      for (int letter : std::get<FreeWord>(h).letters) append_reduced(out.letters, letter);
      return out;
    }
    case GroupKind::real_line:
      return GridReal{std::get<GridReal>(g).steps + std::get<GridReal>(h).steps};
  }
  throw std::logic_error("unknown group kind");
}

GroupElement GroupModel::inverse(const GroupElement& g) const {
  require(g);
  switch (kind_) {
    case GroupKind::integer_lattice: {
      LatticeVector out = std::get<LatticeVector>(g);
      for (auto& c : out.coords) c = -c;
      return out;
    }
    case GroupKind::free_group: {
      const auto& letters = std::get<FreeWord>(g).letters;
      FreeWord out;
      out.letters.reserve(letters.size());
      for (auto it = letters.rbegin(); it != letters.rend(); ++it) out.letters.push_back(-*it);
      return out;
    }
    case GroupKind::real_line:
      return GridReal{-std::get<GridReal>(g).steps};
  }
  throw std::logic_error("unknown group kind");
}

double GroupModel::length(const GroupElement& g) const {
  require(g);
  switch (kind_) {
    case GroupKind::integer_lattice: {
      std::int64_t best = 0;
      for (auto c : std::get<LatticeVector>(g).coords) best = std::max(best, std::abs(c));
      return static_cast<double>(best);
    }
    case GroupKind::free_group:
      return static_cast<double>(std::get<FreeWord>(g).letters.size());
    case GroupKind::real_line:
      return std::abs(static_cast<double>(std::get<GridReal>(g).steps) * step_);
  }
  throw std::logic_error("unknown group kind");
}

WeightedElementSet GroupModel::ball(double radius) const {
  if (!(radius >= 0.0)) throw std::invalid_argument("ball radius must be nonnegative");
  WeightedElementSet out;
  switch (kind_) {
    case GroupKind::integer_lattice: {
      const auto k = static_cast<std::int64_t>(std::floor(radius + kGridTolerance));
      std::vector<std::int64_t> coords(static_cast<std::size_t>(dim_), -k);
      while (true) {
        out.insert(LatticeVector{coords}, 1.0);
        std::size_t i = coords.size();
        while (i > 0 && coords[i - 1] == k) {
          coords[i - 1] = -k;
          --i;
        }
        if (i == 0) break;
        ++coords[i - 1];
      }
      break;
    }
    case GroupKind::free_group: {
      const auto k = static_cast<std::size_t>(std::floor(radius + kGridTolerance));
      std::vector<FreeWord> layer{FreeWord{}};
      out.insert(FreeWord{}, 1.0);
      for (std::size_t len = 1; len <= k; ++len) {
        std::vector<FreeWord> next;
        for (const auto& w : layer) {
          for (int gen = 1; gen <= dim_; ++gen) {
            for (int letter : {gen, -gen}) {
              if (!w.letters.empty() && w.letters.back() == -letter) continue;
              FreeWord extended = w;
              extended.letters.push_back(letter);
              out.insert(extended, 1.0);
              next.push_back(std::move(extended));
            }
          }
        }
        layer = std::move(next);
      }
      break;
    }
    case GroupKind::real_line: {
      const auto k = static_cast<std::int64_t>(std::ceil(radius / step_ - kGridTolerance)) - 1;
      for (std::int64_t s = -k; s <= k; ++s) out.insert(GridReal{s}, step_);
      break;
    }
  }
  return out;
}

GroupElement GroupModel::lattice(std::vector<std::int64_t> coords) const {
  GroupElement g = LatticeVector{std::move(coords)};
  require(g);
  return g;
}

GroupElement GroupModel::word(std::string_view text) const {
  if (kind_ != GroupKind::free_group) throw std::invalid_argument("words need a free group");
  FreeWord w;
  if (text == "e" || text == "1") return w;
  for (char ch : text) {
    if (!std::isalpha(static_cast<unsigned char>(ch))) {
      throw std::invalid_argument(fmt::format("invalid letter '{}' in word", ch));
    }
    const bool inverse = std::isupper(static_cast<unsigned char>(ch)) != 0;
    const int gen = std::tolower(static_cast<unsigned char>(ch)) - 'a' + 1;
    if (gen > dim_) throw std::invalid_argument(fmt::format("letter '{}' exceeds rank", ch));
    append_reduced(w.letters, inverse ? -gen : gen);
  }
  return w;
}

GroupElement GroupModel::real(double value) const {
  if (kind_ != GroupKind::real_line) throw std::invalid_argument("real values need a real-line group");
  auto [g, err] = quantize(value);
  if (err > kGridTolerance * std::max(1.0, std::abs(value))) {
    throw std::invalid_argument(fmt::format("{} is not a multiple of the step {}", value, step_));
  }
  return g;
}

std::pair<GroupElement, double> GroupModel::quantize(double value) const {
  if (kind_ != GroupKind::real_line) throw std::invalid_argument("quantize needs a real-line group");
  const auto steps = static_cast<std::int64_t>(std::llround(value / step_));
  return {GridReal{steps}, std::abs(static_cast<double>(steps) * step_ - value)};
}

double GroupModel::real_value(const GroupElement& g) const {
  require(g);
  if (kind_ != GroupKind::real_line) throw std::invalid_argument("real_value needs a real-line group");
  return static_cast<double>(std::get<GridReal>(g).steps) * step_;
}

std::string GroupModel::format(const GroupElement& g) const {
  require(g);
  switch (kind_) {
    case GroupKind::integer_lattice: {
      const auto& c = std::get<LatticeVector>(g).coords;
      if (c.size() == 1) return fmt::format("{}", c[0]);
      return fmt::format("({})", fmt::join(c, ","));
    }
    case GroupKind::free_group: {
      const auto& letters = std::get<FreeWord>(g).letters;
      if (letters.empty()) return "e";
      std::string out;
      for (int letter : letters) {
        const char base = static_cast<char>('a' + std::abs(letter) - 1);
        out.push_back(letter > 0 ? base : static_cast<char>(std::toupper(base)));
      }
      return out;
    }
    case GroupKind::real_line:
      return fmt::format("{}", real_value(g));
  }
  return {};
}

void WeightedElementSet::insert(GroupElement element, double weight) {
  if (!(weight >= 0.0)) throw std::invalid_argument("element weights must be nonnegative");
  if (index_.contains(element)) throw std::invalid_argument("duplicate element in weighted set");
  index_.emplace(element, entries_.size());
  entries_.push_back({std::move(element), weight});
}

std::vector<GroupElement> WeightedElementSet::elements() const {
  std::vector<GroupElement> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.element);
  return out;
}

double haar(const WeightedElementSet& set) {
  double total = 0.0;
  for (const auto& e : set.entries()) total += e.weight;
  return total;
}

BallProductVerdict check_ball_product(const GroupModel& group, double r0, double r1, double r2,
                                      double delta, const WeightedElementSet& w0,
                                      const WeightedElementSet& w2) {
  if (!(0.0 < r0 && r0 < r1 && r1 < r2)) throw std::invalid_argument("need 0 < r0 < r1 < r2");
  if (!(delta > 0.0)) throw std::invalid_argument("need delta > 0");

  const auto b0 = group.ball(r0);
  const auto b1 = group.ball(r1);
  const auto b2 = group.ball(r2);
  for (const auto& e : w0.entries()) {
    if (!b0.contains(e.element)) throw std::invalid_argument("W0 is not contained in B(r0)");
  }
  for (const auto& e : w2.entries()) {
    if (!b2.contains(e.element)) throw std::invalid_argument("W2 is not contained in B(r2)");
  }

  BallProductVerdict v;
  v.haar_b0 = haar(b0);
  v.haar_b1 = haar(b1);
  v.haar_b2 = haar(b2);
  v.haar_w0 = haar(w0);
  v.haar_w2 = haar(w2);
  v.hypotheses_hold = r0 + r1 < r2 && delta * v.haar_b2 < (1.0 - delta) * v.haar_b0 &&
                      v.haar_w0 > (1.0 - delta) * v.haar_b0 &&
                      v.haar_w2 > (1.0 - delta) * v.haar_b2;

  std::set<GroupElement> products;
  for (const auto& a : w0.entries()) {
    for (const auto& b : w2.entries()) products.insert(group.multiply(a.element, b.element));
  }
  v.conclusion_holds = std::all_of(b1.entries().begin(), b1.entries().end(),
                                   [&](const auto& e) { return products.contains(e.element); });
  return v;
}

}  // namespace sofic
