#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sofic/microstates.hpp"

namespace sofic {

using Count = boost::multiprecision::cpp_int;

struct CountOptions {
  int workers = 1;
  std::uint64_t node_limit = 400'000'000;
  std::size_t memo_limit = 4'000'000;
};

struct CountResult {
  Count lower;
  Count upper;
  bool exact = true;
  std::string engine;
  std::uint64_t nodes = 0;
};

// Exact |Map(M, X, U, delta)| (with its measure constraint) by depth-first
// search along M.traversal_order() with prefix pruning and memoization.
CountResult count_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                              const ShiftSystem& system, const CountOptions& options = {});

// All accepted labelings in lexicographic traversal order; throws
// std::length_error when there are more than `limit`.
std::vector<Labeling> enumerate_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                                            const ShiftSystem& system, std::size_t limit,
                                            const CountOptions& options = {});

// Independent uniform draws from the accepted set, guided by subtree counts.
std::vector<Labeling> sample_microstates(const LocalGSpace& M, const MapSpaceSpec& spec,
                                         const ShiftSystem& system, std::size_t samples,
                                         std::mt19937_64& rng, const CountOptions& options = {});

// trace(T^n) for a nearest-neighbor Z-system.
Count transfer_matrix_count(const ShiftSystem& system, std::size_t n);

// Natural log; -infinity for zero.
double log_count(const Count& c);
Count binomial(unsigned n, unsigned k);

}  // namespace sofic
