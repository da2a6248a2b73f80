#pragma once

// Coordinate permutations and stabilizers of vectors. The stabilizer of a
// vector in the symmetric group factors into independent permutations of its
// level sets ("strata"), so sampling uniformly from it is one shuffle per
// stratum and no general group machinery is needed.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "peerperm/core_model.hpp"
#include "peerperm/designs.hpp"
#include "peerperm/error.hpp"
#include "peerperm/rng.hpp"

namespace peerperm {

/// Bijection on {0..N-1} stored as its forward map i -> pi(i).
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> forward);
  static Permutation identity(std::size_t n);

  std::size_t size() const { return forward_.size(); }
  int operator()(std::size_t i) const { return forward_[i]; }
  std::span<const int> forward() const { return forward_; }
  Permutation inverse() const;
  /// (this * other)(i) = this(other(i)).
  Permutation compose(const Permutation& other) const;
  bool is_identity() const;

  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> forward_;
};

/// Index sets of the distinct values of a vector, ordered by value.
struct StabilizerStrata {
  std::vector<std::vector<int>> strata;
  std::size_t num_units = 0;

  /// Order of the stabilizer group: product of stratum-size factorials.
  BigInt group_order() const;
};

template <typename T>
StabilizerStrata stabilizer_strata(std::span<const T> values) {
  std::map<T, std::vector<int>> by_value;
  for (std::size_t i = 0; i < values.size(); ++i) by_value[values[i]].push_back(static_cast<int>(i));
  StabilizerStrata out;
  out.num_units = values.size();
  for (auto& [value, idx] : by_value) out.strata.push_back(std::move(idx));
  return out;
}

StabilizerStrata stabilizer_strata(const AttributeVector& attribute);

/// Uniform draw from the stabilizer: an independent uniform permutation of each stratum.
Permutation sample_stabilizer_permutation(const StabilizerStrata& strata, Rng& rng);

/// (pi . x)_i = x_{pi^{-1}(i)}, i.e. the entry at position j moves to pi(j).
template <typename T>
std::vector<T> apply_permutation(const Permutation& pi, std::span<const T> x) {
  if (pi.size() != x.size()) throw ValidationError("permutation and vector lengths differ");
  std::vector<T> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[static_cast<std::size_t>(pi(j))] = x[j];
  return out;
}

GroupLabelAssignment apply_permutation(const Permutation& pi, const GroupLabelAssignment& labels);
ExposureVector apply_permutation(const Permutation& pi, const ExposureVector& exposures);

/// Strata of the pair (A_i, U_i): the stabilizer of the focal indicator
/// inside the stabilizer of A.
StabilizerStrata joint_strata(const AttributeVector& attribute, const FocalSet& focal);

/// Checks c*(pi . L) == pi . c*(L) for `trials` draws of L from the design and
/// pi uniform in the stabilizer of A, where c* maps labels to exposures.
bool verify_equivariance(const Design& design, const AttributeVector& attribute, ExposureKind kind,
                         std::size_t trials, Rng& rng);

/// Calls visit(pi) for every element of the stabilizer group. Throws GuardError
/// when the group order exceeds `guard`.
void for_each_stabilizer_permutation(const StabilizerStrata& strata, std::size_t guard,
                                     const std::function<void(const Permutation&)>& visit);

struct OrbitStabilizerCounts {
  BigInt group_order;
  std::size_t orbit_size = 0;
  std::size_t stabilizer_size = 0;
};

/// Exhaustive orbit and stabilizer sizes of x under the group of `strata`.
template <typename T>
OrbitStabilizerCounts orbit_stabilizer_counts(const StabilizerStrata& strata, std::span<const T> x,
                                              std::size_t guard = 1'000'000) {
  if (strata.num_units != x.size()) throw ValidationError("strata and vector lengths differ");
  std::set<std::vector<T>> orbit;
  std::size_t fixed = 0;
  for_each_stabilizer_permutation(strata, guard, [&](const Permutation& pi) {
    auto image = apply_permutation(pi, x);
    if (std::equal(image.begin(), image.end(), x.begin())) ++fixed;
    orbit.insert(std::move(image));
  });
  return {strata.group_order(), orbit.size(), fixed};
}

}  // namespace peerperm
