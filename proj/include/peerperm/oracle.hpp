#pragma once

// Ground truth for small designs: exhaustive enumeration of the label support,
// exact (rational) exposure distributions, exact p-values, rejection sampling
// from the conditional law, and feasibility of candidate exposure vectors.

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "peerperm/core_model.hpp"
#include "peerperm/designs.hpp"
#include "peerperm/inference.hpp"

namespace peerperm {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kDefaultEnumerationGuard = 1'000'000;

/// Probability of every exposure vector in a support; keys are the
/// canonical per-unit exposures.
struct ExactDistribution {
  std::map<std::vector<Exposure>, Rational> atoms;

  Rational total() const;
  std::size_t support_size() const { return atoms.size(); }
  Rational probability(const std::vector<Exposure>& w) const;
};

/// Every label vector in the design's support, each exactly once. Throws
/// GuardError (with the support size) when the support exceeds `guard`.
std::vector<GroupLabelAssignment> enumerate_assignments(const Design& design,
                                                        std::size_t guard = kDefaultEnumerationGuard);

/// Streams the support instead of materializing it.
void for_each_assignment(const Design& design, std::size_t guard,
                         const std::function<void(const GroupLabelAssignment&)>& visit);

/// Exposure law under the design, optionally coarsened.
struct ExposureMapping {
  ExposureKind kind = ExposureKind::count;
  const CoarseningMap* coarsening = nullptr;
};

ExposureVector map_exposures(const GroupLabelAssignment& labels, const AttributeVector& attribute,
                             const ExposureMapping& mapping);

ExactDistribution exact_exposure_distribution(const Design& design, const AttributeVector& attribute,
                                              const ExposureMapping& mapping,
                                              std::size_t guard = kDefaultEnumerationGuard);

/// Restriction of the exposure law to {W : u(W) = U_obs}, renormalized.
/// Throws ValidationError when U_obs is unreachable.
ExactDistribution exact_conditional_distribution(const Design& design, const AttributeVector& attribute,
                                                 const ExposureMapping& mapping, const FocalSet& focal_obs,
                                                 std::size_t guard = kDefaultEnumerationGuard);

/// Conditioning of an unconditional law on the focal set; used when the law is already at hand.
ExactDistribution condition_on_focal(const ExactDistribution& law, const FocalSet& focal_obs);

struct RejectionDraw {
  ExposureVector exposures;
  std::size_t attempts = 0;
};

/// One exact draw from pr(W | U_obs): sample assignments from the design
/// until the induced focal set equals U_obs. `attempts` counts every
/// assignment drawn, including the accepted one.
RejectionDraw rejection_sample_conditional(const Design& design, const AttributeVector& attribute,
                                           const ExposureMapping& mapping, const FocalSet& focal_obs, Rng& rng,
                                           std::size_t max_attempts = 10'000'000);

/// True iff some label vector in the support induces `candidate`.
bool feasibility_check(const ExposureVector& candidate, const Design& design, const AttributeVector& attribute,
                       const ExposureMapping& mapping, std::size_t guard = kDefaultEnumerationGuard);

struct NullSpec {
  enum class Kind { sharp, pairwise };
  Kind kind = Kind::pairwise;
  Contrast contrast;
  std::optional<AttributeCode> subgroup;
};

/// Exact p-value of the randomization test under `design` (no conditioning on
/// attribute tallies): sum of pr(W' | U_obs) over W' with T(W') >= T_obs
/// (pr(W') for the sharp null).
Rational exact_pvalue(const Experiment& experiment, const Design& design, const ExposureMapping& mapping,
                      const NullSpec& null, const TestStatisticSpec& spec,
                      std::size_t guard = kDefaultEnumerationGuard);

/// Same as exact_pvalue but over a precomputed law (unconditional for sharp,
/// conditional for pairwise). `outcomes` are the imputed outcomes.
Rational exact_pvalue_from_law(const ExactDistribution& law, const AttributeVector& attribute,
                               std::span<const double> outcomes, const std::vector<Exposure>& observed,
                               const NullSpec& null, const TestStatisticSpec& spec);

}  // namespace peerperm
