#pragma once

// Stratified SR(n_A) and completely randomized CR(n) group formation designs.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <variant>
#include <vector>

#include "peerperm/core_model.hpp"
#include "peerperm/rng.hpp"

namespace peerperm {

using BigInt = boost::multiprecision::cpp_int;

/// Uniform over label vectors in which exactly counts[a][k] units with
/// stratum value a receive group label k. The stratifier is usually the
/// attribute A, or a constructed covariate B = (A, C).
class SRDesign {
 public:
  SRDesign(AttributeVector strata, std::vector<std::vector<long>> counts);

  const AttributeVector& strata() const { return strata_; }
  const std::vector<std::vector<long>>& counts() const { return counts_; }
  std::size_t num_units() const { return strata_.size(); }
  std::size_t num_groups() const { return counts_.empty() ? 0 : counts_.front().size(); }

  /// Labels given to stratum `a`'s units, in unit order, before shuffling:
  /// group 0 repeated counts[a][0] times, then group 1, and so on.
  std::vector<int> label_template(AttributeCode a) const;

  /// Unit indices of each stratum, in increasing order.
  const std::vector<std::vector<int>>& stratum_units() const { return stratum_units_; }

 private:
  AttributeVector strata_;
  std::vector<std::vector<long>> counts_;
  std::vector<std::vector<int>> stratum_units_;
};

/// Uniform over label vectors in which exactly counts[k] units get label k.
class CRDesign {
 public:
  explicit CRDesign(std::vector<long> counts);

  const std::vector<long>& counts() const { return counts_; }
  std::size_t num_units() const { return num_units_; }
  std::size_t num_groups() const { return counts_.size(); }
  std::vector<int> label_template() const;

 private:
  std::vector<long> counts_;
  std::size_t num_units_ = 0;
};

using Design = std::variant<SRDesign, CRDesign>;

std::size_t num_units(const Design& design);

/// counts[a][k] = |{i : A_i = a, L_i = k}|.
SRDesign sr_from_observed(const GroupLabelAssignment& labels, const AttributeVector& strata);

/// Group sizes of an observed assignment as a CR design.
CRDesign cr_from_observed(const GroupLabelAssignment& labels);

/// True when `labels` is in the support of `design`.
bool satisfies(const Design& design, const GroupLabelAssignment& labels);

GroupLabelAssignment sample_sr(const SRDesign& design, Rng& rng);
GroupLabelAssignment sample_cr(const CRDesign& design, Rng& rng);
GroupLabelAssignment sample(const Design& design, Rng& rng);

/// Number of label vectors in the support (product of multinomials for SR).
BigInt support_size(const Design& design);

BigInt multinomial(std::span<const long> parts);

}  // namespace peerperm
