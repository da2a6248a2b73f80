#include "peerperm/designs.hpp"

#include <numeric>

#include "peerperm/error.hpp"

namespace peerperm {

SRDesign::SRDesign(AttributeVector strata, std::vector<std::vector<long>> counts)
    : strata_(std::move(strata)), counts_(std::move(counts)) {
  if (counts_.size() != strata_.alphabet_size())
    throw ValidationError("SR design needs one count row per stratum level");
  const std::size_t k = counts_.front().size();
  stratum_units_.resize(counts_.size());
  for (std::size_t i = 0; i < strata_.size(); ++i) stratum_units_[static_cast<std::size_t>(strata_[i])].push_back(static_cast<int>(i));
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a].size() != k) throw ValidationError("SR design rows must all have K entries");
    long total = 0;
    for (long n : counts_[a]) {
      if (n < 0) throw ValidationError("SR design counts must be nonnegative");
      total += n;
    }
    if (total != static_cast<long>(stratum_units_[a].size()))
      throw ValidationError("SR design row for level '" + strata_.label(static_cast<AttributeCode>(a)) + "' sums to " +
                            std::to_string(total) + " but " + std::to_string(stratum_units_[a].size()) +
                            " units carry that level");
  }
}

std::vector<int> SRDesign::label_template(AttributeCode a) const {
  std::vector<int> out;
  const auto& row = counts_.at(static_cast<std::size_t>(a));
  for (std::size_t k = 0; k < row.size(); ++k) out.insert(out.end(), static_cast<std::size_t>(row[k]), static_cast<int>(k));
  return out;
}

CRDesign::CRDesign(std::vector<long> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw ValidationError("CR design needs at least one group");
  long total = 0;
  for (long n : counts_) {
    if (n < 0) throw ValidationError("CR design counts must be nonnegative");
    total += n;
  }
  if (total < 2) throw ValidationError("CR design needs at least 2 units");
  num_units_ = static_cast<std::size_t>(total);
}

std::vector<int> CRDesign::label_template() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < counts_.size(); ++k) out.insert(out.end(), static_cast<std::size_t>(counts_[k]), static_cast<int>(k));
  return out;
}

std::size_t num_units(const Design& design) {
  return std::visit([](const auto& d) { return d.num_units(); }, design);
}

SRDesign sr_from_observed(const GroupLabelAssignment& labels, const AttributeVector& strata) {
  if (labels.size() != strata.size()) throw ValidationError("label and stratum vectors differ in length");
  std::vector<std::vector<long>> counts(strata.alphabet_size(), std::vector<long>(labels.num_groups(), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[static_cast<std::size_t>(strata[i])][static_cast<std::size_t>(labels[i])];
  return SRDesign(strata, std::move(counts));
}

CRDesign cr_from_observed(const GroupLabelAssignment& labels) {
  std::vector<long> counts(labels.num_groups(), 0);
  for (int l : labels.labels()) ++counts[static_cast<std::size_t>(l)];
  return CRDesign(std::move(counts));
}

bool satisfies(const Design& design, const GroupLabelAssignment& labels) {
  if (labels.size() != num_units(design)) return false;
  if (const auto* sr = std::get_if<SRDesign>(&design)) {
    if (labels.num_groups() != sr->num_groups()) return false;
    return sr_from_observed(labels, sr->strata()).counts() == sr->counts();
  }
  const auto& cr = std::get<CRDesign>(design);
  if (labels.num_groups() != cr.num_groups()) return false;
  return cr_from_observed(labels).counts() == cr.counts();
}

GroupLabelAssignment sample_sr(const SRDesign& design, Rng& rng) {
  std::vector<int> labels(design.num_units());
  for (std::size_t a = 0; a < design.counts().size(); ++a) {
    auto tmpl = design.label_template(static_cast<AttributeCode>(a));
    shuffle(std::span<int>(tmpl), rng);
    const auto& units = design.stratum_units()[a];
    for (std::size_t j = 0; j < units.size(); ++j) labels[static_cast<std::size_t>(units[j])] = tmpl[j];
  }
  return GroupLabelAssignment(std::move(labels), design.num_groups());
}

GroupLabelAssignment sample_cr(const CRDesign& design, Rng& rng) {
  auto labels = design.label_template();
  shuffle(std::span<int>(labels), rng);
  return GroupLabelAssignment(std::move(labels), design.num_groups());
}

GroupLabelAssignment sample(const Design& design, Rng& rng) {
  if (const auto* sr = std::get_if<SRDesign>(&design)) return sample_sr(*sr, rng);
  return sample_cr(std::get<CRDesign>(design), rng);
}

BigInt multinomial(std::span<const long> parts) {
  // Product of binomials C(n_1 + ... + n_j, n_j), each computed exactly.
  BigInt result = 1;
  long total = 0;
  for (long part : parts) {
    for (long j = 1; j <= part; ++j) {
      result *= total + j;
      result /= j;
    }
    total += part;
  }
  return result;
}

BigInt support_size(const Design& design) {
  if (const auto* sr = std::get_if<SRDesign>(&design)) {
    BigInt result = 1;
    for (const auto& row : sr->counts()) result *= multinomial(row);
    return result;
  }
  return multinomial(std::get<CRDesign>(design).counts());
}

}  // namespace peerperm
