#include "peerperm/symmetry.hpp"

#include <algorithm>
#include <numeric>

namespace peerperm {

Permutation::Permutation(std::vector<int> forward) : forward_(std::move(forward)) {
  std::vector<bool> seen(forward_.size(), false);
  for (int v : forward_) {
    if (v < 0 || static_cast<std::size_t>(v) >= forward_.size() || seen[static_cast<std::size_t>(v)])
      throw ValidationError("not a bijection");
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> f(n);
  std::iota(f.begin(), f.end(), 0);
  return Permutation(std::move(f));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(forward_.size());
  for (std::size_t i = 0; i < forward_.size(); ++i) inv[static_cast<std::size_t>(forward_[i])] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (other.size() != size()) throw ValidationError("permutation sizes differ");
  std::vector<int> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = forward_[static_cast<std::size_t>(other(i))];
  return Permutation(std::move(out));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < forward_.size(); ++i)
    if (forward_[i] != static_cast<int>(i)) return false;
  return true;
}

BigInt StabilizerStrata::group_order() const {
  BigInt order = 1;
  for (const auto& s : strata)
    for (std::size_t j = 2; j <= s.size(); ++j) order *= j;
  return order;
}

StabilizerStrata stabilizer_strata(const AttributeVector& attribute) {
  return stabilizer_strata<AttributeCode>(attribute.codes());
}

Permutation sample_stabilizer_permutation(const StabilizerStrata& strata, Rng& rng) {
  std::vector<int> forward(strata.num_units);
  std::iota(forward.begin(), forward.end(), 0);
  std::vector<int> images;
  for (const auto& s : strata.strata) {
    images = s;
    shuffle(std::span<int>(images), rng);
    for (std::size_t j = 0; j < s.size(); ++j) forward[static_cast<std::size_t>(s[j])] = images[j];
  }
  return Permutation(std::move(forward));
}

GroupLabelAssignment apply_permutation(const Permutation& pi, const GroupLabelAssignment& labels) {
  return GroupLabelAssignment(apply_permutation<int>(pi, labels.labels()), labels.num_groups());
}

ExposureVector apply_permutation(const Permutation& pi, const ExposureVector& exposures) {
  return ExposureVector{exposures.kind, apply_permutation<Exposure>(pi, exposures.values)};
}

StabilizerStrata joint_strata(const AttributeVector& attribute, const FocalSet& focal) {
  if (attribute.size() != focal.size()) throw ValidationError("attribute and focal set lengths differ");
  std::vector<std::pair<AttributeCode, bool>> pairs(attribute.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {attribute[i], focal.member[i]};
  return stabilizer_strata<std::pair<AttributeCode, bool>>(pairs);
}

bool verify_equivariance(const Design& design, const AttributeVector& attribute, ExposureKind kind,
                         std::size_t trials, Rng& rng) {
  const auto strata = stabilizer_strata(attribute);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto labels = sample(design, rng);
    const auto pi = sample_stabilizer_permutation(strata, rng);
    const auto lhs = exposure_of(labels_to_assignment(apply_permutation(pi, labels)), attribute, kind);
    const auto rhs = apply_permutation(pi, exposure_of(labels_to_assignment(labels), attribute, kind));
    if (!(lhs == rhs)) return false;
  }
  return true;
}

void for_each_stabilizer_permutation(const StabilizerStrata& strata, std::size_t guard,
                                     const std::function<void(const Permutation&)>& visit) {
  const BigInt order = strata.group_order();
  if (order > guard)
    throw GuardError("stabilizer group has " + order.str() + " elements, above the enumeration guard of " +
                     std::to_string(guard));
  std::vector<std::vector<int>> images;
  for (const auto& s : strata.strata) images.push_back(s);  // sorted: first permutation in lexicographic order
  std::vector<int> forward(strata.num_units);
  std::iota(forward.begin(), forward.end(), 0);

  std::function<void(std::size_t)> recurse = [&](std::size_t level) {
    if (level == images.size()) {
      visit(Permutation(forward));
      return;
    }
    const auto& source = strata.strata[level];
    auto& img = images[level];
    std::sort(img.begin(), img.end());
    do {
      for (std::size_t j = 0; j < source.size(); ++j) forward[static_cast<std::size_t>(source[j])] = img[j];
      recurse(level + 1);
    } while (std::next_permutation(img.begin(), img.end()));
  };
  recurse(0);
}

}  // namespace peerperm
