#include "peerperm/oracle.hpp"

#include <algorithm>

#include "peerperm/error.hpp"

namespace peerperm {

Rational ExactDistribution::total() const {
  Rational sum = 0;
  for (const auto& [w, p] : atoms) sum += p;
  return sum;
}

Rational ExactDistribution::probability(const std::vector<Exposure>& w) const {
  auto it = atoms.find(w);
  return it == atoms.end() ? Rational(0) : it->second;
}

namespace {

void check_guard(const Design& design, std::size_t guard) {
  const BigInt size = support_size(design);
  if (size > guard)
    throw GuardError("design support has " + size.str() + " label vectors, above the enumeration guard of " +
                     std::to_string(guard));
}

}  // namespace

void for_each_assignment(const Design& design, std::size_t guard,
                         const std::function<void(const GroupLabelAssignment&)>& visit) {
  check_guard(design, guard);
  if (const auto* cr = std::get_if<CRDesign>(&design)) {
    auto labels = cr->label_template();  // sorted, so next_permutation walks every distinct arrangement
    do {
      visit(GroupLabelAssignment(labels, cr->num_groups()));
    } while (std::next_permutation(labels.begin(), labels.end()));
    return;
  }
  const auto& sr = std::get<SRDesign>(design);
  const std::size_t strata = sr.counts().size();
  std::vector<std::vector<int>> templates(strata);
  for (std::size_t a = 0; a < strata; ++a) templates[a] = sr.label_template(static_cast<AttributeCode>(a));
  std::vector<int> labels(sr.num_units(), 0);

  std::function<void(std::size_t)> recurse = [&](std::size_t a) {
    if (a == strata) {
      visit(GroupLabelAssignment(labels, sr.num_groups()));
      return;
    }
    auto& t = templates[a];
    std::sort(t.begin(), t.end());
    const auto& units = sr.stratum_units()[a];
    do {
      for (std::size_t j = 0; j < units.size(); ++j) labels[static_cast<std::size_t>(units[j])] = t[j];
      recurse(a + 1);
    } while (std::next_permutation(t.begin(), t.end()));
  };
  recurse(0);
}

std::vector<GroupLabelAssignment> enumerate_assignments(const Design& design, std::size_t guard) {
  std::vector<GroupLabelAssignment> out;
  for_each_assignment(design, guard, [&](const GroupLabelAssignment& l) { out.push_back(l); });
  return out;
}

ExposureVector map_exposures(const GroupLabelAssignment& labels, const AttributeVector& attribute,
                             const ExposureMapping& mapping) {
  auto w = exposure_from_labels(labels, attribute, mapping.kind);
  if (mapping.coarsening) w = coarsen_exposure(w, *mapping.coarsening, attribute.levels());
  return w;
}

ExactDistribution exact_exposure_distribution(const Design& design, const AttributeVector& attribute,
                                              const ExposureMapping& mapping, std::size_t guard) {
  if (num_units(design) != attribute.size()) throw ValidationError("design and attribute lengths differ");
  std::map<std::vector<Exposure>, BigInt> counts;
  BigInt total = 0;
  for_each_assignment(design, guard, [&](const GroupLabelAssignment& labels) {
    ++counts[map_exposures(labels, attribute, mapping).values];
    ++total;
  });
  ExactDistribution law;
  for (auto& [w, c] : counts) law.atoms.emplace(w, Rational(c, total));
  return law;
}

namespace {

bool focal_matches(const std::vector<Exposure>& w, const FocalSet& focal) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool in = w[i] == focal.c1 || w[i] == focal.c2;
    if (in != focal.member[i]) return false;
  }
  return true;
}

}  // namespace

ExactDistribution condition_on_focal(const ExactDistribution& law, const FocalSet& focal_obs) {
  ExactDistribution out;
  Rational mass = 0;
  for (const auto& [w, p] : law.atoms) {
    if (!focal_matches(w, focal_obs)) continue;
    out.atoms.emplace(w, p);
    mass += p;
  }
  if (mass == 0) throw ValidationError("observed focal set is unreachable under the design");
  for (auto& [w, p] : out.atoms) p /= mass;
  return out;
}

ExactDistribution exact_conditional_distribution(const Design& design, const AttributeVector& attribute,
                                                 const ExposureMapping& mapping, const FocalSet& focal_obs,
                                                 std::size_t guard) {
  return condition_on_focal(exact_exposure_distribution(design, attribute, mapping, guard), focal_obs);
}

RejectionDraw rejection_sample_conditional(const Design& design, const AttributeVector& attribute,
                                           const ExposureMapping& mapping, const FocalSet& focal_obs, Rng& rng,
                                           std::size_t max_attempts) {
  if (focal_obs.size() != attribute.size()) throw ValidationError("focal set and attribute lengths differ");
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    auto w = map_exposures(sample(design, rng), attribute, mapping);
    if (focal_matches(w.values, focal_obs)) return RejectionDraw{std::move(w), attempt};
  }
  throw GuardError("rejection sampler exceeded " + std::to_string(max_attempts) + " attempts");
}

bool feasibility_check(const ExposureVector& candidate, const Design& design, const AttributeVector& attribute,
                       const ExposureMapping& mapping, std::size_t guard) {
  if (candidate.size() != attribute.size()) throw ValidationError("candidate and attribute lengths differ");
  bool found = false;
  for_each_assignment(design, guard, [&](const GroupLabelAssignment& labels) {
    if (!found && map_exposures(labels, attribute, mapping).values == candidate.values) found = true;
  });
  return found;
}

Rational exact_pvalue_from_law(const ExactDistribution& law, const AttributeVector& attribute,
                               std::span<const double> outcomes, const std::vector<Exposure>& observed,
                               const NullSpec& null, const TestStatisticSpec& spec) {
  const auto& c1 = null.contrast.c1;
  const auto& c2 = null.contrast.c2;
  const std::size_t n = attribute.size();

  // Units entering the statistic: fixed focal units (pairwise) or all units (sharp).
  std::vector<int> units;
  for (std::size_t i = 0; i < n; ++i) {
    const bool focal = observed[i] == c1 || observed[i] == c2;
    if (null.kind == NullSpec::Kind::pairwise && !focal) continue;
    if (null.kind == NullSpec::Kind::pairwise && null.subgroup && attribute[i] != *null.subgroup) continue;
    units.push_back(static_cast<int>(i));
  }
  if (units.empty()) throw ValidationError("no focal units");
  const StatisticEvaluator evaluator(spec, StatisticEvaluator::restrict(spec, attribute, units));
  std::vector<double> y;
  for (int u : units) y.push_back(outcomes[static_cast<std::size_t>(u)]);

  auto arms_of = [&](const std::vector<Exposure>& w) {
    std::vector<Arm> arms;
    arms.reserve(units.size());
    for (int u : units) {
      const auto& e = w[static_cast<std::size_t>(u)];
      arms.push_back(e == c1 ? kArmC1 : e == c2 ? kArmC2 : kArmOut);
    }
    return arms;
  };
  auto oriented = [&](double t) { return spec.direction == Direction::two_sided ? std::abs(t) : t; };

  const double t_obs = oriented(evaluator(y, arms_of(observed)));
  Rational p = 0;
  for (const auto& [w, prob] : law.atoms)
    if (oriented(evaluator(y, arms_of(w))) >= t_obs) p += prob;
  return p;
}

Rational exact_pvalue(const Experiment& experiment, const Design& design, const ExposureMapping& mapping,
                      const NullSpec& null, const TestStatisticSpec& spec, std::size_t guard) {
  const auto law = exact_exposure_distribution(design, experiment.attribute, mapping, guard);
  const auto& observed = experiment.exposures.values;
  if (law.probability(observed) == 0) throw ValidationError("observed exposures are not in the design's support");
  if (null.kind == NullSpec::Kind::sharp)
    return exact_pvalue_from_law(law, experiment.attribute, experiment.outcomes.values(), observed, null, spec);
  const FocalSet focal = focal_set(experiment.exposures, null.contrast.c1, null.contrast.c2);
  return exact_pvalue_from_law(condition_on_focal(law, focal), experiment.attribute, experiment.outcomes.values(),
                               observed, null, spec);
}

}  // namespace peerperm
