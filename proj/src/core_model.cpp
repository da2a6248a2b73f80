#include "peerperm/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "peerperm/error.hpp"

namespace peerperm {

AttributeVector::AttributeVector(std::vector<AttributeCode> codes, std::vector<std::string> levels)
    : codes_(std::move(codes)), levels_(std::move(levels)) {
  if (codes_.size() < 2) throw ValidationError("attribute vector needs at least 2 units");
  if (levels_.empty()) throw ValidationError("attribute alphabet is empty");
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] < 0 || static_cast<std::size_t>(codes_[i]) >= levels_.size()) {
      throw ValidationError("attribute code " + std::to_string(codes_[i]) + " of unit " + std::to_string(i) +
                            " is outside the declared alphabet");
    }
  }
}

AttributeVector AttributeVector::binary(std::vector<AttributeCode> codes) {
  return AttributeVector(std::move(codes), {"0", "1"});
}

std::optional<AttributeCode> AttributeVector::code_of(const std::string& label) const {
  auto it = std::find(levels_.begin(), levels_.end(), label);
  if (it == levels_.end()) return std::nullopt;
  return static_cast<AttributeCode>(it - levels_.begin());
}

std::size_t AttributeVector::count(AttributeCode code) const {
  return static_cast<std::size_t>(std::count(codes_.begin(), codes_.end(), code));
}

AttributeVector constructed_covariate(const AttributeVector& attribute, const AttributeVector& covariate) {
  if (attribute.size() != covariate.size()) throw ValidationError("attribute and covariate lengths differ");
  const auto c_levels = covariate.alphabet_size();
  std::vector<std::string> levels;
  for (const auto& a : attribute.levels())
    for (const auto& c : covariate.levels()) levels.push_back(a + "|" + c);
  std::vector<AttributeCode> codes(attribute.size());
  for (std::size_t i = 0; i < codes.size(); ++i)
    codes[i] = attribute[i] * static_cast<AttributeCode>(c_levels) + covariate[i];
  return AttributeVector(std::move(codes), std::move(levels));
}

GroupLabelAssignment::GroupLabelAssignment(std::vector<int> labels, std::size_t num_groups)
    : labels_(std::move(labels)), num_groups_(num_groups) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_groups_)
      throw ValidationError("group label of unit " + std::to_string(i) + " is outside [0, K)");
  }
}

GroupLabelAssignment::GroupLabelAssignment(std::vector<int> labels)
    : GroupLabelAssignment(labels, labels.empty() ? 0 : static_cast<std::size_t>(
                                                             *std::max_element(labels.begin(), labels.end()) + 1)) {}

std::vector<std::size_t> GroupLabelAssignment::group_sizes() const {
  std::vector<std::size_t> sizes(num_groups_, 0);
  for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

Exposure Exposure::multiset(Multiset codes) {
  std::sort(codes.begin(), codes.end());
  return Exposure(Value{std::move(codes)});
}

ExposureKind Exposure::kind() const {
  switch (value_.index()) {
    case 0: return ExposureKind::multiset;
    case 1: return ExposureKind::count;
    default: return ExposureKind::coarsened;
  }
}

std::string Exposure::to_string(std::span<const std::string> levels) const {
  switch (value_.index()) {
    case 0: {
      std::string out = "{";
      const auto& codes = as_multiset();
      for (std::size_t i = 0; i < codes.size(); ++i) {
        if (i) out += ',';
        const auto c = static_cast<std::size_t>(codes[i]);
        out += c < levels.size() ? levels[c] : std::to_string(codes[i]);
      }
      return out + "}";
    }
    case 1: return std::to_string(as_count());
    default: return as_label();
  }
}

Exposure parse_exposure(const std::string& text, ExposureKind kind, std::span<const std::string> levels) {
  switch (kind) {
    case ExposureKind::count: {
      std::size_t pos = 0;
      long value = 0;
      try {
        value = std::stol(text, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != text.size()) throw ValidationError("not a count exposure: '" + text + "'");
      return Exposure::count(value);
    }
    case ExposureKind::coarsened: return Exposure::label(text);
    case ExposureKind::multiset: {
      if (text.size() < 2 || text.front() != '{' || text.back() != '}')
        throw ValidationError("multiset exposure must look like {a,b,...}: '" + text + "'");
      Exposure::Multiset codes;
      const std::string body = text.substr(1, text.size() - 2);
      if (!body.empty()) {
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
          auto it = std::find(levels.begin(), levels.end(), item);
          if (it == levels.end()) throw ValidationError("unknown attribute level '" + item + "' in '" + text + "'");
          codes.push_back(static_cast<AttributeCode>(it - levels.begin()));
        }
      }
      return Exposure::multiset(std::move(codes));
    }
  }
  throw ValidationError("unknown exposure kind");
}

std::size_t FocalSet::count() const { return static_cast<std::size_t>(std::count(member.begin(), member.end(), true)); }

std::vector<int> FocalSet::indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < member.size(); ++i)
    if (member[i]) out.push_back(static_cast<int>(i));
  return out;
}

OutcomeVector::OutcomeVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i])) throw ValidationError("outcome of unit " + std::to_string(i) + " is not finite");
}

GroupAssignment labels_to_assignment(const GroupLabelAssignment& labels) {
  std::vector<std::vector<int>> members(labels.num_groups());
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  GroupAssignment z;
  z.neighbor_sets.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& out = z.neighbor_sets[i];
    for (int j : members[static_cast<std::size_t>(labels[i])])
      if (j != static_cast<int>(i)) out.push_back(j);
  }
  return z;
}

namespace {

void require_count_compatible(const AttributeVector& attribute, ExposureKind kind) {
  if (kind == ExposureKind::count && attribute.alphabet_size() != 2)
    throw ValidationError("count exposure requires binary attribute");
  if (kind == ExposureKind::coarsened)
    throw ValidationError("coarsened exposures are produced by coarsen_exposure, not computed directly");
}

}  // namespace

ExposureVector exposure_of(const GroupAssignment& groups, const AttributeVector& attribute, ExposureKind kind) {
  if (groups.size() != attribute.size()) throw ValidationError("assignment and attribute lengths differ");
  require_count_compatible(attribute, kind);
  ExposureVector w{kind, {}};
  w.values.reserve(groups.size());
  for (const auto& neighbors : groups.neighbor_sets) {
    if (kind == ExposureKind::count) {
      long c = 0;
      for (int j : neighbors) c += attribute[static_cast<std::size_t>(j)] == 1;
      w.values.push_back(Exposure::count(c));
    } else {
      Exposure::Multiset codes;
      codes.reserve(neighbors.size());
      for (int j : neighbors) codes.push_back(attribute[static_cast<std::size_t>(j)]);
      w.values.push_back(Exposure::multiset(std::move(codes)));
    }
  }
  return w;
}

ExposureVector exposure_from_labels(const GroupLabelAssignment& labels, const AttributeVector& attribute,
                                    ExposureKind kind) {
  if (labels.size() != attribute.size()) throw ValidationError("assignment and attribute lengths differ");
  require_count_compatible(attribute, kind);
  const std::size_t levels = attribute.alphabet_size();
  std::vector<long> tally(labels.num_groups() * levels, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    ++tally[static_cast<std::size_t>(labels[i]) * levels + static_cast<std::size_t>(attribute[i])];
  ExposureVector w{kind, {}};
  w.values.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const long* row = &tally[static_cast<std::size_t>(labels[i]) * levels];
    const auto own = static_cast<std::size_t>(attribute[i]);
    if (kind == ExposureKind::count) {
      w.values.push_back(Exposure::count(row[1] - (own == 1)));
    } else {
      Exposure::Multiset codes;
      for (std::size_t a = 0; a < levels; ++a) {
        const long n = row[a] - (a == own);
        codes.insert(codes.end(), static_cast<std::size_t>(n), static_cast<AttributeCode>(a));
      }
      w.values.push_back(Exposure::multiset(std::move(codes)));
    }
  }
  return w;
}

ExposureVector coarsen_exposure(const ExposureVector& exposures, const CoarseningMap& map,
                                std::span<const std::string> levels) {
  ExposureVector out{ExposureKind::coarsened, {}};
  out.values.reserve(exposures.size());
  for (const auto& e : exposures.values) {
    auto it = map.find(e);
    if (it == map.end()) throw ValidationError("coarsening map is undefined for exposure " + e.to_string(levels));
    out.values.push_back(Exposure::label(it->second));
  }
  return out;
}

FocalSet focal_set(const ExposureVector& exposures, const Exposure& c1, const Exposure& c2) {
  if (c1 == c2) throw ValidationError("focal contrast needs two distinct exposures");
  FocalSet u{std::vector<bool>(exposures.size(), false), c1, c2};
  for (std::size_t i = 0; i < exposures.size(); ++i) u.member[i] = exposures[i] == c1 || exposures[i] == c2;
  if (u.count() == 0) throw ValidationError("no focal units");
  return u;
}

FocalSet subgroup_restrict(const FocalSet& focal, const AttributeVector& attribute, AttributeCode level) {
  if (focal.size() != attribute.size()) throw ValidationError("focal set and attribute lengths differ");
  FocalSet out = focal;
  for (std::size_t i = 0; i < out.size(); ++i) out.member[i] = focal.member[i] && attribute[i] == level;
  if (out.count() == 0) throw ValidationError("no focal units with the requested attribute level");
  return out;
}

}  // namespace peerperm
