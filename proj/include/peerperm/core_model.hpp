#pragma once

// Data model for group formation experiments: units carry a discrete
// attribute, are partitioned into groups, and receive an exposure that is a
// function of their groupmates' attributes.
//
// Units, groups and attribute codes are 0-based throughout.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace peerperm {

using AttributeCode = int;

/// Per-unit attribute codes over an explicitly declared alphabet. Levels that
/// no unit carries are still part of the alphabet.
class AttributeVector {
 public:
  AttributeVector() = default;
  AttributeVector(std::vector<AttributeCode> codes, std::vector<std::string> levels);

  /// Binary attribute with levels "0" and "1".
  static AttributeVector binary(std::vector<AttributeCode> codes);

  std::size_t size() const { return codes_.size(); }
  AttributeCode operator[](std::size_t i) const { return codes_[i]; }
  std::span<const AttributeCode> codes() const { return codes_; }
  const std::vector<std::string>& levels() const { return levels_; }
  std::size_t alphabet_size() const { return levels_.size(); }
  const std::string& label(AttributeCode code) const { return levels_.at(static_cast<std::size_t>(code)); }
  std::optional<AttributeCode> code_of(const std::string& label) const;
  std::size_t count(AttributeCode code) const;

  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;

 private:
  std::vector<AttributeCode> codes_;
  std::vector<std::string> levels_;
};

/// Constructed covariate B = (A, C): one level per (a, c) pair in the declared
/// alphabets, labelled "a|c". Stabilizer of B is a subgroup of that of A.
AttributeVector constructed_covariate(const AttributeVector& attribute, const AttributeVector& covariate);

/// Group label per unit, in [0, K). Empty groups are allowed.
class GroupLabelAssignment {
 public:
  GroupLabelAssignment() = default;
  GroupLabelAssignment(std::vector<int> labels, std::size_t num_groups);
  /// K inferred as max label + 1.
  explicit GroupLabelAssignment(std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t num_groups() const { return num_groups_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::vector<std::size_t> group_sizes() const;

  friend auto operator<=>(const GroupLabelAssignment&, const GroupLabelAssignment&) = default;

 private:
  std::vector<int> labels_;
  std::size_t num_groups_ = 0;
};

/// Neighbor sets: entry i lists the other members of unit i's group, sorted.
struct GroupAssignment {
  std::vector<std::vector<int>> neighbor_sets;

  std::size_t size() const { return neighbor_sets.size(); }
  friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

enum class ExposureKind { multiset, count, coarsened };

/// One unit's exposure. Multisets are stored as sorted attribute codes so that
/// equality and ordering are order-free.
class Exposure {
 public:
  using Multiset = std::vector<AttributeCode>;

  Exposure() = default;
  static Exposure multiset(Multiset codes);
  static Exposure count(long value) { return Exposure(Value{value}); }
  static Exposure label(std::string value) { return Exposure(Value{std::move(value)}); }

  ExposureKind kind() const;
  const Multiset& as_multiset() const { return std::get<Multiset>(value_); }
  long as_count() const { return std::get<long>(value_); }
  const std::string& as_label() const { return std::get<std::string>(value_); }

  /// Canonical text: "{0,1,1}" (level labels, sorted by code), "2", or the label.
  std::string to_string(std::span<const std::string> levels = {}) const;

  friend auto operator<=>(const Exposure&, const Exposure&) = default;
  friend bool operator==(const Exposure&, const Exposure&) = default;

 private:
  using Value = std::variant<Multiset, long, std::string>;
  explicit Exposure(Value v) : value_(std::move(v)) {}
  Value value_{};
};

/// Parses the canonical text of an exposure of the given kind. Multiset
/// entries are attribute level labels.
Exposure parse_exposure(const std::string& text, ExposureKind kind, std::span<const std::string> levels);

struct ExposureVector {
  ExposureKind kind = ExposureKind::count;
  std::vector<Exposure> values;

  std::size_t size() const { return values.size(); }
  const Exposure& operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const ExposureVector&, const ExposureVector&) = default;
};

/// Membership flags for the focal units of a contrast (c1, c2).
struct FocalSet {
  std::vector<bool> member;
  Exposure c1;
  Exposure c2;

  std::size_t size() const { return member.size(); }
  std::size_t count() const;
  std::vector<int> indices() const;
  bool contains(std::size_t i) const { return member[i]; }
};

/// Observed outcomes; every value must be finite.
class OutcomeVector {
 public:
  OutcomeVector() = default;
  explicit OutcomeVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Exposure-alphabet relabelling used for coarsened exposures, e.g. the
/// all-small / mixed / all-large peer group classification.
using CoarseningMap = std::map<Exposure, std::string>;

GroupAssignment labels_to_assignment(const GroupLabelAssignment& labels);

/// Exposure of every unit given its neighbor set. `count` counts neighbors with
/// attribute code 1 and requires a binary alphabet.
ExposureVector exposure_of(const GroupAssignment& groups, const AttributeVector& attribute, ExposureKind kind);

/// Same result as exposure_of(labels_to_assignment(labels), ...) computed from
/// per-group attribute tallies without materializing neighbor sets.
ExposureVector exposure_from_labels(const GroupLabelAssignment& labels, const AttributeVector& attribute,
                                    ExposureKind kind);

ExposureVector coarsen_exposure(const ExposureVector& exposures, const CoarseningMap& map,
                                std::span<const std::string> levels = {});

/// Units whose exposure is c1 or c2. Throws when no unit qualifies.
FocalSet focal_set(const ExposureVector& exposures, const Exposure& c1, const Exposure& c2);

/// Focal units that also carry attribute `level`. Throws when empty.
FocalSet subgroup_restrict(const FocalSet& focal, const AttributeVector& attribute, AttributeCode level);

}  // namespace peerperm
