#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "brute.hpp"
#include "peerperm/symmetry.hpp"

using namespace peerperm;

namespace {

const std::vector<int> kFigA{1, 1, 0, 0, 1, 0, 0};

std::vector<int> forward(const Permutation& p) { return {p.forward().begin(), p.forward().end()}; }

double uniformity_pvalue(const std::map<std::vector<int>, long>& seen, std::size_t cells, long draws) {
  const double e = static_cast<double>(draws) / static_cast<double>(cells);
  double stat = 0.0;
  for (const auto& [k, n] : seen) stat += (static_cast<double>(n) - e) * (static_cast<double>(n) - e) / e;
  stat += static_cast<double>(cells - seen.size()) * e;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(cells - 1)), stat));
}

}  // namespace

TEST_CASE("permutation basics") {
  const Permutation p({1, 2, 0});
  CHECK(p.compose(p.inverse()).is_identity());
  CHECK(p.inverse().compose(p).is_identity());
  CHECK(forward(p.compose(p)) == std::vector<int>{2, 0, 1});
  CHECK(Permutation::identity(4).is_identity());
  CHECK_THROWS_AS(Permutation({0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(Permutation({0, 3}), ValidationError);
}

TEST_CASE("apply_permutation moves entry j to pi(j)") {
  const std::vector<char> x{'a', 'b', 'c'};
  CHECK(apply_permutation(Permutation({1, 2, 0}), std::span<const char>(x)) == std::vector<char>{'c', 'a', 'b'});
  CHECK(apply_permutation(Permutation::identity(3), std::span<const char>(x)) == x);
  CHECK_THROWS_AS(apply_permutation(Permutation::identity(2), std::span<const char>(x)), ValidationError);
}

TEST_CASE("apply_permutation is a left action") {
  Rng rng(8);
  const std::vector<int> x{0, 1, 2, 3, 4, 5};
  for (int t = 0; t < 100; ++t) {
    std::vector<int> f1(x), f2(x);
    shuffle(std::span<int>(f1), rng);
    shuffle(std::span<int>(f2), rng);
    const Permutation p(f1), q(f2);
    const auto lhs = apply_permutation(p.compose(q), std::span<const int>(x));
    const auto qx = apply_permutation(q, std::span<const int>(x));
    CHECK(lhs == apply_permutation(p, std::span<const int>(qx)));
  }
}

TEST_CASE("stabilizer strata of an attribute") {
  const auto s = stabilizer_strata(AttributeVector::binary(kFigA));
  CHECK(s.strata == std::vector<std::vector<int>>{{2, 3, 5, 6}, {0, 1, 4}});
  CHECK(s.group_order() == 24 * 6);

  const std::vector<int> constant(5, 7);
  CHECK(stabilizer_strata(std::span<const int>(constant)).strata.size() == 1);
  const std::vector<int> distinct{4, 3, 2, 1};
  const auto d = stabilizer_strata(std::span<const int>(distinct));
  CHECK(d.strata.size() == 4);
  CHECK(d.group_order() == 1);
}

TEST_CASE("stabilizer draws fix the vector and are uniform") {
  SUBCASE("singletons give the identity") {
    const std::vector<int> distinct{0, 1, 2};
    Rng rng(1);
    for (int i = 0; i < 20; ++i)
      CHECK(sample_stabilizer_permutation(stabilizer_strata(std::span<const int>(distinct)), rng).is_identity());
  }
  SUBCASE("one stratum of size 3") {
    const std::vector<int> x{0, 0, 0};
    const auto s = stabilizer_strata(std::span<const int>(x));
    Rng rng(2);
    std::map<std::vector<int>, long> seen;
    const long draws = 60'000;
    for (long i = 0; i < draws; ++i) ++seen[forward(sample_stabilizer_permutation(s, rng))];
    CHECK(seen.size() == 6);
    CHECK(uniformity_pvalue(seen, 6, draws) > 1e-6);
  }
  SUBCASE("strata of sizes 2 and 2") {
    const std::vector<int> x{0, 1, 1, 0};
    const auto s = stabilizer_strata(std::span<const int>(x));
    Rng rng(3);
    std::map<std::vector<int>, long> seen;
    const long draws = 40'000;
    for (long i = 0; i < draws; ++i) {
      const auto p = sample_stabilizer_permutation(s, rng);
      CHECK(apply_permutation(p, std::span<const int>(x)) == x);
      ++seen[forward(p)];
    }
    CHECK(seen.size() == 4);
    CHECK(uniformity_pvalue(seen, 4, draws) > 1e-6);
  }
}

TEST_CASE("joint strata of attribute and focal set") {
  const auto a = AttributeVector::binary(kFigA);
  FocalSet u;
  u.member = {true, true, false, true, true, true, true};
  const auto s = joint_strata(a, u);
  std::set<std::vector<int>> got(s.strata.begin(), s.strata.end());
  CHECK(got == std::set<std::vector<int>>{{0, 1, 4}, {3, 5, 6}, {2}});

  u.member.assign(7, true);
  const auto all = joint_strata(a, u);
  CHECK(std::set<std::vector<int>>(all.strata.begin(), all.strata.end()) ==
        std::set<std::vector<int>>{{0, 1, 4}, {2, 3, 5, 6}});
  u.member.assign(7, false);
  CHECK(joint_strata(a, u).group_order() == stabilizer_strata(a).group_order());
}

TEST_CASE("exposure map is equivariant under the attribute stabilizer") {
  Rng rng(4);
  const auto a = AttributeVector::binary(kFigA);
  const Design fig{sr_from_observed(GroupLabelAssignment({0, 0, 0, 1, 1, 2, 2}), a)};
  CHECK(verify_equivariance(fig, a, ExposureKind::count, 1000, rng));
  CHECK(verify_equivariance(fig, a, ExposureKind::multiset, 1000, rng));
  const Design cr{CRDesign({3, 2, 2})};
  CHECK(verify_equivariance(cr, a, ExposureKind::multiset, 1000, rng));
}

TEST_CASE("equivariance holds for every stabilizer element on the pairs design") {
  const auto a = AttributeVector::binary({1, 1, 0, 0});
  const Design d{SRDesign(a, {{1, 1}, {1, 1}})};
  const auto strata = stabilizer_strata(a);
  std::size_t visited = 0;
  for (const auto& l : brute::sr_support({1, 1, 0, 0}, {{1, 1}, {1, 1}})) {
    const GroupLabelAssignment labels(l, 2);
    const auto w = exposure_from_labels(labels, a, ExposureKind::count);
    for_each_stabilizer_permutation(strata, 100, [&](const Permutation& pi) {
      ++visited;
      CHECK(exposure_from_labels(apply_permutation(pi, labels), a, ExposureKind::count) == apply_permutation(pi, w));
    });
  }
  CHECK(visited == 4 * 4);
}

TEST_CASE("stabilizer enumeration and guard") {
  const std::vector<int> x{0, 0, 1, 1, 1};
  const auto s = stabilizer_strata(std::span<const int>(x));
  std::set<std::vector<int>> seen;
  for_each_stabilizer_permutation(s, 100, [&](const Permutation& p) { seen.insert(forward(p)); });
  CHECK(seen.size() == 12);
  CHECK_THROWS_AS(for_each_stabilizer_permutation(s, 11, [](const Permutation&) {}), GuardError);
}

TEST_CASE("orbit-stabilizer counts") {
  const std::vector<int> sym{0, 0, 0};
  const auto s3 = stabilizer_strata(std::span<const int>(sym));
  const std::vector<char> aab{'a', 'a', 'b'};
  const auto c = orbit_stabilizer_counts(s3, std::span<const char>(aab));
  CHECK(c.orbit_size == 3);
  CHECK(c.stabilizer_size == 2);
  CHECK(c.group_order == 6);

  const std::vector<char> same{'z', 'z', 'z'};
  CHECK(orbit_stabilizer_counts(s3, std::span<const char>(same)).orbit_size == 1);
  CHECK(orbit_stabilizer_counts(s3, std::span<const char>(same)).stabilizer_size == 6);

  const std::vector<int> s4v(4, 0);
  const auto s4 = stabilizer_strata(std::span<const int>(s4v));
  const std::vector<int> distinct{3, 1, 4, 2};
  const auto d = orbit_stabilizer_counts(s4, std::span<const int>(distinct));
  CHECK(d.orbit_size == 24);
  CHECK(d.stabilizer_size == 1);
}

TEST_CASE("orbit size times stabilizer size is the group order") {
  Rng rng(12);
  for (int t = 0; t < 40; ++t) {
    std::vector<int> group(6), x(6);
    for (auto& v : group) v = static_cast<int>(rng.below(2));
    for (auto& v : x) v = static_cast<int>(rng.below(3));
    const auto s = stabilizer_strata(std::span<const int>(group));
    const auto c = orbit_stabilizer_counts(s, std::span<const int>(x));
    CHECK(BigInt(c.orbit_size) * c.stabilizer_size == c.group_order);
  }
}
