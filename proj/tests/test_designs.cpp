#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "brute.hpp"
#include "peerperm/designs.hpp"
#include "peerperm/error.hpp"

using namespace peerperm;

namespace {

double chi_square_pvalue(const std::map<std::vector<int>, long>& observed, const std::vector<brute::Labels>& support,
                         long draws) {
  const double expected = static_cast<double>(draws) / static_cast<double>(support.size());
  double stat = 0.0;
  for (const auto& l : support) {
    const auto it = observed.find(l);
    const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    stat += (o - expected) * (o - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(support.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

std::vector<int> to_vec(const GroupLabelAssignment& l) { return {l.labels().begin(), l.labels().end()}; }

}  // namespace

TEST_CASE("SR counts from an observed configuration") {
  // Left panel of the sampler illustration: two A = 1 units and one A = 0 unit
  // share the first group.
  const auto a = AttributeVector::binary({1, 1, 0, 0, 0});
  const auto d = sr_from_observed(GroupLabelAssignment({0, 0, 0, 1, 1}), a);
  CHECK(d.counts() == std::vector<std::vector<long>>{{1, 2}, {2, 0}});
  CHECK(d.label_template(1) == std::vector<int>{0, 0});
  CHECK(d.label_template(0) == std::vector<int>{0, 1, 1});
  CHECK(support_size(Design{d}) == 3);

  const auto pairs = sr_from_observed(GroupLabelAssignment({0, 1, 0, 1}), AttributeVector::binary({1, 1, 0, 0}));
  CHECK(pairs.counts() == std::vector<std::vector<long>>{{1, 1}, {1, 1}});
  const auto one = sr_from_observed(GroupLabelAssignment({0, 0, 0, 0}), AttributeVector::binary({1, 0, 0, 1}));
  CHECK(one.counts() == std::vector<std::vector<long>>{{2}, {2}});
  CHECK(support_size(Design{one}) == 1);
}

TEST_CASE("each of the three illustrated assignments is drawn a third of the time") {
  const auto a = AttributeVector::binary({1, 1, 0, 0, 0});
  const auto d = sr_from_observed(GroupLabelAssignment({0, 0, 0, 1, 1}), a);
  Rng rng(31);
  std::map<std::vector<int>, long> seen;
  const long draws = 30'000;
  for (long i = 0; i < draws; ++i) ++seen[to_vec(sample_sr(d, rng))];
  REQUIRE(seen.size() == 3);
  for (const auto& [l, n] : seen) {
    CHECK(l[0] == 0);
    CHECK(l[1] == 0);
    CHECK(std::abs(static_cast<double>(n) / draws - 1.0 / 3) < 4 * std::sqrt(2.0 / 9 / draws));
  }
}

TEST_CASE("support sizes") {
  CHECK(support_size(Design{CRDesign({2, 2})}) == 6);
  CHECK(support_size(Design{CRDesign({1, 1, 1})}) == 6);
  CHECK(support_size(Design{CRDesign({4})}) == 1);
  const auto a = AttributeVector::binary({1, 1, 0, 0});
  CHECK(support_size(Design{SRDesign(a, {{1, 1}, {1, 1}})}) == 4);
  // Large supports stay exact.
  CHECK(support_size(Design{CRDesign(std::vector<long>(39, 4))}) ==
        multinomial(std::vector<long>(39, 4)));
  CHECK(multinomial(std::vector<long>{2, 2}) == 6);
}

TEST_CASE("support sizes agree with brute-force enumeration") {
  const std::vector<int> strata{0, 1, 0, 1, 1, 0, 0};
  const std::vector<std::vector<long>> counts{{2, 1, 1}, {1, 1, 1}};
  const auto a = AttributeVector::binary(strata);
  CHECK(support_size(Design{SRDesign(a, counts)}) == brute::sr_support(strata, counts).size());
  CHECK(support_size(Design{CRDesign({3, 2, 2})}) == brute::cr_support(7, {3, 2, 2}).size());
}

TEST_CASE("design validation") {
  const auto a = AttributeVector::binary({1, 1, 0, 0});
  CHECK_THROWS_AS(SRDesign(a, {{1, 1}}), ValidationError);
  CHECK_THROWS_AS(SRDesign(a, {{1, 1}, {2, 1}}), ValidationError);
  CHECK_THROWS_AS(SRDesign(a, {{3, -1}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(CRDesign({}), ValidationError);
  CHECK_THROWS_AS(CRDesign({1}), ValidationError);
}

TEST_CASE("satisfies checks tallies") {
  const auto a = AttributeVector::binary({1, 1, 0, 0});
  const Design sr{SRDesign(a, {{1, 1}, {1, 1}})};
  CHECK(satisfies(sr, GroupLabelAssignment({0, 1, 1, 0}, 2)));
  CHECK_FALSE(satisfies(sr, GroupLabelAssignment({0, 0, 1, 1}, 2)));
  const Design cr{CRDesign({2, 2})};
  CHECK(satisfies(cr, GroupLabelAssignment({0, 0, 1, 1}, 2)));
  CHECK_FALSE(satisfies(cr, GroupLabelAssignment({0, 0, 0, 1}, 2)));
}

TEST_CASE("SR sampler preserves tallies") {
  const auto a = AttributeVector::binary({0, 1, 0, 1, 1, 0, 0, 1, 0});
  const SRDesign d(a, {{2, 1, 2}, {1, 2, 1}});
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const auto l = sample_sr(d, rng);
    CHECK(sr_from_observed(l, a).counts() == d.counts());
    CHECK(satisfies(Design{d}, l));
  }
}

TEST_CASE("SR sampler is uniform on its support") {
  const std::vector<int> strata{0, 1, 0, 1, 1, 0};
  const std::vector<std::vector<long>> counts{{1, 2}, {2, 1}};
  const SRDesign d(AttributeVector::binary(strata), counts);
  const auto support = brute::sr_support(strata, counts);
  REQUIRE(support.size() == 9);
  Rng rng(2024);
  std::map<std::vector<int>, long> seen;
  const long draws = 90'000;
  for (long i = 0; i < draws; ++i) ++seen[to_vec(sample_sr(d, rng))];
  CHECK(seen.size() == support.size());
  CHECK(chi_square_pvalue(seen, support, draws) > 1e-6);
}

TEST_CASE("CR sampler is uniform on its support") {
  const CRDesign d({2, 1, 2});
  const auto support = brute::cr_support(5, {2, 1, 2});
  REQUIRE(support.size() == 30);
  Rng rng(99);
  std::map<std::vector<int>, long> seen;
  const long draws = 150'000;
  for (long i = 0; i < draws; ++i) ++seen[to_vec(sample(Design{d}, rng))];
  CHECK(seen.size() == support.size());
  CHECK(chi_square_pvalue(seen, support, draws) > 1e-6);
}

TEST_CASE("SR equals CR conditioned on the attribute tallies") {
  const std::vector<int> a{1, 0, 1, 0, 0, 1};
  const std::vector<long> sizes{3, 3};
  std::vector<brute::Labels> conditioned;
  for (const auto& l : brute::cr_support(6, sizes)) {
    std::vector<std::vector<long>> tally(2, std::vector<long>(2, 0));
    for (std::size_t i = 0; i < l.size(); ++i) ++tally[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(l[i])];
    if (tally == std::vector<std::vector<long>>{{1, 2}, {2, 1}}) conditioned.push_back(l);
  }
  CHECK(conditioned == brute::sr_support(a, {{1, 2}, {2, 1}}));
  CHECK(support_size(Design{SRDesign(AttributeVector::binary(a), {{1, 2}, {2, 1}})}) == conditioned.size());
}

TEST_CASE("sampling is reproducible from the seed") {
  const CRDesign d({4, 4, 4});
  Rng r1(5), r2(5);
  for (int i = 0; i < 20; ++i) CHECK(sample_cr(d, r1) == sample_cr(d, r2));
}
