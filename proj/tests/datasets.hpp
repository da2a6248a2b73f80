#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "peerperm/rng.hpp"

namespace datasets {

inline std::string figure_csv() {
  const int labels[] = {0, 0, 0, 1, 1, 2, 2};
  const int a[] = {1, 1, 0, 0, 1, 0, 0};
  std::ostringstream out;
  out << "# attribute_levels=0,1\nunit_id,attribute,group,outcome\n";
  for (int i = 0; i < 7; ++i) out << "u" << i << ',' << a[i] << ",g" << labels[i] << ',' << i + 1 << '\n';
  return out.str();
}

// 156 units in 39 groups of four, shaped so that contrasting 0 vs 3 A = 1
// groupmates gives focal tallies 13/4 for A = 1 and 40/5 for A = 0.
inline std::string li_csv(std::uint64_t seed) {
  struct Block {
    int groups, ones;
  };
  const std::vector<Block> blocks{{13, 1}, {1, 4}, {10, 0}, {5, 3}, {10, 2}};
  peerperm::Rng rng(seed);
  std::ostringstream out;
  out << "# attribute_levels=0,1\nunit_id,attribute,group,outcome\n";
  int g = 0, unit = 0;
  for (const auto& b : blocks)
    for (int k = 0; k < b.groups; ++k, ++g)
      for (int j = 0; j < 4; ++j)
        out << "s" << unit++ << ',' << (j < b.ones ? 1 : 0) << ",room" << g << ',' << rng.uniform01() << '\n';
  return out.str();
}

}  // namespace datasets
