#pragma once

// Independent brute-force audit of the negative-sampling rules. Re-derives
// everything from the cube and the emitted sample lists; shares no logic
// with the sampling module.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fdw/cube/cube.hpp"
#include "fdw/sampling.hpp"

namespace oracle {

inline std::vector<std::string> audit_sampling_rules(
    const fdw::cube::DataCube& cube, const std::vector<fdw::sampling::SampleIndex>& fires,
    const std::vector<fdw::sampling::SampleIndex>& nofires, std::size_t ratio) {
  std::vector<std::string> violations;
  const std::size_t P = cube.plane();
  const std::size_t W = cube.header.width;

  std::vector<std::size_t> day_fires(cube.header.days, 0);
  for (std::size_t t = 0; t < cube.header.days; ++t)
    for (std::size_t i = 0; i < P; ++i) day_fires[t] += cube.burn[t * P + i];

  std::map<std::size_t, std::size_t> fire_per_year, nofire_per_year;
  std::map<std::size_t, std::set<std::pair<std::size_t, std::size_t>>> fire_locs;
  for (const auto& s : fires) {
    ++fire_per_year[s.year];
    fire_locs[s.year].insert({s.x, s.y});
  }
  for (const auto& s : nofires) ++nofire_per_year[s.year];

  // rule 1: twice the number of fire samples per year
  for (const auto& [year, nf] : fire_per_year)
    if (nofire_per_year[year] != ratio * nf)
      violations.push_back("rule1: year " + std::to_string(year) + " has " +
                           std::to_string(nofire_per_year[year]) + " negatives for " +
                           std::to_string(nf) + " fires");

  std::map<std::size_t, std::set<std::pair<std::size_t, std::size_t>>> seen_locs;
  for (const auto& s : nofires) {
    // rule 2: between the first and last fire date of the year
    const std::size_t t0 = s.year * cube.header.days_per_year;
    const std::size_t t1 = t0 + cube.header.days_per_year;
    std::size_t first = t1, last = 0;
    for (std::size_t t = t0; t < t1; ++t)
      if (day_fires[t] > 0) {
        if (first == t1) first = t;
        last = t;
      }
    if (s.date < first || s.date > last)
      violations.push_back("rule2: sample at day " + std::to_string(s.date) +
                           " outside the fire season of year " + std::to_string(s.year));
    // rule 3: dates when no fires were recorded region-wide
    if (day_fires[s.date] != 0)
      violations.push_back("rule3: day " + std::to_string(s.date) + " has fires");
    // rule 4: susceptible land cover only
    if (!cube.susceptible[s.y * W + s.x])
      violations.push_back("rule4: non-susceptible pixel (" + std::to_string(s.x) + "," +
                           std::to_string(s.y) + ")");
    // rule 5: never the location of a positive sample in the same year
    if (fire_locs[s.year].count({s.x, s.y}))
      violations.push_back("rule5: collides with a fire sample at (" + std::to_string(s.x) +
                           "," + std::to_string(s.y) + ")");
    // rule 6: unique locations within the year
    if (!seen_locs[s.year].insert({s.x, s.y}).second)
      violations.push_back("rule6: duplicate location (" + std::to_string(s.x) + "," +
                           std::to_string(s.y) + ") in year " + std::to_string(s.year));
  }
  return violations;
}

}  // namespace oracle
