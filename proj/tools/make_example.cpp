// Writes the simulated example panel shipped in data/.

#include <cstdio>
#include <iostream>
#include <string>

#include "ptfa/csv.hpp"
#include "ptfa/simulation.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_example OUTPUT.csv\n";
    return 1;
  }
  ptfa::DgpSpec spec;
  spec.T = 200;
  spec.factor_persistence = 0.5;
  spec.seed = 20240101;
  const ptfa::SimulatedData sim = ptfa::generate(spec);

  ptfa::csv::Table table;
  table.label_name = "date";
  for (int t = 0; t < spec.T; ++t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", 2000 + t / 12, t % 12 + 1);
    table.labels.emplace_back(buf);
  }
  for (int j = 1; j <= spec.p; ++j) table.columns.push_back("x" + std::to_string(j));
  for (int j = 1; j <= spec.q; ++j) table.columns.push_back("y" + std::to_string(j));
  table.values.resize(spec.T, spec.p + spec.q);
  table.values << sim.raw_X, sim.raw_Y;
  ptfa::csv::write_file(argv[1], table);
  return 0;
}
