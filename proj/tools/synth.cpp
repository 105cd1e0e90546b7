// SPDX-License-Identifier: Apache-2.0
// Writes a synthetic series.csv / graph.csv pair for demos and tests.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gcnm/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic traffic data", "gcnm_synth"};
  std::string kind = "daily", out;
  std::size_t nodes = 20, steps = 2000, days = 14;
  int step_minutes = 30, period = 24;
  std::uint64_t seed = 0;
  app.add_option("--kind", kind, "daily | sinusoidal")->check(CLI::IsMember({"daily", "sinusoidal"}));
  app.add_option("--nodes", nodes, "number of sensors");
  app.add_option("--days", days, "days (daily kind)");
  app.add_option("--steps", steps, "steps (sinusoidal kind)");
  app.add_option("--period", period, "period in steps (sinusoidal kind)");
  app.add_option("--step-minutes", step_minutes, "sampling interval");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output directory")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const gcnm::SyntheticData data = kind == "daily"
                                         ? gcnm::make_daily_periodic(nodes, days, step_minutes, seed)
                                         : gcnm::make_sinusoidal(nodes, steps, period, seed, step_minutes);
    std::filesystem::create_directories(out);
    gcnm::write_series_csv(data.series, std::filesystem::path(out) / "series.csv");
    std::ofstream g(std::filesystem::path(out) / "graph.csv", std::ios::binary);
    gcnm::write_graph_csv(data.graph, data.series.node_ids, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
