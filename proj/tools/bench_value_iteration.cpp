#include <chrono>
#include <cstdio>
#include <random>

#include "pdrm/analysis.hpp"

using namespace pdrm;

// Compares the OpenMP backup sweep against the serial reference on a synthetic
// sparse MDP and verifies that both produce bitwise identical solutions.
int main(int argc, char** argv) {
  int n_states = argc > 1 ? std::atoi(argv[1]) : 200000;
  int n_actions = 4, branching = 3;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> next_dist(0, n_states - 1);
  std::uniform_real_distribution<double> reward_dist(-1.0, 1.0);

  ExplicitProductMDP mdp;
  mdp.n_actions = n_actions;
  mdp.states.resize(n_states);
  mdp.depth.assign(n_states, 0);
  mdp.absorbing.assign(n_states, 0);
  mdp.table.resize(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      auto& row = mdp.table[static_cast<std::size_t>(s) * n_actions + a];
      for (int b = 0; b < branching; ++b) {
        row.push_back({next_dist(rng), 1.0 / branching, reward_dist(rng)});
      }
    }
  }

  auto bench = [&](bool parallel) {
    auto t0 = std::chrono::steady_clock::now();
    ValueSolution sol = value_iteration(mdp, 0.95, 1e-8, parallel);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s: %d iterations in %.3f s\n", parallel ? "parallel" : "serial  ",
                sol.iterations, dt);
    return sol;
  };

  ValueSolution serial = bench(false);
  ValueSolution parallel = bench(true);
  bool identical = serial.values == parallel.values &&
                   serial.optimal_actions == parallel.optimal_actions;
  std::printf("solutions bitwise identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
