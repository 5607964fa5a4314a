#include <doctest.h>

#include "pdrm/analysis.hpp"
#include "pdrm/errors.hpp"

using namespace pdrm;

namespace {

std::string asset(const std::string& name) {
  return std::string(PDRM_ASSET_DIR) + "/" + name;
}

// Three-state chain: 2 -> 1 -> 0 (absorbing). Action 0 advances with the
// written reward, action 1 stalls in place at 0.
ExplicitProductMDP chain_mdp() {
  ExplicitProductMDP mdp;
  mdp.n_actions = 2;
  mdp.horizon = 10;
  for (int s = 0; s < 3; ++s) {
    mdp.states.push_back({s, 0, {}});
    mdp.depth.push_back(s == 0 ? -1 : 0);
    mdp.absorbing.push_back(s == 0 ? 1 : 0);
  }
  mdp.sink = 0;
  mdp.table.resize(6);
  mdp.table[0 * 2 + 0] = {{0, 1.0, 0.0}};
  mdp.table[0 * 2 + 1] = {{0, 1.0, 0.0}};
  mdp.table[1 * 2 + 0] = {{0, 1.0, 1.0}};
  mdp.table[1 * 2 + 1] = {{1, 1.0, 0.0}};
  mdp.table[2 * 2 + 0] = {{1, 1.0, 0.0}};
  mdp.table[2 * 2 + 1] = {{2, 1.0, 0.0}};
  mdp.initial = {{2, 1.0}};
  return mdp;
}

}  // namespace

TEST_CASE("value iteration solves a hand-checked chain") {
  ExplicitProductMDP mdp = chain_mdp();
  ValueSolution sol = value_iteration(mdp, 0.5);
  CHECK(sol.values[0] == doctest::Approx(0.0));
  CHECK(sol.values[1] == doctest::Approx(1.0));
  CHECK(sol.values[2] == doctest::Approx(0.5));
  CHECK(sol.optimal_actions[0].empty());
  CHECK(sol.optimal_actions[1] == std::vector<int>{0});
  CHECK(sol.optimal_actions[2] == std::vector<int>{0});
  CHECK(sol.residual <= kValueTol);
  CHECK(sol.residual_log.size() == static_cast<std::size_t>(sol.iterations));

  SUBCASE("undiscounted backups still converge on absorbing chains") {
    ValueSolution undiscounted = value_iteration(mdp, 1.0);
    CHECK(undiscounted.values[2] == doctest::Approx(1.0));
    // Without discounting, stalling before the advance costs nothing, so
    // both actions are optimal at state 1.
    CHECK(undiscounted.optimal_actions[1] == std::vector<int>{0, 1});
  }
}

TEST_CASE("parallel and serial sweeps agree bitwise") {
  TabularMDP env = build_paintworld();
  Machine m = validate(load_pdrm(asset("paintworld.pdrm")));
  Product product(env, m);
  ExplicitProductMDP mdp = enumerate_bounded_product(product, env.horizon);
  ValueSolution serial = value_iteration(mdp, 0.99, kValueTol, false);
  ValueSolution parallel = value_iteration(mdp, 0.99, kValueTol, true);
  REQUIRE(serial.values.size() == parallel.values.size());
  for (std::size_t i = 0; i < serial.values.size(); ++i) {
    CHECK(serial.values[i] == parallel.values[i]);
  }
  CHECK(serial.iterations == parallel.iterations);
}

TEST_CASE("stack string counts match brute force") {
  for (int g = 1; g <= 3; ++g) {
    for (long long k = 0; k <= 8; ++k) {
      mpz_class expected = 0;
      mpz_class level = 1;
      for (long long len = 0; len <= k; ++len) {
        expected += level;
        level *= g;
      }
      CHECK(count_stack_strings(g, k) == expected);
    }
  }
  CHECK(count_stack_strings(1, 7) == 8);
  CHECK(count_stack_strings(3, 4) == 121);
  CHECK(count_full_bound(3, 5, 2, 1) == count_stack_strings(3, 20));
}

TEST_CASE("paintworld needs all five stack symbols in view") {
  TabularMDP env = build_paintworld();
  Machine m = validate(load_pdrm(asset("paintworld.pdrm")));
  Product product(env, m);
  ExplicitProductMDP mdp = enumerate_bounded_product(product, env.horizon);
  ValueSolution sol = value_iteration(mdp, 0.99);

  KStackReport k4 = check_k_stack_optimality(sol, mdp, 4);
  CHECK(k4.verdict == KStackReport::Verdict::Insufficient);
  CHECK_FALSE(k4.counterexamples.empty());
  // The colliding pair must really differ in value or best actions.
  const auto& ce = k4.counterexamples.front();
  bool differs = std::abs(ce.value_a - ce.value_b) > kTieTol || ce.actions_a != ce.actions_b;
  CHECK(differs);

  KStackReport k5 = check_k_stack_optimality(sol, mdp, 5);
  CHECK(k5.verdict == KStackReport::Verdict::Sufficient);
  CHECK(k5.counterexamples.empty());
  CHECK(k5.n_groups > 0);
  CHECK(k5.n_states_grouped > 0);
}

TEST_CASE("reachable overflow makes the verdict inconclusive") {
  TabularMDP env = build_paintworld();
  Machine m = validate(load_pdrm(asset("paintworld.pdrm")));
  Product product(env, m);
  ExplicitProductMDP mdp = enumerate_bounded_product(product, env.horizon, 2);
  REQUIRE(mdp.overflow_reachable);
  ValueSolution sol = value_iteration(mdp, 0.99);
  KStackReport rep = check_k_stack_optimality(sol, mdp, 5);
  CHECK(rep.verdict == KStackReport::Verdict::InconclusiveOverflow);
}

TEST_CASE("empirical key counts stay under the closed-form bounds") {
  TabularMDP env = build_treasure_maze(load_map(asset("maze5.map")), false, 20);
  Machine m = validate(load_pdrm(asset("maze.pdrm")));
  Product product(env, m);
  BlowupTable table = measure_blowup(product, 6, {1, 2, 3});
  CHECK(table.n_reachable > 0);
  CHECK(table.max_stack_len <= 7);
  CHECK(mpz_class(static_cast<long>(table.full_keys)) <= table.full_bound);
  REQUIRE(table.top_k.size() == 3);
  for (std::size_t i = 0; i < table.top_k.size(); ++i) {
    const auto& row = table.top_k[i];
    CHECK(row.k == static_cast<int>(i) + 1);
    CHECK(mpz_class(static_cast<long>(row.keys)) <= row.bound);
    if (i > 0) CHECK(row.keys >= table.top_k[i - 1].keys);
  }
  CHECK(mpz_class(static_cast<long>(table.top_k.back().keys)) <= table.full_bound);
}
