#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "pdrm/errors.hpp"
#include "pdrm/product.hpp"

using namespace pdrm;

namespace {

std::string asset(const std::string& name) {
  return std::string(PDRM_ASSET_DIR) + "/" + name;
}

Machine machine_from_text(const std::string& text) {
  std::istringstream in(text);
  return validate(parse_pdrm(in, "<test>"));
}

struct MazeFixture {
  TabularMDP env;
  Machine machine;
  Product product;

  MazeFixture()
      : env(build_treasure_maze(load_map(asset("maze5.map")), false, 20)),
        machine(validate(load_pdrm(asset("maze.pdrm")))),
        product(env, machine) {}
};

}  // namespace

TEST_CASE("initial product state pairs env start with the machine start") {
  MazeFixture f;
  auto init = f.product.initial_branches();
  REQUIRE(init.size() == 1);
  CHECK(init[0].prob == 1.0);
  CHECK(init[0].reward == 0.0);
  CHECK_FALSE(init[0].done);
  CHECK(init[0].state.env_state == f.env.initial[0].state);
  CHECK(init[0].state.pdrm_state == 0);
  CHECK(init[0].state.stack == std::vector<SymId>{f.machine.bottom});
}

TEST_CASE("labels cross by proposition name, not bit position") {
  MazeFixture f;
  // Machine declares a scrambled subset of the env propositions.
  Machine m = machine_from_text(R"(pdrm sub
props: t r x
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | t & r | Z | Z | 1 | f
)");
  Product p(f.env, m);
  Label env_rt = f.env.label_of({"r", "t"});
  CHECK(p.to_machine(env_rt) == m.label_of({"r", "t"}));
  CHECK(p.to_machine(f.env.label_of({"u"})) == 0);
  CHECK(p.to_machine(f.env.label_of({"l", "x"})) == m.label_of({"x"}));
}

TEST_CASE("a full maze episode through the product") {
  MazeFixture f;
  std::mt19937_64 rng(7);
  auto s = f.product.reset(rng);
  // Four moves right to the treasure, four back: +1 on the exit move only.
  std::vector<int> actions = {3, 3, 3, 3, 2, 2, 2, 2};
  std::vector<double> rewards;
  ProductState ps = s.state;
  for (int a : actions) {
    auto nxt = f.product.step(ps, a, rng);
    rewards.push_back(nxt.reward);
    ps = nxt.state;
    if (nxt.done) break;
  }
  CHECK(rewards == std::vector<double>{0, 0, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("zero-horizon rollouts are empty") {
  MazeFixture f;
  std::mt19937_64 rng(3);
  Policy left = [](const ProductState&, std::mt19937_64&) { return 2; };
  Rollout r = rollout(f.product, left, 0, rng);
  CHECK(r.states.empty());
  CHECK(r.actions.empty());
  CHECK(r.ret == 0.0);
  CHECK_FALSE(r.done);
}

TEST_CASE("horizon-zero enumeration absorbs the initial states") {
  MazeFixture f;
  ExplicitProductMDP mdp = enumerate_bounded_product(f.product, 0);
  CHECK(mdp.horizon == 0);
  double mass = 0.0;
  for (auto [s, p] : mdp.initial) {
    mass += p;
    CHECK(mdp.absorbing[s]);
  }
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("enumeration covers sampled trajectories") {
  MazeFixture f;
  const int horizon = 8;
  ExplicitProductMDP mdp = enumerate_bounded_product(f.product, horizon);
  CHECK_FALSE(mdp.overflow_reachable);
  CHECK(mdp.depth[mdp.sink] == -1);

  auto find_state = [&](const ProductState& ps, int t) {
    for (int i = 0; i < mdp.n_states(); ++i) {
      if (mdp.depth[i] == t && mdp.states[i] == ps) return true;
    }
    return false;
  };
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> act(0, 3);
  Policy random_walk = [&](const ProductState&, std::mt19937_64& r) { return act(r); };
  for (int trial = 0; trial < 20; ++trial) {
    Rollout r = rollout(f.product, random_walk, horizon, rng);
    for (std::size_t t = 0; t < r.states.size(); ++t) {
      if (r.done && t + 1 == r.states.size()) break;  // collapsed into the sink
      CHECK(find_state(r.states[t], static_cast<int>(t)));
    }
  }
}

TEST_CASE("stack growth respects the cap and the structural bound") {
  MazeFixture f;
  const int horizon = 6;
  ExplicitProductMDP mdp = enumerate_bounded_product(f.product, horizon);
  long long structural = 1 + static_cast<long long>(horizon) * f.machine.max_push_len() *
                                 (f.machine.max_pushing_eps_chain() + 1);
  for (int i = 0; i < mdp.n_states(); ++i) {
    if (i == mdp.sink || i == mdp.overflow) continue;
    CHECK(static_cast<long long>(mdp.states[i].stack.size()) <= mdp.stack_cap);
    CHECK(static_cast<long long>(mdp.states[i].stack.size()) <= structural);
  }

  SUBCASE("a tight explicit cap makes overflow reachable") {
    ExplicitProductMDP small = enumerate_bounded_product(f.product, horizon, 2);
    CHECK(small.overflow_reachable);
    CHECK(small.absorbing[small.overflow]);
  }
}

TEST_CASE("machine-final branches collapse into one sink") {
  MazeFixture f;
  ExplicitProductMDP mdp = enumerate_bounded_product(f.product, 8);
  // Any entry with reward -1 or +1 is a terminal machine move; it must land
  // in the sink, and the sink only self-loops at reward 0.
  bool saw_terminal = false;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (const auto& e : mdp.row(s, a)) {
        if (e.reward != 0.0) {
          saw_terminal = true;
          CHECK(e.next == mdp.sink);
        }
      }
    }
  }
  CHECK(saw_terminal);
  for (int a = 0; a < mdp.n_actions; ++a) {
    REQUIRE(mdp.row(mdp.sink, a).size() == 1);
    CHECK(mdp.row(mdp.sink, a)[0].next == mdp.sink);
    CHECK(mdp.row(mdp.sink, a)[0].reward == 0.0);
  }
}

TEST_CASE("sparse export round trips the table") {
  MazeFixture f;
  ExplicitProductMDP mdp = enumerate_bounded_product(f.product, 3);
  std::ostringstream out;
  export_sparse(mdp, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "state\taction\tnext\tprob\treward");
  std::vector<double> mass(static_cast<std::size_t>(mdp.n_states()) * mdp.n_actions, 0.0);
  int s, a, next;
  double prob, reward;
  long long rows = 0;
  while (in >> s >> a >> next >> prob >> reward) {
    REQUIRE(s >= 0);
    REQUIRE(s < mdp.n_states());
    REQUIRE(next < mdp.n_states());
    mass[static_cast<std::size_t>(s) * mdp.n_actions + a] += prob;
    ++rows;
  }
  CHECK(rows > 0);
  for (double total : mass) CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("explosion guard trips on tiny state caps") {
  MazeFixture f;
  try {
    enumerate_bounded_product(f.product, 8, -1, 10);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ExplosionGuard);
  }
}
