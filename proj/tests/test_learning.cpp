#include <doctest.h>

#include <array>
#include <sstream>

#include "pdrm/errors.hpp"
#include "pdrm/learning.hpp"

using namespace pdrm;

namespace {

std::string asset(const std::string& name) {
  return std::string(PDRM_ASSET_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("quantiles follow the p(n+1) interpolation rule") {
  std::vector<double> v = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
  CHECK(quantile(v, 0.5) == doctest::Approx(1.0));
  CHECK(quantile(v, 0.25) == doctest::Approx(0.75));
  CHECK(quantile(v, 0.75) == doctest::Approx(1.0));

  CHECK(quantile({3, 1, 2}, 0.5) == doctest::Approx(2.0));
  CHECK(quantile({3, 1, 2, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.25) == 5.0);
  CHECK(quantile({1, 9}, 0.0) == 1.0);
  CHECK(quantile({1, 9}, 1.0) == 9.0);
  CHECK(quantile({}, 0.5) == 0.0);
}

TEST_CASE("epsilon decays linearly then holds") {
  Hyperparams hp;
  hp.eps_start = 1.0;
  hp.eps_end = 0.05;
  hp.eps_decay_fraction = 0.8;
  hp.episodes = 100;
  CHECK(hp.epsilon_at(0) == doctest::Approx(1.0));
  CHECK(hp.epsilon_at(40) == doctest::Approx(0.525));
  CHECK(hp.epsilon_at(80) == doctest::Approx(0.05));
  CHECK(hp.epsilon_at(99) == doctest::Approx(0.05));
  hp.eps_decay_fraction = 0.0;
  CHECK(hp.epsilon_at(0) == doctest::Approx(0.05));
}

TEST_CASE("epsilon-greedy selection statistics") {
  ActionValueTable table(4);
  ProductState key{0, 0, {}};
  table.row(key) = {0.0, 2.0, 1.0, 2.0};
  std::mt19937_64 rng(5);

  SUBCASE("eps = 1 explores uniformly") {
    std::array<int, 4> counts{};
    for (int i = 0; i < 40000; ++i) {
      ++counts[select_action_epsilon_greedy(table, key, 4, 1.0, rng)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  }

  SUBCASE("eps = 0 splits ties uniformly among maximizers") {
    std::array<int, 4> counts{};
    for (int i = 0; i < 40000; ++i) {
      ++counts[select_action_epsilon_greedy(table, key, 4, 0.0, rng)];
    }
    CHECK(counts[0] == 0);
    CHECK(counts[2] == 0);
    CHECK(std::abs(counts[1] - 20000) < 700);
    CHECK(std::abs(counts[3] - 20000) < 700);
  }

  SUBCASE("unseen keys fall back to the initial value") {
    ProductState other{9, 9, {}};
    std::array<int, 4> counts{};
    for (int i = 0; i < 4000; ++i) {
      ++counts[select_action_epsilon_greedy(table, other, 4, 0.0, rng)];
    }
    for (int c : counts) CHECK(c > 0);
  }
}

TEST_CASE("curve csv format is pinned") {
  LearningCurve curve;
  curve.points.push_back({10, 1.0, 0.75, 1.0, {}});
  curve.points.push_back({20, -0.5, -0.833333, 0.0, {}});
  std::ostringstream out;
  write_curve_csv(curve, out);
  CHECK(out.str() ==
        "episode,median,p25,p75\n"
        "10,1.000000,0.750000,1.000000\n"
        "20,-0.500000,-0.833333,0.000000\n");
}

TEST_CASE("q-learning masters paintworld under the full-view abstraction") {
  TabularMDP env = build_paintworld();
  Machine m = validate(load_pdrm(asset("paintworld.pdrm")));
  Product product(env, m);
  Hyperparams hp;
  hp.episodes = 1000;
  hp.eval_every = 200;
  hp.eval_episodes = 10;
  hp.seed = 1;
  TrainResult res = q_learning_train(product, AbstractionSpec::top(5), hp);
  REQUIRE(res.curve.points.size() == 5);
  CHECK(res.curve.points.back().episode == 1000);

  // The greedy policy must answer each paint<n> announcement with req<n>.
  std::mt19937_64 rng(1);
  Policy pi = greedy_policy(res.table, AbstractionSpec::top(5), env.n_actions());
  auto init = product.initial_branches();
  REQUIRE(init.size() == 5);
  for (std::size_t n = 1; n <= init.size(); ++n) {
    const ProductState& ps = init[n - 1].state;
    CHECK(ps.stack.size() == n + 1);  // n paint symbols over the bottom
    CHECK(pi(ps, rng) == static_cast<int>(n) - 1);
  }

  SUBCASE("the same seed reproduces the curve exactly") {
    TrainResult again = q_learning_train(product, AbstractionSpec::top(5), hp);
    REQUIRE(again.curve.points.size() == res.curve.points.size());
    for (std::size_t i = 0; i < res.curve.points.size(); ++i) {
      CHECK(again.curve.points[i].raw == res.curve.points[i].raw);
    }
  }

  SUBCASE("a starved abstraction cannot separate the tasks") {
    TrainResult top1 = q_learning_train(product, AbstractionSpec::top(1), hp);
    // Every paint count shares the key (shop, u?, [P]), so at most one of the
    // five announcements can be answered optimally.
    CHECK(top1.curve.points.back().median < res.curve.points.back().median);
  }
}

TEST_CASE("abstract keys truncate or keep the stack") {
  ProductState ps{3, 1, {4, 2, 0}};
  ProductState full = abstract_key(ps, AbstractionSpec::full());
  CHECK(full == ps);
  ProductState top2 = abstract_key(ps, AbstractionSpec::top(2));
  CHECK(top2.stack == std::vector<SymId>{4, 2});
  CHECK(abstract_key(ps, AbstractionSpec::top(8)).stack.size() == 3);
  CHECK(AbstractionSpec::top(2).text() == "top-2");
  CHECK(AbstractionSpec::full().text() == "full");
}

TEST_CASE("hierarchical training builds one option per stack operation") {
  GridMap map = load_map(asset("deliverworld_10.map"));
  DeliverWorldConfig cfg;
  cfg.sequences = {"1234", "2143"};
  cfg.horizon = 60;
  TabularMDP env = build_deliverworld(map, cfg);
  Machine m = validate(load_pdrm(asset("deliverworld.pdrm")));
  Product product(env, m);
  Hyperparams hp;
  hp.episodes = 300;
  hp.eval_every = 100;
  hp.eval_episodes = 5;
  HierarchicalResult res = hierarchical_train(product, hp);
  // 8 sequence pushes, each expanded over the 5 stack symbols, plus 4
  // delivery pops; the eps wrap-up transition is not an option.
  CHECK(res.options.size() == 44);
  for (const auto& o : res.options) CHECK_FALSE(o.text.empty());
  CHECK(res.option_q.size() == res.options.size());
  REQUIRE(res.curve.points.size() == 3);

  std::mt19937_64 rng(2);
  Policy pi = hierarchical_policy(res, product);
  EvalPoint pt = evaluate(product, pi, 5, env.horizon, rng);
  CHECK(pt.raw.size() == 5);
  for (double r : pt.raw) CHECK(r >= -1.0);
}

TEST_CASE("cra baseline trains and respects the unit-op budget") {
  Cra cra = validate(load_cra(asset("letterenv.cra")));
  TabularMDP env = build_letterenv({});
  Hyperparams hp;
  hp.episodes = 200;
  hp.eval_every = 100;
  hp.eval_episodes = 5;
  CraTrainResult res = q_learning_train_cra(env, cra, hp);
  CHECK(res.curve.points.size() == 2);
  CHECK(res.table_keys > 0);
  CHECK(res.episodes_cut_by_op_budget == 0);

  hp.step_op_budget = 1;
  CraTrainResult tight = q_learning_train_cra(env, cra, hp);
  CHECK(tight.episodes_cut_by_op_budget > 0);
}
