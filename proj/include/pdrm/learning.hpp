#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdrm/cra.hpp"
#include "pdrm/product.hpp"

namespace pdrm {

struct AbstractionSpec {
  enum class Kind { Full, TopK };
  Kind kind = Kind::TopK;
  int k = 1;

  static AbstractionSpec full() { return {Kind::Full, 0}; }
  static AbstractionSpec top(int k) { return {Kind::TopK, k}; }
  std::string text() const;
};

ProductState abstract_key(const ProductState& ps, const AbstractionSpec& spec);

/// Q estimates with default 0 for unseen keys, one row of action values per
/// abstracted state.
class ActionValueTable {
 public:
  explicit ActionValueTable(int n_actions = 0, double initial = 0.0)
      : n_actions_(n_actions), initial_(initial) {}

  double get(const ProductState& key, int a) const {
    auto it = q_.find(key);
    return it == q_.end() ? initial_ : it->second[a];
  }
  std::vector<double>& row(const ProductState& key) {
    auto it = q_.find(key);
    if (it == q_.end()) {
      it = q_.emplace(key, std::vector<double>(n_actions_, initial_)).first;
    }
    return it->second;
  }
  const std::vector<double>* find(const ProductState& key) const {
    auto it = q_.find(key);
    return it == q_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return q_.size(); }
  int n_actions() const { return n_actions_; }
  double initial() const { return initial_; }

 private:
  std::unordered_map<ProductState, std::vector<double>, ProductStateHash> q_;
  int n_actions_;
  double initial_;
};

struct Hyperparams {
  double alpha = 0.1;
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.8;  // fraction of episodes over which to decay
  int episodes = 500;
  int eval_every = 25;
  int eval_episodes = 10;
  std::uint64_t seed = 1;
  int option_budget = -1;          // hierarchical; -1 means the env horizon
  long long step_op_budget = -1;   // CRA unit-op budget per episode; -1 = off

  double epsilon_at(int episode) const;
};

struct EvalPoint {
  int episode = 0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  std::vector<double> raw;  // normalized returns, one per test episode
};

struct LearningCurve {
  std::vector<EvalPoint> points;
};

/// Quantile of a sample by the h = p(n+1) interpolation rule.
double quantile(std::vector<double> values, double p);

/// Header `episode,median,p25,p75`, 6 fractional digits.
void write_curve_csv(const LearningCurve& curve, std::ostream& out);

/// Eps-greedy over the table row (default initial for unseen keys); greedy
/// ties broken uniformly.
int select_action_epsilon_greedy(const ActionValueTable& table, const ProductState& key,
                                 int n_actions, double eps, std::mt19937_64& rng);

struct TrainResult {
  ActionValueTable table;
  LearningCurve curve;
  AbstractionSpec abstraction;
};

Policy greedy_policy(const ActionValueTable& table, AbstractionSpec spec, int n_actions);

EvalPoint evaluate(const Product& product, const Policy& policy, int n_episodes,
                   int horizon, std::mt19937_64& rng);

/// One-step Q-learning on product rollouts; evaluation every eval_every
/// episodes with exploration off. Deterministic given hp.seed.
TrainResult q_learning_train(const Product& product, AbstractionSpec abstraction,
                             const Hyperparams& hp,
                             const Product* eval_product = nullptr);

// ---------------------------------------------------------------------------
// CRA baseline: same Q-learning, keyed on (env state, CRA state, counters).

struct CraTrainResult {
  LearningCurve curve;
  std::size_t table_keys = 0;
  long long episodes_cut_by_op_budget = 0;
};

CraTrainResult q_learning_train_cra(const TabularMDP& env, const Cra& cra,
                                    const Hyperparams& hp);

// ---------------------------------------------------------------------------
// Hierarchical options (one per configuration-changing non-eps transition).

struct OptionDescriptor {
  int transition = 0;  // machine transition index
  std::string text;
};

struct HierarchicalResult {
  std::vector<OptionDescriptor> options;
  ActionValueTable meta;                  // keyed on full product state
  std::vector<ActionValueTable> option_q; // keyed on (env, u, top-1)
  LearningCurve curve;
  long long fallback_steps = 0;  // steps taken with no option available
};

/// SMDP Q-learning over options; option policies are intra-option Q-learners
/// with pseudo-reward 1 when their transition fires. Option policies see the
/// top option_abstraction_k stack symbols, the meta policy the full state.
HierarchicalResult hierarchical_train(const Product& product, const Hyperparams& hp,
                                      int option_abstraction_k = 1,
                                      const Product* eval_product = nullptr);

/// Greedy meta+option policy for evaluation of a trained hierarchy.
Policy hierarchical_policy(const HierarchicalResult& h, const Product& product,
                           int option_abstraction_k = 1);

}  // namespace pdrm
