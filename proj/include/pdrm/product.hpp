#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include "pdrm/env.hpp"
#include "pdrm/machine.hpp"

namespace pdrm {

struct ProductState {
  int env_state = 0;
  int pdrm_state = 0;
  std::vector<SymId> stack;  // top first

  bool operator==(const ProductState&) const = default;
};

struct ProductStateHash {
  std::size_t operator()(const ProductState& ps) const;
};

/// A labelled MDP composed with a machine. Environment propositions are
/// matched to machine propositions by name; propositions the machine does not
/// declare are invisible to it.
class Product {
 public:
  Product(const TabularMDP& env, const Machine& pdrm);

  const TabularMDP& env() const { return *env_; }
  const Machine& pdrm() const { return *pdrm_; }
  Label to_machine(Label env_label) const;

  struct Branch {
    ProductState state;
    double prob = 0.0;
    double reward = 0.0;
    bool done = false;
    std::vector<int> fired;  // machine transition indices taken
  };

  /// Initial product states: the machine's initial closure fed with each
  /// announced start label; rewards from both are carried on the branch.
  std::vector<Branch> initial_branches() const;
  std::vector<Branch> branches(const ProductState& ps, int a) const;

  struct Sample {
    ProductState state;
    double reward = 0.0;
    bool done = false;
    std::vector<int> fired;
  };

  Sample reset(std::mt19937_64& rng) const;
  Sample step(const ProductState& ps, int a, std::mt19937_64& rng) const;

 private:
  const TabularMDP* env_;
  const Machine* pdrm_;
  std::vector<Label> bit_map_;  // env prop bit -> machine label mask
};

using Policy = std::function<int(const ProductState&, std::mt19937_64&)>;

struct Rollout {
  double ret = 0.0;
  double normalized = 0.0;
  std::vector<ProductState> states;  // visited states, initial first
  std::vector<int> actions;
  std::vector<double> rewards;
  bool done = false;
};

Rollout rollout(const Product& product, const Policy& policy, int horizon,
                std::mt19937_64& rng);

/// Finite truncation of the product process. States are (product state, step
/// index); states at the horizon, machine-final states (collapsed into one
/// sink) and the stack-overflow state are absorbing.
struct ExplicitProductMDP {
  struct Entry {
    int next = 0;
    double prob = 0.0;
    double reward = 0.0;
  };

  const TabularMDP* env = nullptr;
  const Machine* pdrm = nullptr;
  int n_actions = 0;
  int horizon = 0;
  int stack_cap = 0;
  std::vector<ProductState> states;
  std::vector<int> depth;      // step index of first component; -1 for sinks
  std::vector<char> absorbing;
  int sink = -1;
  int overflow = -1;
  bool overflow_reachable = false;
  std::vector<std::vector<Entry>> table;  // [state * n_actions + a]
  std::vector<std::pair<int, double>> initial;

  int n_states() const { return static_cast<int>(states.size()); }
  const std::vector<Entry>& row(int s, int a) const { return table[s * n_actions + a]; }
};

/// Breadth-first closure of all initial states under all actions for
/// `horizon` steps. stack_cap < 0 selects the n*m*(e+1) + 1 bound computed
/// from the machine; deeper stacks divert to the flagged overflow state.
/// Throws Error{ExplosionGuard} past state_cap.
ExplicitProductMDP enumerate_bounded_product(const Product& product, int horizon,
                                             int stack_cap = -1,
                                             long long state_cap = 5000000);

/// Tab-separated rows: state, action, next, prob, reward.
void export_sparse(const ExplicitProductMDP& mdp, std::ostream& out);

}  // namespace pdrm
