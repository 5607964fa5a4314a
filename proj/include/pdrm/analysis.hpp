#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

#include "pdrm/product.hpp"

namespace pdrm {

struct ValueSolution {
  std::vector<double> values;
  std::vector<std::vector<int>> optimal_actions;  // empty for absorbing states
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_log;  // one entry per iteration
  double gamma = 0.0;
  double tie_tol = 0.0;
};

constexpr double kValueTol = 1e-8;
constexpr double kTieTol = 1e-6;

/// Synchronous Bellman backups until the sup-norm residual drops below tol.
/// With parallel = true the backup sweep is an OpenMP parallel-for; results
/// are bitwise identical to the serial sweep since each state's backup reads
/// only the previous iterate.
ValueSolution value_iteration(const ExplicitProductMDP& mdp, double gamma = 0.99,
                              double tol = kValueTol, bool parallel = true,
                              int max_iterations = 1000000);

struct KStackReport {
  enum class Verdict { Sufficient, Insufficient, InconclusiveOverflow };

  struct Counterexample {
    int state_a = 0;
    int state_b = 0;
    double value_a = 0.0;
    double value_b = 0.0;
    std::vector<int> actions_a;
    std::vector<int> actions_b;
  };

  int k = 0;
  Verdict verdict = Verdict::Sufficient;
  std::vector<Counterexample> counterexamples;
  long long n_groups = 0;
  long long n_states_grouped = 0;
};

const char* to_string(KStackReport::Verdict v);

/// Groups the enumerated non-absorbing states by (env state, step index,
/// machine state, top-k stack prefix) and compares values (within tol) and
/// optimal action sets (exact) inside each group. Any reachable overflow
/// makes the verdict inconclusive regardless of counterexamples.
KStackReport check_k_stack_optimality(const ValueSolution& sol,
                                      const ExplicitProductMDP& mdp, int k,
                                      double value_tol = kTieTol,
                                      std::size_t max_counterexamples = 1000);

/// Number of stack strings of length at most k over gamma_size symbols:
/// (gamma_size^{k+1} - 1) / (gamma_size - 1), and k + 1 when gamma_size = 1.
mpz_class count_stack_strings(int gamma_size, long long k);

/// Same sum up to length n*m*(e+1).
mpz_class count_full_bound(int gamma_size, long long n, long long m, long long e);

struct BlowupTable {
  long long n_reachable = 0;     // enumerated non-absorbing states
  long long full_keys = 0;       // distinct (s, u, stack)
  mpz_class full_bound;
  long long max_stack_len = 0;
  struct Row {
    int k = 0;
    long long keys = 0;  // distinct (s, u, top-k)
    mpz_class bound;
  };
  std::vector<Row> top_k;
};

/// Empirical distinct policy-key counts against the closed-form bounds.
BlowupTable measure_blowup(const Product& product, int horizon,
                           const std::vector<int>& k_list,
                           long long state_cap = 5000000);

}  // namespace pdrm
