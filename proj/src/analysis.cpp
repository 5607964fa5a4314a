#include "pdrm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pdrm/errors.hpp"

namespace pdrm {

namespace {

/// One synchronous sweep; returns the sup-norm residual.
double sweep(const ExplicitProductMDP& mdp, const std::vector<double>& prev,
             std::vector<double>& next, double gamma, bool parallel) {
  const int n = mdp.n_states();
  double residual = 0.0;
#pragma omp parallel for schedule(static) reduction(max : residual) if (parallel)
  for (int s = 0; s < n; ++s) {
    double best;
    if (mdp.absorbing[s]) {
      best = 0.0;
    } else {
      best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = 0.0;
        for (const auto& e : mdp.row(s, a)) q += e.prob * (e.reward + gamma * prev[e.next]);
        best = std::max(best, q);
      }
    }
    next[s] = best;
    residual = std::max(residual, std::abs(best - prev[s]));
  }
  return residual;
}

}  // namespace

ValueSolution value_iteration(const ExplicitProductMDP& mdp, double gamma, double tol,
                              bool parallel, int max_iterations) {
  if (gamma <= 0.0 || gamma > 1.0 || tol <= 0.0) {
    throw Error(ErrorKind::BadConfig, "value iteration needs gamma in (0,1] and tol > 0");
  }
  ValueSolution sol;
  sol.gamma = gamma;
  sol.tie_tol = kTieTol;
  const int n = mdp.n_states();
  std::vector<double> prev(n, 0.0), next(n, 0.0);
  for (int it = 0; it < max_iterations; ++it) {
    double residual = sweep(mdp, prev, next, gamma, parallel);
    std::swap(prev, next);
    ++sol.iterations;
    sol.residual = residual;
    sol.residual_log.push_back(residual);
    if (!std::isfinite(residual)) {
      throw Error(ErrorKind::NonFiniteValue, "non-finite Bellman residual");
    }
    if (residual < tol) break;
  }
  sol.values = std::move(prev);
  for (double v : sol.values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "non-finite state value");
  }
  sol.optimal_actions.resize(n);
  for (int s = 0; s < n; ++s) {
    if (mdp.absorbing[s]) continue;
    std::vector<double> q(mdp.n_actions, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (const auto& e : mdp.row(s, a)) {
        q[a] += e.prob * (e.reward + gamma * sol.values[e.next]);
      }
      best = std::max(best, q[a]);
    }
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (q[a] >= best - kTieTol) sol.optimal_actions[s].push_back(a);
    }
  }
  return sol;
}

const char* to_string(KStackReport::Verdict v) {
  switch (v) {
    case KStackReport::Verdict::Sufficient: return "sufficient";
    case KStackReport::Verdict::Insufficient: return "insufficient";
    case KStackReport::Verdict::InconclusiveOverflow: return "inconclusive-overflow";
  }
  return "?";
}

KStackReport check_k_stack_optimality(const ValueSolution& sol,
                                      const ExplicitProductMDP& mdp, int k,
                                      double value_tol,
                                      std::size_t max_counterexamples) {
  KStackReport rep;
  rep.k = k;
  std::unordered_map<ProductState, int, ProductStateHash> groups;
  std::vector<int> representative;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.absorbing[s]) continue;
    ++rep.n_states_grouped;
    ProductState key;
    key.env_state = mdp.states[s].env_state;
    key.pdrm_state = mdp.states[s].pdrm_state;
    const auto& stack = mdp.states[s].stack;
    key.stack.assign(stack.begin(),
                     stack.begin() + std::min<std::size_t>(stack.size(), k));
    key.stack.push_back(static_cast<SymId>(mdp.depth[s] + 16384));  // fold in step index
    auto [it, fresh] = groups.emplace(std::move(key), static_cast<int>(representative.size()));
    if (fresh) {
      representative.push_back(s);
      continue;
    }
    int r = representative[it->second];
    bool value_differs = std::abs(sol.values[r] - sol.values[s]) > value_tol;
    bool actions_differ = sol.optimal_actions[r] != sol.optimal_actions[s];
    if ((value_differs || actions_differ) && rep.counterexamples.size() < max_counterexamples) {
      rep.counterexamples.push_back({r, s, sol.values[r], sol.values[s],
                                     sol.optimal_actions[r], sol.optimal_actions[s]});
    }
    if (value_differs || actions_differ) {
      rep.verdict = KStackReport::Verdict::Insufficient;
    }
  }
  rep.n_groups = static_cast<long long>(representative.size());
  if (mdp.overflow_reachable) rep.verdict = KStackReport::Verdict::InconclusiveOverflow;
  return rep;
}

mpz_class count_stack_strings(int gamma_size, long long k) {
  if (gamma_size < 1 || k < 0) {
    throw Error(ErrorKind::BadConfig, "count_stack_strings needs gamma_size >= 1, k >= 0");
  }
  if (gamma_size == 1) return mpz_class(static_cast<long>(k + 1));
  mpz_class g(gamma_size), p;
  mpz_pow_ui(p.get_mpz_t(), g.get_mpz_t(), static_cast<unsigned long>(k + 1));
  return (p - 1) / (g - 1);
}

mpz_class count_full_bound(int gamma_size, long long n, long long m, long long e) {
  if (n < 0 || m < 0 || e < 0) {
    throw Error(ErrorKind::BadConfig, "count_full_bound needs n, m, e >= 0");
  }
  return count_stack_strings(gamma_size, n * m * (e + 1));
}

BlowupTable measure_blowup(const Product& product, int horizon,
                           const std::vector<int>& k_list, long long state_cap) {
  ExplicitProductMDP mdp = enumerate_bounded_product(product, horizon, -1, state_cap);
  const Machine& m = product.pdrm();
  BlowupTable out;
  long long e = m.max_pushing_eps_chain();
  mpz_class su(static_cast<long>(product.env().n_states()) *
               static_cast<long>(m.n_states()));
  out.full_bound = su * count_full_bound(m.n_syms(), horizon, m.max_push_len(), e);

  std::unordered_map<ProductState, char, ProductStateHash> full_keys;
  std::vector<std::unordered_map<ProductState, char, ProductStateHash>> topk_keys(
      k_list.size());
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.depth[s] < 0) continue;  // sinks
    ++out.n_reachable;
    const ProductState& ps = mdp.states[s];
    out.max_stack_len = std::max<long long>(out.max_stack_len,
                                            static_cast<long long>(ps.stack.size()));
    full_keys.emplace(ps, 1);
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      ProductState key;
      key.env_state = ps.env_state;
      key.pdrm_state = ps.pdrm_state;
      key.stack.assign(ps.stack.begin(),
                       ps.stack.begin() + std::min<std::size_t>(ps.stack.size(), k_list[i]));
      topk_keys[i].emplace(std::move(key), 1);
    }
  }
  out.full_keys = static_cast<long long>(full_keys.size());
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    BlowupTable::Row row;
    row.k = k_list[i];
    row.keys = static_cast<long long>(topk_keys[i].size());
    row.bound = su * count_stack_strings(m.n_syms(), k_list[i]);
    out.top_k.push_back(std::move(row));
  }
  return out;
}

}  // namespace pdrm
