#include "pdrm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "pdrm/errors.hpp"

namespace pdrm {

std::string AbstractionSpec::text() const {
  return kind == Kind::Full ? "full" : "top-" + std::to_string(k);
}

ProductState abstract_key(const ProductState& ps, const AbstractionSpec& spec) {
  if (spec.kind == AbstractionSpec::Kind::Full) return ps;
  ProductState key;
  key.env_state = ps.env_state;
  key.pdrm_state = ps.pdrm_state;
  key.stack.assign(ps.stack.begin(),
                   ps.stack.begin() + std::min<std::size_t>(ps.stack.size(), spec.k));
  return key;
}

double Hyperparams::epsilon_at(int episode) const {
  double span = eps_decay_fraction * episodes;
  if (span <= 0.0) return eps_end;
  double f = std::min(1.0, episode / span);
  return eps_start + f * (eps_end - eps_start);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const int n = static_cast<int>(values.size());
  double h = p * (n + 1);
  if (h <= 1.0) return values.front();
  if (h >= n) return values.back();
  int lo = static_cast<int>(h);
  double frac = h - lo;
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

void write_curve_csv(const LearningCurve& curve, std::ostream& out) {
  out << "episode,median,p25,p75\n";
  char buf[96];
  for (const EvalPoint& pt : curve.points) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", pt.episode, pt.median, pt.p25,
                  pt.p75);
    out << buf;
  }
}

int select_action_epsilon_greedy(const ActionValueTable& table, const ProductState& key,
                                 int n_actions, double eps, std::mt19937_64& rng) {
  if (n_actions <= 0) throw Error(ErrorKind::BadConfig, "no actions to select from");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (eps > 0.0 && coin(rng) < eps) {
    return std::uniform_int_distribution<int>(0, n_actions - 1)(rng);
  }
  const std::vector<double>* row = table.find(key);
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n_actions; ++a) {
    best = std::max(best, row ? (*row)[a] : table.initial());
  }
  int ties[64];
  int n_ties = 0;
  for (int a = 0; a < n_actions; ++a) {
    double v = row ? (*row)[a] : table.initial();
    if (v == best) ties[n_ties++] = a;
  }
  return ties[std::uniform_int_distribution<int>(0, n_ties - 1)(rng)];
}

Policy greedy_policy(const ActionValueTable& table, AbstractionSpec spec, int n_actions) {
  // The table must outlive the returned policy.
  return [&table, spec, n_actions](const ProductState& ps, std::mt19937_64& rng) {
    return select_action_epsilon_greedy(table, abstract_key(ps, spec), n_actions, 0.0, rng);
  };
}

EvalPoint evaluate(const Product& product, const Policy& policy, int n_episodes,
                   int horizon, std::mt19937_64& rng) {
  EvalPoint pt;
  for (int i = 0; i < n_episodes; ++i) {
    pt.raw.push_back(rollout(product, policy, horizon, rng).normalized);
  }
  pt.median = quantile(pt.raw, 0.5);
  pt.p25 = quantile(pt.raw, 0.25);
  pt.p75 = quantile(pt.raw, 0.75);
  return pt;
}

namespace {

std::mt19937_64 eval_rng(const Hyperparams& hp, int episode) {
  return std::mt19937_64(hp.seed * 0x9E3779B97F4A7C15ull + 0x51ed270b + episode);
}

}  // namespace

TrainResult q_learning_train(const Product& product, AbstractionSpec abstraction,
                             const Hyperparams& hp, const Product* eval_product) {
  const int n_actions = product.env().n_actions();
  const int horizon = product.env().horizon;
  if (!eval_product) eval_product = &product;
  TrainResult res{ActionValueTable(n_actions), {}, abstraction};
  std::mt19937_64 rng(hp.seed);
  for (int ep = 1; ep <= hp.episodes; ++ep) {
    double eps = hp.epsilon_at(ep - 1);
    Product::Sample s = product.reset(rng);
    double pending = s.reward;
    for (int t = 0; t < horizon && !s.done; ++t) {
      ProductState key = abstract_key(s.state, abstraction);
      int a = select_action_epsilon_greedy(res.table, key, n_actions, eps, rng);
      Product::Sample nx = product.step(s.state, a, rng);
      double r = nx.reward + pending;
      pending = 0.0;
      double target = r;
      if (!nx.done) {
        ProductState nkey = abstract_key(nx.state, abstraction);
        const std::vector<double>* nrow = res.table.find(nkey);
        double best = res.table.initial();
        if (nrow) best = *std::max_element(nrow->begin(), nrow->end());
        target += hp.gamma * best;
      }
      double& q = res.table.row(key)[a];
      q += hp.alpha * (target - q);
      s = std::move(nx);
    }
    if (ep % hp.eval_every == 0 || ep == hp.episodes) {
      std::mt19937_64 erng = eval_rng(hp, ep);
      Policy pi = greedy_policy(res.table, abstraction, n_actions);
      EvalPoint pt = evaluate(*eval_product, pi, hp.eval_episodes,
                              eval_product->env().horizon, erng);
      pt.episode = ep;
      if (res.curve.points.empty() || res.curve.points.back().episode != ep) {
        res.curve.points.push_back(std::move(pt));
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// CRA baseline

namespace {

struct CraKey {
  int env = 0;
  int state = 0;
  std::vector<long long> counters;
  bool operator==(const CraKey&) const = default;
};

struct CraKeyHash {
  std::size_t operator()(const CraKey& k) const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(k.env));
    mix(static_cast<std::uint64_t>(k.state));
    for (long long c : k.counters) mix(static_cast<std::uint64_t>(c) + 11);
    return static_cast<std::size_t>(h);
  }
};

using CraTable = std::unordered_map<CraKey, std::vector<double>, CraKeyHash>;

int cra_greedy(const CraTable& table, const CraKey& key, int n_actions, double eps,
               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (eps > 0.0 && coin(rng) < eps) {
    return std::uniform_int_distribution<int>(0, n_actions - 1)(rng);
  }
  auto it = table.find(key);
  double best = 0.0;
  if (it != table.end()) best = *std::max_element(it->second.begin(), it->second.end());
  int ties[64];
  int n_ties = 0;
  for (int a = 0; a < n_actions; ++a) {
    double v = it == table.end() ? 0.0 : it->second[a];
    if (v == best) ties[n_ties++] = a;
  }
  return ties[std::uniform_int_distribution<int>(0, n_ties - 1)(rng)];
}

struct CraEpisodeState {
  int env_state = 0;
  int cra_state = 0;
  std::vector<long long> counters;
  bool done = false;
  long long ops = 0;
};

/// Sampled episode reset: draws the initial entry and feeds its label.
CraEpisodeState cra_reset(const TabularMDP& env, const Cra& cra,
                          const std::vector<Label>& label_map, std::mt19937_64& rng,
                          double& pending) {
  CraEpisodeState st;
  st.counters.assign(cra.n_counters, 0);
  st.cra_state = cra.initial;
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  const InitialEntry* pick = &env.initial.back();
  for (const InitialEntry& e : env.initial) {
    acc += e.prob;
    if (u < acc) {
      pick = &e;
      break;
    }
  }
  st.env_state = pick->state;
  CraStepResult sr = cra_step(cra, st.cra_state, st.counters, label_map[pick->label]);
  pending = sr.reward;
  st.cra_state = sr.state;
  st.counters = std::move(sr.counters);
  st.done = sr.terminal;
  if (sr.fired >= 0) {
    for (long long d : cra.transitions[sr.fired].deltas) st.ops += std::llabs(d);
  }
  return st;
}

std::vector<Label> build_cra_label_map(const TabularMDP& env, const Cra& cra) {
  std::vector<Label> bit(env.props.size(), 0);
  for (std::size_t i = 0; i < env.props.size(); ++i) {
    auto it = std::find(cra.props.begin(), cra.props.end(), env.props[i]);
    if (it != cra.props.end()) bit[i] = Label{1} << (it - cra.props.begin());
  }
  std::vector<Label> map(std::size_t{1} << env.props.size(), 0);
  for (Label sigma = 0; sigma < map.size(); ++sigma) {
    Label out = 0;
    for (std::size_t i = 0; i < bit.size(); ++i) {
      if ((sigma >> i) & 1u) out |= bit[i];
    }
    map[sigma] = out;
  }
  return map;
}

}  // namespace

CraTrainResult q_learning_train_cra(const TabularMDP& env, const Cra& cra,
                                    const Hyperparams& hp) {
  if (env.props.size() > 16) {
    throw Error(ErrorKind::BadConfig, "too many propositions for the CRA label map");
  }
  const int n_actions = env.n_actions();
  std::vector<Label> label_map = build_cra_label_map(env, cra);
  CraTable table;
  CraTrainResult res;
  std::mt19937_64 rng(hp.seed);

  auto run_episode = [&](std::mt19937_64& r, double eps, bool learn) -> double {
    double pending = 0.0;
    CraEpisodeState st = cra_reset(env, cra, label_map, r, pending);
    double ret = pending;
    bool cut = false;
    for (int t = 0; t < env.horizon && !st.done && !cut; ++t) {
      CraKey key{st.env_state, st.cra_state, st.counters};
      int a = cra_greedy(table, key, n_actions, eps, r);
      const auto& outs = env.outcomes(st.env_state, a);
      double u = std::uniform_real_distribution<double>(0.0, 1.0)(r);
      double acc = 0.0;
      const Outcome* o = &outs.back();
      for (const Outcome& cand : outs) {
        acc += cand.prob;
        if (u < acc) {
          o = &cand;
          break;
        }
      }
      CraStepResult sr = cra_step(cra, st.cra_state, st.counters, label_map[o->label]);
      if (sr.fired >= 0) {
        for (long long d : cra.transitions[sr.fired].deltas) st.ops += std::llabs(d);
      }
      double reward = sr.reward + o->env_reward + pending;
      pending = 0.0;
      ret += sr.reward + o->env_reward;
      bool done = sr.terminal;
      if (hp.step_op_budget >= 0 && st.ops > hp.step_op_budget) {
        cut = true;
        if (learn) ++res.episodes_cut_by_op_budget;
      }
      if (learn) {
        CraKey nkey{o->next, sr.state, sr.counters};
        double target = reward;
        if (!done && !cut) {
          auto it = table.find(nkey);
          if (it != table.end()) {
            target += hp.gamma * *std::max_element(it->second.begin(), it->second.end());
          }
        }
        auto it = table.find(key);
        if (it == table.end()) {
          it = table.emplace(key, std::vector<double>(n_actions, 0.0)).first;
        }
        it->second[a] += hp.alpha * (target - it->second[a]);
      }
      st.env_state = o->next;
      st.cra_state = sr.state;
      st.counters = std::move(sr.counters);
      st.done = done;
    }
    return std::clamp(ret / env.reward_normalizer, -1.0, 1.0);
  };

  for (int ep = 1; ep <= hp.episodes; ++ep) {
    run_episode(rng, hp.epsilon_at(ep - 1), true);
    if (ep % hp.eval_every == 0 || ep == hp.episodes) {
      std::mt19937_64 erng = eval_rng(hp, ep);
      EvalPoint pt;
      pt.episode = ep;
      for (int i = 0; i < hp.eval_episodes; ++i) {
        pt.raw.push_back(run_episode(erng, 0.0, false));
      }
      pt.median = quantile(pt.raw, 0.5);
      pt.p25 = quantile(pt.raw, 0.25);
      pt.p75 = quantile(pt.raw, 0.75);
      if (res.curve.points.empty() || res.curve.points.back().episode != pt.episode) {
        res.curve.points.push_back(std::move(pt));
      }
    }
  }
  res.table_keys = table.size();
  return res;
}

// ---------------------------------------------------------------------------
// Hierarchical options

namespace {

bool is_identity_self_loop(const Transition& t) {
  if (t.target != t.source) return false;
  if (t.pop == kEps) return t.push.empty();
  return t.push.size() == 1 && t.push[0] == t.pop;
}

std::vector<OptionDescriptor> build_options(const Machine& m) {
  std::vector<OptionDescriptor> out;
  for (int i = 0; i < static_cast<int>(m.transitions.size()); ++i) {
    const Transition& t = m.transitions[i];
    if (t.eps_input || is_identity_self_loop(t)) continue;
    OptionDescriptor d;
    d.transition = i;
    d.text = m.state_names[t.source] + " " +
             (t.eps_input ? "eps" : t.guard.text()) + " pop " +
             (t.pop == kEps ? std::string("-") : m.stack_syms[t.pop]);
    out.push_back(std::move(d));
  }
  return out;
}

bool option_available(const Machine& m, const Transition& t, const ProductState& ps) {
  if (ps.pdrm_state != t.source) return false;
  if (t.pop == kEps) return true;
  return !ps.stack.empty() && ps.stack.front() == t.pop;
}

std::pair<int, SymId> config_signature(const ProductState& ps) {
  return {ps.pdrm_state, ps.stack.empty() ? SymId(-3) : ps.stack.front()};
}

}  // namespace

HierarchicalResult hierarchical_train(const Product& product, const Hyperparams& hp,
                                      int option_abstraction_k,
                                      const Product* eval_product) {
  const Machine& m = product.pdrm();
  const int n_actions = product.env().n_actions();
  const int horizon = product.env().horizon;
  const int budget = hp.option_budget < 0 ? horizon : hp.option_budget;
  if (!eval_product) eval_product = &product;

  HierarchicalResult res;
  res.options = build_options(m);
  const int n_options = static_cast<int>(res.options.size());
  if (n_options == 0) throw Error(ErrorKind::NoAvailableOption, "machine has no options");
  res.meta = ActionValueTable(n_options);
  for (int o = 0; o < n_options; ++o) res.option_q.emplace_back(n_actions);
  AbstractionSpec opt_abs = AbstractionSpec::top(option_abstraction_k);

  std::mt19937_64 rng(hp.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  auto available = [&](const ProductState& ps) {
    std::vector<int> out;
    for (int o = 0; o < n_options; ++o) {
      if (option_available(m, m.transitions[res.options[o].transition], ps)) {
        out.push_back(o);
      }
    }
    return out;
  };
  auto meta_best = [&](const ProductState& ps, const std::vector<int>& avail) {
    double best = -std::numeric_limits<double>::infinity();
    for (int o : avail) best = std::max(best, res.meta.get(ps, o));
    return best;
  };

  for (int ep = 1; ep <= hp.episodes; ++ep) {
    double eps = hp.epsilon_at(ep - 1);
    Product::Sample s = product.reset(rng);
    double pending = s.reward;
    int t = 0;
    while (t < horizon && !s.done) {
      std::vector<int> avail = available(s.state);
      if (avail.empty()) {
        int a = std::uniform_int_distribution<int>(0, n_actions - 1)(rng);
        s = product.step(s.state, a, rng);
        pending += s.reward;
        ++t;
        ++res.fallback_steps;
        continue;
      }
      int opt;
      if (coin(rng) < eps) {
        opt = avail[std::uniform_int_distribution<int>(
            0, static_cast<int>(avail.size()) - 1)(rng)];
      } else {
        double best = meta_best(s.state, avail);
        std::vector<int> ties;
        for (int o : avail) {
          if (res.meta.get(s.state, o) == best) ties.push_back(o);
        }
        opt = ties[std::uniform_int_distribution<int>(
            0, static_cast<int>(ties.size()) - 1)(rng)];
      }
      const int trigger = res.options[opt].transition;
      ProductState meta_from = s.state;
      auto sig = config_signature(s.state);
      double smdp_reward = pending;
      pending = 0.0;
      double discount = 1.0;
      int tau = 0;
      while (t < horizon && tau < budget) {
        ProductState okey = abstract_key(s.state, opt_abs);
        int a = select_action_epsilon_greedy(res.option_q[opt], okey, n_actions, eps, rng);
        Product::Sample nx = product.step(s.state, a, rng);
        bool fired = std::find(nx.fired.begin(), nx.fired.end(), trigger) != nx.fired.end();
        bool terminated = nx.done || config_signature(nx.state) != sig;
        double target = fired ? 1.0 : 0.0;
        if (!terminated) {
          ProductState nokey = abstract_key(nx.state, opt_abs);
          const std::vector<double>* nrow = res.option_q[opt].find(nokey);
          double best = res.option_q[opt].initial();
          if (nrow) best = *std::max_element(nrow->begin(), nrow->end());
          target += hp.gamma * best;
        }
        double& q = res.option_q[opt].row(okey)[a];
        q += hp.alpha * (target - q);
        smdp_reward += discount * nx.reward;
        discount *= hp.gamma;
        ++tau;
        ++t;
        s = std::move(nx);
        if (terminated) break;
      }
      double target = smdp_reward;
      if (!s.done && t < horizon) {
        std::vector<int> navail = available(s.state);
        if (!navail.empty()) target += discount * meta_best(s.state, navail);
      }
      double& q = res.meta.row(meta_from)[opt];
      q += hp.alpha * (target - q);
    }
    if (ep % hp.eval_every == 0 || ep == hp.episodes) {
      std::mt19937_64 erng = eval_rng(hp, ep);
      Policy pi = hierarchical_policy(res, product, option_abstraction_k);
      EvalPoint pt = evaluate(*eval_product, pi, hp.eval_episodes,
                              eval_product->env().horizon, erng);
      pt.episode = ep;
      if (res.curve.points.empty() || res.curve.points.back().episode != pt.episode) {
        res.curve.points.push_back(std::move(pt));
      }
    }
  }
  return res;
}

Policy hierarchical_policy(const HierarchicalResult& h, const Product& product,
                           int option_abstraction_k) {
  const Machine* m = &product.pdrm();
  const int n_actions = product.env().n_actions();
  AbstractionSpec opt_abs = AbstractionSpec::top(option_abstraction_k);
  // h and the product must outlive the returned policy.
  return [&h, m, n_actions, opt_abs](const ProductState& ps, std::mt19937_64& rng) {
    std::vector<int> avail;
    for (int o = 0; o < static_cast<int>(h.options.size()); ++o) {
      if (option_available(*m, m->transitions[h.options[o].transition], ps)) {
        avail.push_back(o);
      }
    }
    if (avail.empty()) {
      return std::uniform_int_distribution<int>(0, n_actions - 1)(rng);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int o : avail) best = std::max(best, h.meta.get(ps, o));
    std::vector<int> ties;
    for (int o : avail) {
      if (h.meta.get(ps, o) == best) ties.push_back(o);
    }
    int opt = ties[std::uniform_int_distribution<int>(
        0, static_cast<int>(ties.size()) - 1)(rng)];
    return select_action_epsilon_greedy(h.option_q[opt], abstract_key(ps, opt_abs),
                                        n_actions, 0.0, rng);
  };
}

}  // namespace pdrm
