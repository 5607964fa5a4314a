#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "pdrm/analysis.hpp"
#include "pdrm/cra.hpp"
#include "pdrm/errors.hpp"
#include "pdrm/harness.hpp"

using namespace pdrm;

namespace {

std::string describe_state(const ExplicitProductMDP& mdp, int s) {
  const ProductState& ps = mdp.states[s];
  std::string out = "<" + mdp.env->state_names[ps.env_state] + ", " +
                    mdp.pdrm->state_names[ps.pdrm_state] + ", [";
  for (std::size_t i = 0; i < ps.stack.size(); ++i) {
    if (i) out += " ";
    out += mdp.pdrm->stack_syms[ps.stack[i]];
  }
  out += "], t=" + std::to_string(mdp.depth[s]) + ">";
  return out;
}

int cmd_validate(const std::string& path) {
  if (path.size() > 4 && path.compare(path.size() - 4, 4, ".cra") == 0) {
    Cra cra = validate(load_cra(path));
    std::cout << "ok: cra '" << cra.name << "', " << cra.n_states() << " states, "
              << cra.n_counters << " counter(s), " << cra.transitions.size()
              << " transitions\n";
  } else {
    Machine m = validate(load_pdrm(path));
    std::cout << "ok: pdrm '" << m.name << "', " << m.n_states() << " states, |Gamma|="
              << m.n_syms() << ", " << m.transitions.size() << " transitions, m="
              << m.max_push_len() << ", e=" << m.max_pushing_eps_chain() << "\n";
  }
  return 0;
}

int cmd_train(const std::string& cfg_path) {
  ExperimentConfig cfg = parse_experiment_config(cfg_path);
  RunArtifactSet art = run_experiment(cfg);
  for (const auto& rec : art.runs) {
    std::cout << cfg.name << " " << rec.agent << " seed " << rec.seed << ": "
              << (rec.failed ? "FAILED " + rec.error
                             : rec.skipped ? std::string("skipped") : "ok")
              << "\n";
  }
  if (art.all_ok()) {
    for (const auto& p : emit_plot_data(cfg, art)) std::cout << "wrote " << p << "\n";
  }
  return art.all_ok() ? 0 : 1;
}

int cmd_eval(const std::string& cfg_path, const std::string& agent_name,
             std::uint64_t seed) {
  ExperimentConfig cfg = parse_experiment_config(cfg_path);
  const AgentSpec* spec = nullptr;
  for (const auto& a : cfg.agents) {
    if (a.name == agent_name) spec = &a;
  }
  if (!spec) throw Error(ErrorKind::BadConfig, "no agent named '" + agent_name + "'");
  ExperimentConfig single = cfg;
  single.agents = {*spec};
  single.seeds = {seed};
  single.outdir = cfg.outdir + "/eval_" + agent_name + "_s" + std::to_string(seed);
  RunArtifactSet art = run_experiment(single);
  if (!art.all_ok()) {
    std::cerr << art.runs[0].error << "\n";
    return 1;
  }
  std::ifstream in(art.runs[0].csv_path);
  std::string line, last;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  std::cout << "final (episode,median,p25,p75): " << last << "\n";
  return 0;
}

int cmd_check_topk(const std::string& cfg_path, int k, int horizon, int stack_cap,
                   double gamma) {
  ExperimentConfig cfg = parse_experiment_config(cfg_path);
  TabularMDP env = build_env(cfg.env, cfg.base_dir);
  Machine m = validate(load_pdrm(cfg.base_dir + "/" + cfg.pdrm_path));
  Product product(env, m);
  ExplicitProductMDP mdp = enumerate_bounded_product(product, horizon, stack_cap);
  std::cout << "enumerated " << mdp.n_states() << " states (stack cap " << mdp.stack_cap
            << ")\n";
  ValueSolution sol = value_iteration(mdp, gamma);
  std::cout << "value iteration: " << sol.iterations << " iterations, residual "
            << sol.residual << "\n";
  KStackReport rep = check_k_stack_optimality(sol, mdp, k);
  std::cout << "k=" << k << " verdict: " << to_string(rep.verdict) << " ("
            << rep.n_groups << " groups over " << rep.n_states_grouped << " states, "
            << rep.counterexamples.size() << " counterexample(s))\n";
  std::size_t shown = 0;
  for (const auto& ce : rep.counterexamples) {
    if (shown++ >= 20) break;
    std::cout << "  " << describe_state(mdp, ce.state_a) << " V=" << ce.value_a
              << " vs " << describe_state(mdp, ce.state_b) << " V=" << ce.value_b << "\n";
  }
  return rep.verdict == KStackReport::Verdict::Sufficient ? 0 : 1;
}

int cmd_translate(const std::string& in_path, const std::string& out_path) {
  Cra cra = validate(load_cra(in_path));
  Machine m = translate_cra_to_pdrm(cra);
  std::string text = serialize_pdrm(m);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_check_equiv(const std::string& cra_path, const std::string& pdrm_path,
                    int n_words, int max_len, std::uint64_t seed) {
  Cra cra = validate(load_cra(cra_path));
  Machine m = pdrm_path.empty() ? translate_cra_to_pdrm(cra)
                                : validate(load_pdrm(pdrm_path));
  auto words = random_words(cra.n_props(), n_words, max_len, seed);
  EquivalenceReport rep = check_reward_equivalence(cra, m, words);
  std::cout << (rep.pass() ? "equivalent" : "NOT equivalent") << " on " << rep.n_words
            << " random words (seed " << seed << ")\n";
  for (std::size_t i = 0; i < rep.mismatches.size() && i < 5; ++i) {
    const auto& e = rep.mismatches[i];
    std::cout << "  mismatch on word of length " << e.word.size() << "\n";
  }
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pushdown reward machine laboratory"};
  app.require_subcommand(1);

  std::string path, agent, out_path, pdrm_path;
  std::uint64_t seed = 1;
  int k = 1, horizon = 8, stack_cap = -1, n_words = 1000, max_len = 20;
  double gamma = 0.99;
  long long g = 2, kk = 0, n = 0, m = 0, e = 0;
  bool full = false;

  auto* validate_cmd = app.add_subcommand("validate", "check a .pdrm or .cra file");
  validate_cmd->add_option("file", path)->required();

  auto* train_cmd = app.add_subcommand("train", "run an experiment config");
  train_cmd->add_option("config", path)->required();

  auto* eval_cmd = app.add_subcommand("eval", "train and report one agent/seed");
  eval_cmd->add_option("config", path)->required();
  eval_cmd->add_option("--agent", agent)->required();
  eval_cmd->add_option("--seed", seed);

  auto* topk_cmd = app.add_subcommand("check-topk", "k-stack abstraction optimality check");
  topk_cmd->add_option("config", path)->required();
  topk_cmd->add_option("--k", k);
  topk_cmd->add_option("--horizon", horizon);
  topk_cmd->add_option("--stack-cap", stack_cap);
  topk_cmd->add_option("--gamma", gamma);

  auto* tr_cmd = app.add_subcommand("translate-cra", "1-counter CRA to pdRM");
  tr_cmd->add_option("file", path)->required();
  tr_cmd->add_option("-o,--out", out_path);

  auto* eq_cmd = app.add_subcommand("check-equiv", "reward-trace equivalence check");
  eq_cmd->add_option("cra", path)->required();
  eq_cmd->add_option("pdrm", pdrm_path);
  eq_cmd->add_option("--words", n_words);
  eq_cmd->add_option("--max-len", max_len);
  eq_cmd->add_option("--seed", seed);

  auto* count_cmd = app.add_subcommand("count", "closed-form stack-string counts");
  count_cmd->add_option("--gamma", g);
  count_cmd->add_option("--k", kk);
  count_cmd->add_flag("--full", full);
  count_cmd->add_option("--n", n);
  count_cmd->add_option("--m", m);
  count_cmd->add_option("--e", e);

  auto* plot_cmd = app.add_subcommand("plot-data", "emit figure data from aggregates");
  plot_cmd->add_option("config", path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return cmd_validate(path);
    if (train_cmd->parsed()) return cmd_train(path);
    if (eval_cmd->parsed()) return cmd_eval(path, agent, seed);
    if (topk_cmd->parsed()) return cmd_check_topk(path, k, horizon, stack_cap, gamma);
    if (tr_cmd->parsed()) return cmd_translate(path, out_path);
    if (eq_cmd->parsed()) return cmd_check_equiv(path, pdrm_path, n_words, max_len, seed);
    if (count_cmd->parsed()) {
      mpz_class c = full ? count_full_bound(static_cast<int>(g), n, m, e)
                         : count_stack_strings(static_cast<int>(g), kk);
      std::cout << c.get_str() << "\n";
      return 0;
    }
    if (plot_cmd->parsed()) {
      ExperimentConfig cfg = parse_experiment_config(path);
      for (const auto& p : emit_plot_data(cfg, load_artifacts(cfg))) {
        std::cout << "wrote " << p << "\n";
      }
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
