#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdrm/env.hpp"
#include "pdrm/learning.hpp"

namespace pdrm {

struct EnvSpec {
  std::string kind;  // letterenv | maze | multimaze | deliverworld | paintworld
  std::map<std::string, std::string> params;
};

struct AgentSpec {
  std::string name;
  std::string algorithm;  // q_learning | hierarchical | q_cra | q_translated
  AbstractionSpec abstraction = AbstractionSpec::top(1);
  int option_k = 1;
  Hyperparams hp;
};

struct ExperimentConfig {
  std::string name;
  std::string base_dir;  // directory of the config file; all paths relative to it
  std::string pdrm_path;
  std::string cra_path;
  EnvSpec env;
  std::optional<EnvSpec> eval_env;  // test-time environment override
  std::vector<AgentSpec> agents;
  std::vector<std::uint64_t> seeds;
  std::string outdir;
  std::uint64_t hash = 0;
};

/// Parses and fully validates a config: referenced machine/map assets are
/// loaded and checked. The hash is FNV-1a over the canonicalized text.
ExperimentConfig parse_experiment_config(const std::string& path);

TabularMDP build_env(const EnvSpec& spec, const std::string& base_dir);

struct RunRecord {
  std::string agent;
  std::uint64_t seed = 0;
  std::string csv_path;
  bool skipped = false;  // completed in an earlier invocation
  bool failed = false;
  std::string error;
  double wall_seconds = 0.0;
  std::size_t table_keys = 0;
};

struct RunArtifactSet {
  std::string outdir;
  std::vector<RunRecord> runs;
  std::vector<std::string> aggregate_csvs;  // one per agent
  std::string metadata_path;

  bool all_ok() const {
    for (const auto& r : runs) {
      if (r.failed) return false;
    }
    return true;
  }
};

/// Called before each run; used by tests to inject faults.
using RunHook = std::function<void(const std::string& agent, std::uint64_t seed)>;

/// Executes every (agent, seed) pair in a worker pool (size from
/// PDRM_LAB_WORKERS, default 1), skipping runs already completed under the
/// same config hash, then pools raw evaluation returns across seeds into one
/// aggregate percentile CSV per agent.
RunArtifactSet run_experiment(const ExperimentConfig& cfg, const RunHook& hook = {});

/// Writes <name>_figure.tsv (episode plus median/p25/p75 column triple per
/// agent) and a plot manifest next to it. Throws Error{MissingAggregate}.
std::vector<std::string> emit_plot_data(const ExperimentConfig& cfg,
                                        const RunArtifactSet& artifacts);

/// Re-reads aggregates from an output directory produced by run_experiment.
RunArtifactSet load_artifacts(const ExperimentConfig& cfg);

}  // namespace pdrm
