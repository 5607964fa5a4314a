#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "pdrm/formula.hpp"
#include "pdrm/machine.hpp"

namespace pdrm {

/// How counter updates that would go below zero are handled. Saturating
/// clamps at zero, which is what the stack simulation does when it leaves
/// the bottom marker in place; strict raises NegativeCounter instead.
enum class CounterMode { Saturating, Strict };

struct CraTransition {
  int source = 0;
  Guard guard;
  std::vector<std::uint8_t> zero_test;  // 1 = counter must be nonzero
  std::vector<long long> deltas;
  double reward = 0.0;
  int target = 0;
};

/// Counting reward automaton with zero-test-guarded transitions and constant
/// counter deltas. State ids follow the Machine convention: working states
/// first, finals after n_core. Validated instances are immutable.
struct Cra {
  std::string name;
  std::vector<std::string> props;
  std::vector<std::string> state_names;
  int n_core = 0;
  int initial = 0;
  int n_counters = 1;
  CounterMode mode = CounterMode::Saturating;
  std::vector<CraTransition> transitions;

  bool is_final(int u) const { return u >= n_core; }
  int n_states() const { return static_cast<int>(state_names.size()); }
  int n_props() const { return static_cast<int>(props.size()); }
  Label label_of(const std::vector<std::string>& names) const;
};

/// Checks determinism exhaustively over (state, sigma, zero-test vector).
Cra validate(Cra raw);

struct CraStepResult {
  int state = 0;
  std::vector<long long> counters;
  double reward = 0.0;
  bool terminal = false;
  int fired = -1;  // transition index, -1 on a lenient self-loop
};

/// Applies the unique applicable transition; lenient reward-0 self-loop when
/// none applies. Throws NegativeCounter in strict mode.
CraStepResult cra_step(const Cra& cra, int state, const std::vector<long long>& counters,
                       Label sigma);

struct CraRunResult {
  std::vector<double> rewards;
  int state = 0;
  std::vector<long long> counters;
  bool terminal = false;
};

CraRunResult run_cra_word(const Cra& cra, const std::vector<Label>& word);

/// Unary-stack translation of a 1-counter automaton to a pushdown reward
/// machine over the two-symbol stack alphabet {unit, bottom}. Decrements of
/// magnitude m route through m helper states on eps-transitions, the reward
/// riding on the last one. Throws MultiCounterUnsupported.
Machine translate_cra_to_pdrm(const Cra& cra);

struct EquivalenceReport {
  struct Entry {
    std::vector<Label> word;
    bool equal = false;
    std::vector<double> cra_trace;
    std::vector<double> pdrm_trace;
  };
  std::vector<Entry> mismatches;
  int n_words = 0;
  std::uint64_t seed = 0;  // 0 when words were supplied explicitly
  bool pass() const { return mismatches.empty(); }
};

/// Runs both machines on every word and compares reward traces exactly.
EquivalenceReport check_reward_equivalence(const Cra& cra, const Machine& pdrm,
                                           const std::vector<std::vector<Label>>& words);

/// Uniform random words over singleton labels plus the empty label.
std::vector<std::vector<Label>> random_words(int n_props, int n_words, int max_len,
                                             std::uint64_t seed);

/// Running maximum of the largest counter magnitude after each input symbol.
std::vector<long long> measure_counter_growth(const Cra& cra, const std::vector<Label>& word);

/// Base-4 path-encoding demonstrator: step i adds 4^i times the direction
/// digit. `unit_ops` counts the constant-delta transitions a counter machine
/// needs to realise each addition by repeatedly adding 4.
struct PathGrowth {
  std::vector<long long> encoding;    // value after each step
  std::vector<long long> running_max;
  std::vector<long long> unit_ops;    // cumulative
};
PathGrowth path_encoding_growth(const std::vector<int>& digits);

/// `.cra` text format.
Cra parse_cra(std::istream& in, const std::string& origin = "<stream>");
Cra load_cra(const std::string& path);
std::string serialize_cra(const Cra& cra);

}  // namespace pdrm
