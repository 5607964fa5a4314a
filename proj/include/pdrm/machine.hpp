#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pdrm/formula.hpp"

namespace pdrm {

/// Stack symbol index into Machine::stack_syms.
using SymId = std::int16_t;

constexpr SymId kEps = -1;       ///< no pop / empty push element
constexpr SymId kWildcard = -2;  ///< pop wildcard '*', pre-validation only

enum class Mode { Lenient, Strict };

/// One guarded transition. Before validation `pop` may be kWildcard and the
/// push string may contain kWildcard placeholders standing for the popped
/// symbol; validation expands both away.
struct Transition {
  int source = 0;
  bool eps_input = false;
  Guard guard;                 // meaningful when !eps_input
  SymId pop = kEps;
  std::vector<SymId> push;     // leftmost entry becomes the new top
  double reward = 0.0;
  int target = 0;
};

/// Runtime pair of machine state and stack, index 0 = top of stack.
struct Configuration {
  int state = 0;
  std::vector<SymId> stack;
  bool terminal = false;

  bool operator==(const Configuration& other) const {
    return state == other.state && stack == other.stack;
  }
};

/// Deterministic pushdown reward machine. State ids 0..n_core-1 are working
/// states, n_core.. are final states; `initial` is always a working state.
/// Instances produced by validate() are immutable and safe to share across
/// threads.
struct Machine {
  std::string name;
  std::vector<std::string> props;
  std::vector<std::string> state_names;  // working states first, then finals
  int n_core = 0;
  int initial = 0;
  std::vector<std::string> stack_syms;
  SymId bottom = 0;
  Mode mode = Mode::Lenient;
  int eps_cap = 10000;
  std::vector<Transition> transitions;

  bool is_final(int u) const { return u >= n_core; }
  int n_states() const { return static_cast<int>(state_names.size()); }
  int n_props() const { return static_cast<int>(props.size()); }
  int n_syms() const { return static_cast<int>(stack_syms.size()); }

  int prop_index(const std::string& p) const;
  SymId sym_index(const std::string& z) const;
  Label label_of(const std::vector<std::string>& names) const;
  std::string format_label(Label sigma) const;

  /// Max push length (m) over all transitions.
  int max_push_len() const;
  /// Longest chain of pushing eps-transitions in any eps-sequence (e).
  /// Throws Error{EpsilonDivergence} on a pushing eps-cycle.
  int max_pushing_eps_chain() const;
};

/// Validates a parsed machine: resolves identifiers, expands pop wildcards,
/// and checks determinism exhaustively over every (state, sigma, top) with
/// sigma ranging over all of 2^AP plus eps. Throws Error on violation.
Machine validate(Machine raw);

struct StepResult {
  Configuration config;
  double reward = 0.0;
  std::vector<int> fired;  // transition indices taken this step, in order
};

/// Closure of <u0, [Z]>; second element is the pending reward of any initial
/// eps-transitions, to be credited to the first environment step.
std::pair<Configuration, double> initial_configuration(const Machine& m);

/// Reads one input symbol: applies the unique applicable sigma-transition and
/// then the eps-closure. In lenient mode an undefined lookup is a reward-0
/// self-loop. Throws TerminalStep / StrictModeUndefined / EpsilonDivergence.
StepResult step(const Machine& m, const Configuration& c, Label sigma);

struct ClosureResult {
  Configuration config;
  double reward = 0.0;
  int n_steps = 0;
  std::vector<int> fired;
};

/// Applies eps-transitions until none is applicable or a final state is
/// reached; rewards are summed. Bounded by Machine::eps_cap.
ClosureResult epsilon_closure(const Machine& m, Configuration c);

struct RunResult {
  std::vector<double> rewards;  // one entry per consumed input symbol
  Configuration final;
};

/// Folds step() over the word from the initial configuration, stopping early
/// on termination. The pending initial reward is added to the first entry.
RunResult run_word(const Machine& m, const std::vector<Label>& word);

/// Machine state plus the top min(k, depth) stack symbols.
std::pair<int, std::vector<SymId>> top_k_view(const Configuration& c, int k);

/// `.pdrm` text format.
Machine parse_pdrm(std::istream& in, const std::string& origin = "<stream>");
Machine load_pdrm(const std::string& path);
std::string serialize_pdrm(const Machine& m);

}  // namespace pdrm
