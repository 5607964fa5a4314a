#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pdrm/formula.hpp"

namespace pdrm {

struct Outcome {
  int next = 0;
  double prob = 0.0;
  Label label = 0;
  double env_reward = 0.0;
};

struct InitialEntry {
  int state = 0;
  Label label = 0;  // announced at episode start, before any action
  double prob = 0.0;
};

/// Finite labelled MDP with an explicit transition table. Immutable after
/// construction; rollouts own their random streams and may share one model
/// across threads.
struct TabularMDP {
  std::string name;
  std::vector<std::string> props;
  std::vector<std::string> action_names;
  std::vector<std::string> state_names;
  int horizon = 100;
  double reward_normalizer = 1.0;
  std::vector<std::vector<std::vector<Outcome>>> table;  // [state][action]
  std::vector<InitialEntry> initial;

  int n_states() const { return static_cast<int>(state_names.size()); }
  int n_actions() const { return static_cast<int>(action_names.size()); }
  const std::vector<Outcome>& outcomes(int s, int a) const { return table[s][a]; }

  Label label_of(const std::vector<std::string>& names) const;
  std::string format_label(Label sigma) const;

  /// Row normalization and index bounds; throws Error{BadConfig}.
  void check() const;
};

/// ASCII grid: '#' wall, '.' floor, plus named cells (S start, T treasure,
/// X exit, H safe, A/B/C letters, digits for delivery location types).
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<std::string> rows;

  char at(int r, int c) const { return rows[r][c]; }
  bool wall(int r, int c) const {
    return r < 0 || r >= height || c < 0 || c >= width || rows[r][c] == '#';
  }
  std::vector<std::pair<int, int>> cells_with(char ch) const;
  std::pair<int, int> unique_cell(char ch) const;  // throws BadConfig
};

GridMap parse_map(std::istream& in, const std::string& origin = "<stream>");
GridMap load_map(const std::string& path);

/// Direction order is u, d, l, r (base-4 digits 0..3).
extern const char* const kDirNames[4];
int opposite_dir(int d);

struct LetterEnvConfig {
  int height = 5;
  int width = 5;
  std::pair<int, int> start{0, 0};
  std::pair<int, int> a_cell{0, 4};
  std::pair<int, int> c_cell{4, 0};
  std::pair<int, int> exit_cell{4, 4};
  int horizon = 150;
  double flip_prob = 0.5;
};

/// State is (position, B-flag). Landing on the A-cell, bumps included, emits
/// P_A while unflagged and flips the flag with probability flip_prob from the
/// next step onwards; P_B thereafter. The C and exit cells emit P_C and tau.
TabularMDP build_letterenv(const LetterEnvConfig& cfg);

/// Deterministic 4-direction maze. The start cell doubles as the exit; the
/// direction taken is always in the label, t / x / h / g only on arrivals
/// with s != s'. In multi mode the map needs an H cell and g is emitted
/// together with the last treasure's t.
TabularMDP build_treasure_maze(const GridMap& map, bool multi, int horizon);

struct DeliverWorldConfig {
  std::vector<std::string> sequences;  // digit strings, first delivery first
  int horizon = 400;
};

/// Episode start announces seq<digits> for a uniformly drawn sequence;
/// arriving (s != s') on a digit cell emits t<digit>. Task progress lives in
/// the companion machine, so different sequence sets can share one machine.
TabularMDP build_deliverworld(const GridMap& map, const DeliverWorldConfig& cfg);

/// Single-state environment: start announces paint<n>, n uniform in 1..5;
/// action req<i> emits soap<i> at cost -i/(i+1) on the environment channel.
TabularMDP build_paintworld();

}  // namespace pdrm
