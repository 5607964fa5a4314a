#include "pdrm/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "pdrm/errors.hpp"

namespace pdrm {

const char* const kDirNames[4] = {"u", "d", "l", "r"};
const int kDr[4] = {-1, 1, 0, 0};
const int kDc[4] = {0, 0, -1, 1};

int opposite_dir(int d) { return d ^ 1; }

Label TabularMDP::label_of(const std::vector<std::string>& names) const {
  Label sigma = 0;
  for (const auto& p : names) {
    auto it = std::find(props.begin(), props.end(), p);
    if (it == props.end()) {
      throw Error(ErrorKind::UnknownIdentifier, "proposition '" + p + "' not declared");
    }
    sigma |= Label{1} << (it - props.begin());
  }
  return sigma;
}

std::string TabularMDP::format_label(Label sigma) const {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (!((sigma >> i) & 1u)) continue;
    if (!first) out += ",";
    out += props[i];
    first = false;
  }
  return out + "}";
}

void TabularMDP::check() const {
  if (state_names.empty() || action_names.empty()) {
    throw Error(ErrorKind::BadConfig, name + ": empty state or action set");
  }
  if (static_cast<int>(table.size()) != n_states()) {
    throw Error(ErrorKind::BadConfig, name + ": table has wrong state count");
  }
  for (int s = 0; s < n_states(); ++s) {
    if (static_cast<int>(table[s].size()) != n_actions()) {
      throw Error(ErrorKind::BadConfig, name + ": table row has wrong action count");
    }
    for (int a = 0; a < n_actions(); ++a) {
      double sum = 0.0;
      for (const Outcome& o : table[s][a]) {
        if (o.next < 0 || o.next >= n_states()) {
          throw Error(ErrorKind::BadConfig, name + ": outcome state out of range");
        }
        sum += o.prob;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::BadConfig, name + ": transition row does not sum to 1 at state " +
                                              state_names[s] + ", action " + action_names[a]);
      }
    }
  }
  double isum = 0.0;
  for (const InitialEntry& e : initial) isum += e.prob;
  if (std::abs(isum - 1.0) > 1e-9) {
    throw Error(ErrorKind::BadConfig, name + ": initial distribution does not sum to 1");
  }
}

// ---------------------------------------------------------------------------
// Maps

std::vector<std::pair<int, int>> GridMap::cells_with(char ch) const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (rows[r][c] == ch) out.push_back({r, c});
    }
  }
  return out;
}

std::pair<int, int> GridMap::unique_cell(char ch) const {
  auto cells = cells_with(ch);
  if (cells.size() != 1) {
    throw Error(ErrorKind::BadConfig, "map needs exactly one '" + std::string(1, ch) + "' cell, has " +
                                          std::to_string(cells.size()));
  }
  return cells[0];
}

GridMap parse_map(std::istream& in, const std::string& origin) {
  GridMap m;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    m.rows.push_back(line);
  }
  if (m.rows.empty()) throw Error(ErrorKind::ParseError, origin + ": empty map");
  m.height = static_cast<int>(m.rows.size());
  m.width = static_cast<int>(m.rows[0].size());
  for (const auto& r : m.rows) {
    if (static_cast<int>(r.size()) != m.width) {
      throw Error(ErrorKind::ParseError, origin + ": ragged map rows");
    }
    for (char ch : r) {
      if (ch != '#' && ch != '.' && ch != 'S' && ch != 'T' && ch != 'X' && ch != 'H' &&
          ch != 'A' && ch != 'B' && ch != 'C' && !(ch >= '0' && ch <= '9')) {
        throw Error(ErrorKind::ParseError, origin + ": bad map character '" + std::string(1, ch) + "'");
      }
    }
  }
  return m;
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::AssetError, "cannot open " + path);
  return parse_map(in, path);
}

namespace {

/// Cells reachable from `from` by 4-direction moves through non-walls.
std::vector<std::vector<bool>> reachable_from(const GridMap& map, std::pair<int, int> from) {
  std::vector<std::vector<bool>> seen(map.height, std::vector<bool>(map.width, false));
  std::deque<std::pair<int, int>> queue{from};
  seen[from.first][from.second] = true;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      int nr = r + kDr[d], nc = c + kDc[d];
      if (!map.wall(nr, nc) && !seen[nr][nc]) {
        seen[nr][nc] = true;
        queue.push_back({nr, nc});
      }
    }
  }
  return seen;
}

void require_reachable(const GridMap& map, std::pair<int, int> from,
                       const std::vector<std::pair<int, int>>& targets) {
  auto seen = reachable_from(map, from);
  for (auto [r, c] : targets) {
    if (!seen[r][c]) {
      throw Error(ErrorKind::BadConfig, "map cell (" + std::to_string(r) + "," +
                                            std::to_string(c) + ") unreachable from start");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LetterEnv

TabularMDP build_letterenv(const LetterEnvConfig& cfg) {
  if (cfg.height < 2 || cfg.width < 2 || cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0) {
    throw Error(ErrorKind::BadConfig, "letterenv: bad geometry or flip probability");
  }
  for (auto cell : {cfg.start, cfg.a_cell, cfg.c_cell, cfg.exit_cell}) {
    if (cell.first < 0 || cell.first >= cfg.height || cell.second < 0 || cell.second >= cfg.width) {
      throw Error(ErrorKind::BadConfig, "letterenv: cell out of bounds");
    }
  }
  TabularMDP m;
  m.name = "letterenv";
  m.props = {"P_A", "P_B", "P_C", "tau"};
  m.action_names = {kDirNames[0], kDirNames[1], kDirNames[2], kDirNames[3]};
  m.horizon = cfg.horizon;
  auto cell_id = [&](int r, int c) { return r * cfg.width + c; };
  auto state_id = [&](int r, int c, int flag) { return cell_id(r, c) * 2 + flag; };
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < cfg.width; ++c) {
      for (int flag = 0; flag < 2; ++flag) {
        m.state_names.push_back("(" + std::to_string(r) + "," + std::to_string(c) + ")" +
                                (flag ? "+B" : ""));
      }
    }
  }
  Label pa = m.label_of({"P_A"}), pb = m.label_of({"P_B"});
  Label pc = m.label_of({"P_C"}), tau = m.label_of({"tau"});
  m.table.assign(m.n_states(), {});
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < cfg.width; ++c) {
      for (int flag = 0; flag < 2; ++flag) {
        auto& row = m.table[state_id(r, c, flag)];
        row.resize(4);
        for (int a = 0; a < 4; ++a) {
          int nr = r + kDr[a], nc = c + kDc[a];
          if (nr < 0 || nr >= cfg.height || nc < 0 || nc >= cfg.width) {
            nr = r;
            nc = c;
          }
          std::pair<int, int> dest{nr, nc};
          Label label = 0;
          if (dest == cfg.a_cell) {
            label = flag ? pb : pa;
          } else if (dest == cfg.c_cell) {
            label = pc;
          } else if (dest == cfg.exit_cell) {
            label = tau;
          }
          if (dest == cfg.a_cell && !flag && cfg.flip_prob > 0.0) {
            if (cfg.flip_prob < 1.0) {
              row[a].push_back({state_id(nr, nc, 0), 1.0 - cfg.flip_prob, label, 0.0});
            }
            row[a].push_back({state_id(nr, nc, 1), cfg.flip_prob, label, 0.0});
          } else {
            row[a].push_back({state_id(nr, nc, flag), 1.0, label, 0.0});
          }
        }
      }
    }
  }
  m.initial = {{state_id(cfg.start.first, cfg.start.second, 0), 0, 1.0}};
  m.check();
  return m;
}

// ---------------------------------------------------------------------------
// Treasure mazes

TabularMDP build_treasure_maze(const GridMap& map, bool multi, int horizon) {
  auto start = map.unique_cell('S');
  auto treasures = map.cells_with('T');
  int nt = static_cast<int>(treasures.size());
  if (nt == 0) throw Error(ErrorKind::BadConfig, "maze map has no treasure");
  if (!multi && nt != 1) throw Error(ErrorKind::BadConfig, "1-treasure maze needs exactly one T");
  if (multi && nt > 8) throw Error(ErrorKind::BadConfig, "too many treasures");
  std::pair<int, int> safe{-1, -1};
  if (multi) safe = map.unique_cell('H');
  std::vector<std::pair<int, int>> targets = treasures;
  if (multi) targets.push_back(safe);
  require_reachable(map, start, targets);

  TabularMDP m;
  m.name = multi ? "multitreasuremaze" : "treasuremaze";
  m.props = {"u", "d", "l", "r", "t", "x"};
  if (multi) {
    m.props.push_back("h");
    m.props.push_back("g");
  }
  m.action_names = {kDirNames[0], kDirNames[1], kDirNames[2], kDirNames[3]};
  m.horizon = horizon;

  std::vector<std::pair<int, int>> floor;
  std::vector<std::vector<int>> cell_index(map.height, std::vector<int>(map.width, -1));
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      if (map.rows[r][c] != '#') {
        cell_index[r][c] = static_cast<int>(floor.size());
        floor.push_back({r, c});
      }
    }
  }
  auto treasure_bit = [&](int r, int c) -> int {
    for (int i = 0; i < nt; ++i) {
      if (treasures[i] == std::make_pair(r, c)) return i;
    }
    return -1;
  };
  const int n_masks = 1 << nt;
  auto state_id = [&](int cell, int mask) { return cell * n_masks + mask; };
  for (const auto& [r, c] : floor) {
    for (int mask = 0; mask < n_masks; ++mask) {
      m.state_names.push_back("(" + std::to_string(r) + "," + std::to_string(c) + ")/" +
                              std::to_string(mask));
    }
  }
  Label dir_bits[4];
  for (int d = 0; d < 4; ++d) dir_bits[d] = m.label_of({kDirNames[d]});
  Label t_bit = m.label_of({"t"}), x_bit = m.label_of({"x"});
  Label h_bit = multi ? m.label_of({"h"}) : 0;
  Label g_bit = multi ? m.label_of({"g"}) : 0;

  m.table.assign(m.n_states(), {});
  for (std::size_t ci = 0; ci < floor.size(); ++ci) {
    auto [r, c] = floor[ci];
    for (int mask = 0; mask < n_masks; ++mask) {
      auto& row = m.table[state_id(static_cast<int>(ci), mask)];
      row.resize(4);
      for (int a = 0; a < 4; ++a) {
        int nr = r + kDr[a], nc = c + kDc[a];
        bool moved = !map.wall(nr, nc);
        if (!moved) {
          nr = r;
          nc = c;
        }
        Label label = dir_bits[a];
        int nmask = mask;
        if (moved) {
          int tb = treasure_bit(nr, nc);
          if (tb >= 0 && !((mask >> tb) & 1)) {
            nmask = mask | (1 << tb);
            label |= t_bit;
            if (multi && nmask == n_masks - 1) label |= g_bit;
          }
          if (std::make_pair(nr, nc) == start) label |= x_bit;
          if (multi && std::make_pair(nr, nc) == safe) label |= h_bit;
        }
        row[a].push_back({state_id(cell_index[nr][nc], nmask), 1.0, label, 0.0});
      }
    }
  }
  m.initial = {{state_id(cell_index[start.first][start.second], 0), 0, 1.0}};
  m.check();
  return m;
}

// ---------------------------------------------------------------------------
// DeliverWorld

TabularMDP build_deliverworld(const GridMap& map, const DeliverWorldConfig& cfg) {
  if (cfg.sequences.empty()) throw Error(ErrorKind::BadConfig, "deliverworld: no sequences");
  auto start = map.unique_cell('S');
  std::vector<char> types;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      char ch = map.rows[r][c];
      if (ch >= '0' && ch <= '9' && std::find(types.begin(), types.end(), ch) == types.end()) {
        types.push_back(ch);
      }
    }
  }
  std::sort(types.begin(), types.end());
  if (types.empty()) throw Error(ErrorKind::BadConfig, "deliverworld: map has no typed locations");
  for (const auto& seq : cfg.sequences) {
    for (char ch : seq) {
      if (std::find(types.begin(), types.end(), ch) == types.end()) {
        throw Error(ErrorKind::BadConfig,
                    std::string("deliverworld: sequence uses unknown type '") + ch + "'");
      }
    }
  }
  std::vector<std::pair<int, int>> typed;
  for (char ch : types) {
    auto cells = map.cells_with(ch);
    typed.insert(typed.end(), cells.begin(), cells.end());
  }
  require_reachable(map, start, typed);

  TabularMDP m;
  m.name = "deliverworld";
  for (std::size_t j = 0; j < cfg.sequences.size(); ++j) {
    std::string prop = "seq" + cfg.sequences[j];
    if (std::find(m.props.begin(), m.props.end(), prop) != m.props.end()) {
      throw Error(ErrorKind::BadConfig, "deliverworld: duplicate sequence " + cfg.sequences[j]);
    }
    m.props.push_back(prop);
  }
  for (char ch : types) m.props.push_back(std::string("t") + ch);
  m.action_names = {kDirNames[0], kDirNames[1], kDirNames[2], kDirNames[3]};
  m.horizon = cfg.horizon;

  std::vector<std::pair<int, int>> floor;
  std::vector<std::vector<int>> cell_index(map.height, std::vector<int>(map.width, -1));
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      if (map.rows[r][c] != '#') {
        cell_index[r][c] = static_cast<int>(floor.size());
        floor.push_back({r, c});
        m.state_names.push_back("(" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
    }
  }
  m.table.assign(m.n_states(), {});
  for (std::size_t ci = 0; ci < floor.size(); ++ci) {
    auto [r, c] = floor[ci];
    auto& row = m.table[ci];
    row.resize(4);
    for (int a = 0; a < 4; ++a) {
      int nr = r + kDr[a], nc = c + kDc[a];
      bool moved = !map.wall(nr, nc);
      if (!moved) {
        nr = r;
        nc = c;
      }
      Label label = 0;
      char dest = map.rows[nr][nc];
      if (moved && dest >= '0' && dest <= '9') {
        label = m.label_of({std::string("t") + dest});
      }
      row[a].push_back({cell_index[nr][nc], 1.0, label, 0.0});
    }
  }
  int s0 = cell_index[start.first][start.second];
  double p = 1.0 / static_cast<double>(cfg.sequences.size());
  for (const auto& seq : cfg.sequences) {
    m.initial.push_back({s0, m.label_of({"seq" + seq}), p});
  }
  m.check();
  return m;
}

// ---------------------------------------------------------------------------
// PaintWorld

TabularMDP build_paintworld() {
  TabularMDP m;
  m.name = "paintworld";
  for (int n = 1; n <= 5; ++n) m.props.push_back("paint" + std::to_string(n));
  for (int i = 1; i <= 5; ++i) m.props.push_back("soap" + std::to_string(i));
  for (int i = 1; i <= 5; ++i) m.action_names.push_back("req" + std::to_string(i));
  m.state_names = {"shop"};
  m.horizon = 5;
  m.table.assign(1, {});
  m.table[0].resize(5);
  for (int i = 1; i <= 5; ++i) {
    double cost = -static_cast<double>(i) / (i + 1);
    m.table[0][i - 1].push_back({0, 1.0, m.label_of({"soap" + std::to_string(i)}), cost});
  }
  for (int n = 1; n <= 5; ++n) {
    m.initial.push_back({0, m.label_of({"paint" + std::to_string(n)}), 0.2});
  }
  m.check();
  return m;
}

}  // namespace pdrm
