#include "pdrm/machine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pdrm/errors.hpp"

namespace pdrm {

namespace {

constexpr int kMaxEnumProps = 16;  // exhaustive determinism check over 2^AP

std::string transition_text(const Machine& m, const Transition& t) {
  std::ostringstream os;
  os << "T " << m.state_names[t.source] << " | " << (t.eps_input ? "eps" : t.guard.text())
     << " | ";
  if (t.pop == kEps) {
    os << "eps";
  } else if (t.pop == kWildcard) {
    os << "*";
  } else {
    os << m.stack_syms[t.pop];
  }
  os << " | ";
  if (t.push.empty()) {
    os << "eps";
  } else {
    for (std::size_t i = 0; i < t.push.size(); ++i) {
      if (i) os << " ";
      os << (t.push[i] == kWildcard ? "*" : m.stack_syms[t.push[i]]);
    }
  }
  os << " | " << t.reward << " | " << m.state_names[t.target];
  return os.str();
}

bool pop_matches(SymId pop, const std::vector<SymId>& stack) {
  if (pop == kEps) return true;
  return !stack.empty() && stack.front() == pop;
}

void apply(const Machine& m, Configuration& c, const Transition& t) {
  if (t.pop != kEps) {
    c.stack.erase(c.stack.begin());
  }
  c.stack.insert(c.stack.begin(), t.push.begin(), t.push.end());
  c.state = t.target;
  c.terminal = m.is_final(t.target);
}

}  // namespace

int Machine::prop_index(const std::string& p) const {
  auto it = std::find(props.begin(), props.end(), p);
  if (it == props.end()) {
    throw Error(ErrorKind::UnknownIdentifier, "proposition '" + p + "' not declared");
  }
  return static_cast<int>(it - props.begin());
}

SymId Machine::sym_index(const std::string& z) const {
  auto it = std::find(stack_syms.begin(), stack_syms.end(), z);
  if (it == stack_syms.end()) {
    throw Error(ErrorKind::UnknownIdentifier, "stack symbol '" + z + "' not declared");
  }
  return static_cast<SymId>(it - stack_syms.begin());
}

Label Machine::label_of(const std::vector<std::string>& names) const {
  Label sigma = 0;
  for (const auto& p : names) sigma |= Label{1} << prop_index(p);
  return sigma;
}

std::string Machine::format_label(Label sigma) const {
  std::string out = "{";
  for (int i = 0; i < n_props(); ++i) {
    if (sigma >> i & 1u) {
      if (out.size() > 1) out += ",";
      out += props[i];
    }
  }
  return out + "}";
}

int Machine::max_push_len() const {
  std::size_t m = 0;
  for (const auto& t : transitions) m = std::max(m, t.push.size());
  return static_cast<int>(m);
}

int Machine::max_pushing_eps_chain() const {
  // Longest path over the eps-edge graph counting pushing edges, with cycle
  // rejection when a cycle contains a pushing edge.
  std::vector<std::vector<int>> out(n_states());
  for (int i = 0; i < static_cast<int>(transitions.size()); ++i) {
    if (transitions[i].eps_input) out[transitions[i].source].push_back(i);
  }
  std::vector<int> memo(n_states(), -1);
  std::vector<char> onstack(n_states(), 0);
  // Iterative DFS kept simple via recursion lambda; machines are small.
  auto visit = [&](auto&& self, int u) -> int {
    if (memo[u] >= 0) return memo[u];
    if (onstack[u]) {
      throw Error(ErrorKind::EpsilonDivergence, "eps-cycle through state " + state_names[u]);
    }
    onstack[u] = 1;
    int best = 0;
    for (int ti : out[u]) {
      const Transition& t = transitions[ti];
      int sub = self(self, t.target);
      best = std::max(best, sub + (t.push.empty() ? 0 : 1));
    }
    onstack[u] = 0;
    memo[u] = best;
    return best;
  };
  int best = 0;
  for (int u = 0; u < n_core; ++u) {
    try {
      best = std::max(best, visit(visit, u));
    } catch (const Error&) {
      // A cycle is only divergent if reachable with pushes; non-pushing
      // cycles still bound e: re-check whether the cycle pushes.
      bool pushes = false;
      for (const auto& t : transitions) {
        if (t.eps_input && !t.push.empty()) pushes = true;
      }
      if (pushes) throw;
      return 0;
    }
  }
  return best;
}

Machine validate(Machine raw) {
  Machine m = std::move(raw);
  if (m.props.empty()) {
    throw Error(ErrorKind::EmptyAlphabet, "machine '" + m.name + "' declares no propositions");
  }
  if (m.stack_syms.empty()) {
    throw Error(ErrorKind::EmptyAlphabet, "machine '" + m.name + "' declares no stack symbols");
  }
  if (m.n_props() > kMaxEnumProps) {
    throw Error(ErrorKind::BadConfig, "more than 16 propositions; exhaustive check infeasible");
  }
  if (m.n_core <= 0) {
    throw Error(ErrorKind::EmptyAlphabet, "machine '" + m.name + "' declares no states");
  }
  for (int i = 0; i < m.n_states(); ++i) {
    for (int j = i + 1; j < m.n_states(); ++j) {
      if (m.state_names[i] == m.state_names[j]) {
        throw Error(ErrorKind::FinalStateOverlap,
                    "state '" + m.state_names[i] + "' declared twice");
      }
    }
  }
  if (m.initial >= m.n_core) {
    throw Error(ErrorKind::UnknownIdentifier, "initial state must be a non-final state");
  }
  if (m.bottom < 0 || m.bottom >= m.n_syms()) {
    throw Error(ErrorKind::UnknownIdentifier, "bottom symbol not in stack alphabet");
  }

  // Expand pop wildcards; substitute the popped symbol for '*' placeholders.
  std::vector<Transition> expanded;
  for (const Transition& t : m.transitions) {
    if (t.source < 0 || t.source >= m.n_core) {
      throw Error(ErrorKind::UnknownIdentifier, "transition source is not a non-final state");
    }
    if (t.target < 0 || t.target >= m.n_states()) {
      throw Error(ErrorKind::UnknownIdentifier, "transition target not declared");
    }
    if (t.pop == kWildcard) {
      for (SymId z = 0; z < m.n_syms(); ++z) {
        Transition c = t;
        c.pop = z;
        for (SymId& s : c.push) {
          if (s == kWildcard) s = z;
        }
        expanded.push_back(std::move(c));
      }
    } else {
      for (SymId s : t.push) {
        if (s == kWildcard) {
          throw Error(ErrorKind::ParseError,
                      "push placeholder '*' requires a wildcard pop: " + transition_text(m, t));
        }
      }
      expanded.push_back(t);
    }
  }
  m.transitions = std::move(expanded);

  m.max_pushing_eps_chain();  // rejects pushing eps-cycles

  // Exhaustive determinism check over every concrete (u, sigma, z).
  const Label n_labels = Label{1} << m.n_props();
  std::vector<std::vector<int>> by_source(m.n_core);
  for (int i = 0; i < static_cast<int>(m.transitions.size()); ++i) {
    by_source[m.transitions[i].source].push_back(i);
  }
  for (int u = 0; u < m.n_core; ++u) {
    for (SymId z = 0; z < m.n_syms(); ++z) {
      std::vector<int> eps_here;
      std::vector<int> sigma_here;
      for (int ti : by_source[u]) {
        const Transition& t = m.transitions[ti];
        if (t.pop != kEps && t.pop != z) continue;
        (t.eps_input ? eps_here : sigma_here).push_back(ti);
      }
      if (eps_here.size() > 1) {
        throw Error(ErrorKind::NondeterministicPair,
                    "two eps-transitions applicable at (" + m.state_names[u] + ", eps, " +
                        m.stack_syms[z] + "):\n  " +
                        transition_text(m, m.transitions[eps_here[0]]) + "\n  " +
                        transition_text(m, m.transitions[eps_here[1]]));
      }
      for (Label sigma = 0; sigma < n_labels; ++sigma) {
        int first = -1;
        for (int ti : sigma_here) {
          if (!m.transitions[ti].guard.eval(sigma)) continue;
          if (!eps_here.empty()) {
            throw Error(ErrorKind::NondeterministicPair,
                        "eps- and input-transition both applicable at (" + m.state_names[u] +
                            ", " + m.format_label(sigma) + ", " + m.stack_syms[z] + "):\n  " +
                            transition_text(m, m.transitions[eps_here[0]]) + "\n  " +
                            transition_text(m, m.transitions[ti]));
          }
          if (first >= 0) {
            throw Error(ErrorKind::NondeterministicPair,
                        "two transitions applicable at (" + m.state_names[u] + ", " +
                            m.format_label(sigma) + ", " + m.stack_syms[z] + "):\n  " +
                            transition_text(m, m.transitions[first]) + "\n  " +
                            transition_text(m, m.transitions[ti]));
          }
          first = ti;
        }
      }
    }
  }
  return m;
}

ClosureResult epsilon_closure(const Machine& m, Configuration c) {
  ClosureResult res;
  while (!c.terminal) {
    const Transition* hit = nullptr;
    int hit_idx = -1;
    for (int i = 0; i < static_cast<int>(m.transitions.size()); ++i) {
      const Transition& t = m.transitions[i];
      if (t.source != c.state || !t.eps_input) continue;
      if (!pop_matches(t.pop, c.stack)) continue;
      hit = &t;
      hit_idx = i;
      break;
    }
    if (!hit) break;
    if (res.n_steps >= m.eps_cap) {
      throw Error(ErrorKind::EpsilonDivergence,
                  "eps-closure exceeded cap of " + std::to_string(m.eps_cap));
    }
    apply(m, c, *hit);
    res.reward += hit->reward;
    res.fired.push_back(hit_idx);
    ++res.n_steps;
  }
  res.config = std::move(c);
  return res;
}

std::pair<Configuration, double> initial_configuration(const Machine& m) {
  Configuration c;
  c.state = m.initial;
  c.stack = {m.bottom};
  c.terminal = false;
  ClosureResult closed = epsilon_closure(m, std::move(c));
  return {std::move(closed.config), closed.reward};
}

StepResult step(const Machine& m, const Configuration& c, Label sigma) {
  if (c.terminal) {
    throw Error(ErrorKind::TerminalStep, "step on terminal configuration");
  }
  const Transition* hit = nullptr;
  int hit_idx = -1;
  for (int i = 0; i < static_cast<int>(m.transitions.size()); ++i) {
    const Transition& t = m.transitions[i];
    if (t.source != c.state || t.eps_input) continue;
    if (!pop_matches(t.pop, c.stack)) continue;
    if (!t.guard.eval(sigma)) continue;
    hit = &t;
    hit_idx = i;
    break;  // unique by validation
  }
  StepResult res;
  if (!hit) {
    if (m.mode == Mode::Strict) {
      throw Error(ErrorKind::StrictModeUndefined,
                  "no transition at (" + m.state_names[c.state] + ", " + m.format_label(sigma) +
                      ", " + (c.stack.empty() ? "<empty>" : m.stack_syms[c.stack.front()]) + ")");
    }
    res.config = c;  // implicit self-loop
    return res;
  }
  Configuration next = c;
  apply(m, next, *hit);
  res.reward = hit->reward;
  res.fired.push_back(hit_idx);
  ClosureResult closed = epsilon_closure(m, std::move(next));
  res.reward += closed.reward;
  res.fired.insert(res.fired.end(), closed.fired.begin(), closed.fired.end());
  res.config = std::move(closed.config);
  return res;
}

RunResult run_word(const Machine& m, const std::vector<Label>& word) {
  auto [config, pending] = initial_configuration(m);
  RunResult res;
  res.final = std::move(config);
  for (Label sigma : word) {
    if (res.final.terminal) break;
    StepResult s = step(m, res.final, sigma);
    double r = s.reward + (res.rewards.empty() ? pending : 0.0);
    res.rewards.push_back(r);
    res.final = std::move(s.config);
  }
  return res;
}

std::pair<int, std::vector<SymId>> top_k_view(const Configuration& c, int k) {
  int n = std::min<int>(k, static_cast<int>(c.stack.size()));
  return {c.state, std::vector<SymId>(c.stack.begin(), c.stack.begin() + n)};
}

// ---------------------------------------------------------------------------
// .pdrm format

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_pipes(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == '|') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

Machine parse_pdrm(std::istream& in, const std::string& origin) {
  Machine m;
  std::vector<std::string> core_states;
  std::vector<std::string> final_states;
  std::string initial_name;
  std::string bottom_name;
  struct RawT {
    std::string src, guard, pop, push, reward, dst;
    int line;
  };
  std::vector<RawT> raw;

  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("pdrm ", 0) == 0) {
      m.name = trim(t.substr(5));
    } else if (t.rfind("props:", 0) == 0) {
      m.props = split_ws(t.substr(6));
    } else if (t.rfind("states:", 0) == 0) {
      core_states = split_ws(t.substr(7));
    } else if (t.rfind("initial:", 0) == 0) {
      initial_name = trim(t.substr(8));
    } else if (t.rfind("final:", 0) == 0) {
      final_states = split_ws(t.substr(6));
    } else if (t.rfind("stack:", 0) == 0) {
      m.stack_syms = split_ws(t.substr(6));
    } else if (t.rfind("bottom:", 0) == 0) {
      bottom_name = trim(t.substr(7));
    } else if (t.rfind("mode:", 0) == 0) {
      std::string mode = trim(t.substr(5));
      if (mode == "lenient") {
        m.mode = Mode::Lenient;
      } else if (mode == "strict") {
        m.mode = Mode::Strict;
      } else {
        fail("unknown mode '" + mode + "'");
      }
    } else if (t.rfind("epscap:", 0) == 0) {
      m.eps_cap = std::stoi(trim(t.substr(7)));
    } else if (t.rfind("T ", 0) == 0) {
      auto parts = split_pipes(t.substr(2));
      if (parts.size() != 6) fail("transition needs 6 '|'-separated fields");
      raw.push_back({parts[0], parts[1], parts[2], parts[3], parts[4], parts[5], lineno});
    } else {
      fail("unrecognized line: " + t);
    }
  }

  for (const auto& f : final_states) {
    if (std::find(core_states.begin(), core_states.end(), f) != core_states.end()) {
      throw Error(ErrorKind::FinalStateOverlap,
                  origin + ": state '" + f + "' is both working and final");
    }
  }
  m.state_names = core_states;
  m.state_names.insert(m.state_names.end(), final_states.begin(), final_states.end());
  m.n_core = static_cast<int>(core_states.size());

  auto state_id = [&](const std::string& name, int ln) -> int {
    auto it = std::find(m.state_names.begin(), m.state_names.end(), name);
    if (it == m.state_names.end()) {
      throw Error(ErrorKind::UnknownIdentifier,
                  origin + ":" + std::to_string(ln) + ": state '" + name + "' not declared");
    }
    return static_cast<int>(it - m.state_names.begin());
  };
  if (m.n_core == 0) throw Error(ErrorKind::EmptyAlphabet, origin + ": no states declared");
  m.initial = state_id(initial_name, 0);
  if (!bottom_name.empty()) m.bottom = m.sym_index(bottom_name);

  for (const RawT& r : raw) {
    Transition t;
    t.source = state_id(r.src, r.line);
    t.target = state_id(r.dst, r.line);
    if (r.guard == "eps") {
      t.eps_input = true;
    } else {
      t.guard = Guard::parse(r.guard, m.props);
    }
    if (r.pop == "eps") {
      t.pop = kEps;
    } else if (r.pop == "*") {
      t.pop = kWildcard;
    } else {
      t.pop = m.sym_index(r.pop);
    }
    if (r.push != "eps") {
      for (const auto& w : split_ws(r.push)) {
        t.push.push_back(w == "*" ? kWildcard : m.sym_index(w));
      }
    }
    try {
      t.reward = std::stod(r.reward);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError,
                  origin + ":" + std::to_string(r.line) + ": bad reward '" + r.reward + "'");
    }
    m.transitions.push_back(std::move(t));
  }
  return m;
}

Machine load_pdrm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::AssetError, "cannot open " + path);
  return parse_pdrm(in, path);
}

std::string serialize_pdrm(const Machine& m) {
  std::ostringstream os;
  os << "pdrm " << m.name << "\n";
  os << "props:";
  for (const auto& p : m.props) os << " " << p;
  os << "\nstates:";
  for (int i = 0; i < m.n_core; ++i) os << " " << m.state_names[i];
  os << "\ninitial: " << m.state_names[m.initial];
  os << "\nfinal:";
  for (int i = m.n_core; i < m.n_states(); ++i) os << " " << m.state_names[i];
  os << "\nstack:";
  for (const auto& z : m.stack_syms) os << " " << z;
  os << "\nbottom: " << m.stack_syms[m.bottom];
  os << "\nmode: " << (m.mode == Mode::Lenient ? "lenient" : "strict") << "\n";
  if (m.eps_cap != 10000) os << "epscap: " << m.eps_cap << "\n";
  for (const Transition& t : m.transitions) {
    os << transition_text(m, t) << "\n";
  }
  return os.str();
}

}  // namespace pdrm
