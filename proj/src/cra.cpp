#include "pdrm/cra.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pdrm/errors.hpp"

namespace pdrm {

namespace {

constexpr int kMaxEnumProps = 16;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string cra_transition_text(const Cra& c, const CraTransition& t) {
  std::ostringstream os;
  os << "T " << c.state_names[t.source] << " | " << t.guard.text() << " | ";
  for (auto zt : t.zero_test) os << int(zt);
  os << " | ";
  for (std::size_t i = 0; i < t.deltas.size(); ++i) {
    if (i) os << ",";
    if (t.deltas[i] >= 0) os << "+";
    os << t.deltas[i];
  }
  os << " | " << t.reward << " | " << c.state_names[t.target];
  return os.str();
}

}  // namespace

Label Cra::label_of(const std::vector<std::string>& names) const {
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

Cra validate(Cra raw) {
  Cra c = std::move(raw);
  if (c.props.empty()) throw Error(ErrorKind::EmptyAlphabet, "CRA declares no propositions");
  if (c.n_props() > kMaxEnumProps) {
    throw Error(ErrorKind::BadConfig, "more than 16 propositions; exhaustive check infeasible");
  }
  if (c.n_core <= 0) throw Error(ErrorKind::EmptyAlphabet, "CRA declares no states");
  if (c.n_counters < 1) throw Error(ErrorKind::BadConfig, "CRA needs at least one counter");
  for (const CraTransition& t : c.transitions) {
    if (t.source < 0 || t.source >= c.n_core) {
      throw Error(ErrorKind::UnknownIdentifier, "CRA transition source not a working state");
    }
    if (t.target < 0 || t.target >= c.n_states()) {
      throw Error(ErrorKind::UnknownIdentifier, "CRA transition target not declared");
    }
    if (static_cast<int>(t.zero_test.size()) != c.n_counters ||
        static_cast<int>(t.deltas.size()) != c.n_counters) {
      throw Error(ErrorKind::BadConfig, "zero-test/delta arity mismatch: " +
                                            cra_transition_text(c, t));
    }
  }
  // Determinism over (state, sigma, zero-test vector).
  const Label n_labels = Label{1} << c.n_props();
  const unsigned n_zt = 1u << c.n_counters;
  for (int u = 0; u < c.n_core; ++u) {
    for (unsigned zt = 0; zt < n_zt; ++zt) {
      std::vector<int> here;
      for (int i = 0; i < static_cast<int>(c.transitions.size()); ++i) {
        const CraTransition& t = c.transitions[i];
        if (t.source != u) continue;
        bool match = true;
        for (int k = 0; k < c.n_counters; ++k) {
          if (t.zero_test[k] != ((zt >> k) & 1u)) match = false;
        }
        if (match) here.push_back(i);
      }
      for (Label sigma = 0; sigma < n_labels; ++sigma) {
        int first = -1;
        for (int ti : here) {
          if (!c.transitions[ti].guard.eval(sigma)) continue;
          if (first >= 0) {
            throw Error(ErrorKind::Nondeterministic,
                        "two CRA transitions applicable at state " + c.state_names[u] + ":\n  " +
                            cra_transition_text(c, c.transitions[first]) + "\n  " +
                            cra_transition_text(c, c.transitions[ti]));
          }
          first = ti;
        }
      }
    }
  }
  return c;
}

CraStepResult cra_step(const Cra& cra, int state, const std::vector<long long>& counters,
                       Label sigma) {
  CraStepResult res;
  res.state = state;
  res.counters = counters;
  if (cra.is_final(state)) {
    res.terminal = true;
    return res;
  }
  for (int i = 0; i < static_cast<int>(cra.transitions.size()); ++i) {
    const CraTransition& t = cra.transitions[i];
    if (t.source != state) continue;
    bool match = true;
    for (int k = 0; k < cra.n_counters; ++k) {
      if (bool(t.zero_test[k]) != (counters[k] != 0)) match = false;
    }
    if (!match || !t.guard.eval(sigma)) continue;
    res.state = t.target;
    res.reward = t.reward;
    res.fired = i;
    for (int k = 0; k < cra.n_counters; ++k) {
      long long v = counters[k] + t.deltas[k];
      if (v < 0) {
        if (cra.mode == CounterMode::Strict) {
          throw Error(ErrorKind::NegativeCounter,
                      "counter " + std::to_string(k) + " would become negative on " +
                          cra_transition_text(cra, t));
        }
        v = 0;
      }
      res.counters[k] = v;
    }
    res.terminal = cra.is_final(t.target);
    return res;
  }
  return res;  // lenient self-loop
}

CraRunResult run_cra_word(const Cra& cra, const std::vector<Label>& word) {
  CraRunResult res;
  res.state = cra.initial;
  res.counters.assign(cra.n_counters, 0);
  for (Label sigma : word) {
    if (res.terminal) break;
    CraStepResult s = cra_step(cra, res.state, res.counters, sigma);
    res.rewards.push_back(s.reward);
    res.state = s.state;
    res.counters = std::move(s.counters);
    res.terminal = s.terminal;
  }
  return res;
}

Machine translate_cra_to_pdrm(const Cra& cra) {
  if (cra.n_counters != 1) {
    throw Error(ErrorKind::MultiCounterUnsupported,
                "translation is defined for 1-counter automata only");
  }
  Machine m;
  m.name = cra.name + "_pdrm";
  m.props = cra.props;
  m.stack_syms = {"o", "#"};
  const SymId unit = 0;
  const SymId bot = 1;
  m.bottom = bot;
  m.mode = Mode::Lenient;

  std::vector<std::string> core(cra.state_names.begin(), cra.state_names.begin() + cra.n_core);
  std::vector<std::string> finals(cra.state_names.begin() + cra.n_core, cra.state_names.end());

  struct Helper {
    int cra_transition;
    int count;
    int first_id;  // filled after core list is complete
  };
  std::vector<Helper> helpers;
  for (int i = 0; i < static_cast<int>(cra.transitions.size()); ++i) {
    long long d = cra.transitions[i].deltas[0];
    if (d < 0) helpers.push_back({i, static_cast<int>(-d), 0});
  }
  for (Helper& h : helpers) {
    h.first_id = static_cast<int>(core.size());
    for (int j = 1; j <= h.count; ++j) {
      core.push_back("h" + std::to_string(h.cra_transition) + "_" + std::to_string(j));
    }
  }
  m.state_names = core;
  m.state_names.insert(m.state_names.end(), finals.begin(), finals.end());
  m.n_core = static_cast<int>(core.size());
  m.initial = cra.initial;

  auto target_id = [&](int cra_state) {
    return cra_state < cra.n_core ? cra_state : m.n_core + (cra_state - cra.n_core);
  };

  auto helper_for = [&](int ti) -> const Helper& {
    for (const Helper& h : helpers) {
      if (h.cra_transition == ti) return h;
    }
    throw Error(ErrorKind::BadConfig, "internal: helper chain missing");
  };

  for (int i = 0; i < static_cast<int>(cra.transitions.size()); ++i) {
    const CraTransition& ct = cra.transitions[i];
    const SymId gamma = ct.zero_test[0] ? unit : bot;
    const long long d = ct.deltas[0];
    if (d >= 0) {
      Transition t;
      t.source = ct.source;
      t.guard = ct.guard;
      t.pop = gamma;
      t.push.assign(static_cast<std::size_t>(d), unit);
      t.push.push_back(gamma);
      t.reward = ct.reward;
      t.target = target_id(ct.target);
      m.transitions.push_back(std::move(t));
    } else {
      const Helper& h = helper_for(i);
      Transition enter;
      enter.source = ct.source;
      enter.guard = ct.guard;
      enter.pop = gamma;
      enter.push = {gamma};
      enter.reward = 0.0;
      enter.target = h.first_id;
      m.transitions.push_back(std::move(enter));
      for (int j = 0; j < h.count; ++j) {
        int src = h.first_id + j;
        int dst = j + 1 < h.count ? h.first_id + j + 1 : target_id(ct.target);
        double r = j + 1 == h.count ? ct.reward : 0.0;
        Transition pop_unit;
        pop_unit.source = src;
        pop_unit.eps_input = true;
        pop_unit.pop = unit;
        pop_unit.reward = r;
        pop_unit.target = dst;
        Transition keep_bot;
        keep_bot.source = src;
        keep_bot.eps_input = true;
        keep_bot.pop = bot;
        keep_bot.push = {bot};
        keep_bot.reward = r;
        keep_bot.target = dst;
        m.transitions.push_back(std::move(pop_unit));
        m.transitions.push_back(std::move(keep_bot));
      }
    }
  }
  return validate(std::move(m));
}

EquivalenceReport check_reward_equivalence(const Cra& cra, const Machine& pdrm,
                                           const std::vector<std::vector<Label>>& words) {
  EquivalenceReport rep;
  rep.n_words = static_cast<int>(words.size());
  for (const auto& word : words) {
    CraRunResult a = run_cra_word(cra, word);
    RunResult b = run_word(pdrm, word);
    if (a.rewards != b.rewards) {
      rep.mismatches.push_back({word, false, a.rewards, b.rewards});
    }
  }
  return rep;
}

std::vector<std::vector<Label>> random_words(int n_props, int n_words, int max_len,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len_dist(0, max_len);
  std::uniform_int_distribution<int> sym_dist(0, n_props);  // n_props = empty label
  std::vector<std::vector<Label>> words;
  words.reserve(n_words);
  for (int i = 0; i < n_words; ++i) {
    std::vector<Label> w(len_dist(rng));
    for (Label& sigma : w) {
      int pick = sym_dist(rng);
      sigma = pick == n_props ? 0 : Label{1} << pick;
    }
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<long long> measure_counter_growth(const Cra& cra, const std::vector<Label>& word) {
  std::vector<long long> out;
  int state = cra.initial;
  std::vector<long long> counters(cra.n_counters, 0);
  long long peak = 0;
  bool terminal = false;
  for (Label sigma : word) {
    if (!terminal) {
      CraStepResult s = cra_step(cra, state, counters, sigma);
      state = s.state;
      counters = std::move(s.counters);
      terminal = s.terminal;
    }
    for (long long v : counters) peak = std::max(peak, std::abs(v));
    out.push_back(peak);
  }
  return out;
}

PathGrowth path_encoding_growth(const std::vector<int>& digits) {
  PathGrowth g;
  long long value = 0;
  long long peak = 0;
  long long ops = 0;
  long long pow4 = 1;
  for (int d : digits) {
    value += pow4 * d;
    if (d > 0) ops += std::max<long long>(1, pow4 * d / 4);
    peak = std::max(peak, value);
    g.encoding.push_back(value);
    g.running_max.push_back(peak);
    g.unit_ops.push_back(ops);
    pow4 *= 4;
  }
  return g;
}

// ---------------------------------------------------------------------------
// .cra format

Cra parse_cra(std::istream& in, const std::string& origin) {
  Cra c;
  std::vector<std::string> core_states;
  std::vector<std::string> final_states;
  std::string initial_name;
  struct RawT {
    std::string src, guard, zt, deltas, reward, dst;
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
    if (t.rfind("cra ", 0) == 0) {
      c.name = trim(t.substr(4));
    } else if (t.rfind("props:", 0) == 0) {
      c.props = split_ws(t.substr(6));
    } else if (t.rfind("states:", 0) == 0) {
      core_states = split_ws(t.substr(7));
    } else if (t.rfind("initial:", 0) == 0) {
      initial_name = trim(t.substr(8));
    } else if (t.rfind("final:", 0) == 0) {
      final_states = split_ws(t.substr(6));
    } else if (t.rfind("counters:", 0) == 0) {
      c.n_counters = std::stoi(trim(t.substr(9)));
    } else if (t.rfind("mode:", 0) == 0) {
      std::string mode = trim(t.substr(5));
      if (mode == "saturating") {
        c.mode = CounterMode::Saturating;
      } else if (mode == "strict") {
        c.mode = CounterMode::Strict;
      } else {
        fail("unknown counter mode '" + mode + "'");
      }
    } else if (t.rfind("T ", 0) == 0) {
      auto parts = split_on(t.substr(2), '|');
      if (parts.size() != 6) fail("transition needs 6 '|'-separated fields");
      raw.push_back({parts[0], parts[1], parts[2], parts[3], parts[4], parts[5], lineno});
    } else {
      fail("unrecognized line: " + t);
    }
  }
  for (const auto& f : final_states) {
    if (std::find(core_states.begin(), core_states.end(), f) != core_states.end()) {
      throw Error(ErrorKind::FinalStateOverlap, origin + ": state '" + f + "' declared twice");
    }
  }
  c.state_names = core_states;
  c.state_names.insert(c.state_names.end(), final_states.begin(), final_states.end());
  c.n_core = static_cast<int>(core_states.size());
  auto state_id = [&](const std::string& name, int ln) -> int {
    auto it = std::find(c.state_names.begin(), c.state_names.end(), name);
    if (it == c.state_names.end()) {
      throw Error(ErrorKind::UnknownIdentifier,
                  origin + ":" + std::to_string(ln) + ": state '" + name + "' not declared");
    }
    return static_cast<int>(it - c.state_names.begin());
  };
  if (c.n_core == 0) throw Error(ErrorKind::EmptyAlphabet, origin + ": no states declared");
  c.initial = state_id(initial_name, 0);
  for (const RawT& r : raw) {
    CraTransition t;
    t.source = state_id(r.src, r.line);
    t.target = state_id(r.dst, r.line);
    t.guard = Guard::parse(r.guard, c.props);
    for (char ch : r.zt) {
      if (ch == '0' || ch == '1') t.zero_test.push_back(ch - '0');
    }
    for (const auto& d : split_on(r.deltas, ',')) {
      try {
        t.deltas.push_back(std::stoll(d));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ParseError,
                    origin + ":" + std::to_string(r.line) + ": bad delta '" + d + "'");
      }
    }
    try {
      t.reward = std::stod(r.reward);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError,
                  origin + ":" + std::to_string(r.line) + ": bad reward '" + r.reward + "'");
    }
    c.transitions.push_back(std::move(t));
  }
  return c;
}

Cra load_cra(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::AssetError, "cannot open " + path);
  return parse_cra(in, path);
}

std::string serialize_cra(const Cra& c) {
  std::ostringstream os;
  os << "cra " << c.name << "\n";
  os << "props:";
  for (const auto& p : c.props) os << " " << p;
  os << "\nstates:";
  for (int i = 0; i < c.n_core; ++i) os << " " << c.state_names[i];
  os << "\ninitial: " << c.state_names[c.initial];
  os << "\nfinal:";
  for (int i = c.n_core; i < c.n_states(); ++i) os << " " << c.state_names[i];
  os << "\ncounters: " << c.n_counters;
  os << "\nmode: " << (c.mode == CounterMode::Saturating ? "saturating" : "strict") << "\n";
  for (const CraTransition& t : c.transitions) os << cra_transition_text(c, t) << "\n";
  return os.str();
}

}  // namespace pdrm
