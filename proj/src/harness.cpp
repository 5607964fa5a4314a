#include "pdrm/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "pdrm/errors.hpp"

namespace fs = std::filesystem;

namespace pdrm {

namespace {

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

std::uint64_t fnv1a_text(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string resolve(const std::string& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(base_dir) / p).string();
}

std::pair<int, int> parse_cell(const std::string& text, const std::string& what) {
  auto parts = split_ws(text);
  if (parts.size() != 2) {
    throw Error(ErrorKind::ParseError, what + " needs two integers, got '" + text + "'");
  }
  return {std::stoi(parts[0]), std::stoi(parts[1])};
}

double get_num(const std::map<std::string, std::string>& params, const std::string& key,
               double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : std::stod(it->second);
}

void apply_agent_field(AgentSpec& a, const std::string& key, const std::string& value,
                       const std::string& where) {
  if (key == "algorithm") {
    if (value != "q_learning" && value != "hierarchical" && value != "q_cra" &&
        value != "q_translated") {
      throw Error(ErrorKind::ParseError, where + ": unknown algorithm '" + value + "'");
    }
    a.algorithm = value;
  } else if (key == "abstraction") {
    auto parts = split_ws(value);
    if (parts.size() == 1 && parts[0] == "full") {
      a.abstraction = AbstractionSpec::full();
    } else if (parts.size() == 2 && parts[0] == "top") {
      a.abstraction = AbstractionSpec::top(std::stoi(parts[1]));
      a.option_k = a.abstraction.k;
    } else {
      throw Error(ErrorKind::ParseError, where + ": abstraction must be 'full' or 'top K'");
    }
  } else if (key == "episodes") {
    a.hp.episodes = std::stoi(value);
  } else if (key == "eval_every") {
    a.hp.eval_every = std::stoi(value);
  } else if (key == "eval_episodes") {
    a.hp.eval_episodes = std::stoi(value);
  } else if (key == "alpha") {
    a.hp.alpha = std::stod(value);
  } else if (key == "gamma") {
    a.hp.gamma = std::stod(value);
  } else if (key == "eps_start") {
    a.hp.eps_start = std::stod(value);
  } else if (key == "eps_end") {
    a.hp.eps_end = std::stod(value);
  } else if (key == "eps_decay") {
    a.hp.eps_decay_fraction = std::stod(value);
  } else if (key == "option_k") {
    a.option_k = std::stoi(value);
  } else if (key == "option_budget") {
    a.hp.option_budget = std::stoi(value);
  } else if (key == "step_op_budget") {
    a.hp.step_op_budget = std::stoll(value);
  } else {
    throw Error(ErrorKind::ParseError, where + ": unknown agent field '" + key + "'");
  }
}

}  // namespace

TabularMDP build_env(const EnvSpec& spec, const std::string& base_dir) {
  TabularMDP env;
  if (spec.kind == "paintworld") {
    env = build_paintworld();
  } else if (spec.kind == "letterenv") {
    LetterEnvConfig cfg;
    cfg.height = static_cast<int>(get_num(spec.params, "height", cfg.height));
    cfg.width = static_cast<int>(get_num(spec.params, "width", cfg.width));
    cfg.horizon = static_cast<int>(get_num(spec.params, "horizon", cfg.horizon));
    cfg.flip_prob = get_num(spec.params, "flip_prob", cfg.flip_prob);
    auto cell = [&](const char* key, std::pair<int, int> fb) {
      auto it = spec.params.find(key);
      return it == spec.params.end() ? fb : parse_cell(it->second, key);
    };
    cfg.start = cell("start", cfg.start);
    cfg.a_cell = cell("a_cell", cfg.a_cell);
    cfg.c_cell = cell("c_cell", cfg.c_cell);
    cfg.exit_cell = cell("exit_cell", cfg.exit_cell);
    env = build_letterenv(cfg);
  } else if (spec.kind == "maze" || spec.kind == "multimaze") {
    auto it = spec.params.find("map");
    if (it == spec.params.end()) throw Error(ErrorKind::BadConfig, spec.kind + " needs a map");
    GridMap map = load_map(resolve(base_dir, it->second));
    int horizon = static_cast<int>(get_num(spec.params, "horizon", 100));
    env = build_treasure_maze(map, spec.kind == "multimaze", horizon);
  } else if (spec.kind == "deliverworld") {
    auto it = spec.params.find("map");
    if (it == spec.params.end()) throw Error(ErrorKind::BadConfig, "deliverworld needs a map");
    GridMap map = load_map(resolve(base_dir, it->second));
    DeliverWorldConfig cfg;
    auto seqs = spec.params.find("sequences");
    if (seqs == spec.params.end()) {
      throw Error(ErrorKind::BadConfig, "deliverworld needs sequences");
    }
    cfg.sequences = split_ws(seqs->second);
    cfg.horizon = static_cast<int>(get_num(spec.params, "horizon", cfg.horizon));
    env = build_deliverworld(map, cfg);
  } else {
    throw Error(ErrorKind::BadConfig, "unknown environment kind '" + spec.kind + "'");
  }
  double norm = get_num(spec.params, "normalizer", env.reward_normalizer);
  env.reward_normalizer = norm;
  auto hz = spec.params.find("horizon");
  if (hz != spec.params.end()) env.horizon = std::stoi(hz->second);
  return env;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::AssetError, "cannot open " + path);
  ExperimentConfig cfg;
  cfg.base_dir = fs::path(path).parent_path().string();
  if (cfg.base_dir.empty()) cfg.base_dir = ".";

  std::vector<std::string> canonical;
  std::string line;
  int lineno = 0;
  // block: "" top level, "env", "eval_env", or "agent"
  std::string block;
  AgentSpec agent;
  EnvSpec* env_target = nullptr;

  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorKind::ParseError, path + ":" + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    canonical.push_back(t);
    if (t == "}") {
      if (block.empty()) fail("unmatched '}'");
      if (block == "agent") {
        for (const auto& a : cfg.agents) {
          if (a.name == agent.name) fail("duplicate agent name '" + agent.name + "'");
        }
        if (agent.algorithm.empty()) fail("agent '" + agent.name + "' missing algorithm");
        cfg.agents.push_back(agent);
      }
      block.clear();
      env_target = nullptr;
      continue;
    }
    bool opens = t.back() == '{';
    if (opens) t = trim(t.substr(0, t.size() - 1));
    auto sp = t.find_first_of(" \t");
    std::string key = sp == std::string::npos ? t : t.substr(0, sp);
    std::string value = sp == std::string::npos ? "" : trim(t.substr(sp + 1));
    if (opens) {
      if (!block.empty()) fail("nested blocks are not supported");
      if (key == "env") {
        block = "env";
        env_target = &cfg.env;
      } else if (key == "eval_env") {
        block = "eval_env";
        cfg.eval_env.emplace();
        env_target = &*cfg.eval_env;
      } else if (key == "agent") {
        if (value.empty()) fail("agent block needs a name");
        block = "agent";
        agent = AgentSpec{};
        agent.name = value;
      } else {
        fail("unknown block '" + key + "'");
      }
      continue;
    }
    if (block == "env" || block == "eval_env") {
      if (key == "kind") {
        env_target->kind = value;
      } else {
        env_target->params[key] = value;
      }
    } else if (block == "agent") {
      apply_agent_field(agent, key, value, path + ":" + std::to_string(lineno));
    } else if (key == "experiment") {
      cfg.name = value;
    } else if (key == "pdrm") {
      cfg.pdrm_path = value;
    } else if (key == "cra") {
      cfg.cra_path = value;
    } else if (key == "outdir") {
      cfg.outdir = value;
    } else if (key == "seeds") {
      for (const auto& s : split_ws(value)) cfg.seeds.push_back(std::stoull(s));
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!block.empty()) throw Error(ErrorKind::ParseError, path + ": unterminated block");
  if (cfg.name.empty()) throw Error(ErrorKind::ParseError, path + ": missing experiment name");
  if (cfg.env.kind.empty()) throw Error(ErrorKind::ParseError, path + ": missing env block");
  if (cfg.seeds.empty()) throw Error(ErrorKind::ParseError, path + ": missing seeds");
  if (cfg.agents.empty()) throw Error(ErrorKind::ParseError, path + ": no agents");
  if (cfg.outdir.empty()) throw Error(ErrorKind::ParseError, path + ": missing outdir");

  std::string canon;
  for (const auto& l : canonical) {
    canon += l;
    canon += '\n';
  }
  cfg.hash = fnv1a_text(canon);

  // Validate assets up front.
  bool needs_pdrm = false, needs_cra = false;
  for (const auto& a : cfg.agents) {
    if (a.algorithm == "q_cra" || a.algorithm == "q_translated") {
      needs_cra = true;
    } else {
      needs_pdrm = true;
    }
  }
  try {
    build_env(cfg.env, cfg.base_dir);
    if (cfg.eval_env) build_env(*cfg.eval_env, cfg.base_dir);
    if (needs_pdrm) {
      if (cfg.pdrm_path.empty()) {
        throw Error(ErrorKind::BadConfig, "config needs a pdrm asset");
      }
      validate(load_pdrm(resolve(cfg.base_dir, cfg.pdrm_path)));
    }
    if (needs_cra) {
      if (cfg.cra_path.empty()) throw Error(ErrorKind::BadConfig, "config needs a cra asset");
      validate(load_cra(resolve(cfg.base_dir, cfg.cra_path)));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    throw Error(ErrorKind::AssetError, path + ": " + e.what());
  }
  return cfg;
}

namespace {

struct Assets {
  TabularMDP env;
  std::optional<TabularMDP> eval_env;
  std::optional<Machine> machine;
  std::optional<Cra> cra;
  std::optional<Machine> translated;  // q_translated trains on this
};

Assets load_assets(const ExperimentConfig& cfg) {
  Assets a;
  a.env = build_env(cfg.env, cfg.base_dir);
  if (cfg.eval_env) a.eval_env = build_env(*cfg.eval_env, cfg.base_dir);
  bool needs_pdrm = false, needs_cra = false, needs_translated = false;
  for (const auto& ag : cfg.agents) {
    if (ag.algorithm == "q_cra") {
      needs_cra = true;
    } else if (ag.algorithm == "q_translated") {
      needs_cra = true;
      needs_translated = true;
    } else {
      needs_pdrm = true;
    }
  }
  if (needs_pdrm) a.machine = validate(load_pdrm(resolve(cfg.base_dir, cfg.pdrm_path)));
  if (needs_cra) a.cra = validate(load_cra(resolve(cfg.base_dir, cfg.cra_path)));
  if (needs_translated) a.translated = validate(translate_cra_to_pdrm(*a.cra));
  return a;
}

std::string run_stem(const ExperimentConfig& cfg, const std::string& agent,
                     std::uint64_t seed) {
  return (fs::path(resolve(cfg.base_dir, cfg.outdir)) /
          (agent + "_s" + std::to_string(seed)))
      .string();
}

void write_raw(const LearningCurve& curve, const std::string& path) {
  std::ofstream out(path);
  char buf[32];
  for (const EvalPoint& pt : curve.points) {
    out << pt.episode;
    for (double v : pt.raw) {
      std::snprintf(buf, sizeof(buf), ",%.9g", v);
      out << buf;
    }
    out << "\n";
  }
}

struct RunOutput {
  LearningCurve curve;
  std::size_t table_keys = 0;
};

RunOutput execute_run(const Assets& assets, const AgentSpec& spec, std::uint64_t seed) {
  Hyperparams hp = spec.hp;
  hp.seed = seed;
  RunOutput out;
  if (spec.algorithm == "q_cra") {
    CraTrainResult r = q_learning_train_cra(assets.env, *assets.cra, hp);
    out.curve = std::move(r.curve);
    out.table_keys = r.table_keys;
    return out;
  }
  const Machine& machine =
      spec.algorithm == "q_translated" ? *assets.translated : *assets.machine;
  Product product(assets.env, machine);
  std::optional<Product> eval_product;
  if (assets.eval_env) eval_product.emplace(*assets.eval_env, machine);
  const Product* ep = eval_product ? &*eval_product : nullptr;
  if (spec.algorithm == "hierarchical") {
    HierarchicalResult r = hierarchical_train(product, hp, spec.option_k, ep);
    out.curve = std::move(r.curve);
    out.table_keys = r.meta.size();
    for (const auto& q : r.option_q) out.table_keys += q.size();
  } else {
    TrainResult r = q_learning_train(product, spec.abstraction, hp, ep);
    out.curve = std::move(r.curve);
    out.table_keys = r.table.size();
  }
  return out;
}

LearningCurve read_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAggregate, "missing raw file " + path);
  LearningCurve curve;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    EvalPoint pt;
    std::istringstream is(line);
    std::string field;
    std::getline(is, field, ',');
    pt.episode = std::stoi(field);
    while (std::getline(is, field, ',')) pt.raw.push_back(std::stod(field));
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace

RunArtifactSet run_experiment(const ExperimentConfig& cfg, const RunHook& hook) {
  Assets assets = load_assets(cfg);
  RunArtifactSet art;
  art.outdir = resolve(cfg.base_dir, cfg.outdir);
  fs::create_directories(art.outdir);

  for (const auto& agent : cfg.agents) {
    for (std::uint64_t seed : cfg.seeds) {
      RunRecord rec;
      rec.agent = agent.name;
      rec.seed = seed;
      rec.csv_path = run_stem(cfg, agent.name, seed) + ".csv";
      art.runs.push_back(std::move(rec));
    }
  }

  auto do_run = [&](RunRecord& rec) {
    const AgentSpec* spec = nullptr;
    for (const auto& a : cfg.agents) {
      if (a.name == rec.agent) spec = &a;
    }
    std::string stem = run_stem(cfg, rec.agent, rec.seed);
    std::string done_path = stem + ".done";
    auto t0 = std::chrono::steady_clock::now();
    try {
      std::ifstream done(done_path);
      if (done) {
        std::string word, hash;
        done >> word >> hash;
        char expect[32];
        std::snprintf(expect, sizeof(expect), "%016llx",
                      static_cast<unsigned long long>(cfg.hash));
        if (hash != expect) {
          throw Error(ErrorKind::BadConfig,
                      done_path + ": config hash mismatch; refusing to mix configs in " +
                          art.outdir);
        }
        rec.skipped = true;
        return;
      }
      if (hook) hook(rec.agent, rec.seed);
      RunOutput out = execute_run(assets, *spec, rec.seed);
      rec.table_keys = out.table_keys;
      std::ofstream csv(rec.csv_path);
      write_curve_csv(out.curve, csv);
      write_raw(out.curve, stem + ".raw");
      std::ofstream mark(done_path);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "hash %016llx\nkeys %zu\n",
                    static_cast<unsigned long long>(cfg.hash), out.table_keys);
      mark << buf;
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  int workers = 1;
  if (const char* w = std::getenv("PDRM_LAB_WORKERS")) workers = std::max(1, std::atoi(w));
  workers = std::min<int>(workers, static_cast<int>(art.runs.size()));
  if (workers <= 1) {
    for (auto& rec : art.runs) do_run(rec);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < art.runs.size(); j = next++) do_run(art.runs[j]);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Hash-mismatch and other setup errors raised inside do_run for skipped
  // detection are recorded per run; surface the mismatch as a hard error.
  for (const auto& rec : art.runs) {
    if (rec.failed && rec.error.find("config hash mismatch") != std::string::npos) {
      throw Error(ErrorKind::BadConfig, rec.error);
    }
  }

  for (const auto& agent : cfg.agents) {
    bool complete = true;
    for (const auto& rec : art.runs) {
      if (rec.agent == agent.name && rec.failed) complete = false;
    }
    if (!complete) continue;
    std::map<int, std::vector<double>> pooled;
    std::vector<int> order;
    for (std::uint64_t seed : cfg.seeds) {
      LearningCurve curve = read_raw(run_stem(cfg, agent.name, seed) + ".raw");
      for (const EvalPoint& pt : curve.points) {
        if (!pooled.count(pt.episode)) order.push_back(pt.episode);
        auto& bucket = pooled[pt.episode];
        bucket.insert(bucket.end(), pt.raw.begin(), pt.raw.end());
      }
    }
    LearningCurve agg;
    for (int ep : order) {
      EvalPoint pt;
      pt.episode = ep;
      pt.raw = pooled[ep];
      pt.median = quantile(pt.raw, 0.5);
      pt.p25 = quantile(pt.raw, 0.25);
      pt.p75 = quantile(pt.raw, 0.75);
      agg.points.push_back(std::move(pt));
    }
    std::string path = (fs::path(art.outdir) / (agent.name + "_agg.csv")).string();
    std::ofstream out(path);
    write_curve_csv(agg, out);
    art.aggregate_csvs.push_back(path);
  }

  art.metadata_path = (fs::path(art.outdir) / "metadata.txt").string();
  {
    std::ofstream meta(art.metadata_path);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(cfg.hash));
    meta << "experiment " << cfg.name << "\nconfig_hash " << buf << "\n";
    for (const auto& rec : art.runs) {
      meta << "run " << rec.agent << " seed " << rec.seed << " ";
      if (rec.failed) {
        meta << "failed: " << rec.error;
      } else if (rec.skipped) {
        meta << "skipped (already complete)";
      } else {
        std::snprintf(buf, sizeof(buf), "ok keys %zu wall %.3fs", rec.table_keys,
                      rec.wall_seconds);
        meta << buf;
      }
      meta << "\n";
    }
  }
  return art;
}

RunArtifactSet load_artifacts(const ExperimentConfig& cfg) {
  RunArtifactSet art;
  art.outdir = resolve(cfg.base_dir, cfg.outdir);
  for (const auto& agent : cfg.agents) {
    std::string path = (fs::path(art.outdir) / (agent.name + "_agg.csv")).string();
    if (fs::exists(path)) art.aggregate_csvs.push_back(path);
  }
  art.metadata_path = (fs::path(art.outdir) / "metadata.txt").string();
  return art;
}

std::vector<std::string> emit_plot_data(const ExperimentConfig& cfg,
                                        const RunArtifactSet& artifacts) {
  if (artifacts.aggregate_csvs.empty()) {
    throw Error(ErrorKind::MissingAggregate, "no aggregate curves in " + artifacts.outdir);
  }
  struct AggCurve {
    std::string agent;
    std::vector<EvalPoint> points;
  };
  std::vector<AggCurve> curves;
  for (const std::string& path : artifacts.aggregate_csvs) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingAggregate, "cannot open " + path);
    AggCurve c;
    c.agent = fs::path(path).stem().string();
    const std::string suffix = "_agg";
    if (c.agent.size() > suffix.size() &&
        c.agent.compare(c.agent.size() - suffix.size(), suffix.size(), suffix) == 0) {
      c.agent.resize(c.agent.size() - suffix.size());
    }
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      EvalPoint pt;
      std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &pt.episode, &pt.median, &pt.p25, &pt.p75);
      c.points.push_back(pt);
    }
    curves.push_back(std::move(c));
  }
  for (const auto& c : curves) {
    if (c.points.size() != curves[0].points.size()) {
      throw Error(ErrorKind::MissingAggregate,
                  "aggregate curves disagree on evaluation points");
    }
  }
  std::string fig_path =
      (fs::path(artifacts.outdir) / (cfg.name + "_figure.tsv")).string();
  {
    std::ofstream out(fig_path);
    out << "episode";
    for (const auto& c : curves) {
      out << '\t' << c.agent << "_median\t" << c.agent << "_p25\t" << c.agent << "_p75";
    }
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < curves[0].points.size(); ++i) {
      out << curves[0].points[i].episode;
      for (const auto& c : curves) {
        std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%.6f", c.points[i].median,
                      c.points[i].p25, c.points[i].p75);
        out << buf;
      }
      out << '\n';
    }
  }
  std::string manifest_path =
      (fs::path(artifacts.outdir) / (cfg.name + "_figure.manifest")).string();
  {
    std::ofstream out(manifest_path);
    out << "title " << cfg.name << "\n";
    out << "xlabel training episodes\n";
    out << "ylabel normalized return\n";
    out << "aggregation pooled-seeds percentiles (median, p25, p75)\n";
    for (const auto& c : curves) {
      out << "line " << c.agent << " columns " << c.agent << "_median " << c.agent
          << "_p25 " << c.agent << "_p75\n";
    }
  }
  return {fig_path, manifest_path};
}

}  // namespace pdrm
