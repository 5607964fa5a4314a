#include "pdrm/product.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <unordered_map>

#include "pdrm/errors.hpp"

namespace pdrm {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  h ^= v;
  return h * 1099511628211ull;
}

}  // namespace

std::size_t ProductStateHash::operator()(const ProductState& ps) const {
  std::uint64_t h = 14695981039346656037ull;
  h = fnv1a(h, static_cast<std::uint64_t>(ps.env_state));
  h = fnv1a(h, static_cast<std::uint64_t>(ps.pdrm_state));
  for (SymId z : ps.stack) h = fnv1a(h, static_cast<std::uint64_t>(z) + 7);
  return static_cast<std::size_t>(h);
}

Product::Product(const TabularMDP& env, const Machine& pdrm) : env_(&env), pdrm_(&pdrm) {
  bit_map_.resize(env.props.size(), 0);
  for (std::size_t i = 0; i < env.props.size(); ++i) {
    auto it = std::find(pdrm.props.begin(), pdrm.props.end(), env.props[i]);
    if (it != pdrm.props.end()) {
      bit_map_[i] = Label{1} << (it - pdrm.props.begin());
    }
  }
}

Label Product::to_machine(Label env_label) const {
  Label out = 0;
  for (std::size_t i = 0; i < bit_map_.size(); ++i) {
    if ((env_label >> i) & 1u) out |= bit_map_[i];
  }
  return out;
}

std::vector<Product::Branch> Product::initial_branches() const {
  auto [c0, pending] = initial_configuration(*pdrm_);
  std::vector<Branch> out;
  for (const InitialEntry& e : env_->initial) {
    Branch b;
    b.prob = e.prob;
    if (c0.terminal) {
      b.state = {e.state, c0.state, c0.stack};
      b.reward = pending;
      b.done = true;
    } else {
      StepResult sr = pdrm::step(*pdrm_, c0, to_machine(e.label));
      b.state = {e.state, sr.config.state, sr.config.stack};
      b.reward = pending + sr.reward;
      b.done = sr.config.terminal;
      b.fired = std::move(sr.fired);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Product::Branch> Product::branches(const ProductState& ps, int a) const {
  Configuration c{ps.pdrm_state, ps.stack, pdrm_->is_final(ps.pdrm_state)};
  if (c.terminal) {
    throw Error(ErrorKind::TerminalStep, "product step from a final machine state");
  }
  std::vector<Branch> out;
  for (const Outcome& o : env_->outcomes(ps.env_state, a)) {
    StepResult sr = pdrm::step(*pdrm_, c, to_machine(o.label));
    Branch b;
    b.state = {o.next, sr.config.state, sr.config.stack};
    b.prob = o.prob;
    b.reward = sr.reward + o.env_reward;
    b.done = sr.config.terminal;
    b.fired = std::move(sr.fired);
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

Product::Sample pick(const std::vector<Product::Branch>& branches, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (const auto& b : branches) {
    acc += b.prob;
    if (u < acc || &b == &branches.back()) return {b.state, b.reward, b.done, b.fired};
  }
  const auto& last = branches.back();
  return {last.state, last.reward, last.done, last.fired};
}

}  // namespace

Product::Sample Product::reset(std::mt19937_64& rng) const {
  return pick(initial_branches(), rng);
}

Product::Sample Product::step(const ProductState& ps, int a, std::mt19937_64& rng) const {
  return pick(branches(ps, a), rng);
}

Rollout rollout(const Product& product, const Policy& policy, int horizon,
                std::mt19937_64& rng) {
  Rollout r;
  if (horizon <= 0) return r;
  Product::Sample s = product.reset(rng);
  r.ret += s.reward;
  r.done = s.done;
  r.states.push_back(s.state);
  for (int t = 0; t < horizon && !r.done; ++t) {
    int a = policy(s.state, rng);
    s = product.step(s.state, a, rng);
    r.ret += s.reward;
    r.actions.push_back(a);
    r.rewards.push_back(s.reward);
    r.states.push_back(s.state);
    r.done = s.done;
  }
  r.normalized = std::clamp(r.ret / product.env().reward_normalizer, -1.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Bounded enumeration

namespace {

struct DepthKey {
  ProductState state;
  int depth;
  bool operator==(const DepthKey&) const = default;
};

struct DepthKeyHash {
  std::size_t operator()(const DepthKey& k) const {
    return ProductStateHash{}(k.state) * 31 + static_cast<std::size_t>(k.depth);
  }
};

}  // namespace

ExplicitProductMDP enumerate_bounded_product(const Product& product, int horizon,
                                             int stack_cap, long long state_cap) {
  const Machine& m = product.pdrm();
  ExplicitProductMDP mdp;
  mdp.env = &product.env();
  mdp.pdrm = &m;
  mdp.n_actions = product.env().n_actions();
  mdp.horizon = horizon;
  if (stack_cap < 0) {
    long long cap = static_cast<long long>(horizon) * m.max_push_len() *
                        (m.max_pushing_eps_chain() + 1) +
                    1;
    stack_cap = static_cast<int>(std::min<long long>(cap, 1 << 20));
  }
  mdp.stack_cap = stack_cap;

  auto add_absorbing = [&](const ProductState& ps) {
    int i = mdp.n_states();
    mdp.states.push_back(ps);
    mdp.depth.push_back(-1);
    mdp.absorbing.push_back(1);
    for (int a = 0; a < mdp.n_actions; ++a) mdp.table.push_back({{i, 1.0, 0.0}});
    return i;
  };
  mdp.sink = add_absorbing({-1, -1, {}});
  mdp.overflow = add_absorbing({-2, -2, {}});

  std::unordered_map<DepthKey, int, DepthKeyHash> index;
  std::deque<int> queue;

  auto intern = [&](const ProductState& ps, int d, bool done) -> int {
    if (done) return mdp.sink;
    if (static_cast<int>(ps.stack.size()) > mdp.stack_cap) {
      mdp.overflow_reachable = true;
      return mdp.overflow;
    }
    DepthKey key{ps, d};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    int i = mdp.n_states();
    if (i > state_cap) {
      throw Error(ErrorKind::ExplosionGuard,
                  "enumeration exceeds " + std::to_string(state_cap) + " states");
    }
    index.emplace(std::move(key), i);
    mdp.states.push_back(ps);
    mdp.depth.push_back(d);
    bool absorbing = d >= horizon;
    mdp.absorbing.push_back(absorbing ? 1 : 0);
    mdp.table.resize(mdp.table.size() + mdp.n_actions);
    if (absorbing) {
      for (int a = 0; a < mdp.n_actions; ++a) mdp.table[i * mdp.n_actions + a] = {{i, 1.0, 0.0}};
    } else {
      queue.push_back(i);
    }
    return i;
  };

  for (const Product::Branch& b : product.initial_branches()) {
    mdp.initial.push_back({intern(b.state, 0, b.done), b.prob});
  }
  while (!queue.empty()) {
    int i = queue.front();
    queue.pop_front();
    ProductState ps = mdp.states[i];  // copy: intern may reallocate states
    int d = mdp.depth[i];
    for (int a = 0; a < mdp.n_actions; ++a) {
      std::vector<ExplicitProductMDP::Entry> row;  // intern may resize the table
      for (const Product::Branch& b : product.branches(ps, a)) {
        row.push_back({intern(b.state, d + 1, b.done), b.prob, b.reward});
      }
      mdp.table[i * mdp.n_actions + a] = std::move(row);
    }
  }
  return mdp;
}

void export_sparse(const ExplicitProductMDP& mdp, std::ostream& out) {
  out << "state\taction\tnext\tprob\treward\n";
  char buf[64];
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (const auto& e : mdp.row(s, a)) {
        std::snprintf(buf, sizeof(buf), "%.9g\t%.9g", e.prob, e.reward);
        out << s << '\t' << a << '\t' << e.next << '\t' << buf << '\n';
      }
    }
  }
}

}  // namespace pdrm
