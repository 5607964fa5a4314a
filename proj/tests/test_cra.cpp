#include <doctest.h>

#include <sstream>

#include "pdrm/cra.hpp"
#include "pdrm/errors.hpp"

using namespace pdrm;

namespace {

std::string asset(const std::string& name) {
  return std::string(PDRM_ASSET_DIR) + "/" + name;
}

Cra cra_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_cra(in, "<test>");
}

}  // namespace

TEST_CASE("letterenv counter automaton single steps") {
  Cra cra = validate(load_cra(asset("letterenv.cra")));
  Label pa = cra.label_of({"P_A"}), pb = cra.label_of({"P_B"});
  Label pc = cra.label_of({"P_C"}), tau = cra.label_of({"tau"});

  CraStepResult r = cra_step(cra, 0, {0}, pa);
  CHECK(r.state == 0);
  CHECK(r.counters == std::vector<long long>{1});
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.terminal);

  r = cra_step(cra, 1, {1}, pc);
  CHECK(r.state == 1);
  CHECK(r.counters == std::vector<long long>{0});
  CHECK(r.reward == 0.0);

  r = cra_step(cra, 1, {0}, tau);
  CHECK(r.terminal);
  CHECK(r.reward == 1.0);

  SUBCASE("unmatched zero test is a lenient self-loop") {
    r = cra_step(cra, 1, {0}, pc);
    CHECK(r.state == 1);
    CHECK(r.counters == std::vector<long long>{0});
    CHECK(r.fired == -1);
  }

  SUBCASE("whole word trace") {
    CraRunResult run = run_cra_word(cra, {pa, pa, pb, pc, pc, tau});
    CHECK(run.rewards == std::vector<double>{0, 0, 0, 0, 0, 1});
    CHECK(run.terminal);
  }
}

TEST_CASE("translation mirrors the counter in unary") {
  Cra cra = validate(load_cra(asset("letterenv.cra")));
  Machine m = validate(translate_cra_to_pdrm(cra));
  CHECK(m.n_syms() == 2);
  auto words = random_words(cra.n_props(), 400, 16, 99);
  EquivalenceReport rep = check_reward_equivalence(cra, m, words);
  CHECK(rep.pass());
  CHECK(rep.n_words == 400);
}

TEST_CASE("decrement gadget pops through helper states") {
  Cra cra = validate(cra_from_text(R"(cra dec
props: a b
states: u0
initial: u0
final: f
counters: 1
T u0 | a & !b | 0 | +3 | 0 | u0
T u0 | a & !b | 1 | +3 | 0 | u0
T u0 | b & !a | 1 | -2 | 0.5 | u0
T u0 | b & !a | 0 | +0 | 1 | f
)"));
  Label a = cra.label_of({"a"}), b = cra.label_of({"b"});
  CraRunResult run = run_cra_word(cra, {a, b, b, b});
  CHECK(run.rewards == std::vector<double>{0, 0.5, 0.5, 1});
  // 3 - 2 - 2 saturates at 0 before the final zero-tested step.
  Machine m = validate(translate_cra_to_pdrm(cra));
  // Entry transition plus two eps helpers for the magnitude-2 decrement.
  CHECK(m.max_pushing_eps_chain() >= 1);
  EquivalenceReport rep =
      check_reward_equivalence(cra, m, {{a, b, b, b}, {a, a, b, b, b, b}, {b}});
  CHECK(rep.pass());
}

TEST_CASE("saturating versus strict counter updates") {
  std::string text = R"(cra sat
props: a
states: u0
initial: u0
final: f
counters: 1
mode: MODE
T u0 | a | 0 | -2 | 0 | u0
)";
  auto build = [&](const std::string& mode) {
    std::string t = text;
    t.replace(t.find("MODE"), 4, mode);
    return validate(cra_from_text(t));
  };
  Cra sat = build("saturating");
  CraStepResult r = cra_step(sat, 0, {0}, sat.label_of({"a"}));
  CHECK(r.counters == std::vector<long long>{0});
  Cra strict = build("strict");
  try {
    cra_step(strict, 0, {0}, strict.label_of({"a"}));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeCounter);
  }
}

TEST_CASE("nondeterministic counter automata are rejected") {
  try {
    validate(cra_from_text(R"(cra nd
props: a
states: u0
initial: u0
final: f
counters: 1
T u0 | a | 0 | +1 | 0 | u0
T u0 | true | 0 | +0 | 0 | f
)"));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Nondeterministic);
  }
}

TEST_CASE("zero test arity must match the counter count") {
  CHECK_THROWS_AS(validate(cra_from_text(R"(cra ar
props: a
states: u0
initial: u0
final: f
counters: 2
T u0 | a | 0 | +1 | 0 | u0
)")),
                  Error);
}

TEST_CASE("multi-counter automata cannot be translated") {
  Cra two = validate(cra_from_text(R"(cra two
props: a
states: u0
initial: u0
final: f
counters: 2
T u0 | a | 00 | +1,+1 | 0 | u0
)"));
  Label a = two.label_of({"a"});
  CraStepResult r = cra_step(two, 0, {0, 0}, a);
  CHECK(r.counters == std::vector<long long>{1, 1});
  try {
    translate_cra_to_pdrm(two);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MultiCounterUnsupported);
  }
}

TEST_CASE("cra serialize round trip") {
  Cra cra = validate(load_cra(asset("letterenv.cra")));
  std::istringstream in(serialize_cra(cra));
  Cra again = validate(parse_cra(in, "<round-trip>"));
  CHECK(again.transitions.size() == cra.transitions.size());
  Label pa = cra.label_of({"P_A"}), tau = cra.label_of({"tau"});
  auto lhs = run_cra_word(cra, {pa, pa, tau});
  auto rhs = run_cra_word(again, {pa, pa, tau});
  CHECK(lhs.rewards == rhs.rewards);
  CHECK(lhs.counters == rhs.counters);
}

TEST_CASE("path encoding grows by a factor four per step") {
  PathGrowth g = path_encoding_growth({3, 1, 2});
  CHECK(g.encoding == std::vector<long long>{3, 7, 39});
  CHECK(g.running_max == std::vector<long long>{3, 7, 39});
  REQUIRE(g.unit_ops.size() == 3);
  CHECK(g.unit_ops[2] > g.unit_ops[1]);
}

TEST_CASE("random words stay within the alphabet") {
  auto words = random_words(3, 50, 10, 7);
  CHECK(words.size() == 50);
  for (const auto& w : words) {
    CHECK(w.size() <= 10);
    for (Label sigma : w) CHECK(sigma < 8);
  }
  CHECK(random_words(3, 50, 10, 7) == words);
}
