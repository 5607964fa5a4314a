#include <doctest.h>

#include <sstream>

#include "pdrm/errors.hpp"
#include "pdrm/machine.hpp"

using namespace pdrm;

namespace {

std::string asset(const std::string& name) {
  return std::string(PDRM_ASSET_DIR) + "/" + name;
}

Machine from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_pdrm(in, "<test>");
}

}  // namespace

TEST_CASE("maze machine records, retraces and rewards") {
  Machine m = validate(load_pdrm(asset("maze.pdrm")));
  CHECK(m.n_core == 2);
  CHECK(m.n_states() == 4);
  CHECK(m.max_push_len() == 2);
  CHECK(m.max_pushing_eps_chain() == 0);
  // 8 wildcard-pop transitions expand over the 5 stack symbols.
  CHECK(m.transitions.size() == 60);

  auto [c0, pending] = initial_configuration(m);
  CHECK(pending == 0.0);
  CHECK(c0.state == 0);
  REQUIRE(c0.stack.size() == 1);
  CHECK(c0.stack[0] == m.bottom);

  SUBCASE("perfect out-and-back pays 1 on the exit move") {
    RunResult r = run_word(m, {m.label_of({"r"}), m.label_of({"r", "t"}),
                               m.label_of({"l"}), m.label_of({"l", "x"})});
    CHECK(r.rewards == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    CHECK(r.final.terminal);
    CHECK(m.state_names[r.final.state] == "u3");
  }

  SUBCASE("mismatched pop fails with -1") {
    RunResult r = run_word(m, {m.label_of({"r"}), m.label_of({"r", "t"}),
                               m.label_of({"r"})});
    CHECK(r.rewards == std::vector<double>{0.0, 0.0, -1.0});
    CHECK(r.final.terminal);
    CHECK(m.state_names[r.final.state] == "u2");
  }

  SUBCASE("searching keeps pushing, one symbol per move") {
    RunResult r = run_word(m, {m.label_of({"u"}), m.label_of({"u"}),
                               m.label_of({"l"})});
    CHECK(r.final.stack.size() == 4);
    CHECK(r.final.stack[0] == m.sym_index("L"));
    CHECK(r.final.stack[1] == m.sym_index("U"));
  }

  SUBCASE("undefined lookups are lenient reward-0 self-loops") {
    RunResult r = run_word(m, {m.label_of({"l", "x"})});
    CHECK(r.rewards == std::vector<double>{0.0});
    CHECK(r.final.state == 0);
    CHECK(r.final.stack.size() == 1);
  }

  SUBCASE("stepping a terminal configuration throws") {
    RunResult r = run_word(m, {m.label_of({"r"}), m.label_of({"r", "t"}),
                               m.label_of({"u"})});
    REQUIRE(r.final.terminal);
    CHECK_THROWS_AS(step(m, r.final, m.label_of({"r"})), Error);
  }
}

TEST_CASE("top-k view truncates the stack") {
  Machine m = validate(load_pdrm(asset("maze.pdrm")));
  RunResult r = run_word(m, {m.label_of({"r"}), m.label_of({"d"})});
  auto [state, top2] = top_k_view(r.final, 2);
  CHECK(state == 0);
  CHECK(top2 == std::vector<SymId>{m.sym_index("D"), m.sym_index("R")});
  auto [s1, top9] = top_k_view(r.final, 9);
  CHECK(top9.size() == 3);
  CHECK(top_k_view(r.final, 0).second.empty());
}

TEST_CASE("serialize round trip preserves behaviour") {
  Machine m = validate(load_pdrm(asset("maze.pdrm")));
  Machine again = validate(from_text(serialize_pdrm(m)));
  CHECK(again.transitions.size() == m.transitions.size());
  std::vector<Label> word = {m.label_of({"d"}), m.label_of({"l"}),
                             m.label_of({"l", "t"}), m.label_of({"r"}),
                             m.label_of({"r"})};
  CHECK(run_word(m, word).rewards == run_word(again, word).rewards);
}

TEST_CASE("nondeterministic pairs are rejected") {
  CHECK_THROWS_AS(validate(from_text(R"(pdrm bad
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | a | Z | Z | 0 | u0
T u0 | a | Z | Z Z | 0 | f
)")),
                  Error);
  try {
    validate(from_text(R"(pdrm bad2
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | a | * | * | 0 | u0
T u0 | true | Z | Z | 0 | f
)"));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NondeterministicPair);
  }
}

TEST_CASE("eps and input transitions may not share a lookup") {
  CHECK_THROWS_AS(validate(from_text(R"(pdrm bad3
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | eps | Z | Z | 0 | f
T u0 | a | Z | Z | 0 | u0
)")),
                  Error);
}

TEST_CASE("strict mode raises on undefined lookups") {
  Machine m = validate(from_text(R"(pdrm strictly
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
mode: strict
T u0 | a | Z | Z | 0 | f
)"));
  auto [c0, pending] = initial_configuration(m);
  try {
    step(m, c0, 0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StrictModeUndefined);
  }
}

TEST_CASE("pushing eps cycles are rejected at validation") {
  try {
    validate(from_text(R"(pdrm cyc
props: a
states: u0 u1
initial: u0
final: f
stack: Z
bottom: Z
T u0 | eps | Z | Z | 0 | u1
T u1 | eps | Z | Z | 0 | u0
)"));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EpsilonDivergence);
  }
}

TEST_CASE("non-pushing eps loops hit the closure cap") {
  Machine m = from_text(R"(pdrm loop
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | eps | eps | eps | 0 | u0
)");
  CHECK_THROWS_AS(epsilon_closure(m, Configuration{0, {m.bottom}, false}), Error);
}

TEST_CASE("state shared between working and final lists is rejected") {
  try {
    from_text(R"(pdrm ov
props: a
states: u0 u1
initial: u0
final: u1
stack: Z
bottom: Z
)");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FinalStateOverlap);
  }
}

TEST_CASE("undeclared identifiers are parse-time errors") {
  CHECK_THROWS_AS(from_text(R"(pdrm uk
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | a | Q | Q | 0 | f
)"),
                  Error);
  CHECK_THROWS_AS(from_text(R"(pdrm uk2
props: a
states: u0
initial: u0
final: f
stack: Z
bottom: Z
T u0 | a | Z | Z | 0 | nosuch
)"),
                  Error);
}

TEST_CASE("initial eps transitions credit a pending reward") {
  Machine m = validate(from_text(R"(pdrm pend
props: a
states: u0 u1
initial: u0
final: f
stack: Z B
bottom: Z
T u0 | eps | Z | B Z | 2.5 | u1
T u1 | a | B | B | 0 | f
)"));
  auto [c0, pending] = initial_configuration(m);
  CHECK(pending == 2.5);
  CHECK(c0.state == 1);
  CHECK(c0.stack.size() == 2);
  RunResult r = run_word(m, {m.label_of({"a"})});
  CHECK(r.rewards == std::vector<double>{2.5});
}
