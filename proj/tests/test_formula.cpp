#include <doctest.h>

#include "pdrm/errors.hpp"
#include "pdrm/formula.hpp"

using namespace pdrm;

namespace {

const std::vector<std::string> kProps = {"a", "b", "c"};

Label bits(std::initializer_list<int> set) {
  Label sigma = 0;
  for (int i : set) sigma |= Label{1} << i;
  return sigma;
}

}  // namespace

TEST_CASE("guard atoms and negation") {
  Guard g = Guard::parse("a & !b", kProps);
  CHECK(g.eval(bits({0})));
  CHECK(g.eval(bits({0, 2})));
  CHECK_FALSE(g.eval(bits({0, 1})));
  CHECK_FALSE(g.eval(bits({})));
  CHECK_FALSE(g.eval(bits({1})));
}

TEST_CASE("and binds tighter than or") {
  Guard g = Guard::parse("a | b & c", kProps);
  CHECK(g.eval(bits({0})));
  CHECK(g.eval(bits({1, 2})));
  CHECK_FALSE(g.eval(bits({1})));
  CHECK_FALSE(g.eval(bits({2})));

  Guard h = Guard::parse("(a | b) & c", kProps);
  CHECK_FALSE(h.eval(bits({0})));
  CHECK(h.eval(bits({0, 2})));
  CHECK(h.eval(bits({1, 2})));
}

TEST_CASE("wildcard guard matches everything") {
  Guard g = Guard::parse("true", kProps);
  CHECK(g.is_wildcard());
  for (Label sigma = 0; sigma < 8; ++sigma) CHECK(g.eval(sigma));
  CHECK(Guard::wildcard().eval(bits({0, 1, 2})));
}

TEST_CASE("double negation and nesting") {
  Guard g = Guard::parse("!!a", kProps);
  CHECK(g.eval(bits({0})));
  CHECK_FALSE(g.eval(bits({1})));
  Guard h = Guard::parse("!(a | b) & !c", kProps);
  CHECK(h.eval(bits({})));
  CHECK_FALSE(h.eval(bits({2})));
}

TEST_CASE("truth table agrees with eval") {
  Guard g = Guard::parse("a & (b | !c)", kProps);
  auto table = g.truth_table(3);
  REQUIRE(table.size() == 8);
  for (Label sigma = 0; sigma < 8; ++sigma) CHECK(table[sigma] == g.eval(sigma));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Guard::parse("a &", kProps), Error);
  CHECK_THROWS_AS(Guard::parse("(a", kProps), Error);
  CHECK_THROWS_AS(Guard::parse("", kProps), Error);
  try {
    Guard::parse("a & zz", kProps);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownIdentifier);
  }
}
