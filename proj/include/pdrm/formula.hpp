#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdrm {

/// An input symbol: a set of atomic propositions, one bit per proposition.
using Label = std::uint32_t;

constexpr int kMaxProps = 20;

/// Propositional guard over atomic propositions, compiled to postfix code.
///
/// Grammar: atom | '!' f | f '&' f | f '|' f | '(' f ')' | 'true'.
/// A label satisfies the guard when, read as a truth assignment over the
/// proposition set, the formula evaluates to true. `true` matches every label.
class Guard {
 public:
  Guard() = default;

  /// Parses `text` against the declared proposition names.
  /// Throws Error{ParseError} on syntax errors and Error{UnknownIdentifier}
  /// for undeclared atoms.
  static Guard parse(const std::string& text, const std::vector<std::string>& props);

  /// True guard (wildcard).
  static Guard wildcard();

  bool eval(Label sigma) const;

  /// Bitmask of satisfying labels over 2^n_props; usable for exact
  /// signature comparison when n_props is small.
  std::vector<bool> truth_table(int n_props) const;

  const std::string& text() const { return text_; }
  bool is_wildcard() const { return code_.size() == 1 && code_[0].op == Op::True; }

 private:
  enum class Op : std::uint8_t { Prop, Not, And, Or, True };
  struct Instr {
    Op op;
    std::uint8_t prop = 0;
  };

  std::vector<Instr> code_;
  std::string text_;

  friend class GuardParser;
};

}  // namespace pdrm
