#include "pdrm/formula.hpp"

#include <algorithm>
#include <cctype>

#include "pdrm/errors.hpp"

namespace pdrm {

namespace {

struct Token {
  enum Kind { Atom, Not, And, Or, LParen, RParen, True, End } kind;
  std::string text;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    switch (c) {
      case '!': out.push_back({Token::Not, "!"}); ++i; continue;
      case '&': out.push_back({Token::And, "&"}); ++i; continue;
      case '|': out.push_back({Token::Or, "|"}); ++i; continue;
      case '(': out.push_back({Token::LParen, "("}); ++i; continue;
      case ')': out.push_back({Token::RParen, ")"}); ++i; continue;
      default: break;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) {
        ++j;
      }
      std::string word = s.substr(i, j - i);
      out.push_back({word == "true" ? Token::True : Token::Atom, word});
      i = j;
      continue;
    }
    throw Error(ErrorKind::ParseError,
                "unexpected character '" + std::string(1, c) + "' in guard \"" + s + "\"");
  }
  out.push_back({Token::End, ""});
  return out;
}

}  // namespace

class GuardParser {
 public:
  GuardParser(std::vector<Token> tokens, const std::vector<std::string>& props)
      : tokens_(std::move(tokens)), props_(props) {}

  Guard run(const std::string& text) {
    Guard g;
    parse_or(g);
    expect(Token::End);
    g.text_ = text;
    return g;
  }

 private:
  std::vector<Token> tokens_;
  const std::vector<std::string>& props_;
  std::size_t pos_ = 0;

  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_++]; }

  void expect(Token::Kind kind) {
    if (peek().kind != kind) {
      throw Error(ErrorKind::ParseError, "malformed guard near '" + peek().text + "'");
    }
    ++pos_;
  }

  void parse_or(Guard& g) {
    parse_and(g);
    while (peek().kind == Token::Or) {
      take();
      parse_and(g);
      g.code_.push_back({Guard::Op::Or});
    }
  }

  void parse_and(Guard& g) {
    parse_unary(g);
    while (peek().kind == Token::And) {
      take();
      parse_unary(g);
      g.code_.push_back({Guard::Op::And});
    }
  }

  void parse_unary(Guard& g) {
    if (peek().kind == Token::Not) {
      take();
      parse_unary(g);
      g.code_.push_back({Guard::Op::Not});
      return;
    }
    parse_primary(g);
  }

  void parse_primary(Guard& g) {
    Token t = take();
    switch (t.kind) {
      case Token::True:
        g.code_.push_back({Guard::Op::True});
        return;
      case Token::Atom: {
        auto it = std::find(props_.begin(), props_.end(), t.text);
        if (it == props_.end()) {
          throw Error(ErrorKind::UnknownIdentifier, "proposition '" + t.text + "' not declared");
        }
        g.code_.push_back(
            {Guard::Op::Prop, static_cast<std::uint8_t>(it - props_.begin())});
        return;
      }
      case Token::LParen:
        parse_or(g);
        expect(Token::RParen);
        return;
      default:
        throw Error(ErrorKind::ParseError, "malformed guard near '" + t.text + "'");
    }
  }
};

Guard Guard::parse(const std::string& text, const std::vector<std::string>& props) {
  if (static_cast<int>(props.size()) > kMaxProps) {
    throw Error(ErrorKind::BadConfig, "too many atomic propositions");
  }
  return GuardParser(lex(text), props).run(text);
}

Guard Guard::wildcard() {
  Guard g;
  g.code_.push_back({Op::True});
  g.text_ = "true";
  return g;
}

bool Guard::eval(Label sigma) const {
  // Tiny fixed-size evaluation stack; guards are short.
  bool stack[64];
  int top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Prop: stack[top++] = (sigma >> in.prop) & 1u; break;
      case Op::True: stack[top++] = true; break;
      case Op::Not: stack[top - 1] = !stack[top - 1]; break;
      case Op::And: --top; stack[top - 1] = stack[top - 1] && stack[top]; break;
      case Op::Or: --top; stack[top - 1] = stack[top - 1] || stack[top]; break;
    }
  }
  return stack[0];
}

std::vector<bool> Guard::truth_table(int n_props) const {
  std::vector<bool> table(std::size_t{1} << n_props);
  for (Label sigma = 0; sigma < table.size(); ++sigma) {
    table[sigma] = eval(sigma);
  }
  return table;
}

}  // namespace pdrm
