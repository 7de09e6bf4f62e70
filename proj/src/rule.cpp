#include "gohr/rule.hpp"

#include "gohr/board.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace gohr {

namespace {

constexpr int kMaxInteger = 1'000'000'000;

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return false;
  }
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) ||
           std::isdigit(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string located(const std::string& msg, int line, int column) {
  return std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
}

std::optional<int> index_of(const std::vector<std::string>& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const FeatureSet& features,
         std::vector<RuleWarning>* warnings)
      : tokens_(std::move(tokens)), features_(features), warnings_(warnings) {}

  std::vector<RuleLine> parse_lines() {
    std::vector<RuleLine> lines;
    while (!at_end()) {
      if (peek().kind == TokenKind::kNewline) {
        advance();
        continue;
      }
      lines.push_back(parse_line());
      if (!at_end()) expect(TokenKind::kNewline, "expected end of line after atoms");
    }
    return lines;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token& peek() const { return tokens_[pos_]; }

  bool check(TokenKind kind) const { return !at_end() && peek().kind == kind; }

  const Token& advance() { return tokens_[pos_++]; }

  // Position for diagnostics at the current token, or just past the last one.
  std::pair<int, int> here() const {
    if (!at_end()) return {peek().line, peek().column};
    if (tokens_.empty()) return {1, 1};
    const Token& last = tokens_.back();
    return {last.line, last.column + static_cast<int>(std::max<std::size_t>(last.text.size(), 1))};
  }

  [[noreturn]] void fail(const std::string& msg) const {
    auto [line, col] = here();
    throw ParseError(located(msg, line, col), line, col);
  }

  [[noreturn]] static void invalid(const Token& at, const std::string& msg) {
    throw ValidationError(located(msg, at.line, at.column), at.line, at.column);
  }

  void warn(const Token& at, std::string msg) {
    if (warnings_ != nullptr) warnings_->push_back({std::move(msg), at.line, at.column});
  }

  const Token& expect(TokenKind kind, const std::string& msg) {
    if (!check(kind)) fail(msg);
    return advance();
  }

  int integer_value(const Token& tok) { return std::stoi(tok.text); }

  RuleLine parse_line() {
    RuleLine line;
    if (check(TokenKind::kInt)) {
      const Token& tok = advance();
      int value = integer_value(tok);
      if (value == 0) invalid(tok, "line count must be positive");
      line.count = value;
    }
    if (!check(TokenKind::kLParen)) fail("expected '(' to start an atom");
    while (check(TokenKind::kLParen)) line.atoms.push_back(parse_atom());
    return line;
  }

  // Reports arity instead of a bare punctuation mismatch when an atom closes
  // early or keeps going.
  void field_separator(int fields_so_far) {
    if (check(TokenKind::kComma)) {
      advance();
      return;
    }
    if (check(TokenKind::kRParen)) {
      fail("atom has " + std::to_string(fields_so_far) +
           (fields_so_far == 1 ? " field" : " fields") +
           ", expected 5 (count, shapes, colors, positions, buckets)");
    }
    fail("expected ',' between atom fields");
  }

  Atom parse_atom() {
    expect(TokenKind::kLParen, "expected '('");
    Atom atom;
    atom.count = parse_count();
    field_separator(1);
    atom.shapes = parse_name_set("shape", [&](std::string_view n) { return features_.shape_index(n); });
    field_separator(2);
    atom.colors = parse_name_set("color", [&](std::string_view n) { return features_.color_index(n); });
    field_separator(3);
    atom.positions = parse_position_set();
    field_separator(4);
    atom.buckets = parse_buckets();
    if (check(TokenKind::kComma)) {
      fail("atom has more than 5 fields, expected 5 (count, shapes, colors, positions, buckets)");
    }
    expect(TokenKind::kRParen, "expected ')' to close atom");
    return atom;
  }

  Count parse_count() {
    if (check(TokenKind::kStar)) {
      advance();
      return std::nullopt;
    }
    if (check(TokenKind::kInt)) {
      const Token& tok = advance();
      int value = integer_value(tok);
      if (value == 0) invalid(tok, "atom count must be positive or '*'");
      return value;
    }
    fail("expected atom count ('*' or a positive integer)");
  }

  template <class Item>
  std::optional<std::vector<int>> parse_set(const char* what, Item&& item) {
    if (check(TokenKind::kStar)) {
      advance();
      return std::nullopt;
    }
    std::vector<int> values;
    auto push = [&](const Token& at, int value) {
      if (std::find(values.begin(), values.end(), value) != values.end()) {
        warn(at, std::string("duplicate ") + what + " '" + at.text + "' ignored");
        return;
      }
      values.push_back(value);
    };
    if (check(TokenKind::kLBracket)) {
      const Token& open = advance();
      if (check(TokenKind::kRBracket)) invalid(open, std::string("empty ") + what + " list");
      while (true) {
        const Token& at = at_end() ? open : peek();
        push(at, item());
        if (check(TokenKind::kComma)) {
          advance();
          continue;
        }
        expect(TokenKind::kRBracket, std::string("expected ',' or ']' in ") + what + " list");
        break;
      }
    } else {
      const Token& at = at_end() ? tokens_.back() : peek();
      push(at, item());
    }
    return values;
  }

  template <class Lookup>
  std::optional<std::vector<int>> parse_name_set(const char* what, Lookup&& lookup) {
    return parse_set(what, [&]() {
      if (!check(TokenKind::kIdent)) fail(std::string("expected ") + what + " name");
      const Token& tok = advance();
      auto idx = lookup(tok.text);
      if (!idx) invalid(tok, std::string("unknown ") + what + " '" + tok.text + "'");
      return *idx;
    });
  }

  std::optional<std::vector<int>> parse_position_set() {
    return parse_set("position", [&]() {
      if (!check(TokenKind::kInt)) fail("expected position label 1-36");
      const Token& tok = advance();
      int value = integer_value(tok);
      if (value < 1 || value > kCellCount) {
        invalid(tok, "position " + tok.text + " outside 1-36");
      }
      return value;
    });
  }

  BucketExpr parse_buckets() {
    BucketExpr expr;
    if (check(TokenKind::kLBracket)) {
      const Token& open = advance();
      expr.is_list = true;
      if (check(TokenKind::kRBracket)) invalid(open, "empty bucket list");
      while (true) {
        const Token at = at_end() ? open : peek();
        BucketTerm term = parse_bucket_term();
        if (std::find(expr.terms.begin(), expr.terms.end(), term) != expr.terms.end()) {
          warn(at, "duplicate bucket term '" + format_bucket_expr({{term}, false}) + "' ignored");
        } else {
          expr.terms.push_back(term);
        }
        if (check(TokenKind::kComma)) {
          advance();
          continue;
        }
        expect(TokenKind::kRBracket, "expected ',' or ']' in bucket list");
        break;
      }
    } else {
      expr.terms.push_back(parse_bucket_term());
    }
    return expr;
  }

  BucketTerm parse_bucket_term() {
    if (check(TokenKind::kLParen)) {
      advance();
      BucketTerm inner = parse_bucket_term();
      expect(TokenKind::kRParen, "expected ')' after bucket expression");
      return inner;
    }
    if (check(TokenKind::kInt)) {
      const Token& tok = advance();
      int value = integer_value(tok);
      if (value >= kBucketCount) invalid(tok, "bucket " + tok.text + " outside 0-3");
      return BucketTerm::literal(value);
    }
    if (check(TokenKind::kLBracket)) fail("bucket lists cannot be nested");
    if (!check(TokenKind::kIdent)) fail("expected bucket expression");
    const Token& tok = advance();
    if (tok.text == "nearby") return BucketTerm::nearby();
    if (tok.text == "remotest") return BucketTerm::remotest();
    Register reg;
    if (tok.text == "p") {
      reg = Register::kP;
    } else if (tok.text == "pc") {
      reg = Register::kPc;
    } else if (tok.text == "ps") {
      reg = Register::kPs;
    } else {
      invalid(tok, "unknown bucket term '" + tok.text + "'");
    }
    if (check(TokenKind::kPlus) || check(TokenKind::kMinus)) {
      bool negative = advance().kind == TokenKind::kMinus;
      const Token& num = expect(TokenKind::kInt, "expected integer offset");
      int offset = integer_value(num);
      return BucketTerm::arith(reg, negative ? -offset : offset);
    }
    return BucketTerm::var(reg);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const FeatureSet& features_;
  std::vector<RuleWarning>* warnings_;
};

const char* register_name(Register r) {
  switch (r) {
    case Register::kP:
      return "p";
    case Register::kPc:
      return "pc";
    case Register::kPs:
      return "ps";
  }
  return "?";
}

void format_term(std::ostringstream& out, const BucketTerm& term) {
  switch (term.kind) {
    case BucketTerm::Kind::kLiteral:
      out << term.value;
      break;
    case BucketTerm::Kind::kVar:
      out << register_name(term.reg);
      break;
    case BucketTerm::Kind::kArith:
      out << register_name(term.reg) << (term.value < 0 ? '-' : '+')
          << (term.value < 0 ? -static_cast<long long>(term.value) : term.value);
      break;
    case BucketTerm::Kind::kNearby:
      out << "nearby";
      break;
    case BucketTerm::Kind::kRemotest:
      out << "remotest";
      break;
  }
}

template <class Name>
void format_set(std::ostringstream& out, const std::optional<std::vector<int>>& set, Name&& name) {
  if (!set) {
    out << '*';
    return;
  }
  if (set->size() == 1) {
    out << name((*set)[0]);
    return;
  }
  out << '[';
  for (std::size_t i = 0; i < set->size(); ++i) {
    if (i > 0) out << ',';
    out << name((*set)[i]);
  }
  out << ']';
}

void format_count(std::ostringstream& out, const Count& count) {
  if (count) {
    out << *count;
  } else {
    out << '*';
  }
}

}  // namespace

FeatureSet FeatureSet::defaults() {
  return {{"circle", "triangle", "square", "star"}, {"red", "blue", "black", "yellow"}};
}

std::optional<int> FeatureSet::shape_index(std::string_view name) const {
  return index_of(shapes, name);
}

std::optional<int> FeatureSet::color_index(std::string_view name) const {
  return index_of(colors, name);
}

void FeatureSet::validate() const {
  auto check_list = [](const std::vector<std::string>& names, const char* what) {
    if (names.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (!is_identifier(n)) {
        throw std::invalid_argument(std::string(what) + " name '" + n +
                                    "' is not a lowercase identifier");
      }
      if (n == "p" || n == "pc" || n == "ps" || n == "nearby" || n == "remotest") {
        throw std::invalid_argument(std::string(what) + " name '" + n + "' is reserved");
      }
      if (!seen.insert(n).second) {
        throw std::invalid_argument(std::string("duplicate ") + what + " '" + n + "'");
      }
    }
  };
  check_list(shapes, "shape");
  check_list(colors, "color");
}

std::size_t RuleSpec::atom_count() const {
  std::size_t n = 0;
  for (const auto& line : lines) n += line.atoms.size();
  return n;
}

RuleError::RuleError(const std::string& what, int line, int column)
    : std::runtime_error(what), line_(line), column_(column) {}

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kLParen:
      return "LPAREN";
    case TokenKind::kRParen:
      return "RPAREN";
    case TokenKind::kLBracket:
      return "LBRACKET";
    case TokenKind::kRBracket:
      return "RBRACKET";
    case TokenKind::kComma:
      return "COMMA";
    case TokenKind::kStar:
      return "STAR";
    case TokenKind::kInt:
      return "INT";
    case TokenKind::kIdent:
      return "IDENT";
    case TokenKind::kPlus:
      return "PLUS";
    case TokenKind::kMinus:
      return "MINUS";
    case TokenKind::kNewline:
      return "NEWLINE";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  int line = 1;
  int column = 1;
  bool line_has_tokens = false;
  std::size_t i = 0;

  auto single = [&](TokenKind kind, char c) {
    tokens.push_back({kind, std::string(1, c), line, column});
    line_has_tokens = true;
    ++i;
    ++column;
  };

  while (i < text.size()) {
    const char c = text[i];
    const auto uc = static_cast<unsigned char>(c);
    if (c == '\n') {
      if (line_has_tokens) tokens.push_back({TokenKind::kNewline, "\n", line, column});
      line_has_tokens = false;
      ++line;
      column = 1;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++column;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '(') {
      single(TokenKind::kLParen, c);
    } else if (c == ')') {
      single(TokenKind::kRParen, c);
    } else if (c == '[') {
      single(TokenKind::kLBracket, c);
    } else if (c == ']') {
      single(TokenKind::kRBracket, c);
    } else if (c == ',') {
      single(TokenKind::kComma, c);
    } else if (c == '*') {
      single(TokenKind::kStar, c);
    } else if (c == '+') {
      single(TokenKind::kPlus, c);
    } else if (c == '-') {
      single(TokenKind::kMinus, c);
    } else if (std::isdigit(uc)) {
      const int start_col = column;
      long long value = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = std::min<long long>(value * 10 + (text[i] - '0'), kMaxInteger + 1LL);
        ++i;
        ++column;
      }
      if (value > kMaxInteger) {
        throw LexError(located("integer too large", line, start_col), line, start_col);
      }
      tokens.push_back({TokenKind::kInt, std::to_string(value), line, start_col});
      line_has_tokens = true;
    } else if (std::isalpha(uc) || c == '_') {
      const int start_col = column;
      std::string ident;
      while (i < text.size()) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (!(std::isalnum(d) || text[i] == '_')) break;
        ident.push_back(static_cast<char>(std::tolower(d)));
        ++i;
        ++column;
      }
      tokens.push_back({TokenKind::kIdent, std::move(ident), line, start_col});
      line_has_tokens = true;
    } else {
      std::string shown = std::isprint(uc) ? std::string(1, c) : "\\x" + [&] {
        const char* hex = "0123456789abcdef";
        return std::string{hex[uc >> 4], hex[uc & 15]};
      }();
      throw LexError(located("unexpected character '" + shown + "'", line, column), line, column);
    }
  }
  return tokens;
}

RuleSpec parse_rule(std::string_view text, const FeatureSet& features, std::string source_name,
                    std::vector<RuleWarning>* warnings) {
  features.validate();
  Parser parser(tokenize(text), features, warnings);
  RuleSpec spec;
  spec.lines = parser.parse_lines();
  spec.source_name = std::move(source_name);
  spec.features = features;
  if (spec.lines.empty()) throw ParseError(located("rule has no lines", 1, 1), 1, 1);
  return spec;
}

std::string format_bucket_expr(const BucketExpr& expr) {
  std::ostringstream out;
  if (expr.is_list) {
    out << '[';
    for (std::size_t i = 0; i < expr.terms.size(); ++i) {
      if (i > 0) out << ',';
      format_term(out, expr.terms[i]);
    }
    out << ']';
  } else if (!expr.terms.empty()) {
    format_term(out, expr.terms.front());
  }
  return out.str();
}

std::string format_rule(const RuleSpec& spec) {
  std::ostringstream out;
  const auto& f = spec.features;
  for (std::size_t li = 0; li < spec.lines.size(); ++li) {
    const RuleLine& line = spec.lines[li];
    if (li > 0) out << '\n';
    if (line.count) out << *line.count << ' ';
    for (std::size_t ai = 0; ai < line.atoms.size(); ++ai) {
      const Atom& atom = line.atoms[ai];
      if (ai > 0) out << ' ';
      out << '(';
      format_count(out, atom.count);
      out << ", ";
      format_set(out, atom.shapes, [&](int i) { return f.shapes.at(static_cast<std::size_t>(i)); });
      out << ", ";
      format_set(out, atom.colors, [&](int i) { return f.colors.at(static_cast<std::size_t>(i)); });
      out << ", ";
      format_set(out, atom.positions, [](int i) { return std::to_string(i); });
      out << ", " << format_bucket_expr(atom.buckets) << ')';
    }
  }
  return out.str();
}

}  // namespace gohr
