#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gohr {

// Shapes and colors available to an experiment. The order of each list is
// canonical: it fixes feature indices and the serialized form of rules.
struct FeatureSet {
  std::vector<std::string> shapes;
  std::vector<std::string> colors;

  // circle, triangle, square, star / red, blue, black, yellow.
  static FeatureSet defaults();

  std::optional<int> shape_index(std::string_view name) const;
  std::optional<int> color_index(std::string_view name) const;

  // Throws std::invalid_argument when a list is empty, has duplicates, or
  // holds a name that is not a lowercase identifier.
  void validate() const;

  bool operator==(const FeatureSet&) const = default;
};

// Unmetered when empty.
using Count = std::optional<int>;

enum class Register : std::uint8_t { kP, kPc, kPs };

// One non-list bucket term.
struct BucketTerm {
  enum class Kind : std::uint8_t { kLiteral, kVar, kArith, kNearby, kRemotest };

  Kind kind = Kind::kLiteral;
  // Bucket id for kLiteral, signed offset for kArith, unused otherwise.
  int value = 0;
  Register reg = Register::kP;

  static BucketTerm literal(int bucket) { return {Kind::kLiteral, bucket, Register::kP}; }
  static BucketTerm var(Register r) { return {Kind::kVar, 0, r}; }
  static BucketTerm arith(Register r, int offset) { return {Kind::kArith, offset, r}; }
  static BucketTerm nearby() { return {Kind::kNearby, 0, Register::kP}; }
  static BucketTerm remotest() { return {Kind::kRemotest, 0, Register::kP}; }

  bool operator==(const BucketTerm&) const = default;
};

// The bucket field of an atom: a single term, or a flat bracketed list.
struct BucketExpr {
  std::vector<BucketTerm> terms;
  bool is_list = false;

  bool operator==(const BucketExpr&) const = default;
};

struct Atom {
  Count count;
  // Empty optional is the `*` wildcard. Shapes and colors hold indices into
  // the owning RuleSpec's FeatureSet; positions hold cell labels 1..36.
  std::optional<std::vector<int>> shapes;
  std::optional<std::vector<int>> colors;
  std::optional<std::vector<int>> positions;
  BucketExpr buckets;

  bool operator==(const Atom&) const = default;
};

struct RuleLine {
  Count count;
  std::vector<Atom> atoms;

  bool operator==(const RuleLine&) const = default;
};

struct RuleSpec {
  std::vector<RuleLine> lines;
  std::string source_name;
  FeatureSet features;

  std::size_t atom_count() const;

  bool operator==(const RuleSpec&) const = default;
};

// Base of every rule-file diagnostic. Line and column are 1-based.
class RuleError : public std::runtime_error {
 public:
  RuleError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class LexError : public RuleError {
  using RuleError::RuleError;
};
class ParseError : public RuleError {
  using RuleError::RuleError;
};
class ValidationError : public RuleError {
  using RuleError::RuleError;
};

enum class TokenKind : std::uint8_t {
  kLParen,
  kRParen,
  kLBracket,
  kRBracket,
  kComma,
  kStar,
  kInt,
  kIdent,
  kPlus,
  kMinus,
  kNewline,
};

struct Token {
  TokenKind kind;
  std::string text;  // identifiers are lowercased
  int line = 0;
  int column = 0;

  bool operator==(const Token&) const = default;
};

const char* to_string(TokenKind kind);

// Comments (`#` to end of line) and blank lines produce no tokens. A newline
// token is emitted only after a line that produced tokens and ends in '\n'.
std::vector<Token> tokenize(std::string_view text);

struct RuleWarning {
  std::string message;
  int line = 0;
  int column = 0;
};

RuleSpec parse_rule(std::string_view text, const FeatureSet& features,
                    std::string source_name = {},
                    std::vector<RuleWarning>* warnings = nullptr);

// Canonical text: one rule line per output line, no trailing newline.
std::string format_rule(const RuleSpec& spec);

std::string format_bucket_expr(const BucketExpr& expr);

}  // namespace gohr
