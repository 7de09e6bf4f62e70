#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gohr/board.hpp"
#include "gohr/rule.hpp"

namespace gohr {

struct Move {
  int row = 1;     // 1..6, counted from the top
  int column = 1;  // 1..6, counted from the left
  int bucket = 0;  // 0..3

  int cell() const { return cell_label(row, column); }
  static Move at_cell(int label, int bucket) { return {cell_row(label), cell_column(label), bucket}; }

  auto operator<=>(const Move&) const = default;
};

class MalformedMove : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws MalformedMove when a field is out of range.
void validate_move(const Move& move);

enum class Verdict : std::uint8_t { kAccept, kReject };

enum class Reason : std::uint8_t {
  kAccepted,
  kEmptyCell,
  kNoMatchingAtom,
  // Some atom on the active line matches the piece and bucket, but every such
  // atom (or the line itself) is exhausted.
  kAtomExhaustedOnly,
  kEpisodeOver,
};

const char* to_string(Verdict v);
const char* to_string(Reason r);

struct Judgment {
  Verdict verdict = Verdict::kReject;
  Reason reason = Reason::kNoMatchingAtom;
  int reward = 0;
  bool episode_over = false;

  bool accepted() const { return verdict == Verdict::kAccept; }
  bool operator==(const Judgment&) const = default;
};

// Buckets of the most recent accepted move: overall, per color, per shape.
struct HistoryRegisters {
  std::optional<int> p;
  std::vector<std::optional<int>> pc;
  std::vector<std::optional<int>> ps;

  static HistoryRegisters unset(const FeatureSet& features);
  bool operator==(const HistoryRegisters&) const = default;
};

struct TranscriptEntry {
  Move move;
  Judgment judgment;
  // The piece on the addressed cell when the move was attempted.
  std::optional<Piece> piece;

  bool operator==(const TranscriptEntry&) const = default;
};

struct GameState {
  Board board;
  std::shared_ptr<const RuleSpec> rule;
  std::size_t active_line = 0;
  std::vector<Count> atom_counts;  // one per atom of the active line
  Count line_count;
  HistoryRegisters registers;
  int move_count = 0;
  std::vector<TranscriptEntry> transcript;
  std::uint64_t rng_seed = 0;
  bool episode_over = false;
};

// Bitmask of buckets (bit b set for bucket b). Unset registers contribute
// nothing; nearby/remotest include every tied bucket.
std::uint8_t bucket_mask(const BucketExpr& expr, const Piece& piece,
                         const HistoryRegisters& registers);

// Sorted bucket ids; the set form of bucket_mask.
std::vector<int> eval_bucket_expr(const BucketExpr& expr, const Piece& piece,
                                  const HistoryRegisters& registers);

bool atom_matches_piece(const Atom& atom, const Piece& piece);

// Starts on line 0 with fresh counts and unset registers, then settles
// control. An empty board ends the episode immediately.
GameState init_episode(std::shared_ptr<const RuleSpec> rule, Board board,
                       std::uint64_t rng_seed = 0);

// Every accepted (cell, bucket) pair under the active line, ordered.
std::vector<Move> legal_moves(const GameState& state);

// Advances control while the active line offers no legal move, resetting
// counts on each newly active line. A full cycle without a legal move ends
// the episode with pieces remaining.
void settle_control(GameState& state);

// In-place form of attempt_move.
Judgment apply_move(GameState& state, const Move& move);

std::pair<GameState, Judgment> attempt_move(GameState state, const Move& move);

// Most recent accepted move in the transcript, with the piece it removed.
std::optional<TranscriptEntry> last_accepted(const GameState& state);

using Policy = std::function<Move(const GameState&)>;

struct EpisodeOutcome {
  std::vector<TranscriptEntry> transcript;
  int errors = 0;
  int moves = 0;
  bool cleared = false;   // no pieces left
  bool completed = false; // the rule was fully satisfied (cleared or stalemate)
};

// Throws std::invalid_argument when horizon < 1.
EpisodeOutcome run_episode(std::shared_ptr<const RuleSpec> rule, Board board,
                           const Policy& policy, int horizon);

}  // namespace gohr
