#include "gohr/engine.hpp"

#include <algorithm>
#include <string>

namespace gohr {

namespace {

bool contains(const std::optional<std::vector<int>>& set, int value) {
  return !set || std::find(set->begin(), set->end(), value) != set->end();
}

bool available(const Count& c) { return !c || *c > 0; }

const std::optional<int>& register_value(const HistoryRegisters& regs, Register r,
                                         const Piece& piece) {
  switch (r) {
    case Register::kPc:
      return regs.pc.at(static_cast<std::size_t>(piece.color));
    case Register::kPs:
      return regs.ps.at(static_cast<std::size_t>(piece.shape));
    case Register::kP:
      break;
  }
  return regs.p;
}

int mod4(long long v) { return static_cast<int>(((v % kBucketCount) + kBucketCount) % kBucketCount); }

std::uint8_t extreme_buckets(int cell, bool nearest) {
  int best = nearest ? 1 << 30 : -1;
  std::uint8_t mask = 0;
  for (int b = 0; b < kBucketCount; ++b) {
    const int d = BucketGeometry::squared_distance(cell, b);
    if (d == best) {
      mask |= static_cast<std::uint8_t>(1U << b);
    } else if (nearest ? d < best : d > best) {
      best = d;
      mask = static_cast<std::uint8_t>(1U << b);
    }
  }
  return mask;
}

std::uint8_t term_mask(const BucketTerm& term, const Piece& piece, const HistoryRegisters& regs) {
  switch (term.kind) {
    case BucketTerm::Kind::kLiteral:
      return static_cast<std::uint8_t>(1U << term.value);
    case BucketTerm::Kind::kVar:
    case BucketTerm::Kind::kArith: {
      const auto& value = register_value(regs, term.reg, piece);
      if (!value) return 0;
      const long long offset = term.kind == BucketTerm::Kind::kArith ? term.value : 0;
      return static_cast<std::uint8_t>(1U << mod4(*value + offset));
    }
    case BucketTerm::Kind::kNearby:
      return extreme_buckets(piece.cell, true);
    case BucketTerm::Kind::kRemotest:
      return extreme_buckets(piece.cell, false);
  }
  return 0;
}

const RuleLine& active(const GameState& state) { return state.rule->lines[state.active_line]; }

void reset_line(GameState& state) {
  const RuleLine& line = active(state);
  state.atom_counts.clear();
  for (const Atom& atom : line.atoms) state.atom_counts.push_back(atom.count);
  state.line_count = line.count;
}

// Buckets accepted for one piece under the active line, honoring counts.
std::uint8_t accepted_buckets(const GameState& state, const Piece& piece) {
  if (!available(state.line_count)) return 0;
  const RuleLine& line = active(state);
  std::uint8_t mask = 0;
  for (std::size_t i = 0; i < line.atoms.size(); ++i) {
    if (!available(state.atom_counts[i])) continue;
    const Atom& atom = line.atoms[i];
    if (!atom_matches_piece(atom, piece)) continue;
    mask |= bucket_mask(atom.buckets, piece, state.registers);
  }
  return mask;
}

bool has_legal_move(const GameState& state) {
  for (const Piece& piece : state.board.pieces()) {
    if (accepted_buckets(state, piece) != 0) return true;
  }
  return false;
}

}  // namespace

void validate_move(const Move& move) {
  if (move.row < 1 || move.row > kBoardSide) {
    throw MalformedMove("row out of range: " + std::to_string(move.row));
  }
  if (move.column < 1 || move.column > kBoardSide) {
    throw MalformedMove("column out of range: " + std::to_string(move.column));
  }
  if (move.bucket < 0 || move.bucket >= kBucketCount) {
    throw MalformedMove("bucket out of range: " + std::to_string(move.bucket));
  }
}

const char* to_string(Verdict v) { return v == Verdict::kAccept ? "ACCEPT" : "REJECT"; }

const char* to_string(Reason r) {
  switch (r) {
    case Reason::kAccepted:
      return "ACCEPTED";
    case Reason::kEmptyCell:
      return "EMPTY_CELL";
    case Reason::kNoMatchingAtom:
      return "NO_MATCHING_ATOM";
    case Reason::kAtomExhaustedOnly:
      return "ATOM_EXHAUSTED_ONLY";
    case Reason::kEpisodeOver:
      return "EPISODE_OVER";
  }
  return "?";
}

HistoryRegisters HistoryRegisters::unset(const FeatureSet& features) {
  HistoryRegisters regs;
  regs.pc.assign(features.colors.size(), std::nullopt);
  regs.ps.assign(features.shapes.size(), std::nullopt);
  return regs;
}

std::uint8_t bucket_mask(const BucketExpr& expr, const Piece& piece,
                         const HistoryRegisters& registers) {
  std::uint8_t mask = 0;
  for (const BucketTerm& term : expr.terms) mask |= term_mask(term, piece, registers);
  return mask;
}

std::vector<int> eval_bucket_expr(const BucketExpr& expr, const Piece& piece,
                                  const HistoryRegisters& registers) {
  const std::uint8_t mask = bucket_mask(expr, piece, registers);
  std::vector<int> out;
  for (int b = 0; b < kBucketCount; ++b) {
    if ((mask >> b) & 1U) out.push_back(b);
  }
  return out;
}

bool atom_matches_piece(const Atom& atom, const Piece& piece) {
  return contains(atom.shapes, piece.shape) && contains(atom.colors, piece.color) &&
         contains(atom.positions, piece.cell);
}

GameState init_episode(std::shared_ptr<const RuleSpec> rule, Board board,
                       std::uint64_t rng_seed) {
  if (!rule || rule->lines.empty()) throw std::invalid_argument("rule has no lines");
  GameState state;
  state.board = std::move(board);
  state.registers = HistoryRegisters::unset(rule->features);
  state.rule = std::move(rule);
  state.rng_seed = rng_seed;
  state.active_line = 0;
  reset_line(state);
  settle_control(state);
  return state;
}

std::vector<Move> legal_moves(const GameState& state) {
  std::vector<Move> moves;
  if (state.episode_over) return moves;
  for (const Piece& piece : state.board.pieces()) {
    const std::uint8_t mask = accepted_buckets(state, piece);
    for (int b = 0; b < kBucketCount; ++b) {
      if ((mask >> b) & 1U) moves.push_back(Move::at_cell(piece.cell, b));
    }
  }
  return moves;
}

void settle_control(GameState& state) {
  if (state.episode_over) return;
  if (state.board.empty()) {
    state.episode_over = true;
    return;
  }
  if (has_legal_move(state)) return;
  const std::size_t lines = state.rule->lines.size();
  for (std::size_t step = 0; step < lines; ++step) {
    state.active_line = (state.active_line + 1) % lines;
    reset_line(state);
    if (has_legal_move(state)) return;
  }
  state.episode_over = true;
}

Judgment apply_move(GameState& state, const Move& move) {
  validate_move(move);
  if (state.episode_over) return {Verdict::kReject, Reason::kEpisodeOver, 0, true};

  const int cell = move.cell();
  const std::optional<Piece> piece = state.board.at(cell);
  const std::uint8_t want = static_cast<std::uint8_t>(1U << move.bucket);

  Judgment judgment{Verdict::kReject, Reason::kEmptyCell, -1, false};
  if (piece) {
    const RuleLine& line = active(state);
    bool matched_any = false;
    std::vector<std::size_t> satisfied;
    for (std::size_t i = 0; i < line.atoms.size(); ++i) {
      const Atom& atom = line.atoms[i];
      if (!atom_matches_piece(atom, *piece)) continue;
      if ((bucket_mask(atom.buckets, *piece, state.registers) & want) == 0) continue;
      matched_any = true;
      if (available(state.atom_counts[i])) satisfied.push_back(i);
    }
    if (!satisfied.empty() && available(state.line_count)) {
      judgment = {Verdict::kAccept, Reason::kAccepted, 0, false};
      for (std::size_t i : satisfied) {
        if (state.atom_counts[i]) --*state.atom_counts[i];
      }
      if (state.line_count) --*state.line_count;
      state.board.remove(cell);
      state.registers.p = move.bucket;
      state.registers.pc.at(static_cast<std::size_t>(piece->color)) = move.bucket;
      state.registers.ps.at(static_cast<std::size_t>(piece->shape)) = move.bucket;
    } else {
      judgment.reason = matched_any ? Reason::kAtomExhaustedOnly : Reason::kNoMatchingAtom;
    }
  }

  ++state.move_count;
  if (judgment.accepted()) settle_control(state);
  judgment.episode_over = state.episode_over;
  state.transcript.push_back({move, judgment, piece});
  return judgment;
}

std::pair<GameState, Judgment> attempt_move(GameState state, const Move& move) {
  Judgment j = apply_move(state, move);
  return {std::move(state), j};
}

std::optional<TranscriptEntry> last_accepted(const GameState& state) {
  for (auto it = state.transcript.rbegin(); it != state.transcript.rend(); ++it) {
    if (it->judgment.accepted()) return *it;
  }
  return std::nullopt;
}

EpisodeOutcome run_episode(std::shared_ptr<const RuleSpec> rule, Board board,
                           const Policy& policy, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  GameState state = init_episode(std::move(rule), std::move(board));
  EpisodeOutcome out;
  while (!state.episode_over && state.move_count < horizon) {
    const Judgment j = apply_move(state, policy(state));
    if (!j.accepted()) ++out.errors;
  }
  out.moves = state.move_count;
  out.cleared = state.board.empty();
  out.completed = state.episode_over;
  out.transcript = std::move(state.transcript);
  return out;
}

}  // namespace gohr
