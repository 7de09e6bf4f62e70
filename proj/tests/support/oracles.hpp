#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the engine or featurizer they are checking; they share only the
// plain data types (RuleSpec, Board, Move) with the library.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gohr/board.hpp"
#include "gohr/engine.hpp"
#include "gohr/rng.hpp"
#include "gohr/rule.hpp"

namespace gohr::testing {

// Random rule drawn from the full grammar: 1-3 lines, 1-3 atoms per line,
// metered and unmetered counts, subsets and wildcards, and every bucket term
// kind.
RuleSpec random_rule(Rng& rng, const FeatureSet& features);

// `pieces` distinct cells with uniform shapes and colors.
Board random_board(Rng& rng, const FeatureSet& features, int pieces);

// A random in-range move, biased towards occupied cells.
Move random_move(Rng& rng, const Board& board);

// Snapshot of the reference interpreter after replaying a move sequence.
struct RefState {
  std::vector<std::pair<int, std::pair<int, int>>> pieces;  // (cell, (shape, color)), by cell
  std::size_t line = 0;
  std::vector<Count> atom_counts;
  Count line_count;
  std::optional<int> p;
  std::vector<std::optional<int>> pc;
  std::vector<std::optional<int>> ps;
  bool over = false;
  int moves = 0;  // moves counted against the horizon
};

struct RefStep {
  bool accepted = false;
  Reason reason = Reason::kNoMatchingAtom;
  int reward = 0;
};

// Replays `moves` from the initial board, re-deriving the whole rule state
// from scratch, and returns the judgment of every move plus the final state.
struct RefReplay {
  std::vector<RefStep> steps;
  RefState final_state;
};
RefReplay reference_replay(const RuleSpec& rule, const Board& initial,
                           const std::vector<Move>& moves);

// The same replay, but each judgment is computed by a fresh replay of the
// whole prefix before it. Quadratic; this is the re-derivation oracle.
RefReplay reference_rederive(const RuleSpec& rule, const Board& initial,
                             const std::vector<Move>& moves);

// Every (cell, bucket) the reference interpreter would accept in `state`.
std::vector<Move> reference_legal_moves(const RuleSpec& rule, const RefState& state);

// Feature bits set by walking explicit per-index feature definitions in the
// documented order. `last_*` are -1 when there is no earlier accepted move;
// `shape`/`color` are -1 for an empty cell.
std::vector<std::size_t> reference_features(int colors, int shapes, int last_shape, int last_color,
                                            int last_bucket, int shape, int color, int bucket);
std::size_t reference_dimension(int colors, int shapes);

// Brute-force Mann-Whitney: U by pair counting and the one-sided exact tail
// P(U >= u_obs) by enumerating every split of the pooled sample.
double brute_u(const std::vector<double>& a, const std::vector<double>& b);
double brute_exact_p(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gohr::testing
