#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gohr/board.hpp"
#include "gohr/rng.hpp"
#include "gohr/rule.hpp"

namespace gohr {

class InfeasibleParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ranges for random boards. Each range is inclusive.
struct GenParams {
  int min_pieces = 9;
  int max_pieces = 9;
  int min_colors = 4;
  int max_colors = 4;
  int min_shapes = 4;
  int max_shapes = 4;
  std::uint64_t seed = 0;

  // Throws InfeasibleParams when a range is empty or out of bounds for the
  // feature set, or when no piece count can cover the required colors and
  // shapes.
  void validate(const FeatureSet& features) const;

  // "min_pieces,max_pieces,min_colors,max_colors,min_shapes,max_shapes".
  static GenParams parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const GenParams&) const = default;
};

// Draws (pieces, colors, shapes) uniformly from their ranges, redrawing the
// triple while the piece count cannot cover the chosen colors and shapes.
// Selected colors and shapes are picked without replacement; assignments are
// redrawn until every selected value appears; cells are distinct.
Board generate_board(const GenParams& params, const FeatureSet& features, Rng& rng);

class BoardFormatError : public std::runtime_error {
 public:
  BoardFormatError(const std::string& what, int record, int line);
  // 1-based index of the offending piece record (0 when not tied to one).
  int record() const { return record_; }
  int line() const { return line_; }

 private:
  int record_;
  int line_;
};

// Board file: one piece per line as `<cell> <shape> <color>`, where <cell> is
// a label 1..36 or `(x,y)` with x the column and y the row from the bottom.
// A line holding only `---` ends a board. `#` starts a comment.
std::vector<Board> parse_boards(std::string_view text, const FeatureSet& features);
std::vector<Board> load_boards(const std::filesystem::path& path, const FeatureSet& features);

std::string format_boards(const std::vector<Board>& boards, const FeatureSet& features);
void save_boards(const std::filesystem::path& path, const std::vector<Board>& boards,
                 const FeatureSet& features);

// Where episode boards come from: a fixed curriculum, cycled in order, or
// the generator.
struct BoardSupply {
  std::optional<std::vector<Board>> fixed;
  GenParams params;

  Board board_for_episode(std::size_t episode, const FeatureSet& features, Rng& rng) const;
};

}  // namespace gohr
