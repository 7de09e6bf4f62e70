#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace gohr {

inline constexpr int kBoardSide = 6;
inline constexpr int kCellCount = kBoardSide * kBoardSide;
inline constexpr int kBucketCount = 4;

// Board coordinates: x is the column (1..6, left to right), y counts rows
// from the bottom (1..6). Buckets sit just outside the corners at 0 and 7.
struct Coord {
  int x = 0;
  int y = 0;

  bool operator==(const Coord&) const = default;
};

// Cell labels run 1..36 in reading order from the top-left cell. Rows in
// moves are counted from the top (1..6), columns from the left (1..6).
constexpr int cell_label(int row, int column) { return (row - 1) * kBoardSide + column; }
constexpr int cell_row(int label) { return (label - 1) / kBoardSide + 1; }
constexpr int cell_column(int label) { return (label - 1) % kBoardSide + 1; }
constexpr Coord cell_coord(int label) {
  return {cell_column(label), kBoardSide + 1 - cell_row(label)};
}

// Fixed corner assignment: ids ascend clockwise from the top-left corner, so
// 0 and 1 are the top buckets and 2 and 3 the bottom ones.
struct BucketGeometry {
  static constexpr std::array<Coord, kBucketCount> corners{{{0, 7}, {7, 7}, {7, 0}, {0, 0}}};

  static constexpr Coord corner(int bucket) { return corners[static_cast<std::size_t>(bucket)]; }

  // Squared Euclidean distance from a cell to a bucket corner.
  static constexpr int squared_distance(int label, int bucket) {
    const Coord c = cell_coord(label);
    const Coord b = corner(bucket);
    return (c.x - b.x) * (c.x - b.x) + (c.y - b.y) * (c.y - b.y);
  }
};

struct Piece {
  int cell = 1;
  int shape = 0;
  int color = 0;

  bool operator==(const Piece&) const = default;
};

// A 6x6 grid holding at most one piece per cell.
class Board {
 public:
  Board() = default;

  // Throws std::invalid_argument for a bad label or an occupied cell.
  void place(const Piece& piece);
  // Returns the removed piece, if any.
  std::optional<Piece> remove(int label);

  std::optional<Piece> at(int label) const;
  bool occupied(int label) const { return cells_[index(label)].shape >= 0; }

  // Pieces ordered by cell label.
  std::vector<Piece> pieces() const;
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator==(const Board&) const = default;

 private:
  struct Cell {
    std::int16_t shape = -1;
    std::int16_t color = -1;
    bool operator==(const Cell&) const = default;
  };

  static std::size_t index(int label);

  std::array<Cell, kCellCount> cells_{};
  int size_ = 0;
};

}  // namespace gohr
