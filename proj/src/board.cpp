#include "gohr/board.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace gohr {

std::size_t Board::index(int label) {
  if (label < 1 || label > kCellCount) {
    throw std::invalid_argument("cell label " + std::to_string(label) + " outside 1-36");
  }
  return static_cast<std::size_t>(label - 1);
}

void Board::place(const Piece& piece) {
  Cell& cell = cells_[index(piece.cell)];
  if (cell.shape >= 0) {
    throw std::invalid_argument("cell " + std::to_string(piece.cell) + " is already occupied");
  }
  constexpr int kMax = std::numeric_limits<std::int16_t>::max();
  if (piece.shape < 0 || piece.color < 0 || piece.shape > kMax || piece.color > kMax) {
    throw std::invalid_argument("piece feature index out of range");
  }
  cell.shape = static_cast<std::int16_t>(piece.shape);
  cell.color = static_cast<std::int16_t>(piece.color);
  ++size_;
}

std::optional<Piece> Board::remove(int label) {
  Cell& cell = cells_[index(label)];
  if (cell.shape < 0) return std::nullopt;
  Piece removed{label, cell.shape, cell.color};
  cell = Cell{};
  --size_;
  return removed;
}

std::optional<Piece> Board::at(int label) const {
  const Cell& cell = cells_[index(label)];
  if (cell.shape < 0) return std::nullopt;
  return Piece{label, cell.shape, cell.color};
}

std::vector<Piece> Board::pieces() const {
  std::vector<Piece> out;
  out.reserve(static_cast<std::size_t>(size_));
  for (int label = 1; label <= kCellCount; ++label) {
    const Cell& cell = cells_[static_cast<std::size_t>(label - 1)];
    if (cell.shape >= 0) out.push_back({label, cell.shape, cell.color});
  }
  return out;
}

}  // namespace gohr
