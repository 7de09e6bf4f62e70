#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gohr/board.hpp"
#include "gohr/engine.hpp"
#include "gohr/rule.hpp"

namespace gohr {

// Index layout of the Boolean (state, action) features.
//
// Four families are stacked in this order:
//   1. unary:      color, shape, bucket of the current action
//   2. binary:     color x shape, color x bucket, shape x bucket
//   3. last x now: (last color | none) x color, (last shape | none) x shape,
//                  (last bucket | none) x bucket
//   4. 4-ary:      last pair in {(shape, color), (shape, bucket),
//                  (color, bucket)} crossed with current pair in the same
//                  three kinds, nine blocks, last-pair-major
// Within each block indices are lexicographic over the tuple, using the
// feature-set order for colors and shapes, buckets 0..3, and "none" last.
// "Last" refers to the most recent accepted move of the episode; before any
// accepted move every last component is "none".
struct FeatureLayout {
  int colors = 0;
  int shapes = 0;

  std::size_t unary_offset = 0;
  std::size_t binary_offset = 0;
  std::size_t last_binary_offset = 0;
  std::size_t last_quaternary_offset = 0;
  std::size_t dimension = 0;

  static FeatureLayout make(int colors, int shapes);
  static FeatureLayout for_features(const FeatureSet& features);

  std::size_t unary_size() const { return binary_offset - unary_offset; }
  std::size_t binary_size() const { return last_binary_offset - binary_offset; }
  std::size_t last_binary_size() const { return last_quaternary_offset - last_binary_offset; }
  std::size_t last_quaternary_size() const { return dimension - last_quaternary_offset; }

  bool operator==(const FeatureLayout&) const = default;
};

// Closed-form dimension for C colors and S shapes.
std::size_t feature_dimension(int colors, int shapes);

// Shape, color, and bucket of the last accepted move.
struct LastAccepted {
  int shape = 0;
  int color = 0;
  int bucket = 0;

  bool operator==(const LastAccepted&) const = default;
};

std::optional<LastAccepted> last_accepted_step(const GameState& state);

// Sparse Boolean vector. At most 18 bits are ever set.
class FeatureVector {
 public:
  static constexpr std::size_t kMaxActive = 18;

  FeatureVector() = default;
  explicit FeatureVector(std::size_t dimension) : dimension_(static_cast<std::uint32_t>(dimension)) {}

  void set(std::size_t index);

  std::size_t dimension() const { return dimension_; }
  std::size_t popcount() const { return size_; }
  std::span<const std::uint32_t> active() const { return {indices_.data(), size_}; }
  bool test(std::size_t index) const;
  std::vector<std::uint8_t> dense() const;

  bool operator==(const FeatureVector& other) const;

 private:
  std::uint32_t dimension_ = 0;
  std::uint8_t size_ = 0;
  std::array<std::uint32_t, kMaxActive> indices_{};
};

FeatureVector featurize(const Board& board, const std::optional<LastAccepted>& last,
                        const Move& action, const FeatureLayout& layout);

FeatureVector featurize(const GameState& state, const Move& action, const FeatureLayout& layout);

}  // namespace gohr
