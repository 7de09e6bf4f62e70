#include "gohr/features.hpp"

#include <algorithm>
#include <stdexcept>

namespace gohr {

namespace {

constexpr std::size_t kBuckets = kBucketCount;

}  // namespace

std::size_t feature_dimension(int colors, int shapes) {
  const auto c = static_cast<std::size_t>(colors);
  const auto s = static_cast<std::size_t>(shapes);
  const std::size_t unary = c + s + kBuckets;
  const std::size_t binary = c * s + kBuckets * c + kBuckets * s;
  const std::size_t last_binary = (c + 1) * c + (s + 1) * s + (kBuckets + 1) * kBuckets;
  const std::size_t last_pairs = (s + 1) * (c + 1) + (kBuckets + 1) * (s + 1) + (kBuckets + 1) * (c + 1);
  const std::size_t current_pairs = c * s + kBuckets * s + kBuckets * c;
  return unary + binary + last_binary + last_pairs * current_pairs;
}

FeatureLayout FeatureLayout::make(int colors, int shapes) {
  if (colors < 1 || shapes < 1) throw std::invalid_argument("feature layout needs colors and shapes");
  FeatureLayout l;
  l.colors = colors;
  l.shapes = shapes;
  const auto c = static_cast<std::size_t>(colors);
  const auto s = static_cast<std::size_t>(shapes);
  l.unary_offset = 0;
  l.binary_offset = c + s + kBuckets;
  l.last_binary_offset = l.binary_offset + c * s + kBuckets * c + kBuckets * s;
  l.last_quaternary_offset =
      l.last_binary_offset + (c + 1) * c + (s + 1) * s + (kBuckets + 1) * kBuckets;
  l.dimension = feature_dimension(colors, shapes);
  return l;
}

FeatureLayout FeatureLayout::for_features(const FeatureSet& features) {
  return make(static_cast<int>(features.colors.size()), static_cast<int>(features.shapes.size()));
}

std::optional<LastAccepted> last_accepted_step(const GameState& state) {
  const auto entry = last_accepted(state);
  if (!entry || !entry->piece) return std::nullopt;
  return LastAccepted{entry->piece->shape, entry->piece->color, entry->move.bucket};
}

void FeatureVector::set(std::size_t index) {
  if (index >= dimension_) throw std::out_of_range("feature index out of range");
  if (test(index)) return;
  if (size_ == kMaxActive) throw std::length_error("too many active features");
  indices_[size_++] = static_cast<std::uint32_t>(index);
}

bool FeatureVector::test(std::size_t index) const {
  const auto a = active();
  return std::find(a.begin(), a.end(), static_cast<std::uint32_t>(index)) != a.end();
}

std::vector<std::uint8_t> FeatureVector::dense() const {
  std::vector<std::uint8_t> out(dimension_, 0);
  for (auto i : active()) out[i] = 1;
  return out;
}

bool FeatureVector::operator==(const FeatureVector& other) const {
  if (dimension_ != other.dimension_ || size_ != other.size_) return false;
  auto a = std::vector<std::uint32_t>(active().begin(), active().end());
  auto b = std::vector<std::uint32_t>(other.active().begin(), other.active().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

FeatureVector featurize(const Board& board, const std::optional<LastAccepted>& last,
                        const Move& action, const FeatureLayout& layout) {
  validate_move(action);
  const std::size_t C = static_cast<std::size_t>(layout.colors);
  const std::size_t S = static_cast<std::size_t>(layout.shapes);
  FeatureVector phi(layout.dimension);

  const auto piece = board.at(action.cell());
  const bool occupied = piece.has_value();
  const std::size_t color = occupied ? static_cast<std::size_t>(piece->color) : C;
  const std::size_t shape = occupied ? static_cast<std::size_t>(piece->shape) : S;
  const auto bucket = static_cast<std::size_t>(action.bucket);
  if (occupied && (color >= C || shape >= S)) {
    throw std::out_of_range("piece features outside the layout");
  }

  // "None" sits one past the last named value.
  const std::size_t last_color = last ? static_cast<std::size_t>(last->color) : C;
  const std::size_t last_shape = last ? static_cast<std::size_t>(last->shape) : S;
  const std::size_t last_bucket = last ? static_cast<std::size_t>(last->bucket) : kBuckets;

  // 1. unary
  std::size_t base = layout.unary_offset;
  if (occupied) {
    phi.set(base + color);
    phi.set(base + C + shape);
  }
  phi.set(base + C + S + bucket);

  // 2. binary
  base = layout.binary_offset;
  if (occupied) {
    phi.set(base + color * S + shape);
    phi.set(base + C * S + color * kBuckets + bucket);
    phi.set(base + C * S + C * kBuckets + shape * kBuckets + bucket);
  }

  // 3. last x current
  base = layout.last_binary_offset;
  if (occupied) {
    phi.set(base + last_color * C + color);
    phi.set(base + (C + 1) * C + last_shape * S + shape);
  }
  phi.set(base + (C + 1) * C + (S + 1) * S + last_bucket * kBuckets + bucket);

  // 4. last pair x current pair
  if (occupied) {
    const std::array<std::size_t, 3> last_index{
        last_shape * (C + 1) + last_color,
        last_shape * (kBuckets + 1) + last_bucket,
        last_color * (kBuckets + 1) + last_bucket,
    };
    const std::array<std::size_t, 3> last_size{
        (S + 1) * (C + 1),
        (S + 1) * (kBuckets + 1),
        (C + 1) * (kBuckets + 1),
    };
    const std::array<std::size_t, 3> current_index{
        shape * C + color,
        shape * kBuckets + bucket,
        color * kBuckets + bucket,
    };
    const std::array<std::size_t, 3> current_size{S * C, S * kBuckets, C * kBuckets};

    base = layout.last_quaternary_offset;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        phi.set(base + last_index[i] * current_size[j] + current_index[j]);
        base += last_size[i] * current_size[j];
      }
    }
  }
  return phi;
}

FeatureVector featurize(const GameState& state, const Move& action, const FeatureLayout& layout) {
  return featurize(state.board, last_accepted_step(state), action, layout);
}

}  // namespace gohr
