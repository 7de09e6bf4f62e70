#include "doctest.h"

#include <algorithm>
#include <memory>

#include "gohr/features.hpp"
#include "support/oracles.hpp"

using namespace gohr;

namespace {

const FeatureSet kF = FeatureSet::defaults();

std::vector<std::size_t> bits(const FeatureVector& v) {
  std::vector<std::size_t> out(v.active().begin(), v.active().end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("default layout") {
  const auto layout = FeatureLayout::for_features(kF);
  CHECK(layout.dimension == 3720);
  CHECK(layout.unary_size() == 12);
  CHECK(layout.binary_size() == 48);
  CHECK(layout.last_binary_size() == 60);
  CHECK(layout.last_quaternary_size() == 3600);
  CHECK(feature_dimension(4, 4) == 3720);
}

TEST_CASE("closed-form dimension matches the table walk") {
  for (int c = 1; c <= 6; ++c) {
    for (int s = 1; s <= 6; ++s) {
      const std::size_t closed =
          static_cast<std::size_t>((c + s + 4) + (c * s + 4 * c + 4 * s) + ((c + 1) * c + (s + 1) * s + 20) +
                                   ((s + 1) * (c + 1) + 5 * (s + 1) + 5 * (c + 1)) * (c * s + 4 * s + 4 * c));
      CHECK(feature_dimension(c, s) == closed);
      CHECK(FeatureLayout::make(c, s).dimension == closed);
      CHECK(testing::reference_dimension(c, s) == closed);
    }
  }
}

TEST_CASE("first move on a red star toward bucket 2") {
  const auto layout = FeatureLayout::for_features(kF);
  Board board;
  board.place({8, 3, 0});
  const auto phi = featurize(board, std::nullopt, Move::at_cell(8, 2), layout);
  // Hand-walked indices: unary red, star, b2; the three current pairs; the
  // three (none, current) pairs; the nine (none, none) x current-pair bits.
  const std::vector<std::size_t> expected{0,   7,   10,  15,   30,   58,   76,   99,   118,
                                          516, 918, 1306, 1716, 2118, 2506, 2916, 3318, 3706};
  CHECK(bits(phi) == expected);
  CHECK(bits(phi) == testing::reference_features(4, 4, -1, -1, -1, 3, 0, 2));
}

TEST_CASE("empty cells set only bucket bits") {
  const auto layout = FeatureLayout::for_features(kF);
  const auto phi = featurize(Board{}, std::nullopt, Move::at_cell(1, 3), layout);
  CHECK(phi.popcount() == 2);
  CHECK(bits(phi) == testing::reference_features(4, 4, -1, -1, -1, -1, -1, 3));
  const auto with_last = featurize(Board{}, LastAccepted{1, 2, 0}, Move::at_cell(1, 3), layout);
  CHECK(with_last.popcount() == 2);
}

TEST_CASE("random pairs match the table walk") {
  Rng rng(12);
  for (const auto& features : {kF, FeatureSet{{"a", "b", "c"}, {"x", "y", "z", "w", "v"}}}) {
    const auto layout = FeatureLayout::for_features(features);
    const int C = static_cast<int>(features.colors.size());
    const int S = static_cast<int>(features.shapes.size());
    for (int i = 0; i < 2000; ++i) {
      const Board board = testing::random_board(rng, features, rng.uniform_int(1, 20));
      std::optional<LastAccepted> last;
      if (rng.bernoulli(0.7)) {
        last = LastAccepted{static_cast<int>(rng.below(static_cast<std::uint64_t>(S))),
                            static_cast<int>(rng.below(static_cast<std::uint64_t>(C))),
                            static_cast<int>(rng.below(4))};
      }
      const Move move = testing::random_move(rng, board);
      const auto phi = featurize(board, last, move, layout);
      const auto piece = board.at(move.cell());
      const auto ref = testing::reference_features(C, S, last ? last->shape : -1, last ? last->color : -1,
                                                   last ? last->bucket : -1, piece ? piece->shape : -1,
                                                   piece ? piece->color : -1, move.bucket);
      REQUIRE(bits(phi) == ref);
      REQUIRE(phi.popcount() == (piece ? 18U : 2U));
    }
  }
}

TEST_CASE("last step follows the transcript") {
  Rng rng(13);
  const auto layout = FeatureLayout::for_features(kF);
  for (int trial = 0; trial < 200; ++trial) {
    const auto spec = std::make_shared<const RuleSpec>(testing::random_rule(rng, kF));
    auto s = init_episode(spec, testing::random_board(rng, kF, 9));
    std::optional<LastAccepted> tracked;
    for (int k = 0; k < 30 && !s.episode_over; ++k) {
      const Move m = testing::random_move(rng, s.board);
      const auto piece = s.board.at(m.cell());
      if (apply_move(s, m).accepted()) tracked = LastAccepted{piece->shape, piece->color, m.bucket};
      REQUIRE(last_accepted_step(s) == tracked);
      if (s.registers.p) CHECK(tracked->bucket == *s.registers.p);
      const Move next = testing::random_move(rng, s.board);
      REQUIRE(featurize(s, next, layout) == featurize(s.board, tracked, next, layout));
    }
  }
}

TEST_CASE("feature vector basics") {
  FeatureVector v(10);
  v.set(3);
  v.set(3);
  v.set(9);
  CHECK(v.popcount() == 2);
  CHECK(v.test(9));
  CHECK(!v.test(4));
  CHECK(v.dense() == std::vector<std::uint8_t>{0, 0, 0, 1, 0, 0, 0, 0, 0, 1});
  CHECK_THROWS_AS(v.set(10), std::out_of_range);
  FeatureVector w(10);
  w.set(9);
  w.set(3);
  CHECK(v == w);
}

}  // TEST_SUITE
