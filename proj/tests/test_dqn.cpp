#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "gohr/dqn.hpp"
#include "support/oracles.hpp"

using namespace gohr;
using namespace gohr::dqn;

namespace {

const FeatureSet kF = FeatureSet::defaults();

std::shared_ptr<const RuleSpec> rule(std::string_view text) {
  return std::make_shared<const RuleSpec>(parse_rule(text, kF));
}

FeatureVector random_phi(Rng& rng, std::size_t dim, std::size_t k) {
  FeatureVector v(dim);
  while (v.popcount() < k) v.set(rng.below(dim));
  return v;
}

// Pearson chi-square over `cells` equiprobable outcomes.
double chi_square(const std::vector<int>& counts, int draws) {
  const double expected = static_cast<double>(draws) / static_cast<double>(counts.size());
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  return chi2;
}

int index_of(const Move& m) { return (m.cell() - 1) * 4 + m.bucket; }

// 0.999 quantile of chi-square with 143 degrees of freedom.
constexpr double kChi2Crit143 = 205.0;

}  // namespace

TEST_SUITE("dqn") {

TEST_CASE("epsilon schedule") {
  const Hyperparams h;
  CHECK(epsilon(0, h) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(std::abs(epsilon(200, h) - (0.001 + 0.899 * std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(epsilon(200, h) - 0.33172) < 1e-4);
  CHECK(std::abs(epsilon(2000, h) - (0.001 + 0.899 * std::exp(-10.0))) < 1e-12);
  CHECK(std::abs(epsilon(100'000'000, h) - 0.001) < 1e-12);
  double prev = 1.0;
  for (std::int64_t m = 0; m < 5000; m += 7) {
    const double e = epsilon(m, h);
    CHECK(e <= prev);
    CHECK(e >= 0.001);
    CHECK(e <= 0.9);
    prev = e;
  }
}

TEST_CASE("action set") {
  const auto& actions = all_actions();
  CHECK(actions.size() == 144);
  std::set<Move> unique(actions.begin(), actions.end());
  CHECK(unique.size() == 144);
  for (std::size_t i = 0; i < actions.size(); ++i) CHECK(index_of(actions[i]) == static_cast<int>(i));
}

TEST_CASE("q_value") {
  const auto layout = FeatureLayout::for_features(kF);
  Board board;
  board.place({4, 1, 2});
  const auto phi = featurize(board, std::nullopt, Move::at_cell(4, 1), layout);
  std::vector<double> theta(layout.dimension, 0.0);
  CHECK(q_value(theta, phi) == 0.0);
  const std::size_t on = phi.active()[0];
  theta[on] = 1.0;
  CHECK(q_value(theta, phi) == 1.0);
  theta.assign(layout.dimension, 0.0);
  theta[(on + 1) % layout.dimension] = 1.0;
  CHECK(q_value(theta, phi) == (phi.test((on + 1) % layout.dimension) ? 1.0 : 0.0));
  theta.assign(layout.dimension, 1.0);
  CHECK(q_value(theta, phi) == 18.0);
  CHECK_THROWS_AS(q_value(std::vector<double>(5, 0.0), phi), std::invalid_argument);
}

TEST_CASE("pure exploration is uniform") {
  const auto layout = FeatureLayout::for_features(kF);
  Rng rng(1);
  const Board board = testing::random_board(rng, kF, 9);
  const auto features = featurize_actions(board, std::nullopt, layout);
  std::vector<double> theta(layout.dimension, 0.0);
  for (auto& w : theta) w = rng.uniform01();
  std::vector<int> counts(144, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(index_of(select_action(features, theta, 1.0, rng)))];
  CHECK(chi_square(counts, draws) < kChi2Crit143);
}

TEST_CASE("all-tie greedy choice is uniform") {
  const auto layout = FeatureLayout::for_features(kF);
  Rng rng(2);
  const Board board = testing::random_board(rng, kF, 9);
  const auto features = featurize_actions(board, std::nullopt, layout);
  const std::vector<double> theta(layout.dimension, 0.0);
  std::vector<int> counts(144, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(index_of(select_action(features, theta, 0.0, rng)))];
  CHECK(chi_square(counts, draws) < kChi2Crit143);
}

TEST_CASE("greedy argmax set on the bucket-0 bit") {
  const auto layout = FeatureLayout::for_features(kF);
  Rng rng(3);
  const Board board = testing::random_board(rng, kF, 9);
  const auto features = featurize_actions(board, std::nullopt, layout);
  std::vector<double> theta(layout.dimension, 0.0);
  theta[layout.unary_offset + 4 + 4 + 0] = 1.0;
  // Enumerated argmax set.
  std::set<int> argmax;
  double best = -1;
  for (std::size_t a = 0; a < 144; ++a) best = std::max(best, q_value(theta, features[a]));
  for (std::size_t a = 0; a < 144; ++a) {
    if (q_value(theta, features[a]) == best) argmax.insert(static_cast<int>(a));
  }
  CHECK(argmax.size() == 36);
  for (int a : argmax) CHECK(a % 4 == 0);
  std::set<int> seen;
  for (int i = 0; i < 5000; ++i) {
    const int a = index_of(select_action(features, theta, 0.0, rng));
    CHECK(argmax.count(a) == 1);
    seen.insert(a);
  }
  CHECK(seen == argmax);
}

TEST_CASE("replay buffer keeps the most recent transitions") {
  ReplayBuffer buffer(1000);
  for (int k = 1; k <= 2500; ++k) {
    Transition t;
    t.reward = k;
    buffer.push(std::move(t));
    REQUIRE(buffer.size() == static_cast<std::size_t>(std::min(k, 1000)));
    REQUIRE(buffer.at(0).reward == std::max(1, k - 999));
    REQUIRE(buffer.at(buffer.size() - 1).reward == k);
  }
  Rng rng(4);
  ReplayBuffer small(144);
  for (int k = 0; k < 144; ++k) small.push(Transition{});
  std::vector<int> counts(144, 0);
  const int draws = 144 * 700;
  for (std::size_t i : small.sample(static_cast<std::size_t>(draws), rng)) ++counts[i];
  CHECK(chi_square(counts, draws) < kChi2Crit143);
  CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("bootstrap targets") {
  Transition t;
  t.reward = -1;
  t.next_max_q = 2.5;
  Hyperparams h;
  h.gamma = 0.5;
  t.terminal = false;
  CHECK(bootstrap_target(t, h) == doctest::Approx(0.25));
  t.terminal = true;
  CHECK(bootstrap_target(t, h) == -1.0);
  h.literal_terminal = true;
  CHECK(bootstrap_target(t, h) == doctest::Approx(0.25));
  t.terminal = false;
  CHECK(bootstrap_target(t, h) == -1.0);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(5);
  const std::size_t dim = 300;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> theta(dim);
    for (auto& w : theta) w = rng.uniform01() * 2 - 1;
    std::vector<BatchItem> batch(16);
    for (auto& item : batch) item = {random_phi(rng, dim, 18), rng.uniform01() * 4 - 2};
    const auto grad = batch_gradient(theta, batch);
    const double h = 1e-5;
    for (std::size_t i = 0; i < dim; ++i) {
      auto plus = theta, minus = theta;
      plus[i] += h;
      minus[i] -= h;
      const double numeric = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2 * h);
      const double scale = std::max({1.0, std::abs(numeric), std::abs(grad[i])});
      REQUIRE(std::abs(numeric - grad[i]) / scale <= 1e-5);
    }
  }
}

TEST_CASE("sparse step equals the dense update") {
  Rng rng(6);
  const std::size_t dim = 200;
  std::vector<double> theta(dim);
  for (auto& w : theta) w = rng.uniform01();
  std::vector<BatchItem> batch(32);
  for (auto& item : batch) item = {random_phi(rng, dim, 18), rng.uniform01()};
  const auto grad = batch_gradient(theta, batch);
  auto stepped = theta;
  sgd_step(stepped, batch, 0.01);
  for (std::size_t i = 0; i < dim; ++i) CHECK(stepped[i] == doctest::Approx(theta[i] - 0.01 * grad[i]).epsilon(1e-12));
}

TEST_CASE("wildcard rule errs only on empty cells") {
  Hyperparams h;
  h.episodes_per_trial = 20;
  const auto result = train_trial(rule("(*,*,*,*,[0,1,2,3])"), BoardSupply{}, h, 7);
  REQUIRE(result.episodes.size() == 20);
  for (const auto& e : result.episodes) {
    // Empty cells are still rejected; an all-legal rule only covers pieces.
    CHECK(e.cleared);
    CHECK(e.moves >= 9);
  }
  // On a full board the first move cannot miss.
  Hyperparams tiny;
  tiny.episodes_per_trial = 5;
  tiny.horizon = 1;
  BoardSupply full;
  full.params = GenParams{36, 36, 1, 4, 1, 4};
  for (const auto& e : train_trial(rule("(*,*,*,*,[0,1,2,3])"), full, tiny, 8).episodes) {
    CHECK(e.errors == 0);
    CHECK(e.moves == 1);
  }
}

TEST_CASE("fixed seed reproduces a trial bit for bit") {
  Hyperparams h;
  h.episodes_per_trial = 15;
  const auto cm = rule("(*, star, *, *, 0) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)");
  const auto a = train_trial(cm, BoardSupply{}, h, 99, true);
  const auto b = train_trial(cm, BoardSupply{}, h, 99, true);
  CHECK(a.theta == b.theta);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].errors == b.episodes[i].errors);
    CHECK(a.episodes[i].moves == b.episodes[i].moves);
  }
  const auto c = train_trial(cm, BoardSupply{}, h, 100);
  CHECK(c.theta != a.theta);
}

TEST_CASE("agent snapshot agrees with the engine transcript") {
  Hyperparams h;
  h.episodes_per_trial = 10;
  const auto spec = rule("(*, star, *, *, 0) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)");
  BoardSupply boards;
  boards.fixed = parse_boards("1 star red\n2 circle blue\n9 square black\n20 triangle yellow\n", kF);
  const auto result = train_trial(spec, boards, h, 3, true);
  int episode = -1;
  GameState state;
  for (const auto& row : result.transcript) {
    if (row.episode != episode) {
      episode = row.episode;
      state = init_episode(spec, boards.fixed->front());
    }
    const auto j = apply_move(state, row.move);
    REQUIRE(j == row.judgment);
    REQUIRE(last_accepted_step(state) == row.last);
  }
  int errors = 0;
  for (const auto& e : result.episodes) errors += e.errors;
  CHECK(errors == static_cast<int>(std::count_if(result.transcript.begin(), result.transcript.end(),
                                                 [](const TranscriptRow& r) { return !r.judgment.accepted(); })));
}

TEST_CASE("learning on Color Match lowers late-episode errors") {
  Hyperparams h;
  h.episodes_per_trial = 100;
  const auto cm = rule("(*, star, *, *, 0) (*, triangle, *, *, 1) (*, square, *, *, 2) (*, circle, *, *, 3)");
  // Single runs can stall on empty cells for good; the median run learns.
  std::vector<int> early, late;
  for (std::uint64_t seed = 1; seed <= 9; ++seed) {
    const auto result = train_trial(cm, BoardSupply{}, h, seed);
    int e_sum = 0, l_sum = 0;
    for (int e = 0; e < 10; ++e) e_sum += result.episodes[static_cast<std::size_t>(e)].errors;
    for (int e = 90; e < 100; ++e) l_sum += result.episodes[static_cast<std::size_t>(e)].errors;
    early.push_back(e_sum);
    late.push_back(l_sum);
  }
  std::sort(early.begin(), early.end());
  std::sort(late.begin(), late.end());
  CHECK(late[4] * 10 < early[4]);
}

TEST_CASE("weights export") {
  const auto layout = FeatureLayout::for_features(kF);
  std::vector<double> theta(layout.dimension);
  Rng rng(9);
  for (auto& w : theta) w = rng.uniform01() - 0.5;
  const auto text = format_theta(theta, layout);
  CHECK(text.rfind("gohr-theta-1 colors=4 shapes=4 dimension=3720\n", 0) == 0);
  CHECK(parse_theta(text, layout) == theta);
  CHECK_THROWS_AS(parse_theta(text, FeatureLayout::make(3, 4)), std::invalid_argument);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK_NOTHROW(h.validate());
  h.batch_size = 0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = Hyperparams{};
  h.epsilon_min = 0.95;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
}

}  // TEST_SUITE
