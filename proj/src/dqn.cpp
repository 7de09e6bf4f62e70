#include "gohr/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gohr::dqn {

namespace {

std::size_t action_index(const Move& m) {
  return static_cast<std::size_t>((m.cell() - 1) * kBucketCount + m.bucket);
}

}  // namespace

void Hyperparams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(buffer_size, "buffer_size");
  positive(batch_size, "batch_size");
  positive(horizon, "horizon");
  positive(episodes_per_trial, "episodes_per_trial");
  positive(trials, "trials");
  positive(epsilon_start, "epsilon_start");
  positive(epsilon_min, "epsilon_min");
  positive(epsilon_decay_steps, "epsilon_decay_steps");
  positive(gamma, "gamma");
  positive(learning_rate, "learning_rate");
  positive(episodes_per_target, "episodes_per_target");
  if (!(epsilon_min < epsilon_start) || epsilon_start > 1.0) {
    throw std::invalid_argument("need epsilon_min < epsilon_start <= 1");
  }
}

double epsilon(std::int64_t total_moves, const Hyperparams& hyper) {
  if (total_moves < 0) throw std::invalid_argument("total_moves must be non-negative");
  return hyper.epsilon_min + (hyper.epsilon_start - hyper.epsilon_min) *
                                 std::exp(-static_cast<double>(total_moves) / hyper.epsilon_decay_steps);
}

const std::vector<Move>& all_actions() {
  static const std::vector<Move> actions = [] {
    std::vector<Move> out;
    out.reserve(kActionCount);
    for (int cell = 1; cell <= kCellCount; ++cell) {
      for (int b = 0; b < kBucketCount; ++b) out.push_back(Move::at_cell(cell, b));
    }
    return out;
  }();
  return actions;
}

double q_value(std::span<const double> theta, const FeatureVector& phi) {
  if (theta.size() != phi.dimension()) {
    throw std::invalid_argument("parameter dimension " + std::to_string(theta.size()) +
                                " does not match feature dimension " +
                                std::to_string(phi.dimension()));
  }
  double q = 0.0;
  for (auto i : phi.active()) q += theta[i];
  return q;
}

std::vector<FeatureVector> featurize_actions(const Board& board,
                                             const std::optional<LastAccepted>& last,
                                             const FeatureLayout& layout) {
  std::vector<FeatureVector> out;
  out.reserve(kActionCount);
  for (const Move& m : all_actions()) out.push_back(featurize(board, last, m, layout));
  return out;
}

double max_q(std::span<const double> theta, std::span<const FeatureVector> actions) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& phi : actions) best = std::max(best, q_value(theta, phi));
  return best;
}

Move select_action(std::span<const FeatureVector> action_features, std::span<const double> theta,
                   double eps, Rng& rng) {
  const auto& actions = all_actions();
  if (action_features.size() != actions.size()) {
    throw std::invalid_argument("expected features for all 144 actions");
  }
  if (rng.bernoulli(eps)) return actions[rng.below(actions.size())];

  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < action_features.size(); ++i) {
    const double q = q_value(theta, action_features[i]);
    if (q > best) {
      best = q;
      ties.assign(1, i);
    } else if (q == best) {
      ties.push_back(i);
    }
  }
  return actions[ties[rng.below(ties.size())]];
}

Move select_action(const GameState& state, std::span<const double> theta, double eps, Rng& rng,
                   const FeatureLayout& layout) {
  const auto features = featurize_actions(state.board, last_accepted_step(state), layout);
  return select_action(features, theta, eps, rng);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("cannot sample an empty replay buffer");
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = rng.below(items_.size());
  return out;
}

double bootstrap_target(const Transition& t, const Hyperparams& hyper) {
  const bool bootstrap = hyper.literal_terminal ? t.terminal : !t.terminal;
  return t.reward + (bootstrap ? hyper.gamma * t.next_max_q : 0.0);
}

double batch_loss(std::span<const double> theta, std::span<const BatchItem> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double sum = 0.0;
  for (const auto& item : batch) {
    const double r = item.target - q_value(theta, item.phi);
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

std::vector<double> batch_gradient(std::span<const double> theta, std::span<const BatchItem> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<double> grad(theta.size(), 0.0);
  const double scale = -2.0 / static_cast<double>(batch.size());
  for (const auto& item : batch) {
    const double r = item.target - q_value(theta, item.phi);
    for (auto i : item.phi.active()) grad[i] += scale * r;
  }
  return grad;
}

void sgd_step(std::vector<double>& theta, std::span<const BatchItem> batch, double learning_rate) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  // Residuals use the pre-step parameters for every item.
  std::vector<double> residual(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    residual[j] = batch[j].target - q_value(theta, batch[j].phi);
  }
  const double scale = learning_rate * 2.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    for (auto i : batch[j].phi.active()) theta[i] += scale * residual[j];
  }
}

TrialResult train_trial(std::shared_ptr<const RuleSpec> rule, const BoardSupply& boards,
                        const Hyperparams& hyper, std::uint64_t seed, bool record_transcript) {
  hyper.validate();
  if (!rule) throw std::invalid_argument("no rule");
  const FeatureSet& features = rule->features;
  const FeatureLayout layout = FeatureLayout::for_features(features);

  TrialResult result;
  std::vector<double> theta(layout.dimension, 0.0);
  std::vector<double> target(layout.dimension, 0.0);
  ReplayBuffer buffer(static_cast<std::size_t>(hyper.buffer_size));
  Rng action_rng(derive_seed(seed, 1));
  Rng board_rng(derive_seed(seed, 2));
  Rng batch_rng(derive_seed(seed, 3));
  std::int64_t total_moves = 0;
  std::vector<BatchItem> batch(static_cast<std::size_t>(hyper.batch_size));

  for (int episode = 0; episode < hyper.episodes_per_trial; ++episode) {
    if (episode > 0 && episode % hyper.episodes_per_target == 0) {
      target = theta;
      for (std::size_t i = 0; i < buffer.size(); ++i) {
        buffer.at(i).next_max_q = max_q(target, buffer.at(i).next);
      }
    }

    GameState state = init_episode(
        rule, boards.board_for_episode(static_cast<std::size_t>(episode), features, board_rng));
    std::optional<LastAccepted> last;
    std::vector<FeatureVector> current = featurize_actions(state.board, last, layout);
    EpisodeStats stats;
    stats.episode = episode;

    for (int t = 0; t < hyper.horizon && !state.episode_over; ++t) {
      const double eps = epsilon(total_moves, hyper);
      const Move action = select_action(current, theta, eps, action_rng);
      const FeatureVector phi = current[action_index(action)];
      const auto piece = state.board.at(action.cell());
      const Judgment judgment = apply_move(state, action);
      ++total_moves;
      if (judgment.accepted()) {
        last = LastAccepted{piece->shape, piece->color, action.bucket};
      } else {
        ++stats.errors;
      }
      if (record_transcript) result.transcript.push_back({episode, t, action, judgment, last});

      Transition transition;
      transition.phi = phi;
      transition.reward = judgment.reward;
      transition.terminal = state.episode_over || t + 1 == hyper.horizon;
      current = featurize_actions(state.board, last, layout);
      transition.next = current;
      transition.next_max_q = max_q(target, transition.next);
      buffer.push(std::move(transition));

      const auto picks = buffer.sample(batch.size(), batch_rng);
      for (std::size_t j = 0; j < picks.size(); ++j) {
        const Transition& sampled = buffer.at(picks[j]);
        batch[j] = {sampled.phi, bootstrap_target(sampled, hyper)};
      }
      sgd_step(theta, batch, hyper.learning_rate);
    }

    stats.moves = state.move_count;
    stats.cleared = state.board.empty();
    result.episodes.push_back(stats);
  }
  result.theta = std::move(theta);
  return result;
}

std::string format_theta(std::span<const double> theta, const FeatureLayout& layout) {
  if (theta.size() != layout.dimension) throw std::invalid_argument("theta dimension mismatch");
  std::string out = "gohr-theta-1 colors=" + std::to_string(layout.colors) +
                    " shapes=" + std::to_string(layout.shapes) +
                    " dimension=" + std::to_string(layout.dimension) + "\n";
  char buf[40];
  for (double w : theta) {
    std::snprintf(buf, sizeof buf, "%.17g\n", w);
    out += buf;
  }
  return out;
}

std::vector<double> parse_theta(std::string_view text, const FeatureLayout& layout) {
  std::istringstream in{std::string(text)};
  std::string header;
  std::getline(in, header);
  const std::string want = "gohr-theta-1 colors=" + std::to_string(layout.colors) +
                           " shapes=" + std::to_string(layout.shapes) +
                           " dimension=" + std::to_string(layout.dimension);
  if (header != want) throw std::invalid_argument("weight header '" + header + "' does not match '" + want + "'");
  std::vector<double> theta;
  theta.reserve(layout.dimension);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      theta.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad weight '" + line + "'");
    }
  }
  if (theta.size() != layout.dimension) throw std::invalid_argument("weight count does not match dimension");
  return theta;
}

}  // namespace gohr::dqn
