#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gohr/board_gen.hpp"
#include "gohr/engine.hpp"
#include "gohr/features.hpp"
#include "gohr/rng.hpp"
#include "gohr/rule.hpp"

namespace gohr::dqn {

inline constexpr int kActionCount = kCellCount * kBucketCount;

struct Hyperparams {
  int buffer_size = 1000;
  int batch_size = 128;
  int horizon = 100;
  int episodes_per_trial = 200;
  int trials = 100;
  double epsilon_start = 0.9;
  double epsilon_min = 0.001;
  double epsilon_decay_steps = 200.0;
  // Undiscounted by default: the episode value is the plain sum of rewards.
  double gamma = 1.0;
  double learning_rate = 0.01;
  // Episodes between target-parameter refreshes.
  int episodes_per_target = 5;
  // Bootstrap only at terminal successors, a literal reading of the usual
  // training loop pseudocode. Off by default.
  bool literal_terminal = false;

  // Throws std::invalid_argument.
  void validate() const;

  bool operator==(const Hyperparams&) const = default;
};

// eps_min + (eps_start - eps_min) * exp(-total_moves / decay_steps).
double epsilon(std::int64_t total_moves, const Hyperparams& hyper = {});

// All 144 (row, column, bucket) actions, cell-major then bucket.
const std::vector<Move>& all_actions();

// Throws std::invalid_argument on a dimension mismatch.
double q_value(std::span<const double> theta, const FeatureVector& phi);

// Features of every action in all_actions() order for one state.
std::vector<FeatureVector> featurize_actions(const Board& board,
                                             const std::optional<LastAccepted>& last,
                                             const FeatureLayout& layout);

double max_q(std::span<const double> theta, std::span<const FeatureVector> actions);

// Epsilon-greedy over all 144 actions; greedy ties are broken uniformly.
Move select_action(std::span<const FeatureVector> action_features, std::span<const double> theta,
                   double eps, Rng& rng);

Move select_action(const GameState& state, std::span<const double> theta, double eps, Rng& rng,
                   const FeatureLayout& layout);

struct Transition {
  FeatureVector phi;
  double reward = 0.0;
  bool terminal = false;
  std::vector<FeatureVector> next;  // successor features for every action
  double next_max_q = 0.0;          // cached under the current target parameters
};

// Fixed-capacity FIFO of the most recent transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  Transition& at(std::size_t i) { return items_.at(i); }

  // Indices drawn uniformly with replacement from the current contents.
  std::vector<std::size_t> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct BatchItem {
  FeatureVector phi;
  double target = 0.0;
};

// y = r + gamma * max_a' Q(s', a'; target) for non-terminal successors and
// y = r otherwise, or the inverted indicator when literal_terminal is set.
double bootstrap_target(const Transition& t, const Hyperparams& hyper);

// (1/B) * sum_j (y_j - theta . phi_j)^2
double batch_loss(std::span<const double> theta, std::span<const BatchItem> batch);

// Gradient of batch_loss with respect to theta; dense, length D.
std::vector<double> batch_gradient(std::span<const double> theta, std::span<const BatchItem> batch);

// theta -= learning_rate * batch_gradient(theta, batch), touching only the
// active coordinates.
void sgd_step(std::vector<double>& theta, std::span<const BatchItem> batch, double learning_rate);

struct EpisodeStats {
  int episode = 0;
  int errors = 0;
  int moves = 0;
  bool cleared = false;
};

struct TranscriptRow {
  int episode = 0;
  int step = 0;
  Move move;
  Judgment judgment;
  // The agent's last-successful-step snapshot after this move.
  std::optional<LastAccepted> last;
};

struct TrialResult {
  std::vector<EpisodeStats> episodes;
  std::vector<double> theta;
  std::vector<TranscriptRow> transcript;  // filled when requested
};

// One learning run: episodes_per_trial episodes of at most `horizon` moves.
TrialResult train_trial(std::shared_ptr<const RuleSpec> rule, const BoardSupply& boards,
                        const Hyperparams& hyper, std::uint64_t seed,
                        bool record_transcript = false);

// Flat weight export: a header line
//   gohr-theta-1 colors=<C> shapes=<S> dimension=<D>
// followed by one weight per line in feature-index order.
std::string format_theta(std::span<const double> theta, const FeatureLayout& layout);

// Throws std::invalid_argument when the header does not match `layout`.
std::vector<double> parse_theta(std::string_view text, const FeatureLayout& layout);

}  // namespace gohr::dqn
