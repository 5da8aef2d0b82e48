#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vortexswim/env.hpp"

// Recurrent deep Q-learning: stacked LSTM layers over the observation
// window, an affine head with one output per action, a target network,
// replay memory and the epsilon-greedy training loop.
namespace vortexswim::dqn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct NetShape {
  int input = env::kObsDim + 1;  // observation + previous action per step
  int hidden = 64;
  int layers = 3;
  int actions = 5;
  int steps = env::kHistory;
};

// Offsets of one tensor inside the flat parameter vector.
struct Block {
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return std::size_t(rows) * cols; }
};

// Layer l: W_l (4H x (H + in_l)) with gate row blocks f, i, o, C~ acting on
// [h_{t-1}, x_t], then b_l (4H x 1); then the head W_q (A x H), b_q (A x 1).
// All matrices column-major in the flat vector.
class Network {
 public:
  Network() = default;
  explicit Network(const NetShape& shape);

  const NetShape& shape() const { return shape_; }
  std::size_t size() const { return params_.size(); }
  VectorXd& params() { return params_; }
  const VectorXd& params() const { return params_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  int layer_input(int l) const { return l == 0 ? shape_.input : shape_.hidden; }

  const Block& weight(int l) const { return blocks_[2 * l]; }
  const Block& bias(int l) const { return blocks_[2 * l + 1]; }
  const Block& head_weight() const { return blocks_[2 * shape_.layers]; }
  const Block& head_bias() const { return blocks_[2 * shape_.layers + 1]; }

  Eigen::Map<const MatrixXd> view(const Block& b) const {
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<MatrixXd> view(const Block& b) { return {params_.data() + b.offset, b.rows, b.cols}; }

  // Uniform in +-1/sqrt(fan_in), forget-gate bias +1.
  void initialize(std::uint64_t seed);

 private:
  NetShape shape_;
  std::vector<Block> blocks_;
  VectorXd params_;
};

// One LSTM step for a batch (columns):
//   f = s(W_f [h, x] + b_f), i = s(W_i [h, x] + b_i), o = s(W_o [h, x] + b_o),
//   C~ = tanh(W_C [h, x] + b_C), C' = f * C + i * C~, h' = o * tanh(C').
struct CellOutput {
  MatrixXd h, c;
};
CellOutput lstm_cell(const MatrixXd& x, const MatrixXd& h, const MatrixXd& c,
                     const Eigen::Ref<const MatrixXd>& w, const Eigen::Ref<const VectorXd>& b);

// Network input for a window: `steps` columns, oldest observation first,
// previous action appended to every step. Result is input x steps.
MatrixXd sequence_input(const env::StateWindow& s);

VectorXd q_forward(const Network& net, const env::StateWindow& s);
// Q-values for a batch: actions x batch.
MatrixXd q_forward_batch(const Network& net, std::span<const env::StateWindow* const> states);

struct Transition {
  env::StateWindow s{};
  int a = 0;
  double r = 0.0;
  env::StateWindow s_next{};
  bool done = false;  // true terminal: no bootstrap
};

// y = r if done, else r + gamma max_a' q_next(a').
double td_target(double r, bool done, const VectorXd& q_next, double gamma);
std::vector<double> td_targets(const Network& target, std::span<const Transition* const> batch,
                               double gamma);

// L = mean_j (Q(s_j, a_j) - y_j)^2 and dL/dparams by backpropagation through
// time. Throws TrainingDivergedError on a non-finite loss or gradient.
struct LossGrad {
  double loss = 0.0;
  VectorXd grad;
};
LossGrad loss_and_gradient(const Network& net, std::span<const Transition* const> batch,
                           std::span<const double> y);

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  VectorXd m, v;
  std::uint64_t t = 0;

  void reset(std::size_t n);
  // Bias-corrected update; the moments are sized on first use.
  void step(VectorXd& params, const VectorXd& grad);
};

// Hard copy target <- value.
void sync_target(const Network& value, Network& target);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  std::size_t cursor() const { return cursor_; }
  void push(const Transition& t);
  // Slot i in storage order (not age order).
  const Transition& at(std::size_t i) const { return data_[i]; }
  // Distinct slot indices, uniform without replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  void restore(std::vector<Transition> data, std::size_t cursor);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

struct Schedule {
  double eps_max = 1.0;
  double eps_min = 0.05;
  double eps_decay = 4.75e-5;  // per control step
  double gamma = 0.99;
  double lr = 1e-3;
  int target_sync = 100;       // gradient steps
};

// G_t = sum_{k >= t} gamma^(k - t) r_k for every t of an episode.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

// max(eps_min, eps_max - decay * step).
double epsilon_at(std::uint64_t step, const Schedule& s = {});

// Uniform random action with probability eps, else the lowest-index argmax.
int select_action(const VectorXd& q, double eps, std::mt19937_64& rng);
int argmax(const VectorXd& q);

struct AgentConfig {
  NetShape net;
  Schedule schedule;
  int batch = 100;
  int replay = 5000;
  std::uint64_t seed = 1;
};

struct EpisodeLog {
  int episode = 0;
  int steps = 0;
  double cumulative_reward = 0.0;
  env::Outcome outcome = env::Outcome::Running;
};

std::string reward_log_header();
std::string reward_log_row(const EpisodeLog& e);

// Seed of the environment reset for an episode.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode);

class Agent {
 public:
  explicit Agent(const AgentConfig& cfg);

  const AgentConfig& config() const { return cfg_; }
  const Network& value() const { return value_; }
  Network& value() { return value_; }
  const Network& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  const Adam& optimizer() const { return adam_; }
  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t grad_steps() const { return grad_steps_; }
  std::uint64_t syncs() const { return syncs_; }
  int episodes_done() const { return episodes_; }
  double epsilon() const { return epsilon_at(env_steps_, cfg_.schedule); }

  int act(const env::StateWindow& s);
  // Stores the transition and, once the buffer holds a batch, takes one
  // gradient step (syncing the target every target_sync steps). Returns the
  // loss, or NaN when no step was taken.
  double observe(const Transition& t);
  // One full episode; `on_step` sees every step (for trajectories).
  EpisodeLog run_episode(env::Environment& e,
                         const std::function<void(const env::StepResult&)>& on_step = {});

  // "VSWQ1" checkpoint: network manifest and parameters, then the target
  // network, Adam state and everything else needed to continue bitwise.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  AgentConfig cfg_;
  Network value_, target_;
  Adam adam_;
  ReplayBuffer replay_;
  std::mt19937_64 rng_;
  std::uint64_t env_steps_ = 0;
  std::uint64_t grad_steps_ = 0;
  std::uint64_t syncs_ = 0;
  int episodes_ = 0;
};

// Reads only the network part of a checkpoint; throws IoError on a bad
// magic or a manifest that does not match `shape`.
Network load_network(const std::filesystem::path& path, const NetShape& shape);
NetShape checkpoint_shape(const std::filesystem::path& path);

struct Rollout {
  double start_x = 0.0;
  env::Outcome outcome = env::Outcome::Running;
  int steps = 0;
  double final_distance = 0.0;
  double cumulative_reward = 0.0;
  std::vector<env::TrajectoryRow> trajectory;
};

// Greedy rollouts from each start point.
std::vector<Rollout> evaluate(env::FishEnv& e, const Network& net, std::span<const Vec2> starts);
// n points evenly spaced on [a, b] (n = 1 gives a).
std::vector<double> sweep_points(double a, double b, int n);

}  // namespace vortexswim::dqn
