#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "storl/dataset.h"
#include "storl/env.h"
#include "storl/nn.h"
#include "storl/planner.h"

namespace storl {

enum class Method { kStorl, kIql, kGcbc };

Method ParseMethod(std::string_view name);
std::string_view MethodName(Method method);

// Feature layout for network inputs. Grid states are one-hot over every cell
// (row * width + col, walls included); maze states are (x, y, vx, vy) scaled
// by the half-extent of the map and the speed limit.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const Environment& env, int num_subgoals);

  bool discrete() const { return discrete_; }
  int state_width() const { return state_width_; }
  int action_width() const { return discrete_ ? kNumMoves : 2; }
  int num_subgoals() const { return num_subgoals_; }

  void EncodeState(const State& s, double* out) const;
  void EncodeAction(const Action& a, double* out) const;
  void EncodeSubgoal(int k, double* out) const;

  Eigen::VectorXd Encode(const State& s, const Action* a = nullptr,
                         std::optional<int> subgoal = std::nullopt) const;

 private:
  bool discrete_ = true;
  int height_ = 0;
  int width_ = 0;
  int state_width_ = 0;
  int num_subgoals_ = 0;
  double half_width_ = 1.0;
  double half_height_ = 1.0;
  double max_speed_ = 1.0;
};

struct LearnerHyper {
  double expectile = 0.9;
  double beta = 3.0;
  double learning_rate = 3e-4;
  int batch_size = 256;
  double target_rate = 0.005;
  int iterations = 1000;
  int hidden = 128;
  double awr_clip = 100.0;
  double policy_std = 0.5;  // continuous policies: fixed Gaussian std

  void Validate() const;
};

// Encoded minibatch. Columns are transitions.
struct TransitionBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;
  Eigen::RowVectorXd rewards;
  Eigen::RowVectorXd dones;
  std::vector<int> action_index;  // discrete tasks
  std::vector<int> subgoals;      // progress index of the state, GC-BC only

  int size() const { return static_cast<int>(states.cols()); }
};

// Flattened transitions of a dataset, ready for minibatch sampling.
class ReplayBuffer {
 public:
  // `schedule` is only needed when batches must carry subgoal indices.
  ReplayBuffer(const Dataset& dataset, const Encoder& encoder,
               const Environment& env, const SubgoalSchedule* schedule = nullptr);

  size_t size() const { return transitions_.size(); }
  TransitionBatch Sample(int batch_size, std::mt19937_64& rng) const;
  TransitionBatch Gather(const std::vector<size_t>& rows) const;

 private:
  Encoder encoder_;
  std::vector<Transition> transitions_;
  std::vector<int> subgoals_;
};

struct IqlLosses {
  double value = 0.0;
  double q = 0.0;  // mean of the two critics
  double policy = 0.0;
};

// Loss helpers. Each returns the batch-mean loss and, when asked, its
// gradient with respect to the prediction columns.
// Expectile regression: |tau - 1{u<0}| u^2 with u = target - pred.
double ExpectileLoss(const Eigen::RowVectorXd& target, const Eigen::RowVectorXd& pred, double tau,
                     Eigen::RowVectorXd* d_pred = nullptr);
double SquaredLoss(const Eigen::RowVectorXd& target, const Eigen::RowVectorXd& pred,
                   Eigen::RowVectorXd* d_pred = nullptr);
// -w log softmax(logits)[a], per column.
double WeightedSoftmaxNll(const Eigen::MatrixXd& logits, const std::vector<int>& actions,
                          const Eigen::RowVectorXd& weights, Eigen::MatrixXd* d_logits = nullptr);
// Gaussian NLL around tanh(raw) with a fixed std, constants dropped.
double WeightedTanhGaussianNll(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& actions,
                               const Eigen::RowVectorXd& weights, double std,
                               Eigen::MatrixXd* d_raw = nullptr);

enum class ActMode { kGreedy, kSample };

// Index of the largest entry; the earliest wins ties.
int GreedyIndex(const Eigen::Ref<const Eigen::VectorXd>& logits);
int SampleIndex(const Eigen::Ref<const Eigen::VectorXd>& logits, std::mt19937_64& rng);

class Learner {
 public:
  Learner(Method method, const Encoder& encoder, const LearnerHyper& hyper,
          double gamma, std::uint64_t seed);

  Method method() const { return method_; }
  const Encoder& encoder() const { return encoder_; }
  const LearnerHyper& hyper() const { return hyper_; }
  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t step() const { return step_; }
  std::mt19937_64& rng() { return rng_; }

  IqlLosses IqlUpdate(const TransitionBatch& batch);
  double GcbcUpdate(const TransitionBatch& batch);
  // IQL update for storl/iql, supervised step for gcbc; returns the policy loss.
  double Update(const TransitionBatch& batch);

  // Policy inputs: states, plus subgoal one-hots for GC-BC.
  Eigen::MatrixXd PolicyInputs(const Eigen::MatrixXd& states,
                               const std::vector<int>& subgoals) const;
  // Logits for discrete tasks, tanh means for continuous ones.
  Eigen::MatrixXd PolicyOutput(const Eigen::MatrixXd& inputs) const;

  std::vector<Action> ActBatch(const std::vector<State>& states,
                               const std::vector<int>& subgoals, ActMode mode,
                               std::mt19937_64& rng) const;
  Action Act(const State& state, ActMode mode, std::mt19937_64& rng,
             std::optional<int> subgoal = std::nullopt) const;

  // V(s) from the value net and min(Q1, Q2)(s, a) for each move.
  double Value(const State& state) const;
  Eigen::VectorXd MoveValues(const State& state) const;

  void BlendTargets(double rate);

  Mlp& value() { return value_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  Mlp& q1_target() { return q1_target_; }
  Mlp& q2_target() { return q2_target_; }
  Mlp& policy() { return policy_; }
  const Mlp& value() const { return value_; }
  const Mlp& q1() const { return q1_; }
  const Mlp& q2() const { return q2_; }
  const Mlp& q1_target() const { return q1_target_; }
  const Mlp& q2_target() const { return q2_target_; }
  const Mlp& policy() const { return policy_; }

  std::string SaveCheckpoint(TaskId task) const;
  // Restores a checkpoint written by SaveCheckpoint; `env` must match its task.
  static Learner LoadCheckpoint(std::string_view data, const Environment& env);

 private:
  AdamHyper Adam() const { return AdamHyper{hyper_.learning_rate}; }
  Eigen::MatrixXd StateActions(const Eigen::MatrixXd& states,
                               const Eigen::MatrixXd& actions) const;
  // Gradient of the per-sample weighted negative log-likelihood with respect
  // to the raw policy outputs; returns the mean loss.
  double PolicyLossGrad(const Eigen::MatrixXd& raw, const TransitionBatch& batch,
                        const Eigen::RowVectorXd& weights, Eigen::MatrixXd& grad) const;
  void CheckFinite(const char* what, double loss) const;

  Method method_;
  Encoder encoder_;
  LearnerHyper hyper_;
  double gamma_;
  std::uint64_t seed_;
  std::int64_t step_ = 0;
  std::mt19937_64 rng_;

  Mlp value_, q1_, q2_, q1_target_, q2_target_, policy_;
  storl::Adam value_opt_, q1_opt_, q2_opt_, policy_opt_;
};

struct TabularPlan {
  int height = 0;
  int width = 0;
  std::vector<double> value;  // row-major, 0 on walls and the goal
  std::vector<Move> greedy;
  int sweeps = 0;
  double residual = 0.0;

  double Value(Cell c) const { return value[c.row * width + c.col]; }
  Move Greedy(Cell c) const { return greedy[c.row * width + c.col]; }
};

// In-place Bellman optimality sweeps on the sparse goal reward until the
// largest update falls below `tol`.
TabularPlan ValueIteration(const GridSpec& spec, double gamma, double tol = 1e-10);

}  // namespace storl
