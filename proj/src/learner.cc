#include "storl/learner.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <span>
#include <sstream>

#include "storl/errors.h"

namespace storl {

Method ParseMethod(std::string_view name) {
  if (name == "storl") return Method::kStorl;
  if (name == "iql") return Method::kIql;
  if (name == "gcbc") return Method::kGcbc;
  throw ConfigError("unknown method '" + std::string(name) + "' (storl, iql, gcbc)");
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kStorl: return "storl";
    case Method::kIql: return "iql";
    case Method::kGcbc: return "gcbc";
  }
  return "?";
}

// --- Encoder -----------------------------------------------------------------

Encoder::Encoder(const Environment& env, int num_subgoals)
    : discrete_(env.discrete()), num_subgoals_(num_subgoals) {
  if (num_subgoals < 0) throw PreconditionError("negative subgoal count");
  if (discrete_) {
    height_ = env.grid().height;
    width_ = env.grid().width;
    state_width_ = height_ * width_;
  } else {
    const MazeSpec& m = env.maze();
    height_ = m.rows();
    width_ = m.cols();
    half_width_ = width_ / 2.0;
    half_height_ = height_ / 2.0;
    max_speed_ = m.max_speed;
    state_width_ = 4;
  }
}

void Encoder::EncodeState(const State& s, double* out) const {
  if (discrete_) {
    const Cell* c = std::get_if<Cell>(&s);
    if (!c) throw InvalidState("grid encoder given a continuous state");
    if (c->row < 0 || c->col < 0 || c->row >= height_ || c->col >= width_) {
      throw InvalidState("cell (" + std::to_string(c->row) + "," + std::to_string(c->col) +
                         ") outside the grid");
    }
    std::fill(out, out + state_width_, 0.0);
    out[c->row * width_ + c->col] = 1.0;
    return;
  }
  const auto* k = std::get_if<KinematicState>(&s);
  if (!k) throw InvalidState("maze encoder given a grid state");
  out[0] = k->x / half_width_;
  out[1] = k->y / half_height_;
  out[2] = k->vx / max_speed_;
  out[3] = k->vy / max_speed_;
}

void Encoder::EncodeAction(const Action& a, double* out) const {
  if (discrete_) {
    const Move* m = std::get_if<Move>(&a);
    if (!m) throw InvalidAction("grid encoder given a force");
    const int i = static_cast<int>(*m);
    if (i < 0 || i >= kNumMoves) throw InvalidAction("move index out of range");
    std::fill(out, out + kNumMoves, 0.0);
    out[i] = 1.0;
    return;
  }
  const Force* f = std::get_if<Force>(&a);
  if (!f) throw InvalidAction("maze encoder given a move");
  out[0] = f->fx;
  out[1] = f->fy;
}

void Encoder::EncodeSubgoal(int k, double* out) const {
  if (k < 1 || k > num_subgoals_) {
    throw PreconditionError("subgoal index " + std::to_string(k) + " outside 1.." +
                            std::to_string(num_subgoals_));
  }
  std::fill(out, out + num_subgoals_, 0.0);
  out[k - 1] = 1.0;
}

Eigen::VectorXd Encoder::Encode(const State& s, const Action* a,
                                std::optional<int> subgoal) const {
  const int width = state_width_ + (a ? action_width() : 0) + (subgoal ? num_subgoals_ : 0);
  Eigen::VectorXd out(width);
  EncodeState(s, out.data());
  int pos = state_width_;
  if (a) {
    EncodeAction(*a, out.data() + pos);
    pos += action_width();
  }
  if (subgoal) EncodeSubgoal(*subgoal, out.data() + pos);
  return out;
}

// --- Hyperparameters and batches ---------------------------------------------

void LearnerHyper::Validate() const {
  if (!(expectile > 0.5 && expectile < 1.0)) throw ConfigError("expectile must lie in (0.5, 1)");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(target_rate > 0.0 && target_rate <= 1.0)) throw ConfigError("target_rate must lie in (0, 1]");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (hidden < 1) throw ConfigError("hidden must be positive");
  if (!(awr_clip > 0.0)) throw ConfigError("awr_clip must be positive");
  if (!(policy_std > 0.0)) throw ConfigError("policy_std must be positive");
}

ReplayBuffer::ReplayBuffer(const Dataset& dataset, const Encoder& encoder,
                           const Environment& env, const SubgoalSchedule* schedule)
    : encoder_(encoder) {
  transitions_.reserve(dataset.TransitionCount());
  for (const auto& traj : dataset.trajectories) {
    for (const auto& tr : traj.steps) {
      transitions_.push_back(tr);
      if (schedule) subgoals_.push_back(ProgressIndex(*schedule, env, tr.state));
    }
  }
}

TransitionBatch ReplayBuffer::Gather(const std::vector<size_t>& rows) const {
  const int n = static_cast<int>(rows.size());
  TransitionBatch b;
  b.states.resize(encoder_.state_width(), n);
  b.next_states.resize(encoder_.state_width(), n);
  b.actions.resize(encoder_.action_width(), n);
  b.rewards.resize(n);
  b.dones.resize(n);
  for (int j = 0; j < n; ++j) {
    const Transition& tr = transitions_.at(rows[j]);
    encoder_.EncodeState(tr.state, b.states.col(j).data());
    encoder_.EncodeState(tr.next_state, b.next_states.col(j).data());
    encoder_.EncodeAction(tr.action, b.actions.col(j).data());
    b.rewards(j) = tr.reward;
    b.dones(j) = tr.done ? 1.0 : 0.0;
    if (encoder_.discrete()) b.action_index.push_back(static_cast<int>(std::get<Move>(tr.action)));
    if (!subgoals_.empty()) b.subgoals.push_back(subgoals_[rows[j]]);
  }
  return b;
}

TransitionBatch ReplayBuffer::Sample(int batch_size, std::mt19937_64& rng) const {
  if (transitions_.empty()) throw PreconditionError("cannot sample from an empty dataset");
  std::uniform_int_distribution<size_t> pick(0, transitions_.size() - 1);
  std::vector<size_t> rows(static_cast<size_t>(batch_size));
  for (auto& r : rows) r = pick(rng);
  return Gather(rows);
}

// --- Action selection --------------------------------------------------------

int GreedyIndex(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  int best = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return best;
}

int SampleIndex(const Eigen::Ref<const Eigen::VectorXd>& logits, std::mt19937_64& rng) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - top).exp().matrix();
  p /= p.sum();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) return i;
  }
  return static_cast<int>(p.size()) - 1;
}

// --- Learner -----------------------------------------------------------------

double ExpectileLoss(const Eigen::RowVectorXd& target, const Eigen::RowVectorXd& pred, double tau,
                     Eigen::RowVectorXd* d_pred) {
  const Eigen::Index n = pred.size();
  const Eigen::RowVectorXd u = target - pred;
  const Eigen::RowVectorXd w =
      (u.array() < 0.0).select(1.0 - tau, Eigen::RowVectorXd::Constant(n, tau));
  if (d_pred) *d_pred = (-2.0 / static_cast<double>(n)) * (w.array() * u.array()).matrix();
  return (w.array() * u.array().square()).mean();
}

double SquaredLoss(const Eigen::RowVectorXd& target, const Eigen::RowVectorXd& pred,
                   Eigen::RowVectorXd* d_pred) {
  const Eigen::RowVectorXd err = target - pred;
  if (d_pred) *d_pred = (-2.0 / static_cast<double>(pred.size())) * err;
  return err.array().square().mean();
}

double WeightedSoftmaxNll(const Eigen::MatrixXd& logits, const std::vector<int>& actions,
                          const Eigen::RowVectorXd& weights, Eigen::MatrixXd* d_logits) {
  const Eigen::Index n = logits.cols();
  if (d_logits) d_logits->resize(logits.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double top = logits.col(j).maxCoeff();
    const Eigen::VectorXd e = (logits.col(j).array() - top).exp().matrix();
    const double z = e.sum();
    const int a = actions[static_cast<size_t>(j)];
    loss += weights(j) * -(logits(a, j) - top - std::log(z));
    if (d_logits) {
      d_logits->col(j) = e / z;
      (*d_logits)(a, j) -= 1.0;
      d_logits->col(j) *= weights(j) / static_cast<double>(n);
    }
  }
  return loss / static_cast<double>(n);
}

double WeightedTanhGaussianNll(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& actions,
                               const Eigen::RowVectorXd& weights, double std,
                               Eigen::MatrixXd* d_raw) {
  const Eigen::Index n = raw.cols();
  const double inv_var = 1.0 / (std * std);
  const Eigen::MatrixXd mean = raw.array().tanh().matrix();
  const Eigen::MatrixXd diff = mean - actions;
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) loss += weights(j) * 0.5 * inv_var * diff.col(j).squaredNorm();
  if (d_raw) {
    *d_raw = (diff.array() * inv_var * (1.0 - mean.array().square())).matrix();
    for (Eigen::Index j = 0; j < n; ++j) d_raw->col(j) *= weights(j) / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

Learner::Learner(Method method, const Encoder& encoder, const LearnerHyper& hyper,
                 double gamma, std::uint64_t seed)
    : method_(method), encoder_(encoder), hyper_(hyper), gamma_(gamma), seed_(seed), rng_(seed) {
  hyper_.Validate();
  if (method_ == Method::kGcbc && encoder_.num_subgoals() < 1) {
    throw ConfigError("gcbc needs a subgoal schedule");
  }
  const int h = hyper_.hidden;
  const int sw = encoder_.state_width();
  const int aw = encoder_.action_width();
  const int pin = sw + (method_ == Method::kGcbc ? encoder_.num_subgoals() : 0);
  value_ = Mlp({sw, h, h, 1});
  q1_ = Mlp({sw + aw, h, h, 1});
  q2_ = Mlp({sw + aw, h, h, 1});
  policy_ = Mlp({pin, h, h, aw});
  value_.InitRandom(rng_);
  q1_.InitRandom(rng_);
  q2_.InitRandom(rng_);
  policy_.InitRandom(rng_);
  q1_target_ = q1_;
  q2_target_ = q2_;
  value_opt_ = storl::Adam(value_);
  q1_opt_ = storl::Adam(q1_);
  q2_opt_ = storl::Adam(q2_);
  policy_opt_ = storl::Adam(policy_);
}

Eigen::MatrixXd Learner::StateActions(const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions) const {
  Eigen::MatrixXd sa(states.rows() + actions.rows(), states.cols());
  sa.topRows(states.rows()) = states;
  sa.bottomRows(actions.rows()) = actions;
  return sa;
}

Eigen::MatrixXd Learner::PolicyInputs(const Eigen::MatrixXd& states,
                                      const std::vector<int>& subgoals) const {
  if (method_ != Method::kGcbc) return states;
  if (static_cast<Eigen::Index>(subgoals.size()) != states.cols()) {
    throw PreconditionError("gcbc needs one subgoal index per state");
  }
  const int K = encoder_.num_subgoals();
  Eigen::MatrixXd in(states.rows() + K, states.cols());
  in.topRows(states.rows()) = states;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    encoder_.EncodeSubgoal(subgoals[static_cast<size_t>(j)], in.col(j).data() + states.rows());
  }
  return in;
}

Eigen::MatrixXd Learner::PolicyOutput(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd raw = policy_.Forward(inputs);
  if (!encoder_.discrete()) raw = raw.array().tanh().matrix();
  return raw;
}

double Learner::PolicyLossGrad(const Eigen::MatrixXd& raw, const TransitionBatch& batch,
                               const Eigen::RowVectorXd& weights, Eigen::MatrixXd& grad) const {
  if (encoder_.discrete()) return WeightedSoftmaxNll(raw, batch.action_index, weights, &grad);
  return WeightedTanhGaussianNll(raw, batch.actions, weights, hyper_.policy_std, &grad);
}

void Learner::CheckFinite(const char* what, double loss) const {
  if (!std::isfinite(loss)) {
    throw DivergenceError(std::string(what) + " loss became non-finite at step " +
                          std::to_string(step_) + " (" + MethodName(method_).data() + ")");
  }
}

IqlLosses Learner::IqlUpdate(const TransitionBatch& batch) {
  const int n = batch.size();
  if (n == 0) throw PreconditionError("empty batch");
  IqlLosses losses;
  const Eigen::MatrixXd sa = StateActions(batch.states, batch.actions);
  const Eigen::RowVectorXd target_q =
      q1_target_.Forward(sa).row(0).cwiseMin(q2_target_.Forward(sa).row(0));

  // Expectile regression of V towards the target critics.
  {
    Mlp::Cache cache;
    const Eigen::RowVectorXd v = value_.Forward(batch.states, &cache).row(0);
    Eigen::RowVectorXd d_v;
    losses.value = ExpectileLoss(target_q, v, hyper_.expectile, &d_v);
    CheckFinite("value", losses.value);
    value_opt_.Step(value_, value_.Backward(cache, d_v), Adam());
  }

  // Advantage-weighted regression.
  {
    const Eigen::RowVectorXd adv = target_q - value_.Forward(batch.states).row(0);
    const Eigen::RowVectorXd weights =
        (hyper_.beta * adv.array()).exp().min(hyper_.awr_clip).matrix();
    Mlp::Cache cache;
    const Eigen::MatrixXd raw = policy_.Forward(PolicyInputs(batch.states, batch.subgoals), &cache);
    Eigen::MatrixXd grad;
    losses.policy = PolicyLossGrad(raw, batch, weights, grad);
    CheckFinite("policy", losses.policy);
    policy_opt_.Step(policy_, policy_.Backward(cache, grad), Adam());
  }

  // TD regression of both critics on r + gamma (1 - done) V(s').
  {
    const Eigen::RowVectorXd v_next = value_.Forward(batch.next_states).row(0);
    const Eigen::RowVectorXd y =
        batch.rewards.array() + gamma_ * (1.0 - batch.dones.array()) * v_next.array();
    double total = 0.0;
    for (auto [net, opt] : {std::pair{&q1_, &q1_opt_}, std::pair{&q2_, &q2_opt_}}) {
      Mlp::Cache cache;
      const Eigen::RowVectorXd q = net->Forward(sa, &cache).row(0);
      Eigen::RowVectorXd d_q;
      total += SquaredLoss(y, q, &d_q);
      opt->Step(*net, net->Backward(cache, d_q), Adam());
    }
    losses.q = total / 2.0;
    CheckFinite("q", losses.q);
  }

  BlendTargets(hyper_.target_rate);
  ++step_;
  return losses;
}

double Learner::GcbcUpdate(const TransitionBatch& batch) {
  const int n = batch.size();
  if (n == 0) throw PreconditionError("empty batch");
  Mlp::Cache cache;
  const Eigen::MatrixXd raw = policy_.Forward(PolicyInputs(batch.states, batch.subgoals), &cache);
  Eigen::MatrixXd grad;
  const double loss = PolicyLossGrad(raw, batch, Eigen::RowVectorXd::Ones(n), grad);
  CheckFinite("policy", loss);
  policy_opt_.Step(policy_, policy_.Backward(cache, grad), Adam());
  ++step_;
  return loss;
}

double Learner::Update(const TransitionBatch& batch) {
  if (method_ == Method::kGcbc) return GcbcUpdate(batch);
  return IqlUpdate(batch).policy;
}

void Learner::BlendTargets(double rate) {
  q1_target_.BlendFrom(q1_, rate);
  q2_target_.BlendFrom(q2_, rate);
}

std::vector<Action> Learner::ActBatch(const std::vector<State>& states,
                                      const std::vector<int>& subgoals, ActMode mode,
                                      std::mt19937_64& rng) const {
  std::vector<Action> out;
  if (states.empty()) return out;
  const int n = static_cast<int>(states.size());
  Eigen::MatrixXd x(encoder_.state_width(), n);
  for (int j = 0; j < n; ++j) encoder_.EncodeState(states[static_cast<size_t>(j)], x.col(j).data());
  const Eigen::MatrixXd y = PolicyOutput(PolicyInputs(x, subgoals));
  out.reserve(states.size());
  if (encoder_.discrete()) {
    for (int j = 0; j < n; ++j) {
      const int i = mode == ActMode::kGreedy ? GreedyIndex(y.col(j)) : SampleIndex(y.col(j), rng);
      out.emplace_back(static_cast<Move>(i));
    }
  } else {
    std::normal_distribution<double> noise(0.0, hyper_.policy_std);
    for (int j = 0; j < n; ++j) {
      Force f{y(0, j), y(1, j)};
      if (mode == ActMode::kSample) {
        f.fx = std::clamp(f.fx + noise(rng), -1.0, 1.0);
        f.fy = std::clamp(f.fy + noise(rng), -1.0, 1.0);
      }
      out.emplace_back(f);
    }
  }
  return out;
}

Action Learner::Act(const State& state, ActMode mode, std::mt19937_64& rng,
                    std::optional<int> subgoal) const {
  std::vector<int> ks;
  if (subgoal) ks.push_back(*subgoal);
  return ActBatch({state}, ks, mode, rng).front();
}

double Learner::Value(const State& state) const {
  return value_.Forward(encoder_.Encode(state))(0, 0);
}

Eigen::VectorXd Learner::MoveValues(const State& state) const {
  if (!encoder_.discrete()) throw PreconditionError("move values need a grid task");
  Eigen::MatrixXd sa(encoder_.state_width() + kNumMoves, kNumMoves);
  for (int i = 0; i < kNumMoves; ++i) {
    const Action a = static_cast<Move>(i);
    sa.col(i) = encoder_.Encode(state, &a);
  }
  return q1_.Forward(sa).row(0).cwiseMin(q2_.Forward(sa).row(0)).transpose();
}

// --- Checkpoints ---------------------------------------------------------------

namespace {

constexpr std::string_view kCheckpointMagic = "storl-checkpoint 1";

}  // namespace

std::string Learner::SaveCheckpoint(TaskId task) const {
  std::ostringstream head;
  head << kCheckpointMagic << '\n';
  head << "task " << TaskName(task) << '\n';
  head << "method " << MethodName(method_) << '\n';
  head << "gamma " << FormatDouble(gamma_) << '\n';
  head << "seed " << seed_ << '\n';
  head << "step " << step_ << '\n';
  head << "subgoals " << encoder_.num_subgoals() << '\n';
  head << "expectile " << FormatDouble(hyper_.expectile) << '\n';
  head << "beta " << FormatDouble(hyper_.beta) << '\n';
  head << "learning_rate " << FormatDouble(hyper_.learning_rate) << '\n';
  head << "batch_size " << hyper_.batch_size << '\n';
  head << "target_rate " << FormatDouble(hyper_.target_rate) << '\n';
  head << "iterations " << hyper_.iterations << '\n';
  head << "hidden " << hyper_.hidden << '\n';
  head << "awr_clip " << FormatDouble(hyper_.awr_clip) << '\n';
  head << "policy_std " << FormatDouble(hyper_.policy_std) << '\n';
  head << "rng " << rng_ << '\n';
  head << "adam_steps " << value_opt_.steps() << ' ' << q1_opt_.steps() << ' '
       << q2_opt_.steps() << ' ' << policy_opt_.steps() << '\n';

  std::vector<double> flat;
  for (const Mlp* net : {&value_, &q1_, &q2_, &q1_target_, &q2_target_, &policy_}) {
    const auto p = net->Flatten();
    flat.insert(flat.end(), p.begin(), p.end());
  }
  for (const storl::Adam* opt : {&value_opt_, &q1_opt_, &q2_opt_, &policy_opt_}) {
    const auto p = opt->Flatten();
    flat.insert(flat.end(), p.begin(), p.end());
  }
  head << "params " << flat.size() << '\n';
  std::string out = head.str();
  const size_t offset = out.size();
  out.resize(offset + flat.size() * sizeof(double));
  std::memcpy(out.data() + offset, flat.data(), flat.size() * sizeof(double));
  return out;
}

Learner Learner::LoadCheckpoint(std::string_view data, const Environment& env) {
  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) throw ConfigError("truncated checkpoint header");
    std::string line(data.substr(pos, end - pos));
    pos = end + 1;
    return line;
  };
  if (next_line() != kCheckpointMagic) throw ConfigError("not a checkpoint (or unsupported version)");

  std::map<std::string, std::string> fields;
  size_t count = 0;
  while (true) {
    const std::string line = next_line();
    const size_t sp = line.find(' ');
    if (sp == std::string::npos) throw ConfigError("malformed checkpoint line: " + line);
    const std::string key = line.substr(0, sp);
    const std::string value = line.substr(sp + 1);
    if (key == "params") {
      count = static_cast<size_t>(std::stoull(value));
      break;
    }
    fields[key] = value;
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("checkpoint is missing '" + key + "'");
    return it->second;
  };

  const TaskId task = ParseTaskId(get("task"));
  if (task != env.task()) {
    throw ConfigError("checkpoint was trained on " + get("task") + ", not " +
                      std::string(TaskName(env.task())));
  }
  LearnerHyper hyper;
  hyper.expectile = ParseDouble(get("expectile"));
  hyper.beta = ParseDouble(get("beta"));
  hyper.learning_rate = ParseDouble(get("learning_rate"));
  hyper.batch_size = std::stoi(get("batch_size"));
  hyper.target_rate = ParseDouble(get("target_rate"));
  hyper.iterations = std::stoi(get("iterations"));
  hyper.hidden = std::stoi(get("hidden"));
  hyper.awr_clip = ParseDouble(get("awr_clip"));
  hyper.policy_std = ParseDouble(get("policy_std"));

  Learner learner(ParseMethod(get("method")), Encoder(env, std::stoi(get("subgoals"))), hyper,
                  ParseDouble(get("gamma")), std::stoull(get("seed")));
  learner.step_ = std::stoll(get("step"));
  {
    std::istringstream rs(get("rng"));
    rs >> learner.rng_;
    if (!rs) throw ConfigError("bad rng state in checkpoint");
  }

  if (data.size() - pos != count * sizeof(double)) {
    throw ConfigError("checkpoint payload size does not match its header");
  }
  std::vector<double> flat(count);
  std::memcpy(flat.data(), data.data() + pos, count * sizeof(double));
  std::span<const double> rest(flat);
  auto take = [&](size_t n) {
    if (n > rest.size()) throw ConfigError("checkpoint payload too short for this network");
    auto s = rest.first(n);
    rest = rest.subspan(n);
    return s;
  };
  for (Mlp* net : {&learner.value_, &learner.q1_, &learner.q2_, &learner.q1_target_,
                   &learner.q2_target_, &learner.policy_}) {
    net->Unflatten(take(net->ParameterCount()));
  }
  std::istringstream steps(get("adam_steps"));
  for (storl::Adam* opt : {&learner.value_opt_, &learner.q1_opt_, &learner.q2_opt_,
                           &learner.policy_opt_}) {
    std::int64_t s = 0;
    steps >> s;
    opt->Unflatten(s, take(opt->ParameterCount()));
  }
  if (!steps) throw ConfigError("bad optimizer step counts in checkpoint");
  if (!rest.empty()) throw ConfigError("checkpoint payload larger than the network");
  return learner;
}

// --- Value iteration -----------------------------------------------------------

TabularPlan ValueIteration(const GridSpec& spec, double gamma, double tol) {
  TabularPlan plan;
  plan.height = spec.height;
  plan.width = spec.width;
  plan.value.assign(static_cast<size_t>(spec.height * spec.width), 0.0);
  plan.greedy.assign(plan.value.size(), Move::kUp);

  auto backup = [&](Cell c, Move* best_move) {
    double best = -1.0;
    for (int i = 0; i < kNumMoves; ++i) {
      const auto r = GridStep(spec, c, static_cast<Move>(i));
      const double q = r.reward + (r.done ? 0.0 : gamma * plan.Value(r.next));
      if (q > best) {
        best = q;
        if (best_move) *best_move = static_cast<Move>(i);
      }
    }
    return best;
  };

  constexpr int kMaxSweeps = 1000000;
  do {
    plan.residual = 0.0;
    for (int row = 0; row < spec.height; ++row) {
      for (int col = 0; col < spec.width; ++col) {
        const Cell c{row, col};
        if (spec.IsWall(c) || c == spec.goal) continue;
        const double v = backup(c, nullptr);
        double& slot = plan.value[static_cast<size_t>(row * spec.width + col)];
        plan.residual = std::max(plan.residual, std::abs(v - slot));
        slot = v;
      }
    }
    ++plan.sweeps;
  } while (plan.residual >= tol && plan.sweeps < kMaxSweeps);

  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const Cell c{row, col};
      if (spec.IsWall(c) || c == spec.goal) continue;
      backup(c, &plan.greedy[static_cast<size_t>(row * spec.width + col)]);
    }
  }
  return plan;
}

}  // namespace storl
