#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace storl {

enum class Activation { kRelu, kTanh };

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

using MlpGrads = std::vector<DenseLayer>;

// Dense feed-forward net. Inputs and outputs are column batches
// (features x batch). Hidden layers use `activation`; the output is linear.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes, Activation activation = Activation::kRelu);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void InitRandom(std::mt19937_64& rng);
  void SetZero();

  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x, Cache* cache) const;

  // Parameter gradients for d(loss)/d(output) = `d_out`. When `d_input` is
  // non-null it receives d(loss)/d(input).
  MlpGrads Backward(const Cache& cache, const Eigen::MatrixXd& d_out,
                    Eigen::MatrixXd* d_input = nullptr) const;

  MlpGrads ZeroGrads() const;

  size_t ParameterCount() const;
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> flat);

  // this <- (1 - rate) * this + rate * source
  void BlendFrom(const Mlp& source, double rate);

  bool AllFinite() const;

 private:
  std::vector<int> sizes_;
  Activation activation_ = Activation::kRelu;
  std::vector<DenseLayer> layers_;
};

std::vector<double> FlattenGrads(const MlpGrads& grads);

struct AdamHyper {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net);

  void Step(Mlp& net, const MlpGrads& grads, const AdamHyper& hyper);

  std::int64_t steps() const { return steps_; }
  std::vector<double> Flatten() const;
  void Unflatten(std::int64_t steps, std::span<const double> flat);
  size_t ParameterCount() const;

 private:
  std::int64_t steps_ = 0;
  MlpGrads m_;
  MlpGrads v_;
};

}  // namespace storl
