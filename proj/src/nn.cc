#include "storl/nn.h"

#include <cmath>

#include "storl/errors.h"

namespace storl {

namespace {

void Activate(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

// Multiplies `grad` in place by the activation derivative at `pre`.
void ActivateBackward(Activation act, const Eigen::MatrixXd& pre, Eigen::MatrixXd& grad) {
  if (act == Activation::kRelu) {
    grad = (pre.array() > 0.0).select(grad, 0.0);
  } else {
    const Eigen::ArrayXXd t = pre.array().tanh();
    grad = (grad.array() * (1.0 - t * t)).matrix();
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes, Activation activation)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw PreconditionError("an MLP needs at least two layer sizes");
  for (size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes_[i + 1], sizes_[i]),
                       Eigen::VectorXd::Zero(sizes_[i + 1])});
  }
}

void Mlp::InitRandom(std::mt19937_64& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i) layer.w(i, j) = u(rng);
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = u(rng);
  }
}

void Mlp::SetZero() {
  for (auto& layer : layers_) {
    layer.w.setZero();
    layer.b.setZero();
  }
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x) const {
  return Forward(x, nullptr);
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_size()) {
    throw PreconditionError("input has " + std::to_string(x.rows()) +
                            " features, network expects " + std::to_string(input_size()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    if (l + 1 < layers_.size()) Activate(activation_, z);
    a = std::move(z);
  }
  return a;
}

MlpGrads Mlp::Backward(const Cache& cache, const Eigen::MatrixXd& d_out,
                       Eigen::MatrixXd* d_input) const {
  if (cache.pre.size() != layers_.size()) throw PreconditionError("cache does not match network");
  if (d_out.rows() != output_size() || d_out.cols() != cache.pre.back().cols()) {
    throw PreconditionError("output gradient shape mismatch");
  }
  MlpGrads grads(layers_.size());
  Eigen::MatrixXd g = d_out;
  for (size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) ActivateBackward(activation_, cache.pre[l], g);
    grads[l].w.noalias() = g * cache.inputs[l].transpose();
    grads[l].b = g.rowwise().sum();
    if (l > 0 || d_input) {
      Eigen::MatrixXd next = layers_[l].w.transpose() * g;
      g = std::move(next);
    }
  }
  if (d_input) *d_input = std::move(g);
  return grads;
}

MlpGrads Mlp::ZeroGrads() const {
  MlpGrads grads;
  for (const auto& layer : layers_) {
    grads.push_back({Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()),
                     Eigen::VectorXd::Zero(layer.b.size())});
  }
  return grads;
}

size_t Mlp::ParameterCount() const {
  size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<size_t>(layer.w.size() + layer.b.size());
  return n;
}

namespace {

void AppendLayers(const std::vector<DenseLayer>& layers, std::vector<double>& out) {
  for (const auto& layer : layers) {
    out.insert(out.end(), layer.w.data(), layer.w.data() + layer.w.size());
    out.insert(out.end(), layer.b.data(), layer.b.data() + layer.b.size());
  }
}

size_t ReadLayers(std::vector<DenseLayer>& layers, std::span<const double> flat) {
  size_t pos = 0;
  for (auto& layer : layers) {
    const auto nw = static_cast<size_t>(layer.w.size());
    const auto nb = static_cast<size_t>(layer.b.size());
    if (pos + nw + nb > flat.size()) throw PreconditionError("flat parameter array too short");
    std::copy(flat.begin() + static_cast<long>(pos), flat.begin() + static_cast<long>(pos + nw),
              layer.w.data());
    pos += nw;
    std::copy(flat.begin() + static_cast<long>(pos), flat.begin() + static_cast<long>(pos + nb),
              layer.b.data());
    pos += nb;
  }
  return pos;
}

}  // namespace

std::vector<double> Mlp::Flatten() const {
  std::vector<double> out;
  out.reserve(ParameterCount());
  AppendLayers(layers_, out);
  return out;
}

void Mlp::Unflatten(std::span<const double> flat) {
  if (flat.size() != ParameterCount()) throw PreconditionError("parameter count mismatch");
  ReadLayers(layers_, flat);
}

void Mlp::BlendFrom(const Mlp& source, double rate) {
  if (source.sizes_ != sizes_) throw PreconditionError("cannot blend networks of different shapes");
  if (rate == 1.0) {
    layers_ = source.layers_;
    return;
  }
  for (size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].w = (1.0 - rate) * layers_[l].w + rate * source.layers_[l].w;
    layers_[l].b = (1.0 - rate) * layers_[l].b + rate * source.layers_[l].b;
  }
}

bool Mlp::AllFinite() const {
  for (const auto& layer : layers_) {
    if (!layer.w.allFinite() || !layer.b.allFinite()) return false;
  }
  return true;
}

std::vector<double> FlattenGrads(const MlpGrads& grads) {
  std::vector<double> out;
  AppendLayers(grads, out);
  return out;
}

Adam::Adam(const Mlp& net) : m_(net.ZeroGrads()), v_(net.ZeroGrads()) {}

void Adam::Step(Mlp& net, const MlpGrads& grads, const AdamHyper& hyper) {
  auto& layers = net.layers();
  if (grads.size() != layers.size() || m_.size() != layers.size()) {
    throw PreconditionError("optimizer state does not match network");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(steps_));
  const double step = hyper.learning_rate * std::sqrt(c2) / c1;
  // Epsilon is applied to the bias-corrected second moment.
  const double eps = hyper.epsilon * std::sqrt(c2);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseProduct(g);
    param.array() -= step * m.array() / (v.array().sqrt() + eps);
  };
  for (size_t l = 0; l < layers.size(); ++l) {
    if (grads[l].w.rows() != layers[l].w.rows() || grads[l].w.cols() != layers[l].w.cols()) {
      throw PreconditionError("gradient shape mismatch");
    }
    update(layers[l].w, m_[l].w, v_[l].w, grads[l].w);
    update(layers[l].b, m_[l].b, v_[l].b, grads[l].b);
  }
}

std::vector<double> Adam::Flatten() const {
  std::vector<double> out;
  AppendLayers(m_, out);
  AppendLayers(v_, out);
  return out;
}

size_t Adam::ParameterCount() const {
  size_t n = 0;
  for (const auto& layer : m_) n += static_cast<size_t>(layer.w.size() + layer.b.size());
  return 2 * n;
}

void Adam::Unflatten(std::int64_t steps, std::span<const double> flat) {
  if (flat.size() != ParameterCount()) throw PreconditionError("optimizer state size mismatch");
  steps_ = steps;
  const size_t used = ReadLayers(m_, flat);
  ReadLayers(v_, flat.subspan(used));
}

}  // namespace storl
