#include "srcattr/projection.hpp"

#include <cmath>
#include <random>
#include <string>

#include "srcattr/error.hpp"

namespace srcattr::contrastive {

std::size_t ProjectionParams::input_dim() const noexcept {
  return layers.empty() ? 0 : layers.front().in;
}

std::size_t ProjectionParams::output_dim() const noexcept {
  return layers.empty() ? 0 : layers.back().out;
}

std::size_t ProjectionParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void ProjectionParams::validate() const {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "projection has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in == 0 || l.out == 0 || l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " buffers do not match its shape");
    }
    if (i > 0 && layers[i - 1].out != l.in) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " input does not chain");
    }
    for (double w : l.weight) {
      if (!std::isfinite(w)) throw Error(ErrorCode::InvalidConfig, "non-finite weight");
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) throw Error(ErrorCode::InvalidConfig, "non-finite bias");
    }
  }
}

ProjectionParams ProjectionParams::zeros_like() const {
  ProjectionParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({l.in, l.out, std::vector<double>(l.weight.size(), 0.0),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return z;
}

void ProjectionParams::round_to_float() {
  for (auto& l : layers) {
    for (double& w : l.weight) w = static_cast<float>(w);
    for (double& b : l.bias) b = static_cast<float>(b);
  }
}

ProjectionParams ProjectionParams::xavier(std::size_t input_dim,
                                          std::span<const std::size_t> hidden_dims,
                                          std::size_t output_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ProjectionParams p;
  std::size_t in = input_dim;
  auto add_layer = [&](std::size_t out) {
    DenseLayer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& w : l.weight) w = dist(rng);
    p.layers.push_back(std::move(l));
    in = out;
  };
  for (std::size_t h : hidden_dims) add_layer(h);
  add_layer(output_dim);
  p.round_to_float();
  p.validate();
  return p;
}

std::vector<double> project(std::span<const double> v, const ProjectionParams& params,
                            ForwardCache& cache) {
  if (params.layers.empty() || v.size() != params.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch,
                "input has dim " + std::to_string(v.size()) + ", projection expects " +
                    std::to_string(params.input_dim()));
  }
  cache.inputs.assign(params.layers.size(), {});
  cache.pre.assign(params.layers.size(), {});
  std::vector<double> x(v.begin(), v.end());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    std::vector<double> y(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = l.weight.data() + o * l.in;
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
    cache.inputs[li] = std::move(x);
    cache.pre[li] = y;
    if (li + 1 < params.layers.size()) {
      for (double& t : y) t = t > 0.0 ? t : 0.0;
    }
    x = std::move(y);
  }
  double norm = 0.0;
  for (double t : x) norm += t * t;
  norm = std::sqrt(norm);
  cache.output = x;
  cache.norm = norm;
  const double denom = norm + kNormEpsilon;
  for (double& t : x) t /= denom;
  return x;
}

std::vector<double> project(std::span<const double> v, const ProjectionParams& params) {
  ForwardCache cache;
  return project(v, params, cache);
}

void backward(const ProjectionParams& params, const ForwardCache& cache,
              std::span<const double> grad_z, ProjectionParams& grad) {
  // z = y / d with d = ||y|| + eps:  dL/dy = g/d - (g.y) y / (||y|| d^2).
  const auto& y = cache.output;
  const double d = cache.norm + kNormEpsilon;
  double gy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) gy += grad_z[i] * y[i];
  std::vector<double> g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    g[i] = grad_z[i] / d;
    if (cache.norm > 0.0) g[i] -= gy * y[i] / (cache.norm * d * d);
  }

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& l = params.layers[li];
    auto& gl = grad.layers[li];
    const auto& x = cache.inputs[li];
    for (std::size_t o = 0; o < l.out; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      gl.bias[o] += go;
      double* grow = gl.weight.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) grow[i] += go * x[i];
    }
    if (li == 0) break;
    std::vector<double> gx(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      const double* row = l.weight.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) gx[i] += row[i] * go;
    }
    // ReLU of the previous layer.
    const auto& pre = cache.pre[li - 1];
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (pre[i] <= 0.0) gx[i] = 0.0;
    }
    g = std::move(gx);
  }
}

}  // namespace srcattr::contrastive
