#include "srcattr/contrastive.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "srcattr/error.hpp"

namespace srcattr::contrastive {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LossValue nt_xent(std::span<const std::vector<double>> z, std::span<const std::size_t> labels,
                  double tau, std::vector<std::vector<double>>* grad_z) {
  const std::size_t n = z.size();
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  if (n < 2) throw Error(ErrorCode::InvalidConfig, "batch needs at least two items");
  if (labels.size() != n) throw Error(ErrorCode::ShapeMismatch, "one label per item required");
  const std::size_t dim = z[0].size();
  for (const auto& v : z) {
    if (v.size() != dim) throw Error(ErrorCode::ShapeMismatch, "ragged embedding batch");
  }

  std::vector<double> logits(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = dot(z[i], z[j]) / tau;
      logits[i * n + j] = s;
      logits[j * n + i] = s;
    }
  }

  // coef[i*n+j] = dL/dlogit_ij, with logit_ij = z_i.z_j / tau per row i.
  std::vector<double> coef;
  if (grad_z) coef.assign(n * n, 0.0);

  LossValue out;
  std::vector<double> softmax(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) ++positives;
    }
    if (positives == 0) continue;

    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i) max_logit = std::max(max_logit, logits[i * n + a]);
    }
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      softmax[a] = std::exp(logits[i * n + a] - max_logit);
      denom += softmax[a];
    }
    const double log_denom = max_logit + std::log(denom);

    double term = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p != i && labels[p] == labels[i]) term += log_denom - logits[i * n + p];
    }
    const double inv_pos = 1.0 / static_cast<double>(positives);
    out.loss += term * inv_pos;
    ++out.anchors;

    if (grad_z) {
      for (std::size_t a = 0; a < n; ++a) {
        if (a == i) continue;
        double c = softmax[a] / denom;
        if (labels[a] == labels[i]) c -= inv_pos;
        coef[i * n + a] = c;
      }
    }
  }
  if (out.anchors == 0) {
    throw Error(ErrorCode::NoPositivePairs, "no item in the batch has a same-source partner");
  }

  if (grad_z) {
    grad_z->assign(n, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& gi = (*grad_z)[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        // logit_ij and logit_ji both depend on z_i.
        const double c = (coef[i * n + j] + coef[j * n + i]) / tau;
        if (c == 0.0) continue;
        for (std::size_t k = 0; k < dim; ++k) gi[k] += c * z[j][k];
      }
    }
  }
  return out;
}

double nt_xent_loss(std::span<const ProjectedEmbedding> batch, double tau) {
  std::map<SourceId, std::size_t> ids;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> z;
  labels.reserve(batch.size());
  z.reserve(batch.size());
  for (const auto& e : batch) {
    auto [it, _] = ids.try_emplace(e.source, ids.size());
    labels.push_back(it->second);
    z.push_back(e.z);
  }
  return nt_xent(z, labels, tau).loss;
}

LossAndGradient nt_xent_grad(std::span<const std::vector<double>> inputs,
                             std::span<const std::size_t> labels, double tau,
                             const ProjectionParams& params) {
  const std::size_t n = inputs.size();
  std::vector<ForwardCache> caches(n);
  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = project(inputs[i], params, caches[i]);

  std::vector<std::vector<double>> grad_z;
  const LossValue lv = nt_xent(z, labels, tau, &grad_z);

  LossAndGradient out{lv.loss, lv.anchors, params.zeros_like()};
  for (std::size_t i = 0; i < n; ++i) backward(params, caches[i], grad_z[i], out.grad);
  return out;
}

}  // namespace srcattr::contrastive
