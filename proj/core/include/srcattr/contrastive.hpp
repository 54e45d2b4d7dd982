#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srcattr/corpus.hpp"
#include "srcattr/projection.hpp"

namespace srcattr::contrastive {

/// Unit-norm output of the projection network for one labeled window.
struct ProjectedEmbedding {
  std::vector<double> z;
  SourceId source;
};

struct LossValue {
  double loss = 0.0;
  std::size_t anchors = 0;  // items with at least one in-batch positive
};

/// Supervised NT-Xent over a batch with integer labels:
///
///   L = sum_i  -1/|P_i| * sum_{p in P_i} log( exp(z_i.z_p / tau)
///                                             / sum_{a != i} exp(z_i.z_a / tau) )
///
/// P_i holds the other items sharing i's label. Items with empty P_i are left
/// out of the outer sum but still act as negatives. Summation runs in
/// ascending index order. Throws NoPositivePairs if no item has a positive,
/// InvalidConfig if tau <= 0 or the batch has fewer than two items.
///
/// If `grad_z` is non-null it receives dL/dz_i for every item.
LossValue nt_xent(std::span<const std::vector<double>> z,
                  std::span<const std::size_t> labels, double tau,
                  std::vector<std::vector<double>>* grad_z = nullptr);

/// Same loss keyed by SourceId.
double nt_xent_loss(std::span<const ProjectedEmbedding> batch, double tau);

struct LossAndGradient {
  double loss = 0.0;
  std::size_t anchors = 0;
  ProjectionParams grad;
};

/// Loss of a batch of base vectors pushed through `params`, with the exact
/// gradient with respect to every weight and bias.
LossAndGradient nt_xent_grad(std::span<const std::vector<double>> inputs,
                             std::span<const std::size_t> labels, double tau,
                             const ProjectionParams& params);

}  // namespace srcattr::contrastive
