#pragma once

#include <span>
#include <vector>

namespace tactile {

struct ObjectiveWeights {
  double lambda_info = 1.0;
  double lambda_div = 1.0;
  double alpha = 1.0;

  // Throws std::invalid_argument on negative weights, non-positive alpha, or
  // non-finite values.
  void validate() const;
};

// Shannon entropy in nats over a probability vector; 0 * ln 0 contributes 0.
// Vector must be non-empty, non-negative, and sum to 1 within 1e-6.
double entropy(std::span<const double> probs);

// 1 - (p_(1) - p_(2)) over the two largest entries. Needs >= 2 classes.
double margin_informativeness(std::span<const double> probs);

// 1 - cos(u, v). Any zero-norm operand makes the distance 1 by convention.
double cosine_distance(std::span<const double> u, std::span<const double> v);

// Mean pairwise cosine distance over a feature set; fewer than 2 vectors
// give 0. All vectors must share one length.
double diversity(const std::vector<std::vector<double>>& features);

// Sum of entropies over a batch of probability vectors; empty batch gives 0.
double info_objective(const std::vector<std::vector<double>>& probs);

// (1/2) * log det(I + alpha * A) where A is the Gram matrix of the features
// after each is normalized to unit L2 norm. Zero-norm vectors are left as-is
// (their Gram row is zero). Empty set gives 0. A failed Cholesky gets one
// retry with 1e-6 jitter on the diagonal; a second failure throws
// std::runtime_error.
double logdet_diversity(const std::vector<std::vector<double>>& features, double alpha);

// lambda_info * info_objective(probs) + lambda_div * logdet_diversity(features,
// alpha), with probs and features describing the same members in the same
// order (sizes must agree).
double combined_objective(const std::vector<std::vector<double>>& probs,
                          const std::vector<std::vector<double>>& features,
                          const ObjectiveWeights& weights);

}  // namespace tactile
