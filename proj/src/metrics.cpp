#include "tactile/metrics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tactile {

void ObjectiveWeights::validate() const {
  if (!std::isfinite(lambda_info) || lambda_info < 0.0) {
    throw std::invalid_argument("lambda_info must be finite and >= 0");
  }
  if (!std::isfinite(lambda_div) || lambda_div < 0.0) {
    throw std::invalid_argument("lambda_div must be finite and >= 0");
  }
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw std::invalid_argument("alpha must be finite and > 0");
  }
}

namespace {

void check_prob_vector(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("probability vector is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw std::invalid_argument("probability is not finite");
    if (p < 0.0) throw std::invalid_argument("probability is negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(sum) +
                                ", expected 1 within 1e-6");
  }
}

void check_finite_vector(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " contains a non-finite value");
    }
  }
}

// Enforces one shared length and finiteness across a feature set.
std::size_t check_feature_set(const std::vector<std::vector<double>>& features) {
  std::size_t dim = features.front().size();
  for (const auto& f : features) {
    check_finite_vector(f, "feature vector");
    if (f.size() != dim) {
      throw std::invalid_argument("feature vectors have mixed lengths");
    }
  }
  return dim;
}

}  // namespace

double entropy(std::span<const double> probs) {
  check_prob_vector(probs);
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double margin_informativeness(std::span<const double> probs) {
  check_prob_vector(probs);
  if (probs.size() < 2) {
    throw std::invalid_argument("margin needs at least 2 classes");
  }
  double top1 = -1.0, top2 = -1.0;
  for (double p : probs) {
    if (p > top1) {
      top2 = top1;
      top1 = p;
    } else if (p > top2) {
      top2 = p;
    }
  }
  return 1.0 - (top1 - top2);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  check_finite_vector(u, "vector");
  check_finite_vector(v, "vector");
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine distance needs equal-length vectors");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

double diversity(const std::vector<std::vector<double>>& features) {
  if (features.size() < 2) return 0.0;
  check_feature_set(features);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      sum += cosine_distance(features[i], features[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double info_objective(const std::vector<std::vector<double>>& probs) {
  double total = 0.0;
  for (const auto& p : probs) total += entropy(p);
  return total;
}

double logdet_diversity(const std::vector<std::vector<double>>& features, double alpha) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw std::invalid_argument("alpha must be finite and > 0");
  }
  if (features.empty()) return 0.0;
  const std::size_t dim = check_feature_set(features);
  const auto n = static_cast<Eigen::Index>(features.size());

  Eigen::MatrixXd f(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Map<const Eigen::VectorXd> row(features[static_cast<std::size_t>(i)].data(),
                                          static_cast<Eigen::Index>(dim));
    double norm = row.norm();
    f.row(i) = row.transpose();
    if (norm > 0.0) f.row(i) /= norm;
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) + alpha * (f * f.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    m.diagonal().array() += 1e-6;
    llt.compute(m);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("logdet diversity: Cholesky failed even after jitter");
    }
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return 0.5 * logdet;
}

double combined_objective(const std::vector<std::vector<double>>& probs,
                          const std::vector<std::vector<double>>& features,
                          const ObjectiveWeights& weights) {
  weights.validate();
  if (probs.size() != features.size()) {
    throw std::invalid_argument("objective needs matching prob and feature counts");
  }
  return weights.lambda_info * info_objective(probs) +
         weights.lambda_div * logdet_diversity(features, weights.alpha);
}

}  // namespace tactile
