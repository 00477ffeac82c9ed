#include "tactile/strategies.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tactile {

double calibrate_info_threshold(std::span<const double> values, int j) {
  if (values.empty()) throw std::invalid_argument("calibration needs at least one value");
  if (j < 1 || static_cast<std::size_t>(j) > values.size()) {
    throw std::invalid_argument("top-j count must be in [1, value count]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::partial_sort(sorted.begin(), sorted.begin() + j, sorted.end(),
                    std::greater<double>());
  double sum = std::accumulate(sorted.begin(), sorted.begin() + j, 0.0);
  return sum / static_cast<double>(j);
}

double calibrate_div_threshold(const std::vector<std::vector<double>>& features,
                               int q, int r, int j, std::mt19937_64& rng) {
  const std::size_t n = features.size();
  if (q < 2 || static_cast<std::size_t>(q) > n) {
    throw std::invalid_argument("subset size q must be in [2, feature count]");
  }
  if (r < 1) throw std::invalid_argument("draw count r must be >= 1");
  if (j < 1 || j > r) throw std::invalid_argument("top-j count must be in [1, r]");

  // One draw = a partial Fisher-Yates over index positions 0..q-1; the swap
  // target for position i is i + rng() % (n - i). Fixed so seeded replays
  // reproduce the exact subsets.
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(r));
  std::vector<std::size_t> idx(n);
  std::vector<std::vector<double>> subset(static_cast<std::size_t>(q));
  for (int draw = 0; draw < r; ++draw) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(q); ++i) {
      std::size_t pick = i + static_cast<std::size_t>(rng() % (n - i));
      std::swap(idx[i], idx[pick]);
      subset[i] = features[idx[i]];
    }
    scores.push_back(diversity(subset));
  }
  return calibrate_info_threshold(scores, j);
}

namespace {

[[noreturn]] void throw_step_while_due(const char* who) {
  throw std::logic_error(std::string(who) +
                         ": step while a retrain is due; take_batch and rearm first");
}

[[noreturn]] void throw_take_not_due(const char* who) {
  throw std::logic_error(std::string(who) + ": take_batch before a retrain is due");
}

}  // namespace

InfoRv::InfoRv(const InfoRvParams& params)
    : params_(params), batch_(static_cast<std::size_t>(std::max(params.k, 1))) {
  if (params.k < 1) throw std::invalid_argument("info_rv: k must be >= 1");
  if (params.l < 1) throw std::invalid_argument("info_rv: l must be >= 1");
  if (params.j < 1 || params.j > params.l) {
    throw std::invalid_argument("info_rv: j must be in [1, l]");
  }
  calib_.reserve(static_cast<std::size_t>(params.l));
}

Decision InfoRv::step(const Sample& x, const Model& model) {
  if (retrain_due_) throw_step_while_due(name());
  double info = entropy(model.predict_proba(x));
  last_info_ = info;
  if (!gamma_) {
    calib_.push_back(info);
    if (calib_.size() == static_cast<std::size_t>(params_.l)) {
      gamma_ = calibrate_info_threshold(calib_, params_.j);
    }
    return {};
  }
  Decision d;
  if (info > *gamma_) {
    batch_.insert(x, {}, info);
    d.kept = true;
    if (batch_.full()) {
      retrain_due_ = true;
      d.trigger_fired = true;
    }
  }
  return d;
}

std::vector<Sample> InfoRv::take_batch() {
  if (!retrain_due_ || taken_) throw_take_not_due(name());
  std::vector<Sample> out = batch_.samples();
  batch_.clear();
  taken_ = true;
  return out;
}

void InfoRv::rearm() {
  calib_.clear();
  gamma_.reset();
  last_info_.reset();
  batch_.clear();
  retrain_due_ = false;
  taken_ = false;
}

DualRv::DualRv(const DualRvParams& params)
    : params_(params),
      batch_(static_cast<std::size_t>(std::max(params.k, 1))),
      rng_(params.seed) {
  if (params.k < 1) throw std::invalid_argument("dual_rv: k must be >= 1");
  if (params.info_l < 1) throw std::invalid_argument("dual_rv: info_l must be >= 1");
  if (params.info_j < 1 || params.info_j > params.info_l) {
    throw std::invalid_argument("dual_rv: info_j must be in [1, info_l]");
  }
  if (params.div_l < 2) throw std::invalid_argument("dual_rv: div_l must be >= 2");
  if (params.q < 2 || params.q > params.div_l) {
    throw std::invalid_argument("dual_rv: q must be in [2, div_l]");
  }
  if (params.r < 1) throw std::invalid_argument("dual_rv: r must be >= 1");
  if (params.div_j < 1 || params.div_j > params.r) {
    throw std::invalid_argument("dual_rv: div_j must be in [1, r]");
  }
}

Decision DualRv::step(const Sample& x, const Model& model) {
  if (retrain_due_) throw_step_while_due(name());
  last_info_.reset();
  last_div_.reset();
  switch (phase_) {
    case Phase::InfoCalib: {
      double info = entropy(model.predict_proba(x));
      last_info_ = info;
      info_calib_.push_back(info);
      if (info_calib_.size() == static_cast<std::size_t>(params_.info_l)) {
        gamma_ = calibrate_info_threshold(info_calib_, params_.info_j);
        phase_ = Phase::DivCalib;
      }
      return {};
    }
    case Phase::DivCalib: {
      div_calib_.push_back(model.extract_features(x));
      if (div_calib_.size() == static_cast<std::size_t>(params_.div_l)) {
        delta_ = calibrate_div_threshold(div_calib_, params_.q, params_.r,
                                         params_.div_j, rng_);
        div_calib_.clear();
        phase_ = Phase::Select;
      }
      return {};
    }
    case Phase::Select:
      break;
  }

  double info = entropy(model.predict_proba(x));
  last_info_ = info;
  if (!(info > *gamma_)) return {};  // fails the entropy gate; batch untouched

  std::vector<double> feat = model.extract_features(x);
  Decision d;
  if (batch_.empty()) {
    // First entropy-passing sample of the cycle enters unconditionally;
    // a single feature has no pairwise diversity.
    last_div_ = 0.0;
    batch_.insert(x, std::move(feat), info);
    d.kept = true;
  } else {
    std::vector<std::vector<double>> trial = batch_.features();
    trial.push_back(feat);
    double div = diversity(trial);
    last_div_ = div;
    if (div > *delta_) {
      batch_.insert(x, std::move(feat), info);
      d.kept = true;
    }
  }
  if (batch_.full()) {
    retrain_due_ = true;
    d.trigger_fired = true;
  }
  return d;
}

std::vector<Sample> DualRv::take_batch() {
  if (!retrain_due_ || taken_) throw_take_not_due(name());
  std::vector<Sample> out = batch_.samples();
  batch_.clear();
  taken_ = true;
  return out;
}

void DualRv::rearm() {
  phase_ = Phase::InfoCalib;
  info_calib_.clear();
  div_calib_.clear();
  gamma_.reset();
  delta_.reset();
  last_info_.reset();
  last_div_.reset();
  batch_.clear();
  rng_ = std::mt19937_64(params_.seed);
  retrain_due_ = false;
  taken_ = false;
}

Preemption::Preemption(const PreemptionParams& params)
    : params_(params), batch_(static_cast<std::size_t>(std::max(params.k_sub, 1))) {
  if (params.k_sub < 1) throw std::invalid_argument("preemption: k_sub must be >= 1");
  if (params.window < params.k_sub) {
    throw std::invalid_argument("preemption: window must be >= k_sub");
  }
  if (params.n_sub < 1) throw std::invalid_argument("preemption: n_sub must be >= 1");
  params.weights.validate();
}

double Preemption::objective() const {
  return combined_objective(probs_, batch_.features(), params_.weights);
}

Decision Preemption::step(const Sample& x, const Model& model) {
  if (retrain_due_) throw_step_while_due(name());
  std::vector<double> p = model.predict_proba(x);
  double info = entropy(p);
  last_info_ = info;
  std::vector<double> feat = model.extract_features(x);

  Decision d;
  if (!batch_.full()) {
    batch_.insert(x, std::move(feat), info);
    probs_.push_back(std::move(p));
    d.kept = true;
  } else {
    const double incumbent = objective();
    double best = incumbent;
    std::size_t best_i = batch_.size();
    std::vector<std::vector<double>> cand_probs = probs_;
    std::vector<std::vector<double>> cand_feats = batch_.features();
    for (std::size_t i = 0; i < batch_.size(); ++i) {
      cand_probs[i] = p;
      cand_feats[i] = feat;
      double score = combined_objective(cand_probs, cand_feats, params_.weights);
      // Strict improvement keeps the incumbent on ties; strict comparison to
      // the running best keeps the lowest improving index.
      if (score > best) {
        best = score;
        best_i = i;
      }
      cand_probs[i] = probs_[i];
      cand_feats[i] = batch_.feature(i);
    }
    if (best_i < batch_.size()) {
      d.evicted = batch_.sample(best_i);
      batch_.swap(best_i, x, std::move(feat), info);
      probs_[best_i] = std::move(p);
      d.kept = true;
    }
  }

  ++seen_in_window_;
  if (seen_in_window_ == params_.window) {
    close_window();
    d.trigger_fired = true;
  }
  return d;
}

void Preemption::close_window() {
  for (const Sample& s : batch_.samples()) pending_.push_back(s);
  batch_.clear();
  probs_.clear();
  seen_in_window_ = 0;
  if (++windows_closed_ == params_.n_sub) retrain_due_ = true;
}

std::vector<Sample> Preemption::take_batch() {
  if (!retrain_due_ || taken_) throw_take_not_due(name());
  std::vector<Sample> out = std::move(pending_);
  pending_.clear();
  taken_ = true;
  return out;
}

void Preemption::rearm() {
  batch_.clear();
  probs_.clear();
  pending_.clear();
  seen_in_window_ = 0;
  windows_closed_ = 0;
  last_info_.reset();
  retrain_due_ = false;
  taken_ = false;
}

RandomPick::RandomPick(const RandomPickParams& params)
    : params_(params),
      batch_(static_cast<std::size_t>(std::max(params.k, 1))),
      rng_(params.seed) {
  if (params.k < 1) throw std::invalid_argument("random: k must be >= 1");
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw std::invalid_argument("random: keep probability must be in [0, 1]");
  }
}

Decision RandomPick::step(const Sample& x, const Model&) {
  if (retrain_due_) throw_step_while_due(name());
  double u = uniform01(rng_);
  Decision d;
  if (u < params_.p) {
    batch_.insert(x);
    d.kept = true;
    if (batch_.full()) {
      retrain_due_ = true;
      d.trigger_fired = true;
    }
  }
  return d;
}

std::vector<Sample> RandomPick::take_batch() {
  if (!retrain_due_ || taken_) throw_take_not_due(name());
  std::vector<Sample> out = batch_.samples();
  batch_.clear();
  taken_ = true;
  return out;
}

void RandomPick::rearm() {
  batch_.clear();
  rng_ = std::mt19937_64(params_.seed);
  retrain_due_ = false;
  taken_ = false;
}

}  // namespace tactile
