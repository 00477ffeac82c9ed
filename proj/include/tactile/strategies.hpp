#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tactile/core.hpp"
#include "tactile/metrics.hpp"
#include "tactile/model.hpp"

namespace tactile {

// Mean of the j largest calibration values. j must be in [1, values.size()].
double calibrate_info_threshold(std::span<const double> values, int j);

// Draws r random q-subsets of the calibration features (sampling without
// replacement inside a draw, draws independent), scores each with diversity(),
// and returns the mean of the j largest scores. Requires
// 2 <= q <= features.size(), r >= 1, 1 <= j <= r.
double calibrate_div_threshold(const std::vector<std::vector<double>>& features,
                               int q, int r, int j, std::mt19937_64& rng);

// Outcome of offering one stream sample to a strategy.
struct Decision {
  bool kept = false;           // sample entered (or re-entered) the batch
  bool trigger_fired = false;  // a retraining boundary was crossed on this step
  std::optional<Sample> evicted;  // member displaced by a swap, if any
};

// One selection policy driving a CandidateBatch. Lifecycle per cycle:
// step() until retrain_due(), then take_batch(), retrain outside, and
// rearm() to start the next cycle. step() while a retrain is due throws
// std::logic_error.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual Decision step(const Sample& x, const Model& model) = 0;

  // True while the strategy is observing calibration samples (none are ever
  // selected during that phase).
  virtual bool calibrating() const { return false; }

  // True while decisions are not yet representative of steady-state cost
  // (calibration, or an unfilled preemption sub-batch).
  virtual bool warming_up() const { return calibrating(); }

  virtual bool retrain_due() const = 0;

  // Hands over the selected samples for labeling and empties internal
  // storage. Only valid when retrain_due().
  virtual std::vector<Sample> take_batch() = 0;

  // Resets to the freshly-constructed state (thresholds, buffers, and the
  // draw generator) so the next cycle calibrates against whatever model the
  // following step() calls carry.
  virtual void rearm() = 0;

  virtual const char* name() const = 0;

  // Introspection for decision logs; empty when not in force.
  virtual std::optional<double> gamma() const { return {}; }
  virtual std::optional<double> delta() const { return {}; }
  virtual std::optional<double> last_informativeness() const { return {}; }
  virtual std::optional<double> last_diversity() const { return {}; }
};

struct InfoRvParams {
  int k = 32;        // batch capacity
  int l = 100;       // calibration sample count
  int j = 25;        // top-j used for the threshold mean
};

// Entropy gate: observe l post-(re)train samples, set gamma to the mean of
// their top-j informativeness values, then keep x iff I(x) > gamma until k
// samples are batched.
class InfoRv final : public Strategy {
 public:
  explicit InfoRv(const InfoRvParams& params);

  Decision step(const Sample& x, const Model& model) override;
  bool calibrating() const override { return !gamma_.has_value(); }
  bool retrain_due() const override { return retrain_due_; }
  std::vector<Sample> take_batch() override;
  void rearm() override;
  const char* name() const override { return "info_rv"; }
  std::optional<double> gamma() const override { return gamma_; }
  std::optional<double> last_informativeness() const override { return last_info_; }

  const CandidateBatch& batch() const { return batch_; }

 private:
  InfoRvParams params_;
  std::vector<double> calib_;
  std::optional<double> gamma_;
  std::optional<double> last_info_;
  CandidateBatch batch_;
  bool retrain_due_ = false;
  bool taken_ = false;
};

struct DualRvParams {
  int k = 32;
  int info_l = 100;  // informativeness calibration count
  int info_j = 25;
  int div_l = 50;    // diversity calibration count
  int div_j = 30;
  int q = 10;        // subset size per diversity draw
  int r = 30;        // number of diversity draws
  std::uint64_t seed = 0;
};

// Two sequential gates: the entropy gate from InfoRv, then a batch-diversity
// gate. A candidate passing the entropy gate is tentatively inserted; it
// stays only if the batch diversity with it present exceeds delta. The first
// entropy-passing sample of a cycle enters without the diversity test.
class DualRv final : public Strategy {
 public:
  explicit DualRv(const DualRvParams& params);

  Decision step(const Sample& x, const Model& model) override;
  bool calibrating() const override { return phase_ != Phase::Select; }
  bool retrain_due() const override { return retrain_due_; }
  std::vector<Sample> take_batch() override;
  void rearm() override;
  const char* name() const override { return "dual_rv"; }
  std::optional<double> gamma() const override { return gamma_; }
  std::optional<double> delta() const override { return delta_; }
  std::optional<double> last_informativeness() const override { return last_info_; }
  std::optional<double> last_diversity() const override { return last_div_; }

  const CandidateBatch& batch() const { return batch_; }

 private:
  enum class Phase { InfoCalib, DivCalib, Select };

  DualRvParams params_;
  Phase phase_ = Phase::InfoCalib;
  std::vector<double> info_calib_;
  std::vector<std::vector<double>> div_calib_;
  std::optional<double> gamma_;
  std::optional<double> delta_;
  std::optional<double> last_info_;
  std::optional<double> last_div_;
  CandidateBatch batch_;
  std::mt19937_64 rng_;
  bool retrain_due_ = false;
  bool taken_ = false;
};

struct PreemptionParams {
  int k_sub = 16;    // sub-batch capacity per window
  int window = 256;  // stream positions per window
  int n_sub = 2;     // windows accumulated before a retrain
  ObjectiveWeights weights;
};

// Window-preemption baseline: the first k_sub samples of a window fill the
// sub-batch; every later sample is tried as a single swap against each
// member, scored by the combined entropy/log-det objective over cached
// posteriors and features. The best strictly-improving swap (lowest index on
// equal scores) is adopted. A window closes after `window` stream positions;
// after n_sub windows the concatenated sub-batches are due for labeling.
class Preemption final : public Strategy {
 public:
  explicit Preemption(const PreemptionParams& params);

  Decision step(const Sample& x, const Model& model) override;
  bool warming_up() const override { return batch_.size() < batch_.capacity(); }
  bool retrain_due() const override { return retrain_due_; }
  std::vector<Sample> take_batch() override;
  void rearm() override;
  const char* name() const override { return "preemption"; }
  std::optional<double> last_informativeness() const override { return last_info_; }

  const CandidateBatch& batch() const { return batch_; }
  double objective() const;  // combined objective of the current sub-batch

 private:
  void close_window();

  PreemptionParams params_;
  CandidateBatch batch_;
  std::vector<std::vector<double>> probs_;
  std::vector<Sample> pending_;  // closed windows awaiting the retrain
  int seen_in_window_ = 0;
  int windows_closed_ = 0;
  std::optional<double> last_info_;
  bool retrain_due_ = false;
  bool taken_ = false;
};

struct RandomPickParams {
  int k = 32;
  double p = 0.25;  // keep probability per sample
  std::uint64_t seed = 0;
};

// I.i.d. coin per sample; keeps until the batch fills.
class RandomPick final : public Strategy {
 public:
  explicit RandomPick(const RandomPickParams& params);

  Decision step(const Sample& x, const Model& model) override;
  bool retrain_due() const override { return retrain_due_; }
  std::vector<Sample> take_batch() override;
  void rearm() override;
  const char* name() const override { return "random"; }

  const CandidateBatch& batch() const { return batch_; }

 private:
  RandomPickParams params_;
  CandidateBatch batch_;
  std::mt19937_64 rng_;
  bool retrain_due_ = false;
  bool taken_ = false;
};

}  // namespace tactile
