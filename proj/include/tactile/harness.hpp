#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tactile/config.hpp"
#include "tactile/core.hpp"
#include "tactile/strategies.hpp"

namespace tactile {

// Label provider with an audit trail. Labels may only be requested for
// samples that were actually served by the stream, and every request is
// counted against the budget.
class Oracle {
 public:
  explicit Oracle(const std::vector<LabeledSample>& stream_items);

  void mark_served(std::int64_t id);

  // Labels for a batch of served ids; unknown or unserved ids throw
  // std::out_of_range. Increments the budget by ids.size().
  std::vector<int> label(const std::vector<std::int64_t>& ids);

  std::size_t query_count() const { return query_count_; }

 private:
  std::map<std::int64_t, int> labels_;
  std::map<std::int64_t, bool> served_;
  std::size_t query_count_ = 0;
};

// One row of records.csv: the state after retrain retrain_index of a trial
// (index 0 is the pre-stream baseline).
struct ExperimentRecord {
  int trial = 0;
  int retrain_index = 0;
  long samples_seen = 0;
  long labels_spent = 0;
  long dataset_size = 0;
  double test_accuracy = 0.0;
  double mean_decision_time_s = 0.0;
  double retrain_time_s = 0.0;
};

// One row of decisions.csv: a single stream sample offered to the strategy.
// Optional fields are empty in the file when the strategy did not compute
// them. gamma/delta are the thresholds in force when the sample arrived.
struct DecisionRow {
  int trial = 0;
  std::int64_t stream_id = 0;
  std::optional<double> informativeness;
  std::optional<double> diversity_after;
  std::optional<double> gamma;
  std::optional<double> delta;
  bool kept = false;
  bool trigger_fired = false;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::vector<DecisionRow> decisions;
  // One message per trial that aborted (e.g. diverged training). Completed
  // trials keep their rows either way.
  std::vector<std::string> failures;
};

struct SummaryRow {
  int retrain_index = 0;
  double mean_accuracy = 0.0;
  double var_accuracy = 0.0;  // population variance across trials
  double mean_labels_spent = 0.0;
};

// Builds the strategy described by cfg; seed drives the strategy's own draws.
std::unique_ptr<Strategy> make_strategy(const ExperimentConfig& cfg, std::uint64_t seed);

// Builds the model stack described by cfg for the given input shape and
// class count, applying cfg.feature_cut.
Model make_model(const ExperimentConfig& cfg, Shape input, int class_count,
                 std::uint64_t seed);

// Loads (or generates) the {train, test} pair for cfg.dataset.
std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& cfg);

// Runs cfg.trials independent trials against a fixed train/test split. Per
// trial: shuffle the train split, carve off the first d0_size items as the
// seed set, train the baseline, then stream the remainder through the
// strategy with a retrain after every completed batch, stopping after
// retrain_limit retrains or stream end.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                const Dataset& test);

// load_dataset + run_experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Per-retrain-index aggregation over trials, sorted by index.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

// records.csv, decisions.csv, summary.csv under out_dir (created if needed).
void write_results(const std::vector<ExperimentRecord>& records,
                   const std::vector<DecisionRow>& decisions,
                   const std::string& out_dir);

struct MemoryModel {
  long k = 0;            // batch capacity
  long image_bytes = 0;  // one buffered instance
  long feature_bytes = 0;  // one cached feature vector
};

// Steady-state buffer bytes a strategy pins between retrains.
long account_memory(StrategyKind kind, const MemoryModel& mem);

// Reference memory model for a dataset at batch capacity k: image bytes from
// the input shape (1 byte/pixel), feature bytes from the reference
// architecture's flatten width (4 bytes/value).
MemoryModel memory_model_for(DatasetKind dataset, int k);

// Host-measured seconds scaled to a slower target clock.
double estimate_mcu_time(double t_host_s, double host_clock_hz, double target_clock_hz);

struct DecisionTiming {
  double mean_seconds = 0.0;
  std::size_t decisions = 0;
};

// Mean wall-clock step() cost over at least min_decisions non-warmup
// decisions, cycling through the given samples. Retrains are rearmed without
// training and never timed.
DecisionTiming measure_decision_time(Strategy& strategy, const Model& model,
                                     std::span<const Sample> samples,
                                     std::size_t min_decisions);

}  // namespace tactile
