#include "tactile/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace tactile {

Oracle::Oracle(const std::vector<LabeledSample>& stream_items) {
  for (const LabeledSample& item : stream_items) {
    labels_[item.sample.id] = item.label;
    served_[item.sample.id] = false;
  }
}

void Oracle::mark_served(std::int64_t id) {
  auto it = served_.find(id);
  if (it == served_.end()) {
    throw std::out_of_range("oracle: unknown sample id " + std::to_string(id));
  }
  it->second = true;
}

std::vector<int> Oracle::label(const std::vector<std::int64_t>& ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (std::int64_t id : ids) {
    auto it = served_.find(id);
    if (it == served_.end()) {
      throw std::out_of_range("oracle: unknown sample id " + std::to_string(id));
    }
    if (!it->second) {
      throw std::out_of_range("oracle: sample " + std::to_string(id) +
                              " was never served by the stream");
    }
    out.push_back(labels_.at(id));
  }
  query_count_ += ids.size();
  return out;
}

std::unique_ptr<Strategy> make_strategy(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.strategy) {
    case StrategyKind::InfoRv: {
      InfoRvParams p;
      p.k = cfg.k;
      p.l = cfg.l;
      p.j = cfg.j;
      return std::make_unique<InfoRv>(p);
    }
    case StrategyKind::DualRv: {
      DualRvParams p;
      p.k = cfg.k;
      p.info_l = cfg.l;
      p.info_j = cfg.j;
      p.div_l = cfg.div_l;
      p.div_j = cfg.div_j;
      p.q = cfg.q;
      p.r = cfg.r;
      p.seed = seed;
      return std::make_unique<DualRv>(p);
    }
    case StrategyKind::Preemption: {
      PreemptionParams p;
      p.k_sub = cfg.k;
      p.window = cfg.window;
      p.n_sub = cfg.n_sub;
      p.weights = {cfg.lambda_i, cfg.lambda_d, cfg.alpha};
      return std::make_unique<Preemption>(p);
    }
    case StrategyKind::Random: {
      RandomPickParams p;
      p.k = cfg.k;
      p.p = cfg.p;
      p.seed = seed;
      return std::make_unique<RandomPick>(p);
    }
  }
  throw std::logic_error("unreachable strategy kind");
}

Model make_model(const ExperimentConfig& cfg, Shape input, int class_count,
                 std::uint64_t seed) {
  std::vector<LayerSpec> layers =
      is_preset_name(cfg.arch) ? preset_layer_stack(cfg.arch, class_count)
                               : parse_layer_stack(cfg.arch, class_count);
  Model model(std::move(layers), input, seed);
  if (cfg.feature_cut >= 0) {
    model.set_feature_cut(static_cast<std::size_t>(cfg.feature_cut));
  }
  return model;
}

std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  switch (cfg.dataset) {
    case DatasetKind::Synthetic:
      return make_synthetic(cfg.synthetic);
    case DatasetKind::Mnist:
    case DatasetKind::FashionMnist: {
      fs::path base = fs::path(cfg.data_dir) /
                      (cfg.dataset == DatasetKind::Mnist ? "mnist" : "fashion_mnist");
      Dataset train = load_idx((base / "train-images-idx3-ubyte").string(),
                               (base / "train-labels-idx1-ubyte").string());
      Dataset test = load_idx((base / "t10k-images-idx3-ubyte").string(),
                              (base / "t10k-labels-idx1-ubyte").string());
      return {std::move(train), std::move(test)};
    }
    case DatasetKind::Cifar10: {
      fs::path base = fs::path(cfg.data_dir) / "cifar10";
      std::vector<std::string> batches;
      for (int i = 1; i <= 5; ++i) {
        batches.push_back((base / ("data_batch_" + std::to_string(i) + ".bin")).string());
      }
      Dataset train = load_cifar10(batches);
      Dataset test = load_cifar10({(base / "test_batch.bin").string()});
      return {std::move(train), std::move(test)};
    }
  }
  throw std::logic_error("unreachable dataset kind");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Salts for per-trial seed derivation; a trial's stream order and strategy
// draws stay fixed when only cfg.strategy changes, so strategies compare on
// identical streams.
constexpr std::uint64_t kSaltStream = 1;
constexpr std::uint64_t kSaltModel = 2;
constexpr std::uint64_t kSaltBaseTrain = 3;
constexpr std::uint64_t kSaltStrategy = 4;
constexpr std::uint64_t kSaltRetrain = 100;
constexpr std::uint64_t kSaltTrial = 0x74726C00;

void run_trial(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test,
               int trial, ExperimentResult& result) {
  const std::uint64_t trial_seed = mix_seed(cfg.seed, kSaltTrial + trial);

  std::vector<LabeledSample> pool = train.items;
  std::mt19937_64 shuffle_rng(mix_seed(trial_seed, kSaltStream));
  seeded_shuffle(pool, shuffle_rng);

  Dataset labeled;
  labeled.shape = train.shape;
  labeled.class_count = train.class_count;
  labeled.items.assign(pool.begin(), pool.begin() + cfg.d0_size);

  std::vector<LabeledSample> stream_items(pool.begin() + cfg.d0_size, pool.end());
  if (cfg.stream_length >= 0 &&
      stream_items.size() > static_cast<std::size_t>(cfg.stream_length)) {
    stream_items.resize(static_cast<std::size_t>(cfg.stream_length));
  }
  for (std::size_t i = 0; i < stream_items.size(); ++i) {
    stream_items[i].sample.id = static_cast<std::int64_t>(i);
  }

  Oracle oracle(stream_items);
  Model model = make_model(cfg, train.shape, train.class_count,
                           mix_seed(trial_seed, kSaltModel));
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.beta1 = cfg.beta1;
  tc.beta2 = cfg.beta2;
  tc.epsilon = cfg.epsilon;
  tc.seed = mix_seed(trial_seed, kSaltBaseTrain);

  auto t0 = Clock::now();
  model.train(labeled, tc, /*warm_start=*/false);
  double base_train_s = cfg.measure_time ? seconds_since(t0) : 0.0;

  result.records.push_back({trial, 0, 0, 0, static_cast<long>(labeled.items.size()),
                            model.evaluate(test), 0.0, base_train_s});
  if (cfg.retrain_limit == 0) return;

  std::unique_ptr<Strategy> strategy =
      make_strategy(cfg, mix_seed(trial_seed, kSaltStrategy));
  DataStream stream(stream_items);
  int retrains = 0;
  long seen = 0;
  std::vector<double> decision_times;

  while (std::optional<Sample> x = stream.next()) {
    ++seen;
    oracle.mark_served(x->id);

    DecisionRow row;
    row.trial = trial;
    row.stream_id = x->id;
    row.gamma = strategy->gamma();
    row.delta = strategy->delta();
    const bool calibrating = strategy->calibrating();

    Decision decision;
    if (cfg.measure_time) {
      auto ts = Clock::now();
      decision = strategy->step(*x, model);
      double dt = seconds_since(ts);
      if (!calibrating) decision_times.push_back(dt);
    } else {
      decision = strategy->step(*x, model);
    }

    row.informativeness = strategy->last_informativeness();
    row.diversity_after = strategy->last_diversity();
    row.kept = decision.kept;
    row.trigger_fired = decision.trigger_fired;
    result.decisions.push_back(row);

    if (!strategy->retrain_due()) continue;

    std::vector<Sample> batch = strategy->take_batch();
    std::vector<std::int64_t> ids;
    ids.reserve(batch.size());
    for (const Sample& s : batch) ids.push_back(s.id);
    std::vector<int> labels = oracle.label(ids);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      labeled.items.push_back({std::move(batch[i]), labels[i]});
    }

    ++retrains;
    tc.seed = mix_seed(trial_seed, kSaltRetrain + retrains);
    auto tr = Clock::now();
    model.train(labeled, tc, cfg.warm_start);
    double retrain_s = cfg.measure_time ? seconds_since(tr) : 0.0;

    if (oracle.query_count() != labeled.items.size() - static_cast<std::size_t>(cfg.d0_size)) {
      throw std::logic_error("label budget out of sync with dataset growth");
    }

    double mean_dt = 0.0;
    if (!decision_times.empty()) {
      mean_dt = std::accumulate(decision_times.begin(), decision_times.end(), 0.0) /
                static_cast<double>(decision_times.size());
    }
    decision_times.clear();

    result.records.push_back({trial, retrains, seen,
                              static_cast<long>(oracle.query_count()),
                              static_cast<long>(labeled.items.size()),
                              model.evaluate(test), mean_dt, retrain_s});

    strategy->rearm();
    if (retrains >= cfg.retrain_limit) break;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                const Dataset& test) {
  cfg.validate();
  train.validate();
  test.validate();
  if (!(train.shape == test.shape) || train.class_count != test.class_count) {
    throw std::invalid_argument("train and test splits disagree on shape or classes");
  }
  if (static_cast<std::size_t>(cfg.d0_size) > train.items.size()) {
    throw std::invalid_argument("d0_size exceeds the train split");
  }

  ExperimentResult result;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    try {
      run_trial(cfg, train, test, trial, result);
    } catch (const std::runtime_error& e) {
      result.failures.push_back("trial " + std::to_string(trial) + ": " + e.what());
    }
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  auto [train, test] = load_dataset(cfg);
  return run_experiment(cfg, train, test);
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  std::map<int, std::vector<const ExperimentRecord*>> by_index;
  for (const ExperimentRecord& r : records) by_index[r.retrain_index].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [index, rows] : by_index) {
    const double n = static_cast<double>(rows.size());
    double mean_acc = 0.0, mean_labels = 0.0;
    for (const ExperimentRecord* r : rows) {
      mean_acc += r->test_accuracy;
      mean_labels += static_cast<double>(r->labels_spent);
    }
    mean_acc /= n;
    mean_labels /= n;
    double var = 0.0;
    for (const ExperimentRecord* r : rows) {
      var += (r->test_accuracy - mean_acc) * (r->test_accuracy - mean_acc);
    }
    var /= n;
    out.push_back({index, mean_acc, var, mean_labels});
  }
  return out;
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

}  // namespace

void write_results(const std::vector<ExperimentRecord>& records,
                   const std::vector<DecisionRow>& decisions,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir);

  {
    std::ofstream os = open_out(dir / "records.csv");
    os << "trial,retrain_index,samples_seen,labels_spent,dataset_size,"
          "test_accuracy,mean_decision_time_s,retrain_time_s\n";
    for (const ExperimentRecord& r : records) {
      os << r.trial << ',' << r.retrain_index << ',' << r.samples_seen << ','
         << r.labels_spent << ',' << r.dataset_size << ',' << fmt_double(r.test_accuracy)
         << ',' << fmt_double(r.mean_decision_time_s) << ',' << fmt_double(r.retrain_time_s)
         << '\n';
    }
    if (!os) throw std::runtime_error("write failed for records.csv");
  }
  {
    std::ofstream os = open_out(dir / "decisions.csv");
    os << "trial,stream_id,informativeness,diversity_after,gamma,delta,kept,"
          "trigger_fired\n";
    for (const DecisionRow& d : decisions) {
      os << d.trial << ',' << d.stream_id << ',' << opt_cell(d.informativeness) << ','
         << opt_cell(d.diversity_after) << ',' << opt_cell(d.gamma) << ','
         << opt_cell(d.delta) << ',' << (d.kept ? 1 : 0) << ','
         << (d.trigger_fired ? 1 : 0) << '\n';
    }
    if (!os) throw std::runtime_error("write failed for decisions.csv");
  }
  {
    std::ofstream os = open_out(dir / "summary.csv");
    os << "retrain_index,mean_accuracy,var_accuracy,mean_labels_spent\n";
    for (const SummaryRow& s : summarize(records)) {
      os << s.retrain_index << ',' << fmt_double(s.mean_accuracy) << ','
         << fmt_double(s.var_accuracy) << ',' << fmt_double(s.mean_labels_spent) << '\n';
    }
    if (!os) throw std::runtime_error("write failed for summary.csv");
  }
}

long account_memory(StrategyKind kind, const MemoryModel& mem) {
  if (mem.k < 0 || mem.image_bytes < 0 || mem.feature_bytes < 0) {
    throw std::invalid_argument("memory model values must be >= 0");
  }
  switch (kind) {
    case StrategyKind::InfoRv:
    case StrategyKind::Random:
      return mem.k * mem.image_bytes;
    case StrategyKind::DualRv:
      return mem.k * (mem.image_bytes + mem.feature_bytes);
    case StrategyKind::Preemption:
      return (mem.k + 1) * mem.image_bytes + (mem.k + 2) * mem.feature_bytes;
  }
  throw std::logic_error("unreachable strategy kind");
}

MemoryModel memory_model_for(DatasetKind dataset, int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  MemoryModel mem;
  mem.k = k;
  switch (dataset) {
    case DatasetKind::Mnist:
      mem.image_bytes = 28 * 28 * 1;
      mem.feature_bytes = 200 * 4;
      break;
    case DatasetKind::FashionMnist:
      mem.image_bytes = 28 * 28 * 1;
      mem.feature_bytes = 576 * 4;
      break;
    case DatasetKind::Cifar10:
      mem.image_bytes = 32 * 32 * 3;
      mem.feature_bytes = 1600 * 4;
      break;
    case DatasetKind::Synthetic: {
      SyntheticSpec def;
      mem.image_bytes = def.height * def.width * def.channels;
      mem.feature_bytes = static_cast<long>(def.height) * def.width * def.channels * 4;
      break;
    }
  }
  return mem;
}

double estimate_mcu_time(double t_host_s, double host_clock_hz, double target_clock_hz) {
  if (!std::isfinite(t_host_s) || t_host_s < 0.0) {
    throw std::invalid_argument("host time must be finite and >= 0");
  }
  if (!(host_clock_hz > 0.0) || !(target_clock_hz > 0.0)) {
    throw std::invalid_argument("clock rates must be > 0");
  }
  return t_host_s * host_clock_hz / target_clock_hz;
}

DecisionTiming measure_decision_time(Strategy& strategy, const Model& model,
                                     std::span<const Sample> samples,
                                     std::size_t min_decisions) {
  if (samples.empty()) throw std::invalid_argument("timing needs at least one sample");
  if (min_decisions == 0) throw std::invalid_argument("timing needs min_decisions >= 1");

  DecisionTiming out;
  double total = 0.0;
  std::size_t i = 0;
  const std::size_t cap = min_decisions * 1000;
  while (out.decisions < min_decisions) {
    if (i > cap) {
      throw std::runtime_error("strategy never left warmup while timing decisions");
    }
    if (strategy.retrain_due()) {
      strategy.take_batch();
      strategy.rearm();
    }
    const Sample& x = samples[i++ % samples.size()];
    const bool warm = strategy.warming_up();
    auto t0 = Clock::now();
    strategy.step(x, model);
    double dt = seconds_since(t0);
    if (!warm) {
      total += dt;
      ++out.decisions;
    }
  }
  out.mean_seconds = total / static_cast<double>(out.decisions);
  return out;
}

}  // namespace tactile
