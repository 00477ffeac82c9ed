#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tactile/datasets.hpp"
#include "tactile/model.hpp"

namespace tactile {

enum class DatasetKind { Synthetic, Mnist, FashionMnist, Cifar10 };
enum class StrategyKind { InfoRv, DualRv, Preemption, Random };

std::string to_string(DatasetKind kind);
std::string to_string(StrategyKind kind);
DatasetKind parse_dataset_kind(const std::string& s);
StrategyKind parse_strategy_kind(const std::string& s);

// Flat key = value experiment description. Unknown keys are an error, both in
// files and in overrides. normalize() may adjust dependent values and returns
// one warning line per adjustment; validate() throws std::invalid_argument on
// hard violations.
struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Synthetic;
  std::string data_dir = "data";

  int d0_size = 150;
  long stream_length = -1;  // -1 means the whole remaining train split
  int trials = 10;
  int retrain_limit = 3;
  std::uint64_t seed = 1;

  StrategyKind strategy = StrategyKind::InfoRv;
  int k = 32;
  int l = 100;
  int j = 25;
  int div_l = 50;
  int div_j = 30;
  int q = 10;
  int r = 30;
  int window = 256;
  int n_sub = 2;
  double lambda_i = 1.0;
  double lambda_d = 1.0;
  double alpha = 1.0;
  double p = 0.25;

  std::string arch = "mlp_desk";
  int feature_cut = -1;  // -1 means the flatten layer
  int epochs = 10;
  int batch_size = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool warm_start = true;

  bool measure_time = false;
  std::string out_dir = "results";

  SyntheticSpec synthetic;

  // Parses `key = value` lines; '#' starts a comment; blank lines ignored.
  static ExperimentConfig from_file(const std::string& path);

  // Applies one key=value pair (same keys as the file format).
  void set(const std::string& key, const std::string& value);

  // Clamps dependent values (top-j counts above their calibration window)
  // and returns a warning per change.
  std::vector<std::string> normalize();

  // Hard checks; call after normalize().
  void validate() const;

  // Key -> value for every known key, for deterministic dumps.
  std::map<std::string, std::string> dump() const;
};

}  // namespace tactile
