#include "tactile/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace tactile {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Synthetic: return "synthetic";
    case DatasetKind::Mnist: return "mnist";
    case DatasetKind::FashionMnist: return "fashion_mnist";
    case DatasetKind::Cifar10: return "cifar10";
  }
  return "?";
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::InfoRv: return "info_rv";
    case StrategyKind::DualRv: return "dual_rv";
    case StrategyKind::Preemption: return "preemption";
    case StrategyKind::Random: return "random";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "synthetic") return DatasetKind::Synthetic;
  if (s == "mnist") return DatasetKind::Mnist;
  if (s == "fashion_mnist") return DatasetKind::FashionMnist;
  if (s == "cifar10") return DatasetKind::Cifar10;
  throw std::invalid_argument("unknown dataset '" + s + "'");
}

StrategyKind parse_strategy_kind(const std::string& s) {
  if (s == "info_rv") return StrategyKind::InfoRv;
  if (s == "dual_rv") return StrategyKind::DualRv;
  if (s == "preemption") return StrategyKind::Preemption;
  if (s == "random") return StrategyKind::Random;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + v + "'");
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + v + "'");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + v + "'");
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' needs an unsigned integer, got '" +
                                v + "'");
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key + "' needs an unsigned integer, got '" +
                                v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' needs a number, got '" + v + "'");
  }
  if (used != v.size()) {
    throw std::invalid_argument("config key '" + key + "' needs a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "' needs true|false, got '" + v + "'");
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = parse_dataset_kind(value);
  else if (key == "data_dir") data_dir = value;
  else if (key == "d0_size") d0_size = to_int(key, value);
  else if (key == "stream_length") stream_length = to_long(key, value);
  else if (key == "trials") trials = to_int(key, value);
  else if (key == "retrain_limit") retrain_limit = to_int(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "strategy") strategy = parse_strategy_kind(value);
  else if (key == "k") k = to_int(key, value);
  else if (key == "l") l = to_int(key, value);
  else if (key == "j") j = to_int(key, value);
  else if (key == "div_l") div_l = to_int(key, value);
  else if (key == "div_j") div_j = to_int(key, value);
  else if (key == "q") q = to_int(key, value);
  else if (key == "r") r = to_int(key, value);
  else if (key == "window") window = to_int(key, value);
  else if (key == "n_sub") n_sub = to_int(key, value);
  else if (key == "lambda_i") lambda_i = to_double(key, value);
  else if (key == "lambda_d") lambda_d = to_double(key, value);
  else if (key == "alpha") alpha = to_double(key, value);
  else if (key == "p") p = to_double(key, value);
  else if (key == "arch") arch = value;
  else if (key == "feature_cut") feature_cut = to_int(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "beta1") beta1 = to_double(key, value);
  else if (key == "beta2") beta2 = to_double(key, value);
  else if (key == "epsilon") epsilon = to_double(key, value);
  else if (key == "warm_start") warm_start = to_bool(key, value);
  else if (key == "measure_time") measure_time = to_bool(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "syn_classes") synthetic.classes = to_int(key, value);
  else if (key == "syn_height") synthetic.height = to_int(key, value);
  else if (key == "syn_width") synthetic.width = to_int(key, value);
  else if (key == "syn_channels") synthetic.channels = to_int(key, value);
  else if (key == "syn_train") synthetic.train_items = to_int(key, value);
  else if (key == "syn_test") synthetic.test_items = to_int(key, value);
  else if (key == "syn_noise") synthetic.noise = to_double(key, value);
  else if (key == "syn_jitter") synthetic.jitter = to_double(key, value);
  else if (key == "syn_seed") synthetic.seed = to_u64(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (std::size_t hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key = value: '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " has an empty key");
    }
    cfg.set(key, value);
  }
  return cfg;
}

std::vector<std::string> ExperimentConfig::normalize() {
  std::vector<std::string> warnings;
  auto clamp = [&](const char* name, int& value, int bound, const char* bound_name) {
    if (value > bound) {
      warnings.push_back(std::string("warning: ") + name + "=" + std::to_string(value) +
                         " exceeds " + bound_name + "=" + std::to_string(bound) +
                         ", clamped");
      value = bound;
    }
  };
  if (l >= 1) clamp("j", j, l, "l");
  if (r >= 1) clamp("div_j", div_j, r, "r");
  if (div_l >= 2) clamp("q", q, div_l, "div_l");
  return warnings;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  need(d0_size >= 1, "d0_size must be >= 1");
  need(stream_length == -1 || stream_length >= 0, "stream_length must be -1 or >= 0");
  need(trials >= 1, "trials must be >= 1");
  need(retrain_limit >= 0, "retrain_limit must be >= 0");
  need(k >= 1, "k must be >= 1");
  need(l >= 1, "l must be >= 1");
  need(j >= 1 && j <= l, "j must be in [1, l]");
  need(div_l >= 2, "div_l must be >= 2");
  need(q >= 2 && q <= div_l, "q must be in [2, div_l]");
  need(r >= 1, "r must be >= 1");
  need(div_j >= 1 && div_j <= r, "div_j must be in [1, r]");
  need(window >= 1, "window must be >= 1");
  if (strategy == StrategyKind::Preemption) {
    need(window >= k, "window must be >= k for preemption");
  }
  need(n_sub >= 1, "n_sub must be >= 1");
  need(std::isfinite(lambda_i) && lambda_i >= 0.0, "lambda_i must be finite and >= 0");
  need(std::isfinite(lambda_d) && lambda_d >= 0.0, "lambda_d must be finite and >= 0");
  need(std::isfinite(alpha) && alpha > 0.0, "alpha must be finite and > 0");
  need(std::isfinite(p) && p >= 0.0 && p <= 1.0, "p must be in [0, 1]");
  need(!arch.empty(), "arch must not be empty");
  if (is_preset_name(arch)) {
    // fine
  } else if (arch.find(':') != std::string::npos || arch.find(',') != std::string::npos) {
    parse_layer_stack(arch, 10);  // throws with the offending token
  } else {
    throw std::invalid_argument("unknown model preset '" + arch + "'");
  }
  need(feature_cut >= -1, "feature_cut must be -1 or a layer index");
  need(epochs >= 1, "epochs must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(std::isfinite(learning_rate) && learning_rate >= 0.0,
       "learning_rate must be finite and >= 0");
  need(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
  need(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
  need(epsilon > 0.0, "epsilon must be > 0");
  need(!out_dir.empty(), "out_dir must not be empty");
  need(!data_dir.empty(), "data_dir must not be empty");
}

std::map<std::string, std::string> ExperimentConfig::dump() const {
  std::map<std::string, std::string> out;
  out["dataset"] = to_string(dataset);
  out["data_dir"] = data_dir;
  out["d0_size"] = std::to_string(d0_size);
  out["stream_length"] = std::to_string(stream_length);
  out["trials"] = std::to_string(trials);
  out["retrain_limit"] = std::to_string(retrain_limit);
  out["seed"] = std::to_string(seed);
  out["strategy"] = to_string(strategy);
  out["k"] = std::to_string(k);
  out["l"] = std::to_string(l);
  out["j"] = std::to_string(j);
  out["div_l"] = std::to_string(div_l);
  out["div_j"] = std::to_string(div_j);
  out["q"] = std::to_string(q);
  out["r"] = std::to_string(r);
  out["window"] = std::to_string(window);
  out["n_sub"] = std::to_string(n_sub);
  out["lambda_i"] = fmt_double(lambda_i);
  out["lambda_d"] = fmt_double(lambda_d);
  out["alpha"] = fmt_double(alpha);
  out["p"] = fmt_double(p);
  out["arch"] = arch;
  out["feature_cut"] = std::to_string(feature_cut);
  out["epochs"] = std::to_string(epochs);
  out["batch_size"] = std::to_string(batch_size);
  out["learning_rate"] = fmt_double(learning_rate);
  out["beta1"] = fmt_double(beta1);
  out["beta2"] = fmt_double(beta2);
  out["epsilon"] = fmt_double(epsilon);
  out["warm_start"] = warm_start ? "true" : "false";
  out["measure_time"] = measure_time ? "true" : "false";
  out["out_dir"] = out_dir;
  out["syn_classes"] = std::to_string(synthetic.classes);
  out["syn_height"] = std::to_string(synthetic.height);
  out["syn_width"] = std::to_string(synthetic.width);
  out["syn_channels"] = std::to_string(synthetic.channels);
  out["syn_train"] = std::to_string(synthetic.train_items);
  out["syn_test"] = std::to_string(synthetic.test_items);
  out["syn_noise"] = fmt_double(synthetic.noise);
  out["syn_jitter"] = fmt_double(synthetic.jitter);
  out["syn_seed"] = std::to_string(synthetic.seed);
  return out;
}

}  // namespace tactile
