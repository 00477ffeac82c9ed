#include "tactile/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "tactile/harness.hpp"

namespace tactile {

namespace {

std::string trim_ws(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out = true) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--set", opts.sets,
                  "key=value override, repeatable, applied left to right");
  cmd->add_option("--seed", opts.seed, "override the base seed");
  cmd->add_option("--trials", opts.trials, "override the trial count");
  if (with_out) cmd->add_option("--out", opts.out, "output directory");
}

// File, then overrides in order, then the dedicated flags; warnings from
// normalization go to stderr.
ExperimentConfig build_config(const CommonOpts& opts) {
  ExperimentConfig cfg = ExperimentConfig::from_file(opts.config_path);
  for (const std::string& kv : opts.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set needs key=value, got '" + kv + "'");
    }
    cfg.set(trim_ws(kv.substr(0, eq)), trim_ws(kv.substr(eq + 1)));
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.trials) cfg.trials = *opts.trials;
  if (opts.out) cfg.out_dir = *opts.out;
  for (const std::string& w : cfg.normalize()) std::cerr << w << "\n";
  cfg.validate();
  return cfg;
}

void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  for (const SummaryRow& s : rows) {
    os << "retrain " << s.retrain_index << ": mean_accuracy=" << fmt_double(s.mean_accuracy)
       << " var_accuracy=" << fmt_double(s.var_accuracy)
       << " mean_labels_spent=" << fmt_double(s.mean_labels_spent) << "\n";
  }
}

int cmd_run(const CommonOpts& opts) {
  ExperimentConfig cfg = build_config(opts);
  ExperimentResult result = run_experiment(cfg);
  for (const std::string& f : result.failures) std::cerr << "warning: " << f << "\n";
  if (result.records.empty()) {
    std::cerr << "error: code=1 msg=\"no trial completed\"\n";
    return 1;
  }
  write_results(result.records, result.decisions, cfg.out_dir);
  print_summary(std::cout, summarize(result.records));
  std::cout << "wrote " << cfg.out_dir << "/records.csv, decisions.csv, summary.csv\n";
  return 0;
}

int cmd_compare(const CommonOpts& opts, const std::string& strategies_csv) {
  std::vector<StrategyKind> kinds;
  std::string cur;
  for (char c : strategies_csv + ",") {
    if (c == ',') {
      if (!trim_ws(cur).empty()) kinds.push_back(parse_strategy_kind(trim_ws(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (kinds.size() < 2) {
    throw std::invalid_argument("compare needs at least two strategies");
  }

  ExperimentConfig cfg = build_config(opts);
  auto [train, test] = load_dataset(cfg);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "compare.csv");
  if (!os) throw std::runtime_error("cannot write compare.csv");
  os << "strategy,retrain_index,mean_accuracy,var_accuracy,mean_labels_spent\n";

  for (StrategyKind kind : kinds) {
    ExperimentConfig sub = cfg;
    sub.strategy = kind;
    sub.validate();
    ExperimentResult result = run_experiment(sub, train, test);
    for (const std::string& f : result.failures) {
      std::cerr << "warning: " << to_string(kind) << " " << f << "\n";
    }
    std::cout << to_string(kind) << ":\n";
    std::vector<SummaryRow> rows = summarize(result.records);
    print_summary(std::cout, rows);
    for (const SummaryRow& s : rows) {
      os << to_string(kind) << ',' << s.retrain_index << ',' << fmt_double(s.mean_accuracy)
         << ',' << fmt_double(s.var_accuracy) << ',' << fmt_double(s.mean_labels_spent)
         << '\n';
    }
  }
  if (!os) throw std::runtime_error("write failed for compare.csv");
  std::cout << "wrote " << cfg.out_dir << "/compare.csv\n";
  return 0;
}

int cmd_inspect(const CommonOpts& opts) {
  ExperimentConfig cfg = build_config(opts);
  auto [train, test] = load_dataset(cfg);
  std::cout << "dataset " << to_string(cfg.dataset) << "\n"
            << "shape " << train.shape.height << "x" << train.shape.width << "x"
            << train.shape.channels << "\n"
            << "classes " << train.class_count << "\n"
            << "train_items " << train.items.size() << "\n"
            << "test_items " << test.items.size() << "\n";
  auto histogram = [](const Dataset& ds) {
    std::vector<long> counts(static_cast<std::size_t>(ds.class_count), 0);
    for (const LabeledSample& item : ds.items) {
      ++counts[static_cast<std::size_t>(item.label)];
    }
    return counts;
  };
  auto print_counts = [](const char* split, const std::vector<long>& counts) {
    std::cout << split;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      std::cout << (c == 0 ? " " : ",") << counts[c];
    }
    std::cout << "\n";
  };
  print_counts("train_class_counts", histogram(train));
  print_counts("test_class_counts", histogram(test));
  return 0;
}

int cmd_validate(const CommonOpts& opts) {
  ExperimentConfig cfg = build_config(opts);
  std::cout << "config ok\n";
  for (const auto& [key, value] : cfg.dump()) {
    std::cout << key << " = " << value << "\n";
  }
  return 0;
}

int cmd_account(const std::string& dataset, const std::string& strategy, int k) {
  DatasetKind dk = parse_dataset_kind(dataset);
  StrategyKind sk = parse_strategy_kind(strategy);
  MemoryModel mem = memory_model_for(dk, k);
  long bytes = account_memory(sk, mem);
  std::cout << "dataset " << dataset << ": image_bytes=" << mem.image_bytes
            << " feature_bytes=" << mem.feature_bytes << "\n";
  switch (sk) {
    case StrategyKind::InfoRv:
    case StrategyKind::Random:
      std::cout << strategy << ": k * image_bytes = " << mem.k << " * " << mem.image_bytes
                << " = " << bytes << " bytes\n";
      break;
    case StrategyKind::DualRv:
      std::cout << strategy << ": k * (image_bytes + feature_bytes) = " << mem.k << " * ("
                << mem.image_bytes << " + " << mem.feature_bytes << ") = " << bytes
                << " bytes\n";
      break;
    case StrategyKind::Preemption:
      std::cout << strategy << ": (k+1) * image_bytes + (k+2) * feature_bytes = "
                << (mem.k + 1) << " * " << mem.image_bytes << " + " << (mem.k + 2) << " * "
                << mem.feature_bytes << " = " << bytes << " bytes\n";
      break;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"stream active learning experiments"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run one strategy and write CSVs");
  add_common(run_cmd, run_opts);

  CommonOpts cmp_opts;
  std::string strategies_csv;
  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "run several strategies on identical streams");
  add_common(cmp_cmd, cmp_opts);
  cmp_cmd->add_option("--strategies", strategies_csv, "comma-separated strategy names")
      ->required();

  CommonOpts ins_opts;
  CLI::App* ins_cmd = app.add_subcommand("inspect-dataset", "print dataset facts");
  add_common(ins_cmd, ins_opts, /*with_out=*/false);

  CommonOpts val_opts;
  CLI::App* val_cmd =
      app.add_subcommand("validate-config", "check a config and print its normal form");
  add_common(val_cmd, val_opts, /*with_out=*/false);

  std::string acc_dataset, acc_strategy;
  int acc_k = 32;
  CLI::App* acc_cmd =
      app.add_subcommand("account", "print the strategy's buffered-bytes formula");
  acc_cmd->add_option("--dataset", acc_dataset, "dataset name")->required();
  acc_cmd->add_option("--strategy", acc_strategy, "strategy name")->required();
  acc_cmd->add_option("--k", acc_k, "batch capacity");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("tactile");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_opts, strategies_csv);
    if (ins_cmd->parsed()) return cmd_inspect(ins_opts);
    if (val_cmd->parsed()) return cmd_validate(val_opts);
    if (acc_cmd->parsed()) return cmd_account(acc_dataset, acc_strategy, acc_k);
    throw std::logic_error("no subcommand dispatched");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: code=2 msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: code=2 msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: code=1 msg=\"" << e.what() << "\"\n";
    return 1;
  }
}

}  // namespace tactile
