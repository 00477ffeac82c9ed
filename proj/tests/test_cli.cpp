#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/cli.hpp"

using namespace tactile;

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult r;
  try {
    r.code = run_cli(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path temp_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / ("tactile_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string write_config(const char* name, const std::string& body) {
  fs::path p = temp_root() / name;
  std::ofstream os(p);
  os << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Small synthetic run: finishes in well under a second.
std::string small_config() {
  static std::string path = write_config("small.conf",
                                         "dataset = synthetic\n"
                                         "syn_train = 500\n"
                                         "syn_test = 100\n"
                                         "syn_seed = 5\n"
                                         "d0_size = 40\n"
                                         "trials = 2\n"
                                         "retrain_limit = 2\n"
                                         "seed = 3\n"
                                         "strategy = info_rv\n"
                                         "k = 6\n"
                                         "l = 20\n"
                                         "j = 8\n"
                                         "arch = mlp_desk\n"
                                         "epochs = 2\n"
                                         "batch_size = 10\n");
  return path;
}

}  // namespace

TEST_CASE("cli requires a subcommand and a config") {
  CHECK(run({}).code == 2);
  CHECK(run({"run"}).code == 2);  // missing --config
  CliResult r = run({"frobnicate"});
  CHECK(r.code == 2);
}

TEST_CASE("cli help exits zero") {
  CliResult r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("run") != std::string::npos);
}

TEST_CASE("validate-config prints the normal form") {
  CliResult r = run({"validate-config", "--config", small_config()});
  CHECK(r.code == 0);
  CHECK(r.out.find("config ok\n") == 0);
  CHECK(r.out.find("k = 6\n") != std::string::npos);
  CHECK(r.out.find("strategy = info_rv\n") != std::string::npos);
  CHECK(r.out.find("dataset = synthetic\n") != std::string::npos);
}

TEST_CASE("validate-config rejects unknown keys with exit 2") {
  std::string path = write_config("badkey.conf", "dataset = synthetic\nbogus_key = 3\n");
  CliResult r = run({"validate-config", "--config", path});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown config key: bogus_key") != std::string::npos);
  CHECK(r.err.find("code=2") != std::string::npos);
}

TEST_CASE("validate-config rejects bad values and missing files") {
  std::string path = write_config("badval.conf", "dataset = synthetic\nk = banana\n");
  CHECK(run({"validate-config", "--config", path}).code == 2);
  CHECK(run({"validate-config", "--config", (temp_root() / "absent.conf").string()}).code ==
        2);
}

TEST_CASE("set overrides apply left to right after the file") {
  CliResult r = run({"validate-config", "--config", small_config(), "--set", "k=4", "--set",
                     "k=9"});
  CHECK(r.code == 0);
  CHECK(r.out.find("k = 9\n") != std::string::npos);
  CHECK(run({"validate-config", "--config", small_config(), "--set", "novalue"}).code == 2);
  CHECK(run({"validate-config", "--config", small_config(), "--set", "bogus=1"}).code == 2);
}

TEST_CASE("normalization clamps are warned on stderr") {
  // j larger than l gets clamped with a warning rather than rejected
  CliResult r = run({"validate-config", "--config", small_config(), "--set", "j=50"});
  CHECK(r.code == 0);
  CHECK(r.err.find("j") != std::string::npos);
  CHECK(r.out.find("j = 20\n") != std::string::npos);
}

TEST_CASE("run writes the three csv files and a summary to stdout") {
  fs::path out = temp_root() / "run_out";
  CliResult r = run({"run", "--config", small_config(), "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("retrain 0: mean_accuracy=") != std::string::npos);
  CHECK(r.out.find("retrain 2: mean_accuracy=") != std::string::npos);
  CHECK(r.out.find("wrote " + out.string() + "/records.csv") != std::string::npos);
  REQUIRE(fs::exists(out / "records.csv"));
  REQUIRE(fs::exists(out / "decisions.csv"));
  REQUIRE(fs::exists(out / "summary.csv"));

  // trials x (baseline + 2 retrains) + header
  std::istringstream is(slurp(out / "records.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + 2 * 3);
}

TEST_CASE("equal seeds produce byte-identical result files") {
  fs::path out1 = temp_root() / "rep1";
  fs::path out2 = temp_root() / "rep2";
  CHECK(run({"run", "--config", small_config(), "--out", out1.string()}).code == 0);
  CHECK(run({"run", "--config", small_config(), "--out", out2.string()}).code == 0);
  for (const char* name : {"records.csv", "decisions.csv", "summary.csv"}) {
    CHECK(slurp(out1 / name) == slurp(out2 / name));
  }
}

TEST_CASE("seed flag changes the stream, trials flag changes the row count") {
  fs::path out1 = temp_root() / "seedflag1";
  fs::path out2 = temp_root() / "seedflag2";
  CHECK(run({"run", "--config", small_config(), "--out", out1.string(), "--seed", "99",
             "--trials", "1"})
            .code == 0);
  CHECK(run({"run", "--config", small_config(), "--out", out2.string(), "--seed", "100",
             "--trials", "1"})
            .code == 0);
  std::string r1 = slurp(out1 / "records.csv");
  CHECK(r1 != slurp(out2 / "records.csv"));
  std::istringstream is(r1);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + 1 * 3);
}

TEST_CASE("run fails with exit 1 when the dataset files are missing") {
  std::string path = write_config("missingdata.conf",
                                  "dataset = mnist\n"
                                  "data_dir = /nonexistent_dir_tactile\n");
  CliResult r = run({"run", "--config", path});
  CHECK(r.code == 1);
  CHECK(r.err.find("code=1") != std::string::npos);
}

TEST_CASE("compare runs each strategy on one stream and merges the summary") {
  fs::path out = temp_root() / "cmp_out";
  CliResult r = run({"compare", "--config", small_config(), "--out", out.string(),
                     "--strategies", "info_rv,random"});
  CHECK(r.code == 0);
  CHECK(r.out.find("info_rv:\n") != std::string::npos);
  CHECK(r.out.find("random:\n") != std::string::npos);
  REQUIRE(fs::exists(out / "compare.csv"));
  std::string csv = slurp(out / "compare.csv");
  CHECK(csv.find("strategy,retrain_index,mean_accuracy,var_accuracy,mean_labels_spent\n") ==
        0);
  int info_rows = 0, random_rows = 0;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("info_rv,", 0) == 0) ++info_rows;
    if (line.rfind("random,", 0) == 0) ++random_rows;
  }
  CHECK(info_rows == 3);  // baseline + 2 retrains
  CHECK(random_rows == 3);

  // compare's per-strategy block equals a solo run of that strategy
  fs::path solo = temp_root() / "solo_out";
  CHECK(run({"run", "--config", small_config(), "--out", solo.string()}).code == 0);
  std::string summary = slurp(solo / "summary.csv");
  std::istringstream ss(summary);
  std::getline(ss, line);  // drop header
  while (std::getline(ss, line)) {
    CHECK(csv.find("info_rv," + line + "\n") != std::string::npos);
  }
}

TEST_CASE("compare needs at least two strategies") {
  CHECK(run({"compare", "--config", small_config(), "--strategies", "info_rv"}).code == 2);
  CHECK(run({"compare", "--config", small_config(), "--strategies", "info_rv,warp"}).code ==
        2);
}

TEST_CASE("inspect-dataset prints shape, sizes, and class histograms") {
  CliResult r = run({"inspect-dataset", "--config", small_config()});
  CHECK(r.code == 0);
  CHECK(r.out.find("dataset synthetic\n") != std::string::npos);
  CHECK(r.out.find("shape 16x16x1\n") != std::string::npos);
  CHECK(r.out.find("classes 10\n") != std::string::npos);
  CHECK(r.out.find("train_items 500\n") != std::string::npos);
  CHECK(r.out.find("test_items 100\n") != std::string::npos);
  CHECK(r.out.find("train_class_counts 50,50,50,50,50,50,50,50,50,50\n") !=
        std::string::npos);
  CHECK(r.out.find("test_class_counts 10,10,10,10,10,10,10,10,10,10\n") != std::string::npos);
}

TEST_CASE("account prints the formula expansion for each strategy") {
  CliResult info = run({"account", "--dataset", "mnist", "--strategy", "info_rv"});
  CHECK(info.code == 0);
  CHECK(info.out.find("image_bytes=784 feature_bytes=800") != std::string::npos);
  CHECK(info.out.find("info_rv: k * image_bytes = 32 * 784 = 25088 bytes") !=
        std::string::npos);

  CliResult dual = run({"account", "--dataset", "fashion_mnist", "--strategy", "dual_rv"});
  CHECK(dual.out.find("dual_rv: k * (image_bytes + feature_bytes) = 32 * (784 + 2304) = "
                      "98816 bytes") != std::string::npos);

  CliResult pre =
      run({"account", "--dataset", "mnist", "--strategy", "preemption", "--k", "32"});
  CHECK(pre.out.find("preemption: (k+1) * image_bytes + (k+2) * feature_bytes = 33 * 784 + "
                     "34 * 800 = 53072 bytes") != std::string::npos);

  CliResult cifar = run({"account", "--dataset", "cifar10", "--strategy", "dual_rv", "--k",
                         "16"});
  CHECK(cifar.out.find("16 * (3072 + 6400)") != std::string::npos);

  CHECK(run({"account", "--dataset", "imagenet", "--strategy", "info_rv"}).code == 2);
  CHECK(run({"account", "--dataset", "mnist", "--strategy", "hyperdrive"}).code == 2);
}
