// Drives the built CLI binary end to end against a synthetic dataset:
// exit-status contract, artifact layout, metrics emission.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int checks = 0, failed = 0;

void expect(bool ok, const std::string& what) {
  ++checks;
  if (!ok) {
    ++failed;
    std::cerr << "FAILED: " << what << '\n';
  }
}

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_integration <path-to-rfgn-binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = fs::temp_directory_path() / "rfgn_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  // A small two-relation graph with enough structure to train on.
  std::ostringstream train;
  for (int i = 0; i < 12; ++i) {
    train << 'e' << i << "\tnext\te" << (i + 1) % 12 << '\n';
    train << 'e' << i << "\tskip\te" << (i + 2) % 12 << '\n';
  }
  write(work / "train.txt", train.str());
  write(work / "valid.txt", "e0\tnext\te1\ne3\tskip\te5\n");
  write(work / "test.txt", "e6\tnext\te7\ne8\tskip\te10\n");

  const fs::path out_dir = work / "run";
  write(work / "config.json", R"({
  "train": ")" + (work / "train.txt").string() + R"(",
  "valid": ")" + (work / "valid.txt").string() + R"(",
  "test": ")" + (work / "test.txt").string() + R"(",
  "out_dir": ")" + out_dir.string() + R"(",
  "score": "distmult", "K": 16, "beta": 0.5, "lambda": 0.0001,
  "optimizer": "adagrad", "epochs": 30, "batch_size": 64,
  "seed": 5, "mode": "refactor", "layers": "inf", "patience": 0
})");

  // verify: hermetic, seeded, exit 0 iff the bound holds.
  expect(run(cli + " verify --seed 7 --graphs 20 --steps 3 > " + (work / "verify.out").string()) ==
             0,
         "verify exits 0");
  expect(slurp(work / "verify.out").find("max divergence") != std::string::npos,
         "verify prints the divergence");

  // train: artifacts + metrics.
  expect(run(cli + " train --config " + (work / "config.json").string() + " > " +
             (work / "train.out").string()) == 0,
         "train exits 0");
  expect(fs::exists(out_dir / "states.rfgn"), "states snapshot written");
  expect(fs::exists(out_dir / "psi.rfgn"), "relation table written");
  expect(fs::exists(out_dir / "config.json"), "config echo written");
  expect(fs::exists(out_dir / "train_log.csv"), "training log written");
  expect(fs::exists(out_dir / "metrics.json"), "test metrics written");
  expect(fs::exists(out_dir / "metrics_valid.json"), "valid metrics written");
  expect(fs::exists(out_dir / "results.csv"), "results.csv written");
  expect(slurp(out_dir / "metrics.json").find("\"mrr\"") != std::string::npos,
         "metrics.json carries an mrr field");

  // eval from the saved artifact reproduces a metrics file.
  fs::remove(out_dir / "metrics.json");
  expect(run(cli + " eval --config " + (work / "config.json").string() + " --model " +
             out_dir.string() + " > " + (work / "eval.out").string()) == 0,
         "eval exits 0");
  expect(fs::exists(out_dir / "metrics.json"), "eval rewrites metrics.json");

  // ablate: both runs plus the delta summary.
  write(work / "ablate_config.json", R"({
  "train": ")" + (work / "train.txt").string() + R"(",
  "valid": ")" + (work / "valid.txt").string() + R"(",
  "test": ")" + (work / "test.txt").string() + R"(",
  "out_dir": ")" + (work / "ablate").string() + R"(",
  "score": "distmult", "K": 8, "beta": 0.3, "optimizer": "adagrad",
  "epochs": 10, "batch_size": 64, "seed": 5, "mode": "refactor", "layers": 3, "patience": 0
})");
  expect(run(cli + " ablate --config " + (work / "ablate_config.json").string() + " > " +
             (work / "ablate.out").string()) == 0,
         "ablate exits 0");
  expect(fs::exists(work / "ablate" / "metrics_with_global.json"), "with-global metrics written");
  expect(fs::exists(work / "ablate" / "metrics_without_global.json"),
         "without-global metrics written");
  expect(fs::exists(work / "ablate" / "ablation.json"), "ablation delta written");

  // Exit-status contract: config failures 2, numeric aborts 3.
  write(work / "bad_config.json", R"({"seed": 1})");
  expect(run(cli + " train --config " + (work / "bad_config.json").string() + " 2> /dev/null") ==
             2,
         "missing train path exits 2");
  expect(run(cli + " train --config " + (work / "nonexistent.json").string() + " 2> /dev/null") ==
             2,
         "missing config file exits 2");

  write(work / "blowup_config.json", R"({
  "train": ")" + (work / "train.txt").string() + R"(",
  "test": ")" + (work / "test.txt").string() + R"(",
  "out_dir": ")" + (work / "blowup").string() + R"(",
  "K": 8, "beta": 1e12, "epochs": 5, "batch_size": 64, "seed": 5, "patience": 0
})");
  expect(run(cli + " train --config " + (work / "blowup_config.json").string() +
             " 2> /dev/null") == 3,
         "numeric blow-up exits 3");

  std::printf("%d checks, %d failed\n", checks, failed);
  if (failed == 0) fs::remove_all(work);
  return failed == 0 ? 0 : 1;
}
