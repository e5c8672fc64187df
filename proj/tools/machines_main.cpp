#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "machines/bench.hpp"
#include "machines/demo.hpp"
#include "machines/errors.hpp"
#include "machines/train.hpp"
#include "machines/verify.hpp"

namespace {

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw machines::Error("cannot open output file: " + out_path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw machines::ConfigParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string reports_text(const std::vector<machines::CheckReport>& reports) {
  std::string out;
  char buf[256];
  for (const machines::CheckReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%-30s %-4s max_err=%-12.3e tol=%-8.0e %s\n",
                  r.name.c_str(), r.passed ? "ok" : "FAIL", r.max_abs_error,
                  r.tolerance, r.details.c_str());
    out += buf;
  }
  return out;
}

std::string loss_text(const std::vector<double>& losses) {
  std::string out;
  char buf[64];
  for (size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "step %4zu  loss %.6e\n", i, losses[i]);
    out += buf;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition-masked machines of finite depth: solvers, duals, "
               "verification and benchmarks"};
  app.require_subcommand(1);

  std::uint64_t seed = 2024;
  std::string out_path;
  std::string format = "csv";
  std::string config_path;
  bool inject_fault = false;
  int steps = 200;
  double lr = 0.1;
  std::string task = "toy-regression";

  CLI::App* verify = app.add_subcommand("verify", "Run every property suite");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--out", out_path, "Write the report here instead of stdout");
  verify->add_option("--format", format, "csv or text")
      ->check(CLI::IsMember({"csv", "text"}));
  verify->add_flag("--inject-fault", inject_fault)->group("");

  CLI::App* bench = app.add_subcommand("bench", "Forward/backward timing table");
  bench->add_option("--config", config_path, "JSON benchmark config");
  CLI::Option* bench_seed = bench->add_option("--seed", seed, "RNG seed");
  bench->add_option("--out", out_path, "Write the table here instead of stdout");
  bench->add_option("--format", format, "csv or text")
      ->check(CLI::IsMember({"csv", "text"}));

  CLI::App* train = app.add_subcommand("train", "Toy gradient-descent demo");
  train->add_option("--task", task, "Training task")
      ->check(CLI::IsMember({"toy-regression"}));
  train->add_option("--steps", steps, "Gradient steps")
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", lr, "Learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--out", out_path, "Write the loss trace here");
  train->add_option("--format", format, "csv or text")
      ->check(CLI::IsMember({"csv", "text"}));

  CLI::App* demo = app.add_subcommand(
      "demo", "Blockwise evaluation trace of the shortcut network example");
  demo->add_option("--out", out_path, "Write the trace here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      machines::SuiteOptions options;
      options.seed = seed;
      options.inject_fault = inject_fault;
      const auto reports = machines::run_all_checks(options);
      emit(format == "csv" ? machines::reports_to_csv(reports)
                           : reports_text(reports),
           out_path);
      return machines::all_passed(reports) ? 0 : 1;
    }
    if (bench->parsed()) {
      machines::BenchConfig config = config_path.empty()
                                         ? machines::default_bench_config()
                                         : machines::parse_bench_config(
                                               read_file(config_path));
      if (bench_seed->count() > 0) config.seed = seed;
      const auto rows = machines::run_bench(config);
      emit(format == "csv" ? machines::bench_csv(rows)
                           : machines::bench_text(rows),
           out_path);
      return 0;
    }
    if (train->parsed()) {
      const auto losses = machines::train_toy_regression(steps, lr, seed);
      emit(format == "csv" ? machines::loss_csv(losses) : loss_text(losses),
           out_path);
      return 0;
    }
    if (demo->parsed()) {
      emit(machines::shortcut_demo_trace(), out_path);
      return 0;
    }
  } catch (const machines::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
