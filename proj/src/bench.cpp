#include "machines/bench.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "machines/activation.hpp"
#include "machines/conv.hpp"
#include "machines/dense.hpp"
#include "machines/errors.hpp"
#include "machines/generate.hpp"

namespace machines {

namespace {

using json = nlohmann::json;

// keeps the timed calls from being optimized away
volatile double bench_sink = 0.0;

double now_seconds() {
  const auto t = std::chrono::steady_clock::now().time_since_epoch();
  return std::chrono::duration<double>(t).count();
}

int require_count(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigParseError(std::string(key) + " must be an integer");
  const long long v = j[key].get<long long>();
  if (v < 1) throw ConfigParseError(std::string(key) + " must be >= 1");
  return static_cast<int>(v);
}

std::string size_label(const BenchRowConfig& row) {
  char buf[64];
  if (!row.blocks.empty()) {
    Index total = 0;
    for (const auto& b : row.blocks) total += static_cast<Index>(b.size());
    std::snprintf(buf, sizeof buf, "%ldx%zu", static_cast<long>(total),
                  row.blocks.size());
    return buf;
  }
  if (row.block_size == 2 && row.batch == 2) return "small";
  if (row.block_size == 32 && row.batch == 32) return "medium";
  std::snprintf(buf, sizeof buf, "%dx%d", row.block_size, row.batch);
  return buf;
}

std::vector<IndexList> contiguous_groups(int num_groups, int group_size) {
  std::vector<IndexList> groups(static_cast<size_t>(num_groups));
  Index next = 0;
  for (auto& g : groups)
    for (int i = 0; i < group_size; ++i) g.push_back(next++);
  return groups;
}

// min-over-repetitions timing with 3 untimed warmup calls
template <typename Fn>
double time_min(int repetitions, Fn&& fn) {
  for (int i = 0; i < 3; ++i) fn();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repetitions; ++i) {
    const double t0 = now_seconds();
    fn();
    const double t1 = now_seconds();
    best = std::min(best, t1 - t0);
  }
  return best;
}

BenchRow time_dense(const BenchRowConfig& row, RandomEngine& rng) {
  Index explicit_total = 0;
  for (const auto& b : row.blocks)
    explicit_total += static_cast<Index>(b.size());
  Partition p = row.blocks.empty()
                    ? Partition::contiguous(std::vector<Index>(
                          static_cast<size_t>(row.num_blocks),
                          static_cast<Index>(row.block_size)))
                    : Partition(row.blocks, explicit_total);
  const Index n = p.size();
  DenseMachine m(
      mask_dense(random_matrix(n, n, rng, 1.0 / static_cast<double>(n)), p),
      Activation::tanh());
  const Eigen::MatrixXd y0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd z0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd v0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd u0 = random_matrix(n, row.batch, rng);
  const MachineState s = m.forward(y0, z0);

  BenchRow out{row.machine_kind, size_label(row), 0.0, 0.0, 0.0};
  out.forward_s = time_min(row.repetitions, [&] {
    const MachineState st = m.forward(y0, z0);
    bench_sink = bench_sink + st.y(0, 0);
  });
  out.backward_s = time_min(row.repetitions, [&] {
    const DualState d = m.backward(s, v0, u0);
    bench_sink = bench_sink + d.v(0, 0);
  });
  out.ratio = out.backward_s / out.forward_s;
  return out;
}

BenchRow time_conv(const BenchRowConfig& row, RandomEngine& rng) {
  const auto groups = contiguous_groups(row.num_blocks, row.block_size);
  const Index n_c = static_cast<Index>(row.num_blocks) * row.block_size;
  GridPartition grid = row.machine_kind == "recurrent"
                           ? GridPartition::recurrent_style(row.n_t, groups)
                           : GridPartition::conv_style(row.n_t, groups);
  ConvMachine m(random_kernel(row.kernel_lags, n_c, row.n_t, rng),
                std::move(grid), Activation::tanh());
  const Index n = m.size();
  const Eigen::MatrixXd y0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd z0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd v0 = random_matrix(n, row.batch, rng);
  const Eigen::MatrixXd u0 = random_matrix(n, row.batch, rng);
  const MachineState s = m.forward_fast(y0, z0);

  BenchRow out{row.machine_kind, size_label(row), 0.0, 0.0, 0.0};
  out.forward_s = time_min(row.repetitions, [&] {
    const MachineState st = m.forward_fast(y0, z0);
    bench_sink = bench_sink + st.y(0, 0);
  });
  out.backward_s = time_min(row.repetitions, [&] {
    const DualState d = m.backward_fast(s, v0, u0);
    bench_sink = bench_sink + d.v(0, 0);
  });
  out.ratio = out.backward_s / out.forward_s;
  return out;
}

}  // namespace

BenchConfig default_bench_config() {
  BenchConfig config;
  auto add = [&](const char* kind, int block_size, int num_blocks, int batch,
                 int repetitions) {
    BenchRowConfig row;
    row.machine_kind = kind;
    row.block_size = block_size;
    row.num_blocks = num_blocks;
    row.batch = batch;
    row.repetitions = repetitions;
    config.rows.push_back(std::move(row));
  };
  add("dense", 2, 8, 2, 200);
  add("dense", 32, 8, 32, 50);
  add("conv", 2, 4, 2, 100);
  add("conv", 32, 4, 32, 10);
  add("recurrent", 2, 4, 2, 100);
  add("recurrent", 32, 4, 32, 10);
  return config;
}

BenchConfig parse_bench_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigParseError(std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
    throw ConfigParseError("config must be an object with a rows array");
  BenchConfig config;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ConfigParseError("seed must be an integer");
    config.seed = j["seed"].get<std::uint64_t>();
  }
  for (const json& r : j["rows"]) {
    if (!r.is_object()) throw ConfigParseError("each row must be an object");
    BenchRowConfig row;
    if (!r.contains("machine_kind") || !r["machine_kind"].is_string())
      throw ConfigParseError("row needs a machine_kind string");
    row.machine_kind = r["machine_kind"].get<std::string>();
    if (row.machine_kind != "dense" && row.machine_kind != "conv" &&
        row.machine_kind != "recurrent")
      throw ConfigParseError("machine_kind must be dense, conv or recurrent");
    row.block_size = require_count(r, "block_size", row.block_size);
    row.num_blocks = require_count(r, "num_blocks", row.num_blocks);
    row.batch = require_count(r, "batch", row.batch);
    row.n_t = require_count(r, "n_t", static_cast<int>(row.n_t));
    row.kernel_lags =
        require_count(r, "kernel_lags", static_cast<int>(row.kernel_lags));
    row.repetitions = require_count(r, "repetitions", row.repetitions);
    if (r.contains("blocks")) {
      if (row.machine_kind != "dense")
        throw ConfigParseError("explicit blocks are dense-only");
      if (!r["blocks"].is_array())
        throw ConfigParseError("blocks must be an array of arrays");
      for (const json& b : r["blocks"]) {
        if (!b.is_array())
          throw ConfigParseError("blocks must be an array of arrays");
        IndexList blk;
        for (const json& e : b) {
          if (!e.is_number_integer())
            throw ConfigParseError("block indices must be integers");
          blk.push_back(e.get<Index>());
        }
        row.blocks.push_back(std::move(blk));
      }
    }
    config.rows.push_back(std::move(row));
  }
  return config;
}

BenchRow run_bench_row(const BenchRowConfig& row, std::uint64_t seed) {
  RandomEngine rng(seed);
  if (row.machine_kind == "dense") return time_dense(row, rng);
  if (row.machine_kind == "conv" || row.machine_kind == "recurrent")
    return time_conv(row, rng);
  throw ConfigParseError("machine_kind must be dense, conv or recurrent");
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<BenchRow> rows;
  rows.reserve(config.rows.size());
  for (size_t i = 0; i < config.rows.size(); ++i)
    rows.push_back(run_bench_row(config.rows[i],
                                 config.seed + 0x9e3779b9u * (i + 1)));
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "machine,size,forward_s,backward_s,ratio\n";
  char buf[256];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g\n",
                  r.machine_kind.c_str(), r.size_label.c_str(), r.forward_s,
                  r.backward_s, r.ratio);
    out += buf;
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "machine,size,forward_s,backward_s,ratio")
    throw ConfigParseError("bad bench CSV header");
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    BenchRow row;
    std::string cell;
    auto next = [&](const char* what) {
      if (!std::getline(fields, cell, ','))
        throw ConfigParseError(std::string("bench CSV missing ") + what);
      return cell;
    };
    row.machine_kind = next("machine");
    row.size_label = next("size");
    row.forward_s = std::strtod(next("forward_s").c_str(), nullptr);
    row.backward_s = std::strtod(next("backward_s").c_str(), nullptr);
    row.ratio = std::strtod(next("ratio").c_str(), nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_text(const std::vector<BenchRow>& rows) {
  std::string out = "machine     size      forward_s     backward_s    ratio\n";
  char buf[160];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-11s %-8s %12.6e %12.6e %8.3f\n",
                  r.machine_kind.c_str(), r.size_label.c_str(), r.forward_s,
                  r.backward_s, r.ratio);
    out += buf;
  }
  return out;
}

}  // namespace machines
