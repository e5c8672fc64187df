#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "machines/partition.hpp"

namespace machines {

// One benchmark row. block_size is the dimension of each index set for the
// dense and recurrent kinds; for the conv kind it is the number of channels
// per group (the blocks then span all time steps). blocks, when nonempty,
// overrides block_size/num_blocks with an explicit partition (dense only).
struct BenchRowConfig {
  std::string machine_kind = "dense";  // dense | conv | recurrent
  int block_size = 2;
  int num_blocks = 8;
  int batch = 2;
  Index n_t = 16;         // equivariant kinds only
  Index kernel_lags = 3;  // equivariant kinds only
  int repetitions = 20;
  std::vector<IndexList> blocks;
};

struct BenchConfig {
  std::vector<BenchRowConfig> rows;
  std::uint64_t seed = 2024;
};

struct BenchRow {
  std::string machine_kind;
  std::string size_label;
  double forward_s = 0.0;
  double backward_s = 0.0;
  double ratio = 0.0;
};

// Reference CPU table: small (block dim 2, batch 2) and medium (block dim
// 32, batch 32) rows for all three kinds.
BenchConfig default_bench_config();

// JSON schema: { "rows": [ {machine_kind, block_size, num_blocks, batch,
// n_t, kernel_lags, repetitions, blocks?} ], "seed"? }.
BenchConfig parse_bench_config(const std::string& json_text);

BenchRow run_bench_row(const BenchRowConfig& row, std::uint64_t seed);
std::vector<BenchRow> run_bench(const BenchConfig& config);

std::string bench_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_bench_csv(const std::string& csv);
std::string bench_text(const std::vector<BenchRow>& rows);

}  // namespace machines
