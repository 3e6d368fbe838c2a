#pragma once

#include "carpetlab/carpet.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace carpetlab::sweep {

struct ExperimentConfig {
    std::string id = "sweep";
    std::vector<int> seq;         // explicit denominators (use make_sequence for tags)
    int level_lo = 1;
    int level_hi = 2;
    double p = 2.0;
    double q = 2.0;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    int bend_N = 2;
    int keith_pairs = 3;
};

// Generator tags: "constant:k", "l1" (n_m = 2 m^2 + 1), "l2" (n_m = 2 m + 1).
std::vector<int> make_sequence(const std::string& tag, int count);

struct ResultRow {
    std::string experiment;
    int M = 0;
    std::string quantity;
    double value = 0.0;
    double bound = 0.0;
    bool pass = true;
};

std::vector<ResultRow> run_threshold_sweep(const ExperimentConfig& config);

// CSV with a "# schema: 1" header; parse(emit(rows)) == rows exactly.
std::string emit_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);
std::string emit_json(const std::vector<ResultRow>& rows);

// Deterministic platform-independent uniform doubles for sampling.
std::uint64_t mix64(std::uint64_t& state);
double unit_double(std::uint64_t& state);

}  // namespace carpetlab::sweep
