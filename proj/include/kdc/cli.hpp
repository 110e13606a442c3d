// SPDX-License-Identifier: Apache-2.0
//
// Command implementations shared by the command-line tool and the acceptance
// suite. Each run_* function performs one subcommand end to end on the
// filesystem; errors surface as the typed exceptions from errors.hpp.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kdc/eval.hpp"
#include "kdc/gradcheck.hpp"
#include "kdc/io.hpp"
#include "kdc/model.hpp"
#include "kdc/synth.hpp"

namespace kdc::cli {

struct SynthOptions {
    SyntheticSpec spec;
    std::filesystem::path out; // receives train/ and test/ subdirectories
};
void run_synth(const SynthOptions& opts);

struct TrainOptions {
    std::filesystem::path config; // empty = built-in defaults
    std::filesystem::path data;   // a dataset directory (e.g. corpus/train)
    std::filesystem::path out;    // receives checkpoint/ and metrics.log
    std::optional<std::uint64_t> seed; // overrides the config seed
};
TrainResult run_train(const TrainOptions& opts);

struct EvalOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path out;    // receives report.txt and report.csv
    std::optional<double> delta;  // overrides the checkpointed fusion weight
};
RetrievalReport run_eval(const EvalOptions& opts, std::ostream& log);

struct RefineOptions {
    std::filesystem::path input;  // CSV, one score sequence per row
    std::filesystem::path output; // refined rows; stats sidecar at <output>.stats
    int window = 3;
};
void run_refine(const RefineOptions& opts);

// Finite-difference table over `seed_count` consecutive seeds; a row passes
// when its worst relative error stays below 1e-4.
std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, int seed_count,
                                        std::ostream& log);

struct SweepOptions {
    std::filesystem::path config;
    std::filesystem::path data;   // corpus root containing train/ and test/
    std::filesystem::path out;    // receives sweep.csv
    std::string parameter;        // any config key
    std::vector<std::string> values;
};
std::vector<std::pair<std::string, double>> run_sweep(const SweepOptions& opts,
                                                      std::ostream& log);

// Fused-similarity retrieval of a frozen model over a corpus.
RetrievalReport evaluate_model(const StudentModel& model, const RetrievalDataset& data,
                               double delta);

} // namespace kdc::cli
