// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats: the KDCF binary feature file (magic "KDCF", version byte,
// rank byte, little-endian u32 dims, row-major little-endian f32 payload),
// flat key=value experiment configs, headerless CSV, dataset directories and
// model checkpoints.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kdc/data.hpp"
#include "kdc/model.hpp"
#include "kdc/tensor.hpp"

namespace kdc {

// Values are stored as 32-bit floats; the loader upcasts back to 64-bit.
void write_feature_file(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_feature_file(const std::filesystem::path& path);

// Headerless CSV of decimal floats, newline-terminated rows. Read errors are
// addressed by 1-based row and column. Rows may differ in length.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<double>>& rows);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// Flat `key = value` config with '#' comments. Unknown keys and malformed
// values are rejected with the offending line number. Every field has a
// documented default, so an empty file parses to the default experiment.
struct ExperimentConfig {
    TrainConfig train;
    ModelHyper hyper;

    static ExperimentConfig parse_file(const std::filesystem::path& path);
    static ExperimentConfig parse_string(std::string_view text,
                                         const std::string& origin);
    // Applies one key (sweep entry point). Throws config_error on unknown keys.
    void set(const std::string& key, const std::string& value);
    std::vector<std::pair<std::string, std::string>> entries() const;
};

void write_dataset(const std::filesystem::path& dir, const RetrievalDataset& data);
RetrievalDataset read_dataset(const std::filesystem::path& dir);

void save_checkpoint(const std::filesystem::path& dir, const StudentModel& model,
                     const TrainConfig& cfg);
struct LoadedCheckpoint {
    StudentModel model;
    TrainConfig train;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

} // namespace kdc
