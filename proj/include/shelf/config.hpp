#pragma once

#include "shelf/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace shelf {

/// Settings shared by the CLI and the HTTP service. Loaded from a flat
/// `key = value` file; every key can be overridden by an environment
/// variable named SHELF_<KEY> in upper case.
struct PipelineConfig {
    std::filesystem::path dataset;
    std::filesystem::path workdir = "shelf-work";
    Variant variant = Variant::Full;

    double svm_c = 2048.0;
    Kernel kernel = Kernel::Rbf;
    double kernel_param = 2.0;
    bool gamma_per_dimension = true;
    bool standardize = false;

    float fire_threshold = kDefaultFireThreshold;
    std::size_t top_k = kDefaultTopDetectors;
    int pyramid_levels = 7;
    int mining_rounds = 4;
    int negatives_per_class = 5;

    double tau = 0.0;  // notification threshold on the classification score
    int vocabulary_size = 200;

    std::uint64_t seed = 0;
    unsigned workers = 1;

    std::string host = "127.0.0.1";
    int port = 8080;

    MiningParams mining() const;
    SvmParams svm() const;
    BowParams bow() const;
};

using ConfigValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment, values may be quoted.
ConfigValues parse_config_text(const std::string& text);

/// Applies values onto `config`; unknown keys and malformed values throw an
/// Error naming the key.
void apply_config(PipelineConfig& config, const ConfigValues& values);

/// SHELF_<KEY> variables for every known key.
ConfigValues environment_overrides();

/// File (optional, empty path skips it), then environment overrides, then validation.
PipelineConfig load_config(const std::filesystem::path& path);

void validate_config(const PipelineConfig& config);

/// Every key with its current value, in file syntax.
std::string dump_config(const PipelineConfig& config);

}  // namespace shelf
