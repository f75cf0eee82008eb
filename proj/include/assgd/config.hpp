#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "assgd/dataset.hpp"
#include "assgd/engine.hpp"
#include "assgd/error.hpp"

namespace assgd {

/// Unknown or malformed configuration keys and values.
class ConfigError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

using KeyValues = std::map<std::string, std::string>;

/// Every key accepted in a config file or as a `--key` override.
const std::vector<std::string>& config_keys();

/// `key = value` lines; `#` starts a comment. Unknown keys raise ConfigError
/// listing the valid ones.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

/// Resolves `path`; relative paths missing from the working directory are
/// looked up in $ASSGD_CONFIG_DIR.
std::string resolve_config_path(const std::string& path);

/// Where the training and evaluation data come from.
struct DataConfig {
    std::string train_data;
    std::string test_data;
    std::string train_labels;  // IDX only
    std::string test_labels;   // IDX only
    std::string format = "libsvm";
    LibsvmOptions libsvm;
    double test_fraction = 0.0;
    std::uint64_t split_seed = 0;
    /// Used when train_data is empty.
    SynthSpec synth;
};

struct RunConfig {
    TrainConfig train;
    DataConfig data;
    std::string output = "metrics.csv";
    std::string checkpoint = "model.ckpt";
    std::string summary = "summary.csv";
    std::vector<Algorithm> algorithms;
    std::vector<std::uint64_t> seeds;
    std::optional<double> target_loss;
    /// Fraction of the MBSGD budget whose loss defines the bench target.
    double target_fraction = 0.8;
};

RunConfig resolve_config(const KeyValues& kv);

/// Loads (train, test) per the data config; test is empty when neither a
/// test file nor a split fraction is configured.
std::pair<Dataset, std::optional<Dataset>> load_data(const DataConfig& config);

}  // namespace assgd
