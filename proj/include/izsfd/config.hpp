#pragma once

// Experiment configuration in a TOML-style key/value format.
//
// Supported subset: `# comments`, `[section]` and `[a.b]` headers,
// `key = value` with strings ("..." with \" \\ \n \t escapes), booleans,
// integers, floats and arrays of those (arrays may span lines). Values are
// parsed into a JSON tree so they can be embedded in run manifests verbatim.

#include "izsfd/dataset.hpp"
#include "izsfd/plan.hpp"
#include "izsfd/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string_view>

namespace izsfd {

// Throws ConfigError naming `origin` and the line on malformed input.
nlohmann::json parse_toml(std::string_view text, std::string_view origin = "<config>");
nlohmann::json load_toml(const std::filesystem::path& path);

struct DataConfig {
    std::string source = "synthetic";  // "synthetic" or "dataset"
    std::filesystem::path path;        // canonical dataset directory
    SyntheticSpec synthetic;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> plan_seed;  // defaults to seed
    DataConfig data;
    Protocol protocol = Protocol::category_increment;
    std::size_t stages = 3;
    std::optional<std::size_t> unseen_count;
    double unseen_fraction = 0.2;
    ProtocolConfig training;
    std::filesystem::path output_dir = "runs/latest";
    bool checkpoints = true;
    bool projection = true;
    nlohmann::json raw = nlohmann::json::object();

    std::uint64_t effective_plan_seed() const { return plan_seed.value_or(seed); }

    // --seed: replaces the training seed and the plan seed.
    void override_seed(std::uint64_t s);
};

// Relative paths resolve against `base_dir`. Unknown sections or keys are
// rejected with ConfigError.
ExperimentConfig experiment_config_from(const nlohmann::json& table, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// A synthetic benchmark description: keys of a [synthetic] table (or a
// top-level table holding the same keys).
SyntheticSpec synthetic_spec_from(const nlohmann::json& table);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

Protocol parse_protocol(const std::string& text);
Method parse_method(const std::string& text);

}  // namespace izsfd
