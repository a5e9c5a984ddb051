#pragma once

// Small shared pieces for the unit tests: scratch directories and a tiny
// synthetic setup that trains in well under a second.

#include "izsfd/dataset.hpp"
#include "izsfd/protocol.hpp"

#include <filesystem>
#include <string>

namespace izsfd::fixture {

class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("izsfd_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline SyntheticSpec tiny_spec() {
    SyntheticSpec s;
    s.cardinalities = {3, 3, 3, 3};
    s.categories = 9;
    s.dim = 8;
    s.sigma = 0.5;
    s.direction_scale = 3.0;
    s.train_per_category = 20;
    s.test_per_category = 10;
    s.seed = 3;
    return s;
}

inline ProtocolConfig tiny_protocol() {
    ProtocolConfig c;
    c.shape.fe_hidden = 16;
    c.shape.feature_dim = 6;
    c.shape.noise_dim = 4;
    c.shape.generator_hidden = {16};
    c.shape.critic_hidden = {16};
    c.pretrain.epochs = 30;
    c.head.epochs = 3;
    c.gan.epochs = 2;
    c.fidelity_samples = 20;
    return c;
}

inline std::filesystem::path source_dir() { return IZSFD_SOURCE_DIR; }

}  // namespace izsfd::fixture
