#pragma once

// Self-describing binary archive used for checkpoints.
//
//   bytes 0-7    magic "IZSFDARC"
//   u64          format version (1)
//   u64          header length h
//   h bytes      UTF-8 JSON header: {"meta": {...}, "tensors": [{"name", "rows",
//                "cols", "offset"}, ...]}; offsets count doubles from the
//                start of the blob section
//   blob         IEEE-754 doubles, little-endian, each tensor row-major
//
// All integers are little-endian.

#include "izsfd/linalg.hpp"
#include "izsfd/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace izsfd {

inline constexpr std::uint64_t kArchiveVersion = 1;

struct Archive {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Matrix> tensors;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

// Full stage state. `meta` is stored alongside under "run".
void save_checkpoint(const std::filesystem::path& path, const StageState& state,
                     const nlohmann::json& run = nlohmann::json::object());
StageState load_checkpoint(const std::filesystem::path& path, nlohmann::json* run = nullptr);

}  // namespace izsfd
