#pragma once

// Labelled fault datasets, the canonical on-disk layout, a synthetic
// benchmark with linearly decodable attributes, and loaders for the
// hydraulic test-rig and Tennessee Eastman layouts.
//
// Canonical directory layout (all binary files little-endian, row-major):
//   manifest.json     {"format": "izsfd-dataset", "version": 1, "rows": n,
//                      "dim": d, "cardinalities": [...], "categories": [...],
//                      "counts": {"train": n_s, "test": n_t}, "files": {...}}
//   features.f64      n*d IEEE-754 doubles
//   labels.i64        n signed 64-bit category ids
//   split.u8          n bytes, 0 = train, 1 = test
//   attributes.f64    l*m doubles, one coded row per entry of "categories"

#include "izsfd/linalg.hpp"
#include "izsfd/schema.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

namespace izsfd {

enum class Split : std::uint8_t { train = 0, test = 1 };

struct Dataset {
    Matrix x;
    std::vector<CategoryId> labels;
    std::vector<Split> split;
    FaultAttributeMatrix attributes;

    std::size_t size() const { return labels.size(); }
    Eigen::Index dim() const { return x.cols(); }
    std::size_t count(Split s) const;

    // Row indices with the given split whose label is in `categories`, in
    // dataset order.
    std::vector<std::size_t> rows(Split s, const std::set<CategoryId>& categories) const;

    // Shape, split and label checks; throws InvalidInput.
    void validate() const;
};

void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Per category, the first round(test_fraction * count) rows of a seeded
// shuffle become test rows. Every category keeps at least one train row.
void assign_split(Dataset& data, double test_fraction, std::uint64_t seed);

struct SyntheticSpec {
    std::vector<Eigen::Index> cardinalities{3, 3, 3, 3, 3, 3};
    std::size_t categories = 16;
    Eigen::Index dim = 32;
    double sigma = 1.0;            // within-category noise
    double direction_scale = 1.0;  // expected norm of each attribute-value direction
    std::size_t train_per_category = 60;
    std::size_t test_per_category = 40;
    std::uint64_t seed = 1;

    void validate() const;  // throws SpecError
};

// Generating mixture behind a synthetic dataset.
struct SyntheticTruth {
    AttributeSchema schema;
    std::vector<std::vector<int>> raw;  // attribute values per category
    Matrix directions;                  // m x d, row = one attribute value
    Matrix means;                       // l x d
};

SyntheticTruth synthetic_truth(const SyntheticSpec& spec);

// Category c has mean sum_g directions[offset_g + raw_c[g]] and isotropic
// Gaussian noise of scale sigma. Rows are category-major: train rows then
// test rows of category 0, then category 1, ...
Dataset gen_synthetic(const SyntheticSpec& spec);

// Hydraulic test-rig layout: one tab-separated .txt per sensor (one line per
// cycle) plus profile.txt. Sensors are flattened in lexicographic file-name
// order. The four condition columns of profile.txt define the category; ids
// are dense over observed tuples in mixed-radix order. Every row is tagged
// train; use assign_split afterwards.
Dataset load_hydraulic(const std::filesystem::path& dir);

// Tennessee Eastman layout.
//   data CSV:       fault,split,x1,...,x52   (split is train/test or 0/1;
//                   an optional header row is skipped)
//   attribute CSV:  fault,a1,...,aK          binary entries, each attribute a
//                   two-valued group
Dataset load_tep(const std::filesystem::path& data_csv, const std::filesystem::path& attribute_csv);

inline constexpr Eigen::Index kTepWidth = 52;
inline constexpr Eigen::Index kHydraulicWidth = 43680;

}  // namespace izsfd
