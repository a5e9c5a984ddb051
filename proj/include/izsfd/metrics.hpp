#pragma once

// Seen / unseen accuracy and their harmonic mean.
//
//   acc_s = correct seen-labelled / seen-labelled
//   acc_u = correct unseen-labelled / unseen-labelled
//   Har   = 2 acc_s acc_u / (acc_s + acc_u),   Har(0, 0) = 0
//
// All values are fractions; formatting as percentages happens at output.

#include "izsfd/schema.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>

namespace izsfd {

enum class Paradigm { tzsfd, gzsfd };

std::string to_string(Paradigm p);
Paradigm parse_paradigm(const std::string& text);

struct CategoryAccuracy {
    std::size_t correct = 0;
    std::size_t total = 0;
    bool operator==(const CategoryAccuracy&) const = default;
};

struct StageMetrics {
    std::size_t stage = 0;
    Paradigm paradigm = Paradigm::gzsfd;
    std::optional<double> acc_s;  // absent in TZSFD
    double acc_u = 0.0;
    std::optional<double> har;    // absent in TZSFD
    std::map<CategoryId, CategoryAccuracy> per_category;
};

double harmonic_mean(double acc_s, double acc_u);

// GZSFD from two accuracies.
StageMetrics compute_metrics(double acc_s, double acc_u);

// From aligned predictions and labels. TZSFD ignores seen-labelled samples
// and reports acc_u only; an empty unseen partition (or, in GZSFD, an empty
// seen partition) raises UndefinedMetric.
StageMetrics compute_metrics(std::span<const CategoryId> predictions, std::span<const CategoryId> labels,
                             const std::set<CategoryId>& seen, Paradigm paradigm, std::size_t stage = 0);

// Accuracy over all samples; UndefinedMetric when empty.
double accuracy(std::span<const CategoryId> predictions, std::span<const CategoryId> labels);

}  // namespace izsfd
