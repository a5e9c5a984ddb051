#include "izsfd/metrics.hpp"

#include "izsfd/error.hpp"

namespace izsfd {

std::string to_string(Paradigm p) { return p == Paradigm::tzsfd ? "TZSFD" : "GZSFD"; }

Paradigm parse_paradigm(const std::string& text) {
    if (text == "TZSFD") return Paradigm::tzsfd;
    if (text == "GZSFD") return Paradigm::gzsfd;
    throw InvalidInput("unknown paradigm '" + text + "'");
}

double harmonic_mean(double acc_s, double acc_u) {
    if (acc_s < 0.0 || acc_s > 1.0 || acc_u < 0.0 || acc_u > 1.0)
        throw InvalidInput("accuracies must lie in [0, 1]");
    const double sum = acc_s + acc_u;
    return sum == 0.0 ? 0.0 : 2.0 * acc_s * acc_u / sum;
}

StageMetrics compute_metrics(double acc_s, double acc_u) {
    StageMetrics m;
    m.acc_s = acc_s;
    m.acc_u = acc_u;
    m.har = harmonic_mean(acc_s, acc_u);
    return m;
}

StageMetrics compute_metrics(std::span<const CategoryId> predictions, std::span<const CategoryId> labels,
                             const std::set<CategoryId>& seen, Paradigm paradigm, std::size_t stage) {
    if (predictions.size() != labels.size()) throw InvalidInput("predictions and labels are not aligned");
    StageMetrics m;
    m.stage = stage;
    m.paradigm = paradigm;
    std::size_t seen_total = 0, seen_correct = 0, unseen_total = 0, unseen_correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool is_seen = seen.count(labels[i]) != 0;
        if (paradigm == Paradigm::tzsfd && is_seen) continue;
        const bool ok = predictions[i] == labels[i];
        auto& cat = m.per_category[labels[i]];
        ++cat.total;
        cat.correct += ok;
        if (is_seen) {
            ++seen_total;
            seen_correct += ok;
        } else {
            ++unseen_total;
            unseen_correct += ok;
        }
    }
    if (unseen_total == 0) throw UndefinedMetric("no unseen-category test samples");
    m.acc_u = static_cast<double>(unseen_correct) / static_cast<double>(unseen_total);
    if (paradigm == Paradigm::gzsfd) {
        if (seen_total == 0) throw UndefinedMetric("no seen-category test samples");
        m.acc_s = static_cast<double>(seen_correct) / static_cast<double>(seen_total);
        m.har = harmonic_mean(*m.acc_s, m.acc_u);
    }
    return m;
}

double accuracy(std::span<const CategoryId> predictions, std::span<const CategoryId> labels) {
    if (predictions.size() != labels.size()) throw InvalidInput("predictions and labels are not aligned");
    if (labels.empty()) throw UndefinedMetric("no samples");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) ok += predictions[i] == labels[i];
    return static_cast<double>(ok) / static_cast<double>(labels.size());
}

}  // namespace izsfd
