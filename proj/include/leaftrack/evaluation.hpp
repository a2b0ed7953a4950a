#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leaftrack/skeleton.hpp"

namespace leaftrack {

struct GroundTruthLeaf {
    std::optional<Pixel> tip;
    std::optional<Pixel> branch;
};

struct GroundTruthView {
    std::optional<int> count; // explicit count when positions are absent
    std::vector<GroundTruthLeaf> leaves;

    int effective_count() const {
        return count ? *count : static_cast<int>(leaves.size());
    }
    bool positional() const { return !leaves.empty(); }
};

struct GroundTruthDay {
    std::map<int, GroundTruthView> views; // keyed 0 / 90

    // Reference leaf count: the maximum across the annotated views.
    int max_count() const {
        int m = 0;
        for (const auto& [v, gv] : views) m = std::max(m, gv.effective_count());
        return m;
    }
};

struct GroundTruth {
    std::string plant_id;
    std::map<int, GroundTruthDay> days;
};

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

struct EvaluationParams {
    double positional_tolerance = 20.0; // pixels between predicted and true tips
    bool use_selected_view_counts = false;
};

// One plant-day of detections to score.
struct DayDetections {
    int day = 0;
    int view = 0;
    std::vector<LeafCandidate> leaves;
};

namespace detail {

inline ConfusionCounts confusion_one_day(const DayDetections& det,
                                         const GroundTruthDay& truth,
                                         const EvaluationParams& params) {
    ConfusionCounts c;
    const auto view_it = truth.views.find(det.view);
    int truth_count = truth.max_count();
    if (params.use_selected_view_counts && view_it != truth.views.end())
        truth_count = view_it->second.effective_count();

    std::vector<const LeafCandidate*> detections;
    for (const auto& l : det.leaves)
        if (l.label == LeafLabel::leaf || l.label == LeafLabel::occluded)
            detections.push_back(&l);

    if (view_it != truth.views.end() && view_it->second.positional()) {
        // Greedy nearest-first tip matching; each annotation consumed once.
        const auto& anns = view_it->second.leaves;
        struct Pair {
            double d;
            int det;
            int ann;
        };
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (!detections[i]->tip) continue;
            for (std::size_t j = 0; j < anns.size(); ++j) {
                if (!anns[j].tip) continue;
                const double d = euclid(*detections[i]->tip, *anns[j].tip);
                if (d <= params.positional_tolerance)
                    pairs.push_back({d, static_cast<int>(i), static_cast<int>(j)});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            return std::tie(a.d, a.det, a.ann) < std::tie(b.d, b.det, b.ann);
        });
        std::vector<char> det_used(detections.size(), false);
        std::vector<char> ann_used(anns.size(), false);
        long long tp = 0;
        for (const Pair& pr : pairs) {
            if (det_used[pr.det] || ann_used[pr.ann]) continue;
            det_used[pr.det] = true;
            ann_used[pr.ann] = true;
            ++tp;
        }
        c.tp = tp;
        c.fp = static_cast<long long>(detections.size()) - tp;
        c.fn = std::max<long long>(truth_count - tp, 0);
    } else {
        const long long d = static_cast<long long>(detections.size());
        c.tp = std::min<long long>(d, truth_count);
        c.fp = std::max<long long>(d - truth_count, 0);
        c.fn = std::max<long long>(truth_count - d, 0);
    }
    return c;
}

} // namespace detail

// Sums confusion counts over a plant's detections against its ground
// truth. Positional annotations are matched greedily nearest-first within
// the tolerance; days annotated with counts only fall back to count
// arithmetic.
inline ConfusionCounts confusion_counts(const std::vector<DayDetections>& detections,
                                        const GroundTruth& truth,
                                        const EvaluationParams& params = {}) {
    ConfusionCounts total;
    for (const auto& det : detections) {
        const auto it = truth.days.find(det.day);
        if (it == truth.days.end())
            throw std::invalid_argument(
                "confusion_counts: day " + std::to_string(det.day) +
                " missing from ground truth for plant " + truth.plant_id);
        const ConfusionCounts c = detail::confusion_one_day(det, it->second, params);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
    }
    return total;
}

struct PrecisionRecall {
    std::optional<double> precision;
    std::optional<double> recall;
};

inline PrecisionRecall precision_recall(long long tp, long long fp, long long fn) {
    if (tp < 0 || fp < 0 || fn < 0)
        throw std::invalid_argument("precision_recall: counts must be >= 0");
    PrecisionRecall pr;
    if (tp + fp > 0) pr.precision = static_cast<double>(tp) / (tp + fp);
    if (tp + fn > 0) pr.recall = static_cast<double>(tp) / (tp + fn);
    return pr;
}

struct LossStats {
    double mean_abs_loss = 0.0;
    double abs_loss_std = 0.0; // population standard deviation
};

inline LossStats absolute_loss_stats(const std::vector<int>& predicted,
                                     const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("absolute_loss_stats: length mismatch");
    LossStats s;
    if (predicted.empty()) return s;
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        sum += std::abs(predicted[i] - truth[i]);
    s.mean_abs_loss = sum / predicted.size();
    double var = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = std::abs(predicted[i] - truth[i]) - s.mean_abs_loss;
        var += d * d;
    }
    s.abs_loss_std = std::sqrt(var / predicted.size());
    return s;
}

struct MetricsReport {
    ConfusionCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
    LossStats loss;
};

} // namespace leaftrack
