#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "raterlab/ratings.hpp"

namespace raterlab {

// Distance metric for Krippendorff's alpha. Ordinal is the natural choice
// for ordered rating categories and is the default throughout; nominal and
// interval are available for comparison.
enum class AlphaMetric { Ordinal, Nominal, Interval };

inline const char* to_string(AlphaMetric m) {
    switch (m) {
        case AlphaMetric::Ordinal:  return "ordinal";
        case AlphaMetric::Nominal:  return "nominal";
        case AlphaMetric::Interval: return "interval";
    }
    return "?";
}

inline AlphaMetric parse_alpha_metric(const std::string& s) {
    if (s == "ordinal") return AlphaMetric::Ordinal;
    if (s == "nominal") return AlphaMetric::Nominal;
    if (s == "interval") return AlphaMetric::Interval;
    throw DomainError("unknown alpha metric: \"" + s + "\"");
}

struct AlphaReport {
    Aspect aspect = Aspect::Holistic;
    AlphaMetric metric = AlphaMetric::Ordinal;
    double alpha = 0.0;
    std::size_t n_units = 0;           // essays contributing >= 2 ratings
    std::size_t n_pairable_values = 0; // total ratings inside those essays
    bool degenerate = false;           // expected disagreement was zero
};

// Krippendorff's alpha for one aspect over a rater subset, computed through
// the coincidence matrix: a unit (essay) with m ratings contributes every
// ordered pair of distinct ratings with weight 1/(m - 1). Units with fewer
// than two ratings drop out.
inline AlphaReport krippendorff_alpha(const RatingTensor& tensor, Aspect aspect,
                                      const std::vector<std::string>& rater_subset,
                                      AlphaMetric metric = AlphaMetric::Ordinal) {
    std::size_t ai = tensor.aspect_index(aspect);
    int n_cat = tensor.scales[ai].max_category + 1;

    std::vector<std::size_t> rater_idx;
    if (rater_subset.empty()) {
        for (std::size_t r = 0; r < tensor.raters.size(); ++r) rater_idx.push_back(r);
    } else {
        for (const auto& id : rater_subset) rater_idx.push_back(tensor.rater_index(id));
    }

    std::vector<double> coincidence(static_cast<std::size_t>(n_cat) * n_cat, 0.0);
    AlphaReport report;
    report.aspect = aspect;
    report.metric = metric;

    std::vector<int> values;
    for (std::size_t e = 0; e < tensor.essays.size(); ++e) {
        values.clear();
        for (std::size_t r : rater_idx) {
            std::int16_t k = tensor.category(e, r, ai);
            if (k != RatingTensor::kMissing) values.push_back(k);
        }
        std::size_t m = values.size();
        if (m < 2) continue;
        report.n_units += 1;
        report.n_pairable_values += m;
        double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j)
                    coincidence[static_cast<std::size_t>(values[i]) * n_cat +
                                values[j]] += w;
    }

    if (report.n_units == 0)
        throw InsufficientDataError(
            std::string("no essay has two or more ratings for aspect ") +
            to_string(aspect));

    std::vector<double> marginal(n_cat, 0.0);
    double n_total = 0.0;
    for (int c = 0; c < n_cat; ++c) {
        for (int k = 0; k < n_cat; ++k)
            marginal[c] += coincidence[static_cast<std::size_t>(c) * n_cat + k];
        n_total += marginal[c];
    }

    auto delta_sq = [&](int c, int k) -> double {
        if (c == k) return 0.0;
        switch (metric) {
            case AlphaMetric::Nominal:
                return 1.0;
            case AlphaMetric::Interval: {
                double d = static_cast<double>(c - k);
                return d * d;
            }
            case AlphaMetric::Ordinal: {
                int lo = std::min(c, k), hi = std::max(c, k);
                double cum = 0.0;
                for (int g = lo; g <= hi; ++g) cum += marginal[g];
                double d = cum - 0.5 * (marginal[c] + marginal[k]);
                return d * d;
            }
        }
        return 0.0;
    };

    double d_observed = 0.0;
    double d_expected = 0.0;
    for (int c = 0; c < n_cat; ++c) {
        for (int k = 0; k < n_cat; ++k) {
            double d2 = delta_sq(c, k);
            d_observed += coincidence[static_cast<std::size_t>(c) * n_cat + k] * d2;
            d_expected += marginal[c] * marginal[k] * d2;
        }
    }
    d_observed /= n_total;
    d_expected /= n_total * (n_total - 1.0);

    if (d_expected <= 0.0) {
        // All paired values identical: perfect agreement by convention.
        report.alpha = 1.0;
        report.degenerate = true;
        return report;
    }
    report.alpha = 1.0 - d_observed / d_expected;
    return report;
}

inline AlphaReport krippendorff_alpha(const RatingTensor& tensor, Aspect aspect,
                                      AlphaMetric metric = AlphaMetric::Ordinal) {
    return krippendorff_alpha(tensor, aspect, {}, metric);
}

} // namespace raterlab
