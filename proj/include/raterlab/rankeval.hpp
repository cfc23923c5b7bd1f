#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raterlab/predictions.hpp"
#include "raterlab/rasch.hpp"
#include "raterlab/rng.hpp"

namespace raterlab {

// Fractional ranks (1-based); tied values share the average of their
// positions.
inline std::vector<double> fractional_ranks(std::span<const double> x) {
    std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation: Pearson correlation of fractional ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DomainError("spearman: length mismatch (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 2)
        throw InsufficientDataError("spearman: need at least two observations");
    auto rx = fractional_ranks(x);
    auto ry = fractional_ranks(y);
    double n = static_cast<double>(x.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw DegenerateError("spearman: zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation (n - 1)
    std::size_t n = 0;
};

inline MeanSd mean_sd(std::span<const double> v) {
    MeanSd out;
    out.n = v.size();
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return out;
}

struct RaterSrc {
    std::string rater_id;
    double src = 0.0;
    std::size_t n_essays = 0;
};

struct AverageRaterSrc {
    Aspect aspect = Aspect::Holistic;
    std::vector<RaterSrc> per_rater;
    MeanSd summary;
};

// Average single-rater agreement: each rater's raw ratings correlated (SRC)
// with the fair scores over the essays that rater actually rated, then
// summarized across raters.
inline AverageRaterSrc average_rater_src(const RatingTensor& tensor,
                                         const FairScores& fair,
                                         const std::vector<std::string>& raters) {
    std::size_t ai = tensor.aspect_index(fair.aspect);
    AverageRaterSrc out;
    out.aspect = fair.aspect;
    std::vector<double> srcs;
    for (const auto& rid : raters) {
        std::size_t r = tensor.rater_index(rid);
        std::vector<double> xs, ys;
        for (std::size_t n = 0; n < fair.essays.size(); ++n) {
            std::int16_t k = tensor.category(tensor.essay_index(fair.essays[n]), r, ai);
            if (k == RatingTensor::kMissing) continue;
            xs.push_back(static_cast<double>(k));
            ys.push_back(fair.expected[n]);
        }
        RaterSrc rs;
        rs.rater_id = rid;
        rs.n_essays = xs.size();
        rs.src = spearman(xs, ys);
        srcs.push_back(rs.src);
        out.per_rater.push_back(std::move(rs));
    }
    out.summary = mean_sd(srcs);
    return out;
}

namespace detail {

// Raters of the subset that rated the given essay row on any aspect.
inline std::vector<std::size_t> raters_on_essay(const RatingTensor& tensor,
                                                std::size_t e,
                                                const std::vector<std::size_t>& rcols) {
    std::vector<std::size_t> out;
    for (std::size_t idx = 0; idx < rcols.size(); ++idx) {
        for (std::size_t a = 0; a < tensor.aspects.size(); ++a) {
            if (tensor.has(e, rcols[idx], a)) {
                out.push_back(idx);
                break;
            }
        }
    }
    return out;
}

} // namespace detail

// Operational-rater simulation: one rater drawn per essay, uniformly among
// subset raters that rated the essay; the essay's scores on every requested
// aspect are that rater's ratings on the reporting scale. The draw is a pure
// function of (seed, essay index), so any essay's assignment can be audited
// in isolation.
inline PredictionSet operational_rater_draw(const RatingTensor& tensor,
                                            const std::vector<std::string>& raters,
                                            const std::vector<Aspect>& aspects,
                                            std::uint64_t seed) {
    std::vector<std::size_t> rcols;
    for (const auto& id : raters) rcols.push_back(tensor.rater_index(id));

    PredictionSet out;
    out.source_id = "or-seed" + std::to_string(seed);
    out.essays = tensor.essays;
    for (Aspect a : aspects) out.scores[a].assign(tensor.essays.size(), 0.0);

    CounterRng rng(seed);
    for (std::size_t e = 0; e < tensor.essays.size(); ++e) {
        auto avail = detail::raters_on_essay(tensor, e, rcols);
        if (avail.empty())
            throw InsufficientDataError("no subset rater rated essay " +
                                        tensor.essays[e]);
        std::size_t pick = avail[rng.below(e, avail.size())];
        for (Aspect a : aspects) {
            std::size_t ai = tensor.aspect_index(a);
            std::int16_t k = tensor.category(e, rcols[pick], ai);
            if (k == RatingTensor::kMissing)
                throw DomainError("drawn rater " + raters[pick] + " has no " +
                                  std::string(to_string(a)) + " rating for essay " +
                                  tensor.essays[e]);
            out.scores[a][e] = tensor.scales[ai].to_score(k);
        }
    }
    return out;
}

// Ensemble of raw raters: per essay, draw `size` distinct raters and average
// their reporting-scale ratings per aspect.
inline PredictionSet ensemble_scores(const RatingTensor& tensor,
                                     const std::vector<std::string>& raters,
                                     const std::vector<Aspect>& aspects,
                                     std::size_t size, std::uint64_t seed) {
    std::vector<std::size_t> rcols;
    for (const auto& id : raters) rcols.push_back(tensor.rater_index(id));

    PredictionSet out;
    out.source_id = "ens" + std::to_string(size) + "-seed" + std::to_string(seed);
    out.essays = tensor.essays;
    for (Aspect a : aspects) out.scores[a].assign(tensor.essays.size(), 0.0);

    CounterRng rng(seed);
    for (std::size_t e = 0; e < tensor.essays.size(); ++e) {
        auto avail = detail::raters_on_essay(tensor, e, rcols);
        if (size > avail.size())
            throw DomainError("ensemble size " + std::to_string(size) +
                              " exceeds the " + std::to_string(avail.size()) +
                              " raters available for essay " + tensor.essays[e]);
        // Partial Fisher-Yates over the available list, indexed by a
        // per-essay substream.
        CounterRng sub = rng.substream(e);
        for (std::size_t j = 0; j < size; ++j) {
            std::size_t pick = j + sub.below(j, avail.size() - j);
            std::swap(avail[j], avail[pick]);
        }
        for (Aspect a : aspects) {
            std::size_t ai = tensor.aspect_index(a);
            double sum = 0.0;
            for (std::size_t j = 0; j < size; ++j) {
                std::int16_t k = tensor.category(e, rcols[avail[j]], ai);
                if (k == RatingTensor::kMissing)
                    throw DomainError("ensemble rater " + raters[avail[j]] +
                                      " has no " + std::string(to_string(a)) +
                                      " rating for essay " + tensor.essays[e]);
                sum += tensor.scales[ai].to_score(k);
            }
            out.scores[a][e] = sum / static_cast<double>(size);
        }
    }
    return out;
}

// SRC of one prediction column against one aspect's fair scores, aligned by
// essay id.
inline double src_against_fair(const PredictionSet& pred, Aspect pred_aspect,
                               const FairScores& fair) {
    const auto& col = pred.column(pred_aspect);
    std::vector<double> ys;
    ys.reserve(pred.essays.size());
    for (const auto& id : pred.essays) ys.push_back(fair.expected_of(id));
    return spearman(col, ys);
}

// One prediction column against every aspect's fair scores: the cross-aspect
// discrimination profile.
inline std::map<Aspect, double> cross_aspect_src(
    const PredictionSet& pred, Aspect pred_aspect,
    const std::map<Aspect, FairScores>& fair_by_aspect) {
    std::map<Aspect, double> out;
    for (const auto& [aspect, fair] : fair_by_aspect)
        out[aspect] = src_against_fair(pred, pred_aspect, fair);
    return out;
}

} // namespace raterlab
