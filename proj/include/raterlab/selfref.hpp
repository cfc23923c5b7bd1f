#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "raterlab/predictions.hpp"
#include "raterlab/rasch.hpp"

namespace raterlab {

// Feedback evaluation without an external gold standard: a score profile is
// standardized per aspect, each essay's profile mean is compared to its
// per-aspect standing, and aspects that fall a full delta-sd below (above)
// the essay's own mean become negative (positive) feedback targets. A
// predictor is then judged by how well its own deltas recover the targets
// derived from the reference scores.

// Essays x aspects score matrix, row-major.
struct ScoreTable {
    std::vector<std::string> essays;
    std::vector<Aspect> aspects;
    std::vector<double> values;

    double at(std::size_t essay, std::size_t aspect) const {
        return values[essay * aspects.size() + aspect];
    }
};

inline ScoreTable table_from_fair(const std::map<Aspect, FairScores>& fair,
                                  const std::vector<Aspect>& aspects) {
    ScoreTable t;
    t.aspects = aspects;
    if (aspects.empty()) throw InsufficientDataError("score table: no aspects");
    const FairScores& first = fair.at(aspects.front());
    t.essays = first.essays;
    t.values.resize(t.essays.size() * aspects.size());
    for (std::size_t j = 0; j < aspects.size(); ++j) {
        const FairScores& fs = fair.at(aspects[j]);
        for (std::size_t i = 0; i < t.essays.size(); ++i)
            t.values[i * aspects.size() + j] = fs.expected_of(t.essays[i]);
    }
    return t;
}

inline ScoreTable table_from_predictions(const PredictionSet& pred,
                                         const std::vector<Aspect>& aspects) {
    ScoreTable t;
    t.aspects = aspects;
    if (aspects.empty()) throw InsufficientDataError("score table: no aspects");
    t.essays = pred.essays;
    t.values.resize(t.essays.size() * aspects.size());
    for (std::size_t j = 0; j < aspects.size(); ++j) {
        const auto& col = pred.column(aspects[j]);
        for (std::size_t i = 0; i < t.essays.size(); ++i)
            t.values[i * aspects.size() + j] = col[i];
    }
    return t;
}

// Standardized profiles and within-essay deltas.
struct ProfileDeltas {
    std::vector<std::string> essays;
    std::vector<Aspect> aspects;
    std::vector<double> z;           // row-major: (score - mean) / sd
    std::vector<double> mu;          // per essay: mean of z across aspects
    std::vector<double> delta;       // row-major: mu - z
    std::vector<double> sigma_delta; // per aspect: population sd of delta
    std::vector<double> col_mean, col_sd;

    double z_at(std::size_t i, std::size_t j) const { return z[i * aspects.size() + j]; }
    double delta_at(std::size_t i, std::size_t j) const {
        return delta[i * aspects.size() + j];
    }
};

// Column-standardize with population statistics, form each essay's profile
// mean mu and the deltas mu - z, and record each delta column's population
// sd. Constant columns make the z-score undefined and are an error.
inline ProfileDeltas standardize(const ScoreTable& table) {
    std::size_t n = table.essays.size(), m = table.aspects.size();
    if (n < 2)
        throw InsufficientDataError("standardize: need at least two essays");

    ProfileDeltas out;
    out.essays = table.essays;
    out.aspects = table.aspects;
    out.z.resize(n * m);
    out.mu.assign(n, 0.0);
    out.delta.resize(n * m);
    out.sigma_delta.assign(m, 0.0);
    out.col_mean.assign(m, 0.0);
    out.col_sd.assign(m, 0.0);

    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += table.at(i, j);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = table.at(i, j) - mean;
            ss += d * d;
        }
        double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd <= 0.0)
            throw DegenerateError(std::string("standardize: aspect ") +
                                  to_string(table.aspects[j]) +
                                  " is constant across essays");
        out.col_mean[j] = mean;
        out.col_sd[j] = sd;
        for (std::size_t i = 0; i < n; ++i)
            out.z[i * m + j] = (table.at(i, j) - mean) / sd;
    }

    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < m; ++j) mu += out.z[i * m + j];
        mu /= static_cast<double>(m);
        out.mu[i] = mu;
        for (std::size_t j = 0; j < m; ++j)
            out.delta[i * m + j] = mu - out.z[i * m + j];
    }

    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += out.delta[i * m + j];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = out.delta[i * m + j] - mean;
            ss += d * d;
        }
        out.sigma_delta[j] = std::sqrt(ss / static_cast<double>(n));
    }
    return out;
}

// Binary feedback targets per (essay, aspect): an aspect a full delta-sd
// below the essay's own profile mean warrants negative (improvement)
// feedback; a full delta-sd above warrants positive feedback. Both bounds
// inclusive.
struct FeedbackTargets {
    std::vector<std::string> essays;
    std::vector<Aspect> aspects;
    std::vector<std::uint8_t> negative; // row-major
    std::vector<std::uint8_t> positive;

    bool negative_at(std::size_t i, std::size_t j) const {
        return negative[i * aspects.size() + j] != 0;
    }
    bool positive_at(std::size_t i, std::size_t j) const {
        return positive[i * aspects.size() + j] != 0;
    }
};

inline FeedbackTargets make_targets(const ProfileDeltas& ref) {
    std::size_t n = ref.essays.size(), m = ref.aspects.size();
    FeedbackTargets t;
    t.essays = ref.essays;
    t.aspects = ref.aspects;
    t.negative.assign(n * m, 0);
    t.positive.assign(n * m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double d = ref.delta_at(i, j);
            if (d >= ref.sigma_delta[j]) t.negative[i * m + j] = 1;
            if (d <= -ref.sigma_delta[j]) t.positive[i * m + j] = 1;
        }
    }
    return t;
}

enum class Polarity { Negative, Positive };

inline const char* to_string(Polarity p) {
    return p == Polarity::Negative ? "negative" : "positive";
}

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Precision rescaled to a target prevalence: false positives are weighted by
// gamma = N+ (1 - pr) / (pr N-), the factor that would bring the class ratio
// to pr. Undefined when there are no negatives to reweight.
struct NormalizedPrecision {
    double value = 0.0;
    double gamma = 0.0;
};

inline NormalizedPrecision normalize_precision(const ConfusionCounts& c,
                                               double pr_target) {
    if (!(pr_target > 0.0 && pr_target < 1.0))
        throw DomainError("normalize_precision: target prevalence must be in (0, 1)");
    long n_pos = c.tp + c.fn;
    long n_neg = c.fp + c.tn;
    if (n_neg == 0)
        throw DomainError("normalize_precision: no negative cells");
    NormalizedPrecision out;
    out.gamma = static_cast<double>(n_pos) * (1.0 - pr_target) /
                (pr_target * static_cast<double>(n_neg));
    double denom = static_cast<double>(c.tp) + out.gamma * static_cast<double>(c.fp);
    out.value = denom > 0.0 ? static_cast<double>(c.tp) / denom : 0.0;
    return out;
}

// F_beta from precision and recall; zero when both are zero.
inline double f_beta(double precision, double recall, double beta) {
    double b2 = beta * beta;
    double denom = b2 * precision + recall;
    if (denom <= 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

// Result of the threshold sweep for one (aspect, polarity). Rates are plain
// fractions in [0, 1]; reports scale them to percent.
struct EvalResult {
    Aspect aspect = Aspect::Holistic;
    Polarity polarity = Polarity::Negative;
    double threshold = 0.0; // cut on the polarity-signed delta
    ConfusionCounts counts;
    double precision = 0.0, recall = 0.0, f_half = 0.0;
    double precision_norm = 0.0, f_half_norm = 0.0;
    double prevalence = 0.0; // raw positive share of the target column
    double pr_target = 0.0, gamma = 0.0;
};

// Sweep every achievable decision threshold on the predictor's deltas for
// one aspect and polarity, and keep the threshold with the best
// prevalence-normalized F0.5 (ties resolved toward the smallest threshold,
// i.e. the most inclusive predictor). The sweep includes a sentinel above
// the maximum signal, so "predict nothing" is always a candidate, and the
// lowest threshold predicts everything.
inline EvalResult best_f_half(const ProfileDeltas& pred, const FeedbackTargets& targets,
                              Aspect aspect, Polarity polarity, double pr_target) {
    if (pred.essays != targets.essays)
        throw DomainError("best_f_half: prediction and target essays differ");
    std::size_t m = pred.aspects.size();
    std::size_t j = 0;
    for (; j < m; ++j)
        if (pred.aspects[j] == aspect) break;
    if (j == m)
        throw UnknownAspectError(std::string("best_f_half: aspect not in profile: ") +
                                 to_string(aspect));
    std::size_t tj = 0;
    for (; tj < targets.aspects.size(); ++tj)
        if (targets.aspects[tj] == aspect) break;
    if (tj == targets.aspects.size())
        throw UnknownAspectError(std::string("best_f_half: aspect not in targets: ") +
                                 to_string(aspect));

    std::size_t n = pred.essays.size();
    double sign = polarity == Polarity::Negative ? 1.0 : -1.0;
    std::vector<double> signal(n);
    std::vector<std::uint8_t> truth(n);
    long n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        signal[i] = sign * pred.delta_at(i, j);
        truth[i] = polarity == Polarity::Negative ? targets.negative_at(i, tj)
                                                  : targets.positive_at(i, tj);
        if (truth[i]) ++n_pos;
    }
    if (n_pos == 0)
        throw NoPositivesError(std::string("no ") + to_string(polarity) +
                               " targets for aspect " + to_string(aspect));

    std::vector<double> thresholds(signal.begin(), signal.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    thresholds.push_back(thresholds.back() + 1.0); // predict-nothing sentinel

    EvalResult best;
    best.aspect = aspect;
    best.polarity = polarity;
    best.pr_target = pr_target;
    best.prevalence = static_cast<double>(n_pos) / static_cast<double>(n);
    double best_score = -1.0;
    for (double t : thresholds) {
        ConfusionCounts c;
        for (std::size_t i = 0; i < n; ++i) {
            bool predicted = signal[i] >= t;
            if (predicted && truth[i]) ++c.tp;
            else if (predicted) ++c.fp;
            else if (truth[i]) ++c.fn;
            else ++c.tn;
        }
        auto np = normalize_precision(c, pr_target);
        double recall = static_cast<double>(c.tp) / static_cast<double>(n_pos);
        double fn_norm = f_beta(np.value, recall, 0.5);
        if (fn_norm > best_score) {
            best_score = fn_norm;
            long predicted = c.tp + c.fp;
            best.threshold = t;
            best.counts = c;
            best.precision = predicted > 0
                                 ? static_cast<double>(c.tp) / static_cast<double>(predicted)
                                 : 0.0;
            best.recall = recall;
            best.f_half = f_beta(best.precision, recall, 0.5);
            best.precision_norm = np.value;
            best.f_half_norm = fn_norm;
            best.gamma = np.gamma;
        }
    }
    return best;
}

// Share of essays that would receive at least one feedback flag, by macro
// group and overall. Fractions in [0, 1].
struct CoverageRow {
    std::string group;
    double negative = 0.0, positive = 0.0, either = 0.0;
    std::size_t n_essays = 0;
};

inline std::vector<CoverageRow> feedback_coverage(const FeedbackTargets& targets) {
    std::size_t n = targets.essays.size(), m = targets.aspects.size();
    auto row_for = [&](const std::string& name, auto member_of) {
        CoverageRow row;
        row.group = name;
        row.n_essays = n;
        std::size_t neg = 0, pos = 0, either = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool any_neg = false, any_pos = false;
            for (std::size_t j = 0; j < m; ++j) {
                if (!member_of(targets.aspects[j])) continue;
                any_neg = any_neg || targets.negative_at(i, j);
                any_pos = any_pos || targets.positive_at(i, j);
            }
            neg += any_neg;
            pos += any_pos;
            either += (any_neg || any_pos);
        }
        row.negative = static_cast<double>(neg) / static_cast<double>(n);
        row.positive = static_cast<double>(pos) / static_cast<double>(n);
        row.either = static_cast<double>(either) / static_cast<double>(n);
        return row;
    };

    std::vector<CoverageRow> rows;
    for (MacroAspect g :
         {MacroAspect::Language, MacroAspect::Content, MacroAspect::Attitude}) {
        bool present = false;
        for (Aspect a : targets.aspects) present = present || macro_of(a) == g;
        if (present)
            rows.push_back(row_for(to_string(g),
                                   [g](Aspect a) { return macro_of(a) == g; }));
    }
    rows.push_back(row_for("All", [](Aspect) { return true; }));
    return rows;
}

} // namespace raterlab
