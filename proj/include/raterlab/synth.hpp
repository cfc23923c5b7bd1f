#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "raterlab/rasch.hpp"
#include "raterlab/ratings.hpp"
#include "raterlab/rng.hpp"

namespace raterlab {

// Synthetic corpus generator: the oracle for calibration tests. Essays and
// raters get true parameters drawn from the configured distributions, ratings
// are sampled from the two-facet model, and the truth is returned alongside
// the tensor so estimates can be checked against it.

struct NormalDist {
    double mean = 0.0;
    double sd = 1.0;
};

struct SynthSpec {
    int n_essays = 100;
    int n_raters = 15;
    int max_category = 20;          // K for analytic aspects
    NormalDist theta_dist{0.0, 1.0};
    NormalDist lambda_dist{0.0, 0.5};
    std::vector<double> tau;        // analytic step vector; empty = all zero
    int noise_raters = 0;           // this many raters ignore the model
    double halo_weight = 0.0;       // mix of a shared trait into every aspect
    std::uint64_t seed = 1;
    std::vector<Aspect> aspects{kAllAspects.begin(), kAllAspects.end()};

    void validate() const {
        if (n_essays < 2) throw DomainError("synth: need at least 2 essays");
        if (n_raters < 1) throw DomainError("synth: need at least 1 rater");
        if (max_category < 1) throw DomainError("synth: max_category must be >= 1");
        if (theta_dist.sd < 0 || lambda_dist.sd < 0)
            throw DomainError("synth: negative sd");
        if (!tau.empty() && tau.size() != static_cast<std::size_t>(max_category))
            throw DomainError("synth: tau must have max_category entries");
        if (noise_raters < 0 || noise_raters > n_raters)
            throw DomainError("synth: noise_raters outside [0, n_raters]");
        if (halo_weight < 0.0 || halo_weight > 1.0)
            throw DomainError("synth: halo_weight outside [0, 1]");
        if (aspects.empty()) throw DomainError("synth: no aspects");
    }
};

struct SynthTruth {
    std::vector<std::string> essays;
    std::vector<std::string> raters;
    std::vector<std::string> noise_rater_ids;
    std::map<Aspect, std::vector<double>> theta;         // per essay
    std::map<Aspect, std::vector<double>> lambda;        // per rater; NaN = noise
    std::map<Aspect, std::vector<double>> tau;
    std::map<Aspect, std::vector<double>> expected_fair; // reporting scale
};

struct SynthResult {
    RatingTensor tensor;
    SynthTruth truth;
};

namespace detail {

inline std::string padded_id(const char* stem, int i, int width) {
    std::ostringstream ss;
    ss << stem << "_";
    std::string digits = std::to_string(i + 1);
    for (int p = static_cast<int>(digits.size()); p < width; ++p) ss << '0';
    ss << digits;
    return ss.str();
}

// Re-center a step vector to sum zero.
inline void center(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

// Resample the analytic step vector onto `k` steps by linear interpolation.
inline std::vector<double> resample_steps(const std::vector<double>& tau,
                                          std::size_t k) {
    std::vector<double> out(k, 0.0);
    if (tau.empty() || k == 0) return out;
    if (tau.size() == 1) {
        out.assign(k, tau[0]);
    } else {
        for (std::size_t i = 0; i < k; ++i) {
            double pos = static_cast<double>(i) *
                         static_cast<double>(tau.size() - 1) /
                         static_cast<double>(std::max<std::size_t>(k - 1, 1));
            std::size_t lo = static_cast<std::size_t>(pos);
            std::size_t hi = std::min(lo + 1, tau.size() - 1);
            double f = pos - static_cast<double>(lo);
            out[i] = tau[lo] + f * (tau[hi] - tau[lo]);
        }
    }
    center(out);
    return out;
}

} // namespace detail

inline SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    CounterRng rng(spec.seed);

    std::size_t N = static_cast<std::size_t>(spec.n_essays);
    std::size_t R = static_cast<std::size_t>(spec.n_raters);
    std::size_t n_conform = R - static_cast<std::size_t>(spec.noise_raters);

    SynthResult out;
    SynthTruth& truth = out.truth;
    for (std::size_t n = 0; n < N; ++n)
        truth.essays.push_back(detail::padded_id("essay", static_cast<int>(n), 4));
    for (std::size_t r = 0; r < R; ++r)
        truth.raters.push_back(detail::padded_id("rater", static_cast<int>(r), 3));
    for (std::size_t r = n_conform; r < R; ++r)
        truth.noise_rater_ids.push_back(truth.raters[r]);

    // Shared trait for the halo mix.
    CounterRng halo_stream = rng.substream(1);
    std::vector<double> theta_shared(N);
    for (std::size_t n = 0; n < N; ++n)
        theta_shared[n] = spec.theta_dist.mean + spec.theta_dist.sd * halo_stream.normal(n);

    std::vector<double> tau_analytic = spec.tau;
    if (tau_analytic.empty())
        tau_analytic.assign(static_cast<std::size_t>(spec.max_category), 0.0);
    detail::center(tau_analytic);

    // Tensor skeleton.
    RatingTensor& t = out.tensor;
    t.essays = truth.essays;
    t.raters = truth.raters;
    for (Aspect a : kAllAspects) {
        bool wanted = false;
        for (Aspect b : spec.aspects) wanted = wanted || a == b;
        if (!wanted) continue;
        t.aspects.push_back(a);
        t.scales.push_back(is_analytic(a) ? CategoryScale::analytic(spec.max_category)
                                          : CategoryScale::holistic());
    }
    t.cells.assign(N * R * t.aspects.size(), RatingTensor::kMissing);

    double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t ja = 0; ja < t.aspects.size(); ++ja) {
        Aspect a = t.aspects[ja];
        std::size_t K = static_cast<std::size_t>(t.scales[ja].max_category);
        std::uint64_t akey = static_cast<std::uint64_t>(ja) + 2;

        std::vector<double> tau = is_analytic(a)
                                      ? tau_analytic
                                      : detail::resample_steps(tau_analytic, K);

        // Per-aspect traits: a halo_weight share of the shared trait plus the
        // complement from an aspect-specific draw. The holistic aspect is the
        // shared trait itself.
        std::vector<double> theta(N);
        CounterRng theta_stream = rng.substream(akey * 1000 + 1);
        for (std::size_t n = 0; n < N; ++n) {
            if (a == Aspect::Holistic) {
                theta[n] = theta_shared[n];
            } else {
                double specific = spec.theta_dist.mean +
                                  spec.theta_dist.sd * theta_stream.normal(n);
                theta[n] = spec.halo_weight * theta_shared[n] +
                           (1.0 - spec.halo_weight) * specific;
            }
        }

        std::vector<double> lambda(R, nan);
        CounterRng lambda_stream = rng.substream(akey * 1000 + 2);
        double lbar = 0.0;
        for (std::size_t r = 0; r < n_conform; ++r) {
            lambda[r] = spec.lambda_dist.mean +
                        spec.lambda_dist.sd * lambda_stream.normal(r);
            lbar += lambda[r];
        }
        lbar /= static_cast<double>(n_conform);
        for (std::size_t r = 0; r < n_conform; ++r) lambda[r] -= lbar;

        // Sample every cell by inverse CDF on a per-(aspect, essay) stream.
        for (std::size_t n = 0; n < N; ++n) {
            CounterRng cell_stream = rng.substream((akey << 32) | n);
            for (std::size_t r = 0; r < R; ++r) {
                double u = cell_stream.uniform(r);
                int k;
                if (r >= n_conform) {
                    k = static_cast<int>(u * static_cast<double>(K + 1));
                    if (k > static_cast<int>(K)) k = static_cast<int>(K);
                } else {
                    auto p = category_probabilities(theta[n], lambda[r], tau);
                    double acc = 0.0;
                    k = static_cast<int>(K);
                    for (std::size_t c = 0; c <= K; ++c) {
                        acc += p[c];
                        if (u < acc) {
                            k = static_cast<int>(c);
                            break;
                        }
                    }
                }
                t.cells[t.cell_offset(n, r, ja)] = static_cast<std::int16_t>(k);
            }
        }

        std::vector<double> fair(N);
        for (std::size_t n = 0; n < N; ++n)
            fair[n] = expected_score(theta[n], 0.0, tau, t.scales[ja]);

        truth.theta[a] = std::move(theta);
        truth.lambda[a] = std::move(lambda);
        truth.tau[a] = std::move(tau);
        truth.expected_fair[a] = std::move(fair);
    }
    return out;
}

// Long-form CSV of the synthetic ratings, written on the reporting scale so
// the file round-trips through the normal ingest path (analytic category k
// becomes k/2; holistic bin k becomes the representative score 10 k).
inline std::string synth_ratings_csv(const RatingTensor& t) {
    std::ostringstream out;
    out << "essay_id,rater_id,aspect,score\n";
    for (std::size_t n = 0; n < t.essays.size(); ++n) {
        for (std::size_t r = 0; r < t.raters.size(); ++r) {
            for (std::size_t ja = 0; ja < t.aspects.size(); ++ja) {
                std::int16_t k = t.category(n, r, ja);
                if (k == RatingTensor::kMissing) continue;
                double score = is_analytic(t.aspects[ja])
                                   ? t.scales[ja].to_score(k)
                                   : 10.0 * static_cast<double>(k);
                out << t.essays[n] << ',' << t.raters[r] << ','
                    << to_string(t.aspects[ja]) << ',';
                double rounded = std::round(score * 2.0) / 2.0;
                if (rounded == static_cast<long>(rounded))
                    out << static_cast<long>(rounded);
                else
                    out << rounded;
                out << '\n';
            }
        }
    }
    return out.str();
}

inline nlohmann::json truth_to_json(const SynthTruth& truth) {
    nlohmann::json j;
    j["essays"] = truth.essays;
    j["raters"] = truth.raters;
    j["noise_raters"] = truth.noise_rater_ids;
    auto dump_map = [](const std::map<Aspect, std::vector<double>>& m) {
        nlohmann::json out;
        for (const auto& [a, v] : m) {
            nlohmann::json col = nlohmann::json::array();
            for (double x : v) {
                if (std::isnan(x)) col.push_back(nullptr);
                else col.push_back(x);
            }
            out[to_string(a)] = std::move(col);
        }
        return out;
    };
    j["theta"] = dump_map(truth.theta);
    j["lambda"] = dump_map(truth.lambda);
    j["tau"] = dump_map(truth.tau);
    j["expected_fair"] = dump_map(truth.expected_fair);
    return j;
}

} // namespace raterlab
