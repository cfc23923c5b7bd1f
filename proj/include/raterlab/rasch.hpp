#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raterlab/ratings.hpp"

namespace raterlab {

// Two-facet rating-scale model: an essay of ability theta rated by a rater
// of severity lambda lands in category k with probability proportional to
// exp(k * (theta - lambda) - S_k), where S_k is the cumulative sum of the
// step thresholds tau_1..tau_k (S_0 = 0).

struct FitOptions {
    double tol = 1e-6;          // max absolute parameter change per sweep
    int max_iter = 500;
    double extreme_adjust = 0.3; // inward shift for all-min / all-max totals
    double step_clip = 2.0;      // cap on any single Newton step
    bool strict = false;         // throw NonConvergenceError instead of flagging
};

struct RaschFit {
    Aspect aspect = Aspect::Holistic;
    int max_category = 0;
    std::vector<std::string> essays; // sorted
    std::vector<std::string> raters; // sorted, the fitting subset
    std::vector<double> theta;       // parallel to essays
    std::vector<double> lambda;      // parallel to raters, sum-zero
    std::vector<double> tau;         // tau[m-1] = step m, m = 1..K, sum-zero
    std::vector<int> held_steps;     // steps pinned by interpolation (1-based)
    double lambda_bar = 0.0;         // mean severity of the fitting subset
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;

    double theta_of(const std::string& essay_id) const {
        auto it = std::lower_bound(essays.begin(), essays.end(), essay_id);
        if (it == essays.end() || *it != essay_id)
            throw DomainError("essay not in fit: " + essay_id);
        return theta[static_cast<std::size_t>(it - essays.begin())];
    }

    double lambda_of(const std::string& rater_id) const {
        auto it = std::lower_bound(raters.begin(), raters.end(), rater_id);
        if (it == raters.end() || *it != rater_id)
            throw DomainError("rater not in fit: " + rater_id);
        return lambda[static_cast<std::size_t>(it - raters.begin())];
    }
};

// P(X = k | theta, lambda, tau) for k = 0..K, computed with max-subtraction.
inline std::vector<double> category_probabilities(double theta, double lambda,
                                                  std::span<const double> tau) {
    std::size_t K = tau.size();
    std::vector<double> eta(K + 1);
    double s = 0.0, mx = 0.0;
    eta[0] = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        s += tau[k - 1];
        eta[k] = static_cast<double>(k) * (theta - lambda) - s;
        mx = std::max(mx, eta[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        eta[k] = std::exp(eta[k] - mx);
        z += eta[k];
    }
    for (auto& p : eta) p /= z;
    return eta;
}

// Expected score on the reporting scale: sum_k s_k P(X = k).
inline double expected_score(double theta, double lambda, std::span<const double> tau,
                             const CategoryScale& scale) {
    auto p = category_probabilities(theta, lambda, tau);
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        e += scale.to_score(static_cast<int>(k)) * p[k];
    return e;
}

namespace detail {

// Mean and variance of the category index under the model, plus log Z.
struct CellMoments {
    double mean = 0.0;
    double var = 0.0;
    double logz = 0.0;
};

inline CellMoments cell_moments(double theta, double lambda,
                                std::span<const double> cum_tau) {
    std::size_t K = cum_tau.size(); // cum_tau[m-1] = S_m
    double mx = 0.0;
    double d = theta - lambda;
    for (std::size_t k = 1; k <= K; ++k)
        mx = std::max(mx, static_cast<double>(k) * d - cum_tau[k - 1]);
    double z = std::exp(-mx), m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        double w = std::exp(static_cast<double>(k) * d - cum_tau[k - 1] - mx);
        z += w;
        m1 += static_cast<double>(k) * w;
        m2 += static_cast<double>(k * k) * w;
    }
    CellMoments out;
    out.mean = m1 / z;
    out.var = m2 / z - out.mean * out.mean;
    out.logz = std::log(z) + mx;
    return out;
}

// Survival probabilities sf[m] = P(X >= m), m = 1..K (index 0 unused slot
// dropped: sf has K entries for m = 1..K).
inline void cell_survival(double theta, double lambda, std::span<const double> cum_tau,
                          std::vector<double>& sf) {
    std::size_t K = cum_tau.size();
    double mx = 0.0;
    double d = theta - lambda;
    for (std::size_t k = 1; k <= K; ++k)
        mx = std::max(mx, static_cast<double>(k) * d - cum_tau[k - 1]);
    sf.assign(K, 0.0);
    double z = std::exp(-mx);
    for (std::size_t k = 1; k <= K; ++k) {
        double w = std::exp(static_cast<double>(k) * d - cum_tau[k - 1] - mx);
        z += w;
        sf[k - 1] = w; // temporarily P-numerator for exactly k
    }
    // Suffix-sum to survival, then normalize.
    for (std::size_t k = K - 1; k-- > 0;) sf[k] += sf[k + 1];
    for (auto& v : sf) v /= z;
}

// Solve A x = b for symmetric positive definite A (in-place Cholesky).
// Returns false when the factorization breaks down.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b,
                           std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0) return false;
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) { // forward
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) { // backward
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return true;
}

} // namespace detail

// Joint maximum-likelihood fit by block coordinate ascent. The joint
// log-likelihood is concave in (theta, lambda, tau), so Newton steps with a
// backtracking line search per block ascend monotonically: scalar Newton for
// each theta_n and lambda_r, a full K x K Newton step for the coupled tau
// block. Identification: lambda and tau are re-centered to sum zero after
// every sweep, with the shift absorbed into theta so cell likelihoods are
// unchanged.
//
// Essays and raters whose raw total sits at the floor or ceiling have no
// finite maximizer, and nudging their totals inward while keeping them in
// the joint problem leaves the block score equations mutually inconsistent
// (the essay and rater equations then demand different grand totals, which
// shows up as a small permanent oscillation). They are therefore excluded
// from the joint fit -- iteratively, since dropping a rater can push an
// essay to an extreme over the remaining cells -- and located afterwards by
// scalar likelihood solves against the fitted interior, with their totals
// nudged extreme_adjust category points inward to stay finite. Steps whose
// category has no observations among the jointly fitted cells are held at
// the linear interpolation of their free neighbours and excluded from the
// Newton system.
inline RaschFit fit_two_facet(const RatingTensor& tensor, Aspect aspect,
                              const std::vector<std::string>& rater_subset = {},
                              const FitOptions& opt = {}) {
    std::size_t ai = tensor.aspect_index(aspect);
    int K = tensor.scales[ai].max_category;
    std::size_t Ku = static_cast<std::size_t>(K);

    RaschFit fit;
    fit.aspect = aspect;
    fit.max_category = K;
    fit.essays = tensor.essays;
    fit.raters = rater_subset.empty() ? tensor.raters : rater_subset;
    std::sort(fit.raters.begin(), fit.raters.end());
    std::size_t N = fit.essays.size(), R = fit.raters.size();

    std::vector<std::size_t> rcols(R);
    for (std::size_t r = 0; r < R; ++r) rcols[r] = tensor.rater_index(fit.raters[r]);

    // Observed cells, grouped per essay and per rater.
    struct Obs { std::uint32_t other; std::int16_t k; };
    std::vector<std::vector<Obs>> by_essay(N), by_rater(R);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t r = 0; r < R; ++r) {
            std::int16_t k = tensor.category(n, rcols[r], ai);
            if (k == RatingTensor::kMissing) continue;
            by_essay[n].push_back({static_cast<std::uint32_t>(r), k});
            by_rater[r].push_back({static_cast<std::uint32_t>(n), k});
        }
    }
    for (std::size_t n = 0; n < N; ++n)
        if (by_essay[n].empty())
            throw StructuralError("essay " + fit.essays[n] +
                                  " has no ratings from the fitting subset");
    for (std::size_t r = 0; r < R; ++r)
        if (by_rater[r].empty())
            throw StructuralError("rater " + fit.raters[r] +
                                  " has no ratings on aspect " +
                                  std::string(to_string(aspect)));

    // Split off extreme essays and raters until the remainder is interior.
    std::vector<char> e_join(N, 1), r_join(R, 1);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t n = 0; n < N; ++n) {
            if (!e_join[n]) continue;
            double tot = 0.0;
            std::size_t m = 0;
            for (const auto& o : by_essay[n])
                if (r_join[o.other]) { tot += o.k; ++m; }
            if (m == 0 || tot <= 0.0 || tot >= static_cast<double>(K) * m) {
                e_join[n] = 0;
                changed = true;
            }
        }
        for (std::size_t r = 0; r < R; ++r) {
            if (!r_join[r]) continue;
            double tot = 0.0;
            std::size_t m = 0;
            for (const auto& o : by_rater[r])
                if (e_join[o.other]) { tot += o.k; ++m; }
            if (m == 0 || tot <= 0.0 || tot >= static_cast<double>(K) * m) {
                r_join[r] = 0;
                changed = true;
            }
        }
    }
    if (std::find(e_join.begin(), e_join.end(), 1) == e_join.end())
        throw InsufficientDataError(
            "no essays left after removing extreme profiles (aspect " +
            std::string(to_string(aspect)) + ")");

    // Joint cells only, with raw totals (interior by construction).
    std::vector<std::vector<Obs>> jby_essay(N), jby_rater(R);
    std::vector<double> t_total(N, 0.0), u_total(R, 0.0);
    std::vector<std::size_t> cnt(Ku + 1, 0);
    for (std::size_t n = 0; n < N; ++n) {
        if (!e_join[n]) continue;
        for (const auto& o : by_essay[n]) {
            if (!r_join[o.other]) continue;
            jby_essay[n].push_back(o);
            jby_rater[o.other].push_back({static_cast<std::uint32_t>(n), o.k});
            t_total[n] += o.k;
            u_total[o.other] += o.k;
            ++cnt[static_cast<std::size_t>(o.k)];
        }
    }

    // cnt_ge[m-1] = number of joint observations with category >= m.
    std::vector<double> cnt_ge(Ku, 0.0);
    {
        double acc = 0.0;
        for (std::size_t m = Ku; m >= 1; --m) {
            acc += static_cast<double>(cnt[m]);
            cnt_ge[m - 1] = acc;
        }
    }

    std::vector<bool> held(Ku + 1, false); // 1-based on steps
    for (std::size_t k = 0; k <= Ku; ++k)
        if (cnt[k] == 0) held[std::max<std::size_t>(k, 1)] = true;
    std::vector<std::size_t> free_steps;
    for (std::size_t m = 1; m <= Ku; ++m)
        if (!held[m]) free_steps.push_back(m);
    if (free_steps.empty())
        throw StructuralError("no identifiable step threshold for aspect " +
                              std::string(to_string(aspect)));
    for (std::size_t m = 1; m <= Ku; ++m)
        if (held[m]) fit.held_steps.push_back(static_cast<int>(m));

    fit.theta.assign(N, 0.0);
    fit.lambda.assign(R, 0.0);
    fit.tau.assign(Ku, 0.0);

    std::vector<double> cum(Ku, 0.0); // S_m
    auto refresh_cum = [&] {
        double s = 0.0;
        for (std::size_t m = 0; m < Ku; ++m) { s += fit.tau[m]; cum[m] = s; }
    };

    // Held steps are pinned to the linear interpolation of their nearest
    // free neighbours, i.e. the full step vector is a fixed linear map of the
    // free steps: tau = M tau_free. Rows hold (free index, weight) pairs.
    std::vector<std::vector<std::pair<std::size_t, double>>> interp(Ku);
    {
        std::vector<long> free_pos(Ku + 1, -1);
        for (std::size_t j = 0; j < free_steps.size(); ++j)
            free_pos[free_steps[j]] = static_cast<long>(j);
        for (std::size_t m = 1; m <= Ku; ++m) {
            if (!held[m]) {
                interp[m - 1] = {{static_cast<std::size_t>(free_pos[m]), 1.0}};
                continue;
            }
            long left = static_cast<long>(m) - 1;
            while (left >= 1 && held[static_cast<std::size_t>(left)]) --left;
            std::size_t right = m + 1;
            while (right <= Ku && held[right]) ++right;
            bool has_left = left >= 1, has_right = right <= Ku;
            if (has_left && has_right) {
                double f = static_cast<double>(m - static_cast<std::size_t>(left)) /
                           static_cast<double>(right - static_cast<std::size_t>(left));
                interp[m - 1] = {{static_cast<std::size_t>(free_pos[left]), 1.0 - f},
                                 {static_cast<std::size_t>(free_pos[right]), f}};
            } else if (has_left) {
                interp[m - 1] = {{static_cast<std::size_t>(free_pos[left]), 1.0}};
            } else {
                interp[m - 1] = {{static_cast<std::size_t>(free_pos[right]), 1.0}};
            }
        }
    }

    auto essay_objective = [&](std::size_t n, double th) {
        double f = t_total[n] * th;
        for (const auto& o : jby_essay[n])
            f -= detail::cell_moments(th, fit.lambda[o.other], cum).logz;
        return f;
    };
    auto rater_objective = [&](std::size_t r, double lm) {
        double f = -u_total[r] * lm;
        for (const auto& o : jby_rater[r])
            f -= detail::cell_moments(fit.theta[o.other], lm, cum).logz;
        return f;
    };
    auto tau_objective = [&] {
        refresh_cum();
        double f = 0.0;
        for (std::size_t m = 0; m < Ku; ++m) f -= fit.tau[m] * cnt_ge[m];
        for (std::size_t n = 0; n < N; ++n)
            for (const auto& o : jby_essay[n])
                f -= detail::cell_moments(fit.theta[n], fit.lambda[o.other], cum).logz;
        return f;
    };

    auto clip = [&](double v) {
        return std::clamp(v, -opt.step_clip, opt.step_clip);
    };

    std::vector<double> sf;
    std::size_t F = free_steps.size();
    std::vector<double> grad(F), hess(F * F), delta(F);
    std::vector<double> gfull(Ku), hfull(Ku * Ku), dfull(Ku);

    double move = 0.0;
    int it = 0;
    for (it = 0; it < opt.max_iter; ++it) {
        move = 0.0;
        refresh_cum();

        // Theta block: independent scalar Newton steps with backtracking.
        for (std::size_t n = 0; n < N; ++n) {
            if (!e_join[n]) continue;
            double g = t_total[n], h = 0.0;
            for (const auto& o : jby_essay[n]) {
                auto mo = detail::cell_moments(fit.theta[n], fit.lambda[o.other], cum);
                g -= mo.mean;
                h += mo.var;
            }
            if (h <= 0.0) continue;
            double step = clip(g / h);
            double f0 = essay_objective(n, fit.theta[n]);
            for (int bt = 0; bt < 40; ++bt) {
                if (essay_objective(n, fit.theta[n] + step) >= f0 - 1e-12) break;
                step *= 0.5;
            }
            fit.theta[n] += step;
            move = std::max(move, std::fabs(step));
        }

        // Lambda block.
        for (std::size_t r = 0; r < R; ++r) {
            if (!r_join[r]) continue;
            double g = -u_total[r], h = 0.0;
            for (const auto& o : jby_rater[r]) {
                auto mo = detail::cell_moments(fit.theta[o.other], fit.lambda[r], cum);
                g += mo.mean;
                h += mo.var;
            }
            if (h <= 0.0) continue;
            double step = clip(g / h);
            double f0 = rater_objective(r, fit.lambda[r]);
            for (int bt = 0; bt < 40; ++bt) {
                if (rater_objective(r, fit.lambda[r] + step) >= f0 - 1e-12) break;
                step *= 0.5;
            }
            fit.lambda[r] += step;
            move = std::max(move, std::fabs(step));
        }

        // Tau block: one Newton step in the free-step coordinates. In the
        // full step space the gradient is g_m = sum sf_m - cnt_ge[m] and the
        // negated Hessian entry for steps (m, m') is the summed covariance
        // of the survival indicators 1{X >= m}, 1{X >= m'} over cells; both
        // are mapped through the interpolation so held steps move with their
        // neighbours instead of being treated as constants.
        refresh_cum();
        std::fill(gfull.begin(), gfull.end(), 0.0);
        std::fill(hfull.begin(), hfull.end(), 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            for (const auto& o : jby_essay[n]) {
                detail::cell_survival(fit.theta[n], fit.lambda[o.other], cum, sf);
                for (std::size_t a = 0; a < Ku; ++a) {
                    double sa = sf[a];
                    gfull[a] += sa;
                    for (std::size_t b = 0; b <= a; ++b)
                        hfull[a * Ku + b] += sa - sa * sf[b];
                }
            }
        }
        for (std::size_t a = 0; a < Ku; ++a) gfull[a] -= cnt_ge[a];
        // Reduce: grad = M^T g, hess = M^T (-H) M; solve, expand, line-search.
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t a = 0; a < Ku; ++a)
            for (const auto& [ja, wa] : interp[a]) grad[ja] += wa * gfull[a];
        for (std::size_t a = 0; a < Ku; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                double h = hfull[a * Ku + b];
                for (const auto& [ja, wa] : interp[a])
                    for (const auto& [jb, wb] : interp[b]) {
                        hess[ja * F + jb] += wa * wb * h;
                        if (a != b) hess[jb * F + ja] += wa * wb * h;
                    }
            }
        }
        for (std::size_t a = 0; a < F; ++a) {
            for (std::size_t b = a + 1; b < F; ++b) hess[a * F + b] = hess[b * F + a];
            hess[a * F + a] += 1e-10; // ridge against exact singularity
        }
        delta.assign(grad.begin(), grad.end());
        if (detail::cholesky_solve(hess, delta, F)) {
            for (std::size_t m = 0; m < Ku; ++m) {
                dfull[m] = 0.0;
                for (const auto& [j, w] : interp[m]) dfull[m] += w * delta[j];
            }
            double norm = 0.0;
            for (double d : dfull) norm = std::max(norm, std::fabs(d));
            if (norm > opt.step_clip)
                for (auto& d : dfull) d *= opt.step_clip / norm;
            double f0 = tau_objective();
            std::vector<double> tau0 = fit.tau;
            double scale = 1.0;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t m = 0; m < Ku; ++m)
                    fit.tau[m] = tau0[m] + scale * dfull[m];
                if (tau_objective() >= f0 - 1e-12) break;
                scale *= 0.5;
            }
            for (std::size_t m = 0; m < Ku; ++m)
                move = std::max(move, std::fabs(scale * dfull[m]));
        }

        // Re-center lambda and tau over the jointly fitted raters; absorb
        // both shifts into theta so the likelihood is untouched.
        double c = 0.0;
        std::size_t rj = 0;
        for (std::size_t r = 0; r < R; ++r)
            if (r_join[r]) { c += fit.lambda[r]; ++rj; }
        c /= static_cast<double>(rj);
        for (std::size_t r = 0; r < R; ++r)
            if (r_join[r]) fit.lambda[r] -= c;
        double d = std::accumulate(fit.tau.begin(), fit.tau.end(), 0.0) /
                   static_cast<double>(Ku);
        for (auto& t : fit.tau) t -= d;
        for (std::size_t n = 0; n < N; ++n)
            if (e_join[n]) fit.theta[n] -= c + d;

        if (move < opt.tol) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.iterations = it;
    if (!fit.converged && opt.strict)
        throw NonConvergenceError("fit did not converge in " +
                                  std::to_string(opt.max_iter) + " sweeps (aspect " +
                                  to_string(aspect) + ")");
    refresh_cum();

    // Locate the trimmed parameters by scalar likelihood solves against the
    // fitted interior, with extreme totals nudged inward to stay finite.
    auto nudged = [&](double tot, std::size_t m) {
        if (tot <= 0.0) return tot + opt.extreme_adjust;
        if (tot >= static_cast<double>(K) * m)
            return tot - opt.extreme_adjust;
        return tot;
    };
    auto posthoc_solve = [&](bool is_theta, double tot,
                             const std::vector<double>& others) {
        double x = 0.0;
        auto objective = [&](double v) {
            double f = is_theta ? tot * v : -tot * v;
            for (double o : others)
                f -= detail::cell_moments(is_theta ? v : o, is_theta ? o : v, cum).logz;
            return f;
        };
        for (int itn = 0; itn < 200; ++itn) {
            double g = is_theta ? tot : -tot, h = 0.0;
            for (double o : others) {
                auto mo = detail::cell_moments(is_theta ? x : o, is_theta ? o : x, cum);
                g += is_theta ? -mo.mean : mo.mean;
                h += mo.var;
            }
            if (h <= 0.0) break;
            double step = clip(g / h);
            double f0 = objective(x);
            for (int bt = 0; bt < 40; ++bt) {
                if (objective(x + step) >= f0 - 1e-12) break;
                step *= 0.5;
            }
            x += step;
            if (std::fabs(step) < opt.tol) break;
        }
        return x;
    };

    // Raters first, over cells on jointly fitted essays (theta is known
    // there); a rater with none keeps lambda 0.
    for (std::size_t r = 0; r < R; ++r) {
        if (r_join[r]) continue;
        double tot = 0.0;
        std::vector<double> others;
        for (const auto& o : by_rater[r]) {
            if (!e_join[o.other]) continue;
            tot += o.k;
            others.push_back(fit.theta[o.other]);
        }
        if (!others.empty())
            fit.lambda[r] = posthoc_solve(false, nudged(tot, others.size()), others);
    }
    // Then essays, over all of their cells (every lambda is known now).
    for (std::size_t n = 0; n < N; ++n) {
        if (e_join[n]) continue;
        double tot = 0.0;
        std::vector<double> others;
        for (const auto& o : by_essay[n]) {
            tot += o.k;
            others.push_back(fit.lambda[o.other]);
        }
        fit.theta[n] = posthoc_solve(true, nudged(tot, others.size()), others);
    }

    // Final re-centering over every rater, so the mean severity is zero by
    // construction; theta shifts along to keep theta - lambda fixed.
    double c = std::accumulate(fit.lambda.begin(), fit.lambda.end(), 0.0) /
               static_cast<double>(R);
    for (auto& l : fit.lambda) l -= c;
    for (auto& th : fit.theta) th -= c;
    fit.lambda_bar = std::accumulate(fit.lambda.begin(), fit.lambda.end(), 0.0) /
                     static_cast<double>(R);

    fit.loglik = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        for (const auto& o : by_essay[n]) {
            double s = o.k > 0 ? cum[static_cast<std::size_t>(o.k) - 1] : 0.0;
            auto mo = detail::cell_moments(fit.theta[n], fit.lambda[o.other], cum);
            fit.loglik += static_cast<double>(o.k) * (fit.theta[n] - fit.lambda[o.other]) -
                          s - mo.logz;
        }
    }
    return fit;
}

// Information-weighted mean-square fit statistic for one rater: the sum of
// squared residuals over the rater's cells divided by the summed model
// variance. Values near 1 indicate agreement with the model; high values
// flag noise, low values over-predictability.
inline double infit(const RatingTensor& tensor, const RaschFit& fit,
                    const std::string& rater_id) {
    std::size_t ai = tensor.aspect_index(fit.aspect);
    std::size_t rcol = tensor.rater_index(rater_id);
    double lambda = fit.lambda_of(rater_id);

    std::vector<double> cum(fit.tau.size());
    double s = 0.0;
    for (std::size_t m = 0; m < fit.tau.size(); ++m) { s += fit.tau[m]; cum[m] = s; }

    double sq = 0.0, var = 0.0;
    for (std::size_t n = 0; n < fit.essays.size(); ++n) {
        std::int16_t k = tensor.category(tensor.essay_index(fit.essays[n]), rcol, ai);
        if (k == RatingTensor::kMissing) continue;
        auto mo = detail::cell_moments(fit.theta[n], lambda, cum);
        double resid = static_cast<double>(k) - mo.mean;
        sq += resid * resid;
        var += mo.var;
    }
    if (var <= 0.0)
        throw DegenerateError("zero total model variance for rater " + rater_id);
    return sq / var;
}

struct InfitReport {
    Aspect aspect = Aspect::Holistic;
    std::vector<std::string> raters;
    std::vector<double> infits;
};

inline InfitReport infit_report(const RatingTensor& tensor, const RaschFit& fit) {
    InfitReport rep;
    rep.aspect = fit.aspect;
    rep.raters = fit.raters;
    rep.infits.reserve(fit.raters.size());
    for (const auto& r : fit.raters) rep.infits.push_back(infit(tensor, fit, r));
    return rep;
}

// Fair scores: each essay scored by the model against the average severity
// of the fitting panel, removing rater-assignment luck.
struct FairScores {
    Aspect aspect = Aspect::Holistic;
    CategoryScale scale;
    std::vector<std::string> essays; // sorted
    std::vector<double> expected;    // reporting scale
    std::vector<std::vector<double>> category_probs;

    double expected_of(const std::string& essay_id) const {
        auto it = std::lower_bound(essays.begin(), essays.end(), essay_id);
        if (it == essays.end() || *it != essay_id)
            throw DomainError("essay not in fair scores: " + essay_id);
        return expected[static_cast<std::size_t>(it - essays.begin())];
    }
};

inline FairScores fair_scores(const RaschFit& fit, const CategoryScale& scale) {
    FairScores fs;
    fs.aspect = fit.aspect;
    fs.scale = scale;
    fs.essays = fit.essays;
    fs.expected.reserve(fit.essays.size());
    fs.category_probs.reserve(fit.essays.size());
    for (double th : fit.theta) {
        auto p = category_probabilities(th, fit.lambda_bar, fit.tau);
        double e = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k)
            e += scale.to_score(static_cast<int>(k)) * p[k];
        fs.expected.push_back(e);
        fs.category_probs.push_back(std::move(p));
    }
    return fs;
}

inline double fair_average(const RaschFit& fit, const CategoryScale& scale,
                           const std::string& essay_id) {
    return expected_score(fit.theta_of(essay_id), fit.lambda_bar, fit.tau, scale);
}

} // namespace raterlab
