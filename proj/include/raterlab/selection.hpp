#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "raterlab/rasch.hpp"

namespace raterlab {

// Acceptance band for the infit statistic during rater screening.
struct InfitBounds {
    double lo = 0.5;
    double hi = 1.5;

    bool pass(double v) const { return v >= lo && v <= hi; }
};

struct SelectionResult {
    InfitBounds bounds;
    std::vector<Aspect> aspects;
    std::map<Aspect, InfitReport> infits;                    // screening fits
    std::map<Aspect, std::vector<std::string>> per_aspect_pass;
    std::vector<std::string> selected; // intersection over aspects, sorted
    std::map<Aspect, bool> converged;  // screening fit convergence per aspect
};

// Screen raters aspect by aspect: fit the model on all raters, compute every
// rater's infit, keep raters inside the bounds, and intersect the per-aspect
// pass sets. The intersection being empty is an error that reports the
// per-aspect pass counts so the caller can relax the bounds.
inline SelectionResult select_raters(const RatingTensor& tensor, InfitBounds bounds,
                                     const std::vector<Aspect>& aspects,
                                     const FitOptions& fit_options = {}) {
    if (aspects.empty())
        throw InsufficientDataError("rater selection needs at least one aspect");

    SelectionResult result;
    result.bounds = bounds;
    result.aspects = aspects;

    std::map<std::string, std::size_t> pass_count;
    for (Aspect a : aspects) {
        RaschFit fit = fit_two_facet(tensor, a, {}, fit_options);
        result.converged[a] = fit.converged;
        InfitReport rep = infit_report(tensor, fit);
        std::vector<std::string> pass;
        for (std::size_t i = 0; i < rep.raters.size(); ++i)
            if (bounds.pass(rep.infits[i])) {
                pass.push_back(rep.raters[i]);
                ++pass_count[rep.raters[i]];
            }
        result.per_aspect_pass[a] = std::move(pass);
        result.infits[a] = std::move(rep);
    }

    for (const auto& [rater, cnt] : pass_count)
        if (cnt == aspects.size()) result.selected.push_back(rater);

    if (result.selected.empty()) {
        std::ostringstream msg;
        msg << "no rater passed infit bounds [" << bounds.lo << ", " << bounds.hi
            << "] on every aspect; per-aspect pass counts:";
        for (Aspect a : aspects)
            msg << " " << to_string(a) << "="
                << result.per_aspect_pass[a].size();
        throw EmptySelectionError(msg.str());
    }
    return result;
}

inline SelectionResult select_raters(const RatingTensor& tensor,
                                     InfitBounds bounds = {},
                                     const FitOptions& fit_options = {}) {
    std::vector<Aspect> aspects(tensor.aspects.begin(), tensor.aspects.end());
    return select_raters(tensor, bounds, aspects, fit_options);
}

} // namespace raterlab
