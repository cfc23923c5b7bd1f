#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "raterlab/selection.hpp"
#include "raterlab/synth.hpp"

using namespace raterlab;

namespace {

std::vector<double> ladder(int k, double spread) {
    std::vector<double> tau(static_cast<std::size_t>(k), 0.0);
    if (k > 1)
        for (int m = 0; m < k; ++m)
            tau[static_cast<std::size_t>(m)] = -spread + 2.0 * spread * m / (k - 1);
    return tau;
}

SynthResult corpus(unsigned seed, int noise, std::vector<Aspect> aspects) {
    SynthSpec spec;
    spec.n_essays = 100;
    spec.n_raters = 12;
    spec.max_category = 6;
    spec.noise_raters = noise;
    spec.seed = seed;
    spec.tau = ladder(6, 1.0);
    spec.aspects = std::move(aspects);
    return generate(spec);
}

} // namespace

TEST_CASE("bounds are inclusive", "[selection]") {
    InfitBounds b{0.5, 1.5};
    CHECK(b.pass(0.5));
    CHECK(b.pass(1.5));
    CHECK(b.pass(1.0));
    CHECK_FALSE(b.pass(0.4999));
    CHECK_FALSE(b.pass(1.5001));
}

TEST_CASE("noise raters are screened out", "[selection]") {
    SynthResult sr = corpus(31, 2, {Aspect::Accuracy});
    SelectionResult sel = select_raters(sr.tensor, InfitBounds{0.5, 1.5});
    std::set<std::string> selected(sel.selected.begin(), sel.selected.end());
    for (const auto& id : sr.truth.noise_rater_ids)
        CHECK(selected.count(id) == 0);
    CHECK(sel.selected.size() >= 8);
    CHECK(sel.converged.at(Aspect::Accuracy));
    CHECK(std::is_sorted(sel.selected.begin(), sel.selected.end()));
}

TEST_CASE("selection intersects the per-aspect pass sets", "[selection]") {
    SynthResult sr = corpus(33, 1, {Aspect::Accuracy, Aspect::Fluency});
    SelectionResult sel = select_raters(sr.tensor, InfitBounds{0.5, 1.5});
    REQUIRE(sel.aspects.size() == 2);
    for (const auto& id : sel.selected) {
        for (Aspect a : sel.aspects) {
            const auto& pass = sel.per_aspect_pass.at(a);
            CHECK(std::find(pass.begin(), pass.end(), id) != pass.end());
        }
    }
    // Every rater passing both aspects is selected, none dropped.
    for (const auto& id : sel.per_aspect_pass.at(Aspect::Accuracy)) {
        const auto& other = sel.per_aspect_pass.at(Aspect::Fluency);
        bool both = std::find(other.begin(), other.end(), id) != other.end();
        bool in = std::find(sel.selected.begin(), sel.selected.end(), id) !=
                  sel.selected.end();
        CHECK(both == in);
    }
}

TEST_CASE("infit screening values are recorded per aspect", "[selection]") {
    SynthResult sr = corpus(35, 0, {Aspect::Accuracy});
    SelectionResult sel = select_raters(sr.tensor, InfitBounds{0.5, 1.5});
    const InfitReport& rep = sel.infits.at(Aspect::Accuracy);
    REQUIRE(rep.raters.size() == sr.tensor.raters.size());
    for (std::size_t r = 0; r < rep.raters.size(); ++r) {
        bool passed = sel.bounds.pass(rep.infits[r]);
        const auto& pass = sel.per_aspect_pass.at(Aspect::Accuracy);
        bool listed = std::find(pass.begin(), pass.end(), rep.raters[r]) != pass.end();
        CHECK(passed == listed);
    }
}

TEST_CASE("impossible bounds raise an empty-selection error", "[selection]") {
    SynthResult sr = corpus(37, 0, {Aspect::Accuracy});
    CHECK_THROWS_AS(select_raters(sr.tensor, InfitBounds{0.9999, 1.0}),
                    EmptySelectionError);
}

TEST_CASE("selection needs at least one aspect", "[selection]") {
    SynthResult sr = corpus(39, 0, {Aspect::Accuracy});
    CHECK_THROWS_AS(select_raters(sr.tensor, InfitBounds{0.5, 1.5},
                                  std::vector<Aspect>{}),
                    InsufficientDataError);
}
