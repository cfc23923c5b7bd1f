#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "raterlab/io.hpp"
#include "raterlab/synth.hpp"

using namespace raterlab;

namespace {

SynthSpec base_spec() {
    SynthSpec spec;
    spec.n_essays = 30;
    spec.n_raters = 6;
    spec.max_category = 6;
    spec.seed = 4;
    spec.aspects = {Aspect::Accuracy, Aspect::Fluency, Aspect::Holistic};
    return spec;
}

} // namespace

TEST_CASE("generation is deterministic in the seed", "[synth]") {
    SynthResult a = generate(base_spec());
    SynthResult b = generate(base_spec());
    CHECK(a.tensor.cells == b.tensor.cells);
    CHECK(a.truth.theta == b.truth.theta);
    SynthSpec other = base_spec();
    other.seed = 5;
    CHECK(generate(other).tensor.cells != a.tensor.cells);
}

TEST_CASE("the tensor is dense with the requested shape", "[synth]") {
    SynthResult sr = generate(base_spec());
    CHECK(sr.tensor.essays.size() == 30);
    CHECK(sr.tensor.raters.size() == 6);
    CHECK(sr.tensor.aspects.size() == 3);
    CHECK(sr.tensor.n_present() == 30 * 6 * 3);
    for (std::int16_t c : sr.tensor.cells) {
        CHECK(c >= 0);
    }
    std::size_t acc = sr.tensor.aspect_index(Aspect::Accuracy);
    std::size_t hol = sr.tensor.aspect_index(Aspect::Holistic);
    CHECK(sr.tensor.scales[acc].max_category == 6);
    CHECK(sr.tensor.scales[hol].max_category == 10);
}

TEST_CASE("truth axes match the tensor and stay centered", "[synth]") {
    SynthResult sr = generate(base_spec());
    CHECK(sr.truth.essays == sr.tensor.essays);
    CHECK(sr.truth.raters == sr.tensor.raters);
    for (Aspect a : sr.tensor.aspects) {
        const auto& lambda = sr.truth.lambda.at(a);
        double sum = 0.0;
        for (double l : lambda) sum += l;
        CHECK(std::fabs(sum) < 1e-9);
        const auto& tau = sr.truth.tau.at(a);
        double tsum = 0.0;
        for (double t : tau) tsum += t;
        CHECK(std::fabs(tsum) < 1e-9);
        CHECK(sr.truth.expected_fair.at(a).size() == sr.tensor.essays.size());
    }
}

TEST_CASE("noise raters are marked and fill the tail", "[synth]") {
    SynthSpec spec = base_spec();
    spec.noise_raters = 2;
    SynthResult sr = generate(spec);
    REQUIRE(sr.truth.noise_rater_ids.size() == 2);
    CHECK(sr.truth.noise_rater_ids[0] == sr.tensor.raters[4]);
    CHECK(sr.truth.noise_rater_ids[1] == sr.tensor.raters[5]);
    for (const auto& id : sr.truth.noise_rater_ids) {
        std::size_t r = sr.tensor.rater_index(id);
        CHECK(std::isnan(sr.truth.lambda.at(Aspect::Accuracy)[r]));
    }
    // Noise ratings still land inside the category range.
    std::size_t acc = sr.tensor.aspect_index(Aspect::Accuracy);
    for (std::size_t e = 0; e < sr.tensor.essays.size(); ++e)
        for (std::size_t r = 4; r < 6; ++r)
            CHECK(sr.tensor.category(e, r, acc) <= 6);
}

TEST_CASE("halo ties aspects to a shared trait", "[synth]") {
    SynthSpec spec = base_spec();
    spec.n_essays = 200;
    auto cor = [&](double w) {
        spec.halo_weight = w;
        SynthResult sr = generate(spec);
        const auto& x = sr.truth.theta.at(Aspect::Accuracy);
        const auto& y = sr.truth.theta.at(Aspect::Fluency);
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
        mx /= static_cast<double>(x.size());
        my /= static_cast<double>(y.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        return sxy / std::sqrt(sxx * syy);
    };
    double none = cor(0.0);
    double heavy = cor(0.9);
    CHECK(std::fabs(none) < 0.25);
    CHECK(heavy > 0.7);
}

TEST_CASE("SynthSpec validates its fields", "[synth]") {
    SynthSpec s = base_spec();
    s.n_essays = 1;
    CHECK_THROWS_AS(generate(s), DomainError);
    s = base_spec();
    s.tau = {0.1, 0.2}; // wrong length for max_category 6
    CHECK_THROWS_AS(generate(s), DomainError);
    s = base_spec();
    s.noise_raters = 7;
    CHECK_THROWS_AS(generate(s), DomainError);
    s = base_spec();
    s.halo_weight = 1.5;
    CHECK_THROWS_AS(generate(s), DomainError);
    s = base_spec();
    s.aspects.clear();
    CHECK_THROWS_AS(generate(s), DomainError);
}

TEST_CASE("synthetic ratings round-trip through ingest", "[synth]") {
    SynthResult sr = generate(base_spec());
    std::string csv = synth_ratings_csv(sr.tensor);

    auto rows = parse_csv(csv);
    REQUIRE(rows.size() == 1 + 30 * 6 * 3);
    CHECK(rows[0] == std::vector<std::string>{"essay_id", "rater_id", "aspect",
                                              "score"});

    std::string path = (std::filesystem::temp_directory_path() /
                        "raterlab_synth_roundtrip.csv")
                           .string();
    write_file(path, csv);
    IngestOptions opt;
    opt.tensor.analytic_max_category = 6;
    RatingTensor back = ingest_ratings(path, opt).tensor;
    std::filesystem::remove(path);

    CHECK(back.essays == sr.tensor.essays);
    CHECK(back.raters == sr.tensor.raters);
    CHECK(back.aspects == sr.tensor.aspects);
    CHECK(back.cells == sr.tensor.cells);
}

TEST_CASE("truth serializes with nulls for noise raters", "[synth]") {
    SynthSpec spec = base_spec();
    spec.noise_raters = 1;
    SynthResult sr = generate(spec);
    nlohmann::json j = truth_to_json(sr.truth);
    CHECK(j.at("essays").size() == 30);
    CHECK(j.at("noise_raters").size() == 1);
    const auto& lam = j.at("lambda").at("Accuracy");
    CHECK(lam.at(5).is_null());
    CHECK(lam.at(0).is_number());
    CHECK(j.at("expected_fair").at("Fluency").size() == 30);
}
