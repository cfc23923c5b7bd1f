#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "raterlab/pipeline.hpp"
#include "raterlab/synth.hpp"
#include "raterlab/writers.hpp"

using namespace raterlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("raterlab_pipe_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& body) const {
        fs::path p = path / name;
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        out << body;
        return p.string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(RATERLAB_CLI_PATH) + " " + args +
                      " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

SynthResult small_corpus(std::uint64_t seed, std::vector<Aspect> aspects,
                         int essays = 50, int raters = 8, int noise = 0) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_essays = essays;
    spec.n_raters = raters;
    spec.noise_raters = noise;
    spec.max_category = 4;
    spec.tau = {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
    spec.aspects = std::move(aspects);
    return generate(spec);
}

} // namespace

TEST_CASE("config: relative paths resolve against the config file", "[pipeline]") {
    TempDir tmp;
    std::string cfg_path = tmp.file("nested/config.json", R"({
        "ratings": "data/r.csv",
        "output_dir": "out",
        "fair_scores": "../fair.csv",
        "selection": "sel.json",
        "essays": "essays.csv",
        "cache": "cache.jsonl",
        "predictions": [
            {"path": "preds/model_a.csv"},
            {"path": "/abs/model_b.csv", "source_id": "b"}
        ]
    })");
    PipelineConfig c = load_config(cfg_path);
    fs::path base = fs::path(cfg_path).parent_path();

    CHECK(c.ratings == (base / "data/r.csv").lexically_normal().string());
    CHECK(c.output_dir == (base / "out").lexically_normal().string());
    CHECK(c.fair_scores_path ==
          (base / "../fair.csv").lexically_normal().string());
    CHECK(c.selection_path == (base / "sel.json").lexically_normal().string());
    CHECK(c.essays_path == (base / "essays.csv").lexically_normal().string());
    CHECK(c.cache_path == (base / "cache.jsonl").lexically_normal().string());

    REQUIRE(c.predictions.size() == 2);
    CHECK(c.predictions[0].path ==
          (base / "preds/model_a.csv").lexically_normal().string());
    CHECK(c.predictions[0].source_id == "model_a"); // default: file stem
    CHECK(c.predictions[1].path == "/abs/model_b.csv"); // absolute untouched
    CHECK(c.predictions[1].source_id == "b");
}

TEST_CASE("config: defaults", "[pipeline]") {
    TempDir tmp;
    PipelineConfig c = load_config(tmp.file("c.json", R"({"ratings": "r.csv"})"));

    CHECK(c.delimiter == ',');
    CHECK(c.apply_recodes);
    CHECK(c.analytic_max_category == 20);
    CHECK(c.aspects.empty());
    CHECK(c.infit_bounds.lo == 0.5);
    CHECK(c.infit_bounds.hi == 1.5);
    CHECK(c.selected_raters.empty());
    CHECK(c.alpha_metric == AlphaMetric::Ordinal);
    CHECK(c.pr_target == 0.10);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(c.ensemble_sizes.empty());
    CHECK(c.operational_rater);
    // Unset artifact paths fall back under the output directory.
    CHECK(c.fair_scores_or_default() == c.output_dir + "/fair_scores.csv");
    CHECK(c.selection_or_default() == c.output_dir + "/selection.json");
}

TEST_CASE("config: explicit fields override defaults", "[pipeline]") {
    TempDir tmp;
    std::string path = tmp.file("c.json", R"({
        "ratings": "r.csv",
        "delimiter": ";",
        "apply_recodes": false,
        "analytic_max_category": 6,
        "aspects": ["Accuracy", "Holistic"],
        "schema": {"essay_id": "sample", "score": "points"},
        "holistic_bin_edges": [25, 75],
        "alpha_metric": "interval",
        "pr_target": 0.2,
        "seeds": [7, 8],
        "ensemble_sizes": [2, 3],
        "operational_rater": false,
        "selected_raters": ["r2", "r1"],
        "fit": {"tol": 0.001, "max_iter": 50},
        "endpoint": {"base_url": "http://h:1/v1", "model": "m",
                     "api_key_env": "MY_KEY"},
        "llm_aspects": ["Fluency"]
    })");
    PipelineConfig c = load_config(path);

    CHECK(c.delimiter == ';');
    CHECK_FALSE(c.apply_recodes);
    CHECK(c.analytic_max_category == 6);
    CHECK(c.aspects == std::vector<Aspect>{Aspect::Accuracy, Aspect::Holistic});
    CHECK(c.schema.essay_id == "sample");
    CHECK(c.schema.score == "points");
    CHECK(c.schema.rater_id == "rater_id"); // untouched field keeps default
    CHECK(c.holistic_bin_edges == std::vector<double>{25, 75});
    CHECK(c.alpha_metric == AlphaMetric::Interval);
    CHECK(c.pr_target == 0.2);
    CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(c.ensemble_sizes == std::vector<int>{2, 3});
    CHECK_FALSE(c.operational_rater);
    CHECK(c.selected_raters == std::vector<std::string>{"r2", "r1"});
    CHECK(c.fit.tol == 0.001);
    CHECK(c.fit.max_iter == 50);
    CHECK(c.endpoint.base_url == "http://h:1/v1");
    CHECK(c.endpoint.api_key_env == "MY_KEY");
    CHECK(c.llm_aspects == std::vector<Aspect>{Aspect::Fluency});
}

TEST_CASE("config: infit bounds accept array and object forms", "[pipeline]") {
    TempDir tmp;
    PipelineConfig a = load_config(tmp.file(
        "a.json", R"({"ratings": "r.csv", "infit_bounds": [0.6, 1.4]})"));
    CHECK(a.infit_bounds.lo == 0.6);
    CHECK(a.infit_bounds.hi == 1.4);

    PipelineConfig b = load_config(tmp.file(
        "b.json", R"({"ratings": "r.csv", "infit_bounds": {"lo": 0.7}})"));
    CHECK(b.infit_bounds.lo == 0.7);
    CHECK(b.infit_bounds.hi == 1.5); // unspecified side keeps the default
}

TEST_CASE("config: malformed input is rejected", "[pipeline]") {
    TempDir tmp;
    CHECK_THROWS_AS(load_config(tmp.file("bad.json", "{not json")), ParseError);
    CHECK_THROWS_AS(load_config(tmp.file("arr.json", "[1,2]")), ParseError);
    CHECK_THROWS_AS(load_config(tmp.sub("missing.json")), std::exception);
    CHECK_THROWS_AS(
        load_config(tmp.file("d.json", R"({"ratings":"r","delimiter":";;"})")),
        ParseError);
    CHECK_THROWS_AS(
        load_config(tmp.file("ib.json", R"({"ratings":"r","infit_bounds":3})")),
        ParseError);
    CHECK_THROWS_AS(
        load_config(tmp.file("pr.json", R"({"ratings":"r","pr_target":1.0})")),
        DomainError);
    CHECK_THROWS_AS(
        load_config(tmp.file("asp.json", R"({"ratings":"r","aspects":["Accurac"]})")),
        UnknownAspectError);
    CHECK_THROWS_AS(
        load_config(tmp.file("sd.json", R"({"ratings":"r","seeds":"five"})")),
        ParseError);
}

TEST_CASE("config: ingest honors schema, delimiter and scale settings",
          "[pipeline]") {
    TempDir tmp;
    std::string csv = tmp.file("scored.csv",
                               "sample;judge;dimension;points\n"
                               "e1;r1;Accuracy;1.5\n"
                               "e1;r2;Accuracy;0.5\n"
                               "e2;r1;Accuracy;2.0\n"
                               "e2;r2;Accuracy;1.0\n");
    std::string cfg = tmp.file("c.json", R"({
        "ratings": "scored.csv",
        "delimiter": ";",
        "analytic_max_category": 4,
        "schema": {"essay_id": "sample", "rater_id": "judge",
                   "aspect": "dimension", "score": "points"}
    })");
    IngestResult in = ingest_from_config(load_config(cfg));
    CHECK(in.tensor.essays == std::vector<std::string>{"e1", "e2"});
    CHECK(in.tensor.raters == std::vector<std::string>{"r1", "r2"});
    auto cat = [&](const char* e, const char* r) {
        return in.tensor.category(in.tensor.essay_index(e),
                                  in.tensor.rater_index(r),
                                  in.tensor.aspect_index(Aspect::Accuracy));
    };
    CHECK(cat("e1", "r1") == 3); // 1.5 -> category 3
    CHECK(cat("e2", "r2") == 2);
    CHECK(in.tensor.scale(Aspect::Accuracy).max_category == 4);

    std::string gone = tmp.file("g.json", R"({"ratings": "absent.csv"})");
    CHECK_THROWS_AS(ingest_from_config(load_config(gone)), DomainError);
}

TEST_CASE("calibration screens raters unless a pool is pinned", "[pipeline]") {
    SynthResult corpus =
        small_corpus(7, {Aspect::Accuracy, Aspect::Fluency}, 60, 8, 1);
    PipelineConfig cfg;

    SECTION("default: infit screen picks the pool") {
        CalibrationResult cal = run_calibration(corpus.tensor, cfg);
        CHECK(cal.screened);
        CHECK(cal.aspects == corpus.tensor.aspects);
        CHECK(cal.raters == cal.selection.selected);
        REQUIRE(cal.fits.count(Aspect::Accuracy) == 1);
        REQUIRE(cal.fits.count(Aspect::Fluency) == 1);
        for (const auto& [a, fit] : cal.fits) {
            CHECK(fit.raters == cal.raters); // refit on the screened subset
            CHECK(fit.converged);
            REQUIRE(cal.fair.count(a) == 1);
            CHECK(cal.fair.at(a).essays == corpus.tensor.essays);
            CHECK(cal.fair.at(a).expected.size() == corpus.tensor.essays.size());
        }
    }

    SECTION("pinned raters skip the screen and are sorted") {
        cfg.selected_raters = {corpus.tensor.raters[3], corpus.tensor.raters[0],
                               corpus.tensor.raters[5], corpus.tensor.raters[1],
                               corpus.tensor.raters[4]};
        CalibrationResult cal = run_calibration(corpus.tensor, cfg);
        CHECK_FALSE(cal.screened);
        std::vector<std::string> expect = cfg.selected_raters;
        std::sort(expect.begin(), expect.end());
        CHECK(cal.raters == expect);
        CHECK(cal.fits.at(Aspect::Accuracy).raters == expect);
    }

    SECTION("pinned rater must exist in the tensor") {
        cfg.selected_raters = {"rater_999"};
        CHECK_THROWS_AS(run_calibration(corpus.tensor, cfg), DomainError);
    }

    SECTION("requested aspect must exist in the tensor") {
        cfg.aspects = {Aspect::Logicality};
        CHECK_THROWS_AS(run_calibration(corpus.tensor, cfg), UnknownAspectError);
    }
}

TEST_CASE("evaluation covers simulated and external sources", "[pipeline]") {
    SynthResult corpus = small_corpus(
        19, {Aspect::Accuracy, Aspect::Fluency, Aspect::Holistic}, 50, 8);
    PipelineConfig cfg;
    cfg.seeds = {1, 2, 3};
    cfg.ensemble_sizes = {2};

    CalibrationResult cal = run_calibration(corpus.tensor, cfg);

    // An external source that simply replays the fair scores.
    PredictionSet ext;
    ext.source_id = "ext";
    ext.essays = cal.fair.begin()->second.essays;
    for (const auto& [a, fs] : cal.fair) ext.scores[a] = fs.expected;

    EvaluationOutput ev =
        run_evaluation(corpus.tensor, cal.fair, cal.raters, {ext}, cfg);

    CHECK(ev.rank_aspects == std::vector<Aspect>{Aspect::Accuracy,
                                                 Aspect::Fluency,
                                                 Aspect::Holistic});
    CHECK(ev.rank_sources ==
          std::vector<std::string>{"AR", "OR", "Ens2", "ext"});
    for (Aspect a : ev.rank_aspects) {
        CHECK(ev.rank.at("AR").at(a).mean > 0.0);
        CHECK(ev.rank.at("OR").at(a).n == 3);   // one value per seed
        CHECK(ev.rank.at("Ens2").at(a).n == 3);
        // Replaying fair scores ranks identically to fair scores.
        CHECK(ev.rank.at("ext").at(a).mean == Catch::Approx(1.0).margin(1e-12));
        CHECK(ev.rank.at("ext").at(a).n == 1);
    }

    // Cross-aspect block: fair-vs-fair diagonal is exactly rank 1.
    for (Aspect a : ev.rank_aspects)
        CHECK(ev.cross.at("fair").at(a).at(a) == Catch::Approx(1.0).margin(1e-12));
    bool has_or_cross = false;
    for (const auto& [src, pa] : ev.cross_rows)
        if (src == "OR") has_or_cross = true;
    CHECK(has_or_cross);

    // Feedback: Holistic is excluded from the profile.
    CHECK(ev.profile_aspects ==
          std::vector<Aspect>{Aspect::Accuracy, Aspect::Fluency});
    CHECK(ev.feedback_sources ==
          std::vector<std::string>{"OR", "Ens2", "ext"});
    // Accuracy and Fluency are both Language aspects, so only that macro
    // group row appears alongside the overall row.
    REQUIRE(ev.coverage.size() == 2);
    CHECK(ev.coverage.front().group == "Language");
    CHECK(ev.coverage.back().group == "All");
    for (const auto& src : ev.feedback_sources) {
        for (Aspect a : ev.profile_aspects) {
            CHECK(ev.negative.at(src).at(a).present);
            CHECK(ev.positive.at(src).at(a).present);
        }
        CHECK(ev.avg_negative.count(src) == 1);
        CHECK(ev.avg_positive.count(src) == 1);
    }
    // The fair-replay source reproduces its own targets perfectly.
    for (Aspect a : ev.profile_aspects) {
        const FeedbackCell& cell = ev.negative.at("ext").at(a);
        if (!cell.no_positives)
            CHECK(cell.f_half_raw.mean == Catch::Approx(1.0).margin(1e-12));
    }

    // Scatter pairs exist only for external sources.
    REQUIRE(ev.scatter.count("ext") == 1);
    CHECK(ev.scatter.at("ext").at(Aspect::Accuracy).size() ==
          corpus.tensor.essays.size());
    CHECK(ev.scatter.count("AR") == 0);
}

TEST_CASE("evaluation without seeds or fair scores fails loudly", "[pipeline]") {
    SynthResult corpus = small_corpus(23, {Aspect::Accuracy, Aspect::Fluency});
    PipelineConfig cfg;
    CalibrationResult cal = run_calibration(corpus.tensor, cfg);

    PipelineConfig no_seeds = cfg;
    no_seeds.seeds.clear(); // operational rater needs draws
    CHECK_THROWS_AS(
        run_evaluation(corpus.tensor, cal.fair, cal.raters, {}, no_seeds),
        DomainError);

    std::map<Aspect, FairScores> empty;
    CHECK_THROWS_AS(run_evaluation(corpus.tensor, empty, cal.raters, {}, cfg),
                    InsufficientDataError);
}

TEST_CASE("writers: calibration artifacts land on disk and reload",
          "[pipeline]") {
    TempDir tmp;
    SynthResult corpus = small_corpus(31, {Aspect::Accuracy, Aspect::Fluency});
    PipelineConfig cfg;
    CalibrationResult cal = run_calibration(corpus.tensor, cfg);

    std::string dir = tmp.sub("out");
    write_calibration_reports(dir, cal);
    for (const char* name :
         {"selection.json", "infit_screen.csv", "selection.txt",
          "fit_Accuracy.json", "fit_Fluency.json", "fit_summary.csv",
          "fair_scores.csv", "calibration.txt"})
        CHECK(fs::exists(fs::path(dir) / name));

    // selection.json -> rater pool round trip.
    CHECK(load_selected_raters(dir + "/selection.json") == cal.raters);

    // fair_scores.csv reloads as a prediction set within format precision.
    std::map<Aspect, FairScores> fair2 =
        fair_from_predictions(load_predictions(dir + "/fair_scores.csv", "fair"));
    REQUIRE(fair2.size() == cal.fair.size());
    for (const auto& [a, fs] : cal.fair) {
        REQUIRE(fair2.count(a) == 1);
        CHECK(fair2.at(a).essays == fs.essays);
        for (std::size_t i = 0; i < fs.expected.size(); ++i)
            CHECK(fair2.at(a).expected[i] ==
                  Catch::Approx(fs.expected[i]).margin(1e-6));
    }
}

TEST_CASE("writers: prediction and evaluation files round trip", "[pipeline]") {
    TempDir tmp;
    PredictionSet pred;
    pred.source_id = "model";
    pred.essays = {"e1", "e2", "e3"};
    pred.scores[Aspect::Accuracy] = {1.25, 0.5, 1.875};
    pred.scores[Aspect::Fluency] = {0.0, 2.0, 1.0};

    std::string path = tmp.sub("pred.csv");
    write_predictions_csv(path, pred);
    PredictionSet back = load_predictions(path, "model");
    CHECK(back.essays == pred.essays);
    REQUIRE(back.scores.size() == 2);
    for (const auto& [a, col] : pred.scores)
        for (std::size_t i = 0; i < col.size(); ++i)
            CHECK(back.column(a)[i] == Catch::Approx(col[i]).margin(1e-6));

    SynthResult corpus = small_corpus(37, {Aspect::Accuracy, Aspect::Fluency});
    PipelineConfig cfg;
    cfg.seeds = {1, 2};
    cfg.ensemble_sizes = {2};
    CalibrationResult cal = run_calibration(corpus.tensor, cfg);
    EvaluationOutput ev =
        run_evaluation(corpus.tensor, cal.fair, cal.raters, {}, cfg);

    std::string dir = tmp.sub("ev");
    write_evaluation_reports(dir, ev);
    for (const char* name :
         {"rank_src.csv", "rank_src.txt", "cross_src.csv", "cross_src.txt",
          "feedback.csv", "feedback_negative.txt", "feedback_positive.txt",
          "coverage.csv", "coverage.txt"})
        CHECK(fs::exists(fs::path(dir) / name));
}

TEST_CASE("cli: synth, calibrate and evaluate chain", "[pipeline]") {
    TempDir tmp;
    std::string synth_dir = tmp.sub("synth");
    REQUIRE(run_cli("synth --seed 3 --essays 30 --raters 6 --k 4 --out " +
                    synth_dir) == 0);
    CHECK(fs::exists(fs::path(synth_dir) / "ratings.csv"));
    CHECK(fs::exists(fs::path(synth_dir) / "truth.json"));

    std::string cfg = tmp.file("config.json", R"({
        "ratings": "synth/ratings.csv",
        "output_dir": "out",
        "analytic_max_category": 4,
        "seeds": [1, 2],
        "ensemble_sizes": [2]
    })");
    REQUIRE(run_cli("calibrate --config " + cfg) == 0);
    CHECK(fs::exists(tmp.path / "out/fair_scores.csv"));
    CHECK(fs::exists(tmp.path / "out/selection.json"));

    REQUIRE(run_cli("evaluate --config " + cfg) == 0);
    CHECK(fs::exists(tmp.path / "out/rank_src.csv"));
    CHECK(fs::exists(tmp.path / "out/feedback.csv"));

    REQUIRE(run_cli("reliability --config " + cfg) == 0);
    CHECK(fs::exists(tmp.path / "out/alpha.csv"));
}

TEST_CASE("cli: failure modes map to exit codes", "[pipeline]") {
    TempDir tmp;
    // Evaluate before calibrate: fair scores missing -> runtime error.
    std::string synth_dir = tmp.sub("s");
    REQUIRE(run_cli("synth --seed 4 --essays 20 --raters 5 --k 4 --out " +
                    synth_dir) == 0);
    std::string cfg = tmp.file("c.json", R"({
        "ratings": "s/ratings.csv",
        "output_dir": "fresh",
        "analytic_max_category": 4
    })");
    CHECK(run_cli("evaluate --config " + cfg) == 1);

    CHECK(run_cli("calibrate --config " + tmp.sub("nope.json")) == 2);
    CHECK(run_cli("calibrate --no-such-flag") == 2);
    CHECK(run_cli("") == 2); // a subcommand is required
}
