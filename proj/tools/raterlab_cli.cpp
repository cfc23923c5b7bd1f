#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "raterlab/raterlab.hpp"

namespace {

using namespace raterlab;

// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration/usage.
constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;

std::vector<Aspect> parse_aspect_list(const std::vector<std::string>& names) {
    std::vector<Aspect> out;
    for (const auto& n : names) out.push_back(require_aspect(n));
    return out;
}

PipelineConfig load_config_or_exit(const std::string& path, int& code) {
    try {
        code = kOk;
        return load_config(path);
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        code = kConfig;
        return {};
    }
}

std::vector<std::string> resolve_rater_pool(const RatingTensor& tensor,
                                            const PipelineConfig& cfg) {
    if (!cfg.selected_raters.empty()) {
        auto pool = cfg.selected_raters;
        std::sort(pool.begin(), pool.end());
        return pool;
    }
    const std::string sel = cfg.selection_or_default();
    if (std::filesystem::exists(sel)) {
        auto pool = load_selected_raters(sel);
        std::sort(pool.begin(), pool.end());
        std::cerr << "rater pool: " << pool.size() << " raters from " << sel << "\n";
        return pool;
    }
    return tensor.raters;
}

std::vector<Aspect> aspects_in_tensor(const RatingTensor& tensor,
                                      const PipelineConfig& cfg) {
    std::vector<Aspect> out;
    if (cfg.aspects.empty()) return tensor.aspects;
    for (Aspect a : cfg.aspects)
        if (tensor.has_aspect(a)) out.push_back(a);
    if (out.empty()) throw DomainError("none of the configured aspects has ratings");
    return out;
}

// ---------------------------------------------------------------------------

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
    try {
        spec.validate();
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kConfig;
    }
    try {
        SynthResult res = generate(spec);
        ensure_dir(out_dir);
        write_report(out_dir + "/ratings.csv", synth_ratings_csv(res.tensor), false);
        write_report(out_dir + "/truth.json", truth_to_json(res.truth).dump(2) + "\n",
                     false);
        std::cout << "wrote " << out_dir << "/ratings.csv ("
                  << res.tensor.n_present() << " ratings, "
                  << res.tensor.essays.size() << " essays, "
                  << res.tensor.raters.size() << " raters)\n"
                  << "wrote " << out_dir << "/truth.json\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

int cmd_calibrate(const PipelineConfig& cfg) {
    try {
        IngestResult in = ingest_from_config(cfg);
        CalibrationResult cal = run_calibration(in.tensor, cfg);
        write_calibration_reports(cfg.output_dir, cal);
        std::cout << "calibrated " << cal.aspects.size() << " aspects on "
                  << cal.raters.size() << " raters";
        if (cal.screened)
            std::cout << " (screened from " << in.tensor.raters.size() << ")";
        std::cout << "\nwrote " << cfg.output_dir << "/fair_scores.csv\n";
        for (const auto& [a, fit] : cal.fits)
            if (!fit.converged)
                std::cerr << "warning: " << to_string(a) << " did not converge in "
                          << fit.iterations << " sweeps\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

int cmd_select(const PipelineConfig& cfg) {
    try {
        IngestResult in = ingest_from_config(cfg);
        SelectionResult sel = select_raters(in.tensor, cfg.infit_bounds,
                                            aspects_in_tensor(in.tensor, cfg),
                                            cfg.fit);
        write_selection_reports(cfg.output_dir, sel);
        std::cout << "selected " << sel.selected.size() << " of "
                  << in.tensor.raters.size() << " raters\n"
                  << "wrote " << cfg.output_dir << "/selection.json\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

int cmd_reliability(const PipelineConfig& cfg) {
    try {
        IngestResult in = ingest_from_config(cfg);
        std::vector<Aspect> aspects = aspects_in_tensor(in.tensor, cfg);

        std::vector<std::string> selected = cfg.selected_raters;
        if (selected.empty()) {
            const std::string sel = cfg.selection_or_default();
            if (std::filesystem::exists(sel)) selected = load_selected_raters(sel);
        }
        std::sort(selected.begin(), selected.end());

        std::vector<AlphaReport> all, sel_reports;
        for (Aspect a : aspects) {
            all.push_back(krippendorff_alpha(in.tensor, a, {}, cfg.alpha_metric));
            if (!selected.empty())
                sel_reports.push_back(
                    krippendorff_alpha(in.tensor, a, selected, cfg.alpha_metric));
        }
        std::optional<std::vector<AlphaReport>> sel_opt;
        if (!selected.empty()) sel_opt = std::move(sel_reports);
        write_reliability_reports(cfg.output_dir, all, sel_opt);
        std::cout << "wrote " << cfg.output_dir << "/alpha.csv\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

int cmd_evaluate(const PipelineConfig& cfg) {
    try {
        IngestResult in = ingest_from_config(cfg);

        const std::string fair_path = cfg.fair_scores_or_default();
        if (!std::filesystem::exists(fair_path))
            throw DomainError("fair scores not found at " + fair_path +
                              "; run calibrate first");
        std::map<Aspect, FairScores> fair =
            fair_from_predictions(load_predictions(fair_path, "fair"));

        std::vector<std::string> pool = resolve_rater_pool(in.tensor, cfg);

        std::vector<PredictionSet> sources;
        for (const auto& src : cfg.predictions)
            sources.push_back(load_predictions(src.path, src.source_id));

        EvaluationOutput ev = run_evaluation(in.tensor, fair, pool, sources, cfg);
        write_evaluation_reports(cfg.output_dir, ev);
        std::cout << "evaluated " << ev.rank_sources.size() << " sources over "
                  << ev.rank_aspects.size() << " aspects\n"
                  << "wrote " << cfg.output_dir << "/rank_src.csv\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

int cmd_score_llm(const PipelineConfig& cfg) {
    try {
        if (cfg.essays_path.empty())
            throw DomainError("score-llm needs essays_path in the config");
        std::vector<EssayText> essays = load_essays(cfg.essays_path);
        std::vector<Aspect> aspects = cfg.llm_aspects;
        if (aspects.empty())
            aspects.assign(kAllAspects.begin(), kAllAspects.end());
        std::string cache = cfg.cache_path.empty()
                                ? cfg.output_dir + "/llm_cache.jsonl"
                                : cfg.cache_path;
        ensure_dir(cfg.output_dir);

        FetchFn fetch;
        if (!cfg.endpoint.offline()) fetch = http_fetcher();
        ScoreCorpusResult res =
            score_corpus(cfg.endpoint, essays, aspects, cache, fetch);
        write_predictions_csv(cfg.output_dir + "/llm_predictions.csv",
                              res.predictions);
        std::cout << "scored " << essays.size() << " essays x " << aspects.size()
                  << " aspects (" << res.cache_hits << " cached, " << res.fetched
                  << " fetched)\n"
                  << "wrote " << cfg.output_dir << "/llm_predictions.csv\n";
        return kOk;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kRuntime;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"raterlab: rating calibration and evaluation toolkit"};
    app.require_subcommand(1);

    // synth -------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic rating corpus");
    std::string synth_out = "synth_out";
    SynthSpec spec;
    double tau_spread = 0.0;
    std::vector<std::string> synth_aspects;
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--seed", spec.seed, "Generator seed");
    synth->add_option("--essays", spec.n_essays, "Number of essays");
    synth->add_option("--raters", spec.n_raters, "Number of raters");
    synth->add_option("--k", spec.max_category, "Top analytic category");
    synth->add_option("--noise", spec.noise_raters, "Raters answering at random");
    synth->add_option("--halo", spec.halo_weight, "Shared-trait weight in [0,1]");
    synth->add_option("--tau-spread", tau_spread,
                      "Steps spaced evenly over [-s, s] (0 = flat)");
    synth->add_option("--aspects", synth_aspects, "Aspect subset")->delimiter(',');

    // config-driven subcommands ------------------------------------------
    struct Cmd {
        CLI::App* sub;
        std::string config;
        std::string out_override;
        int (*run)(const PipelineConfig&);
    };
    std::vector<Cmd> cmds;
    cmds.reserve(8); // CLI11 keeps pointers into the elements
    auto add_cmd = [&](const char* name, const char* desc,
                       int (*run)(const PipelineConfig&)) {
        auto* sub = app.add_subcommand(name, desc);
        cmds.push_back({sub, "", "", run});
        Cmd& c = cmds.back();
        sub->add_option("--config", c.config, "Pipeline config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", c.out_override, "Override the output directory");
    };
    add_cmd("calibrate",
            "Screen raters, fit the rating model, write fair scores", cmd_calibrate);
    add_cmd("select", "Screen raters by infit and write the selection",
            cmd_select);
    add_cmd("reliability", "Krippendorff alpha per aspect", cmd_reliability);
    add_cmd("evaluate",
            "Rank agreement, cross-aspect structure and feedback targets",
            cmd_evaluate);
    add_cmd("score-llm", "Score essays with a logprob-capable chat model",
            cmd_score_llm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (synth->parsed()) {
        if (tau_spread != 0.0 && spec.max_category >= 1) {
            spec.tau.resize(static_cast<std::size_t>(spec.max_category));
            if (spec.max_category == 1) {
                spec.tau[0] = 0.0;
            } else {
                for (int m = 0; m < spec.max_category; ++m)
                    spec.tau[static_cast<std::size_t>(m)] =
                        -tau_spread +
                        2.0 * tau_spread * m / (spec.max_category - 1);
            }
        }
        if (!synth_aspects.empty()) {
            try {
                spec.aspects = parse_aspect_list(synth_aspects);
            } catch (const std::exception& ex) {
                std::cerr << "config error: " << ex.what() << "\n";
                return kConfig;
            }
        }
        return cmd_synth(spec, synth_out);
    }

    for (const Cmd& c : cmds) {
        if (!c.sub->parsed()) continue;
        int code = kOk;
        PipelineConfig cfg = load_config_or_exit(c.config, code);
        if (code != kOk) return code;
        if (!c.out_override.empty()) cfg.output_dir = c.out_override;
        return c.run(cfg);
    }
    return kConfig; // unreachable: require_subcommand(1)
}
