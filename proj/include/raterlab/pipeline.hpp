#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "raterlab/io.hpp"
#include "raterlab/llmscore.hpp"
#include "raterlab/rankeval.hpp"
#include "raterlab/rasch.hpp"
#include "raterlab/reliability.hpp"
#include "raterlab/reports.hpp"
#include "raterlab/selection.hpp"
#include "raterlab/selfref.hpp"

namespace raterlab {

// ---------------------------------------------------------------------------
// Pipeline configuration (JSON file; paths resolve relative to the file)
// ---------------------------------------------------------------------------

struct PredictionSource {
    std::string source_id;
    std::string path;
};

struct PipelineConfig {
    // corpus
    std::string ratings;
    char delimiter = ',';
    bool apply_recodes = true;
    IngestSchema schema;
    std::vector<double> holistic_bin_edges; // empty = default binning
    int analytic_max_category = 20;

    // shared
    std::string output_dir = "out";
    std::vector<Aspect> aspects; // empty = every aspect in the data

    // selection / calibration
    InfitBounds infit_bounds;
    std::vector<std::string> selected_raters; // pin, skipping the screen
    FitOptions fit;

    // reliability
    AlphaMetric alpha_metric = AlphaMetric::Ordinal;

    // evaluation
    double pr_target = 0.10;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<int> ensemble_sizes;
    bool operational_rater = true;
    std::string fair_scores_path; // default: <output_dir>/fair_scores.csv
    std::string selection_path;   // default: <output_dir>/selection.json
    std::vector<PredictionSource> predictions;

    // llm scoring
    std::string essays_path;
    std::string cache_path;
    EndpointConfig endpoint;
    std::vector<Aspect> llm_aspects; // empty = all eleven

    std::string fair_scores_or_default() const {
        return fair_scores_path.empty() ? output_dir + "/fair_scores.csv"
                                        : fair_scores_path;
    }
    std::string selection_or_default() const {
        return selection_path.empty() ? output_dir + "/selection.json"
                                      : selection_path;
    }
};

namespace detail {

inline std::string resolve_path(const std::filesystem::path& base,
                                const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (base / fp).lexically_normal().string();
}

inline std::vector<Aspect> parse_aspect_list(const nlohmann::json& arr,
                                             const std::string& key) {
    std::vector<Aspect> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError("config: " + key + " must hold names");
        out.push_back(require_aspect(v.get<std::string>()));
    }
    return out;
}

} // namespace detail

inline PipelineConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path + ": " + ex.what());
    }
    if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");

    std::filesystem::path base = std::filesystem::path(path).parent_path();
    PipelineConfig c;
    try {
        c.ratings = detail::resolve_path(base, j.value("ratings", ""));
        if (j.contains("delimiter")) {
            std::string d = j.at("delimiter").get<std::string>();
            if (d.size() != 1) throw ParseError("config: delimiter must be one character");
            c.delimiter = d[0];
        }
        c.apply_recodes = j.value("apply_recodes", true);
        if (j.contains("schema")) {
            const auto& s = j.at("schema");
            c.schema.essay_id = s.value("essay_id", c.schema.essay_id);
            c.schema.rater_id = s.value("rater_id", c.schema.rater_id);
            c.schema.aspect = s.value("aspect", c.schema.aspect);
            c.schema.score = s.value("score", c.schema.score);
        }
        if (j.contains("holistic_bin_edges"))
            c.holistic_bin_edges =
                j.at("holistic_bin_edges").get<std::vector<double>>();
        c.analytic_max_category = j.value("analytic_max_category", 20);

        c.output_dir = detail::resolve_path(base, j.value("output_dir", "out"));
        if (j.contains("aspects"))
            c.aspects = detail::parse_aspect_list(j.at("aspects"), "aspects");

        if (j.contains("infit_bounds")) {
            const auto& b = j.at("infit_bounds");
            if (b.is_array() && b.size() == 2) {
                c.infit_bounds.lo = b.at(0).get<double>();
                c.infit_bounds.hi = b.at(1).get<double>();
            } else if (b.is_object()) {
                c.infit_bounds.lo = b.value("lo", c.infit_bounds.lo);
                c.infit_bounds.hi = b.value("hi", c.infit_bounds.hi);
            } else {
                throw ParseError("config: infit_bounds must be [lo, hi]");
            }
        }
        if (j.contains("selected_raters"))
            c.selected_raters =
                j.at("selected_raters").get<std::vector<std::string>>();
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            c.fit.tol = f.value("tol", c.fit.tol);
            c.fit.max_iter = f.value("max_iter", c.fit.max_iter);
            c.fit.extreme_adjust = f.value("extreme_adjust", c.fit.extreme_adjust);
            c.fit.step_clip = f.value("step_clip", c.fit.step_clip);
            c.fit.strict = f.value("strict", c.fit.strict);
        }
        if (j.contains("alpha_metric"))
            c.alpha_metric = parse_alpha_metric(j.at("alpha_metric").get<std::string>());

        c.pr_target = j.value("pr_target", 0.10);
        if (j.contains("seeds"))
            c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("ensemble_sizes"))
            c.ensemble_sizes = j.at("ensemble_sizes").get<std::vector<int>>();
        c.operational_rater = j.value("operational_rater", true);
        c.fair_scores_path = detail::resolve_path(base, j.value("fair_scores", ""));
        c.selection_path = detail::resolve_path(base, j.value("selection", ""));
        if (j.contains("predictions")) {
            for (const auto& p : j.at("predictions")) {
                PredictionSource src;
                src.path = detail::resolve_path(base, p.at("path").get<std::string>());
                src.source_id = p.value("source_id",
                                        std::filesystem::path(src.path).stem().string());
                c.predictions.push_back(std::move(src));
            }
        }

        c.essays_path = detail::resolve_path(base, j.value("essays", ""));
        c.cache_path = detail::resolve_path(base, j.value("cache", ""));
        if (j.contains("endpoint")) {
            const auto& e = j.at("endpoint");
            c.endpoint.base_url = e.value("base_url", "");
            c.endpoint.model = e.value("model", "");
            c.endpoint.api_key_env = e.value("api_key_env", c.endpoint.api_key_env);
            c.endpoint.top_logprobs = e.value("top_logprobs", c.endpoint.top_logprobs);
            c.endpoint.temperature = e.value("temperature", c.endpoint.temperature);
            c.endpoint.max_attempts = e.value("max_attempts", c.endpoint.max_attempts);
            c.endpoint.parallel = e.value("parallel", c.endpoint.parallel);
            c.endpoint.timeout_s = e.value("timeout_s", c.endpoint.timeout_s);
        }
        if (j.contains("llm_aspects"))
            c.llm_aspects = detail::parse_aspect_list(j.at("llm_aspects"), "llm_aspects");
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path + ": " + ex.what());
    }

    if (c.pr_target <= 0.0 || c.pr_target >= 1.0)
        throw DomainError("config: pr_target must be in (0, 1)");
    return c;
}

inline IngestResult ingest_from_config(const PipelineConfig& c) {
    if (c.ratings.empty()) throw DomainError("config: no ratings file given");
    if (!std::filesystem::exists(c.ratings))
        throw DomainError("config: ratings file does not exist: " + c.ratings);
    IngestOptions opt;
    opt.delimiter = c.delimiter;
    opt.apply_recodes = c.apply_recodes;
    opt.schema = c.schema;
    opt.tensor.analytic_max_category = c.analytic_max_category;
    if (!c.holistic_bin_edges.empty()) opt.tensor.binning.edges = c.holistic_bin_edges;
    return ingest_ratings(c.ratings, opt);
}

// ---------------------------------------------------------------------------
// Calibration preset: screen on all raters -> select -> refit on selected ->
// fair scores.
// ---------------------------------------------------------------------------

struct CalibrationResult {
    std::vector<Aspect> aspects;
    bool screened = false;
    SelectionResult selection;        // only meaningful when screened
    std::vector<std::string> raters;  // final fitting subset
    std::map<Aspect, RaschFit> fits;  // refits on the subset
    std::map<Aspect, FairScores> fair;
};

inline CalibrationResult run_calibration(const RatingTensor& tensor,
                                         const PipelineConfig& config) {
    CalibrationResult out;
    out.aspects = config.aspects.empty() ? tensor.aspects : config.aspects;
    for (Aspect a : out.aspects) tensor.aspect_index(a); // validate presence

    if (!config.selected_raters.empty()) {
        out.raters = config.selected_raters;
        std::sort(out.raters.begin(), out.raters.end());
        for (const auto& r : out.raters) tensor.rater_index(r);
    } else {
        out.selection =
            select_raters(tensor, config.infit_bounds, out.aspects, config.fit);
        out.screened = true;
        out.raters = out.selection.selected;
    }

    for (Aspect a : out.aspects) {
        RaschFit fit = fit_two_facet(tensor, a, out.raters, config.fit);
        out.fair[a] = fair_scores(fit, tensor.scale(a));
        out.fits[a] = std::move(fit);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation: rank agreement, cross-aspect discrimination, self-referential
// feedback classification, coverage.
// ---------------------------------------------------------------------------

struct FeedbackCell {
    bool present = false;      // source covers this aspect
    bool no_positives = false; // target column empty, metrics undefined
    std::size_t n_runs = 0;    // 1 for static sources, |seeds| for draws
    MeanSd f_half_norm;        // across runs
    MeanSd precision_norm;
    MeanSd recall;
    MeanSd f_half_raw;
    MeanSd precision_raw;
    bool has_detail = false;   // single-run sources keep the full sweep result
    EvalResult detail;
};

struct EvaluationOutput {
    // Rank agreement (SRC vs fair), per source x aspect.
    std::vector<Aspect> rank_aspects;
    std::vector<std::string> rank_sources;
    std::map<std::string, std::map<Aspect, MeanSd>> rank;

    // Cross-aspect SRC: (source, predicted aspect) -> fair aspect -> SRC.
    std::vector<std::pair<std::string, Aspect>> cross_rows;
    std::map<std::string, std::map<Aspect, std::map<Aspect, double>>> cross;

    // Feedback classification.
    std::vector<Aspect> profile_aspects; // analytic aspects in the profiles
    FeedbackTargets targets;
    std::vector<CoverageRow> coverage;
    std::vector<std::string> feedback_sources;
    std::map<std::string, std::map<Aspect, FeedbackCell>> negative, positive;
    std::map<std::string, double> avg_negative, avg_positive; // across aspects

    // Scatter pairs: source -> aspect -> (essay, fair, predicted).
    struct ScatterPoint {
        std::string essay_id;
        double fair;
        double predicted;
    };
    std::map<std::string, std::map<Aspect, std::vector<ScatterPoint>>> scatter;
};

namespace detail {

inline MeanSd single(double v) {
    MeanSd m;
    m.mean = v;
    m.sd = 0.0;
    m.n = 1;
    return m;
}

// Feedback sweep for one prediction set against fixed targets; fills one
// FeedbackCell column pair per aspect.
inline void feedback_for_source(
    const std::vector<ProfileDeltas>& runs, const FeedbackTargets& targets,
    const std::vector<Aspect>& aspects, double pr_target,
    std::map<Aspect, FeedbackCell>& neg_out, std::map<Aspect, FeedbackCell>& pos_out) {
    for (Aspect a : aspects) {
        for (Polarity pol : {Polarity::Negative, Polarity::Positive}) {
            FeedbackCell cell;
            cell.present = true;
            cell.n_runs = runs.size();
            std::vector<double> fnorm, pnorm, rec, fraw, praw;
            bool none = false;
            for (const auto& run : runs) {
                try {
                    EvalResult r = best_f_half(run, targets, a, pol, pr_target);
                    fnorm.push_back(r.f_half_norm);
                    pnorm.push_back(r.precision_norm);
                    rec.push_back(r.recall);
                    fraw.push_back(r.f_half);
                    praw.push_back(r.precision);
                    if (runs.size() == 1) {
                        cell.has_detail = true;
                        cell.detail = r;
                    }
                } catch (const NoPositivesError&) {
                    none = true;
                    break;
                }
            }
            cell.no_positives = none;
            if (!none) {
                cell.f_half_norm = mean_sd(fnorm);
                cell.precision_norm = mean_sd(pnorm);
                cell.recall = mean_sd(rec);
                cell.f_half_raw = mean_sd(fraw);
                cell.precision_raw = mean_sd(praw);
            }
            (pol == Polarity::Negative ? neg_out : pos_out)[a] = cell;
        }
    }
}

} // namespace detail

inline EvaluationOutput run_evaluation(const RatingTensor& tensor,
                                       const std::map<Aspect, FairScores>& fair,
                                       const std::vector<std::string>& rater_pool,
                                       const std::vector<PredictionSet>& sources,
                                       const PipelineConfig& config) {
    EvaluationOutput out;

    // Aspect rows: canonical order, restricted to aspects with fair scores.
    for (Aspect a : kAllAspects)
        if (fair.count(a)) out.rank_aspects.push_back(a);
    if (out.rank_aspects.empty())
        throw InsufficientDataError("evaluation: no fair scores");

    std::vector<Aspect> tensor_aspects_in_rank;
    for (Aspect a : out.rank_aspects)
        if (tensor.has_aspect(a)) tensor_aspects_in_rank.push_back(a);

    // ---- Rank agreement -------------------------------------------------
    // AR: mean +- sd across single raters.
    out.rank_sources.push_back("AR");
    for (Aspect a : tensor_aspects_in_rank) {
        AverageRaterSrc ar = average_rater_src(tensor, fair.at(a), rater_pool);
        out.rank["AR"][a] = ar.summary;
    }

    // OR: one drawn rater per essay, mean +- sd across seeds.
    std::vector<PredictionSet> or_draws;
    if (config.operational_rater) {
        if (config.seeds.empty())
            throw DomainError("operational-rater simulation needs seeds");
        out.rank_sources.push_back("OR");
        for (std::uint64_t s : config.seeds)
            or_draws.push_back(operational_rater_draw(tensor, rater_pool,
                                                      tensor_aspects_in_rank, s));
        for (Aspect a : tensor_aspects_in_rank) {
            std::vector<double> srcs;
            for (const auto& draw : or_draws)
                srcs.push_back(src_against_fair(draw, a, fair.at(a)));
            out.rank["OR"][a] = mean_sd(srcs);
        }
    }

    // Ensembles of raw raters.
    std::map<int, std::vector<PredictionSet>> ens_draws;
    for (int size : config.ensemble_sizes) {
        if (size < 1) throw DomainError("ensemble size must be positive");
        std::string label = "Ens" + std::to_string(size);
        out.rank_sources.push_back(label);
        auto& draws = ens_draws[size];
        for (std::uint64_t s : config.seeds)
            draws.push_back(ensemble_scores(tensor, rater_pool, tensor_aspects_in_rank,
                                            static_cast<std::size_t>(size), s));
        for (Aspect a : tensor_aspects_in_rank) {
            std::vector<double> srcs;
            for (const auto& draw : draws)
                srcs.push_back(src_against_fair(draw, a, fair.at(a)));
            out.rank[label][a] = mean_sd(srcs);
        }
    }

    // External prediction sources.
    for (const auto& pred : sources) {
        out.rank_sources.push_back(pred.source_id);
        for (Aspect a : out.rank_aspects) {
            if (!pred.has_aspect(a)) continue;
            out.rank[pred.source_id][a] =
                detail::single(src_against_fair(pred, a, fair.at(a)));
        }
    }

    // ---- Cross-aspect SRC ------------------------------------------------
    {
        // Fair scores against themselves document the aspect structure.
        PredictionSet fair_pred;
        fair_pred.source_id = "fair";
        fair_pred.essays = fair.begin()->second.essays;
        for (Aspect a : out.rank_aspects) fair_pred.scores[a] = fair.at(a).expected;

        std::vector<const PredictionSet*> cross_sources;
        cross_sources.push_back(&fair_pred);
        for (const auto& pred : sources) cross_sources.push_back(&pred);
        for (const PredictionSet* src : cross_sources) {
            for (Aspect pa : out.rank_aspects) {
                if (!src->has_aspect(pa)) continue;
                out.cross_rows.emplace_back(src->source_id, pa);
                out.cross[src->source_id][pa] = cross_aspect_src(*src, pa, fair);
            }
        }
        // OR draws enter averaged across seeds.
        if (!or_draws.empty()) {
            for (Aspect pa : tensor_aspects_in_rank) {
                std::map<Aspect, std::vector<double>> acc;
                for (const auto& draw : or_draws) {
                    auto m = cross_aspect_src(draw, pa, fair);
                    for (const auto& [fa, v] : m) acc[fa].push_back(v);
                }
                out.cross_rows.emplace_back("OR", pa);
                for (const auto& [fa, v] : acc)
                    out.cross["OR"][pa][fa] = mean_sd(v).mean;
            }
        }
    }

    // ---- Self-referential feedback ---------------------------------------
    for (Aspect a : out.rank_aspects)
        if (is_analytic(a)) out.profile_aspects.push_back(a);
    if (out.profile_aspects.size() >= 2) {
        ScoreTable ref_table = table_from_fair(fair, out.profile_aspects);
        ProfileDeltas ref = standardize(ref_table);
        out.targets = make_targets(ref);
        out.coverage = feedback_coverage(out.targets);

        auto covers_all = [&](const PredictionSet& p) {
            for (Aspect a : out.profile_aspects)
                if (!p.has_aspect(a)) return false;
            return true;
        };
        auto profile_runs = [&](const std::vector<PredictionSet>& preds) {
            std::vector<ProfileDeltas> runs;
            for (const auto& p : preds)
                runs.push_back(standardize(table_from_predictions(p, out.profile_aspects)));
            return runs;
        };

        if (!or_draws.empty()) {
            out.feedback_sources.push_back("OR");
            detail::feedback_for_source(profile_runs(or_draws), out.targets,
                                        out.profile_aspects, config.pr_target,
                                        out.negative["OR"], out.positive["OR"]);
        }
        for (const auto& [size, draws] : ens_draws) {
            std::string label = "Ens" + std::to_string(size);
            out.feedback_sources.push_back(label);
            detail::feedback_for_source(profile_runs(draws), out.targets,
                                        out.profile_aspects, config.pr_target,
                                        out.negative[label], out.positive[label]);
        }
        for (const auto& pred : sources) {
            if (!covers_all(pred)) continue; // partial sources skip feedback
            out.feedback_sources.push_back(pred.source_id);
            detail::feedback_for_source(profile_runs({pred}), out.targets,
                                        out.profile_aspects, config.pr_target,
                                        out.negative[pred.source_id],
                                        out.positive[pred.source_id]);
        }

        for (const auto& src : out.feedback_sources) {
            auto avg_of = [&](const std::map<Aspect, FeedbackCell>& cells) {
                double sum = 0.0;
                std::size_t n = 0;
                for (const auto& [a, cell] : cells) {
                    if (cell.no_positives) continue;
                    sum += cell.f_half_norm.mean;
                    ++n;
                }
                return n ? sum / static_cast<double>(n) : 0.0;
            };
            out.avg_negative[src] = avg_of(out.negative[src]);
            out.avg_positive[src] = avg_of(out.positive[src]);
        }
    }

    // ---- Scatter pairs ----------------------------------------------------
    for (const auto& pred : sources) {
        for (Aspect a : out.rank_aspects) {
            if (!pred.has_aspect(a)) continue;
            const auto& col = pred.column(a);
            auto& points = out.scatter[pred.source_id][a];
            for (std::size_t i = 0; i < pred.essays.size(); ++i)
                points.push_back({pred.essays[i],
                                  fair.at(a).expected_of(pred.essays[i]), col[i]});
        }
    }
    return out;
}

} // namespace raterlab
