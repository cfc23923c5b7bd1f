#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "raterlab/pipeline.hpp"
#include "raterlab/reports.hpp"

namespace raterlab {

// Report conventions: .txt files are human-readable rendered tables and
// carry the timestamp header; .csv and .json files are
// machine-readable, timestamp-free and byte-stable for identical inputs.

// ---------------------------------------------------------------------------
// Reliability (alpha table)
// ---------------------------------------------------------------------------

inline void write_reliability_reports(
    const std::string& dir, const std::vector<AlphaReport>& all_raters,
    const std::optional<std::vector<AlphaReport>>& selected) {
    ensure_dir(dir);

    std::ostringstream csv;
    csv << "aspect,metric,alpha_all,n_units_all,alpha_selected,n_units_selected,"
           "degenerate\n";
    for (std::size_t i = 0; i < all_raters.size(); ++i) {
        const AlphaReport& a = all_raters[i];
        csv << to_string(a.aspect) << ',' << to_string(a.metric) << ','
            << fmt_fixed(a.alpha, 4) << ',' << a.n_units << ',';
        bool degenerate = a.degenerate;
        if (selected) {
            const AlphaReport& s = (*selected)[i];
            csv << fmt_fixed(s.alpha, 4) << ',' << s.n_units;
            degenerate = degenerate || s.degenerate;
        } else {
            csv << ',';
        }
        csv << ',' << (degenerate ? 1 : 0) << '\n';
    }
    write_report(dir + "/alpha.csv", csv.str(), false);

    TextTable t;
    if (selected)
        t.add_row({"Aspect", "All", "Selected"});
    else
        t.add_row({"Aspect", "All"});
    for (std::size_t i = 0; i < all_raters.size(); ++i) {
        std::vector<std::string> row{to_string(all_raters[i].aspect),
                                     fmt_fixed(all_raters[i].alpha, 3)};
        if (selected) row.push_back(fmt_fixed((*selected)[i].alpha, 3));
        t.add_row(std::move(row));
    }
    std::ostringstream txt;
    txt << "Inter-rater reliability (Krippendorff alpha, "
        << to_string(all_raters.empty() ? AlphaMetric::Ordinal
                                        : all_raters.front().metric)
        << ")\n\n"
        << t.render();
    write_report(dir + "/alpha.txt", txt.str());
}

// ---------------------------------------------------------------------------
// Selection / calibration
// ---------------------------------------------------------------------------

inline nlohmann::json selection_to_json(const SelectionResult& sel) {
    nlohmann::json j;
    j["bounds"] = {{"lo", sel.bounds.lo}, {"hi", sel.bounds.hi}};
    nlohmann::json aspects = nlohmann::json::array();
    for (Aspect a : sel.aspects) aspects.push_back(to_string(a));
    j["aspects"] = std::move(aspects);
    j["selected"] = sel.selected;
    nlohmann::json per;
    for (Aspect a : sel.aspects) {
        nlohmann::json entry;
        const InfitReport& rep = sel.infits.at(a);
        nlohmann::json infits;
        for (std::size_t i = 0; i < rep.raters.size(); ++i)
            infits[rep.raters[i]] = rep.infits[i];
        entry["infit"] = std::move(infits);
        entry["pass"] = sel.per_aspect_pass.at(a);
        entry["converged"] = sel.converged.at(a);
        per[to_string(a)] = std::move(entry);
    }
    j["per_aspect"] = std::move(per);
    return j;
}

inline std::vector<std::string> load_selected_raters(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
        return j.at("selected").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path + ": " + ex.what());
    }
}

inline void write_selection_reports(const std::string& dir,
                                    const SelectionResult& sel) {
    ensure_dir(dir);
    write_report(dir + "/selection.json", selection_to_json(sel).dump(2) + "\n",
                 false);

    std::ostringstream csv;
    csv << "aspect,rater_id,infit,pass\n";
    for (Aspect a : sel.aspects) {
        const InfitReport& rep = sel.infits.at(a);
        for (std::size_t i = 0; i < rep.raters.size(); ++i)
            csv << to_string(a) << ',' << rep.raters[i] << ','
                << fmt_fixed(rep.infits[i], 4) << ','
                << (sel.bounds.pass(rep.infits[i]) ? 1 : 0) << '\n';
    }
    write_report(dir + "/infit_screen.csv", csv.str(), false);

    TextTable t;
    t.add_row({"Rater", "Aspects passed", "Selected"});
    std::map<std::string, std::size_t> passed;
    for (Aspect a : sel.aspects)
        for (const auto& r : sel.per_aspect_pass.at(a)) ++passed[r];
    for (const auto& [rater, cnt] : passed) {
        bool selected = std::find(sel.selected.begin(), sel.selected.end(), rater) !=
                        sel.selected.end();
        t.add_row({rater,
                   std::to_string(cnt) + "/" + std::to_string(sel.aspects.size()),
                   selected ? "yes" : ""});
    }
    std::ostringstream txt;
    txt << "Rater screening (infit bounds [" << fmt_fixed(sel.bounds.lo, 2) << ", "
        << fmt_fixed(sel.bounds.hi, 2) << "])\n"
        << "Selected " << sel.selected.size() << " raters\n\n"
        << t.render();
    write_report(dir + "/selection.txt", txt.str());
}

inline void write_fair_scores_csv(const std::string& path,
                                  const std::map<Aspect, FairScores>& fair) {
    std::ostringstream csv;
    csv << "essay_id,aspect,score\n";
    if (!fair.empty()) {
        const auto& essays = fair.begin()->second.essays;
        for (std::size_t i = 0; i < essays.size(); ++i)
            for (const auto& [a, fs] : fair)
                csv << essays[i] << ',' << to_string(a) << ','
                    << fmt_fixed(fs.expected[i], 6) << '\n';
    }
    write_report(path, csv.str(), false);
}

inline void write_calibration_reports(const std::string& dir,
                                      const CalibrationResult& cal) {
    ensure_dir(dir);
    if (cal.screened) write_selection_reports(dir, cal.selection);

    nlohmann::json raters_json = cal.raters;
    for (const auto& [a, fit] : cal.fits) {
        nlohmann::json j;
        j["aspect"] = to_string(a);
        j["max_category"] = fit.max_category;
        j["converged"] = fit.converged;
        j["iterations"] = fit.iterations;
        j["loglik"] = fit.loglik;
        j["lambda_bar"] = fit.lambda_bar;
        j["held_steps"] = fit.held_steps;
        j["essays"] = fit.essays;
        j["theta"] = fit.theta;
        j["raters"] = fit.raters;
        j["lambda"] = fit.lambda;
        j["tau"] = fit.tau;
        write_report(dir + "/fit_" + to_string(a) + ".json", j.dump(2) + "\n", false);
    }

    std::ostringstream csv;
    csv << "aspect,converged,iterations,loglik,n_raters,held_steps\n";
    for (const auto& [a, fit] : cal.fits) {
        csv << to_string(a) << ',' << (fit.converged ? 1 : 0) << ','
            << fit.iterations << ',' << fmt_fixed(fit.loglik, 4) << ','
            << fit.raters.size() << ',';
        for (std::size_t i = 0; i < fit.held_steps.size(); ++i) {
            if (i) csv << ' ';
            csv << fit.held_steps[i];
        }
        csv << '\n';
    }
    write_report(dir + "/fit_summary.csv", csv.str(), false);

    write_fair_scores_csv(dir + "/fair_scores.csv", cal.fair);

    TextTable t;
    t.add_row({"Aspect", "Converged", "Sweeps", "Log-likelihood"});
    for (const auto& [a, fit] : cal.fits)
        t.add_row({to_string(a), fit.converged ? "yes" : "NO",
                   std::to_string(fit.iterations), fmt_fixed(fit.loglik, 2)});
    std::ostringstream txt;
    txt << "Calibration on " << cal.raters.size() << " raters\n\n" << t.render();
    write_report(dir + "/calibration.txt", txt.str());
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

inline void write_predictions_csv(const std::string& path, const PredictionSet& pred) {
    std::ostringstream csv;
    csv << "essay_id,aspect,score\n";
    for (std::size_t i = 0; i < pred.essays.size(); ++i)
        for (const auto& [a, col] : pred.scores)
            csv << csv_quote(pred.essays[i]) << ',' << to_string(a) << ','
                << fmt_fixed(col[i], 6) << '\n';
    write_report(path, csv.str(), false);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline std::string cell_pm(const MeanSd& m, int digits) {
    if (m.n == 0) return "";
    if (m.n <= 1) return fmt_fixed(m.mean, digits);
    return fmt_fixed(m.mean, digits) + " +- " + fmt_fixed(m.sd, digits);
}

} // namespace detail

inline void write_evaluation_reports(const std::string& dir,
                                     const EvaluationOutput& ev) {
    ensure_dir(dir);

    // Rank agreement.
    {
        std::ostringstream csv;
        csv << "source,aspect,src_mean,src_sd,n\n";
        for (const auto& src : ev.rank_sources) {
            auto it = ev.rank.find(src);
            if (it == ev.rank.end()) continue;
            for (Aspect a : ev.rank_aspects) {
                auto cell = it->second.find(a);
                if (cell == it->second.end()) continue;
                csv << src << ',' << to_string(a) << ','
                    << fmt_fixed(cell->second.mean, 4) << ','
                    << fmt_fixed(cell->second.sd, 4) << ',' << cell->second.n << '\n';
            }
        }
        write_report(dir + "/rank_src.csv", csv.str(), false);

        TextTable t;
        std::vector<std::string> head{"Aspect"};
        for (const auto& src : ev.rank_sources) head.push_back(src);
        t.add_row(std::move(head));
        for (Aspect a : ev.rank_aspects) {
            std::vector<std::string> row{to_string(a)};
            for (const auto& src : ev.rank_sources) {
                auto it = ev.rank.find(src);
                std::string text;
                if (it != ev.rank.end()) {
                    auto c = it->second.find(a);
                    if (c != it->second.end()) text = detail::cell_pm(c->second, 3);
                }
                row.push_back(text);
            }
            t.add_row(std::move(row));
        }
        std::ostringstream txt;
        txt << "Rank agreement with fair scores (SRC)\n\n" << t.render();
        write_report(dir + "/rank_src.txt", txt.str());
    }

    // Cross-aspect SRC.
    {
        std::ostringstream csv;
        csv << "source,pred_aspect,fair_aspect,src\n";
        for (const auto& [src, pa] : ev.cross_rows) {
            const auto& row = ev.cross.at(src).at(pa);
            for (Aspect fa : ev.rank_aspects) {
                auto it = row.find(fa);
                if (it == row.end()) continue;
                csv << src << ',' << to_string(pa) << ',' << to_string(fa) << ','
                    << fmt_fixed(it->second, 4) << '\n';
            }
        }
        write_report(dir + "/cross_src.csv", csv.str(), false);

        TextTable t;
        std::vector<std::string> head{"Prediction"};
        for (Aspect fa : ev.rank_aspects) head.push_back(to_string(fa));
        t.add_row(std::move(head));
        for (const auto& [src, pa] : ev.cross_rows) {
            std::vector<std::string> row{src + " (" + to_string(pa) + ")"};
            const auto& m = ev.cross.at(src).at(pa);
            for (Aspect fa : ev.rank_aspects) {
                auto it = m.find(fa);
                row.push_back(it == m.end() ? "" : fmt_fixed(it->second, 3));
            }
            t.add_row(std::move(row));
        }
        std::ostringstream txt;
        txt << "Cross-aspect SRC against fair scores\n\n" << t.render();
        write_report(dir + "/cross_src.txt", txt.str());
    }

    // Feedback classification.
    if (!ev.feedback_sources.empty()) {
        std::ostringstream csv;
        csv << "source,aspect,polarity,n_runs,f_half_norm_mean,f_half_norm_sd,"
               "precision_norm_mean,recall_mean,f_half_raw_mean,precision_raw_mean,"
               "threshold,tp,fp,fn,tn,no_positives\n";
        for (const auto& src : ev.feedback_sources) {
            for (Polarity pol : {Polarity::Negative, Polarity::Positive}) {
                const auto& table =
                    pol == Polarity::Negative ? ev.negative : ev.positive;
                auto sit = table.find(src);
                if (sit == table.end()) continue;
                for (Aspect a : ev.profile_aspects) {
                    auto cit = sit->second.find(a);
                    if (cit == sit->second.end() || !cit->second.present) continue;
                    const FeedbackCell& cell = cit->second;
                    csv << src << ',' << to_string(a) << ',' << to_string(pol) << ','
                        << cell.n_runs << ',';
                    if (cell.no_positives) {
                        csv << ",,,,,,,,,,1\n";
                        continue;
                    }
                    csv << fmt_fixed(100.0 * cell.f_half_norm.mean, 2) << ','
                        << fmt_fixed(100.0 * cell.f_half_norm.sd, 2) << ','
                        << fmt_fixed(100.0 * cell.precision_norm.mean, 2) << ','
                        << fmt_fixed(100.0 * cell.recall.mean, 2) << ','
                        << fmt_fixed(100.0 * cell.f_half_raw.mean, 2) << ','
                        << fmt_fixed(100.0 * cell.precision_raw.mean, 2) << ',';
                    if (cell.has_detail) {
                        csv << fmt_fixed(cell.detail.threshold, 6) << ','
                            << cell.detail.counts.tp << ',' << cell.detail.counts.fp
                            << ',' << cell.detail.counts.fn << ','
                            << cell.detail.counts.tn;
                    } else {
                        csv << ",,,,";
                    }
                    csv << ",0\n";
                }
            }
        }
        write_report(dir + "/feedback.csv", csv.str(), false);

        for (Polarity pol : {Polarity::Negative, Polarity::Positive}) {
            const auto& table = pol == Polarity::Negative ? ev.negative : ev.positive;
            const auto& avg = pol == Polarity::Negative ? ev.avg_negative
                                                        : ev.avg_positive;
            TextTable t;
            std::vector<std::string> head{"Aspect"};
            for (const auto& src : ev.feedback_sources) head.push_back(src);
            t.add_row(std::move(head));
            for (Aspect a : ev.profile_aspects) {
                std::vector<std::string> row{to_string(a)};
                for (const auto& src : ev.feedback_sources) {
                    const FeedbackCell& cell = table.at(src).at(a);
                    if (cell.no_positives) {
                        row.push_back("n/a");
                    } else if (cell.n_runs > 1) {
                        row.push_back(fmt_fixed(100.0 * cell.f_half_norm.mean, 2) +
                                      " +- " +
                                      fmt_fixed(100.0 * cell.f_half_norm.sd, 2));
                    } else {
                        row.push_back(fmt_fixed(100.0 * cell.f_half_norm.mean, 2));
                    }
                }
                t.add_row(std::move(row));
            }
            std::vector<std::string> avg_row{"Average"};
            for (const auto& src : ev.feedback_sources)
                avg_row.push_back(fmt_fixed(100.0 * avg.at(src), 2));
            t.add_row(std::move(avg_row));

            std::ostringstream txt;
            txt << (pol == Polarity::Negative ? "Negative" : "Positive")
                << " feedback: best prevalence-normalized F0.5 (percent)\n\n"
                << t.render();
            write_report(dir + (pol == Polarity::Negative ? "/feedback_negative.txt"
                                                          : "/feedback_positive.txt"),
                         txt.str());
        }
    }

    // Coverage.
    if (!ev.coverage.empty()) {
        std::ostringstream csv;
        csv << "group,negative_pct,positive_pct,either_pct,n_essays\n";
        for (const auto& row : ev.coverage)
            csv << row.group << ',' << fmt_fixed(100.0 * row.negative, 2) << ','
                << fmt_fixed(100.0 * row.positive, 2) << ','
                << fmt_fixed(100.0 * row.either, 2) << ',' << row.n_essays << '\n';
        write_report(dir + "/coverage.csv", csv.str(), false);

        TextTable t;
        t.add_row({"Group", "Negative", "Positive", "Either"});
        for (const auto& row : ev.coverage)
            t.add_row({row.group, fmt_fixed(100.0 * row.negative, 2) + "%",
                       fmt_fixed(100.0 * row.positive, 2) + "%",
                       fmt_fixed(100.0 * row.either, 2) + "%"});
        std::ostringstream txt;
        txt << "Share of essays with at least one feedback target\n\n" << t.render();
        write_report(dir + "/coverage.txt", txt.str());
    }

    // Scatter pairs.
    if (!ev.scatter.empty()) {
        ensure_dir(dir + "/scatter");
        for (const auto& [src, per_aspect] : ev.scatter) {
            for (const auto& [a, points] : per_aspect) {
                std::ostringstream csv;
                csv << "essay_id,fair,predicted\n";
                for (const auto& p : points)
                    csv << csv_quote(p.essay_id) << ',' << fmt_fixed(p.fair, 6) << ','
                        << fmt_fixed(p.predicted, 6) << '\n';
                write_report(dir + "/scatter/" + src + "_" + to_string(a) + ".csv",
                             csv.str(), false);
            }
        }
    }
}

} // namespace raterlab
