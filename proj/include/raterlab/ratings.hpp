#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "raterlab/aspects.hpp"
#include "raterlab/errors.hpp"

namespace raterlab {

// Mapping between ordered categories k = 0..max_category and the reporting
// scale. Analytic aspects are rated in half-point steps from 0 to 10, so
// category k corresponds to score k/2 with max_category = 20. The holistic
// score is binned into 11 categories 0..10 reported at face value.
struct CategoryScale {
    int max_category = 20;
    double step_value = 0.5;

    double to_score(int k) const { return step_value * static_cast<double>(k); }

    static CategoryScale analytic(int max_category = 20) {
        return CategoryScale{max_category, 0.5};
    }
    static CategoryScale holistic(int max_category = 10) {
        return CategoryScale{max_category, 1.0};
    }
};

// One raw rating as read from the input file, before categorization.
struct RatingRecord {
    std::string essay_id;
    std::string rater_id;
    Aspect aspect = Aspect::Holistic;
    double raw_score = 0.0;
};

// One applied recode, kept for the audit log.
struct RecodeEntry {
    std::string essay_id;
    std::string rater_id;
    Aspect aspect = Aspect::Holistic;
    double from = 0.0;
    double to = 0.0;
    std::string rule; // "published", "clamp" or "round"
};

struct RecodeResult {
    std::vector<RatingRecord> records;
    std::vector<RecodeEntry> log;
};

namespace detail {

inline bool near(double a, double b, double tol = 1e-6) {
    return std::fabs(a - b) <= tol;
}

// Nearest half-step with ties toward the lower step, in half-step units.
inline long round_to_half_steps(double value) {
    // ceil(2v - 0.5) rounds 2v to the nearest integer, ties downward.
    return static_cast<long>(std::ceil(2.0 * value - 0.5 - 1e-9));
}

inline bool on_half_step_grid(double value) {
    return near(2.0 * value, std::round(2.0 * value));
}

} // namespace detail

// Normalize raw ratings onto the half-step grid. The four rater slips seen
// in the published data are corrected first, then two generic rules run:
// analytic scores above 10 clamp to 10, and any remaining off-grid score
// rounds to the nearest half step (ties toward the lower step). Every change
// is logged.
inline RecodeResult apply_recodes(std::vector<RatingRecord> records) {
    struct Published {
        Aspect aspect;
        double from, to;
    };
    static const Published kPublished[] = {
        {Aspect::Intelligibility, 1.2, 1.0},
        {Aspect::Intelligibility, 6.6, 6.5},
        {Aspect::Complexity, 19.0, 10.0},
        {Aspect::Involvement, 8.6, 8.5},
    };

    RecodeResult out;
    out.records = std::move(records);
    for (auto& rec : out.records) {
        for (const auto& pub : kPublished) {
            if (rec.aspect == pub.aspect && detail::near(rec.raw_score, pub.from)) {
                out.log.push_back({rec.essay_id, rec.rater_id, rec.aspect,
                                   rec.raw_score, pub.to, "published"});
                rec.raw_score = pub.to;
                break;
            }
        }
        if (is_analytic(rec.aspect) && rec.raw_score > 10.0 + 1e-9) {
            out.log.push_back({rec.essay_id, rec.rater_id, rec.aspect,
                               rec.raw_score, 10.0, "clamp"});
            rec.raw_score = 10.0;
        }
        if (!detail::on_half_step_grid(rec.raw_score)) {
            double rounded = 0.5 * static_cast<double>(
                                       detail::round_to_half_steps(rec.raw_score));
            out.log.push_back({rec.essay_id, rec.rater_id, rec.aspect,
                               rec.raw_score, rounded, "round"});
            rec.raw_score = rounded;
        }
    }
    return out;
}

// Holistic scores (0..100) fall into bins whose inclusive lower edges are
// given here; category k = number of edges <= score. The default edges
// implement round-half-up(score / 10).
struct HolisticBinning {
    std::vector<double> edges = {5, 15, 25, 35, 45, 55, 65, 75, 85, 95};

    int max_category() const { return static_cast<int>(edges.size()); }

    int categorize(double score) const {
        int k = 0;
        for (double e : edges) {
            if (score >= e - 1e-9) ++k;
        }
        return k;
    }

    void validate() const {
        if (edges.empty())
            throw DomainError("holistic binning: no edges given");
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            if (!(edges[i] < edges[i + 1]))
                throw DomainError("holistic binning: edges must be strictly increasing");
        }
        if (edges.front() <= 0.0 || edges.back() > 100.0)
            throw DomainError("holistic binning: edges must lie in (0, 100]");
    }
};

// Analytic raw score -> category (doubling). Throws DomainError when the
// doubled score is not an integer or the category is out of range.
inline int categorize_analytic(double raw_score, int max_category,
                               const std::string& where) {
    double doubled = 2.0 * raw_score;
    double nearest = std::round(doubled);
    if (!detail::near(doubled, nearest))
        throw DomainError("analytic score " + std::to_string(raw_score) + " at " +
                          where + " is not on the half-step grid");
    int k = static_cast<int>(nearest);
    if (k < 0 || k > max_category)
        throw DomainError("analytic score " + std::to_string(raw_score) + " at " +
                          where + " is outside [0, " +
                          std::to_string(0.5 * max_category) + "]");
    return k;
}

inline int categorize_holistic(double raw_score, const HolisticBinning& binning,
                               const std::string& where) {
    if (!detail::on_half_step_grid(raw_score))
        throw DomainError("holistic score " + std::to_string(raw_score) + " at " +
                          where + " is not on the half-step grid");
    if (raw_score < -1e-9 || raw_score > 100.0 + 1e-9)
        throw DomainError("holistic score " + std::to_string(raw_score) + " at " +
                          where + " is outside [0, 100]");
    return binning.categorize(raw_score);
}

// Dense essay x rater x aspect tensor of ordered categories. Cells hold the
// category index, kMissing where no rating exists. Essay and rater axes are
// sorted lexicographically, so the tensor is independent of input row order.
class RatingTensor {
public:
    static constexpr std::int16_t kMissing = -1;

    std::vector<std::string> essays;
    std::vector<std::string> raters;
    std::vector<Aspect> aspects;
    std::vector<CategoryScale> scales; // parallel to aspects
    std::vector<std::int16_t> cells;   // essay-major, then rater, then aspect
    std::vector<RecodeEntry> recode_log;

    std::size_t essay_index(const std::string& id) const {
        auto it = std::lower_bound(essays.begin(), essays.end(), id);
        if (it == essays.end() || *it != id)
            throw DomainError("unknown essay id: " + id);
        return static_cast<std::size_t>(it - essays.begin());
    }

    std::size_t rater_index(const std::string& id) const {
        auto it = std::lower_bound(raters.begin(), raters.end(), id);
        if (it == raters.end() || *it != id)
            throw DomainError("unknown rater id: " + id);
        return static_cast<std::size_t>(it - raters.begin());
    }

    std::size_t aspect_index(Aspect a) const {
        for (std::size_t i = 0; i < aspects.size(); ++i)
            if (aspects[i] == a) return i;
        throw UnknownAspectError(std::string("aspect not present in tensor: ") +
                                 to_string(a));
    }

    bool has_aspect(Aspect a) const {
        return std::find(aspects.begin(), aspects.end(), a) != aspects.end();
    }

    const CategoryScale& scale(Aspect a) const { return scales[aspect_index(a)]; }

    std::size_t cell_offset(std::size_t e, std::size_t r, std::size_t a) const {
        return (e * raters.size() + r) * aspects.size() + a;
    }

    std::int16_t category(std::size_t e, std::size_t r, std::size_t a) const {
        return cells[cell_offset(e, r, a)];
    }

    bool has(std::size_t e, std::size_t r, std::size_t a) const {
        return category(e, r, a) != kMissing;
    }

    std::size_t n_present() const {
        std::size_t n = 0;
        for (auto c : cells)
            if (c != kMissing) ++n;
        return n;
    }
};

struct TensorBuildOptions {
    int analytic_max_category = 20;
    HolisticBinning binning;
};

// Assemble the tensor from categorized records. Records must already have
// passed the recode step if recoding is wanted; scores are validated and
// categorized here. Duplicated (essay, rater, aspect) triples are an error.
inline RatingTensor build_tensor(const std::vector<RatingRecord>& records,
                                 const TensorBuildOptions& options = {}) {
    options.binning.validate();

    std::set<std::string> essay_set, rater_set;
    std::set<Aspect> aspect_set;
    for (const auto& rec : records) {
        essay_set.insert(rec.essay_id);
        rater_set.insert(rec.rater_id);
        aspect_set.insert(rec.aspect);
    }

    RatingTensor t;
    t.essays.assign(essay_set.begin(), essay_set.end());
    t.raters.assign(rater_set.begin(), rater_set.end());
    for (Aspect a : kAllAspects) {
        if (aspect_set.count(a)) {
            t.aspects.push_back(a);
            t.scales.push_back(is_analytic(a)
                                   ? CategoryScale::analytic(options.analytic_max_category)
                                   : CategoryScale::holistic(options.binning.max_category()));
        }
    }
    t.cells.assign(t.essays.size() * t.raters.size() * t.aspects.size(),
                   RatingTensor::kMissing);

    for (const auto& rec : records) {
        std::string where = rec.essay_id + "/" + rec.rater_id + "/" +
                            to_string(rec.aspect);
        int k = is_analytic(rec.aspect)
                    ? categorize_analytic(rec.raw_score,
                                          options.analytic_max_category, where)
                    : categorize_holistic(rec.raw_score, options.binning, where);
        std::size_t off = t.cell_offset(t.essay_index(rec.essay_id),
                                        t.rater_index(rec.rater_id),
                                        t.aspect_index(rec.aspect));
        if (t.cells[off] != RatingTensor::kMissing)
            throw DuplicateError("duplicate rating for " + where);
        t.cells[off] = static_cast<std::int16_t>(k);
    }
    return t;
}

} // namespace raterlab
