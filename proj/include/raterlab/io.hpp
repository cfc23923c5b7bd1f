#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "raterlab/predictions.hpp"
#include "raterlab/rasch.hpp"
#include "raterlab/ratings.hpp"

namespace raterlab {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

// Minimal RFC-4180 reader: quoted fields may contain the delimiter, newlines
// and doubled quotes. Returns one vector of fields per record.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       char delimiter = ',') {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() || field_started || !row.empty()) end_row();
        } else if (c == '\r') {
            // swallowed; \r\n handled by the \n branch
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field");
    if (!field.empty() || field_started || !row.empty()) end_row();
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << content;
}

// Quote a value for CSV output when needed.
inline std::string csv_quote(const std::string& v, char delimiter = ',') {
    if (v.find_first_of(std::string("\"\n\r") + delimiter) == std::string::npos)
        return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto first = s.data();
    auto last = s.data() + s.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    while (ptr != last && (*ptr == ' ' || *ptr == '\t')) ++ptr;
    if (ec != std::errc() || ptr != last)
        throw ParseError("not a number at " + where + ": \"" + s + "\"");
    return v;
}

// ---------------------------------------------------------------------------
// Ratings ingest
// ---------------------------------------------------------------------------

struct IngestSchema {
    std::string essay_id = "essay_id";
    std::string rater_id = "rater_id";
    std::string aspect = "aspect";
    std::string score = "score";
};

struct IngestOptions {
    char delimiter = ',';
    bool apply_recodes = true;
    IngestSchema schema;
    TensorBuildOptions tensor;
};

struct IngestResult {
    RatingTensor tensor;
    std::size_t n_records = 0;
};

inline IngestResult ingest_ratings(const std::string& path,
                                   const IngestOptions& options = {}) {
    auto rows = parse_csv(read_file(path), options.delimiter);
    if (rows.empty()) throw ParseError(path + ": empty ratings file");

    const auto& header = rows.front();
    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError(path + ": missing column \"" + name + "\"");
    };
    std::size_t ce = column(options.schema.essay_id);
    std::size_t cr = column(options.schema.rater_id);
    std::size_t ca = column(options.schema.aspect);
    std::size_t cs = column(options.schema.score);

    std::vector<RatingRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path + ":" + std::to_string(i + 1);
        if (row.size() != header.size())
            throw ParseError(where + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(row.size()));
        RatingRecord rec;
        rec.essay_id = row[ce];
        rec.rater_id = row[cr];
        rec.aspect = require_aspect(row[ca]);
        rec.raw_score = parse_number(row[cs], where);
        if (rec.essay_id.empty() || rec.rater_id.empty())
            throw ParseError(where + ": empty essay or rater id");
        records.push_back(std::move(rec));
    }

    IngestResult out;
    out.n_records = records.size();
    if (options.apply_recodes) {
        RecodeResult rr = apply_recodes(std::move(records));
        out.tensor = build_tensor(rr.records, options.tensor);
        out.tensor.recode_log = std::move(rr.log);
    } else {
        out.tensor = build_tensor(records, options.tensor);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tensor JSON round-trip
// ---------------------------------------------------------------------------

inline nlohmann::json tensor_to_json(const RatingTensor& t) {
    nlohmann::json j;
    j["essays"] = t.essays;
    j["raters"] = t.raters;
    nlohmann::json aspects = nlohmann::json::array();
    for (std::size_t i = 0; i < t.aspects.size(); ++i) {
        aspects.push_back({{"name", to_string(t.aspects[i])},
                           {"max_category", t.scales[i].max_category},
                           {"step_value", t.scales[i].step_value}});
    }
    j["aspects"] = std::move(aspects);
    j["cells"] = t.cells;
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : t.recode_log) {
        log.push_back({{"essay_id", e.essay_id},
                       {"rater_id", e.rater_id},
                       {"aspect", to_string(e.aspect)},
                       {"from", e.from},
                       {"to", e.to},
                       {"rule", e.rule}});
    }
    j["recode_log"] = std::move(log);
    return j;
}

inline RatingTensor tensor_from_json(const nlohmann::json& j) {
    RatingTensor t;
    try {
        t.essays = j.at("essays").get<std::vector<std::string>>();
        t.raters = j.at("raters").get<std::vector<std::string>>();
        for (const auto& a : j.at("aspects")) {
            t.aspects.push_back(require_aspect(a.at("name").get<std::string>()));
            t.scales.push_back(CategoryScale{a.at("max_category").get<int>(),
                                             a.at("step_value").get<double>()});
        }
        t.cells = j.at("cells").get<std::vector<std::int16_t>>();
        for (const auto& e : j.value("recode_log", nlohmann::json::array())) {
            t.recode_log.push_back(
                {e.at("essay_id").get<std::string>(), e.at("rater_id").get<std::string>(),
                 require_aspect(e.at("aspect").get<std::string>()),
                 e.at("from").get<double>(), e.at("to").get<double>(),
                 e.at("rule").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("tensor json: ") + ex.what());
    }
    if (t.cells.size() != t.essays.size() * t.raters.size() * t.aspects.size())
        throw ParseError("tensor json: cell count does not match axes");
    return t;
}

// ---------------------------------------------------------------------------
// Prediction sets and fair scores (long CSV: essay_id, aspect, score)
// ---------------------------------------------------------------------------

inline PredictionSet load_predictions(const std::string& path,
                                      const std::string& source_id,
                                      const std::string& score_column = "score") {
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw ParseError(path + ": empty predictions file");
    const auto& header = rows.front();
    std::size_t ce = std::string::npos, ca = std::string::npos, cs = std::string::npos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "essay_id") ce = i;
        else if (header[i] == "aspect") ca = i;
        else if (header[i] == score_column) cs = i;
    }
    if (ce == std::string::npos || ca == std::string::npos || cs == std::string::npos)
        throw ParseError(path + ": need columns essay_id, aspect, " + score_column);

    std::map<Aspect, std::map<std::string, double>> by_aspect;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::string where = path + ":" + std::to_string(i + 1);
        const auto& row = rows[i];
        if (row.size() != header.size())
            throw ParseError(where + ": wrong field count");
        Aspect a = require_aspect(row[ca]);
        auto [it, fresh] =
            by_aspect[a].emplace(row[ce], parse_number(row[cs], where));
        if (!fresh) throw DuplicateError(where + ": duplicate prediction for " +
                                         row[ce] + "/" + to_string(a));
    }

    PredictionSet out;
    out.source_id = source_id;
    if (by_aspect.empty()) throw ParseError(path + ": no prediction rows");
    for (const auto& [id, _] : by_aspect.begin()->second) out.essays.push_back(id);
    for (const auto& [a, col] : by_aspect) {
        std::vector<double> v;
        v.reserve(out.essays.size());
        for (const auto& id : out.essays) {
            auto it = col.find(id);
            if (it == col.end())
                throw DomainError(path + ": aspect " + std::string(to_string(a)) +
                                  " missing essay " + id);
            v.push_back(it->second);
        }
        if (col.size() != out.essays.size())
            throw DomainError(path + ": aspect " + std::string(to_string(a)) +
                              " covers a different essay set");
        out.scores[a] = std::move(v);
    }
    out.validate();
    return out;
}

// Fair scores loaded back as a per-aspect expected-score table.
inline std::map<Aspect, FairScores> fair_from_predictions(const PredictionSet& pred) {
    std::map<Aspect, FairScores> out;
    for (const auto& [a, col] : pred.scores) {
        FairScores fs;
        fs.aspect = a;
        fs.scale = is_analytic(a) ? CategoryScale::analytic() : CategoryScale::holistic();
        fs.essays = pred.essays;
        fs.expected = col;
        out[a] = std::move(fs);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Essay texts (essay_id, text)
// ---------------------------------------------------------------------------

struct EssayText {
    std::string essay_id;
    std::string text;
};

inline std::vector<EssayText> load_essays(const std::string& path) {
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw ParseError(path + ": empty essay file");
    const auto& header = rows.front();
    std::size_t ci = std::string::npos, ct = std::string::npos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "essay_id") ci = i;
        else if (header[i] == "text") ct = i;
    }
    if (ci == std::string::npos || ct == std::string::npos)
        throw ParseError(path + ": need columns essay_id, text");
    std::vector<EssayText> essays;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw ParseError(path + ":" + std::to_string(i + 1) + ": wrong field count");
        essays.push_back({rows[i][ci], rows[i][ct]});
    }
    std::sort(essays.begin(), essays.end(),
              [](const EssayText& a, const EssayText& b) {
                  return a.essay_id < b.essay_id;
              });
    for (std::size_t i = 0; i + 1 < essays.size(); ++i)
        if (essays[i].essay_id == essays[i + 1].essay_id)
            throw DuplicateError(path + ": duplicate essay id " + essays[i].essay_id);
    return essays;
}

} // namespace raterlab
