#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "raterlab/aspects.hpp"
#include "raterlab/errors.hpp"

namespace raterlab {

// A named set of per-essay scores from one source (an LLM, a single drawn
// rater, an ensemble, ...). Aspects may be any subset, but every listed
// aspect must cover every essay.
struct PredictionSet {
    std::string source_id;
    std::vector<std::string> essays;              // sorted
    std::map<Aspect, std::vector<double>> scores; // parallel to essays

    bool has_aspect(Aspect a) const { return scores.count(a) != 0; }

    std::size_t essay_index(const std::string& id) const {
        auto it = std::lower_bound(essays.begin(), essays.end(), id);
        if (it == essays.end() || *it != id)
            throw DomainError("essay not in prediction set \"" + source_id +
                              "\": " + id);
        return static_cast<std::size_t>(it - essays.begin());
    }

    const std::vector<double>& column(Aspect a) const {
        auto it = scores.find(a);
        if (it == scores.end())
            throw UnknownAspectError("prediction set \"" + source_id +
                                     "\" has no aspect " + to_string(a));
        return it->second;
    }

    void validate() const {
        if (!std::is_sorted(essays.begin(), essays.end()))
            throw DomainError("prediction set \"" + source_id +
                              "\": essays not sorted");
        for (const auto& [a, col] : scores)
            if (col.size() != essays.size())
                throw DomainError("prediction set \"" + source_id + "\": aspect " +
                                  std::string(to_string(a)) + " covers " +
                                  std::to_string(col.size()) + " of " +
                                  std::to_string(essays.size()) + " essays");
    }
};

} // namespace raterlab
