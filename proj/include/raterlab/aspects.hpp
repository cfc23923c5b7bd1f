#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "raterlab/errors.hpp"

namespace raterlab {

// The eleven rated aspects: ten analytic aspects in three macro groups,
// plus the holistic impression score.
enum class Aspect : int {
    Intelligibility = 0,
    Complexity,
    Accuracy,
    Fluency,
    Comprehensibility,
    Logicality,
    Sophistication,
    Purposefulness,
    Willingness,
    Involvement,
    Holistic,
};

enum class MacroAspect : int { Language = 0, Content, Attitude, Holistic };

inline constexpr int kAspectCount = 11;
inline constexpr int kAnalyticCount = 10;

inline constexpr std::array<Aspect, kAspectCount> kAllAspects = {
    Aspect::Intelligibility, Aspect::Complexity,  Aspect::Accuracy,
    Aspect::Fluency,         Aspect::Comprehensibility, Aspect::Logicality,
    Aspect::Sophistication,  Aspect::Purposefulness,    Aspect::Willingness,
    Aspect::Involvement,     Aspect::Holistic,
};

inline constexpr std::array<Aspect, kAnalyticCount> kAnalyticAspects = {
    Aspect::Intelligibility, Aspect::Complexity,  Aspect::Accuracy,
    Aspect::Fluency,         Aspect::Comprehensibility, Aspect::Logicality,
    Aspect::Sophistication,  Aspect::Purposefulness,    Aspect::Willingness,
    Aspect::Involvement,
};

inline std::span<const Aspect> all_aspects() { return kAllAspects; }
inline std::span<const Aspect> analytic_aspects() { return kAnalyticAspects; }

inline const char* to_string(Aspect a) {
    switch (a) {
        case Aspect::Intelligibility:   return "Intelligibility";
        case Aspect::Complexity:        return "Complexity";
        case Aspect::Accuracy:          return "Accuracy";
        case Aspect::Fluency:           return "Fluency";
        case Aspect::Comprehensibility: return "Comprehensibility";
        case Aspect::Logicality:        return "Logicality";
        case Aspect::Sophistication:    return "Sophistication";
        case Aspect::Purposefulness:    return "Purposefulness";
        case Aspect::Willingness:       return "Willingness";
        case Aspect::Involvement:       return "Involvement";
        case Aspect::Holistic:          return "Holistic";
    }
    return "?";
}

inline MacroAspect macro_of(Aspect a) {
    switch (a) {
        case Aspect::Intelligibility:
        case Aspect::Complexity:
        case Aspect::Accuracy:
        case Aspect::Fluency:
            return MacroAspect::Language;
        case Aspect::Comprehensibility:
        case Aspect::Logicality:
        case Aspect::Sophistication:
        case Aspect::Purposefulness:
            return MacroAspect::Content;
        case Aspect::Willingness:
        case Aspect::Involvement:
            return MacroAspect::Attitude;
        case Aspect::Holistic:
            return MacroAspect::Holistic;
    }
    return MacroAspect::Holistic;
}

inline const char* to_string(MacroAspect m) {
    switch (m) {
        case MacroAspect::Language: return "Language";
        case MacroAspect::Content:  return "Content";
        case MacroAspect::Attitude: return "Attitude";
        case MacroAspect::Holistic: return "Holistic";
    }
    return "?";
}

inline bool is_analytic(Aspect a) { return a != Aspect::Holistic; }

// Case-insensitive exact name match; nullopt when the name is unknown.
inline std::optional<Aspect> parse_aspect(std::string_view name) {
    auto ieq = [](std::string_view a, std::string_view b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(a[i])) !=
                std::tolower(static_cast<unsigned char>(b[i])))
                return false;
        }
        return true;
    };
    for (Aspect a : kAllAspects) {
        if (ieq(name, to_string(a))) return a;
    }
    return std::nullopt;
}

// Throwing variant for contexts where the aspect must exist.
inline Aspect require_aspect(std::string_view name) {
    if (auto a = parse_aspect(name)) return *a;
    throw UnknownAspectError("unknown aspect: \"" + std::string(name) + "\"");
}

} // namespace raterlab
