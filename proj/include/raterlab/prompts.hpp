#pragma once

#include <string>
#include <string_view>

#include "raterlab/aspects.hpp"

namespace raterlab {

// Scoring prompts. The frame positions the task (an ELF examination essay),
// names the aspect under judgment, splices in the aspect's rating
// instructions, and requests a bare 0-9 score. Aspect instructions follow the
// rating guide wording, trimmed to the essay modality.

inline constexpr std::string_view kPromptFrame =
    "In the context of an examination of English as a Lingua Franca (ELF), a "
    "second language (L2) learner of English is asked to write an essay in "
    "response to the following prompt:\n"
    "\n"
    "Do you agree or disagree with the following statement? Use reasons and "
    "specific details to support your opinion.\n"
    "\n"
    "'It is important for college students to have a part-time job.'\n"
    "\n"
    "You have to score this essay by only considering the aspect of [ASPECT].\n"
    "\n"
    "[ANALYTIC RATING PROMPT]\n"
    "\n"
    "Select a score from 0 (lowest) to 9 (highest). Only output the most "
    "suitable score without adding any comment or explanation.\n"
    "\n"
    "Essay: [ESSAY]";

// Display name used in the [ASPECT] slot.
inline const char* prompt_name(Aspect a) {
    if (a == Aspect::Willingness) return "Willingness to communicate";
    return to_string(a);
}

inline std::string_view rating_prompt(Aspect a) {
    switch (a) {
        case Aspect::Intelligibility:
            return "To which extent can you \"decode\", namely, verbally understand "
                   "what is written? Factors such as spelling and sentence structure "
                   "may influence it. Please note that intelligibility, which concerns "
                   "the understandability of the language, should be discriminated "
                   "from comprehensibility, which concerns the understandability of "
                   "the content. You may sometimes find an essay that is intelligible "
                   "but not comprehensible, such as a logically nonsense statement. "
                   "Meanwhile, you may usually not find an essay that is "
                   "comprehensible but not intelligible because if the text cannot be "
                   "decoded, its content cannot be conveyed.";
        case Aspect::Complexity:
            return "To what extent do you think the writer uses morphologically "
                   "and/or semantically complex words, phrases, expressions, "
                   "constructions, and grammar? Complexity is seen at many levels of "
                   "language. For example, \"I speculate...\" usually sounds more "
                   "complex than \"I think\" (Vocabulary). \"It is speculated "
                   "that...\" may sound more complex than \"I speculate\" (Voice, "
                   "Construction). \"If I were a bird\" may sound more complex than "
                   "\"If I am a bird\" (Subjunctive, Grammar).";
        case Aspect::Accuracy:
            return "To what extent do you think the sample is error-free in terms of "
                   "vocabulary and grammar? In addition, you should examine the "
                   "elements such as punctuation. Please note that you should ignore "
                   "minor and only-once errors, which may be mistakes rather than "
                   "errors. Please note that the standard for evaluation should be a "
                   "proficient non-native ELF speaker, not an English native speaker.";
        case Aspect::Fluency:
            return "To what extent do you think the writer is fluent in the essays? "
                   "Fluency needs to be evaluated in two ways: (a) fluency and (b) "
                   "disfluency. If someone writes more, the fluency score should "
                   "increase, while if s/he uses more disfluency markers, the score "
                   "may decrease. Disfluency markers include unnecessary connectors "
                   "(and, but, so because) and semantically empty phrases (such as "
                   "\"I think\" most typically), etc. Please note that using these "
                   "disfluency markers once or twice usually does not cause any "
                   "problems in communication.";
        case Aspect::Comprehensibility:
            return "To what extent can you understand the content of the essay? "
                   "Please note that comprehensibility, which concerns the "
                   "understandability of the content, should be discriminated from "
                   "intelligibility, which concerns the understandability of the "
                   "language. If a writer presents a logically reasonable idea, the "
                   "score should increase.";
        case Aspect::Logicality:
            return "To what extent do you think the idea presented in the essay is "
                   "logical and reasonable? You need to examine whether the reasons "
                   "and the conclusions are logically connected.";
        case Aspect::Sophistication:
            return "To what extent do you think the ideas presented in the essay are "
                   "well-sophisticated, critically thought, unique, original, and "
                   "innovative?";
        case Aspect::Purposefulness:
            return "To what extent do you think the writer consistently and "
                   "consciously pays attention to the purpose of the task? The "
                   "participant was requested to persuade a supervisor to allow them "
                   "to show their own opinion about part-time jobs for college "
                   "students in an essay. You have to examine whether the participant "
                   "fully understands the purpose of the task and consistently sticks "
                   "to it. Purposefulness is closely related to task completion.";
        case Aspect::Willingness:
            return "To what extent do you think the writer is willing to communicate? "
                   "It is possible that a participant with a limited L2 proficiency "
                   "shows a high level of willingness to communicate (WTC), and it is "
                   "also possible that a participant with a high L2 proficiency shows "
                   "quite a low level of WTC. Factors such as the quantity of "
                   "writing, the number of ideas s/he presents, and the use of "
                   "various amplifiers (e.g., \"very,\" \"surely,\" \"definitely,\" "
                   "\"I strongly believe,\" etc.) may represent the participant's WTC.";
        case Aspect::Involvement:
            return "To what extent do you think the participant tries to make the "
                   "reader involved in his/her discourse rather than writing "
                   "one-sidedly? The factors such as the use of the second-person "
                   "pronouns (e.g., \"You know,\" \"as you see,\" \"as you expect,\" "
                   "etc.) and mentioning the reader are usually related to the degree "
                   "of involvement.";
        case Aspect::Holistic:
            return "To what extent do you think the sample is close to an ideal ELF "
                   "essay? Raters have to examine each sample and decide the score "
                   "(0-100) based on the overall judgment of its quality as a "
                   "professional ELF output. Please note that \"9 points\", for "
                   "example, should be given to someone who you think is a 100% ideal "
                   "professional ELF user, not to someone who you think is 100% close "
                   "to English native speakers. Also, please note that the middle "
                   "point is 5.";
    }
    return "";
}

struct PromptSpec {
    Aspect aspect = Aspect::Holistic;
    std::string template_id;
    std::string rendered_text;
    bool empty_essay = false; // degenerate input accepted, but flagged
};

namespace detail {

inline void replace_once(std::string& text, std::string_view slot,
                         std::string_view value) {
    auto pos = text.find(slot);
    if (pos != std::string::npos) text.replace(pos, slot.size(), value);
}

} // namespace detail

// Fill the frame's three slots for one aspect and essay.
inline PromptSpec render_prompt(Aspect aspect, std::string_view essay_text) {
    PromptSpec spec;
    spec.aspect = aspect;
    spec.template_id = std::string("elf-frame/") + prompt_name(aspect);
    spec.rendered_text = std::string(kPromptFrame);
    detail::replace_once(spec.rendered_text, "[ASPECT]", prompt_name(aspect));
    detail::replace_once(spec.rendered_text, "[ANALYTIC RATING PROMPT]",
                         rating_prompt(aspect));
    detail::replace_once(spec.rendered_text, "[ESSAY]", essay_text);
    spec.empty_essay = essay_text.empty();
    return spec;
}

// Name-based variant for callers holding user input.
inline PromptSpec render_prompt(std::string_view aspect_name,
                                std::string_view essay_text) {
    return render_prompt(require_aspect(aspect_name), essay_text);
}

} // namespace raterlab
