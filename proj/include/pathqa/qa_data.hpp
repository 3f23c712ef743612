#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pathqa/kg.hpp"

namespace pathqa {

// Placeholder inserted where the bracketed topic mention stood.
inline constexpr std::string_view kTopicToken = "<topic>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct QuestionRecord {
    std::string raw;                   // question text as it appeared (brackets kept)
    std::vector<std::string> tokens;   // lowercased; exactly one topic placeholder
    EntityId topic = 0;
    std::vector<EntityId> answers;     // non-empty, first-appearance order
};

// Lowercases and splits on whitespace; any character outside [a-z0-9_<>']
// becomes a separator.
std::vector<std::string> tokenize(std::string_view text);

struct QaParseOptions {
    // Entity-resolution failures skip the line (reported to `log`) instead of
    // throwing. Structural problems — missing tab, missing brackets, empty
    // answer list — always throw.
    bool skip_unresolvable = false;
    std::ostream* log = nullptr;
};

// A bare question — `text with one [topic mention]`, no tab or answer list.
// Throws ParseError on malformed brackets or an unresolvable mention.
QuestionRecord parse_question(std::string_view text, const KnowledgeGraph& kg);

// Lines of `question with [topic mention] text<TAB>answer1|answer2|...`.
std::vector<QuestionRecord> parse_qa_file(std::istream& in, const KnowledgeGraph& kg,
                                          const QaParseOptions& options = {});
std::vector<QuestionRecord> parse_qa_file(const std::string& path, const KnowledgeGraph& kg,
                                          const QaParseOptions& options = {});

}  // namespace pathqa
