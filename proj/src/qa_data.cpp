#include "pathqa/qa_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "pathqa/errors.hpp"

namespace pathqa {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool keep_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '<' || c == '>' ||
           c == '\'';
}

EntityId resolve(const KnowledgeGraph& kg, std::string_view name, std::size_t line_no) {
    const auto id = kg.find_entity(name);
    if (!id)
        throw ParseError("unknown entity '" + std::string(name) + "'", line_no);
    return *id;
}

// Bracket extraction + tokenization of the question half of a line; leaves
// `answers` empty.
QuestionRecord parse_question_part(std::string_view question, const KnowledgeGraph& kg,
                                   std::size_t line_no) {
    const auto open = question.find('[');
    if (open == std::string_view::npos)
        throw ParseError("no [topic] mention in question", line_no);
    const auto close = question.find(']', open + 1);
    if (close == std::string_view::npos)
        throw ParseError("unterminated [topic] mention", line_no);
    if (question.find('[', open + 1) != std::string_view::npos)
        throw ParseError("more than one [topic] mention", line_no);
    const std::string_view mention = trim(question.substr(open + 1, close - open - 1));
    if (mention.empty()) throw ParseError("empty [topic] mention", line_no);

    QuestionRecord record;
    record.raw = std::string(question);
    record.topic = resolve(kg, mention, line_no);
    record.tokens = tokenize(question.substr(0, open));
    record.tokens.emplace_back(kTopicToken);
    for (auto& t : tokenize(question.substr(close + 1))) record.tokens.push_back(std::move(t));
    return record;
}

}  // namespace

QuestionRecord parse_question(std::string_view text, const KnowledgeGraph& kg) {
    return parse_question_part(trim(text), kg, 0);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (keep_char(c)) {
            current += c;
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<QuestionRecord> parse_qa_file(std::istream& in, const KnowledgeGraph& kg,
                                          const QaParseOptions& options) {
    std::vector<QuestionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("expected <question>\\t<answers>", line_no);
        const std::string_view question(line.data(), tab);
        const std::string_view answer_part(line.data() + tab + 1, line.size() - tab - 1);

        try {
            QuestionRecord record = parse_question_part(question, kg, line_no);

            std::string_view rest = answer_part;
            while (!rest.empty()) {
                const auto bar = rest.find('|');
                const std::string_view field =
                    trim(bar == std::string_view::npos ? rest : rest.substr(0, bar));
                rest = bar == std::string_view::npos ? std::string_view{} : rest.substr(bar + 1);
                if (field.empty()) throw ParseError("empty answer entity", line_no);
                const EntityId answer = resolve(kg, field, line_no);
                if (std::find(record.answers.begin(), record.answers.end(), answer) ==
                    record.answers.end())
                    record.answers.push_back(answer);
            }
            if (record.answers.empty()) throw ParseError("no answers", line_no);

            records.push_back(std::move(record));
        } catch (const ParseError& e) {
            // only resolution failures are skippable; structure must hold
            const bool resolution = std::string_view(e.what()).find("unknown entity") !=
                                    std::string_view::npos;
            if (!options.skip_unresolvable || !resolution) throw;
            if (options.log) *options.log << "skipped: " << e.what() << "\n";
        }
    }
    return records;
}

std::vector<QuestionRecord> parse_qa_file(const std::string& path, const KnowledgeGraph& kg,
                                          const QaParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open QA file: " + path);
    return parse_qa_file(in, kg, options);
}

}  // namespace pathqa
