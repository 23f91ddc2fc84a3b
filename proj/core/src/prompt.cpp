#include "mmrag/prompt.hpp"

namespace mmrag {

PromptTemplate default_template(const TaskSpec& task) {
    if (!task.instruction.empty())
        return PromptTemplate{task.instruction};
    switch (task.kind) {
    case TaskKind::ner:
        return PromptTemplate{
            "Extract every entity mention from the input sentence. "
            "List the mentions separated by \"; \". "
            "If there are none, output nothing."};
    case TaskKind::re:
        if (task.output_format == OutputFormat::triple_list)
            return PromptTemplate{
                "Extract every relation triple from the input sentence as "
                "\"head | relation | tail\". List the triples separated by \"; \"."};
        return PromptTemplate{
            "Classify the relation expressed in the input sentence. "
            "Answer with exactly one relation label."};
    case TaskKind::tc:
        return PromptTemplate{
            "Classify the input sentence. Answer with exactly one category label."};
    }
    return PromptTemplate{};
}

std::string build_prompt(const PromptTemplate& tmpl,
                         std::span<const Example> demos,
                         std::string_view query_text) {
    std::string prompt = tmpl.instruction;
    prompt += "\n\n";
    for (const Example& demo : demos) {
        prompt += "Input: ";
        prompt += demo.text;
        prompt += "\nOutput: ";
        prompt += demo.gold;
        prompt += "\n\n";
    }
    prompt += "Input: ";
    prompt += query_text;
    prompt += "\nOutput:";
    return prompt;
}

} // namespace mmrag
