#pragma once

#include "mmrag/corpus.hpp"
#include "mmrag/selection.hpp"

#include <span>
#include <string>

namespace mmrag {

struct PromptTemplate {
    std::string instruction;
};

/// Default neutral instruction for a task kind, used when the config does
/// not override one.
PromptTemplate default_template(const TaskSpec& task);

/// Byte-reproducible few-shot prompt:
///
///   {instruction}\n\n
///   Input: {demo text}\nOutput: {demo gold}\n\n     (per demonstration)
///   Input: {query_text}\nOutput:
///
/// Zero demonstrations yield a valid zero-shot prompt.
std::string build_prompt(const PromptTemplate& tmpl,
                         std::span<const Example> demos,
                         std::string_view query_text);

} // namespace mmrag
