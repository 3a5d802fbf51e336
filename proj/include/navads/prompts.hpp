#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "navads/corpus.hpp"

namespace navads::prompts {

// The four prompt wordings live in text files so they can be swapped
// without a rebuild. Placeholder syntax is {name}; substitution is a
// single pass, so braces inside bound values stay literal.
struct TemplateSet {
    std::string generation;     // {context} {item} {qualities}
    std::string ad_judge;       // {context} {response} {item} {qualities}
    std::string fluency_judge;  // {context} {response}
    std::string detection;      // {query} {response}
};

// Reads generation.txt, ad_judge.txt, fluency_judge.txt, and
// detection_instruction.txt from dir. CRLF is normalized to LF and one
// trailing newline is stripped, so a render ends exactly where the
// template does. Throws ConfigError on missing files, placeholders
// outside the declared set, or missing required placeholders.
TemplateSet load_templates(const std::filesystem::path& dir);

// ", "-joined qualities; empty list yields an empty string so the
// template's parenthetical renders as "()".
std::string qualities_list(std::span<const std::string> qualities);

// {name} substitution against the bindings. Throws DataError on an
// unbound or unterminated placeholder.
std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string, std::less<>>& bindings);

// Full prompt when an item is present; with no item the
// "## Promotional Integration" section is omitted (ad-free mode).
std::string render_generation(const TemplateSet& set, std::string_view context,
                              const std::optional<corpus::ItemSpec>& item);

std::string render_ad_judge(const TemplateSet& set, std::string_view context,
                            std::string_view response, const corpus::ItemSpec& item);

std::string render_fluency_judge(const TemplateSet& set, std::string_view context,
                                 std::string_view response);

// Inference form: ends at "Answer:", the label left unbound.
std::string render_detection_instruction(const TemplateSet& set, std::string_view query,
                                         std::string_view response);

// Training-export form: label 1 appends " Yes", label 0 appends " No".
std::string render_detection_training(const TemplateSet& set, std::string_view query,
                                      std::string_view response, int label);

}  // namespace navads::prompts
