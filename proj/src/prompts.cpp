#include "navads/prompts.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "navads/errors.hpp"
#include "navads/util.hpp"

namespace navads::prompts {

namespace {

constexpr std::string_view kPromoHeading = "## Promotional Integration";

std::string normalize_newlines(std::string text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
        out.push_back(text[i] == '\r' ? '\n' : text[i]);
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

bool placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

std::set<std::string> extract_placeholders(std::string_view tmpl, const std::string& name) {
    std::set<std::string> found;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            ++i;
            continue;
        }
        std::size_t end = tmpl.find('}', i + 1);
        if (end == std::string_view::npos) {
            throw ConfigError("template " + name + ": unterminated placeholder");
        }
        std::string_view inner = tmpl.substr(i + 1, end - i - 1);
        if (inner.empty() || !std::all_of(inner.begin(), inner.end(), placeholder_char)) {
            throw ConfigError("template " + name + ": malformed placeholder {" +
                              std::string(inner) + "}");
        }
        found.insert(std::string(inner));
        i = end + 1;
    }
    return found;
}

void validate_placeholders(std::string_view tmpl, const std::string& name,
                           const std::set<std::string>& required) {
    std::set<std::string> found = extract_placeholders(tmpl, name);
    for (const auto& p : found) {
        if (!required.count(p)) {
            throw ConfigError("template " + name + ": undeclared placeholder {" + p + "}");
        }
    }
    for (const auto& p : required) {
        if (!found.count(p)) {
            throw ConfigError("template " + name + ": missing placeholder {" + p + "}");
        }
    }
}

std::string load_one(const std::filesystem::path& dir, const char* file) {
    try {
        return normalize_newlines(util::read_text_file(dir / file));
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot load template ") + file + ": " + e.what());
    }
}

// Removes the promotional section: from its heading line up to (not
// including) the next "## " heading. The blank line separating the two
// sections goes with it, leaving well-formed spacing.
std::string strip_promotional_section(std::string_view tmpl) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= tmpl.size()) {
        std::size_t nl = tmpl.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(tmpl.substr(start));
            break;
        }
        lines.push_back(tmpl.substr(start, nl - start));
        start = nl + 1;
    }
    std::string out;
    bool skipping = false;
    bool first = true;
    for (auto line : lines) {
        if (line == kPromoHeading) {
            skipping = true;
            continue;
        }
        if (skipping && line.starts_with("## ")) skipping = false;
        if (skipping) continue;
        if (!first) out.push_back('\n');
        out.append(line);
        first = false;
    }
    return out;
}

}  // namespace

TemplateSet load_templates(const std::filesystem::path& dir) {
    TemplateSet set;
    set.generation = load_one(dir, "generation.txt");
    set.ad_judge = load_one(dir, "ad_judge.txt");
    set.fluency_judge = load_one(dir, "fluency_judge.txt");
    set.detection = load_one(dir, "detection_instruction.txt");
    validate_placeholders(set.generation, "generation", {"context", "item", "qualities"});
    validate_placeholders(set.ad_judge, "ad_judge", {"context", "response", "item", "qualities"});
    validate_placeholders(set.fluency_judge, "fluency_judge", {"context", "response"});
    validate_placeholders(set.detection, "detection_instruction", {"query", "response"});
    return set;
}

std::string qualities_list(std::span<const std::string> qualities) {
    std::string out;
    for (std::size_t i = 0; i < qualities.size(); ++i) {
        if (i > 0) out += ", ";
        out += qualities[i];
    }
    return out;
}

std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string, std::less<>>& bindings) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out.push_back(tmpl[i++]);
            continue;
        }
        std::size_t end = tmpl.find('}', i + 1);
        if (end == std::string_view::npos) throw DataError("unterminated placeholder");
        std::string_view name = tmpl.substr(i + 1, end - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw DataError("unbound placeholder {" + std::string(name) + "}");
        }
        out += it->second;
        i = end + 1;
    }
    return out;
}

std::string render_generation(const TemplateSet& set, std::string_view context,
                              const std::optional<corpus::ItemSpec>& item) {
    if (context.empty()) throw DataError("context required");
    if (!item) {
        return render(strip_promotional_section(set.generation),
                      {{"context", std::string(context)}});
    }
    return render(set.generation, {{"context", std::string(context)},
                                   {"item", item->item},
                                   {"qualities", qualities_list(item->qualities)}});
}

std::string render_ad_judge(const TemplateSet& set, std::string_view context,
                            std::string_view response, const corpus::ItemSpec& item) {
    if (context.empty()) throw DataError("context required");
    if (response.empty()) throw DataError("response required");
    return render(set.ad_judge, {{"context", std::string(context)},
                                 {"response", std::string(response)},
                                 {"item", item.item},
                                 {"qualities", qualities_list(item.qualities)}});
}

std::string render_fluency_judge(const TemplateSet& set, std::string_view context,
                                 std::string_view response) {
    if (context.empty()) throw DataError("context required");
    if (response.empty()) throw DataError("response required");
    return render(set.fluency_judge,
                  {{"context", std::string(context)}, {"response", std::string(response)}});
}

std::string render_detection_instruction(const TemplateSet& set, std::string_view query,
                                         std::string_view response) {
    if (query.empty()) throw DataError("query required");
    if (response.empty()) throw DataError("response required");
    return render(set.detection,
                  {{"query", std::string(query)}, {"response", std::string(response)}});
}

std::string render_detection_training(const TemplateSet& set, std::string_view query,
                                      std::string_view response, int label) {
    if (label != 0 && label != 1) throw DataError("label out of domain");
    return render_detection_instruction(set, query, response) + (label == 1 ? " Yes" : " No");
}

}  // namespace navads::prompts
