#include "navads/corpus.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "navads/errors.hpp"

namespace navads::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
    return c < 0x80 && std::ispunct(c);
}

// Maps the Unicode quote/dash at s[i..] to an ASCII char. Returns the
// replacement and advances `i` past the sequence, or returns 0.
char map_unicode_punct(std::string_view s, std::size_t& i) {
    auto at = [&](std::size_t off) -> unsigned char {
        return i + off < s.size() ? static_cast<unsigned char>(s[i + off]) : 0;
    };
    unsigned char b0 = at(0);
    if (b0 == 0xC2) {  // U+00AB, U+00BB guillemets
        unsigned char b1 = at(1);
        if (b1 == 0xAB || b1 == 0xBB) {
            i += 2;
            return '"';
        }
        return 0;
    }
    if (b0 != 0xE2) return 0;
    unsigned char b1 = at(1);
    unsigned char b2 = at(2);
    if (b1 == 0x80) {
        if (b2 >= 0x90 && b2 <= 0x95) {  // U+2010..U+2015 hyphens/dashes
            i += 3;
            return '-';
        }
        if (b2 >= 0x98 && b2 <= 0x9B) {  // U+2018..U+201B single quotes
            i += 3;
            return '\'';
        }
        if (b2 >= 0x9C && b2 <= 0x9F) {  // U+201C..U+201F double quotes
            i += 3;
            return '"';
        }
        return 0;
    }
    if (b1 == 0x88 && b2 == 0x92) {  // U+2212 minus sign
        i += 3;
        return '-';
    }
    return 0;
}

std::string generation_preprocess(std::string_view text) {
    // Lowercase (ASCII only, keeps multibyte sequences intact) and map
    // Unicode quotes/dashes to their ASCII forms.
    std::string mapped;
    mapped.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (char rep = map_unicode_punct(text, i)) {
            mapped.push_back(rep);
            continue;
        }
        unsigned char c = static_cast<unsigned char>(text[i++]);
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        mapped.push_back(static_cast<char>(c));
    }

    // Collapse runs of the same punctuation char, collapse whitespace runs
    // to a single space, trim ends.
    std::string out;
    out.reserve(mapped.size());
    bool pending_space = false;
    for (std::size_t j = 0; j < mapped.size(); ++j) {
        unsigned char c = static_cast<unsigned char>(mapped[j]);
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (is_ascii_punct(c) && !out.empty() && out.back() == static_cast<char>(c)) {
            continue;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

const json* find_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string require_string(const json& j, const char* key) {
    const json* f = find_field(j, key);
    if (!f) throw DataError(std::string("missing required field \"") + key + "\"");
    if (!f->is_string()) throw DataError(std::string("field \"") + key + "\" must be a string");
    return f->get<std::string>();
}

}  // namespace

std::string normalize_text(std::string_view text, NormalizePolicy policy) {
    switch (policy) {
        case NormalizePolicy::preserve:
            return std::string(text);
        case NormalizePolicy::generation_preprocess:
            return generation_preprocess(text);
    }
    throw DataError("unknown normalization policy");
}

nlohmann::ordered_json segment_to_json(const DocumentSegment& seg) {
    ordered_json j;
    j["doc_id"] = seg.doc_id;
    j["text"] = seg.text;
    j["edu_value"] = seg.edu_value;
    if (seg.bm25_score) j["bm25_score"] = *seg.bm25_score;
    return j;
}

DocumentSegment segment_from_json(const json& j) {
    if (!j.is_object()) throw DataError("segment must be an object");
    DocumentSegment seg;
    seg.doc_id = require_string(j, "doc_id");
    if (seg.doc_id.empty()) throw DataError("segment doc_id must be non-empty");
    seg.text = require_string(j, "text");
    if (seg.text.empty()) throw DataError("segment text must be non-empty");
    const json* edu = find_field(j, "edu_value");
    if (!edu) throw DataError("segment missing required field \"edu_value\"");
    if (!edu->is_number()) throw DataError("segment edu_value must be a number");
    seg.edu_value = edu->get<double>();
    if (seg.edu_value < 0.0) throw DataError("segment edu_value must be >= 0");
    if (const json* bm = find_field(j, "bm25_score")) {
        if (!bm->is_number()) throw DataError("segment bm25_score must be a number");
        seg.bm25_score = bm->get<double>();
    }
    return seg;
}

std::vector<QueryRecord> parse_generation_dataset(std::istream& in) {
    std::vector<QueryRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        try {
            if (!j.is_object()) throw DataError("record must be a JSON object");
            QueryRecord rec;
            rec.query_id = require_string(j, "id");
            if (rec.query_id.empty()) throw DataError("id must be non-empty");
            rec.query = require_string(j, "query");
            if (rec.query.empty()) throw DataError("query must be non-empty");

            const json* item = find_field(j, "item");
            const json* qualities = find_field(j, "qualities");
            if (item) {
                if (!item->is_string()) throw DataError("field \"item\" must be a string");
                ItemSpec spec;
                spec.item = item->get<std::string>();
                if (spec.item.empty()) throw DataError("item must be non-empty");
                if (qualities) {
                    if (!qualities->is_array()) throw DataError("field \"qualities\" must be an array");
                    for (const auto& q : *qualities) {
                        if (!q.is_string()) throw DataError("qualities entries must be strings");
                        spec.qualities.push_back(q.get<std::string>());
                    }
                }
                rec.item = std::move(spec);
            } else if (qualities) {
                throw DataError("qualities present without item");
            }

            if (const json* segs = find_field(j, "segments")) {
                if (!segs->is_array()) throw DataError("field \"segments\" must be an array");
                for (const auto& s : *segs) rec.segments.push_back(segment_from_json(s));
            }

            if (!seen_ids.insert(rec.query_id).second) {
                throw DataError("duplicate query_id \"" + rec.query_id + "\"");
            }
            records.push_back(std::move(rec));
        } catch (const DataError& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return records;
}

std::vector<DetectionExample> parse_detection_dataset(std::istream& in) {
    std::vector<DetectionExample> examples;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        try {
            if (!j.is_object()) throw DataError("record must be a JSON object");
            DetectionExample ex;
            ex.example_id = require_string(j, "id");
            if (ex.example_id.empty()) throw DataError("id must be non-empty");
            if (const json* q = find_field(j, "query")) {
                if (!q->is_string()) throw DataError("field \"query\" must be a string");
                ex.query = q->get<std::string>();
            }
            ex.response = require_string(j, "responseText");
            if (ex.response.empty()) throw DataError("responseText must be non-empty");
            if (const json* label = find_field(j, "label")) {
                if (!label->is_number_integer()) throw DataError("label out of domain");
                auto v = label->get<std::int64_t>();
                if (v != 0 && v != 1) throw DataError("label out of domain");
                ex.label = static_cast<int>(v);
            }
            if (!seen_ids.insert(ex.example_id).second) {
                throw DataError("duplicate id \"" + ex.example_id + "\"");
            }
            examples.push_back(std::move(ex));
        } catch (const DataError& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return examples;
}

void write_generation_dataset(const std::vector<QueryRecord>& records, std::ostream& out) {
    for (const auto& rec : records) {
        ordered_json j;
        j["id"] = rec.query_id;
        j["query"] = rec.query;
        if (rec.item) {
            j["item"] = rec.item->item;
            j["qualities"] = rec.item->qualities;
        }
        j["segments"] = ordered_json::array();
        for (const auto& seg : rec.segments) j["segments"].push_back(segment_to_json(seg));
        out << j.dump() << '\n';
    }
}

void write_detection_dataset(const std::vector<DetectionExample>& examples, std::ostream& out) {
    for (const auto& ex : examples) {
        ordered_json j;
        j["id"] = ex.example_id;
        if (ex.query) j["query"] = *ex.query;
        j["responseText"] = ex.response;
        if (ex.label) j["label"] = *ex.label;
        out << j.dump() << '\n';
    }
}

}  // namespace navads::corpus
