#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace navads::corpus {

// One retrievable text passage plus its quality metadata.
struct DocumentSegment {
    std::string doc_id;
    std::string text;                      // non-empty
    double edu_value = 0.0;                // estimated educational value, >= 0
    std::optional<double> bm25_score;      // provenance from upstream retrieval
};

// The promoted product/service and its attributes.
struct ItemSpec {
    std::string item;                      // non-empty
    std::vector<std::string> qualities;    // may be empty
};

// A user query with its optional promotion target and candidate segment pool.
struct QueryRecord {
    std::string query_id;                  // unique within a dataset
    std::string query;                     // non-empty
    std::optional<ItemSpec> item;
    std::vector<DocumentSegment> segments;
};

enum class DetectionFormat { response_only, instruction_prompt };

// One classification example. `label` 1 = contains an ad; absent on
// unlabeled inference splits.
struct DetectionExample {
    std::string example_id;
    std::optional<std::string> query;
    std::string response;                  // non-empty
    std::optional<int> label;              // 0 or 1
    DetectionFormat format = DetectionFormat::response_only;
};

enum class NormalizePolicy {
    generation_preprocess,  // lowercase, ASCII quotes/dashes, collapse runs
    preserve,               // identity
};

// Never applied implicitly anywhere in the library; callers opt in.
// generation_preprocess: ASCII-lowercases, maps Unicode quotes/dashes to
// ASCII, collapses runs of the same punctuation character to one, collapses
// whitespace runs to single spaces, trims both ends. Idempotent.
std::string normalize_text(std::string_view text, NormalizePolicy policy);

// Line-delimited JSON, one record per line. Unknown fields are ignored.
// Throws ParseError with the offending 1-based line number; duplicate
// query_id is an error.
std::vector<QueryRecord> parse_generation_dataset(std::istream& in);

std::vector<DetectionExample> parse_detection_dataset(std::istream& in);

void write_generation_dataset(const std::vector<QueryRecord>& records, std::ostream& out);
void write_detection_dataset(const std::vector<DetectionExample>& examples, std::ostream& out);

// Single-segment (de)serialization, shared with the index cache.
nlohmann::ordered_json segment_to_json(const DocumentSegment& seg);
DocumentSegment segment_from_json(const nlohmann::json& j);  // validates invariants

}  // namespace navads::corpus
