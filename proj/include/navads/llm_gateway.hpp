#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "navads/corpus.hpp"
#include "navads/index.hpp"
#include "navads/prompts.hpp"

namespace navads::gateway {

// Version tag sent in every request body so a server can reject clients it
// does not understand.
inline constexpr int kWireSchemaVersion = 1;

struct SamplingConfig {
    double top_p = 0.75;
    double temperature = 0.6;
    double repetition_penalty = 1.06;
    int max_new_tokens = 3000;

    // Judges score with greedy decoding so repeated runs agree.
    static SamplingConfig deterministic();

    void validate() const;  // throws ConfigError
};

struct JudgeVerdict {
    double score = 0.0;  // in [0,1]
    std::string raw;     // verbatim model output
};

struct GatewayConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080
    std::string api_key;   // sent as a bearer token; sourced from the environment
    int timeout_ms = 30000;
    int max_retries = 2;
    std::vector<int> backoff_ms = {100, 400, 1600};  // per retry; last entry repeats
    std::size_t max_in_flight = 4;
    bool verbose = false;
    std::function<void(const std::string&)> log;  // wire log sink; key never logged
};

// Completion backend contract. Implementations must be safe for concurrent
// calls.
class TextClient {
  public:
    virtual ~TextClient() = default;
    // Exactly n completions in arrival order. Empty strings are legal
    // completions and are retained.
    virtual std::vector<std::string> complete(std::string_view prompt, const SamplingConfig& cfg,
                                              std::size_t n) = 0;
};

// Deterministic stand-in for a model server. Output is a pure function of
// (prompt, cfg, n, seed):
//   - generation prompts yield n distinct candidates, each tagged with an
//     [overtness=0.xxxx] marker derived from the per-variant hash;
//   - Subtlety Judge prompts answer {"score": x} where x echoes the last
//     overtness marker found in the prompt (0.5 when none is present);
//   - fluency judge prompts answer a deterministic score in [0, 0.5].
class MockClient final : public TextClient {
  public:
    explicit MockClient(std::uint64_t seed = 0) : seed_(seed) {}

    std::vector<std::string> complete(std::string_view prompt, const SamplingConfig& cfg,
                                      std::size_t n) override;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

// HTTP client for a completion-style server:
//   POST {endpoint}/v1/completions
//     {"schema_version", "prompt", "n", "top_p", "temperature",
//      "repetition_penalty", "max_new_tokens"}
//     -> {"choices": [{"text": "..."} x n]}
//   POST {endpoint}/v1/embeddings
//     {"schema_version", "input"} -> {"embedding": [...]}
// Transport failures and 408/429/5xx responses are retried max_retries
// times with the configured backoff; other statuses fail immediately.
class HttpClient final : public TextClient {
  public:
    explicit HttpClient(GatewayConfig cfg);
    ~HttpClient() override;

    std::vector<std::string> complete(std::string_view prompt, const SamplingConfig& cfg,
                                      std::size_t n) override;

    // Raw embedding values for one input text.
    std::vector<float> embed(std::string_view text);

    const GatewayConfig& config() const { return cfg_; }

  private:
    std::string post_json(const std::string& path, const std::string& body);

    GatewayConfig cfg_;
    struct Semaphore;
    std::unique_ptr<Semaphore> slots_;
};

// Adapts HttpClient::embed to the index module's provider contract. The
// declared model_id/dim identify the server-side model; a response of the
// wrong length is a GatewayError.
class RemoteEmbeddingProvider final : public index::EmbeddingProvider {
  public:
    RemoteEmbeddingProvider(HttpClient& client, std::string model_id, std::size_t dim)
        : client_(client), model_id_(std::move(model_id)), dim_(dim) {}

    index::EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const override { return dim_; }
    std::string model_id() const override { return model_id_; }

  private:
    HttpClient& client_;
    std::string model_id_;
    std::size_t dim_;
};

// Exactly n completions for a non-empty prompt. Thin checked wrapper over
// the client contract.
std::vector<std::string> generate(std::string_view prompt, const SamplingConfig& cfg,
                                  std::size_t n, TextClient& client);

// Scans raw for the first balanced, well-formed JSON object and returns its
// numeric "score". Throws DataError when no object parses, the field is
// missing or non-numeric, or the value falls outside [0,1] (never clamps).
double parse_judge_json(std::string_view raw);

// Renders the judge prompt, queries the client with deterministic decoding,
// parses the score. Parse and transport failures surface as GatewayError
// with the raw model output attached.
JudgeVerdict judge_detectability(const prompts::TemplateSet& templates, std::string_view context,
                                 std::string_view response, const corpus::ItemSpec& item,
                                 TextClient& client);

JudgeVerdict judge_fluency(const prompts::TemplateSet& templates, std::string_view context,
                           std::string_view response, TextClient& client);

// One record of a scores file: probability of "contains an ad" and/or a
// two-logit vector [no_ad, ad].
struct OfflineScore {
    std::optional<double> score;
    std::optional<std::array<double, 2>> logits;
};

// Judge-free score source keyed by example id, backed by a JSONL file
// {"id": str, "score": number in [0,1]} with optional "logits": [a, b].
class OfflineScoreProvider {
  public:
    static OfflineScoreProvider from_file(const std::filesystem::path& path);
    static OfflineScoreProvider from_stream(std::istream& in);

    const OfflineScore& get(std::string_view id) const;  // DataError listing the id
    double score(std::string_view id) const;             // requires the score field
    bool contains(std::string_view id) const;
    std::size_t size() const { return scores_.size(); }

  private:
    std::unordered_map<std::string, OfflineScore> scores_;
};

}  // namespace navads::gateway
