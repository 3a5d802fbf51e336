#include "navads/llm_gateway.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "navads/errors.hpp"
#include "navads/util.hpp"

namespace navads::gateway {

using nlohmann::json;
using nlohmann::ordered_json;

SamplingConfig SamplingConfig::deterministic() {
    SamplingConfig cfg;
    cfg.top_p = 1.0;
    cfg.temperature = 0.0;
    cfg.repetition_penalty = 1.0;
    cfg.max_new_tokens = 64;
    return cfg;
}

void SamplingConfig::validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0,1]");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (repetition_penalty < 1.0) throw ConfigError("repetition_penalty must be >= 1");
    if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
}

namespace {

constexpr std::string_view kOvertnessMarker = "[overtness=";

std::uint64_t variant_hash(std::uint64_t seed, std::string_view prompt, const SamplingConfig& cfg,
                           std::size_t i) {
    util::Fnv1a64 h;
    h.update_u64(seed);
    h.update_f64(cfg.top_p);
    h.update_f64(cfg.temperature);
    h.update_f64(cfg.repetition_penalty);
    h.update_u64(static_cast<std::uint64_t>(cfg.max_new_tokens));
    h.update(prompt);
    h.update(std::string_view("\x00", 1));
    h.update_u64(static_cast<std::uint64_t>(i));
    return h.digest();
}

// The value text between the last "[overtness=" and its closing bracket,
// or empty when absent/malformed.
std::string_view last_overtness_value(std::string_view prompt) {
    std::size_t pos = prompt.rfind(kOvertnessMarker);
    if (pos == std::string_view::npos) return {};
    std::size_t begin = pos + kOvertnessMarker.size();
    std::size_t end = prompt.find(']', begin);
    if (end == std::string_view::npos) return {};
    std::string_view value = prompt.substr(begin, end - begin);
    if (value.empty()) return {};
    for (char c : value) {
        if (!((c >= '0' && c <= '9') || c == '.')) return {};
    }
    return value;
}

}  // namespace

std::vector<std::string> MockClient::complete(std::string_view prompt, const SamplingConfig& cfg,
                                              std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);

    if (prompt.starts_with("You are a Subtlety Judge")) {
        std::string_view value = last_overtness_value(prompt);
        std::string score(value.empty() ? std::string_view("0.5") : value);
        for (std::size_t i = 0; i < n; ++i) out.push_back("{\"score\": " + score + "}");
        return out;
    }
    if (prompt.starts_with("You are a fluency judge")) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t h = variant_hash(seed_, prompt, cfg, i);
            out.push_back("{\"score\": " + util::format_fixed4(static_cast<int>(h % 5001)) + "}");
        }
        return out;
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t h = variant_hash(seed_, prompt, cfg, i);
        std::string marker = util::format_fixed4(static_cast<int>(h % 10001));
        std::string tag = util::to_hex((h >> 16) & 0xFFFFFFFFULL).substr(8);
        std::string text = "Here is a grounded answer (variant " + std::to_string(i) + "-" + tag +
                           "). Drawing on the supplied context, it weighs the main options and "
                           "lands on a clear recommendation. [overtness=" + marker +
                           "] The phrasing keeps any product mention in a natural register.";
        out.push_back(std::move(text));
    }
    return out;
}

std::vector<std::string> generate(std::string_view prompt, const SamplingConfig& cfg,
                                  std::size_t n, TextClient& client) {
    if (prompt.empty()) throw DataError("prompt required");
    if (n == 0) throw ConfigError("n must be positive");
    cfg.validate();
    auto out = client.complete(prompt, cfg, n);
    if (out.size() != n) {
        throw GatewayError("backend returned " + std::to_string(out.size()) +
                           " completions, expected " + std::to_string(n));
    }
    return out;
}

double parse_judge_json(std::string_view raw) {
    std::size_t i = 0;
    while ((i = raw.find('{', i)) != std::string_view::npos) {
        // Balanced-object scan that ignores braces inside string literals.
        int depth = 0;
        bool in_str = false;
        bool esc = false;
        std::size_t j = i;
        for (; j < raw.size(); ++j) {
            char c = raw[j];
            if (in_str) {
                if (esc) {
                    esc = false;
                } else if (c == '\\') {
                    esc = true;
                } else if (c == '"') {
                    in_str = false;
                }
                continue;
            }
            if (c == '"') {
                in_str = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    ++j;
                    break;
                }
            }
        }
        if (depth != 0) break;  // ran off the end; no further object can close

        json parsed = json::parse(raw.substr(i, j - i), nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            ++i;  // re-scan inside this span for a nested well-formed object
            continue;
        }
        auto it = parsed.find("score");
        if (it == parsed.end()) throw DataError("judge output has no \"score\" field");
        if (!it->is_number()) throw DataError("judge \"score\" is not numeric");
        double v = it->get<double>();
        if (v < 0.0 || v > 1.0) {
            throw DataError("judge score " + std::to_string(v) + " outside [0,1]");
        }
        return v;
    }
    throw DataError("no JSON object in judge output");
}

namespace {

JudgeVerdict run_judge(const std::string& prompt, TextClient& client, const char* kind) {
    auto out = generate(prompt, SamplingConfig::deterministic(), 1, client);
    JudgeVerdict verdict;
    verdict.raw = out[0];
    try {
        verdict.score = parse_judge_json(verdict.raw);
    } catch (const DataError& e) {
        throw GatewayError(std::string(kind) + ": " + e.what() + "; raw output: " + verdict.raw);
    }
    return verdict;
}

}  // namespace

JudgeVerdict judge_detectability(const prompts::TemplateSet& templates, std::string_view context,
                                 std::string_view response, const corpus::ItemSpec& item,
                                 TextClient& client) {
    return run_judge(prompts::render_ad_judge(templates, context, response, item), client,
                     "detectability judge");
}

JudgeVerdict judge_fluency(const prompts::TemplateSet& templates, std::string_view context,
                           std::string_view response, TextClient& client) {
    return run_judge(prompts::render_fluency_judge(templates, context, response), client,
                     "fluency judge");
}

struct HttpClient::Semaphore {
    std::mutex m;
    std::condition_variable cv;
    std::size_t avail;

    explicit Semaphore(std::size_t n) : avail(n) {}

    void acquire() {
        std::unique_lock lk(m);
        cv.wait(lk, [&] { return avail > 0; });
        --avail;
    }

    void release() {
        {
            std::lock_guard lk(m);
            ++avail;
        }
        cv.notify_one();
    }
};

HttpClient::HttpClient(GatewayConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) throw ConfigError("gateway endpoint required");
    if (cfg_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (cfg_.timeout_ms <= 0) throw ConfigError("timeout must be positive");
    if (cfg_.max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
    slots_ = std::make_unique<Semaphore>(cfg_.max_in_flight);
}

HttpClient::~HttpClient() = default;

std::string HttpClient::post_json(const std::string& path, const std::string& body) {
    slots_->acquire();
    struct SlotGuard {
        Semaphore* s;
        ~SlotGuard() { s->release(); }
    } guard{slots_.get()};

    auto log = [&](const std::string& line) {
        if (cfg_.verbose && cfg_.log) cfg_.log(line);
    };

    const int max_attempts = cfg_.max_retries + 1;
    std::string last_err;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1 && !cfg_.backoff_ms.empty()) {
            std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 2),
                                                    cfg_.backoff_ms.size() - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms[idx]));
        }
        httplib::Client cli(cfg_.endpoint);
        cli.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        cli.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        cli.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        log("POST " + path + " " + body);
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            last_err = std::string("transport error: ") + httplib::to_string(res.error());
            log(last_err);
            continue;
        }
        log("HTTP " + std::to_string(res->status) + " " + res->body);
        if (res->status == 200) return res->body;
        last_err = "HTTP " + std::to_string(res->status);
        bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
        if (!retryable) {
            throw GatewayError(path + ": " + last_err +
                                   (res->body.empty() ? "" : ": " + res->body),
                               attempt);
        }
    }
    throw GatewayError(path + " failed after " + std::to_string(max_attempts) +
                           " attempts: " + last_err,
                       max_attempts);
}

std::vector<std::string> HttpClient::complete(std::string_view prompt, const SamplingConfig& cfg,
                                              std::size_t n) {
    ordered_json body;
    body["schema_version"] = kWireSchemaVersion;
    body["prompt"] = std::string(prompt);
    body["n"] = n;
    body["top_p"] = cfg.top_p;
    body["temperature"] = cfg.temperature;
    body["repetition_penalty"] = cfg.repetition_penalty;
    body["max_new_tokens"] = cfg.max_new_tokens;

    std::string resp = post_json("/v1/completions", body.dump());
    json parsed = json::parse(resp, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("choices") ||
        !parsed["choices"].is_array()) {
        throw GatewayError("malformed completion response: " + resp);
    }
    std::vector<std::string> out;
    for (const auto& choice : parsed["choices"]) {
        if (!choice.is_object() || !choice.contains("text") || !choice["text"].is_string()) {
            throw GatewayError("malformed completion choice: " + resp);
        }
        out.push_back(choice["text"].get<std::string>());
    }
    if (out.size() != n) {
        throw GatewayError("backend returned " + std::to_string(out.size()) +
                           " completions, expected " + std::to_string(n));
    }
    return out;
}

std::vector<float> HttpClient::embed(std::string_view text) {
    ordered_json body;
    body["schema_version"] = kWireSchemaVersion;
    body["input"] = std::string(text);

    std::string resp = post_json("/v1/embeddings", body.dump());
    json parsed = json::parse(resp, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("embedding") ||
        !parsed["embedding"].is_array()) {
        throw GatewayError("malformed embedding response: " + resp);
    }
    std::vector<float> values;
    values.reserve(parsed["embedding"].size());
    for (const auto& v : parsed["embedding"]) {
        if (!v.is_number()) throw GatewayError("malformed embedding response: " + resp);
        values.push_back(v.get<float>());
    }
    return values;
}

index::EmbeddingVector RemoteEmbeddingProvider::embed(std::string_view text) const {
    index::EmbeddingVector out;
    out.values = client_.embed(text);
    out.model_id = model_id_;
    if (out.values.size() != dim_) {
        throw GatewayError("embedding backend returned dim " + std::to_string(out.values.size()) +
                           ", expected " + std::to_string(dim_));
    }
    return out;
}

OfflineScoreProvider OfflineScoreProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file: " + path.string());
    return from_stream(in);
}

OfflineScoreProvider OfflineScoreProvider::from_stream(std::istream& in) {
    OfflineScoreProvider provider;
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
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
            throw ParseError(lineno, "record must hold a string \"id\"");
        }
        std::string id = j["id"].get<std::string>();
        if (id.empty()) throw ParseError(lineno, "id must be non-empty");

        OfflineScore rec;
        if (j.contains("score") && !j["score"].is_null()) {
            if (!j["score"].is_number()) throw ParseError(lineno, "score must be a number");
            double s = j["score"].get<double>();
            if (s < 0.0 || s > 1.0) throw ParseError(lineno, "score outside [0,1]");
            rec.score = s;
        }
        if (j.contains("logits") && !j["logits"].is_null()) {
            const auto& lg = j["logits"];
            if (!lg.is_array() || lg.size() != 2 || !lg[0].is_number() || !lg[1].is_number()) {
                throw ParseError(lineno, "logits must be an array of two numbers");
            }
            rec.logits = {lg[0].get<double>(), lg[1].get<double>()};
        }
        if (!rec.score && !rec.logits) {
            throw ParseError(lineno, "record has neither score nor logits");
        }
        if (!provider.scores_.emplace(std::move(id), rec).second) {
            throw ParseError(lineno, "duplicate id \"" + j["id"].get<std::string>() + "\"");
        }
    }
    return provider;
}

const OfflineScore& OfflineScoreProvider::get(std::string_view id) const {
    auto it = scores_.find(std::string(id));
    if (it == scores_.end()) throw DataError("no score for id \"" + std::string(id) + "\"");
    return it->second;
}

double OfflineScoreProvider::score(std::string_view id) const {
    const OfflineScore& rec = get(id);
    if (!rec.score) throw DataError("record for id \"" + std::string(id) + "\" has no score field");
    return *rec.score;
}

bool OfflineScoreProvider::contains(std::string_view id) const {
    return scores_.find(std::string(id)) != scores_.end();
}

}  // namespace navads::gateway
