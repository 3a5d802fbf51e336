#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "navads/cag_cache.hpp"
#include "navads/corpus.hpp"
#include "navads/errors.hpp"
#include "navads/index.hpp"
#include "navads/llm_gateway.hpp"
#include "navads/metrics.hpp"
#include "navads/preference.hpp"
#include "navads/prompts.hpp"
#include "navads/retrieval.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kConfigVersion = 1;
constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
    std::uint64_t seed = 0;
    std::string generation_dataset;
    std::string detection_dataset;
    std::string cache_root = "cache";
    std::string templates_dir = "templates";
    navads::retrieval::RetrievalConfig retrieval;
    navads::gateway::SamplingConfig sampling;
    navads::preference::PairLoopConfig pair_loop;
    std::size_t embedding_dim = 384;
    std::string embedding_model_id = "remote";
    std::string gateway_mode = "mock";  // mock | remote | offline_scores
    std::string endpoint;
    std::string scores_path;
    std::string stealth_results;
    int timeout_ms = 30000;
    int max_retries = 2;
    std::vector<int> backoff_ms = {100, 400, 1600};
    std::size_t max_in_flight = 4;
    std::size_t workers = 1;
    std::string orpo_path = "orpo.jsonl";
    std::string report_path = "pairs_report.json";
    bool verbose = false;
};

const json* find_key(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
    const json* f = find_key(j, key);
    if (!f) return fallback;
    if (!f->is_string()) throw navads::ConfigError(std::string("config key \"") + key +
                                                   "\" must be a string");
    return f->get<std::string>();
}

double get_number(const json& j, const char* key, double fallback) {
    const json* f = find_key(j, key);
    if (!f) return fallback;
    if (!f->is_number()) throw navads::ConfigError(std::string("config key \"") + key +
                                                   "\" must be a number");
    return f->get<double>();
}

std::int64_t get_integer(const json& j, const char* key, std::int64_t fallback) {
    const json* f = find_key(j, key);
    if (!f) return fallback;
    if (!f->is_number_integer()) throw navads::ConfigError(std::string("config key \"") + key +
                                                           "\" must be an integer");
    return f->get<std::int64_t>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
    const json* f = find_key(j, key);
    if (!f) return fallback;
    if (!f->is_boolean()) throw navads::ConfigError(std::string("config key \"") + key +
                                                    "\" must be a boolean");
    return f->get<bool>();
}

std::size_t require_positive(std::int64_t v, const char* what) {
    if (v <= 0) throw navads::ConfigError(std::string(what) + " must be positive");
    return static_cast<std::size_t>(v);
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;

    std::ifstream in(path);
    if (!in) throw navads::ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw navads::ConfigError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw navads::ConfigError("config file must hold a JSON object");
    auto version = get_integer(j, "config_version", kConfigVersion);
    if (version != kConfigVersion) {
        throw navads::ConfigError("unsupported config_version " + std::to_string(version) +
                                  ", expected " + std::to_string(kConfigVersion));
    }

    auto seed = get_integer(j, "seed", 0);
    if (seed < 0) throw navads::ConfigError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.generation_dataset = get_string(j, "generation_dataset", cfg.generation_dataset);
    cfg.detection_dataset = get_string(j, "detection_dataset", cfg.detection_dataset);
    cfg.cache_root = get_string(j, "cache_root", cfg.cache_root);
    cfg.templates_dir = get_string(j, "templates_dir", cfg.templates_dir);

    if (const json* r = find_key(j, "retrieval")) {
        cfg.retrieval.k = require_positive(get_integer(*r, "k",
                                                       static_cast<std::int64_t>(cfg.retrieval.k)),
                                           "retrieval.k");
        cfg.retrieval.context_budget = require_positive(
            get_integer(*r, "context_budget",
                        static_cast<std::int64_t>(cfg.retrieval.context_budget)),
            "retrieval.context_budget");
        std::string policy = get_string(*r, "budget_policy", "drop_whole_segment");
        if (policy == "drop_whole_segment") {
            cfg.retrieval.budget_policy = navads::retrieval::BudgetPolicy::drop_whole_segment;
        } else if (policy == "truncate_last") {
            cfg.retrieval.budget_policy = navads::retrieval::BudgetPolicy::truncate_last;
        } else {
            throw navads::ConfigError("retrieval.budget_policy must be drop_whole_segment or "
                                      "truncate_last");
        }
    }

    if (const json* s = find_key(j, "sampling")) {
        cfg.sampling.top_p = get_number(*s, "top_p", cfg.sampling.top_p);
        cfg.sampling.temperature = get_number(*s, "temperature", cfg.sampling.temperature);
        cfg.sampling.repetition_penalty =
            get_number(*s, "repetition_penalty", cfg.sampling.repetition_penalty);
        cfg.sampling.max_new_tokens = static_cast<int>(
            get_integer(*s, "max_new_tokens", cfg.sampling.max_new_tokens));
        cfg.sampling.validate();
    }

    if (const json* p = find_key(j, "pair_loop")) {
        cfg.pair_loop.n_candidates = require_positive(
            get_integer(*p, "n_candidates", static_cast<std::int64_t>(cfg.pair_loop.n_candidates)),
            "pair_loop.n_candidates");
        cfg.pair_loop.min_gap = get_number(*p, "min_gap", cfg.pair_loop.min_gap);
        cfg.pair_loop.max_rounds = require_positive(
            get_integer(*p, "max_rounds", static_cast<std::int64_t>(cfg.pair_loop.max_rounds)),
            "pair_loop.max_rounds");
        cfg.pair_loop.target_pairs = require_positive(
            get_integer(*p, "target_pairs", static_cast<std::int64_t>(cfg.pair_loop.target_pairs)),
            "pair_loop.target_pairs");
        cfg.pair_loop.fluency_filter = get_bool(*p, "fluency_filter", cfg.pair_loop.fluency_filter);
        cfg.pair_loop.fluency_max = get_number(*p, "fluency_max", cfg.pair_loop.fluency_max);
        cfg.pair_loop.validate();
    }

    if (const json* e = find_key(j, "embedding")) {
        cfg.embedding_dim = require_positive(
            get_integer(*e, "dim", static_cast<std::int64_t>(cfg.embedding_dim)), "embedding.dim");
        cfg.embedding_model_id = get_string(*e, "model_id", cfg.embedding_model_id);
    }

    if (const json* g = find_key(j, "gateway")) {
        cfg.gateway_mode = get_string(*g, "mode", cfg.gateway_mode);
        if (cfg.gateway_mode != "mock" && cfg.gateway_mode != "remote" &&
            cfg.gateway_mode != "offline_scores") {
            throw navads::ConfigError("gateway.mode must be mock, remote, or offline_scores");
        }
        cfg.endpoint = get_string(*g, "endpoint", cfg.endpoint);
        cfg.scores_path = get_string(*g, "scores_path", cfg.scores_path);
        cfg.timeout_ms = static_cast<int>(get_integer(*g, "timeout_ms", cfg.timeout_ms));
        cfg.max_retries = static_cast<int>(get_integer(*g, "max_retries", cfg.max_retries));
        if (cfg.max_retries < 0) throw navads::ConfigError("gateway.max_retries must be >= 0");
        if (const json* b = find_key(*g, "backoff_ms")) {
            if (!b->is_array()) throw navads::ConfigError("gateway.backoff_ms must be an array");
            cfg.backoff_ms.clear();
            for (const auto& v : *b) {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
                    throw navads::ConfigError("gateway.backoff_ms entries must be non-negative "
                                              "integers");
                }
                cfg.backoff_ms.push_back(static_cast<int>(v.get<std::int64_t>()));
            }
        }
        cfg.max_in_flight = require_positive(
            get_integer(*g, "max_in_flight", static_cast<std::int64_t>(cfg.max_in_flight)),
            "gateway.max_in_flight");
    }

    cfg.stealth_results = get_string(j, "stealth_results", cfg.stealth_results);
    cfg.workers = require_positive(get_integer(j, "workers",
                                               static_cast<std::int64_t>(cfg.workers)),
                                   "workers");

    if (const json* o = find_key(j, "output")) {
        cfg.orpo_path = get_string(*o, "orpo_path", cfg.orpo_path);
        cfg.report_path = get_string(*o, "report_path", cfg.report_path);
    }
    return cfg;
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

// Gateway backends for commands that generate or embed. Offline-scores
// mode has no completion backend, so those commands reject it.
struct Backends {
    std::unique_ptr<navads::gateway::MockClient> mock;
    std::unique_ptr<navads::gateway::HttpClient> http;
    std::unique_ptr<navads::index::EmbeddingProvider> embedder;
    navads::gateway::TextClient* client = nullptr;
};

Backends make_backends(const RunConfig& cfg) {
    Backends b;
    if (cfg.gateway_mode == "mock") {
        b.mock = std::make_unique<navads::gateway::MockClient>(cfg.seed);
        b.client = b.mock.get();
        b.embedder = std::make_unique<navads::index::HashNgramProvider>(cfg.embedding_dim,
                                                                        cfg.seed);
        return b;
    }
    if (cfg.gateway_mode == "remote") {
        navads::gateway::GatewayConfig g;
        g.endpoint = !cfg.endpoint.empty() ? cfg.endpoint : env_or_empty("NAVADS_GATEWAY_URL");
        if (g.endpoint.empty()) {
            throw navads::ConfigError("remote mode needs gateway.endpoint or NAVADS_GATEWAY_URL");
        }
        g.api_key = env_or_empty("NAVADS_API_KEY");
        g.timeout_ms = cfg.timeout_ms;
        g.max_retries = cfg.max_retries;
        g.backoff_ms = cfg.backoff_ms;
        g.max_in_flight = cfg.max_in_flight;
        g.verbose = cfg.verbose;
        if (cfg.verbose) g.log = [](const std::string& line) { std::cerr << line << "\n"; };
        b.http = std::make_unique<navads::gateway::HttpClient>(std::move(g));
        b.client = b.http.get();
        b.embedder = std::make_unique<navads::gateway::RemoteEmbeddingProvider>(
            *b.http, cfg.embedding_model_id, cfg.embedding_dim);
        return b;
    }
    throw navads::ConfigError("this command requires gateway.mode mock or remote");
}

navads::cache::CacheConfig make_cache_config(const RunConfig& cfg) {
    navads::cache::CacheConfig c;
    c.root_dir = cfg.cache_root;
    c.on_warning = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
    return c;
}

std::vector<navads::corpus::QueryRecord> load_generation(const RunConfig& cfg) {
    if (cfg.generation_dataset.empty()) {
        throw navads::ConfigError("generation_dataset required (config or --dataset)");
    }
    std::ifstream in(cfg.generation_dataset);
    if (!in) throw navads::DataError("cannot open generation dataset: " + cfg.generation_dataset);
    return navads::corpus::parse_generation_dataset(in);
}

std::vector<navads::corpus::DetectionExample> load_detection(const RunConfig& cfg) {
    if (cfg.detection_dataset.empty()) {
        throw navads::ConfigError("detection_dataset required (config or --dataset)");
    }
    std::ifstream in(cfg.detection_dataset);
    if (!in) throw navads::DataError("cannot open detection dataset: " + cfg.detection_dataset);
    return navads::corpus::parse_detection_dataset(in);
}

void emit(const ordered_json& payload, const std::string& out_path) {
    std::string text = payload.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw navads::DataError("cannot open output file: " + out_path);
    out << text;
    out.flush();
    if (!out) throw navads::DataError("write failed: " + out_path);
}

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception
// wins; remaining work is abandoned cooperatively.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        while (!failed.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lk(error_mu);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t count = std::min(workers, n);
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

int cmd_version() {
    ordered_json j;
    j["name"] = "navads";
    j["version"] = kToolVersion;
    j["config_version"] = kConfigVersion;
    j["index_format_version"] = navads::index::kIndexFormatVersion;
    j["wire_schema_version"] = navads::gateway::kWireSchemaVersion;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_index(const RunConfig& cfg, const std::string& out_path) {
    auto records = load_generation(cfg);
    auto backends = make_backends(cfg);
    auto cache_cfg = make_cache_config(cfg);

    std::vector<std::string> skipped;
    std::vector<char> indexed(records.size(), 0);
    for (const auto& rec : records) {
        if (rec.segments.empty()) skipped.push_back(rec.query_id);
    }
    parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
        const auto& rec = records[i];
        if (rec.segments.empty()) return;
        navads::cache::load_or_build(cache_cfg, rec.query_id, rec.segments,
                                     backends.embedder->model_id(), [&] {
                                         return navads::index::build_index(
                                             rec.query_id, rec.segments, *backends.embedder);
                                     });
        indexed[i] = 1;
    });

    ordered_json j;
    j["indexed"] = std::count(indexed.begin(), indexed.end(), 1);
    j["skipped_empty"] = skipped;
    j["cache_root"] = cfg.cache_root;
    emit(j, out_path);
    return 0;
}

int cmd_retrieve(const RunConfig& cfg, const std::string& query_id, const std::string& out_path) {
    auto records = load_generation(cfg);
    const navads::corpus::QueryRecord* record = nullptr;
    for (const auto& rec : records) {
        if (rec.query_id == query_id) {
            record = &rec;
            break;
        }
    }
    if (!record) throw navads::DataError("unknown query_id \"" + query_id + "\"");

    auto backends = make_backends(cfg);
    auto cache_cfg = make_cache_config(cfg);
    auto idx = navads::cache::load_or_build(cache_cfg, record->query_id, record->segments,
                                            backends.embedder->model_id(), [&] {
                                                return navads::index::build_index(
                                                    record->query_id, record->segments,
                                                    *backends.embedder);
                                            });
    auto query_vec = navads::index::embed(record->query, *backends.embedder);
    auto ctx = navads::retrieval::retrieve_context(idx, query_vec, cfg.retrieval);

    ordered_json j;
    j["query_id"] = ctx.query_id;
    j["picks"] = ordered_json::array();
    for (const auto& pick : ctx.picks) {
        j["picks"].push_back({{"doc_id", pick.segment.doc_id},
                              {"distance", pick.distance},
                              {"combined_score", pick.combined}});
    }
    j["context_text"] = ctx.context_text;
    emit(j, out_path);
    return 0;
}

int cmd_pairs(const RunConfig& cfg, const std::string& orpo_override,
              const std::string& report_override) {
    auto records = load_generation(cfg);
    auto backends = make_backends(cfg);
    auto templates = navads::prompts::load_templates(cfg.templates_dir);

    navads::preference::PairLoopDeps deps{*backends.client, templates, *backends.embedder,
                                          make_cache_config(cfg), cfg.retrieval, cfg.sampling};

    std::vector<std::string> skipped;
    std::vector<std::optional<navads::preference::PairLoopResult>> results(records.size());
    parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
        if (!records[i].item) return;
        results[i] = navads::preference::run_pair_loop(records[i], cfg.pair_loop, deps);
    });

    std::vector<navads::preference::PreferencePair> all_pairs;
    ordered_json per_query = ordered_json::array();
    std::size_t with_item = 0;
    std::array<std::size_t, 10> histogram{};
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!results[i]) {
            skipped.push_back(records[i].query_id);
            continue;
        }
        ++with_item;
        const auto& res = *results[i];
        ordered_json entry;
        entry["query_id"] = records[i].query_id;
        entry["rounds_used"] = res.rounds_used;
        entry["pairs"] = res.pairs.size();
        if (!res.diagnostic.empty()) entry["diagnostic"] = res.diagnostic;
        per_query.push_back(entry);
        for (const auto& pair : res.pairs) {
            for (double s : {pair.chosen_score, pair.rejected_score}) {
                auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(s * 10.0));
                ++histogram[bin];
            }
            all_pairs.push_back(pair);
        }
    }

    std::string orpo_path = orpo_override.empty() ? cfg.orpo_path : orpo_override;
    std::ofstream orpo_out(orpo_path, std::ios::binary);
    if (!orpo_out) throw navads::DataError("cannot open output file: " + orpo_path);
    std::size_t written = navads::preference::export_orpo(all_pairs, orpo_out);

    ordered_json report;
    report["records"] = records.size();
    report["records_with_item"] = with_item;
    report["skipped_no_item"] = skipped;
    report["pairs_written"] = written;
    report["per_query"] = per_query;
    report["score_histogram"] = histogram;
    report["orpo_path"] = orpo_path;
    emit(report, report_override.empty() ? cfg.report_path : report_override);
    return 0;
}

int cmd_eval_detect(const RunConfig& cfg, const std::string& scores_override,
                    const std::string& mode, std::optional<std::uint64_t> sample_n,
                    const std::string& out_path) {
    auto examples = load_detection(cfg);
    std::string scores_path = scores_override.empty() ? cfg.scores_path : scores_override;
    if (scores_path.empty()) {
        throw navads::ConfigError("scores file required (gateway.scores_path or --scores)");
    }
    auto provider = navads::gateway::OfflineScoreProvider::from_file(scores_path);

    navads::metrics::EvalConfig eval_cfg;
    if (mode == "threshold") {
        eval_cfg.mode = navads::metrics::PredictionMode::threshold;
    } else if (mode == "argmax") {
        eval_cfg.mode = navads::metrics::PredictionMode::argmax;
    } else {
        throw navads::ConfigError("--mode must be threshold or argmax");
    }
    if (sample_n) eval_cfg.sample_n = static_cast<std::size_t>(*sample_n);
    eval_cfg.seed = cfg.seed;

    auto report = navads::metrics::evaluate_detector(examples, provider, eval_cfg);
    emit(navads::metrics::report_to_json(report), out_path);
    return 0;
}

int cmd_eval_stealth(const RunConfig& cfg, const std::string& results_override,
                     const std::string& out_path) {
    std::string path = results_override.empty() ? cfg.stealth_results : results_override;
    if (path.empty()) {
        throw navads::ConfigError("results file required (stealth_results or --results)");
    }
    std::ifstream in(path);
    if (!in) throw navads::DataError("cannot open results file: " + path);

    ordered_json rows = ordered_json::array();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw navads::ParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("model") || !j["model"].is_string()) {
            throw navads::ParseError(lineno, "record must hold a string \"model\"");
        }
        double fnr = 0.0, precision = 0.0, recall = 0.0;
        for (auto [key, dst] : {std::pair<const char*, double*>{"fnr", &fnr},
                                {"precision", &precision},
                                {"recall", &recall}}) {
            if (!j.contains(key) || !j[key].is_number()) {
                throw navads::ParseError(lineno, std::string("missing numeric \"") + key + "\"");
            }
            *dst = j[key].get<double>();
        }
        double stealth;
        try {
            stealth = navads::metrics::stealth_score(fnr, precision, recall);
        } catch (const navads::DataError& e) {
            throw navads::ParseError(lineno, e.what());
        }
        rows.push_back({{"model", j["model"].get<std::string>()},
                        {"fnr", fnr},
                        {"precision", precision},
                        {"recall", recall},
                        {"stealth", stealth}});
    }
    if (rows.empty()) throw navads::DataError("results file holds no records: " + path);

    ordered_json out;
    out["results"] = rows;
    emit(out, out_path);
    return 0;
}

void print_error(const char* type, const std::string& message) {
    ordered_json j;
    j["error"] = {{"type", type}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrieval-grounded covert-ad preference pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    bool verbose = false;
    std::string dataset_flag;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed_flag, "override the config seed");
    app.add_flag("--verbose", verbose, "log gateway traffic to stderr");
    app.add_option("--dataset", dataset_flag, "override the command's input dataset path");

    auto* c_index = app.add_subcommand("index", "build or refresh the per-query index cache");
    std::string index_out;
    c_index->add_option("--out", index_out, "write the summary JSON here instead of stdout");

    auto* c_retrieve = app.add_subcommand("retrieve", "assemble the context for one query");
    std::string retrieve_id;
    std::string retrieve_out;
    c_retrieve->add_option("--query-id", retrieve_id, "query id to retrieve for")->required();
    c_retrieve->add_option("--out", retrieve_out, "write the JSON here instead of stdout");

    auto* c_pairs = app.add_subcommand("pairs", "run the preference-pair loop over the dataset");
    std::string pairs_orpo;
    std::string pairs_report;
    c_pairs->add_option("--orpo-out", pairs_orpo, "override output.orpo_path");
    c_pairs->add_option("--report-out", pairs_report, "override output.report_path");

    auto* c_detect = app.add_subcommand("eval-detect", "score a detector over labeled examples");
    std::string detect_scores;
    std::string detect_mode = "threshold";
    std::optional<std::uint64_t> detect_sample;
    std::string detect_out;
    c_detect->add_option("--scores", detect_scores, "offline scores JSONL");
    c_detect->add_option("--mode", detect_mode, "threshold or argmax");
    c_detect->add_option("--sample-n", detect_sample, "evaluate a seeded sample of this size");
    c_detect->add_option("--out", detect_out, "write the report here instead of stdout");

    auto* c_stealth = app.add_subcommand("eval-stealth", "stealth scores from reported metrics");
    std::string stealth_results;
    std::string stealth_out;
    c_stealth->add_option("--results", stealth_results, "JSONL of {model, fnr, precision, recall}");
    c_stealth->add_option("--out", stealth_out, "write the report here instead of stdout");

    auto* c_version = app.add_subcommand("version", "print version and schema identifiers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("config", e.what());
        return 2;
    }

    try {
        if (c_version->parsed()) return cmd_version();

        RunConfig cfg = load_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (verbose) cfg.verbose = true;
        if (!dataset_flag.empty()) {
            if (c_detect->parsed()) {
                cfg.detection_dataset = dataset_flag;
            } else {
                cfg.generation_dataset = dataset_flag;
            }
        }

        if (c_index->parsed()) return cmd_index(cfg, index_out);
        if (c_retrieve->parsed()) return cmd_retrieve(cfg, retrieve_id, retrieve_out);
        if (c_pairs->parsed()) return cmd_pairs(cfg, pairs_orpo, pairs_report);
        if (c_detect->parsed()) {
            return cmd_eval_detect(cfg, detect_scores, detect_mode, detect_sample, detect_out);
        }
        if (c_stealth->parsed()) return cmd_eval_stealth(cfg, stealth_results, stealth_out);
        print_error("config", "no subcommand given");
        return 2;
    } catch (const navads::ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const navads::GatewayError& e) {
        print_error("gateway", e.what());
        return 4;
    } catch (const navads::DataError& e) {
        print_error("data", e.what());
        return 3;
    } catch (const navads::Error& e) {
        print_error("data", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
