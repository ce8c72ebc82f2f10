#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tqa/answer_controller.hpp"
#include "tqa/errors.hpp"
#include "tqa/remote_backend.hpp"
#include "tqa/teaching_session.hpp"

namespace tqa {

enum class BackendKind { Symbolic, Remote };

/// Key-value configuration, one `key = value` per line, `#` comments:
///
///   listen = 127.0.0.1:8080
///   memory_path = memory.jsonl
///   backend = symbolic            # or remote
///   kb_path = data/penny_kb.json
///   remote_url = http://127.0.0.1:8090
///   remote_timeout_ms = 5000
///   remote_max_in_flight = 8
///   autosave = true
///   session_idle_seconds = 3600
///   retrieval_r = 5
///   strategy = F                  # F | Q | QF | RQF
///   bm25_k1 = 1.2
///   bm25_b = 0.75
///   belief_threshold = 0.5
///   entailment_threshold = 0.5
///   candidate_n = 4
///   max_premises = 3
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> memory_path;
    BackendKind backend = BackendKind::Symbolic;
    std::filesystem::path kb_path = "data/penny_kb.json";
    RemoteConfig remote;
    bool autosave = false;
    std::chrono::seconds session_idle{3600};
    ControllerConfig controller;

    void validate() const;
};

/// Throws Error(FormatError, line) on unknown keys or bad values.
ServiceConfig parse_service_config(std::string_view text);
ServiceConfig load_service_config(const std::filesystem::path& path);

std::unique_ptr<ReasoningBackend> make_backend(const ServiceConfig& config);

/// HTTP status for an error code: 400 malformed request, 404 unknown
/// session or fact, 409 closed session, 422 rejected action, 503 backend down.
int http_status(ErrorCode code);

struct ApiRequest {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> query;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// The HTTP API without the transport, so it can be driven in-process.
/// Concurrent calls are safe; calls on one session run one at a time.
class ApiService {
  public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    ApiService(ServiceConfig config, const ReasoningBackend& backend, MemoryStore& memory, Clock clock = {});

    ApiResponse handle(const ApiRequest& request);

    std::size_t session_count() const;
    /// Drops sessions idle longer than the configured limit; returns how many.
    std::size_t expire_idle();

  private:
    struct Entry {
        std::mutex mutex;
        SessionState state;
        std::chrono::steady_clock::time_point last_used;
    };

    ApiResponse dispatch(const ApiRequest& request);
    ApiResponse create_session(const nlohmann::json& body);
    ApiResponse feedback(const std::string& id, const nlohmann::json& body);
    ApiResponse get_session(const std::string& id);
    ApiResponse abandon(const std::string& id);
    ApiResponse memory_query(const ApiRequest& request);
    ApiResponse memory_add(const nlohmann::json& body);
    ApiResponse memory_delete(const std::string& id);
    ApiResponse health();
    std::shared_ptr<Entry> find_session(const std::string& id);
    void autosave();

    ServiceConfig config_;
    const ReasoningBackend& backend_;
    MemoryStore& memory_;
    Clock clock_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t session_counter_ = 0;
    std::mutex save_mutex_;
};

/// Serves an ApiService over HTTP.
class HttpServer {
  public:
    explicit HttpServer(ApiService& api);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Background thread; port 0 picks a free port. Returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks until stop().
    void run(const std::string& host, int port);
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tqa
