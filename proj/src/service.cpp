#include "tqa/service.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "tqa/errors.hpp"
#include "tqa/json_io.hpp"
#include "tqa/symbolic_backend.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

template <class T>
T parse_number(const std::string& value, const std::string& key)
{
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            out = static_cast<T>(std::stod(value, &used));
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw Error(ErrorCode::FormatError, "'" + key + "' needs a number, got '" + value + "'");
        }
    } else {
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw Error(ErrorCode::FormatError, "'" + key + "' needs a non-negative integer, got '" + value + "'");
        }
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key)
{
    const std::string v = to_lower(value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw Error(ErrorCode::FormatError, "'" + key + "' needs true or false, got '" + value + "'");
}

ApiResponse error_response(const Error& e)
{
    return {http_status(e.code()), {{"code", std::string(code_name(e.code()))}, {"message", e.what()}}};
}

json parse_body(const std::string& body)
{
    if (trim(body).empty()) return json::object();
    try {
        json j = json::parse(body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

std::vector<std::string> split_path(const std::string& path)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

}  // namespace

void ServiceConfig::validate() const
{
    if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port must lie in [0,65535]");
    if (backend == BackendKind::Remote) remote.validate();
    if (session_idle.count() <= 0) throw Error(ErrorCode::InvalidArgument, "session_idle_seconds must be positive");
    controller.validate();
}

ServiceConfig parse_service_config(std::string_view text)
{
    ServiceConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool remote_url_set = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::FormatError, "expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "listen") {
                const auto colon = value.rfind(':');
                if (colon == std::string::npos) throw Error(ErrorCode::FormatError, "listen needs host:port");
                c.host = value.substr(0, colon);
                c.port = parse_number<int>(value.substr(colon + 1), key);
            } else if (key == "memory_path") {
                if (value.empty()) c.memory_path.reset(); else c.memory_path = value;
            } else if (key == "backend") {
                if (value == "symbolic") c.backend = BackendKind::Symbolic;
                else if (value == "remote") c.backend = BackendKind::Remote;
                else throw Error(ErrorCode::FormatError, "backend must be 'symbolic' or 'remote'");
            } else if (key == "kb_path") {
                c.kb_path = value;
            } else if (key == "remote_url") {
                c.remote.base_url = value;
                remote_url_set = true;
            } else if (key == "remote_timeout_ms") {
                c.remote.timeout = std::chrono::milliseconds(parse_number<long>(value, key));
            } else if (key == "remote_max_in_flight") {
                c.remote.max_in_flight = parse_number<std::size_t>(value, key);
            } else if (key == "autosave") {
                c.autosave = parse_bool(value, key);
            } else if (key == "session_idle_seconds") {
                c.session_idle = std::chrono::seconds(parse_number<long>(value, key));
            } else if (key == "retrieval_r") {
                c.controller.retrieval.r = parse_number<std::size_t>(value, key);
            } else if (key == "strategy") {
                c.controller.retrieval.strategy = parse_strategy(value);
            } else if (key == "bm25_k1") {
                c.controller.retrieval.params.k1 = parse_number<double>(value, key);
            } else if (key == "bm25_b") {
                c.controller.retrieval.params.b = parse_number<double>(value, key);
            } else if (key == "belief_threshold") {
                c.controller.belief_threshold = parse_number<double>(value, key);
            } else if (key == "entailment_threshold") {
                c.controller.entailment_threshold = parse_number<double>(value, key);
            } else if (key == "candidate_n") {
                c.controller.candidate_n = parse_number<std::size_t>(value, key);
            } else if (key == "max_premises") {
                c.controller.max_premises = parse_number<std::size_t>(value, key);
            } else {
                throw Error(ErrorCode::FormatError, "unknown key '" + key + "'");
            }
        } catch (const Error& e) {
            if (e.line()) throw;
            throw Error(ErrorCode::FormatError, e.what(), line_no);
        }
    }
    if (c.backend == BackendKind::Remote && !remote_url_set) {
        throw Error(ErrorCode::FormatError, "backend = remote needs remote_url");
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::FormatError, e.what());
    }
    return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_service_config(ss.str());
}

std::unique_ptr<ReasoningBackend> make_backend(const ServiceConfig& config)
{
    if (config.backend == BackendKind::Remote) return std::make_unique<HttpBackend>(config.remote);
    return std::make_unique<SymbolicBackend>(SymbolicKB::load(config.kb_path));
}

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidQuestion:
    case ErrorCode::InvalidArgument:
    case ErrorCode::FormatError: return 400;
    case ErrorCode::SessionNotFound:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionClosed: return 409;
    case ErrorCode::BadIndex:
    case ErrorCode::EmptyFact:
    case ErrorCode::NotConfirmed:
    case ErrorCode::EmptyPremises:
    case ErrorCode::UnparseableStatement:
    case ErrorCode::NoCandidates:
    case ErrorCode::UnknownGoldId:
    case ErrorCode::InvariantViolation: return 422;
    case ErrorCode::BackendUnavailable: return 503;
    case ErrorCode::IoFailure: return 500;
    }
    return 500;
}

// ---- ApiService ----

ApiService::ApiService(ServiceConfig config, const ReasoningBackend& backend, MemoryStore& memory, Clock clock)
    : config_(std::move(config)), backend_(backend), memory_(memory), clock_(std::move(clock))
{
    if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
    config_.validate();
}

ApiResponse ApiService::handle(const ApiRequest& request)
{
    try {
        expire_idle();
        return dispatch(request);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return {500, {{"code", "internal"}, {"message", e.what()}}};
    }
}

ApiResponse ApiService::dispatch(const ApiRequest& r)
{
    const auto parts = split_path(r.path);
    const auto& m = r.method;
    if (parts.empty() || parts[0] != "api") {
        throw Error(ErrorCode::NotFound, "no route for " + r.path);
    }
    if (parts.size() == 2 && parts[1] == "health" && m == "GET") return health();
    if (parts.size() >= 2 && parts[1] == "sessions") {
        if (parts.size() == 2 && m == "POST") return create_session(parse_body(r.body));
        if (parts.size() == 3 && m == "GET") return get_session(parts[2]);
        if (parts.size() == 3 && m == "DELETE") return abandon(parts[2]);
        if (parts.size() == 4 && parts[3] == "feedback" && m == "POST") return feedback(parts[2], parse_body(r.body));
    }
    if (parts.size() >= 2 && parts[1] == "memory") {
        if (parts.size() == 2 && m == "GET") return memory_query(r);
        if (parts.size() == 2 && m == "POST") return memory_add(parse_body(r.body));
        if (parts.size() == 3 && m == "DELETE") return memory_delete(parts[2]);
    }
    throw Error(ErrorCode::NotFound, "no route for " + m + " " + r.path);
}

ApiResponse ApiService::health()
{
    return {200,
            {{"status", "ok"},
             {"backend", backend_.name()},
             {"memory_size", memory_.size()},
             {"sessions", session_count()}}};
}

ApiResponse ApiService::create_session(const json& body)
{
    if (!body.contains("question") || !body["question"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "body needs a string 'question'");
    }
    std::vector<std::string> choices;
    if (body.contains("choices") && !body["choices"].is_null()) {
        if (!body["choices"].is_array()) throw Error(ErrorCode::InvalidArgument, "'choices' must be an array");
        for (const auto& c : body["choices"]) {
            if (!c.is_string()) throw Error(ErrorCode::InvalidArgument, "choices must be strings");
            choices.push_back(c.get<std::string>());
        }
    }
    const std::string question = body["question"].get<std::string>();
    std::uint64_t counter;
    {
        std::lock_guard lock(sessions_mutex_);
        counter = session_counter_++;
    }
    auto entry = std::make_shared<Entry>();
    entry->state = start_session(question, choices, memory_, backend_, config_.controller,
                                 make_session_id(question, choices, counter));
    entry->last_used = clock_();
    json out = to_json(entry->state);
    {
        std::lock_guard lock(sessions_mutex_);
        sessions_[entry->state.session_id] = entry;
    }
    return {200, out};
}

std::shared_ptr<ApiService::Entry> ApiService::find_session(const std::string& id)
{
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    return it->second;
}

ApiResponse ApiService::get_session(const std::string& id)
{
    auto entry = find_session(id);
    std::lock_guard lock(entry->mutex);
    entry->last_used = clock_();
    return {200, to_json(entry->state)};
}

ApiResponse ApiService::feedback(const std::string& id, const json& body)
{
    if (!body.contains("action")) throw Error(ErrorCode::InvalidArgument, "body needs an 'action'");
    const FeedbackAction action = action_from_json(body["action"]);
    auto entry = find_session(id);
    std::lock_guard lock(entry->mutex);
    entry->last_used = clock_();
    entry->state = apply_feedback(entry->state, action, memory_, backend_, config_.controller);
    autosave();
    return {200, to_json(entry->state)};
}

ApiResponse ApiService::abandon(const std::string& id)
{
    auto entry = find_session(id);
    std::lock_guard lock(entry->mutex);
    entry->state = abandon_session(entry->state);
    entry->last_used = clock_();
    return {200, to_json(entry->state)};
}

ApiResponse ApiService::memory_query(const ApiRequest& r)
{
    auto q = r.query.find("query");
    if (q == r.query.end() || trim(q->second).empty()) {
        json facts = json::array();
        for (const auto& f : memory_.facts()) facts.push_back(to_json(f));
        return {200, {{"facts", std::move(facts)}, {"blocked", memory_.blocked_size()}}};
    }
    RetrievalConfig rc = config_.controller.retrieval;
    if (auto k = r.query.find("k"); k != r.query.end()) {
        rc.r = parse_number<std::size_t>(k->second, "k");
        if (rc.r == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
    }
    if (auto s = r.query.find("strategy"); s != r.query.end()) rc.strategy = parse_strategy(s->second);
    json results = json::array();
    for (const auto& hit : memory_.retrieve(q->second, rc)) results.push_back(to_json(hit));
    return {200, {{"query", q->second}, {"k", rc.r}, {"results", std::move(results)}}};
}

ApiResponse ApiService::memory_add(const json& body)
{
    if (!body.contains("text") || !body["text"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "body needs a string 'text'");
    }
    FactRecord rec = memory_.add_fact(body["text"].get<std::string>(), Provenance::User);
    autosave();
    return {200, to_json(rec)};
}

ApiResponse ApiService::memory_delete(const std::string& id)
{
    if (!memory_.remove_fact(id)) throw Error(ErrorCode::NotFound, "no fact '" + id + "'");
    autosave();
    return {200, {{"deleted", id}}};
}

std::size_t ApiService::session_count() const
{
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

std::size_t ApiService::expire_idle()
{
    const auto now = clock_();
    std::lock_guard lock(sessions_mutex_);
    return std::erase_if(sessions_, [&](const auto& kv) {
        std::unique_lock entry_lock(kv.second->mutex, std::try_to_lock);
        // A session in use is not idle.
        return entry_lock.owns_lock() && now - kv.second->last_used > config_.session_idle;
    });
}

void ApiService::autosave()
{
    if (!config_.autosave || !config_.memory_path) return;
    std::lock_guard lock(save_mutex_);
    memory_.save(*config_.memory_path);
}

// ---- HttpServer ----

struct HttpServer::Impl {
    explicit Impl(ApiService& a) : api(a) {}
    ApiService& api;
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(ApiService& api) : impl_(std::make_unique<Impl>(api))
{
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r{req.method, req.path, req.body, {}};
        for (const auto& [k, v] : req.params) r.query[k] = v;
        ApiResponse out = impl_->api.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    const std::string any = R"(/api(/.*)?)";
    impl_->server.Get(any, handler);
    impl_->server.Post(any, handler);
    impl_->server.Delete(any, handler);
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::start(const std::string& host, int port)
{
    auto& s = impl_->server;
    const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&s] { s.listen_after_bind(); });
    s.wait_until_ready();
    return bound;
}

void HttpServer::run(const std::string& host, int port)
{
    if (!impl_->server.listen(host, port)) {
        throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
    }
}

void HttpServer::stop()
{
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tqa
