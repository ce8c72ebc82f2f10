#include "tqa/remote_backend.hpp"

#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tqa/errors.hpp"
#include "tqa/json_io.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

constexpr std::ptrdiff_t kMaxInFlight = 1024;

std::optional<ErrorCode> code_from_name(const std::string& name)
{
    for (ErrorCode c : {ErrorCode::UnparseableStatement, ErrorCode::NoCandidates, ErrorCode::EmptyPremises,
                        ErrorCode::InvalidArgument, ErrorCode::InvalidQuestion}) {
        if (code_name(c) == name) return c;
    }
    return std::nullopt;
}

double score_field(const json& body, const char* field)
{
    if (!body.contains(field) || !body[field].is_number()) {
        throw Error(ErrorCode::BackendUnavailable, std::string("model service reply lacks '") + field + "'");
    }
    const double s = body[field].get<double>();
    if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorCode::BackendUnavailable, std::string("model service sent '") + field + "' outside [0,1]");
    }
    return s;
}

}  // namespace

void RemoteConfig::validate() const
{
    if (base_url.empty()) throw Error(ErrorCode::InvalidArgument, "remote backend needs a base URL");
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidArgument, "remote timeout must be positive");
    if (max_in_flight == 0 || max_in_flight > static_cast<std::size_t>(kMaxInFlight)) {
        throw Error(ErrorCode::InvalidArgument, "max_in_flight must lie in [1,1024]");
    }
}

struct HttpBackend::Impl {
    explicit Impl(std::size_t slots) : slots(static_cast<std::ptrdiff_t>(slots)) {}
    std::counting_semaphore<kMaxInFlight> slots;
};

HttpBackend::HttpBackend(RemoteConfig config) : config_(std::move(config))
{
    config_.validate();
    impl_ = std::make_unique<Impl>(config_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

namespace {

json post(const RemoteConfig& config, std::counting_semaphore<kMaxInFlight>& slots, const std::string& path,
          const json& body)
{
    slots.acquire();
    struct Release {
        std::counting_semaphore<kMaxInFlight>& s;
        ~Release() { s.release(); }
    } release{slots};

    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable,
                    "model service " + config.base_url + path + ": " + httplib::to_string(res.error()));
    }
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::BackendUnavailable, "model service " + path + " sent a non-JSON body");
    }
    if (res->status >= 400 && res->status < 500 && reply.contains("code") && reply["code"].is_string()) {
        if (auto code = code_from_name(reply["code"].get<std::string>())) {
            throw Error(*code, reply.value("message", std::string("model service rejected the request")));
        }
    }
    if (res->status != 200) {
        throw Error(ErrorCode::BackendUnavailable,
                    "model service " + path + " answered HTTP " + std::to_string(res->status));
    }
    return reply;
}

std::string string_field(const json& body, const char* field)
{
    if (!body.contains(field) || !body[field].is_string()) {
        throw Error(ErrorCode::BackendUnavailable, std::string("model service reply lacks '") + field + "'");
    }
    return body[field].get<std::string>();
}

}  // namespace

std::string HttpBackend::declarativize(std::string_view question, std::string_view choice) const
{
    return string_field(post(config_, impl_->slots, "/v1/declarativize", {{"question", question}, {"choice", choice}}),
                        "hypothesis");
}

std::vector<std::string> HttpBackend::generate_candidates(std::string_view question, std::size_t n) const
{
    json reply = post(config_, impl_->slots, "/v1/candidates", {{"question", question}, {"n", n}});
    if (!reply.contains("candidates") || !reply["candidates"].is_array()) {
        throw Error(ErrorCode::BackendUnavailable, "model service reply lacks 'candidates'");
    }
    std::vector<std::string> out;
    for (const auto& c : reply["candidates"]) {
        if (!c.is_string()) throw Error(ErrorCode::BackendUnavailable, "candidate is not a string");
        if (out.size() < n && std::find(out.begin(), out.end(), c.get<std::string>()) == out.end()) {
            out.push_back(c.get<std::string>());
        }
    }
    if (out.empty()) throw Error(ErrorCode::NoCandidates, "model service produced no candidates");
    return out;
}

std::optional<Proof> HttpBackend::generate_proof(const ProofRequest& request) const
{
    request.validate();
    json body = {{"hypothesis", request.hypothesis.text},
                 {"question", request.question_text},
                 {"choice", request.choice_text},
                 {"context", request.context},
                 {"max_premises", request.max_premises}};
    body["forced_first"] = request.forced_first_premise ? json(*request.forced_first_premise) : json(nullptr);
    json reply = post(config_, impl_->slots, "/v1/proof", body);
    if (reply.value("no_proof", false)) return std::nullopt;
    Proof p;
    try {
        p.premises = reply.at("premises").get<std::vector<std::string>>();
        p.premise_scores = reply.at("premise_scores").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::BackendUnavailable, "model service sent a malformed proof");
    }
    p.entailment_score = score_field(reply, "entailment_score");
    if (p.premises.empty() || p.premises.size() != p.premise_scores.size()) {
        throw Error(ErrorCode::BackendUnavailable, "model service proof needs one score per premise");
    }
    for (double s : p.premise_scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::BackendUnavailable, "premise score outside [0,1]");
    }
    if (request.forced_first_premise && p.premises.front() != *request.forced_first_premise) {
        throw Error(ErrorCode::BackendUnavailable, "model service ignored the forced first premise");
    }
    p.hypothesis_text = request.hypothesis.text;
    p.forced = request.forced_first_premise.has_value();
    p.overall_score = compose_score(p.entailment_score, p.premise_scores);
    return p;
}

double HttpBackend::belief_score(std::string_view statement, std::span<const std::string> context) const
{
    json ctx(std::vector<std::string>(context.begin(), context.end()));
    return score_field(post(config_, impl_->slots, "/v1/belief", {{"statement", statement}, {"context", ctx}}),
                       "score");
}

double HttpBackend::entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const
{
    if (premises.empty()) throw Error(ErrorCode::EmptyPremises, "entailment check needs at least one premise");
    json ps(std::vector<std::string>(premises.begin(), premises.end()));
    return score_field(post(config_, impl_->slots, "/v1/entailment", {{"premises", ps}, {"hypothesis", hypothesis}}),
                       "score");
}

std::string HttpBackend::negate(std::string_view statement) const
{
    return string_field(post(config_, impl_->slots, "/v1/negate", {{"statement", statement}}), "statement");
}

double HttpBackend::direct_answer_score(const Hypothesis& hypothesis) const
{
    return score_field(post(config_, impl_->slots, "/v1/direct", {{"hypothesis", hypothesis.text}}), "score");
}

// ---- ModelService ----

struct ModelService::Impl {
    explicit Impl(const ReasoningBackend& b) : backend(b) {}
    const ReasoningBackend& backend;
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

namespace {

void reply_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F handler)
{
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = json::parse(req.body);
            reply_json(res, 200, handler(body));
        } catch (const json::exception& e) {
            reply_json(res, 400, {{"code", "invalid_argument"}, {"message", e.what()}});
        } catch (const Error& e) {
            const int status = e.code() == ErrorCode::BackendUnavailable ? 503 : is_user_error(e.code()) ? 422 : 500;
            reply_json(res, status, {{"code", std::string(code_name(e.code()))}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply_json(res, 500, {{"code", "internal"}, {"message", e.what()}});
        }
    };
}

}  // namespace

ModelService::ModelService(const ReasoningBackend& backend) : impl_(std::make_unique<Impl>(backend))
{
    auto& s = impl_->server;
    const ReasoningBackend& b = impl_->backend;
    s.Post("/v1/declarativize", guarded([&b](const json& j) {
               return json{{"hypothesis", b.declarativize(j.at("question").get<std::string>(),
                                                          j.at("choice").get<std::string>())}};
           }));
    s.Post("/v1/candidates", guarded([&b](const json& j) {
               return json{{"candidates", b.generate_candidates(j.at("question").get<std::string>(),
                                                                j.value("n", std::size_t{4}))}};
           }));
    s.Post("/v1/proof", guarded([&b](const json& j) {
               ProofRequest req;
               req.hypothesis.text = j.at("hypothesis").get<std::string>();
               req.question_text = j.value("question", std::string());
               req.choice_text = j.value("choice", std::string());
               req.context = j.value("context", std::vector<std::string>{});
               if (j.contains("forced_first") && j["forced_first"].is_string()) {
                   req.forced_first_premise = j["forced_first"].get<std::string>();
               }
               req.max_premises = j.value("max_premises", std::size_t{3});
               auto proof = b.generate_proof(req);
               if (!proof) return json{{"no_proof", true}};
               return json{{"premises", proof->premises},
                           {"premise_scores", proof->premise_scores},
                           {"entailment_score", proof->entailment_score}};
           }));
    s.Post("/v1/belief", guarded([&b](const json& j) {
               const auto ctx = j.value("context", std::vector<std::string>{});
               return json{{"score", b.belief_score(j.at("statement").get<std::string>(), ctx)}};
           }));
    s.Post("/v1/entailment", guarded([&b](const json& j) {
               const auto ps = j.at("premises").get<std::vector<std::string>>();
               return json{{"score", b.entailment_score(ps, j.at("hypothesis").get<std::string>())}};
           }));
    s.Post("/v1/negate", guarded([&b](const json& j) {
               return json{{"statement", b.negate(j.at("statement").get<std::string>())}};
           }));
    s.Post("/v1/direct", guarded([&b](const json& j) {
               Hypothesis h{j.at("hypothesis").get<std::string>(), "", ""};
               return json{{"score", b.direct_answer_score(h)}};
           }));
}

ModelService::~ModelService()
{
    stop();
}

int ModelService::start(const std::string& host, int port)
{
    auto& s = impl_->server;
    impl_->port = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (impl_->port <= 0) {
        throw Error(ErrorCode::IoFailure, "cannot bind model service to " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([&s] { s.listen_after_bind(); });
    s.wait_until_ready();
    return impl_->port;
}

void ModelService::run(const std::string& host, int port)
{
    impl_->port = port;
    if (!impl_->server.listen(host, port)) {
        throw Error(ErrorCode::IoFailure, "cannot bind model service to " + host + ":" + std::to_string(port));
    }
}

void ModelService::stop()
{
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ModelService::port() const
{
    return impl_->port;
}

}  // namespace tqa
