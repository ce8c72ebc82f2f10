#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "tqa/entailment.hpp"

namespace tqa {

struct RemoteConfig {
    std::string base_url;  ///< e.g. "http://127.0.0.1:8090"
    std::chrono::milliseconds timeout{5000};
    std::size_t max_in_flight = 8;
    void validate() const;
};

/// Client for a model service speaking the /v1 JSON protocol. Every contract
/// call is one POST; transport failures, timeouts, 5xx replies and malformed
/// bodies all raise Error(BackendUnavailable). At most max_in_flight requests
/// run at once; extra callers wait.
class HttpBackend final : public ReasoningBackend {
  public:
    explicit HttpBackend(RemoteConfig config);
    ~HttpBackend() override;

    std::string name() const override { return "remote"; }
    std::string declarativize(std::string_view question, std::string_view choice) const override;
    std::vector<std::string> generate_candidates(std::string_view question, std::size_t n) const override;
    std::optional<Proof> generate_proof(const ProofRequest& request) const override;
    double belief_score(std::string_view statement, std::span<const std::string> context) const override;
    double entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const override;
    std::string negate(std::string_view statement) const override;
    double direct_answer_score(const Hypothesis& hypothesis) const override;

    const RemoteConfig& config() const { return config_; }

  private:
    struct Impl;
    RemoteConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// Serves any backend over the /v1 protocol. Used for tests and as a
/// stand-alone process in front of the symbolic backend.
class ModelService {
  public:
    explicit ModelService(const ReasoningBackend& backend);
    ~ModelService();
    ModelService(const ModelService&) = delete;
    ModelService& operator=(const ModelService&) = delete;

    /// Binds and starts serving on a background thread. Port 0 picks a free
    /// port. Returns the bound port; throws Error(IoFailure) on bind failure.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks serving on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();
    int port() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tqa
