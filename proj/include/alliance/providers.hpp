#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "alliance/rater.hpp"

namespace alliance {

// Minimal HTTP surface the provider client needs; production code uses the
// bundled client, tests inject a scripted transport.
class HttpTransport {
 public:
  struct Response {
    int status = 0;
    std::string body;
  };

  virtual ~HttpTransport() = default;
  virtual Response post(const std::string& url,
                        const std::map<std::string, std::string>& headers,
                        const std::string& body) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

// Provider description for any chat-completion-style HTTP API. The request
// body is a JSON template whose string values "$prompt", "$model",
// "$temperature" and "$top_p" are substituted per call;
// response_text_path is a dotted path ("choices.0.message.content") into the
// response JSON. The API key is read from auth_env_var, never from the file.
struct ProviderConfig {
  std::string base_url;  // full endpoint URL
  std::string auth_env_var;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string model;
  std::string request_shape;       // JSON text with $-placeholders
  std::string response_text_path;  // dotted path to the completion text
  std::map<std::string, std::string> extra_headers;
  double rpm_limit = 0;  // requests per minute; 0 = unlimited
  double temperature = 1.0;
  double top_p = 1.0;

  static ProviderConfig load_file(const std::string& path);
};

// Simple requests-per-minute limiter shared by a backend's callers.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  // rpm = sustained requests per minute; burst defaults to rpm.
  explicit TokenBucket(double rpm, double burst = 0);

  // Blocks until a token is available (no-op when unlimited).
  void acquire();

  // Non-blocking variant for tests: consumes a token if available now.
  bool try_acquire();

 private:
  void refill();

  double rate_per_sec_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

// Chat-completion backend over HTTP. Reads the API key at construction and
// fails fast when the environment variable is missing. HTTP-level failures
// surface as TransportError so the batch runner's retry policy applies.
class HttpProviderRater final : public RaterBackend {
 public:
  HttpProviderRater(ProviderConfig config, std::unique_ptr<HttpTransport> transport);

  std::string complete(const RatingJob& job, const std::string& prompt,
                       int attempt) override;
  std::string model_name() const override { return config_.model; }
  BackendKind kind() const override { return BackendKind::HttpProvider; }
  double temperature() const override { return config_.temperature; }
  double top_p() const override { return config_.top_p; }

 private:
  ProviderConfig config_;
  std::string api_key_;
  std::unique_ptr<HttpTransport> transport_;
  std::unique_ptr<TokenBucket> limiter_;
};

}  // namespace alliance
