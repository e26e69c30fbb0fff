#include "alliance/providers.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  Response post(const std::string& url,
                const std::map<std::string, std::string>& headers,
                const std::string& body) override {
    // Split "scheme://host[:port]/path".
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw Error("provider base_url must include a scheme: " + url);
    const size_t host_start = scheme_end + 3;
    const size_t path_start = url.find('/', host_start);
    const std::string origin =
        path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_.count(), 0);
    client.set_read_timeout(timeout_.count(), 0);
    httplib::Headers hl;
    for (const auto& [k, v] : headers) hl.emplace(k, v);
    auto result = client.Post(path, hl, body, "application/json");
    if (!result) {
      throw TransportError("HTTP request to " + url +
                           " failed: " + httplib::to_string(result.error()));
    }
    return Response{result->status, result->body};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

ProviderConfig ProviderConfig::load_file(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("provider config " + path + ": " + e.what());
  }
  ProviderConfig config;
  try {
    config.base_url = doc.at("base_url").get<std::string>();
    config.auth_env_var = doc.at("auth_env_var").get<std::string>();
    config.model = doc.at("model").get<std::string>();
    config.request_shape = doc.at("request_shape").dump();
    config.response_text_path = doc.at("response_text_path").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError("provider config " + path + ": " + e.what());
  }
  config.auth_header = doc.value("auth_header", std::string("Authorization"));
  config.auth_prefix = doc.value("auth_prefix", std::string("Bearer "));
  config.rpm_limit = doc.value("rpm_limit", 0.0);
  config.temperature = doc.value("temperature", 1.0);
  config.top_p = doc.value("top_p", 1.0);
  if (doc.contains("extra_headers")) {
    for (const auto& [k, v] : doc["extra_headers"].items())
      config.extra_headers[k] = v.get<std::string>();
  }
  return config;
}

TokenBucket::TokenBucket(double rpm, double burst)
    : rate_per_sec_(rpm / 60.0),
      burst_(burst > 0 ? burst : (rpm > 0 ? rpm : 1)),
      tokens_(burst_),
      last_(Clock::now()) {}

void TokenBucket::refill() {
  const auto now = Clock::now();
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  last_ = now;
  tokens_ = std::min(burst_, tokens_ + elapsed * rate_per_sec_);
}

bool TokenBucket::try_acquire() {
  std::lock_guard<std::mutex> lock(mutex_);
  if (rate_per_sec_ <= 0) return true;
  refill();
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  while (true) {
    double wait_sec = 0;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (rate_per_sec_ <= 0) return;
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_sec = (1.0 - tokens_) / rate_per_sec_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_sec));
  }
}

namespace {

json instantiate_request(const json& shape, const ProviderConfig& config,
                         const std::string& prompt) {
  if (shape.is_string()) {
    const std::string& s = shape.get_ref<const std::string&>();
    if (s == "$prompt") return prompt;
    if (s == "$model") return config.model;
    if (s == "$temperature") return config.temperature;
    if (s == "$top_p") return config.top_p;
    return shape;
  }
  if (shape.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : shape.items()) out[k] = instantiate_request(v, config, prompt);
    return out;
  }
  if (shape.is_array()) {
    json out = json::array();
    for (const json& v : shape) out.push_back(instantiate_request(v, config, prompt));
    return out;
  }
  return shape;
}

const json* walk_path(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  size_t start = 0;
  while (start <= dotted.size()) {
    const size_t dot = dotted.find('.', start);
    const std::string part =
        dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) return nullptr;
    if (node->is_array()) {
      size_t idx = 0;
      try {
        idx = static_cast<size_t>(std::stoul(part));
      } catch (...) {
        return nullptr;
      }
      if (idx >= node->size()) return nullptr;
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(part)) return nullptr;
      node = &(*node)[part];
    } else {
      return nullptr;
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

}  // namespace

HttpProviderRater::HttpProviderRater(ProviderConfig config,
                                     std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  const char* key = std::getenv(config_.auth_env_var.c_str());
  if (!key || !*key) {
    throw Error("provider API key environment variable is not set: " +
                config_.auth_env_var);
  }
  api_key_ = key;
  if (config_.rpm_limit > 0)
    limiter_ = std::make_unique<TokenBucket>(config_.rpm_limit);
}

std::string HttpProviderRater::complete(const RatingJob& job, const std::string& prompt,
                                        int attempt) {
  (void)job;
  (void)attempt;  // resampling comes from provider-side temperature
  if (limiter_) limiter_->acquire();

  json shape;
  try {
    shape = json::parse(config_.request_shape);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("provider request_shape is not valid JSON: ") +
                      e.what());
  }
  const json body = instantiate_request(shape, config_, prompt);

  std::map<std::string, std::string> headers = config_.extra_headers;
  headers[config_.auth_header] = config_.auth_prefix + api_key_;

  const auto response = transport_->post(config_.base_url, headers, body.dump());
  if (response.status < 200 || response.status >= 300) {
    throw TransportError("provider returned HTTP " + std::to_string(response.status) +
                         ": " + response.body.substr(0, 200));
  }
  json doc;
  try {
    doc = json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("provider response is not valid JSON: ") + e.what());
  }
  const json* text = walk_path(doc, config_.response_text_path);
  if (!text || !text->is_string()) {
    throw TransportError("provider response missing text at path: " +
                         config_.response_text_path);
  }
  return text->get<std::string>();
}

}  // namespace alliance
