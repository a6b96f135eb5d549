#include "trajscene/remote.hpp"

#include <cstdlib>

#include <httplib.h>

namespace trajscene::remote {

void EndpointConfig::validate() const {
  parse_url(url);
  if (model_id.empty()) throw ConfigError("remote endpoint needs a model_id");
  if (token_env.empty()) throw ConfigError("remote endpoint needs token_env (environment variable name)");
  if (!(timeout_s > 0)) throw ConfigError("remote timeout_s must be > 0");
  if (retries < 0) throw ConfigError("remote retries must be >= 0");
  if (backoff_s < 0) throw ConfigError("remote backoff_s must be >= 0");
  if (max_in_flight < 1) throw ConfigError("remote max_in_flight must be >= 1");
  if (requests_per_minute < 1) throw ConfigError("remote requests_per_minute must be >= 1");
}

std::string bearer_token(const EndpointConfig& cfg) {
  if (cfg.token_env.empty()) throw ConfigError("remote endpoint needs token_env");
  const char* v = std::getenv(cfg.token_env.c_str());
  if (!v || !*v) {
    throw ConfigError("environment variable " + cfg.token_env + " holding the API token is not set");
  }
  return v;
}

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint url lacks a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported url scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.scheme_host_port.size() <= scheme_end + 3) throw ConfigError("endpoint url lacks a host: " + url);
  return out;
}

std::string post_json(const EndpointConfig& cfg, const std::string& token, const std::string& body) {
  const ParsedUrl u = parse_url(cfg.url);
  httplib::Client cli(u.scheme_host_port);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  cli.set_bearer_token_auth(token);
  auto res = cli.Post(u.path, body, "application/json");
  if (!res) {
    throw TransportError("request to " + cfg.url + " failed: " + httplib::to_string(res.error()), 1, true);
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
    throw TransportError("request to " + cfg.url + " returned HTTP " + std::to_string(res->status), 1,
                         retryable);
  }
  return res->body;
}

RequestGate::RequestGate(int max_in_flight, int requests_per_minute)
    : max_in_flight_(std::max(1, max_in_flight)), per_minute_(std::max(1, requests_per_minute)) {}

void RequestGate::acquire() {
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = Clock::now();
    while (!started_.empty() && now - started_.front() >= std::chrono::minutes(1)) started_.pop_front();
    if (in_flight_ < max_in_flight_ && static_cast<int>(started_.size()) < per_minute_) {
      ++in_flight_;
      started_.push_back(now);
      return;
    }
    if (in_flight_ >= max_in_flight_) {
      cv_.wait(lock);
    } else {
      cv_.wait_until(lock, started_.front() + std::chrono::minutes(1));
    }
  }
}

void RequestGate::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

}  // namespace trajscene::remote
