#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "trajscene/error.hpp"

namespace trajscene::remote {

/// Settings shared by the reasoner and embedding endpoints. The bearer token is
/// never stored in configuration; only the name of the environment variable is.
struct EndpointConfig {
  std::string url;  // scheme://host[:port]/path
  std::string model_id;
  std::string token_env;
  double timeout_s = 60.0;
  int retries = 2;
  double backoff_s = 0.5;
  int max_in_flight = 4;
  int requests_per_minute = 60;

  void validate() const;
};

/// Reads the bearer token named by `cfg.token_env`. Throws ConfigError when unset.
std::string bearer_token(const EndpointConfig& cfg);

struct ParsedUrl {
  std::string scheme_host_port;  // e.g. "https://api.example.com:443"
  std::string path;              // e.g. "/v1/complete"
};
ParsedUrl parse_url(const std::string& url);

/// POSTs a JSON body and returns the response body. Non-2xx responses and
/// connection failures raise TransportError with attempts = 1; 408, 429 and
/// 5xx are marked retryable.
std::string post_json(const EndpointConfig& cfg, const std::string& token, const std::string& body);

/// Calls `fn` until it succeeds, a non-retryable TransportError is raised, or
/// `retries` extra attempts are exhausted. `attempts` receives the number of
/// calls made.
template <typename Fn>
auto with_retries(Fn&& fn, int retries, double backoff_s, int& attempts) -> decltype(fn()) {
  attempts = 0;
  for (;;) {
    ++attempts;
    try {
      return fn();
    } catch (const TransportError& e) {
      if (!e.retryable() || attempts > retries) {
        throw TransportError(e.what(), attempts, e.retryable());
      }
    }
    if (backoff_s > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff_s * attempts));
    }
  }
}

/// Caps concurrent requests and requests started per rolling minute.
class RequestGate {
 public:
  using Clock = std::chrono::steady_clock;

  RequestGate(int max_in_flight, int requests_per_minute);

  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int max_in_flight_;
  int per_minute_;
  int in_flight_ = 0;
  std::deque<Clock::time_point> started_;
};

/// Runs `fn(i)` for i in [0, n) on up to `gate` in-flight workers. Results are
/// stored by index so completion order never affects the output.
template <typename Result>
std::vector<Result> run_gated(std::size_t n, const std::function<Result(std::size_t)>& fn,
                              RequestGate& gate, int workers) {
  std::vector<Result> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex next_mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(next_mu);
        if (next >= n) return;
        i = next++;
      }
      gate.acquire();
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      gate.release();
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::max(1, workers); ++w) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace trajscene::remote
