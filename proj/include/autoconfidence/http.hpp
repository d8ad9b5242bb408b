#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace autoconfidence::http {

using Headers = std::map<std::string, std::string>;

struct Response {
  int status = 0;
  std::string body;
};

// Minimal blocking HTTP surface. Implementations throw TransportError when no
// response could be obtained; HTTP error statuses are returned, not thrown.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response get(const std::string& url, const Headers& headers) = 0;
  virtual Response post(const std::string& url, const std::string& body, const std::string& content_type,
                        const Headers& headers) = 0;
};

// cpp-httplib backed transport. https URLs need OpenSSL support at build time.
class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::seconds(60));
  Response get(const std::string& url, const Headers& headers) override;
  Response post(const std::string& url, const std::string& body, const std::string& content_type,
                const Headers& headers) override;

 private:
  std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

// Runs `call` until it succeeds, retrying TransportError and 5xx/429 statuses with
// exponential backoff. Throws TransportError after the last attempt.
Response with_retry(const std::function<Response()>& call, const RetryPolicy& policy,
                    const std::string& what);

// Enforces a minimum interval between consecutive calls across threads.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval) : min_interval_(min_interval) {}
  void acquire();

 private:
  std::chrono::milliseconds min_interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_{};
  bool started_ = false;
};

}  // namespace autoconfidence::http
