#include "autoconfidence/http.hpp"

#include <thread>

#include <httplib.h>

#include "autoconfidence/error.hpp"

namespace autoconfidence::http {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // path and query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("url without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers to_httplib(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

HttplibTransport::HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

Response HttplibTransport::get(const std::string& url, const Headers& headers) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Get(parts.target, to_httplib(headers));
  if (!res) throw TransportError("GET " + url + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

Response HttplibTransport::post(const std::string& url, const std::string& body, const std::string& content_type,
                                const Headers& headers) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Post(parts.target, to_httplib(headers), body, content_type);
  if (!res) throw TransportError("POST " + url + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

Response with_retry(const std::function<Response()>& call, const RetryPolicy& policy, const std::string& what) {
  auto backoff = policy.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      Response r = call();
      if (r.status != 429 && r.status < 500) return r;
      last_error = "HTTP " + std::to_string(r.status);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (attempt < policy.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
  }
  throw TransportError(what + " failed after " + std::to_string(policy.attempts) + " attempts: " + last_error);
}

void RateLimiter::acquire() {
  std::unique_lock lock(mu_);
  const auto now = std::chrono::steady_clock::now();
  if (started_) {
    const auto ready = last_ + min_interval_;
    if (now < ready) std::this_thread::sleep_until(ready);
  }
  started_ = true;
  last_ = std::max(now, last_ + min_interval_);
}

}  // namespace autoconfidence::http
