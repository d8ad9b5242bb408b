#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autoconfidence/error.hpp"
#include "autoconfidence/http.hpp"

namespace autoconfidence::llm {

struct EvalScores {
  int originality = 1;
  int significance = 1;
  int presentation = 1;
  int depth = 1;
  int interest = 1;

  std::array<int, 5> values() const { return {originality, significance, presentation, depth, interest}; }
  static EvalScores from_values(const std::array<int, 5>& v);
  void validate() const;
  bool operator==(const EvalScores&) const = default;
};

// Response keys, in feature order.
inline constexpr std::array<std::string_view, 5> kScoreKeys = {
    "Originality", "Significance", "Quality of Presentation", "Depth of Research", "Interest to Readers"};

struct BinaryPrediction {
  bool publish = false;
};

// Model output that failed validation. Keeps the raw text for logging.
class ResponseError : public ValidationError {
 public:
  ResponseError(const std::string& what, std::string raw) : ValidationError(what), raw_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct EvalPromptConfig {
  std::string good_benchmark;
  std::string bad_benchmark;
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;

  void validate() const;
};

struct BinaryPromptConfig {
  std::string published_instance;
  std::string unpublished_instance;
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;

  void validate() const;
};

std::string build_eval_prompt(std::string_view article_text, const EvalPromptConfig& cfg);
std::string build_binary_prompt(std::string_view article_text, std::string_view institution_info,
                                const BinaryPromptConfig& cfg);

// Extracts the first JSON object (code fences tolerated) and validates the five scores.
EvalScores parse_eval_response(std::string_view raw);
BinaryPrediction parse_binary_response(std::string_view raw);

// Canonical JSON rendering of scores, the format parse_eval_response expects.
std::string render_eval_response(const EvalScores& scores);

// First balanced {...} in `raw`, skipping braces inside JSON strings.
std::optional<std::string_view> first_json_object(std::string_view raw);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

// Chat-completion contract: messages in, generated text out. Throws
// TransportError on delivery failure.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// 64-bit FNV-1a, stable across platforms.
std::uint64_t stable_hash(std::string_view text);

// Deterministic stand-in for the scoring model.
std::string mock_evaluator(std::string_view article_text);
EvalScores mock_scores(std::string_view article_text);
// Deterministic stand-in for direct prediction: publish iff the mock scores sum to >= 28.
std::string mock_binary_predictor(std::string_view article_text);

// Answers prompts built by this module from the text in their INPUT block.
class MockChatClient final : public ChatClient {
 public:
  std::string complete(const ChatRequest& request) override;
};

struct HttpChatConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  http::RetryPolicy retry{};
};

// POST {model, messages, temperature}; reads choices[0].message.content, or a
// top-level "content"/"text" field.
class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(HttpChatConfig cfg, std::shared_ptr<http::Transport> transport);
  std::string complete(const ChatRequest& request) override;

  static std::string request_body(const ChatRequest& request);
  static std::string extract_text(const std::string& response_body);

 private:
  HttpChatConfig cfg_;
  std::shared_ptr<http::Transport> transport_;
};

struct Article {
  std::string id;
  std::string text;
  std::string institution;
};

struct BatchFailure {
  std::string id;
  std::string error;
  int attempts = 0;
};

template <typename T>
struct BatchResult {
  std::vector<std::pair<std::string, T>> results;  // sorted by id
  std::vector<BatchFailure> failures;              // sorted by id
};

// Scores every article, retrying each up to cfg.max_retries times after the
// first attempt on transport or validation errors. Never aborts on a single
// article. `max_in_flight` bounds concurrent requests; the client must be
// thread-safe when it exceeds 1.
BatchResult<EvalScores> evaluate_batch(const std::vector<Article>& articles, const EvalPromptConfig& cfg,
                                       ChatClient& client, std::size_t max_in_flight = 4);

BatchResult<BinaryPrediction> predict_batch(const std::vector<Article>& articles, const BinaryPromptConfig& cfg,
                                            ChatClient& client, std::size_t max_in_flight = 4);

// Neutral stand-in benchmarks shipped for tests and offline runs.
EvalPromptConfig placeholder_eval_config();
BinaryPromptConfig placeholder_binary_config();

}  // namespace autoconfidence::llm
