#include "autoconfidence/llm_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "autoconfidence/rng.hpp"

namespace autoconfidence::llm {

namespace {

constexpr std::string_view kEvalInstruction =
    "INSTRUCTION\n\n"
    "You are a highly stringent peer reviewer for a cardiology medical journal. Please rate the following "
    "article on a scale of 1 to 10 based on originality, significance, quality of expression, depth of "
    "research, and interest to readers. Your ratings need to differentiate the quality of these articles as "
    "much as possible; do not give similar scores to each article.\n\n";

constexpr std::string_view kEvalOutput =
    "\n\nOUTPUT\n\n"
    "Only return the result in the following format. Don't generate anything else.\n\n"
    "```\n"
    "{\n"
    "  \"Originality\": <integer 1-10>,\n"
    "  \"Significance\": <integer 1-10>,\n"
    "  \"Quality of Presentation\": <integer 1-10>,\n"
    "  \"Depth of Research\": <integer 1-10>,\n"
    "  \"Interest to Readers\": <integer 1-10>\n"
    "}\n"
    "```\n";

constexpr std::string_view kBinaryInstruction =
    "INSTRUCTION\n\n"
    "You are an expert peer reviewer specializing in cardiology. Your task is to evaluate whether the "
    "provided article indicates potential for publication in Q1-Ranked (Top 25%) cardiovascular journals. "
    "Meanwhile, we provide the corresponding institution information. If the article meets the standards for "
    "publication in Q1-Ranked (Top 25%) cardiovascular journals, return 1; otherwise, return 0. Additionally, "
    "I have provided two simplified benchmark instances for reference - one that was published and one that "
    "was not published.\n\n";

constexpr std::string_view kBinaryOutput =
    "\n\nOUTPUT\n\n"
    "Return the result in the following format.\n\n"
    "```\n"
    "{\n"
    "  \"Publish\": <0 or 1>\n"
    "}\n"
    "```\n";

constexpr std::string_view kInputMarker = "\n\nINPUT\n\n";
constexpr std::string_view kInstitutionMarker = "\n\nInstitution information: ";

std::string normalize_key(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

nlohmann::json parse_object(std::string_view raw) {
  const auto obj = first_json_object(raw);
  if (!obj) throw ResponseError("no JSON object in response", std::string(raw));
  try {
    return nlohmann::json::parse(*obj);
  } catch (const nlohmann::json::exception& e) {
    throw ResponseError(std::string("unparseable JSON object: ") + e.what(), std::string(raw));
  }
}

const nlohmann::json* find_key(const nlohmann::json& obj, std::string_view key) {
  const auto wanted = normalize_key(key);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (normalize_key(it.key()) == wanted) return &it.value();
  return nullptr;
}

// Integer value of a JSON number or numeric string; nullopt if not integral.
std::optional<long long> as_integer(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15) return static_cast<long long>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    const auto b = s.find_first_not_of(" \t\n");
    const auto e = s.find_last_not_of(" \t\n");
    if (b == std::string::npos) return std::nullopt;
    s = s.substr(b, e - b + 1);
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size() || s.size() > 15) return std::nullopt;
    for (std::size_t k = i; k < s.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) return std::nullopt;
    return std::stoll(s);
  }
  return std::nullopt;
}

std::string input_block(std::string_view prompt) {
  const auto out = prompt.rfind("\n\nOUTPUT\n\n");
  const auto in = out == std::string_view::npos ? std::string_view::npos : prompt.rfind(kInputMarker, out);
  if (in == std::string_view::npos) return std::string(prompt);
  const auto start = in + kInputMarker.size();
  return std::string(prompt.substr(start, out - start));
}

template <typename T, typename Attempt>
BatchResult<T> run_batch(const std::vector<Article>& articles, int max_retries, std::size_t max_in_flight,
                         Attempt attempt) {
  std::vector<std::optional<T>> results(articles.size());
  std::vector<BatchFailure> failures(articles.size());

  auto work = [&](std::size_t i) {
    const Article& a = articles[i];
    std::string last_error;
    int tries = 0;
    for (; tries <= max_retries; ++tries) {
      try {
        results[i] = attempt(a);
        return;
      } catch (const ResponseError& e) {
        last_error = std::string(e.what()) + " | raw: " + e.raw_response();
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    failures[i] = BatchFailure{a.id, last_error, tries};
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_in_flight, 1), articles.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < articles.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < articles.size(); i = next++) work(i);
      });
    for (auto& t : pool) t.join();
  }

  BatchResult<T> out;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (results[i])
      out.results.emplace_back(articles[i].id, *results[i]);
    else
      out.failures.push_back(std::move(failures[i]));
  }
  std::stable_sort(out.results.begin(), out.results.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::stable_sort(out.failures.begin(), out.failures.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace

EvalScores EvalScores::from_values(const std::array<int, 5>& v) {
  EvalScores s{v[0], v[1], v[2], v[3], v[4]};
  s.validate();
  return s;
}

void EvalScores::validate() const {
  for (int v : values())
    if (v < 1 || v > 10) throw ValidationError("score " + std::to_string(v) + " outside [1,10]");
}

void EvalPromptConfig::validate() const {
  if (good_benchmark.empty() || bad_benchmark.empty()) throw ValidationError("eval prompt: benchmarks must be nonempty");
  if (!(temperature >= 0.0)) throw ValidationError("eval prompt: temperature must be nonnegative");
  if (max_retries < 0) throw ValidationError("eval prompt: max_retries must be nonnegative");
}

void BinaryPromptConfig::validate() const {
  if (published_instance.empty() || unpublished_instance.empty())
    throw ValidationError("binary prompt: both benchmark instances must be nonempty");
  if (!(temperature >= 0.0)) throw ValidationError("binary prompt: temperature must be nonnegative");
  if (max_retries < 0) throw ValidationError("binary prompt: max_retries must be nonnegative");
}

std::string build_eval_prompt(std::string_view article_text, const EvalPromptConfig& cfg) {
  cfg.validate();
  if (article_text.empty()) throw ValidationError("eval prompt: article text is empty");
  std::string p;
  p.reserve(kEvalInstruction.size() + cfg.good_benchmark.size() + cfg.bad_benchmark.size() + article_text.size() + 512);
  p += kEvalInstruction;
  p += "Rating 9:\n";
  p += cfg.good_benchmark;
  p += "\n\nRating 2:\n";
  p += cfg.bad_benchmark;
  p += kInputMarker;
  p += article_text;
  p += kEvalOutput;
  return p;
}

std::string build_binary_prompt(std::string_view article_text, std::string_view institution_info,
                                const BinaryPromptConfig& cfg) {
  cfg.validate();
  if (article_text.empty()) throw ValidationError("binary prompt: article text is empty");
  std::string p;
  p += kBinaryInstruction;
  p += "Instance (Published in Q1 Journal):\n\n";
  p += cfg.published_instance;
  p += "\n\nInstance (Not Published in Q1 Journal)::\n\n";
  p += cfg.unpublished_instance;
  p += kInputMarker;
  p += article_text;
  if (!institution_info.empty()) {
    p += kInstitutionMarker;
    p += institution_info;
  }
  p += kBinaryOutput;
  return p;
}

std::optional<std::string_view> first_json_object(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) return raw.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

EvalScores parse_eval_response(std::string_view raw) {
  const auto obj = parse_object(raw);
  if (!obj.is_object()) throw ResponseError("response is not a JSON object", std::string(raw));
  std::array<int, 5> v{};
  for (std::size_t k = 0; k < kScoreKeys.size(); ++k) {
    const auto* field = find_key(obj, kScoreKeys[k]);
    if (!field) throw ResponseError("missing key \"" + std::string(kScoreKeys[k]) + "\"", std::string(raw));
    const auto value = as_integer(*field);
    if (!value) throw ResponseError("non-integer value for \"" + std::string(kScoreKeys[k]) + "\"", std::string(raw));
    if (*value < 1 || *value > 10)
      throw ResponseError("\"" + std::string(kScoreKeys[k]) + "\" = " + std::to_string(*value) + " outside [1,10]",
                          std::string(raw));
    v[k] = static_cast<int>(*value);
  }
  return EvalScores{v[0], v[1], v[2], v[3], v[4]};
}

BinaryPrediction parse_binary_response(std::string_view raw) {
  const auto obj = parse_object(raw);
  if (!obj.is_object()) throw ResponseError("response is not a JSON object", std::string(raw));
  const auto* field = find_key(obj, "Publish");
  if (!field) throw ResponseError("missing key \"Publish\"", std::string(raw));
  const auto value = as_integer(*field);
  if (!value || (*value != 0 && *value != 1)) throw ResponseError("\"Publish\" must be 0 or 1", std::string(raw));
  return BinaryPrediction{*value == 1};
}

std::string render_eval_response(const EvalScores& scores) {
  nlohmann::ordered_json j;
  const auto v = scores.values();
  for (std::size_t k = 0; k < kScoreKeys.size(); ++k) j[std::string(kScoreKeys[k])] = v[k];
  return j.dump();
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EvalScores mock_scores(std::string_view article_text) {
  if (article_text.empty()) throw ValidationError("mock evaluator: article text is empty");
  const std::uint64_t h = stable_hash(article_text);
  std::array<int, 5> v{};
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1 + static_cast<int>(splitmix64(h + k) % 10);
  return EvalScores{v[0], v[1], v[2], v[3], v[4]};
}

std::string mock_evaluator(std::string_view article_text) { return render_eval_response(mock_scores(article_text)); }

std::string mock_binary_predictor(std::string_view article_text) {
  const auto v = mock_scores(article_text).values();
  int sum = 0;
  for (int x : v) sum += x;
  return std::string("{\"Publish\": ") + (sum >= 28 ? "1" : "0") + "}";
}

std::string MockChatClient::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw ValidationError("mock client: no messages");
  const std::string& prompt = request.messages.back().content;
  std::string article = input_block(prompt);
  if (prompt.find("\"Publish\"") != std::string::npos) {
    const auto inst = article.find(kInstitutionMarker);
    if (inst != std::string::npos) article.resize(inst);
    return mock_binary_predictor(article);
  }
  return mock_evaluator(article);
}

HttpChatClient::HttpChatClient(HttpChatConfig cfg, std::shared_ptr<http::Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  if (!transport_) throw ValidationError("http chat client: transport is null");
}

std::string HttpChatClient::request_body(const ChatRequest& request) {
  nlohmann::ordered_json j;
  j["model"] = request.model;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  j["temperature"] = request.temperature;
  return j.dump();
}

std::string HttpChatClient::extract_text(const std::string& response_body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("chat response is not JSON: ") + e.what());
  }
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string())
      return c["message"]["content"].get<std::string>();
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  for (const char* key : {"content", "text"})
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  throw TransportError("chat response carries no generated text");
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  http::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
    headers["Authorization"] = std::string("Bearer ") + key;
  const std::string body = request_body(request);
  const auto res = http::with_retry([&] { return transport_->post(cfg_.endpoint, body, "application/json", headers); },
                                    cfg_.retry, "chat completion");
  if (res.status < 200 || res.status >= 300)
    throw TransportError("chat completion returned HTTP " + std::to_string(res.status));
  return extract_text(res.body);
}

BatchResult<EvalScores> evaluate_batch(const std::vector<Article>& articles, const EvalPromptConfig& cfg,
                                       ChatClient& client, std::size_t max_in_flight) {
  cfg.validate();
  return run_batch<EvalScores>(articles, cfg.max_retries, max_in_flight, [&](const Article& a) {
    ChatRequest req{cfg.model_name, {{"user", build_eval_prompt(a.text, cfg)}}, cfg.temperature};
    return parse_eval_response(client.complete(req));
  });
}

BatchResult<BinaryPrediction> predict_batch(const std::vector<Article>& articles, const BinaryPromptConfig& cfg,
                                            ChatClient& client, std::size_t max_in_flight) {
  cfg.validate();
  return run_batch<BinaryPrediction>(articles, cfg.max_retries, max_in_flight, [&](const Article& a) {
    ChatRequest req{cfg.model_name, {{"user", build_binary_prompt(a.text, a.institution, cfg)}}, cfg.temperature};
    return parse_binary_response(client.complete(req));
  });
}

EvalPromptConfig placeholder_eval_config() {
  EvalPromptConfig cfg;
  cfg.good_benchmark =
      "Title: A multicentre randomised trial of an intervention for a common cardiovascular condition. "
      "Abstract: A prespecified, adequately powered trial with blinded outcome assessment, complete follow-up "
      "and a clinically meaningful primary endpoint.";
  cfg.bad_benchmark =
      "Title: Observations from a small convenience sample. "
      "Abstract: A single-site retrospective description without a comparison group, prespecified outcome or "
      "adjustment for confounding.";
  return cfg;
}

BinaryPromptConfig placeholder_binary_config() {
  BinaryPromptConfig cfg;
  const auto eval = placeholder_eval_config();
  cfg.published_instance = eval.good_benchmark;
  cfg.unpublished_instance = eval.bad_benchmark;
  return cfg;
}

}  // namespace autoconfidence::llm
