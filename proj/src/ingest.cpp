#include "autoconfidence/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "autoconfidence/error.hpp"

namespace autoconfidence::ingest {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
  return s;
}

std::string url_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

int month_index(int year, unsigned month) { return year * 12 + static_cast<int>(month) - 1; }

// Runs fn(i) for i in [0, n) on at most `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<std::string> default_search_terms() {
  return {"cardiovascular disease", "heart disease",  "hypertension",    "stroke",           "atherosclerosis",
          "heart attack",           "vascular disease", "blood pressure", "atrial fibrillation"};
}

void SearchQuery::validate() const {
  if (terms.empty()) throw ValidationError("search query: term list is empty");
  for (const auto& t : terms)
    if (t.empty()) throw ValidationError("search query: empty term");
  if (date_ceiling < date_floor) throw ValidationError("search query: date_ceiling precedes date_floor");
}

std::vector<std::string> matching_terms(const PreprintRecord& r, const std::vector<std::string>& terms) {
  const std::string text = lower(r.title) + "\n" + lower(r.abstract);
  std::vector<std::string> hits;
  for (const auto& t : terms)
    if (text.find(lower(t)) != std::string::npos) hits.push_back(t);
  return hits;
}

std::string normalize_journal_name(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

JournalTable::JournalTable(const std::vector<JournalMetrics>& rows) {
  for (const auto& r : rows) {
    if (!(r.impact_factor >= 0.0)) throw ValidationError("journal table: negative impact factor for " + r.journal_name);
    const auto key = normalize_journal_name(r.journal_name);
    if (key.empty()) throw ValidationError("journal table: empty journal name");
    if (!rows_.emplace(key, r).second) throw ValidationError("journal table: duplicate journal '" + key + "'");
  }
}

JournalTable JournalTable::from_csv(std::istream& in) {
  std::vector<JournalMetrics> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (line_no == 1 && !f.empty() && lower(f[0]) == "journal") continue;
    if (f.size() != 3) throw ParseError("jcr.csv line " + std::to_string(line_no) + ": expected 3 fields");
    try {
      std::size_t used = 0;
      const double impact = std::stod(f[2], &used);
      rows.push_back({f[0], parse_quartile(f[1]), impact});
    } catch (const std::logic_error&) {
      throw ParseError("jcr.csv line " + std::to_string(line_no) + ": bad impact factor '" + f[2] + "'");
    }
  }
  return JournalTable(rows);
}

JournalTable JournalTable::from_csv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return from_csv(in);
}

const JournalMetrics* JournalTable::find(std::string_view journal_name) const {
  auto it = rows_.find(normalize_journal_name(journal_name));
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<PreprintRecord> join_journal_metrics(std::vector<PreprintRecord> records, const JournalTable& table) {
  for (auto& r : records) {
    if (!r.journal_name) continue;
    if (const auto* m = table.find(*r.journal_name)) {
      r.journal_quartile = m->quartile;
      r.journal_impact_factor = m->impact_factor;
    }
  }
  return records;
}

UsageMetrics sum_first_three_months(const std::vector<MonthlyUsage>& monthly, Date posted) {
  const std::chrono::year_month_day ymd{posted};
  const int start = month_index(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
  UsageMetrics total;
  for (const auto& m : monthly) {
    const int offset = month_index(m.year, m.month) - start;
    if (offset < 0 || offset > 2) continue;
    total.abstract_views += m.counts.abstract_views;
    total.fulltext_views += m.counts.fulltext_views;
    total.pdf_downloads += m.counts.pdf_downloads;
  }
  return total;
}

std::optional<PublicationLink> parse_publication(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  try {
    PublicationLink link{j.at("published_doi").get<std::string>(), j.value("journal", std::string{})};
    if (link.published_doi.empty()) return std::nullopt;
    return link;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("publication entry: ") + e.what());
  }
}

std::vector<Date> parse_publication_dates(const nlohmann::json& j) {
  std::vector<Date> out;
  auto add = [&](const nlohmann::json& v) {
    if (v.is_string()) out.push_back(parse_date(v.get<std::string>()));
    else if (!v.is_null()) throw ParseError("publication date entry is not a date string");
  };
  if (j.is_string() || j.is_null()) add(j);
  else if (j.is_array()) for (const auto& v : j) add(v);
  else if (j.is_object()) for (const auto& [k, v] : j.items()) add(v);
  else throw ParseError("unrecognized publication date entry");
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MonthlyUsage> parse_usage(const nlohmann::json& j) {
  std::vector<MonthlyUsage> out;
  try {
    for (const auto& m : j.at("monthly")) {
      const auto month = m.at("month").get<std::string>();
      if (month.size() != 7 || month[4] != '-') throw ParseError("usage month '" + month + "' is not YYYY-MM");
      MonthlyUsage u;
      u.year = std::stoi(month.substr(0, 4));
      u.month = static_cast<unsigned>(std::stoi(month.substr(5, 2)));
      if (u.month < 1 || u.month > 12) throw ParseError("usage month '" + month + "' out of range");
      u.counts = {m.value("abstract_views", std::int64_t{0}), m.value("fulltext_views", std::int64_t{0}),
                  m.value("pdf_downloads", std::int64_t{0})};
      if (u.counts.abstract_views < 0 || u.counts.fulltext_views < 0 || u.counts.pdf_downloads < 0)
        throw ParseError("usage counts must be nonnegative");
      out.push_back(u);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("usage entry: ") + e.what());
  } catch (const std::logic_error&) {
    throw ParseError("usage entry: bad month");
  }
  return out;
}

FixtureSource::FixtureSource(fs::path dir, std::size_t page_size) : dir_(std::move(dir)), page_size_(page_size) {
  if (!fs::is_directory(dir_)) throw ValidationError("fixture directory not found: " + dir_.string());
  if (page_size_ == 0) throw ValidationError("fixture page size must be positive");
  std::ifstream in(dir_ / "preprints.jsonl");
  if (!in) throw ValidationError("cannot open " + (dir_ / "preprints.jsonl").string());
  std::string line;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records_.push_back(nlohmann::ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("preprints.jsonl record " + std::to_string(index) + ": " + e.what(), index);
    }
    ++index;
  }
  publications_ = fs::exists(dir_ / "publications.json") ? read_json_file(dir_ / "publications.json") : nlohmann::json::object();
  pubdates_ = fs::exists(dir_ / "pubdates.json") ? read_json_file(dir_ / "pubdates.json") : nlohmann::json::object();
}

Page FixtureSource::fetch_page(const SearchQuery&, const std::string& cursor) {
  std::size_t offset = 0;
  if (!cursor.empty()) {
    try {
      offset = std::stoul(cursor);
    } catch (const std::logic_error&) {
      throw ParseError("bad fixture cursor '" + cursor + "'");
    }
  }
  Page page;
  const std::size_t end = std::min(records_.size(), offset + page_size_);
  for (std::size_t i = offset; i < end; ++i) page.records.push_back(records_[i]);
  if (end < records_.size()) page.next_cursor = std::to_string(end);
  return page;
}

std::optional<PublicationLink> FixtureSource::publication(const std::string& preprint_doi) {
  auto it = publications_.find(preprint_doi);
  if (it == publications_.end()) return std::nullopt;
  return parse_publication(*it);
}

std::vector<Date> FixtureSource::publication_dates(const std::string& published_doi) {
  auto it = pubdates_.find(published_doi);
  if (it == pubdates_.end()) return {};
  return parse_publication_dates(*it);
}

std::optional<std::vector<MonthlyUsage>> FixtureSource::usage(const std::string& preprint_doi) {
  const fs::path path = dir_ / "usage" / (preprint_doi + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return parse_usage(read_json_file(path));
}

JournalTable FixtureSource::journal_metrics() {
  const fs::path path = dir_ / "jcr.csv";
  if (!fs::exists(path)) return JournalTable{};
  return JournalTable::from_csv_file(path);
}

RemoteConfig RemoteConfig::from_json(const nlohmann::json& j) {
  RemoteConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.preprints_path = j.value("preprints_path", c.preprints_path);
    c.publication_path = j.value("publication_path", c.publication_path);
    c.pubdates_path = j.value("pubdates_path", c.pubdates_path);
    c.usage_path = j.value("usage_path", c.usage_path);
    c.jcr_path = j.value("jcr_path", c.jcr_path);
    c.bearer_token_env = j.value("bearer_token_env", c.bearer_token_env);
    c.min_interval_ms = std::max(200, j.value("min_interval_ms", c.min_interval_ms));
    c.max_in_flight = std::clamp<std::size_t>(j.value("max_in_flight", c.max_in_flight), 1, 4);
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.retry.attempts = r.value("attempts", c.retry.attempts);
      c.retry.initial_backoff = std::chrono::milliseconds(r.value("initial_backoff_ms", 500));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("remote source config: ") + e.what());
  }
  return c;
}

RemoteConfig RemoteConfig::from_file(const fs::path& path) { return from_json(read_json_file(path)); }

RemoteSource::RemoteSource(RemoteConfig cfg, std::shared_ptr<http::Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(std::chrono::milliseconds(cfg_.min_interval_ms)) {
  if (!transport_) throw ValidationError("remote source: transport is null");
  if (cfg_.base_url.empty()) throw ValidationError("remote source: base_url is empty");
  cfg_.max_in_flight = std::clamp<std::size_t>(cfg_.max_in_flight, 1, 4);
}

std::optional<std::string> RemoteSource::get(const std::string& path) {
  http::Headers headers{{"Accept", "application/json"}};
  if (!cfg_.bearer_token_env.empty())
    if (const char* token = std::getenv(cfg_.bearer_token_env.c_str()); token && *token)
      headers["Authorization"] = std::string("Bearer ") + token;
  const std::string url = cfg_.base_url + path;
  const auto res = http::with_retry(
      [&] {
        limiter_.acquire();
        return transport_->get(url, headers);
      },
      cfg_.retry, "GET " + url);
  if (res.status == 404) return std::nullopt;
  if (res.status < 200 || res.status >= 300) throw TransportError("GET " + url + " returned HTTP " + std::to_string(res.status));
  return res.body;
}

Page RemoteSource::fetch_page(const SearchQuery& query, const std::string& cursor) {
  std::string path = replace_all(cfg_.preprints_path, "{from}", format_date(query.date_floor));
  path = replace_all(path, "{to}", format_date(query.date_ceiling));
  path = replace_all(path, "{cursor}", url_encode(cursor));
  const auto body = get(path);
  if (!body) throw TransportError("preprint listing not found at " + path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(*body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("preprint page: " + std::string(e.what()));
  }
  Page page;
  if (!j.contains("records") || !j["records"].is_array()) throw ParseError("preprint page without a records array");
  for (auto& r : j["records"]) page.records.push_back(r);
  if (j.contains("next_cursor") && j["next_cursor"].is_string()) page.next_cursor = j["next_cursor"].get<std::string>();
  return page;
}

std::optional<PublicationLink> RemoteSource::publication(const std::string& preprint_doi) {
  const auto body = get(replace_all(cfg_.publication_path, "{doi}", url_encode(preprint_doi)));
  if (!body) return std::nullopt;
  try {
    return parse_publication(nlohmann::json::parse(*body));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("publication for " + preprint_doi + ": " + e.what());
  }
}

std::vector<Date> RemoteSource::publication_dates(const std::string& published_doi) {
  const auto body = get(replace_all(cfg_.pubdates_path, "{doi}", url_encode(published_doi)));
  if (!body) return {};
  try {
    return parse_publication_dates(nlohmann::json::parse(*body));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("publication dates for " + published_doi + ": " + e.what());
  }
}

std::optional<std::vector<MonthlyUsage>> RemoteSource::usage(const std::string& preprint_doi) {
  const auto body = get(replace_all(cfg_.usage_path, "{doi}", url_encode(preprint_doi)));
  if (!body) return std::nullopt;
  try {
    return parse_usage(nlohmann::json::parse(*body));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("usage for " + preprint_doi + ": " + e.what());
  }
}

JournalTable RemoteSource::journal_metrics() {
  const auto body = get(cfg_.jcr_path);
  if (!body) return JournalTable{};
  std::istringstream in(*body);
  return JournalTable::from_csv(in);
}

std::vector<PreprintRecord> fetch_preprints(const SearchQuery& query, MetadataSource& source) {
  query.validate();
  std::vector<PreprintRecord> out;
  std::string cursor;
  long index = 0;
  for (int pages = 0;; ++pages) {
    if (pages > 100000) throw ParseError("pagination did not terminate");
    Page page = source.fetch_page(query, cursor);
    for (const auto& raw : page.records) {
      PreprintRecord r;
      try {
        r = record_from_json(raw);
      } catch (const ValidationError& e) {
        throw ParseError("preprint record " + std::to_string(index) + ": " + e.what(), index);
      }
      ++index;
      if (r.posted_date < query.date_floor || query.date_ceiling < r.posted_date) continue;
      r.search_term_hits = matching_terms(r, query.terms);
      if (!r.search_term_hits.empty()) out.push_back(std::move(r));
    }
    if (page.next_cursor.empty()) break;
    if (page.next_cursor == cursor) throw ParseError("pagination cursor did not advance");
    cursor = page.next_cursor;
  }
  return out;
}

std::optional<PublicationLink> resolve_publication(const std::string& preprint_doi, MetadataSource& source) {
  if (preprint_doi.empty()) throw ValidationError("resolve_publication: empty DOI");
  return source.publication(preprint_doi);
}

std::optional<Date> resolve_published_date(const std::string& published_doi, MetadataSource& source) {
  if (published_doi.empty()) throw ValidationError("resolve_published_date: empty DOI");
  const auto dates = source.publication_dates(published_doi);
  if (dates.empty()) return std::nullopt;
  return *std::min_element(dates.begin(), dates.end());
}

std::vector<PreprintRecord> enrich(std::vector<PreprintRecord> records, MetadataSource& source) {
  parallel_for(records.size(), source.max_in_flight(), [&](std::size_t i) {
    PreprintRecord& r = records[i];
    if (auto link = resolve_publication(r.preprint_doi, source)) {
      r.published_doi = link->published_doi;
      if (!link->journal_name.empty()) r.journal_name = link->journal_name;
      r.published_date = resolve_published_date(link->published_doi, source);
    }
    if (auto monthly = source.usage(r.preprint_doi)) r.usage_3mo = sum_first_three_months(*monthly, r.posted_date);
  });
  return records;
}

std::vector<PreprintRecord> ingest_records(const SearchQuery& query, MetadataSource& source) {
  auto records = enrich(fetch_preprints(query, source), source);
  return join_journal_metrics(std::move(records), source.journal_metrics());
}

std::vector<std::string> read_terms_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open terms file " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    terms.push_back(line.substr(b, e - b + 1));
  }
  return terms;
}

std::unique_ptr<MetadataSource> open_source(const std::string& source, const std::optional<std::string>& remote_config) {
  if (source.rfind("http://", 0) == 0 || source.rfind("https://", 0) == 0) {
    RemoteConfig cfg = remote_config ? RemoteConfig::from_file(*remote_config) : RemoteConfig{};
    cfg.base_url = source;
    return std::make_unique<RemoteSource>(std::move(cfg), std::make_shared<http::HttplibTransport>());
  }
  return std::make_unique<FixtureSource>(source);
}

}  // namespace autoconfidence::ingest
