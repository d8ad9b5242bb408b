#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoconfidence/dataset.hpp"
#include "autoconfidence/http.hpp"

namespace autoconfidence::ingest {

std::vector<std::string> default_search_terms();

struct SearchQuery {
  std::vector<std::string> terms = default_search_terms();
  Date date_floor = make_date(2013, 1, 1);
  Date date_ceiling = make_date(2023, 8, 31);

  void validate() const;
};

// Terms of `query` found (case-insensitively) in title or abstract, in query order.
std::vector<std::string> matching_terms(const PreprintRecord& r, const std::vector<std::string>& terms);

struct JournalMetrics {
  std::string journal_name;
  Quartile quartile = Quartile::Q4;
  double impact_factor = 0.0;
};

// Lowercase, punctuation stripped, whitespace collapsed.
std::string normalize_journal_name(std::string_view name);

class JournalTable {
 public:
  JournalTable() = default;
  // Throws ValidationError on duplicate normalized names or negative impact factors.
  explicit JournalTable(const std::vector<JournalMetrics>& rows);
  static JournalTable from_csv(std::istream& in);
  static JournalTable from_csv_file(const std::filesystem::path& path);

  const JournalMetrics* find(std::string_view journal_name) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::map<std::string, JournalMetrics> rows_;
};

// Fills quartile and impact factor where the journal is in the table; other records pass through unchanged.
std::vector<PreprintRecord> join_journal_metrics(std::vector<PreprintRecord> records, const JournalTable& table);

struct PublicationLink {
  std::string published_doi;
  std::string journal_name;
};

struct MonthlyUsage {
  int year = 0;
  unsigned month = 0;
  UsageMetrics counts;
};

// Sums the posting month and the two calendar months after it.
UsageMetrics sum_first_three_months(const std::vector<MonthlyUsage>& monthly, Date posted);

struct Page {
  std::vector<nlohmann::ordered_json> records;
  std::string next_cursor;  // empty when this is the last page
};

// Where preprint metadata comes from. Absence of a publication, date or usage
// entry is a normal result.
class MetadataSource {
 public:
  virtual ~MetadataSource() = default;
  virtual Page fetch_page(const SearchQuery& query, const std::string& cursor) = 0;
  virtual std::optional<PublicationLink> publication(const std::string& preprint_doi) = 0;
  virtual std::vector<Date> publication_dates(const std::string& published_doi) = 0;
  virtual std::optional<std::vector<MonthlyUsage>> usage(const std::string& preprint_doi) = 0;
  virtual JournalTable journal_metrics() = 0;
  // Upper bound on concurrent lookups the source accepts.
  virtual std::size_t max_in_flight() const { return 1; }
};

// Directory with preprints.jsonl, publications.json, pubdates.json,
// usage/<doi>.json and jcr.csv.
class FixtureSource final : public MetadataSource {
 public:
  explicit FixtureSource(std::filesystem::path dir, std::size_t page_size = 100);

  Page fetch_page(const SearchQuery& query, const std::string& cursor) override;
  std::optional<PublicationLink> publication(const std::string& preprint_doi) override;
  std::vector<Date> publication_dates(const std::string& published_doi) override;
  std::optional<std::vector<MonthlyUsage>> usage(const std::string& preprint_doi) override;
  JournalTable journal_metrics() override;

 private:
  std::filesystem::path dir_;
  std::size_t page_size_;
  std::vector<nlohmann::ordered_json> records_;
  nlohmann::json publications_;
  nlohmann::json pubdates_;
};

struct RemoteConfig {
  std::string base_url;
  std::string preprints_path = "/preprints?from={from}&to={to}&cursor={cursor}";
  std::string publication_path = "/publication/{doi}";
  std::string pubdates_path = "/pubdates/{doi}";
  std::string usage_path = "/usage/{doi}";
  std::string jcr_path = "/jcr.csv";
  std::string bearer_token_env;  // optional; sent as Authorization: Bearer
  int min_interval_ms = 200;
  std::size_t max_in_flight = 4;
  http::RetryPolicy retry{};

  static RemoteConfig from_json(const nlohmann::json& j);
  static RemoteConfig from_file(const std::filesystem::path& path);
};

// HTTP GET + JSON source. Pages are {"records": [...], "next_cursor": "..."|null};
// lookups answer 404 for absent entries.
class RemoteSource final : public MetadataSource {
 public:
  RemoteSource(RemoteConfig cfg, std::shared_ptr<http::Transport> transport);

  Page fetch_page(const SearchQuery& query, const std::string& cursor) override;
  std::optional<PublicationLink> publication(const std::string& preprint_doi) override;
  std::vector<Date> publication_dates(const std::string& published_doi) override;
  std::optional<std::vector<MonthlyUsage>> usage(const std::string& preprint_doi) override;
  JournalTable journal_metrics() override;
  std::size_t max_in_flight() const override { return cfg_.max_in_flight; }

 private:
  std::optional<std::string> get(const std::string& path);

  RemoteConfig cfg_;
  std::shared_ptr<http::Transport> transport_;
  http::RateLimiter limiter_;
};

// Parsers shared by both sources.
std::optional<PublicationLink> parse_publication(const nlohmann::json& j);
std::vector<Date> parse_publication_dates(const nlohmann::json& j);
std::vector<MonthlyUsage> parse_usage(const nlohmann::json& j);

// Records posted inside the query window that match at least one term, with
// search_term_hits set. Follows pagination until the source is exhausted.
std::vector<PreprintRecord> fetch_preprints(const SearchQuery& query, MetadataSource& source);

std::optional<PublicationLink> resolve_publication(const std::string& preprint_doi, MetadataSource& source);
// Earliest date the source reports for the publication.
std::optional<Date> resolve_published_date(const std::string& published_doi, MetadataSource& source);

// Adds publication linkage, publication date and 3-month usage to each record.
std::vector<PreprintRecord> enrich(std::vector<PreprintRecord> records, MetadataSource& source);

// fetch_preprints, enrich, join_journal_metrics, in that order.
std::vector<PreprintRecord> ingest_records(const SearchQuery& query, MetadataSource& source);

// Reads one term per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_terms_file(const std::filesystem::path& path);

// Owning source for a CLI --source argument: an http(s) URL with a config file,
// or a fixture directory.
std::unique_ptr<MetadataSource> open_source(const std::string& source, const std::optional<std::string>& remote_config);

}  // namespace autoconfidence::ingest
