#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoconfidence/date.hpp"

namespace autoconfidence {

enum class Quartile { Q1, Q2, Q3, Q4 };

std::string to_string(Quartile q);
Quartile parse_quartile(std::string_view text);

struct UsageMetrics {
  std::int64_t abstract_views = 0;
  std::int64_t fulltext_views = 0;
  std::int64_t pdf_downloads = 0;

  bool operator==(const UsageMetrics&) const = default;
};

struct PreprintRecord {
  std::string preprint_doi;
  std::string title;
  std::string abstract;
  std::vector<std::string> authors;
  Date posted_date{};
  std::optional<std::string> published_doi;
  std::optional<Date> published_date;
  std::optional<std::string> journal_name;
  std::optional<Quartile> journal_quartile;
  std::optional<double> journal_impact_factor;
  std::optional<UsageMetrics> usage_3mo;
  std::vector<std::string> search_term_hits;

  bool operator==(const PreprintRecord&) const = default;
};

// Throws ValidationError if the record breaks a type invariant.
void validate(const PreprintRecord& r);

enum class OutcomeLabel { Published, Unpublished };

struct LabeledRecord {
  PreprintRecord record;
  OutcomeLabel label = OutcomeLabel::Unpublished;
  // Set when a publication DOI exists without a publication date.
  bool missing_publication_date = false;
};

using FeatureVector = std::vector<double>;

struct SurvivalObservation {
  long time_days = 1;
  bool event = false;
  FeatureVector features;
};

struct CohortConfig {
  Date posted_cutoff = make_date(2023, 9, 1);
  Date censor_date = make_date(2025, 1, 4);
  double min_impact_factor = 5.0;
  Quartile required_quartile = Quartile::Q1;
  long early_publication_exclusion_days = 92;

  void validate() const;
};

// Deduplicates by preprint_doi (earliest posted_date wins), drops records posted
// on or after the cutoff, and labels the rest. Published records outside the
// required journal tier, or with no quartile, are dropped. Output is sorted by DOI.
std::vector<LabeledRecord> build_cohort(const std::vector<PreprintRecord>& records,
                                        const CohortConfig& cfg);

// Removes events published fewer than cfg.early_publication_exclusion_days after posting.
std::vector<LabeledRecord> apply_early_publication_exclusion(std::vector<LabeledRecord> cohort,
                                                             const CohortConfig& cfg);

SurvivalObservation to_survival(const PreprintRecord& record, OutcomeLabel label,
                                FeatureVector features, const CohortConfig& cfg);

using Fold = std::vector<std::size_t>;

// Unstratified k-fold partition of 0..n-1.
std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

// Partition stratified by binary label: each class is shuffled separately and the
// concatenation dealt round-robin, so overall fold sizes differ by at most one.
std::vector<Fold> kfold_split(const std::vector<bool>& labels, std::size_t k, std::uint64_t seed);

// JSON-lines serialization; optional fields are omitted when absent.
nlohmann::ordered_json to_json(const PreprintRecord& r);
PreprintRecord record_from_json(const nlohmann::ordered_json& j);

std::vector<PreprintRecord> read_records_jsonl(std::istream& in);
void write_records_jsonl(std::ostream& out, const std::vector<PreprintRecord>& records);

std::vector<PreprintRecord> read_records_file(const std::string& path);
void write_records_file(const std::string& path, const std::vector<PreprintRecord>& records);

}  // namespace autoconfidence
