#include "autoconfidence/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "autoconfidence/error.hpp"
#include "autoconfidence/rng.hpp"

namespace autoconfidence {

using nlohmann::ordered_json;

std::string to_string(Quartile q) {
  switch (q) {
    case Quartile::Q1: return "Q1";
    case Quartile::Q2: return "Q2";
    case Quartile::Q3: return "Q3";
    case Quartile::Q4: return "Q4";
  }
  return "Q?";
}

Quartile parse_quartile(std::string_view text) {
  if (text == "Q1" || text == "q1") return Quartile::Q1;
  if (text == "Q2" || text == "q2") return Quartile::Q2;
  if (text == "Q3" || text == "q3") return Quartile::Q3;
  if (text == "Q4" || text == "q4") return Quartile::Q4;
  throw ValidationError("unknown journal quartile '" + std::string(text) + "'");
}

void validate(const PreprintRecord& r) {
  if (r.preprint_doi.empty()) throw ValidationError("record without preprint_doi");
  if (r.published_date && !r.published_doi)
    throw ValidationError(r.preprint_doi + ": published_date without published_doi");
  if (r.published_date && *r.published_date < r.posted_date)
    throw ValidationError(r.preprint_doi + ": published_date precedes posted_date");
  if (r.journal_impact_factor && !(*r.journal_impact_factor >= 0.0))
    throw ValidationError(r.preprint_doi + ": negative journal_impact_factor");
  if (r.usage_3mo) {
    const auto& u = *r.usage_3mo;
    if (u.abstract_views < 0 || u.fulltext_views < 0 || u.pdf_downloads < 0)
      throw ValidationError(r.preprint_doi + ": negative usage count");
  }
}

void CohortConfig::validate() const {
  if (!(posted_cutoff < censor_date)) throw ValidationError("posted_cutoff must precede censor_date");
  if (early_publication_exclusion_days <= 0)
    throw ValidationError("early_publication_exclusion_days must be positive");
  if (min_impact_factor < 0.0) throw ValidationError("min_impact_factor must be nonnegative");
}

namespace {

// Ordering used to pick the surviving duplicate; total so that the result does
// not depend on input order.
bool precedes(const PreprintRecord& a, const PreprintRecord& b) {
  if (a.posted_date != b.posted_date) return a.posted_date < b.posted_date;
  return to_json(a).dump() < to_json(b).dump();
}

}  // namespace

std::vector<LabeledRecord> build_cohort(const std::vector<PreprintRecord>& records,
                                        const CohortConfig& cfg) {
  cfg.validate();
  std::map<std::string, const PreprintRecord*> unique;
  for (const auto& r : records) {
    validate(r);
    auto [it, inserted] = unique.emplace(r.preprint_doi, &r);
    if (!inserted && precedes(r, *it->second)) it->second = &r;
  }

  std::vector<LabeledRecord> out;
  out.reserve(unique.size());
  for (const auto& [doi, rp] : unique) {
    const PreprintRecord& r = *rp;
    if (!(r.posted_date < cfg.posted_cutoff)) continue;

    LabeledRecord lr{r, OutcomeLabel::Unpublished, false};
    if (r.published_doi && !r.published_date) {
      lr.missing_publication_date = true;
    } else if (r.published_date && *r.published_date <= cfg.censor_date) {
      if (!r.journal_quartile) continue;
      const bool top_tier = *r.journal_quartile == cfg.required_quartile && r.journal_impact_factor &&
                            *r.journal_impact_factor >= cfg.min_impact_factor;
      if (!top_tier) continue;
      lr.label = OutcomeLabel::Published;
    }
    out.push_back(std::move(lr));
  }
  return out;
}

std::vector<LabeledRecord> apply_early_publication_exclusion(std::vector<LabeledRecord> cohort,
                                                             const CohortConfig& cfg) {
  std::erase_if(cohort, [&](const LabeledRecord& lr) {
    if (lr.label != OutcomeLabel::Published || !lr.record.published_date) return false;
    return days_between(lr.record.posted_date, *lr.record.published_date) <
           cfg.early_publication_exclusion_days;
  });
  return cohort;
}

SurvivalObservation to_survival(const PreprintRecord& record, OutcomeLabel label,
                                FeatureVector features, const CohortConfig& cfg) {
  if (!(record.posted_date < cfg.censor_date))
    throw ValidationError(record.preprint_doi + ": posted on or after the censor date");
  SurvivalObservation obs;
  obs.features = std::move(features);
  if (label == OutcomeLabel::Published) {
    if (!record.published_date)
      throw ValidationError(record.preprint_doi + ": published label without published_date");
    obs.event = true;
    // Same-day publication still counts as one day at risk.
    obs.time_days = std::max(1L, days_between(record.posted_date, *record.published_date));
  } else {
    obs.event = false;
    obs.time_days = days_between(record.posted_date, cfg.censor_date);
  }
  return obs;
}

namespace {

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<Fold> deal(const std::vector<std::size_t>& order, std::size_t k) {
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

void check_fold_args(std::size_t n, std::size_t k) {
  if (k < 2) throw ValidationError("kfold_split: k must be at least 2");
  if (k > n) throw ValidationError("kfold_split: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
}

}  // namespace

std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_fold_args(n, k);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0));
  shuffle_indices(order, rng);
  return deal(order, k);
}

std::vector<Fold> kfold_split(const std::vector<bool>& labels, std::size_t k, std::uint64_t seed) {
  check_fold_args(labels.size(), k);
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  Rng rng(derive_seed(seed, 0));
  shuffle_indices(neg, rng);
  shuffle_indices(pos, rng);
  std::vector<std::size_t> order = std::move(neg);
  order.insert(order.end(), pos.begin(), pos.end());
  return deal(order, k);
}

ordered_json to_json(const PreprintRecord& r) {
  ordered_json j;
  j["preprint_doi"] = r.preprint_doi;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  j["authors"] = r.authors;
  j["posted_date"] = format_date(r.posted_date);
  if (r.published_doi) j["published_doi"] = *r.published_doi;
  if (r.published_date) j["published_date"] = format_date(*r.published_date);
  if (r.journal_name) j["journal_name"] = *r.journal_name;
  if (r.journal_quartile) j["journal_quartile"] = to_string(*r.journal_quartile);
  if (r.journal_impact_factor) j["journal_impact_factor"] = *r.journal_impact_factor;
  if (r.usage_3mo) {
    j["usage_3mo"] = ordered_json{{"abstract_views", r.usage_3mo->abstract_views},
                                  {"fulltext_views", r.usage_3mo->fulltext_views},
                                  {"pdf_downloads", r.usage_3mo->pdf_downloads}};
  }
  j["search_term_hits"] = r.search_term_hits;
  return j;
}

PreprintRecord record_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  try {
    PreprintRecord r;
    r.preprint_doi = j.at("preprint_doi").get<std::string>();
    r.title = j.value("title", std::string{});
    r.abstract = j.value("abstract", std::string{});
    if (j.contains("authors")) r.authors = j.at("authors").get<std::vector<std::string>>();
    r.posted_date = parse_date(j.at("posted_date").get<std::string>());
    auto opt_str = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<std::string>();
    };
    r.published_doi = opt_str("published_doi");
    if (auto d = opt_str("published_date")) r.published_date = parse_date(*d);
    r.journal_name = opt_str("journal_name");
    if (auto q = opt_str("journal_quartile")) r.journal_quartile = parse_quartile(*q);
    if (j.contains("journal_impact_factor") && !j.at("journal_impact_factor").is_null())
      r.journal_impact_factor = j.at("journal_impact_factor").get<double>();
    if (j.contains("usage_3mo") && !j.at("usage_3mo").is_null()) {
      const auto& u = j.at("usage_3mo");
      r.usage_3mo = UsageMetrics{u.at("abstract_views").get<std::int64_t>(),
                                 u.at("fulltext_views").get<std::int64_t>(),
                                 u.at("pdf_downloads").get<std::int64_t>()};
    }
    if (j.contains("search_term_hits"))
      r.search_term_hits = j.at("search_term_hits").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what());
  }
}

std::vector<PreprintRecord> read_records_jsonl(std::istream& in) {
  std::vector<PreprintRecord> out;
  std::string line;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("record " + std::to_string(index) + ": " + e.what(), index);
    } catch (const ValidationError& e) {
      throw ParseError("record " + std::to_string(index) + ": " + e.what(), index);
    }
    ++index;
  }
  return out;
}

void write_records_jsonl(std::ostream& out, const std::vector<PreprintRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<PreprintRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_records_jsonl(in);
}

void write_records_file(const std::string& path, const std::vector<PreprintRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  write_records_jsonl(out, records);
}

}  // namespace autoconfidence
