#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "autoconfidence/dataset.hpp"
#include "autoconfidence/error.hpp"

using namespace autoconfidence;

namespace {

PreprintRecord rec(const std::string& doi, const std::string& posted) {
  PreprintRecord r;
  r.preprint_doi = doi;
  r.title = "t";
  r.abstract = "a";
  r.posted_date = parse_date(posted);
  return r;
}

PreprintRecord published(const std::string& doi, const std::string& posted, const std::string& pub,
                         std::optional<Quartile> q, double impact) {
  auto r = rec(doi, posted);
  r.published_doi = "10.1/" + doi;
  r.published_date = parse_date(pub);
  r.journal_name = "J";
  r.journal_quartile = q;
  r.journal_impact_factor = impact;
  return r;
}

}  // namespace

TEST_CASE("dates parse, format and subtract") {
  CHECK(format_date(parse_date("2024-02-29")) == "2024-02-29");
  CHECK(days_between(parse_date("2023-01-04"), parse_date("2025-01-04")) == 731);
  CHECK_THROWS_AS(parse_date("2023-02-30"), ValidationError);
  CHECK_THROWS_AS(parse_date("2023/01/01"), ValidationError);
  CHECK_THROWS_AS(parse_date(""), ValidationError);
}

TEST_CASE("record invariants") {
  auto r = rec("a", "2023-01-01");
  CHECK_NOTHROW(validate(r));
  r.published_date = parse_date("2023-06-01");
  CHECK_THROWS_AS(validate(r), ValidationError);  // date without doi
  r.published_doi = "10.1/x";
  CHECK_NOTHROW(validate(r));
  r.published_date = parse_date("2022-06-01");
  CHECK_THROWS_AS(validate(r), ValidationError);  // before posting
  r.published_date = parse_date("2023-06-01");
  r.journal_impact_factor = -1.0;
  CHECK_THROWS_AS(validate(r), ValidationError);
}

TEST_CASE("cohort config invariants") {
  CohortConfig c;
  CHECK_NOTHROW(c.validate());
  c.censor_date = c.posted_cutoff;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = CohortConfig{};
  c.early_publication_exclusion_days = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("build_cohort labels") {
  CohortConfig cfg;
  SUBCASE("Q1 journal with impact 7.2 is published") {
    auto out = build_cohort({published("a", "2023-01-01", "2024-03-01", Quartile::Q1, 7.2)}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == OutcomeLabel::Published);
  }
  SUBCASE("no published doi is unpublished") {
    auto out = build_cohort({rec("a", "2023-01-01")}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == OutcomeLabel::Unpublished);
    CHECK_FALSE(out[0].missing_publication_date);
  }
  SUBCASE("duplicates keep the earliest posting") {
    auto out = build_cohort({rec("a", "2023-03-01"), rec("a", "2023-01-01"), rec("a", "2023-02-01")}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(format_date(out[0].record.posted_date) == "2023-01-01");
  }
  SUBCASE("posted on or after the cutoff is dropped") {
    auto out = build_cohort({rec("a", "2023-09-01"), rec("b", "2023-08-31")}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].record.preprint_doi == "b");
  }
  SUBCASE("low tier and missing quartile are dropped") {
    auto out = build_cohort({published("q2", "2022-01-01", "2023-01-01", Quartile::Q2, 9.0),
                             published("lowif", "2022-01-01", "2023-01-01", Quartile::Q1, 4.99),
                             published("noq", "2022-01-01", "2023-01-01", std::nullopt, 9.0),
                             published("edge", "2022-01-01", "2023-01-01", Quartile::Q1, 5.0)},
                            cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].record.preprint_doi == "edge");
  }
  SUBCASE("publication after the censor date counts as unpublished") {
    auto out = build_cohort({published("late", "2023-01-01", "2025-01-05", Quartile::Q3, 1.0)}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == OutcomeLabel::Unpublished);
  }
  SUBCASE("published doi without date is flagged") {
    auto r = rec("a", "2023-01-01");
    r.published_doi = "10.1/x";
    auto out = build_cohort({r}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == OutcomeLabel::Unpublished);
    CHECK(out[0].missing_publication_date);
  }
  SUBCASE("empty input") { CHECK(build_cohort({}, cfg).empty()); }
}

TEST_CASE("build_cohort is order independent") {
  CohortConfig cfg;
  std::vector<PreprintRecord> rs;
  for (int i = 0; i < 30; ++i) {
    const std::string doi = "d" + std::to_string(i % 20);
    const std::string posted = "2022-0" + std::to_string(1 + i % 9) + "-1" + std::to_string(i % 10);
    if (i % 3 == 0)
      rs.push_back(published(doi, posted, "2024-0" + std::to_string(1 + i % 9) + "-01",
                             i % 2 ? Quartile::Q1 : Quartile::Q2, 3.0 + i % 5));
    else
      rs.push_back(rec(doi, posted));
  }
  auto key = [](const std::vector<LabeledRecord>& c) {
    std::vector<std::string> k;
    for (const auto& l : c)
      k.push_back(to_json(l.record).dump() + (l.label == OutcomeLabel::Published ? "P" : "U"));
    std::sort(k.begin(), k.end());
    return k;
  };
  const auto base = key(build_cohort(rs, cfg));
  std::mt19937 g(3);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(rs.begin(), rs.end(), g);
    CHECK(key(build_cohort(rs, cfg)) == base);
  }
}

TEST_CASE("early publication exclusion") {
  CohortConfig cfg;
  auto c = build_cohort({published("fast", "2023-01-01", "2023-02-15", Quartile::Q1, 9.0),
                         published("slow", "2023-01-01", "2023-06-01", Quartile::Q1, 9.0),
                         published("edge", "2023-01-01", "2023-04-03", Quartile::Q1, 9.0),  // 92 days
                         rec("unpub", "2023-01-01")},
                        cfg);
  REQUIRE(c.size() == 4);
  auto kept = apply_early_publication_exclusion(c, cfg);
  std::set<std::string> ids;
  for (const auto& l : kept) ids.insert(l.record.preprint_doi);
  CHECK(ids == std::set<std::string>{"slow", "edge", "unpub"});
}

TEST_CASE("to_survival date arithmetic") {
  CohortConfig cfg;
  auto o = to_survival(rec("a", "2023-01-04"), OutcomeLabel::Unpublished, {}, cfg);
  CHECK(o.time_days == 731);
  CHECK_FALSE(o.event);
  auto p = published("b", "2023-01-01", "2023-12-31", Quartile::Q1, 9.0);
  auto e = to_survival(p, OutcomeLabel::Published, {1.0}, cfg);
  CHECK(e.time_days == 364);
  CHECK(e.event);
  CHECK(e.features == FeatureVector{1.0});
  CHECK_THROWS_AS(to_survival(rec("c", "2025-01-04"), OutcomeLabel::Unpublished, {}, cfg), ValidationError);
  // event time never exceeds the censoring horizon
  auto q = published("d", "2024-01-01", "2025-01-04", Quartile::Q1, 9.0);
  auto eq = to_survival(q, OutcomeLabel::Published, {}, cfg);
  CHECK(eq.time_days <= days_between(q.posted_date, cfg.censor_date));
}

TEST_CASE("kfold_split partitions") {
  SUBCASE("n=10 k=5") {
    auto f = kfold_split(10, 5, 1);
    REQUIRE(f.size() == 5);
    for (const auto& x : f) CHECK(x.size() == 2);
  }
  SUBCASE("n=1083 k=5 sizes") {
    std::vector<bool> labels(1083);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 385;
    for (const auto& f : {kfold_split(1083, 5, 9), kfold_split(labels, 5, 9)}) {
      std::multiset<std::size_t> sizes;
      for (const auto& x : f) sizes.insert(x.size());
      CHECK(sizes == std::multiset<std::size_t>{216, 216, 217, 217, 217});
    }
  }
  SUBCASE("exhaustive disjoint cover and determinism") {
    for (std::size_t n = 2; n <= 40; ++n)
      for (std::size_t k = 2; k <= std::min<std::size_t>(n, 7); ++k) {
        std::vector<bool> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = (i * 7) % 3 == 0;
        for (const auto& f : {kfold_split(n, k, n * 31 + k), kfold_split(labels, k, n * 31 + k)}) {
          std::vector<int> seen(n, 0);
          std::size_t lo = n, hi = 0;
          for (const auto& x : f) {
            lo = std::min(lo, x.size());
            hi = std::max(hi, x.size());
            for (auto i : x) ++seen[i];
          }
          CHECK(hi - lo <= 1);
          CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        }
        CHECK(kfold_split(labels, k, 5) == kfold_split(labels, k, 5));
      }
  }
  SUBCASE("stratification balances positives") {
    std::vector<bool> labels(100, false);
    for (int i = 0; i < 30; ++i) labels[i] = true;
    for (const auto& f : kfold_split(labels, 5, 4)) {
      const auto pos = std::count_if(f.begin(), f.end(), [&](auto i) { return labels[i]; });
      CHECK(pos == 6);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(kfold_split(3, 5, 1), ValidationError);
    CHECK_THROWS_AS(kfold_split(10, 1, 1), ValidationError);
  }
}

TEST_CASE("record JSON round trip and parse errors") {
  auto r = published("10.1101/x", "2023-01-01", "2023-12-31", Quartile::Q1, 7.5);
  r.authors = {"A", "B"};
  r.usage_3mo = UsageMetrics{10, 5, 2};
  r.search_term_hits = {"stroke"};
  std::stringstream ss;
  write_records_jsonl(ss, {r, rec("y", "2022-05-05")});
  auto back = read_records_jsonl(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  // optional fields are omitted, not null
  CHECK(ss.str().find("null") == std::string::npos);

  std::stringstream bad;
  bad << to_json(r).dump() << "\n" << R"({"preprint_doi":"z","posted_date":"bogus"})" << "\n";
  try {
    read_records_jsonl(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.record_index() == 1);
  }
}
