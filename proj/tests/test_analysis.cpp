#include "alliance/analysis.hpp"

#include <algorithm>

#include <doctest.h>
#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/mock_rater.hpp"
#include "alliance/reporting.hpp"
#include "alliance/util.hpp"
#include "oracles.hpp"

using namespace alliance;
using nlohmann::json;

namespace {

const char* kRubricPath = DATA_DIR "/rubric/wai_o_s.en.json";

const Rubric& rubric() {
  static const Rubric r = load_rubric_file(kRubricPath);
  return r;
}

RatingRecord record_of(const std::string& sid, int qn, int run, int raw,
                       const std::string& rater = "m") {
  RatingRecord r;
  r.session_id = sid;
  r.question_id = question_id(qn);
  r.run_index = run;
  r.rater_id = rater;
  r.raw_score = raw;
  return r;
}

// Records whose normalized per-question means equal the given values.
std::vector<RatingRecord> session_records(const std::string& sid,
                                          const std::map<int, int>& normalized_scores,
                                          int runs = 1, const std::string& rater = "m") {
  std::vector<RatingRecord> records;
  for (const auto& [qn, normalized] : normalized_scores) {
    const Question& q = rubric().question(qn);
    const int raw = q.polarity == Polarity::Reverse ? 6 - normalized : normalized;
    for (int run = 0; run < runs; ++run) records.push_back(record_of(sid, qn, run, raw, rater));
  }
  return records;
}

std::map<int, int> uniform_scores(int v) {
  std::map<int, int> scores;
  for (int qn = 1; qn <= 12; ++qn) scores[qn] = v;
  return scores;
}

ScoreSheet sheet_with_totals(const std::string& sid, double value) {
  std::map<int, double> means;
  for (int qn = 1; qn <= 12; ++qn) means[qn] = value;
  return ScoreSheet::from_question_means(sid, "m", means, rubric());
}

}  // namespace

TEST_SUITE("aggregate") {
  TEST_CASE("dimension means from pinned question means") {
    std::map<int, double> means = {{1, 3.56}, {2, 3.69}, {3, 3.56}, {4, 3.47},
                                   {5, 3.46}, {6, 3.32}, {7, 3.75}, {8, 3.57},
                                   {9, 3.67}, {10, 3.37}, {11, 3.39}, {12, 3.97}};
    const ScoreSheet sheet = ScoreSheet::from_question_means("s", "experts", means, rubric());
    CHECK(round_to(sheet.per_dimension.at(Dimension::Goal), 2) == 3.57);
    CHECK(round_to(sheet.per_dimension.at(Dimension::AffectiveBond), 2) == 3.60);
    CHECK(sheet.per_dimension.at(Dimension::Approach) == doctest::Approx(3.525));
    CHECK(std::fabs(sheet.per_dimension.at(Dimension::Approach) - 3.52) <= 0.01 + 1e-12);
  }

  TEST_CASE("constant scores propagate to dimensions and total") {
    const ScoreSheet sheet = aggregate(session_records("s", uniform_scores(3)), rubric());
    for (Dimension d : kAllDimensions) CHECK(sheet.per_dimension.at(d) == 3.0);
    CHECK(sheet.total == 3.0);
  }

  TEST_CASE("normalization happens before averaging") {
    // Q1 is reverse: raw 1 means strong alliance.
    auto scores = uniform_scores(3);
    std::vector<RatingRecord> records = session_records("s", scores);
    for (RatingRecord& r : records) {
      if (r.question_id == "Q1") r.raw_score = 1;
    }
    const ScoreSheet sheet = aggregate(records, rubric());
    CHECK(sheet.per_question.at(1) == 5.0);
  }

  TEST_CASE("missing question coverage raises") {
    auto records = session_records("s", uniform_scores(4));
    std::erase_if(records, [](const RatingRecord& r) { return r.question_id == "Q7"; });
    CHECK_THROWS_WITH_AS(aggregate(records, rubric()),
                         "missing question coverage: Q7 in session s", DomainError);
  }

  TEST_CASE("permutation-invariant and linear in runs") {
    oracle::Rng rng(2024);
    std::vector<RatingRecord> records;
    for (int qn = 1; qn <= 12; ++qn)
      for (int run = 0; run < 3; ++run)
        records.push_back(record_of("s", qn, run, rng.uniform_int(1, 5)));
    const ScoreSheet base = aggregate(records, rubric());

    auto shuffled = records;
    for (size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[static_cast<size_t>(rng.uniform_int(0, int(i) - 1))]);
    const ScoreSheet permuted = aggregate(shuffled, rubric());
    for (int qn = 1; qn <= 12; ++qn)
      CHECK(base.per_question.at(qn) == permuted.per_question.at(qn));

    // grand mean equals mean of per-run means with equal run counts
    for (int qn = 1; qn <= 12; ++qn) {
      double run_mean_sum = 0;
      for (int run = 0; run < 3; ++run) {
        double sum = 0;
        int n = 0;
        for (const RatingRecord& r : records) {
          if (r.run_index == run && r.question_id == question_id(qn)) {
            sum += normalize_score(rubric().question(qn), r.raw_score);
            ++n;
          }
        }
        run_mean_sum += sum / n;
      }
      CHECK(base.per_question.at(qn) == doctest::Approx(run_mean_sum / 3).epsilon(1e-12));
    }
  }

  TEST_CASE("pooled annotator records average per question") {
    std::vector<RatingRecord> records;
    // three annotators scoring Q1..Q12; Q2 gets 3,4,5 -> mean 4
    for (int qn = 1; qn <= 12; ++qn) {
      int base = 0;
      for (const char* annotator : {"a1", "a2", "a3"}) {
        records.push_back(record_of("s", qn, 0, qn == 2 ? 3 + base : 3, annotator));
        ++base;
      }
    }
    const ScoreSheet sheet = aggregate(records, rubric());
    CHECK(sheet.per_question.at(2) == doctest::Approx(4.0));
    CHECK(sheet.rater_id == "mean(a1,a2,a3)");
  }
}

TEST_SUITE("self_consistency") {
  TEST_CASE("identical runs give ICC exactly 1 for every question") {
    std::vector<RatingRecord> records;
    oracle::Rng rng(7);
    // per-session per-question truth, three identical runs
    for (const char* sid : {"s1", "s2", "s3", "s4"}) {
      for (int qn = 1; qn <= 12; ++qn) {
        const int truth = rng.uniform_int(1, 5);
        for (int run = 0; run < 3; ++run) records.push_back(record_of(sid, qn, run, truth));
      }
    }
    // guarantee cross-session variance per question
    for (int qn = 1; qn <= 12; ++qn) {
      for (int run = 0; run < 3; ++run) {
        auto fix = [&](const std::string& sid, int score) {
          for (RatingRecord& r : records)
            if (r.session_id == sid && r.question_id == question_id(qn) && r.run_index == run)
              r.raw_score = score;
        };
        fix("s1", 1);
        fix("s2", 5);
      }
    }
    const ConsistencyReport report = self_consistency(records, rubric());
    for (int qn = 1; qn <= 12; ++qn) {
      REQUIRE(report.per_question.at(qn).defined);
      CHECK(report.per_question.at(qn).value == 1.0);
    }
    CHECK(report.overall.defined);
    CHECK(report.overall.value == 1.0);
    CHECK(report.n_sessions == 4);
    CHECK(report.runs == 3);
  }

  TEST_CASE("matches the stats oracle on planted matrices") {
    oracle::Rng rng(88);
    std::vector<RatingRecord> records;
    std::map<int, std::vector<std::vector<double>>> grids;
    const std::vector<std::string> sids = {"t1", "t2", "t3", "t4", "t5", "t6"};
    for (int qn = 1; qn <= 12; ++qn) {
      auto& grid = grids[qn];
      grid.assign(sids.size(), std::vector<double>(3));
      for (size_t i = 0; i < sids.size(); ++i) {
        for (int run = 0; run < 3; ++run) {
          const int score = rng.uniform_int(1, 5);
          grid[i][static_cast<size_t>(run)] =
              normalize_score(rubric().question(qn), score);
          records.push_back(record_of(sids[i], qn, run, score));
        }
      }
    }
    const ConsistencyReport report = self_consistency(records, rubric());
    for (int qn = 1; qn <= 12; ++qn) {
      if (!report.per_question.at(qn).defined) continue;  // degenerate draws
      CHECK(report.per_question.at(qn).value ==
            doctest::Approx(oracle::icc_a_k(grids[qn])).epsilon(1e-9));
    }
  }

  TEST_CASE("degenerate questions are reported undefined, not dropped") {
    std::vector<RatingRecord> records;
    for (const char* sid : {"s1", "s2", "s3"}) {
      for (int qn = 1; qn <= 12; ++qn) {
        for (int run = 0; run < 2; ++run) {
          // Q4: every cell identical -> degenerate
          int score = qn == 4 ? 3 : (sid[1] - '0');
          records.push_back(record_of(sid, qn, run, score));
        }
      }
    }
    const ConsistencyReport report = self_consistency(records, rubric());
    CHECK_FALSE(report.per_question.at(4).defined);
    CHECK(report.per_question.at(4).note.find("identical") != std::string::npos);
    CHECK(report.per_question.at(5).defined);
    // the dimension holding Q4 becomes undefined too, and so does overall
    CHECK_FALSE(report.per_dimension.at(Dimension::Goal).defined);
    CHECK_FALSE(report.overall.defined);
    CHECK(report.per_dimension.at(Dimension::Approach).defined);
  }

  TEST_CASE("misparse-then-retry leaves the table unchanged") {
    // A flaky but noise-free rater: retries resample the same hidden truth,
    // so the consistency table matches the retry-free run exactly.
    MockRaterConfig config;
    for (const char* sid : {"s1", "s2", "s3", "s4"})
      for (int qn = 1; qn <= 12; ++qn)
        config.hidden_truth[{sid, question_id(qn)}] = 1 + (qn + sid[1]) % 5;
    config.seed = 4242;

    auto run_pipeline = [&](double misbehave_rate) {
      MockRaterConfig c = config;
      c.misbehave_rate = misbehave_rate;
      MockRater mock(c);
      std::vector<RatingJob> jobs;
      for (const char* sid : {"s1", "s2", "s3", "s4"})
        for (int qn = 1; qn <= 12; ++qn)
          for (int run = 0; run < 3; ++run) {
            RatingJob job;
            job.session_id = sid;
            job.question_number = qn;
            job.run_index = run;
            jobs.push_back(job);
          }
      BatchOptions options;
      options.max_retries = 8;
      const BatchOutcome outcome =
          run_batch(jobs, [](const RatingJob&) { return "p"; }, mock, nullptr, options);
      REQUIRE(outcome.failures.empty());
      return outcome;
    };

    const BatchOutcome clean = run_pipeline(0.0);
    const BatchOutcome flaky = run_pipeline(0.2);
    CHECK(flaky.retries > 0);  // the fixture really did misbehave
    REQUIRE(clean.records.size() == flaky.records.size());
    for (size_t i = 0; i < clean.records.size(); ++i)
      CHECK(clean.records[i].raw_score == flaky.records[i].raw_score);

    const ConsistencyReport a = self_consistency(clean.records, rubric());
    const ConsistencyReport b = self_consistency(flaky.records, rubric());
    for (int qn = 1; qn <= 12; ++qn) {
      CHECK(a.per_question.at(qn).defined == b.per_question.at(qn).defined);
      if (a.per_question.at(qn).defined)
        CHECK(a.per_question.at(qn).value == b.per_question.at(qn).value);
    }
  }

  TEST_CASE("run-count mismatch raises") {
    std::vector<RatingRecord> records;
    for (const char* sid : {"s1", "s2"})
      for (int qn = 1; qn <= 12; ++qn)
        for (int run = 0; run < 2; ++run)
          records.push_back(record_of(sid, qn, run, 1 + (qn % 5)));
    records.push_back(record_of("s1", 3, 2, 4));  // extra run for one cell
    CHECK_THROWS_AS(self_consistency(records, rubric()), DomainError);
  }
}

TEST_SUITE("alignment") {
  TEST_CASE("cloned sheets give r exactly 1 everywhere") {
    std::vector<ScoreSheet> model, human;
    oracle::Rng rng(5);
    for (const char* sid : {"s1", "s2", "s3", "s4", "s5"}) {
      std::map<int, double> means;
      for (int qn = 1; qn <= 12; ++qn) means[qn] = rng.uniform_int(1, 5);
      model.push_back(ScoreSheet::from_question_means(sid, "m", means, rubric()));
      human.push_back(ScoreSheet::from_question_means(sid, "h", means, rubric()));
    }
    const AlignmentReport report = alignment(model, human, rubric());
    for (int qn = 1; qn <= 12; ++qn) {
      REQUIRE(report.per_question.at(qn).r.defined);
      CHECK(report.per_question.at(qn).r.value == 1.0);
      CHECK(report.per_question.at(qn).p.value == 0.0);
      CHECK(report.per_question.at(qn).stars == "***");
    }
    CHECK(report.overall.value == 1.0);
  }

  TEST_CASE("dimension and overall rows average question correlations") {
    oracle::Rng rng(17);
    std::vector<ScoreSheet> model, human;
    for (int i = 0; i < 12; ++i) {
      std::map<int, double> mm, hm;
      for (int qn = 1; qn <= 12; ++qn) {
        mm[qn] = rng.uniform(1.0, 5.0);
        hm[qn] = rng.uniform(1.0, 5.0);
      }
      const std::string sid = "s" + std::to_string(i);
      model.push_back(ScoreSheet::from_question_means(sid, "m", mm, rubric()));
      human.push_back(ScoreSheet::from_question_means(sid, "h", hm, rubric()));
    }
    const AlignmentReport report = alignment(model, human, rubric());

    for (Dimension d : kAllDimensions) {
      double sum = 0;
      for (const Question* q : rubric().questions_of(d))
        sum += report.per_question.at(q->number).r.value;
      CHECK(report.per_dimension.at(d).value == doctest::Approx(sum / 4).epsilon(1e-12));
    }
    const double overall = (report.per_dimension.at(Dimension::Goal).value +
                            report.per_dimension.at(Dimension::Approach).value +
                            report.per_dimension.at(Dimension::AffectiveBond).value) /
                           3.0;
    CHECK(report.overall.value == doctest::Approx(overall).epsilon(1e-12));

    // question-level r matches the extended-precision oracle
    for (int qn = 1; qn <= 12; ++qn) {
      std::vector<double> xs, ys;
      for (size_t i = 0; i < model.size(); ++i) {
        xs.push_back(model[i].per_question.at(qn));
        ys.push_back(human[i].per_question.at(qn));
      }
      CHECK(report.per_question.at(qn).r.value ==
            doctest::Approx(oracle::pearson_r(xs, ys)).epsilon(1e-10));
    }
  }

  TEST_CASE("zero-variance questions become undefined cells") {
    std::vector<ScoreSheet> model, human;
    oracle::Rng rng(3);
    for (const char* sid : {"a", "b", "c", "d"}) {
      std::map<int, double> mm, hm;
      for (int qn = 1; qn <= 12; ++qn) {
        mm[qn] = qn == 6 ? 3.0 : rng.uniform(1.0, 5.0);  // Q6 constant in model
        hm[qn] = rng.uniform(1.0, 5.0);
      }
      model.push_back(ScoreSheet::from_question_means(sid, "m", mm, rubric()));
      human.push_back(ScoreSheet::from_question_means(sid, "h", hm, rubric()));
    }
    const AlignmentReport report = alignment(model, human, rubric());
    CHECK_FALSE(report.per_question.at(6).r.defined);
    CHECK_FALSE(report.per_dimension.at(Dimension::Approach).defined);
    CHECK(report.per_dimension.at(Dimension::Goal).defined);
  }

  TEST_CASE("fewer than three common sessions raises") {
    std::vector<ScoreSheet> model = {sheet_with_totals("x", 3), sheet_with_totals("y", 4)};
    std::vector<ScoreSheet> human = {sheet_with_totals("x", 3), sheet_with_totals("z", 4)};
    CHECK_THROWS_AS(alignment(model, human, rubric()), DomainError);
  }
}

TEST_SUITE("experience") {
  namespace {
  SessionSet sessions_for(const std::vector<std::tuple<std::string, std::string, int>>& rows) {
    std::string lines;
    for (const auto& [sid, cid, seq] : rows) {
      lines += json{{"session_id", sid},
                    {"counselor_id", cid},
                    {"client_id", "u_" + sid},
                    {"sequence_no", seq},
                    {"utterances", json::array({{{"speaker", "client"}, {"text", "x"}}})}}
                   .dump() +
               "\n";
    }
    std::istringstream in(lines);
    return ingest(in);
  }
  }  // namespace

  TEST_CASE("tier boundaries") {
    CHECK(experience_tier(2) == ExperienceTier::Primary);
    CHECK(experience_tier(3) == ExperienceTier::Intermediate);
    CHECK(experience_tier(8) == ExperienceTier::Intermediate);
    CHECK(experience_tier(10) == ExperienceTier::Advanced);
    CHECK(experience_tier(0.5) == ExperienceTier::Primary);
    CHECK(experience_tier(25) == ExperienceTier::Advanced);
  }

  TEST_CASE("identical score multisets give t = 0, ns") {
    const SessionSet sessions = sessions_for(
        {{"a1", "cA", 1}, {"a2", "cA", 2}, {"b1", "cB", 1}, {"b2", "cB", 2}});
    std::vector<ScoreSheet> sheets = {
        sheet_with_totals("a1", 3.0), sheet_with_totals("a2", 4.0),
        sheet_with_totals("b1", 4.0), sheet_with_totals("b2", 3.0)};
    const ExperienceReport report = experience_comparison(
        sheets, sessions, {{"cA", 2}, {"cB", 10}});
    REQUIRE(report.pairwise.size() == 1);
    CHECK(report.pairwise[0].t.value == doctest::Approx(0.0));
    CHECK(report.pairwise[0].stars == "ns");
    CHECK(report.counselors[0].tier == ExperienceTier::Primary);
    CHECK(report.counselors[1].tier == ExperienceTier::Advanced);
  }

  TEST_CASE("counselors with fewer than two sessions are excluded with warning") {
    const SessionSet sessions =
        sessions_for({{"a1", "cA", 1}, {"a2", "cA", 2}, {"b1", "cB", 1}});
    std::vector<ScoreSheet> sheets = {sheet_with_totals("a1", 3.0),
                                      sheet_with_totals("a2", 3.5),
                                      sheet_with_totals("b1", 4.0)};
    const ExperienceReport report =
        experience_comparison(sheets, sessions, {{"cA", 2}, {"cB", 5}});
    CHECK(report.counselors.size() == 1);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("cB") != std::string::npos);
    CHECK(report.pairwise.empty());
  }

  TEST_CASE("matches the shipped fixture oracle") {
    const SessionSet sessions = ingest_file(FIXTURES_DIR "/experience/sessions.jsonl");
    const auto records = RatingStore::read_all(FIXTURES_DIR "/experience/ratings.jsonl");
    const auto sheets = sheets_from_records(records, rubric());
    const ExperienceReport report = experience_comparison(
        sheets, sessions,
        load_counselor_metadata(FIXTURES_DIR "/experience/counselors.jsonl"));

    const json expected = json::parse(read_file(FIXTURES_DIR "/experience/expected.json"));
    const double tol = expected["tolerance"].get<double>();
    for (const CounselorRow& row : report.counselors) {
      const json& want = expected["counselors"][row.counselor_id];
      CHECK(row.n_sessions == want["n_sessions"].get<size_t>());
      CHECK(std::fabs(row.mean_total - want["mean_total"].get<double>()) < tol);
    }
    for (const PairwiseTTestCell& cell : report.pairwise) {
      const json& want = expected["pairwise"][cell.counselor_a + "|" + cell.counselor_b];
      REQUIRE(cell.t.defined);
      CHECK(std::fabs(cell.t.value - want["t"].get<double>()) < 1e-6);
      CHECK(std::fabs(cell.p.value - want["p"].get<double>()) < 1e-6);
      CHECK(cell.stars == want["stars"].get<std::string>());
    }
    // the planted strong-vs-weak pair is decisively significant
    CHECK(report.pairwise[0].counselor_a == "E1");
    CHECK(report.pairwise[0].counselor_b == "E2");
    CHECK(report.pairwise[0].stars == "***");
  }
}

TEST_SUITE("phase_trend") {
  TEST_CASE("boundaries follow the floor rule") {
    auto b9 = phase_boundaries(9);
    CHECK(b9[0] == std::pair<size_t, size_t>{0, 3});
    CHECK(b9[1] == std::pair<size_t, size_t>{3, 6});
    CHECK(b9[2] == std::pair<size_t, size_t>{6, 9});
    auto b10 = phase_boundaries(10);
    CHECK(b10[0] == std::pair<size_t, size_t>{0, 3});
    CHECK(b10[1] == std::pair<size_t, size_t>{3, 6});
    CHECK(b10[2] == std::pair<size_t, size_t>{6, 10});
    auto b3 = phase_boundaries(3);
    CHECK(b3[0] == std::pair<size_t, size_t>{0, 1});
    CHECK(b3[1] == std::pair<size_t, size_t>{1, 2});
    CHECK(b3[2] == std::pair<size_t, size_t>{2, 3});
    // partitions are contiguous, exhaustive and disjoint
    for (size_t n = 3; n <= 30; ++n) {
      const auto b = phase_boundaries(n);
      CHECK(b[0].first == 0);
      CHECK(b[0].second == b[1].first);
      CHECK(b[1].second == b[2].first);
      CHECK(b[2].second == n);
      CHECK(b[0].second - b[0].first >= 1);
      CHECK(b[1].second - b[1].first >= 1);
      CHECK(b[2].second - b[2].first >= 1);
    }
  }

  TEST_CASE("constant pair counts as no change") {
    std::string lines;
    std::vector<ScoreSheet> sheets;
    for (int seq = 1; seq <= 4; ++seq) {
      const std::string sid = "k" + std::to_string(seq);
      lines += json{{"session_id", sid},
                    {"counselor_id", "c"},
                    {"client_id", "u"},
                    {"sequence_no", seq},
                    {"utterances", json::array({{{"speaker", "client"}, {"text", "x"}}})}}
                   .dump() +
               "\n";
      sheets.push_back(sheet_with_totals(sid, 3.25));
    }
    std::istringstream in(lines);
    const PhaseReport report = phase_trend(sheets, ingest(in));
    REQUIRE(report.pairs.size() == 1);
    CHECK(report.pairs[0].total_means.at(Phase::Early) ==
          report.pairs[0].total_means.at(Phase::Late));
    CHECK(report.declined_or_flat_share.value == 1.0);
    CHECK(report.improved_one_level_share.value == 0.0);
  }

  TEST_CASE("matches the shipped fixture oracle") {
    const SessionSet sessions = ingest_file(FIXTURES_DIR "/phases/sessions.jsonl");
    const auto sheets =
        sheets_from_records(RatingStore::read_all(FIXTURES_DIR "/phases/ratings.jsonl"), rubric());
    const PhaseReport report = phase_trend(sheets, sessions);

    const json expected = json::parse(read_file(FIXTURES_DIR "/phases/expected.json"));
    const double tol = expected["tolerance"].get<double>();

    REQUIRE(report.pairs.size() == expected["pairs"].size());
    for (const PairPhaseRow& row : report.pairs) {
      const json& want = expected["pairs"][row.counselor_id + "|" + row.client_id];
      CHECK(row.n_sessions == want["n_sessions"].get<size_t>());
      const char* phases[] = {"early", "middle", "late"};
      const Phase keys[] = {Phase::Early, Phase::Middle, Phase::Late};
      for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(row.total_means.at(keys[i]) -
                        want[phases[i]]["total"].get<double>()) < tol);
        CHECK(std::fabs(row.dimension_means.at(keys[i]).at(Dimension::Goal) -
                        want[phases[i]]["goal"].get<double>()) < tol);
      }
    }
    CHECK(std::fabs(report.declined_or_flat_share.value -
                    expected["declined_or_flat_share"].get<double>()) < tol);
    CHECK(std::fabs(report.improved_one_level_share.value -
                    expected["improved_one_level_share"].get<double>()) < tol);
    for (Phase p : {Phase::Early, Phase::Middle, Phase::Late}) {
      CHECK(std::fabs(report.corpus_total_means.at(p).value -
                      expected["corpus"][phase_label(p)]["total"].get<double>()) < tol);
    }
    // the 2-session pair is excluded with a warning
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("pu4") != std::string::npos);
    // the 10-session pair splits 3/3/4
    const json& long_pair = expected["pairs"]["pc1|pu1"];
    CHECK(long_pair["phase_sizes"] == json::array({3, 3, 4}));
  }
}

TEST_SUITE("outcome_correlation") {
  namespace {
  SessionSet ors_sessions(const std::vector<std::pair<std::string, double>>& rows) {
    std::string lines;
    for (const auto& [sid, overall] : rows) {
      lines += json{{"session_id", sid},
                    {"counselor_id", "c"},
                    {"client_id", "u_" + sid},
                    {"sequence_no", 1},
                    {"utterances", json::array({{{"speaker", "client"}, {"text", "x"}}})},
                    {"ors",
                     {{"physical_mental", overall},
                      {"relationships", overall},
                      {"social_life", overall},
                      {"overall", overall}}}}
                   .dump() +
               "\n";
    }
    std::istringstream in(lines);
    return ingest(in);
  }
  }  // namespace

  TEST_CASE("affine relation gives r = 1 down the total row") {
    std::vector<std::pair<std::string, double>> rows;
    std::vector<ScoreSheet> sheets;
    for (int i = 0; i < 6; ++i) {
      const double total = 1.5 + 0.5 * i;
      const std::string sid = "s" + std::to_string(i);
      rows.push_back({sid, 20.0 * total});
      sheets.push_back(sheet_with_totals(sid, total));
    }
    const OutcomeReport report = outcome_correlation(sheets, ors_sessions(rows));
    for (OutcomeAspect aspect :
         {OutcomeAspect::PhysicalMental, OutcomeAspect::Relationships,
          OutcomeAspect::SocialLife, OutcomeAspect::Overall}) {
      const auto& entry = report.matrix.at("total").at(aspect);
      REQUIRE(entry.r.defined);
      CHECK(entry.r.value == doctest::Approx(1.0));
    }
  }

  TEST_CASE("constant outcome columns are flagged undefined") {
    std::vector<std::pair<std::string, double>> rows = {
        {"a", 50}, {"b", 50}, {"c", 50}, {"d", 50}};
    std::vector<ScoreSheet> sheets;
    double v = 2.0;
    for (const auto& [sid, unused] : rows) sheets.push_back(sheet_with_totals(sid, v += 0.5));
    const OutcomeReport report = outcome_correlation(sheets, ors_sessions(rows));
    CHECK_FALSE(report.matrix.at("total").at(OutcomeAspect::Overall).r.defined);
  }

  TEST_CASE("insufficient paired sessions raises") {
    std::vector<std::pair<std::string, double>> rows = {{"a", 40}, {"b", 60}};
    std::vector<ScoreSheet> sheets = {sheet_with_totals("a", 2), sheet_with_totals("b", 3)};
    CHECK_THROWS_AS(outcome_correlation(sheets, ors_sessions(rows)), DomainError);
  }

  TEST_CASE("matches the shipped fixture oracle") {
    const SessionSet sessions = ingest_file(FIXTURES_DIR "/ors/sessions.jsonl");
    const auto sheets =
        sheets_from_records(RatingStore::read_all(FIXTURES_DIR "/ors/ratings.jsonl"), rubric());
    const OutcomeReport report = outcome_correlation(sheets, sessions);

    const json expected = json::parse(read_file(FIXTURES_DIR "/ors/expected.json"));
    const double tol = expected["tolerance"].get<double>();
    CHECK(report.n_sessions == expected["n_sessions"].get<size_t>());
    for (const std::string& row : report.row_order) {
      for (OutcomeAspect aspect :
           {OutcomeAspect::PhysicalMental, OutcomeAspect::Relationships,
            OutcomeAspect::SocialLife, OutcomeAspect::Overall}) {
        const auto& entry = report.matrix.at(row).at(aspect);
        const json& want = expected["matrix"][row][outcome_aspect_label(aspect)];
        REQUIRE(entry.r.defined);
        CHECK(std::fabs(entry.r.value - want["r"].get<double>()) < tol);
        CHECK(std::fabs(entry.p.value - want["p"].get<double>()) < 1e-6);
      }
    }
    // the planted total/overall correlation is near 0.30
    CHECK(std::fabs(report.matrix.at("total").at(OutcomeAspect::Overall).r.value - 0.30) <
          0.12);
  }
}

TEST_SUITE("report_records") {
  TEST_CASE("consistency records parse as one json line per row") {
    std::vector<RatingRecord> records;
    oracle::Rng rng(31);
    for (const char* sid : {"s1", "s2", "s3", "s4", "s5"})
      for (int qn = 1; qn <= 12; ++qn)
        for (int run = 0; run < 3; ++run)
          records.push_back(record_of(sid, qn, run, rng.uniform_int(1, 5)));
    const ConsistencyReport report = self_consistency(records, rubric());
    const std::string out = consistency_records(report, rubric());
    std::istringstream in(out);
    std::string line;
    std::vector<json> rows;
    while (std::getline(in, line)) rows.push_back(json::parse(line));
    REQUIRE(rows.size() == 16);  // 12 questions + 3 dimensions + overall
    CHECK(rows.front()["row"] == "Q1");
    CHECK(rows[12]["row"] == "goal");
    CHECK(rows.back()["row"] == "overall");
    CHECK(rows.back().contains("effects_model"));
    CHECK(rows.back()["n_sessions"] == 5);
    CHECK(rows.back()["runs"] == 3);
  }

  TEST_CASE("alignment records carry r, p and stars per question") {
    oracle::Rng rng(32);
    std::vector<ScoreSheet> model, human;
    for (int i = 0; i < 8; ++i) {
      std::map<int, double> mm, hm;
      for (int qn = 1; qn <= 12; ++qn) {
        mm[qn] = rng.uniform(1.0, 5.0);
        hm[qn] = 0.7 * mm[qn] + rng.uniform(0.3, 1.5);
      }
      model.push_back(ScoreSheet::from_question_means("s" + std::to_string(i), "m", mm, rubric()));
      human.push_back(ScoreSheet::from_question_means("s" + std::to_string(i), "h", hm, rubric()));
    }
    const std::string out = alignment_records(alignment(model, human, rubric()), rubric());
    std::istringstream in(out);
    std::string line;
    size_t question_rows = 0;
    while (std::getline(in, line)) {
      const json rec = json::parse(line);
      if (rec["row"].get<std::string>()[0] == 'Q') {
        CHECK(rec.contains("r"));
        CHECK(rec.contains("p"));
        CHECK(rec.contains("stars"));
        ++question_rows;
      }
    }
    CHECK(question_rows == 12);
  }
}

TEST_SUITE("distribution") {
  TEST_CASE("single sheet has undefined sd") {
    const DistributionReport report =
        descriptive_distribution({sheet_with_totals("s", 3.4)}, rubric());
    CHECK(report.per_question.at(1).mean.value == doctest::Approx(3.4));
    CHECK_FALSE(report.per_question.at(1).sd.defined);
    CHECK(report.total.histogram[histogram_bin(3.4)] == 1);
  }

  TEST_CASE("bins cover [1,5] with 5.0 in the last bin") {
    CHECK(histogram_bin(1.0) == 0);
    CHECK(histogram_bin(1.49) == 0);
    CHECK(histogram_bin(1.5) == 1);
    CHECK(histogram_bin(3.0) == 4);
    CHECK(histogram_bin(4.99) == 7);
    CHECK(histogram_bin(5.0) == 7);
    CHECK_THROWS_AS(histogram_bin(0.9), DomainError);
    CHECK_THROWS_AS(histogram_bin(5.1), DomainError);
  }

  TEST_CASE("five sheets match a hand tally") {
    const double totals[] = {2.0, 2.5, 3.0, 4.0, 4.5};
    std::vector<ScoreSheet> sheets;
    int i = 0;
    for (double t : totals) sheets.push_back(sheet_with_totals("s" + std::to_string(i++), t));
    const DistributionReport report = descriptive_distribution(sheets, rubric());
    CHECK(report.total.mean.value == doctest::Approx(3.2));
    // hand-computed n-1 sd of {2,2.5,3,4,4.5}
    CHECK(report.total.sd.value == doctest::Approx(1.0368220676));
    CHECK(report.total.histogram[2] == 1);  // 2.0
    CHECK(report.total.histogram[3] == 1);  // 2.5
    CHECK(report.total.histogram[4] == 1);  // 3.0
    CHECK(report.total.histogram[6] == 1);  // 4.0
    CHECK(report.total.histogram[7] == 1);  // 4.5
    CHECK(report.n_sheets == 5);
  }

  TEST_CASE("empty input raises") {
    CHECK_THROWS_AS(descriptive_distribution({}, rubric()), DomainError);
  }
}
