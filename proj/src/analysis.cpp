#include "alliance/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Mean of cells; undefined as soon as any member is undefined.
Cell mean_cell(const std::vector<Cell>& cells) {
  std::vector<double> values;
  for (const Cell& c : cells) {
    if (!c.defined) return Cell::undefined("aggregates an undefined cell: " + c.note);
    values.push_back(c.value);
  }
  if (values.empty()) return Cell::undefined("no values");
  return Cell::of(mean_of(values));
}

}  // namespace

ScoreSheet ScoreSheet::from_question_means(std::string session_id, std::string rater_id,
                                           const std::map<int, double>& question_means,
                                           const Rubric& rubric) {
  ScoreSheet sheet;
  sheet.session_id = std::move(session_id);
  sheet.rater_id = std::move(rater_id);
  for (const Question& q : rubric.questions()) {
    auto it = question_means.find(q.number);
    if (it == question_means.end())
      throw DomainError("missing question coverage: " + q.id);
    sheet.per_question[q.number] = it->second;
  }
  double total = 0;
  for (Dimension d : kAllDimensions) {
    std::vector<double> values;
    for (const Question* q : rubric.questions_of(d))
      values.push_back(sheet.per_question.at(q->number));
    sheet.per_dimension[d] = mean_of(values);
  }
  for (const auto& [qn, v] : sheet.per_question) total += v;
  sheet.total = total / static_cast<double>(kQuestionCount);
  return sheet;
}

ScoreSheet aggregate(const std::vector<RatingRecord>& records, const Rubric& rubric,
                     const std::string& rater_label) {
  if (records.empty()) throw DomainError("aggregate: no records");
  const std::string& session_id = records.front().session_id;
  std::set<std::string> raters;
  std::map<int, std::vector<double>> normalized;
  for (const RatingRecord& r : records) {
    if (r.session_id != session_id)
      throw DomainError("aggregate: records span sessions (" + session_id + " vs " +
                        r.session_id + ")");
    raters.insert(r.rater_id);
    const Question& q = rubric.question(r.question_id);
    normalized[q.number].push_back(normalize_score(q, r.raw_score));
  }
  std::map<int, double> question_means;
  for (const Question& q : rubric.questions()) {
    auto it = normalized.find(q.number);
    if (it == normalized.end())
      throw DomainError("missing question coverage: " + q.id + " in session " +
                        session_id);
    question_means[q.number] = mean_of(it->second);
  }
  std::string label = rater_label;
  if (label.empty()) {
    if (raters.size() == 1) {
      label = *raters.begin();
    } else {
      label = "mean(";
      bool first = true;
      for (const std::string& r : raters) {
        if (!first) label += ",";
        label += r;
        first = false;
      }
      label += ")";
    }
  }
  return ScoreSheet::from_question_means(session_id, label, question_means, rubric);
}

std::vector<ScoreSheet> sheets_from_records(const std::vector<RatingRecord>& records,
                                            const Rubric& rubric,
                                            const std::string& rater_label) {
  std::map<std::string, std::vector<RatingRecord>> by_session;
  for (const RatingRecord& r : records) by_session[r.session_id].push_back(r);
  std::vector<ScoreSheet> sheets;
  sheets.reserve(by_session.size());
  for (const auto& [sid, recs] : by_session)
    sheets.push_back(aggregate(recs, rubric, rater_label));
  return sheets;
}

ConsistencyReport self_consistency(const std::vector<RatingRecord>& records,
                                   const Rubric& rubric) {
  if (records.empty()) throw DomainError("self_consistency: no records");

  // (session, question) -> run_index -> normalized score
  std::map<std::string, std::map<int, std::map<int, double>>> grid;
  for (const RatingRecord& r : records) {
    const Question& q = rubric.question(r.question_id);
    auto& runs = grid[r.session_id][q.number];
    if (runs.count(r.run_index))
      throw DomainError("self_consistency: duplicate record for " + r.key());
    runs[r.run_index] = normalize_score(q, r.raw_score);
  }

  // Uniform run count everywhere.
  size_t expected_runs = 0;
  for (const auto& [sid, questions] : grid) {
    for (const auto& [qn, runs] : questions) {
      if (expected_runs == 0) expected_runs = runs.size();
      if (runs.size() != expected_runs) {
        throw DomainError("self_consistency: run-count mismatch at " + sid + "/" +
                          question_id(qn) + " (" + std::to_string(runs.size()) + " vs " +
                          std::to_string(expected_runs) + ")");
      }
    }
  }

  std::vector<std::string> session_ids;
  for (const auto& [sid, questions] : grid) {
    if (questions.size() != static_cast<size_t>(kQuestionCount))
      throw DomainError("self_consistency: incomplete question coverage in " + sid);
    session_ids.push_back(sid);
  }
  std::sort(session_ids.begin(), session_ids.end());

  ConsistencyReport report;
  report.n_sessions = session_ids.size();
  report.runs = expected_runs;

  for (const Question& q : rubric.questions()) {
    stats::RatingMatrix m(session_ids.size(), expected_runs);
    for (size_t i = 0; i < session_ids.size(); ++i) {
      const auto& runs = grid[session_ids[i]].at(q.number);
      size_t j = 0;
      for (const auto& [run, score] : runs) m.at(i, j++) = score;
    }
    try {
      const auto result = stats::icc(m, stats::IccForm::AbsoluteAgreementMeanOfK);
      report.per_question[q.number] = Cell::of(result.icc);
    } catch (const Error& e) {
      report.per_question[q.number] = Cell::undefined(e.what());
    }
  }

  std::vector<Cell> dimension_cells;
  for (Dimension d : kAllDimensions) {
    std::vector<Cell> cells;
    for (const Question* q : rubric.questions_of(d))
      cells.push_back(report.per_question.at(q->number));
    report.per_dimension[d] = mean_cell(cells);
    dimension_cells.push_back(report.per_dimension[d]);
  }
  report.overall = mean_cell(dimension_cells);
  return report;
}

AlignmentReport alignment(const std::vector<ScoreSheet>& model_sheets,
                          const std::vector<ScoreSheet>& human_sheets,
                          const Rubric& rubric) {
  std::map<std::string, const ScoreSheet*> humans;
  for (const ScoreSheet& s : human_sheets) humans[s.session_id] = &s;

  std::vector<std::pair<const ScoreSheet*, const ScoreSheet*>> matched;
  for (const ScoreSheet& m : model_sheets) {
    auto it = humans.find(m.session_id);
    if (it != humans.end()) matched.emplace_back(&m, it->second);
  }
  std::sort(matched.begin(), matched.end(), [](const auto& a, const auto& b) {
    return a.first->session_id < b.first->session_id;
  });
  if (matched.size() < 3)
    throw DomainError("alignment: fewer than 3 common sessions (" +
                      std::to_string(matched.size()) + ")");

  AlignmentReport report;
  report.n_sessions = matched.size();

  for (const Question& q : rubric.questions()) {
    std::vector<double> xs, ys;
    for (const auto& [model, human] : matched) {
      xs.push_back(model->per_question.at(q.number));
      ys.push_back(human->per_question.at(q.number));
    }
    AlignmentEntry entry;
    try {
      const auto result = stats::pearson(xs, ys);
      entry.r = Cell::of(result.r);
      entry.p = Cell::of(result.p_two_sided);
      entry.stars = stats::significance_stars(result.p_two_sided);
    } catch (const Error& e) {
      entry.r = Cell::undefined(e.what());
      entry.p = Cell::undefined(e.what());
    }
    report.per_question[q.number] = entry;
  }

  std::vector<Cell> dimension_cells;
  for (Dimension d : kAllDimensions) {
    std::vector<Cell> cells;
    for (const Question* q : rubric.questions_of(d))
      cells.push_back(report.per_question.at(q->number).r);
    report.per_dimension[d] = mean_cell(cells);
    dimension_cells.push_back(report.per_dimension[d]);
  }
  report.overall = mean_cell(dimension_cells);
  return report;
}

const std::string& experience_tier_label(ExperienceTier tier) {
  static const std::string labels[] = {"primary", "intermediate", "advanced"};
  return labels[static_cast<int>(tier)];
}

ExperienceTier experience_tier(double years) {
  if (years <= 2.0) return ExperienceTier::Primary;
  if (years >= 10.0) return ExperienceTier::Advanced;
  return ExperienceTier::Intermediate;
}

std::vector<CounselorExperience> load_counselor_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open counselor metadata file: " + path);
  std::vector<CounselorExperience> out;
  std::set<std::string> seen;
  for_each_line(in, [&](size_t lineno, const std::string& line) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("counselor metadata line " + std::to_string(lineno) + ": " +
                        e.what());
    }
    CounselorExperience ce;
    try {
      ce.counselor_id = rec.at("counselor_id").get<std::string>();
      ce.years = rec.at("years_experience").get<double>();
    } catch (const json::exception& e) {
      throw SchemaError("counselor metadata line " + std::to_string(lineno) + ": " +
                        e.what());
    }
    if (!seen.insert(ce.counselor_id).second)
      throw SchemaError("duplicate counselor metadata: " + ce.counselor_id);
    out.push_back(std::move(ce));
  });
  return out;
}

ExperienceReport experience_comparison(const std::vector<ScoreSheet>& sheets,
                                       const SessionSet& sessions,
                                       const std::vector<CounselorExperience>& metadata) {
  std::map<std::string, double> years;
  for (const CounselorExperience& ce : metadata) years[ce.counselor_id] = ce.years;

  // counselor -> per-session totals and dimension values, session-weighted
  std::map<std::string, std::vector<const ScoreSheet*>> by_counselor;
  for (const ScoreSheet& sheet : sheets) {
    const Session& session = sessions.by_id(sheet.session_id);
    by_counselor[session.counselor_id].push_back(&sheet);
  }

  ExperienceReport report;
  std::map<std::string, std::vector<double>> totals;
  for (auto& [cid, sheet_ptrs] : by_counselor) {
    if (!years.count(cid))
      throw DomainError("no years-of-experience metadata for counselor " + cid);
    if (sheet_ptrs.size() < 2) {
      report.warnings.push_back("counselor " + cid + " excluded: only " +
                                std::to_string(sheet_ptrs.size()) + " scored session(s)");
      continue;
    }
    CounselorRow row;
    row.counselor_id = cid;
    row.years = years.at(cid);
    row.tier = experience_tier(row.years);
    row.n_sessions = sheet_ptrs.size();
    std::vector<double> t;
    std::map<Dimension, std::vector<double>> dims;
    for (const ScoreSheet* s : sheet_ptrs) {
      t.push_back(s->total);
      for (Dimension d : kAllDimensions) dims[d].push_back(s->per_dimension.at(d));
    }
    row.mean_total = mean_of(t);
    for (Dimension d : kAllDimensions) row.per_dimension[d] = mean_of(dims[d]);
    totals[cid] = std::move(t);
    report.counselors.push_back(std::move(row));
  }
  std::sort(report.counselors.begin(), report.counselors.end(),
            [](const CounselorRow& a, const CounselorRow& b) {
              return a.counselor_id < b.counselor_id;
            });

  // Tier rows: mean of counselor-level means.
  for (ExperienceTier tier : {ExperienceTier::Primary, ExperienceTier::Intermediate,
                              ExperienceTier::Advanced}) {
    TierRow trow;
    trow.tier = tier;
    std::vector<double> tier_totals;
    std::map<Dimension, std::vector<double>> tier_dims;
    for (const CounselorRow& row : report.counselors) {
      if (row.tier != tier) continue;
      trow.counselor_ids.push_back(row.counselor_id);
      tier_totals.push_back(row.mean_total);
      for (Dimension d : kAllDimensions) tier_dims[d].push_back(row.per_dimension.at(d));
    }
    if (tier_totals.empty()) {
      trow.mean_total = Cell::undefined("no counselors in tier");
      for (Dimension d : kAllDimensions)
        trow.per_dimension[d] = Cell::undefined("no counselors in tier");
    } else {
      trow.mean_total = Cell::of(mean_of(tier_totals));
      for (Dimension d : kAllDimensions)
        trow.per_dimension[d] = Cell::of(mean_of(tier_dims[d]));
    }
    report.tiers.push_back(std::move(trow));
  }

  // All-pairs Welch t on per-session totals.
  for (size_t i = 0; i < report.counselors.size(); ++i) {
    for (size_t j = i + 1; j < report.counselors.size(); ++j) {
      PairwiseTTestCell cell;
      cell.counselor_a = report.counselors[i].counselor_id;
      cell.counselor_b = report.counselors[j].counselor_id;
      try {
        const auto result =
            stats::welch_t(totals.at(cell.counselor_a), totals.at(cell.counselor_b));
        cell.t = Cell::of(result.t);
        cell.p = Cell::of(result.p_two_sided);
        cell.stars = stats::significance_stars(result.p_two_sided);
      } catch (const Error& e) {
        cell.t = Cell::undefined(e.what());
        cell.p = Cell::undefined(e.what());
      }
      report.pairwise.push_back(std::move(cell));
    }
  }
  return report;
}

const std::string& phase_label(Phase p) {
  static const std::string labels[] = {"early", "middle", "late"};
  return labels[static_cast<int>(p)];
}

std::array<std::pair<size_t, size_t>, 3> phase_boundaries(size_t n) {
  const size_t first = n / 3;
  const size_t second = 2 * n / 3;
  return {{{0, first}, {first, second}, {second, n}}};
}

PhaseReport phase_trend(const std::vector<ScoreSheet>& sheets, const SessionSet& sessions) {
  // (counselor, client) -> sequence_no -> sheet
  std::map<std::pair<std::string, std::string>, std::map<int, const ScoreSheet*>> pairs;
  for (const ScoreSheet& sheet : sheets) {
    const Session& session = sessions.by_id(sheet.session_id);
    pairs[{session.counselor_id, session.client_id}][session.sequence_no] = &sheet;
  }

  PhaseReport report;
  std::map<Phase, std::map<Dimension, std::vector<double>>> corpus_dims;
  std::map<Phase, std::vector<double>> corpus_totals;
  size_t declined_or_flat = 0, improved = 0, counted_pairs = 0;

  for (const auto& [key, by_seq] : pairs) {
    if (by_seq.size() < 3) {
      report.warnings.push_back("pair (" + key.first + ", " + key.second +
                                ") excluded: only " + std::to_string(by_seq.size()) +
                                " scored session(s), need 3");
      continue;
    }
    std::vector<const ScoreSheet*> ordered;
    for (const auto& [seq, sheet] : by_seq) ordered.push_back(sheet);

    PairPhaseRow row;
    row.counselor_id = key.first;
    row.client_id = key.second;
    row.n_sessions = ordered.size();

    const auto bounds = phase_boundaries(ordered.size());
    const Phase phases[] = {Phase::Early, Phase::Middle, Phase::Late};
    for (int pi = 0; pi < 3; ++pi) {
      const auto [begin, end] = bounds[static_cast<size_t>(pi)];
      std::vector<double> totals;
      std::map<Dimension, std::vector<double>> dims;
      for (size_t i = begin; i < end; ++i) {
        totals.push_back(ordered[i]->total);
        for (Dimension d : kAllDimensions)
          dims[d].push_back(ordered[i]->per_dimension.at(d));
      }
      row.total_means[phases[pi]] = mean_of(totals);
      for (Dimension d : kAllDimensions)
        row.dimension_means[phases[pi]][d] = mean_of(dims[d]);
      corpus_totals[phases[pi]].push_back(row.total_means[phases[pi]]);
      for (Dimension d : kAllDimensions)
        corpus_dims[phases[pi]][d].push_back(row.dimension_means[phases[pi]][d]);
    }

    // Trend classification at report precision (2 decimals).
    const double early = round_to(row.total_means.at(Phase::Early), 2);
    const double late = round_to(row.total_means.at(Phase::Late), 2);
    if (late <= early) ++declined_or_flat;
    if (late >= early + 1.0) ++improved;
    ++counted_pairs;

    report.pairs.push_back(std::move(row));
  }

  for (Phase p : {Phase::Early, Phase::Middle, Phase::Late}) {
    if (corpus_totals[p].empty()) {
      report.corpus_total_means[p] = Cell::undefined("no pairs with 3+ sessions");
      for (Dimension d : kAllDimensions)
        report.corpus_dimension_means[p][d] = Cell::undefined("no pairs with 3+ sessions");
    } else {
      report.corpus_total_means[p] = Cell::of(mean_of(corpus_totals[p]));
      for (Dimension d : kAllDimensions)
        report.corpus_dimension_means[p][d] = Cell::of(mean_of(corpus_dims[p][d]));
    }
  }
  if (counted_pairs == 0) {
    report.declined_or_flat_share = Cell::undefined("no pairs with 3+ sessions");
    report.improved_one_level_share = Cell::undefined("no pairs with 3+ sessions");
  } else {
    report.declined_or_flat_share =
        Cell::of(static_cast<double>(declined_or_flat) / static_cast<double>(counted_pairs));
    report.improved_one_level_share =
        Cell::of(static_cast<double>(improved) / static_cast<double>(counted_pairs));
  }
  return report;
}

const std::string& outcome_aspect_label(OutcomeAspect aspect) {
  static const std::string labels[] = {"physical_mental", "relationships", "social_life",
                                       "overall"};
  return labels[static_cast<int>(aspect)];
}

OutcomeReport outcome_correlation(const std::vector<ScoreSheet>& sheets,
                                  const SessionSet& sessions) {
  struct Paired {
    const ScoreSheet* sheet;
    const OutcomeRecord* ors;
  };
  std::vector<Paired> paired;
  for (const ScoreSheet& sheet : sheets) {
    const Session& session = sessions.by_id(sheet.session_id);
    if (session.ors) paired.push_back({&sheet, &*session.ors});
  }
  if (paired.size() < 3)
    throw DomainError("outcome_correlation: fewer than 3 sessions carry outcome records (" +
                      std::to_string(paired.size()) + ")");

  OutcomeReport report;
  report.n_sessions = paired.size();
  report.row_order = {dimension_key(Dimension::Goal), dimension_key(Dimension::Approach),
                      dimension_key(Dimension::AffectiveBond), "total"};

  auto row_values = [&](const std::string& row) {
    std::vector<double> v;
    for (const Paired& p : paired) {
      if (row == "total") {
        v.push_back(p.sheet->total);
      } else {
        v.push_back(p.sheet->per_dimension.at(dimension_from_key(row)));
      }
    }
    return v;
  };
  auto aspect_values = [&](OutcomeAspect aspect) {
    std::vector<double> v;
    for (const Paired& p : paired) {
      switch (aspect) {
        case OutcomeAspect::PhysicalMental: v.push_back(p.ors->physical_mental); break;
        case OutcomeAspect::Relationships: v.push_back(p.ors->relationships); break;
        case OutcomeAspect::SocialLife: v.push_back(p.ors->social_life); break;
        case OutcomeAspect::Overall: v.push_back(p.ors->overall); break;
      }
    }
    return v;
  };

  for (const std::string& row : report.row_order) {
    const std::vector<double> xs = row_values(row);
    for (OutcomeAspect aspect :
         {OutcomeAspect::PhysicalMental, OutcomeAspect::Relationships,
          OutcomeAspect::SocialLife, OutcomeAspect::Overall}) {
      OutcomeReport::Entry entry;
      try {
        const auto result = stats::pearson(xs, aspect_values(aspect));
        entry.r = Cell::of(result.r);
        entry.p = Cell::of(result.p_two_sided);
        entry.stars = stats::significance_stars(result.p_two_sided);
      } catch (const Error& e) {
        entry.r = Cell::undefined(e.what());
        entry.p = Cell::undefined(e.what());
      }
      report.matrix[row][aspect] = entry;
    }
  }
  return report;
}

size_t histogram_bin(double score) {
  if (!(score >= 1.0 && score <= 5.0))
    throw DomainError("histogram score outside [1,5]: " + std::to_string(score));
  const size_t bin = static_cast<size_t>((score - 1.0) / 0.5);
  return std::min<size_t>(bin, 7);
}

namespace {

DistributionRow distribution_row(const std::vector<double>& values) {
  DistributionRow row;
  row.mean = Cell::of(mean_of(values));
  if (values.size() >= 2) {
    row.sd = Cell::of(stats::sample_sd(values));
  } else {
    row.sd = Cell::undefined("single observation");
  }
  for (double v : values) ++row.histogram[histogram_bin(v)];
  return row;
}

}  // namespace

DistributionReport descriptive_distribution(const std::vector<ScoreSheet>& sheets,
                                            const Rubric& rubric) {
  if (sheets.empty()) throw DomainError("descriptive_distribution: no sheets");
  DistributionReport report;
  report.n_sheets = sheets.size();
  for (const Question& q : rubric.questions()) {
    std::vector<double> values;
    for (const ScoreSheet& s : sheets) values.push_back(s.per_question.at(q.number));
    report.per_question[q.number] = distribution_row(values);
  }
  for (Dimension d : kAllDimensions) {
    std::vector<double> values;
    for (const ScoreSheet& s : sheets) values.push_back(s.per_dimension.at(d));
    report.per_dimension[d] = distribution_row(values);
  }
  std::vector<double> totals;
  for (const ScoreSheet& s : sheets) totals.push_back(s.total);
  report.total = distribution_row(totals);
  return report;
}

}  // namespace alliance
