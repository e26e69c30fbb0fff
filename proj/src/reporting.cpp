#include "alliance/reporting.hpp"

#include <sstream>

#include <json.hpp>

#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

namespace {

constexpr int kStatDecimals = 4;   // correlations, ICCs, t values
constexpr int kScoreDecimals = 2;  // scores on the 1..5 scale

json cell_json(const Cell& cell, int decimals) {
  if (!cell.defined) return json{{"undefined", true}, {"note", cell.note}};
  (void)decimals;
  return json(cell.value);
}

std::string cell_text(const Cell& cell, int decimals) {
  return cell.defined ? fixed(cell.value, decimals) : "undefined";
}

void pad(std::ostringstream& out, const std::string& s, size_t width) {
  out << s;
  for (size_t i = s.size(); i < width; ++i) out << ' ';
}

}  // namespace

std::string consistency_records(const ConsistencyReport& report, const Rubric& rubric) {
  std::ostringstream out;
  for (const Question& q : rubric.questions()) {
    json rec{{"row", q.id}, {"icc", cell_json(report.per_question.at(q.number), kStatDecimals)}};
    out << rec.dump() << "\n";
  }
  for (Dimension d : kAllDimensions) {
    const Cell& cell = report.per_dimension.at(d);
    json rec{{"row", dimension_key(d)}, {"icc", cell_json(cell, kStatDecimals)}};
    if (cell.defined) rec["band"] = stats::icc_band(cell.value);
    out << rec.dump() << "\n";
  }
  json overall{{"row", "overall"}, {"icc", cell_json(report.overall, kStatDecimals)}};
  if (report.overall.defined) overall["band"] = stats::icc_band(report.overall.value);
  overall["n_sessions"] = report.n_sessions;
  overall["runs"] = report.runs;
  overall["effects_model"] = report.effects_model;
  out << overall.dump() << "\n";
  return out.str();
}

std::string consistency_text(const ConsistencyReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Self-consistency (" << report.effects_model << ")\n";
  out << "Sessions: " << report.n_sessions << "   Runs: " << report.runs << "\n";
  out << std::string(44, '-') << "\n";
  for (const Question& q : rubric.questions()) {
    pad(out, q.id, 16);
    out << cell_text(report.per_question.at(q.number), kStatDecimals) << "\n";
    // dimension row after its last question
    const auto owned = rubric.questions_of(q.dimension);
    if (q.number == owned.back()->number) {
      const Cell& cell = report.per_dimension.at(q.dimension);
      pad(out, rubric.dimension_label(q.dimension), 16);
      out << cell_text(cell, kStatDecimals);
      if (cell.defined) out << "  [" << stats::icc_band(cell.value) << "]";
      out << "\n" << std::string(44, '-') << "\n";
    }
  }
  pad(out, "Overall", 16);
  out << cell_text(report.overall, kStatDecimals);
  if (report.overall.defined) out << "  [" << stats::icc_band(report.overall.value) << "]";
  out << "\n";
  return out.str();
}

std::string alignment_records(const AlignmentReport& report, const Rubric& rubric) {
  std::ostringstream out;
  for (const Question& q : rubric.questions()) {
    const AlignmentEntry& e = report.per_question.at(q.number);
    json rec{{"row", q.id},
             {"r", cell_json(e.r, kStatDecimals)},
             {"p", cell_json(e.p, 8)}};
    if (!e.stars.empty()) rec["stars"] = e.stars;
    out << rec.dump() << "\n";
  }
  for (Dimension d : kAllDimensions) {
    json rec{{"row", dimension_key(d)},
             {"r", cell_json(report.per_dimension.at(d), kStatDecimals)}};
    out << rec.dump() << "\n";
  }
  json overall{{"row", "overall"}, {"r", cell_json(report.overall, kStatDecimals)}};
  overall["n_sessions"] = report.n_sessions;
  out << overall.dump() << "\n";
  return out.str();
}

std::string alignment_text(const AlignmentReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Alignment with reference ratings (Pearson r; dimension and overall rows\n"
         "are averages of question-level correlations)\n";
  out << "Common sessions: " << report.n_sessions << "\n";
  out << std::string(44, '-') << "\n";
  for (const Question& q : rubric.questions()) {
    const AlignmentEntry& e = report.per_question.at(q.number);
    pad(out, q.id, 16);
    out << cell_text(e.r, kStatDecimals);
    if (!e.stars.empty() && e.stars != "ns") out << e.stars;
    out << "\n";
    const auto owned = rubric.questions_of(q.dimension);
    if (q.number == owned.back()->number) {
      pad(out, rubric.dimension_label(q.dimension), 16);
      out << cell_text(report.per_dimension.at(q.dimension), kStatDecimals) << "\n"
          << std::string(44, '-') << "\n";
    }
  }
  pad(out, "Overall", 16);
  out << cell_text(report.overall, kStatDecimals) << "\n";
  return out.str();
}

std::string distribution_records(const DistributionReport& report, const Rubric& rubric) {
  std::ostringstream out;
  auto emit = [&](const std::string& row, const DistributionRow& d) {
    json rec{{"row", row},
             {"mean", cell_json(d.mean, kScoreDecimals)},
             {"sd", cell_json(d.sd, kScoreDecimals)},
             {"histogram", d.histogram}};
    out << rec.dump() << "\n";
  };
  for (const Question& q : rubric.questions()) emit(q.id, report.per_question.at(q.number));
  for (Dimension d : kAllDimensions) emit(dimension_key(d), report.per_dimension.at(d));
  emit("total", report.total);
  json meta{{"row", "meta"}, {"n_sheets", report.n_sheets},
            {"bin_width", 0.5}, {"bin_min", 1.0}, {"bin_max", 5.0}};
  out << meta.dump() << "\n";
  return out.str();
}

std::string distribution_text(const DistributionReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Score distribution over " << report.n_sheets << " sheet(s)\n";
  out << std::string(60, '-') << "\n";
  auto emit = [&](const std::string& label, const DistributionRow& d) {
    pad(out, label, 16);
    out << cell_text(d.mean, kScoreDecimals) << " (";
    out << (d.sd.defined ? fixed(d.sd.value, kScoreDecimals) : std::string("-")) << ")  ";
    for (size_t i = 0; i < d.histogram.size(); ++i) {
      if (i) out << ' ';
      out << d.histogram[i];
    }
    out << "\n";
  };
  for (const Question& q : rubric.questions()) {
    emit(q.id, report.per_question.at(q.number));
    const auto owned = rubric.questions_of(q.dimension);
    if (q.number == owned.back()->number) {
      emit(rubric.dimension_label(q.dimension), report.per_dimension.at(q.dimension));
      out << std::string(60, '-') << "\n";
    }
  }
  emit("Total", report.total);
  out << "(columns: mean (sd), then counts for half-point bins over [1,5])\n";
  return out.str();
}

std::string experience_records(const ExperienceReport& report, const Rubric& rubric) {
  std::ostringstream out;
  for (const CounselorRow& row : report.counselors) {
    json rec{{"row", "counselor"},
             {"counselor_id", row.counselor_id},
             {"years", row.years},
             {"tier", experience_tier_label(row.tier)},
             {"n_sessions", row.n_sessions},
             {"mean_total", row.mean_total}};
    for (Dimension d : kAllDimensions)
      rec[dimension_key(d)] = row.per_dimension.at(d);
    out << rec.dump() << "\n";
  }
  for (const TierRow& row : report.tiers) {
    json rec{{"row", "tier"},
             {"tier", experience_tier_label(row.tier)},
             {"counselors", row.counselor_ids},
             {"mean_total", cell_json(row.mean_total, kScoreDecimals)}};
    for (Dimension d : kAllDimensions)
      rec[dimension_key(d)] = cell_json(row.per_dimension.at(d), kScoreDecimals);
    out << rec.dump() << "\n";
  }
  for (const PairwiseTTestCell& cell : report.pairwise) {
    json rec{{"row", "ttest"},
             {"a", cell.counselor_a},
             {"b", cell.counselor_b},
             {"t", cell_json(cell.t, kStatDecimals)},
             {"p", cell_json(cell.p, 8)}};
    if (!cell.stars.empty()) rec["stars"] = cell.stars;
    out << rec.dump() << "\n";
  }
  for (const std::string& w : report.warnings) {
    out << json{{"row", "warning"}, {"message", w}}.dump() << "\n";
  }
  (void)rubric;
  return out.str();
}

std::string experience_text(const ExperienceReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Alliance by counselor experience\n" << std::string(72, '-') << "\n";
  out << "Counselor       Years  Tier          N   Total";
  for (Dimension d : kAllDimensions) out << "  " << rubric.dimension_label(d);
  out << "\n";
  for (const CounselorRow& row : report.counselors) {
    pad(out, row.counselor_id, 16);
    pad(out, fixed(row.years, 0), 7);
    pad(out, experience_tier_label(row.tier), 14);
    pad(out, std::to_string(row.n_sessions), 4);
    out << fixed(row.mean_total, kScoreDecimals);
    for (Dimension d : kAllDimensions)
      out << "  " << fixed(row.per_dimension.at(d), kScoreDecimals)
          << std::string(rubric.dimension_label(d).size() > 4
                             ? rubric.dimension_label(d).size() - 4
                             : 0,
                         ' ');
    out << "\n";
  }
  out << "\nTier means (mean of counselor means)\n";
  for (const TierRow& row : report.tiers) {
    pad(out, experience_tier_label(row.tier), 14);
    out << cell_text(row.mean_total, kScoreDecimals) << "  (" << row.counselor_ids.size()
        << " counselor(s))\n";
  }
  out << "\nPairwise Welch t-tests on per-session totals\n";
  for (const PairwiseTTestCell& cell : report.pairwise) {
    pad(out, cell.counselor_a + " vs " + cell.counselor_b, 24);
    out << "t=" << cell_text(cell.t, kStatDecimals);
    if (cell.p.defined) out << "  p=" << fixed(cell.p.value, 6) << " " << cell.stars;
    else out << "  (" << cell.p.note << ")";
    out << "\n";
  }
  for (const std::string& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string phase_records(const PhaseReport& report, const Rubric& rubric) {
  std::ostringstream out;
  for (const PairPhaseRow& row : report.pairs) {
    json rec{{"row", "pair"},
             {"counselor_id", row.counselor_id},
             {"client_id", row.client_id},
             {"n_sessions", row.n_sessions}};
    for (Phase p : {Phase::Early, Phase::Middle, Phase::Late}) {
      json pj{{"total", row.total_means.at(p)}};
      for (Dimension d : kAllDimensions)
        pj[dimension_key(d)] = row.dimension_means.at(p).at(d);
      rec[phase_label(p)] = pj;
    }
    out << rec.dump() << "\n";
  }
  json corpus{{"row", "corpus"}};
  for (Phase p : {Phase::Early, Phase::Middle, Phase::Late}) {
    json pj{{"total", cell_json(report.corpus_total_means.at(p), kScoreDecimals)}};
    for (Dimension d : kAllDimensions)
      pj[dimension_key(d)] = cell_json(report.corpus_dimension_means.at(p).at(d), kScoreDecimals);
    corpus[phase_label(p)] = pj;
  }
  corpus["declined_or_flat_share"] = cell_json(report.declined_or_flat_share, 4);
  corpus["improved_one_level_share"] = cell_json(report.improved_one_level_share, 4);
  out << corpus.dump() << "\n";
  for (const std::string& w : report.warnings)
    out << json{{"row", "warning"}, {"message", w}}.dump() << "\n";
  (void)rubric;
  return out.str();
}

std::string phase_text(const PhaseReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Alliance across counseling phases (pairs weighted equally)\n";
  out << std::string(72, '-') << "\n";
  out << "Pair                          N   Early  Middle  Late\n";
  for (const PairPhaseRow& row : report.pairs) {
    pad(out, "(" + row.counselor_id + ", " + row.client_id + ")", 30);
    pad(out, std::to_string(row.n_sessions), 4);
    out << fixed(row.total_means.at(Phase::Early), 2) << "   "
        << fixed(row.total_means.at(Phase::Middle), 2) << "    "
        << fixed(row.total_means.at(Phase::Late), 2) << "\n";
  }
  out << "\nCorpus means per phase\n";
  pad(out, "", 16);
  out << "Early   Middle  Late\n";
  auto line = [&](const std::string& label, auto getter) {
    pad(out, label, 16);
    for (Phase p : {Phase::Early, Phase::Middle, Phase::Late}) {
      out << cell_text(getter(p), kScoreDecimals) << "    ";
    }
    out << "\n";
  };
  for (Dimension d : kAllDimensions) {
    line(rubric.dimension_label(d),
         [&](Phase p) { return report.corpus_dimension_means.at(p).at(d); });
  }
  line("Total", [&](Phase p) { return report.corpus_total_means.at(p); });
  out << "\nPairs with declining or unchanged total (late <= early): "
      << cell_text(report.declined_or_flat_share, 4) << "\n";
  out << "Pairs improving by at least one level (late >= early + 1.0): "
      << cell_text(report.improved_one_level_share, 4) << "\n";
  out << "(shares compare totals at 2-decimal report precision; the one-level\n"
         "threshold is this tool's reading of a +1.0 change on the 1..5 scale)\n";
  for (const std::string& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string outcome_records(const OutcomeReport& report, const Rubric& rubric) {
  std::ostringstream out;
  for (const std::string& row : report.row_order) {
    json rec{{"row", row}};
    for (OutcomeAspect aspect :
         {OutcomeAspect::PhysicalMental, OutcomeAspect::Relationships,
          OutcomeAspect::SocialLife, OutcomeAspect::Overall}) {
      const OutcomeReport::Entry& e = report.matrix.at(row).at(aspect);
      json cell{{"r", cell_json(e.r, kStatDecimals)}, {"p", cell_json(e.p, 8)}};
      if (!e.stars.empty()) cell["stars"] = e.stars;
      rec[outcome_aspect_label(aspect)] = cell;
    }
    out << rec.dump() << "\n";
  }
  out << json{{"row", "meta"}, {"n_sessions", report.n_sessions}}.dump() << "\n";
  (void)rubric;
  return out.str();
}

std::string outcome_text(const OutcomeReport& report, const Rubric& rubric) {
  std::ostringstream out;
  out << "Correlation between alliance scores and session outcomes (Pearson r)\n";
  out << "Sessions with outcome records: " << report.n_sessions << "\n";
  out << std::string(72, '-') << "\n";
  pad(out, "", 16);
  out << "Phy&Men    Relation   Social     Overall\n";
  for (const std::string& row : report.row_order) {
    std::string label = row == "total" ? "Total" : rubric.dimension_label(dimension_from_key(row));
    pad(out, label, 16);
    for (OutcomeAspect aspect :
         {OutcomeAspect::PhysicalMental, OutcomeAspect::Relationships,
          OutcomeAspect::SocialLife, OutcomeAspect::Overall}) {
      const OutcomeReport::Entry& e = report.matrix.at(row).at(aspect);
      std::string cell = e.r.defined ? fixed(e.r.value, 2) : "undef";
      if (!e.stars.empty() && e.stars != "ns") cell += e.stars;
      pad(out, cell, 11);
    }
    out << "\n";
  }
  return out.str();
}

std::string assessment_records(const AssessmentSummary& summary) {
  std::ostringstream out;
  for (const auto& row : summary.per_counselor) {
    json rec{{"row", "counselor"},
             {"counselor_id", row.counselor_id},
             {"n", row.n},
             {"q_understand", row.q_understand},
             {"q_directions", row.q_directions},
             {"q_willingness", row.q_willingness}};
    out << rec.dump() << "\n";
  }
  json avg{{"row", "average"},
           {"q_understand", summary.avg_understand},
           {"q_directions", summary.avg_directions},
           {"q_willingness", summary.avg_willingness}};
  out << avg.dump() << "\n";
  return out.str();
}

std::string assessment_text(const AssessmentSummary& summary) {
  std::ostringstream out;
  out << "Feedback assessment summary (per-counselor means; the average row is\n"
         "the mean of counselor means)\n";
  out << std::string(64, '-') << "\n";
  pad(out, "Counselor", 14);
  out << "N    Understand  Directions  Willingness\n";
  for (const auto& row : summary.per_counselor) {
    pad(out, row.counselor_id, 14);
    pad(out, std::to_string(row.n), 5);
    pad(out, fixed(row.q_understand, 2), 12);
    pad(out, fixed(row.q_directions, 2), 12);
    out << fixed(row.q_willingness, 2) << "\n";
  }
  pad(out, "Average", 14);
  pad(out, "", 5);
  pad(out, fixed(summary.avg_understand, 2), 12);
  pad(out, fixed(summary.avg_directions, 2), 12);
  out << fixed(summary.avg_willingness, 2) << "\n";
  return out.str();
}

}  // namespace alliance
