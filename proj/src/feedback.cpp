#include "alliance/feedback.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

namespace {

// Scale anchor wording for a score, from the general five-level ladder.
std::string score_band(double score) {
  const int anchor = static_cast<int>(std::lround(std::min(5.0, std::max(1.0, score))));
  switch (anchor) {
    case 1: return "substantial evidence against";
    case 2: return "some evidence against";
    case 3: return "no clear evidence either way";
    case 4: return "some evidence for";
    default: return "substantial evidence for";
  }
}

}  // namespace

FeedbackReport compose_feedback(const ScoreSheet& sheet,
                                const std::vector<RatingRecord>& records,
                                const Rubric& rubric) {
  FeedbackReport report;
  report.session_id = sheet.session_id;
  report.rater_id = sheet.rater_id;
  report.dimension_scores = sheet.per_dimension;
  report.total = sheet.total;

  // Evidence excerpts per question, kept in (run, rater) order.
  std::map<int, std::vector<std::pair<std::pair<int, std::string>, std::string>>> evidence;
  for (const RatingRecord& r : records) {
    if (r.session_id != sheet.session_id)
      throw DomainError("compose_feedback: record for session " + r.session_id +
                        " does not match sheet session " + sheet.session_id);
    if (!r.evidence || r.evidence->empty()) continue;
    const int qn = question_number(r.question_id);
    evidence[qn].push_back({{r.run_index, r.rater_id}, *r.evidence});
    report.model = r.provenance.model;
    report.setting_key = r.provenance.setting.key();
    report.template_hash = r.provenance.template_hash;
  }
  if (report.model.empty() && !records.empty()) {
    report.model = records.front().provenance.model;
    report.setting_key = records.front().provenance.setting.key();
    report.template_hash = records.front().provenance.template_hash;
  }

  bool any_evidence = false;
  for (const Question& q : rubric.questions()) {
    FeedbackReport::QuestionEntry entry;
    entry.question_number = q.number;
    entry.score = sheet.per_question.at(q.number);
    auto it = evidence.find(q.number);
    if (it != evidence.end()) {
      std::sort(it->second.begin(), it->second.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [key, text] : it->second) entry.evidence.push_back(text);
      any_evidence = true;
    }
    report.questions.push_back(std::move(entry));
  }
  report.evidence_missing = !any_evidence;

  // Bottom 3 question means; ties resolved by question order.
  std::vector<int> order;
  for (const Question& q : rubric.questions()) order.push_back(q.number);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sheet.per_question.at(a) < sheet.per_question.at(b);
  });
  report.highlights.assign(order.begin(), order.begin() + 3);
  return report;
}

std::string FeedbackReport::render_text(const Rubric& rubric) const {
  std::ostringstream out;
  out << "ALLIANCE FEEDBACK REPORT\n";
  out << "Session: " << session_id << "    Rater: " << rater_id << "\n";
  out << std::string(72, '=') << "\n\n";

  out << "Summary scores (1 = weakest, 5 = strongest; 3 = neutral)\n";
  for (Dimension d : kAllDimensions) {
    const double v = dimension_scores.at(d);
    out << "  " << rubric.dimension_label(d);
    for (size_t i = rubric.dimension_label(d).size(); i < 16; ++i) out << ' ';
    out << fixed(v, 2) << "  (" << score_band(v) << ")\n";
  }
  out << "  Total           " << fixed(total, 2) << "\n\n";

  out << "Areas to focus on (three lowest-scoring questions)\n";
  for (int qn : highlights) {
    const Question& q = rubric.question(qn);
    const QuestionEntry* entry = nullptr;
    for (const QuestionEntry& e : questions)
      if (e.question_number == qn) entry = &e;
    out << "  [" << q.id << "] " << q.text << "\n";
    out << "    score " << fixed(entry->score, 2) << " ("
        << rubric.dimension_label(q.dimension) << ")\n";
    if (entry->evidence.empty()) {
      out << "    (no evidence captured for this question)\n";
    } else {
      for (const std::string& e : entry->evidence) out << "    - " << e << "\n";
    }
  }
  if (evidence_missing) {
    out << "\nNotice: no evidence excerpts were captured for this session; scores\n"
           "are shown without supporting quotes.\n";
  }

  out << "\nAll questions\n";
  for (const QuestionEntry& entry : questions) {
    const Question& q = rubric.question(entry.question_number);
    out << "  " << q.id;
    for (size_t i = q.id.size(); i < 4; ++i) out << ' ';
    out << fixed(entry.score, 2) << "  " << q.text << "\n";
  }

  out << "\nProvenance: model=" << (model.empty() ? "-" : model)
      << " setting=" << (setting_key.empty() ? "-" : setting_key)
      << " template=" << (template_hash.empty() ? "-" : template_hash) << "\n";
  return out.str();
}

std::string FeedbackReport::to_json_line(const Rubric& rubric) const {
  json rec;
  rec["session_id"] = session_id;
  rec["rater_id"] = rater_id;
  for (Dimension d : kAllDimensions)
    rec["dimensions"][dimension_key(d)] = dimension_scores.at(d);
  rec["total"] = total;
  rec["highlights"] = json::array();
  for (int qn : highlights) rec["highlights"].push_back(question_id(qn));
  rec["questions"] = json::array();
  for (const QuestionEntry& entry : questions) {
    json qj;
    qj["id"] = question_id(entry.question_number);
    qj["score"] = entry.score;
    qj["evidence"] = entry.evidence;
    rec["questions"].push_back(qj);
  }
  rec["evidence_missing"] = evidence_missing;
  rec["provenance"] = {{"model", model}, {"setting", setting_key},
                       {"template_hash", template_hash}};
  (void)rubric;
  return rec.dump();
}

std::vector<FeedbackAssessment> load_assessments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open assessments file: " + path);
  std::vector<FeedbackAssessment> out;
  for_each_line(in, [&](size_t lineno, const std::string& line) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("assessment line " + std::to_string(lineno) + ": " + e.what());
    }
    FeedbackAssessment a;
    try {
      a.counselor_id = rec.at("counselor_id").get<std::string>();
      a.report_id = rec.at("report_id").get<std::string>();
      a.q_understand = rec.at("q_understand").get<int>();
      a.q_directions = rec.at("q_directions").get<int>();
      a.q_willingness = rec.at("q_willingness").get<int>();
    } catch (const json::exception& e) {
      throw SchemaError("assessment line " + std::to_string(lineno) + ": " + e.what());
    }
    for (int v : {a.q_understand, a.q_directions, a.q_willingness}) {
      if (v < 1 || v > 5)
        throw SchemaError("assessment line " + std::to_string(lineno) + ": value " +
                          std::to_string(v) + " outside 1..5");
    }
    out.push_back(std::move(a));
  });
  return out;
}

AssessmentSummary summarize_assessments(
    const std::vector<FeedbackAssessment>& assessments) {
  if (assessments.empty()) throw DomainError("summarize_assessments: empty input");
  std::map<std::string, std::vector<const FeedbackAssessment*>> by_counselor;
  for (const FeedbackAssessment& a : assessments)
    by_counselor[a.counselor_id].push_back(&a);

  AssessmentSummary summary;
  double sum_u = 0, sum_d = 0, sum_w = 0;
  for (const auto& [cid, list] : by_counselor) {
    AssessmentSummary::Row row;
    row.counselor_id = cid;
    row.n = list.size();
    for (const FeedbackAssessment* a : list) {
      row.q_understand += a->q_understand;
      row.q_directions += a->q_directions;
      row.q_willingness += a->q_willingness;
    }
    const double n = static_cast<double>(row.n);
    row.q_understand /= n;
    row.q_directions /= n;
    row.q_willingness /= n;
    sum_u += row.q_understand;
    sum_d += row.q_directions;
    sum_w += row.q_willingness;
    summary.per_counselor.push_back(std::move(row));
  }
  const double k = static_cast<double>(summary.per_counselor.size());
  summary.avg_understand = sum_u / k;
  summary.avg_directions = sum_d / k;
  summary.avg_willingness = sum_w / k;
  return summary;
}

}  // namespace alliance
