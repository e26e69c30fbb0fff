#pragma once

#include <map>
#include <string>
#include <vector>

#include "alliance/analysis.hpp"

namespace alliance {

// Per-session counselor feedback: summary scores, the weakest areas with the
// raters' evidence excerpts, and a provenance block.
struct FeedbackReport {
  struct QuestionEntry {
    int question_number = 1;
    double score = 0;  // normalized mean
    std::vector<std::string> evidence;  // CoT excerpts, run order
  };

  std::string session_id;
  std::string rater_id;
  std::map<Dimension, double> dimension_scores;
  double total = 0;
  std::vector<QuestionEntry> questions;   // all 12, question order
  std::vector<int> highlights;            // bottom-3 question numbers
  bool evidence_missing = false;          // no CoT excerpts were available
  std::string model, setting_key, template_hash;

  std::string render_text(const Rubric& rubric) const;
  std::string to_json_line(const Rubric& rubric) const;
};

// Builds the feedback document for one session from its sheet and the
// records behind it. Highlights are the 3 lowest question means, ties broken
// by question order. Missing evidence produces an explicit notice rather
// than an error.
FeedbackReport compose_feedback(const ScoreSheet& sheet,
                                const std::vector<RatingRecord>& records,
                                const Rubric& rubric);

// A counselor's rating of one feedback report on the three assessment
// aspects (understanding, improvement directions, willingness to adjust),
// each 1..5 with 3 neutral.
struct FeedbackAssessment {
  std::string counselor_id;
  std::string report_id;
  int q_understand = 3;
  int q_directions = 3;
  int q_willingness = 3;
};

std::vector<FeedbackAssessment> load_assessments(const std::string& path);

struct AssessmentSummary {
  struct Row {
    std::string counselor_id;
    size_t n = 0;
    double q_understand = 0, q_directions = 0, q_willingness = 0;
  };
  std::vector<Row> per_counselor;  // sorted by counselor id
  // Cross-counselor average of the counselor means (not of raw assessments).
  double avg_understand = 0, avg_directions = 0, avg_willingness = 0;
};

AssessmentSummary summarize_assessments(const std::vector<FeedbackAssessment>& assessments);

}  // namespace alliance
