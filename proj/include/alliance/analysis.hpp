#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alliance/rater.hpp"
#include "alliance/rubric.hpp"
#include "alliance/stats.hpp"
#include "alliance/transcript.hpp"

namespace alliance {

// A report cell: either a finite value or an explicit undefined marker with
// the reason. Nothing is ever dropped silently.
struct Cell {
  double value = 0;
  bool defined = false;
  std::string note;

  static Cell of(double v) { return Cell{v, true, {}}; }
  static Cell undefined(std::string reason) { return Cell{0, false, std::move(reason)}; }
};

// Aggregated scores for one session as seen by one rater (or a pooled set of
// raters): question means feed dimension means feed the total. All values
// are on the normalized, higher-is-stronger scale.
struct ScoreSheet {
  std::string session_id;
  std::string rater_id;
  std::map<int, double> per_question;  // question number -> mean score
  std::map<Dimension, double> per_dimension;
  double total = 0;

  static ScoreSheet from_question_means(std::string session_id, std::string rater_id,
                                        const std::map<int, double>& question_means,
                                        const Rubric& rubric);
};

// Pools all given records for one session: normalizes each raw score by its
// question's polarity, means per question, then derives dimension and total
// rows. Records may span several runs and/or raters (the mean of all scores
// is taken). Every question must be covered.
ScoreSheet aggregate(const std::vector<RatingRecord>& records, const Rubric& rubric,
                     const std::string& rater_label = "");

// Groups mixed-session records and aggregates each session.
std::vector<ScoreSheet> sheets_from_records(const std::vector<RatingRecord>& records,
                                            const Rubric& rubric,
                                            const std::string& rater_label = "");

// ---------------------------------------------------------------------------
// Self-consistency: a rater's agreement with itself across repeated runs.

struct ConsistencyReport {
  std::map<int, Cell> per_question;       // ICC(A,k) per question
  std::map<Dimension, Cell> per_dimension;  // mean of the member questions' ICCs
  Cell overall;                           // mean of the dimension rows
  size_t n_sessions = 0;
  size_t runs = 0;
  std::string effects_model =
      "two-way mixed effects, absolute agreement, mean of k measurements";
};

// Requires the same run count for every (session, question); degenerate
// questions yield undefined cells.
ConsistencyReport self_consistency(const std::vector<RatingRecord>& records,
                                   const Rubric& rubric);

// ---------------------------------------------------------------------------
// Alignment: correlation of a rater's sheets with reference sheets.

struct AlignmentEntry {
  Cell r;
  Cell p;
  std::string stars;  // empty when undefined
};

struct AlignmentReport {
  std::map<int, AlignmentEntry> per_question;
  std::map<Dimension, Cell> per_dimension;  // mean of question r values
  Cell overall;                             // mean of dimension values
  size_t n_sessions = 0;
};

// Correlates per-question scores across the sessions common to both sheet
// sets. Dimension and overall rows average question-level correlations (not
// correlations of averaged scores). Fewer than 3 common sessions is an error.
AlignmentReport alignment(const std::vector<ScoreSheet>& model_sheets,
                          const std::vector<ScoreSheet>& human_sheets,
                          const Rubric& rubric);

// ---------------------------------------------------------------------------
// Experience comparison across counselors.

enum class ExperienceTier { Primary, Intermediate, Advanced };

const std::string& experience_tier_label(ExperienceTier tier);
// Primary <= 2 years, Advanced >= 10; everything between is Intermediate.
ExperienceTier experience_tier(double years);

struct CounselorExperience {
  std::string counselor_id;
  double years = 0;
};

std::vector<CounselorExperience> load_counselor_metadata(const std::string& path);

struct CounselorRow {
  std::string counselor_id;
  double years = 0;
  ExperienceTier tier = ExperienceTier::Primary;
  size_t n_sessions = 0;
  double mean_total = 0;
  std::map<Dimension, double> per_dimension;
};

struct TierRow {
  ExperienceTier tier = ExperienceTier::Primary;
  std::vector<std::string> counselor_ids;
  Cell mean_total;
  std::map<Dimension, Cell> per_dimension;
};

struct PairwiseTTestCell {
  std::string counselor_a, counselor_b;
  Cell t;
  Cell p;
  std::string stars;
};

struct ExperienceReport {
  std::vector<CounselorRow> counselors;           // sorted by id
  std::vector<TierRow> tiers;                     // Primary, Intermediate, Advanced
  std::vector<PairwiseTTestCell> pairwise;        // all unordered pairs, a < b
  std::vector<std::string> warnings;              // exclusions etc.
};

// Session-weighted mean scores per counselor plus all-pairs Welch t-tests on
// their per-session totals. Counselors with fewer than 2 scored sessions are
// excluded with a warning.
ExperienceReport experience_comparison(const std::vector<ScoreSheet>& sheets,
                                       const SessionSet& sessions,
                                       const std::vector<CounselorExperience>& metadata);

// ---------------------------------------------------------------------------
// Alliance trend across counseling phases.

enum class Phase { Early, Middle, Late };

const std::string& phase_label(Phase p);

// Splits N chronologically ordered items at floor(N/3) and floor(2N/3); the
// late phase absorbs the remainder.
std::array<std::pair<size_t, size_t>, 3> phase_boundaries(size_t n);

struct PairPhaseRow {
  std::string counselor_id, client_id;
  size_t n_sessions = 0;
  // per phase: dimension means and total mean
  std::map<Phase, std::map<Dimension, double>> dimension_means;
  std::map<Phase, double> total_means;
};

struct PhaseReport {
  std::vector<PairPhaseRow> pairs;
  std::map<Phase, std::map<Dimension, Cell>> corpus_dimension_means;  // pairs weighted equally
  std::map<Phase, Cell> corpus_total_means;
  Cell declined_or_flat_share;   // late total <= early total at report precision
  Cell improved_one_level_share; // late total >= early total + 1.0 at report precision
  std::vector<std::string> warnings;
};

// Pairs need at least 3 scored sessions; smaller pairs are excluded with a
// warning. Sessions are ordered by sequence_no within each pair.
PhaseReport phase_trend(const std::vector<ScoreSheet>& sheets, const SessionSet& sessions);

// ---------------------------------------------------------------------------
// Correlation between alliance scores and session outcomes.

enum class OutcomeAspect { PhysicalMental, Relationships, SocialLife, Overall };

const std::string& outcome_aspect_label(OutcomeAspect aspect);

struct OutcomeReport {
  // Row keys: the three dimensions plus "total"; 4 aspects each.
  struct Entry {
    Cell r;
    Cell p;
    std::string stars;
  };
  std::map<std::string, std::map<OutcomeAspect, Entry>> matrix;
  std::vector<std::string> row_order;  // goal, approach, affective_bond, total
  size_t n_sessions = 0;
};

// Pearson between each alliance row (3 dimensions + total) and each outcome
// aspect over sessions carrying outcome records. Fewer than 3 paired
// sessions is an error; constant columns yield undefined cells.
OutcomeReport outcome_correlation(const std::vector<ScoreSheet>& sheets,
                                  const SessionSet& sessions);

// ---------------------------------------------------------------------------
// Descriptive distribution of sheet scores.

struct DistributionRow {
  Cell mean;
  Cell sd;  // undefined with a single sheet
  std::array<size_t, 8> histogram = {};  // width-0.5 bins over [1, 5]
};

struct DistributionReport {
  std::map<int, DistributionRow> per_question;
  std::map<Dimension, DistributionRow> per_dimension;
  DistributionRow total;
  size_t n_sheets = 0;
};

DistributionReport descriptive_distribution(const std::vector<ScoreSheet>& sheets,
                                            const Rubric& rubric);

// Bin index for a score in [1, 5] (8 half-point bins; 5.0 falls in the last).
size_t histogram_bin(double score);

}  // namespace alliance
