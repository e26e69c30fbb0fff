#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alliance {

// The three alliance dimensions. Fixed by the framework; labels come from data.
enum class Dimension { Goal, Approach, AffectiveBond };

constexpr std::array<Dimension, 3> kAllDimensions = {
    Dimension::Goal, Dimension::Approach, Dimension::AffectiveBond};

constexpr int kQuestionCount = 12;
constexpr int kQuestionsPerDimension = 4;

const std::string& dimension_key(Dimension d);    // "goal", "approach", "affective_bond"
Dimension dimension_from_key(const std::string& key);

enum class Polarity { Forward, Reverse };

// Which guideline variant a prompt embeds.
enum class GuidelineLevel { None, General, Detailed };

const std::string& guideline_level_key(GuidelineLevel level);  // "none", "general", "detailed"
GuidelineLevel guideline_level_from_key(const std::string& key);

struct Question {
  int number = 0;  // 1..12
  std::string id;  // "Q1".."Q12"
  Dimension dimension = Dimension::Goal;
  std::string text;
  Polarity polarity = Polarity::Forward;
};

// "Q7" -> 7; throws SchemaError for anything else.
int question_number(const std::string& id);
std::string question_id(int number);

// Five per-score texts for one question (Detailed) or for all questions (General).
struct GuidelineSet {
  std::array<std::string, 5> entries;  // entries[score - 1]

  const std::string& entry(int score) const;
  // All five entries in ascending score order, one "<score> = <text>" line each.
  std::string concatenated() const;
};

// The working-alliance measurement framework: dimensions, questions, score
// anchors and guideline texts. Immutable after load; safe to share across
// concurrent raters.
class Rubric {
 public:
  static constexpr int kScaleMin = 1;
  static constexpr int kScaleMax = 5;
  static constexpr int kNeutralPoint = 3;

  const std::string& language() const { return language_; }
  const std::vector<Question>& questions() const { return questions_; }
  const Question& question(const std::string& id) const;
  const Question& question(int number) const;
  const std::string& dimension_label(Dimension d) const;
  std::vector<const Question*> questions_of(Dimension d) const;

  const GuidelineSet& general_guidelines() const { return general_; }
  const GuidelineSet& detailed_guidelines(const std::string& question_id) const;

  // Guideline text a prompt embeds for (question, level); nullopt for None.
  std::optional<std::string> guideline_text(const std::string& question_id,
                                            GuidelineLevel level) const;

  // Validation warnings collected at load time (non-fatal), e.g. a question
  // whose favorable-extreme guideline reads like disagreement evidence.
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string serialize() const;

  friend Rubric load_rubric(std::istream& source);

 private:
  std::string language_;
  std::map<Dimension, std::string> dimension_labels_;
  std::vector<Question> questions_;  // ordered Q1..Q12
  GuidelineSet general_;
  std::map<std::string, GuidelineSet> detailed_;
  std::vector<std::string> warnings_;
};

// Parses and validates a rubric document (JSON; see README for the schema).
// Throws SchemaError naming the offending element.
Rubric load_rubric(std::istream& source);
Rubric load_rubric_file(const std::string& path);

// Reflects a raw score onto the "higher = stronger alliance" direction.
// Forward questions are unchanged; reverse ones map x -> 6 - x. Accepts
// fractional values in [1, 5] (post-aggregation means).
double normalize_score(const Question& q, double raw);

}  // namespace alliance
