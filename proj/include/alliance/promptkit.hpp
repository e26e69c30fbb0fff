#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alliance/rubric.hpp"
#include "alliance/transcript.hpp"

namespace alliance {

// One experimental condition: which guideline variant the prompt embeds and
// whether evidence extraction is required before the score.
struct EvalSetting {
  GuidelineLevel guidelines = GuidelineLevel::None;
  bool cot = false;

  // The four studied conditions; everything else is constructible but gets
  // flagged "non-paper" in report provenance.
  bool is_studied_setting() const;
  std::string key() const;  // e.g. "detailed+cot"
};

EvalSetting eval_setting_from_key(const std::string& key);

// Section texts of an assembled evaluation prompt, in fixed order. Absent
// sections are omitted entirely when rendered.
struct Prompt {
  std::string task_definition;
  std::string dialogue;
  std::string question;
  std::optional<std::string> guidelines;
  std::optional<std::string> cot_instruction;
  std::string expected_response_format;

  std::string text() const;  // sections joined by blank lines
};

// Externally loaded prompt wording with named sections. Sections carry
// {dialogue}, {question} and {guidelines} placeholders resolved at build
// time; an unresolved placeholder is an error.
class PromptTemplate {
 public:
  static PromptTemplate parse(const std::string& content);
  static PromptTemplate load_file(const std::string& path);

  const std::string& section(const std::string& name) const;
  // FNV-1a of the template source; recorded in rating provenance.
  const std::string& hash() const { return hash_; }

 private:
  std::vector<std::pair<std::string, std::string>> sections_;
  std::string hash_;
};

// Deterministic prompt assembly for a (session, question, setting) triple.
Prompt build_prompt(const Session& session, const Question& q,
                    const EvalSetting& setting, const Rubric& rubric,
                    const PromptTemplate& tmpl);

struct PromptLimits {
  // Refuse (rather than truncate) prompts longer than this many characters;
  // 0 disables the check.
  size_t max_chars = 0;
};

// As build_prompt, but enforcing the configured character budget.
Prompt build_prompt(const Session& session, const Question& q,
                    const EvalSetting& setting, const Rubric& rubric,
                    const PromptTemplate& tmpl, const PromptLimits& limits);

// One unit of rating work: a question asked of a session in one run.
struct RatingJob {
  std::string session_id;
  int question_number = 1;
  int run_index = 0;  // 0-based
  EvalSetting setting;

  std::string key() const;  // "session|Qn|run"
};

// The full cross product |sessions| x 12 questions x runs, ordered by
// (session_id, question number, run index).
std::vector<RatingJob> enumerate_jobs(const SessionSet& sessions,
                                      const EvalSetting& setting, int runs = 3);

}  // namespace alliance
