#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "alliance/promptkit.hpp"

namespace alliance {

enum class BackendKind { HttpProvider, Mock };

const std::string& backend_kind_key(BackendKind kind);

// Everything needed to reproduce a rating: which backend produced it, under
// which sampling parameters, template and setting. Wall-clock timestamps are
// kept out of records (they live in the run sidecar) so identical runs emit
// identical files.
struct Provenance {
  BackendKind backend = BackendKind::Mock;
  std::string model;
  double temperature = 1.0;
  double top_p = 1.0;
  std::string template_hash;
  EvalSetting setting;
};

// One rater's one run's answer to one question on one session.
struct RatingRecord {
  std::string session_id;
  std::string question_id;  // "Q1".."Q12"
  int run_index = 0;
  std::string rater_id;  // model name or annotator id
  int raw_score = 0;     // 1..5, on the question's own anchoring
  std::optional<std::string> evidence;
  std::string raw_response;
  int attempts = 1;
  Provenance provenance;

  std::string key() const;  // "session|question|run"
  std::string to_json_line() const;
  static RatingRecord from_json_line(const std::string& line, size_t lineno = 0);
};

// Extracts (score, evidence) from raw model output. The score is the integer
// after the last "Score:" marker (case-insensitive, whitespace tolerated);
// with cot, evidence is the text between the last "Evidence:" marker and the
// score marker. Throws NoScoreFound / ScoreOutOfRange.
std::pair<int, std::optional<std::string>> parse_response(const std::string& text,
                                                          bool cot);

// A rating backend. complete() must be safe to call from multiple threads
// unless reentrant() says otherwise.
class RaterBackend {
 public:
  virtual ~RaterBackend() = default;

  // Raw model output for one job attempt. attempt starts at 0 and increments
  // on retries so stochastic backends resample.
  virtual std::string complete(const RatingJob& job, const std::string& prompt,
                               int attempt) = 0;

  virtual std::string model_name() const = 0;
  virtual BackendKind kind() const = 0;
  virtual double temperature() const { return 1.0; }
  virtual double top_p() const { return 1.0; }
  virtual bool reentrant() const { return true; }
};

struct RateOptions {
  int max_retries = 2;  // extra attempts after the first
  std::string template_hash;
};

// Executes one job: calls the backend, parses, retries on parse or transport
// failure with a fresh call. Throws ParseExhausted / TransportError after
// retries run out. calls_out, when given, receives the number of backend
// calls actually issued.
RatingRecord rate(const RatingJob& job, const std::string& prompt,
                  RaterBackend& backend, const RateOptions& options = {},
                  int* calls_out = nullptr);

// Append-only line-delimited store of RatingRecords; loads existing keys on
// open so interrupted batches resume by skipping persisted (session,
// question, run) triples.
class RatingStore {
 public:
  explicit RatingStore(std::string path);

  bool contains(const std::string& job_key) const;
  void append(const RatingRecord& record);
  size_t size() const { return keys_.size(); }
  const std::string& path() const { return path_; }

  static std::vector<RatingRecord> read_all(const std::string& path);

 private:
  std::string path_;
  std::set<std::string> keys_;
};

struct BatchOptions {
  int concurrency_limit = 1;
  int max_retries = 2;
  std::string template_hash;
};

struct BatchFailure {
  RatingJob job;
  std::string error;
};

struct BatchOutcome {
  std::vector<RatingRecord> records;  // successes, in job order
  std::vector<BatchFailure> failures;  // in job order
  size_t jobs = 0;
  size_t skipped = 0;         // already persisted (resume)
  size_t backend_calls = 0;   // attempts actually issued this run
  size_t retries = 0;

  bool all_succeeded() const { return failures.empty(); }
  std::string summary_line() const;
};

using PromptFn = std::function<std::string(const RatingJob&)>;

// Runs all jobs (up to concurrency_limit in flight), persisting successes to
// the store in job order as their predecessors complete. Results are
// returned in job order regardless of completion order; failures are
// summarized, never dropped. Jobs whose keys are already persisted are
// skipped without a backend call.
BatchOutcome run_batch(const std::vector<RatingJob>& jobs, const PromptFn& prompt_for,
                       RaterBackend& backend, RatingStore* store,
                       const BatchOptions& options);

}  // namespace alliance
