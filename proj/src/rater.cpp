#include "alliance/rater.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

const std::string& backend_kind_key(BackendKind kind) {
  static const std::string keys[] = {"http", "mock"};
  return keys[static_cast<int>(kind)];
}

static BackendKind backend_kind_from_key(const std::string& key) {
  if (key == "http") return BackendKind::HttpProvider;
  if (key == "mock") return BackendKind::Mock;
  throw SchemaError("unknown backend kind: " + key);
}

std::string RatingRecord::key() const {
  return session_id + "|" + question_id + "|" + std::to_string(run_index);
}

std::string RatingRecord::to_json_line() const {
  json rec;
  rec["session_id"] = session_id;
  rec["question_id"] = question_id;
  rec["run_index"] = run_index;
  rec["rater_id"] = rater_id;
  rec["raw_score"] = raw_score;
  if (evidence) rec["evidence"] = *evidence;
  rec["raw_response"] = raw_response;
  rec["attempts"] = attempts;
  rec["provenance"] = {{"backend", backend_kind_key(provenance.backend)},
                       {"model", provenance.model},
                       {"temperature", provenance.temperature},
                       {"top_p", provenance.top_p},
                       {"template_hash", provenance.template_hash},
                       {"setting", provenance.setting.key()}};
  return rec.dump();
}

RatingRecord RatingRecord::from_json_line(const std::string& line, size_t lineno) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError("rating line " + std::to_string(lineno) + ": " + e.what());
  }
  RatingRecord r;
  try {
    r.session_id = rec.at("session_id").get<std::string>();
    r.question_id =
        alliance::question_id(question_number(rec.at("question_id").get<std::string>()));
    r.run_index = rec.at("run_index").get<int>();
    r.rater_id = rec.at("rater_id").get<std::string>();
    r.raw_score = rec.at("raw_score").get<int>();
    if (rec.contains("evidence")) r.evidence = rec["evidence"].get<std::string>();
    r.raw_response = rec.value("raw_response", std::string());
    r.attempts = rec.value("attempts", 1);
    if (rec.contains("provenance")) {
      const json& p = rec["provenance"];
      r.provenance.backend = backend_kind_from_key(p.value("backend", "mock"));
      r.provenance.model = p.value("model", std::string());
      r.provenance.temperature = p.value("temperature", 1.0);
      r.provenance.top_p = p.value("top_p", 1.0);
      r.provenance.template_hash = p.value("template_hash", std::string());
      r.provenance.setting = eval_setting_from_key(p.value("setting", "none"));
    }
  } catch (const json::exception& e) {
    throw SchemaError("rating line " + std::to_string(lineno) +
                      ": malformed record: " + e.what());
  }
  if (r.raw_score < 1 || r.raw_score > 5)
    throw SchemaError("rating line " + std::to_string(lineno) + ": raw_score " +
                      std::to_string(r.raw_score) + " outside 1..5");
  if (r.run_index < 0)
    throw SchemaError("rating line " + std::to_string(lineno) + ": negative run_index");
  return r;
}

namespace {

// Case-insensitive search for `needle` (ASCII) in `haystack` at or after pos.
size_t ifind(const std::string& haystack, const std::string& needle, size_t pos) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string::npos;
  for (size_t i = pos; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j]))) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string::npos;
}

struct ScoreMarker {
  size_t marker_pos;  // offset of the marker itself
  long value;
  bool has_value;
};

// Finds the last "score" marker followed by ':' and an optional integer.
std::optional<ScoreMarker> last_score_marker(const std::string& text) {
  std::optional<ScoreMarker> best;
  size_t pos = 0;
  while (true) {
    const size_t at = ifind(text, "score", pos);
    if (at == std::string::npos) break;
    pos = at + 5;
    size_t i = pos;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i >= text.size() || text[i] != ':') continue;
    ++i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    ScoreMarker marker{at, 0, false};
    bool negative = false;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
      negative = text[i] == '-';
      ++i;
    }
    if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      long v = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        v = v * 10 + (text[i] - '0');
        if (v > 1000000) break;
        ++i;
      }
      marker.value = negative ? -v : v;
      marker.has_value = true;
    }
    if (marker.has_value) best = marker;  // keep the last marker with a number
  }
  return best;
}

}  // namespace

std::pair<int, std::optional<std::string>> parse_response(const std::string& text,
                                                          bool cot) {
  const auto marker = last_score_marker(text);
  if (!marker) throw NoScoreFound("no score marker found in response");
  if (marker->value < 1 || marker->value > 5)
    throw ScoreOutOfRange("score " + std::to_string(marker->value) + " outside 1..5");

  std::optional<std::string> evidence;
  if (cot) {
    // Last "Evidence:" marker before the score marker.
    size_t ev_pos = std::string::npos;
    size_t pos = 0;
    while (true) {
      const size_t at = ifind(text, "evidence", pos);
      if (at == std::string::npos || at >= marker->marker_pos) break;
      size_t i = at + 8;
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == ':') ev_pos = i + 1;
      pos = at + 8;
    }
    if (ev_pos != std::string::npos) {
      std::string body = trim(text.substr(ev_pos, marker->marker_pos - ev_pos));
      if (!body.empty()) evidence = body;
    }
  }
  return {static_cast<int>(marker->value), evidence};
}

RatingRecord rate(const RatingJob& job, const std::string& prompt,
                  RaterBackend& backend, const RateOptions& options, int* calls_out) {
  std::string last_response;
  std::string last_error;
  bool transport_failed = false;
  if (calls_out) *calls_out = 0;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    std::string response;
    try {
      if (calls_out) ++*calls_out;
      response = backend.complete(job, prompt, attempt);
      transport_failed = false;
    } catch (const TransportError& e) {
      last_error = e.what();
      transport_failed = true;
      continue;
    }
    last_response = response;
    try {
      auto [score, evidence] = parse_response(response, job.setting.cot);
      RatingRecord record;
      record.session_id = job.session_id;
      record.question_id = question_id(job.question_number);
      record.run_index = job.run_index;
      record.rater_id = backend.model_name();
      record.raw_score = score;
      record.evidence = std::move(evidence);
      record.raw_response = std::move(response);
      record.attempts = attempt + 1;
      record.provenance.backend = backend.kind();
      record.provenance.model = backend.model_name();
      record.provenance.temperature = backend.temperature();
      record.provenance.top_p = backend.top_p();
      record.provenance.template_hash = options.template_hash;
      record.provenance.setting = job.setting;
      return record;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  const int attempts = options.max_retries + 1;
  if (transport_failed) {
    throw TransportError("job " + job.key() + ": transport failed after " +
                         std::to_string(attempts) + " attempts: " + last_error);
  }
  throw ParseExhausted("job " + job.key() + ": no parseable score after " +
                           std::to_string(attempts) + " attempts (" + last_error + ")",
                       last_response);
}

RatingStore::RatingStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // new store
  for_each_line(in, [this](size_t lineno, const std::string& line) {
    keys_.insert(RatingRecord::from_json_line(line, lineno).key());
  });
}

bool RatingStore::contains(const std::string& job_key) const {
  return keys_.count(job_key) > 0;
}

void RatingStore::append(const RatingRecord& record) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to ratings file: " + path_);
  out << record.to_json_line() << "\n";
  keys_.insert(record.key());
}

std::vector<RatingRecord> RatingStore::read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open ratings file: " + path);
  std::vector<RatingRecord> records;
  for_each_line(in, [&](size_t lineno, const std::string& line) {
    records.push_back(RatingRecord::from_json_line(line, lineno));
  });
  return records;
}

std::string BatchOutcome::summary_line() const {
  std::ostringstream out;
  out << "jobs=" << jobs << " skipped=" << skipped
      << " succeeded=" << records.size() << " failed=" << failures.size()
      << " backend_calls=" << backend_calls << " retries=" << retries;
  return out.str();
}

namespace {

// Flushes completed records to the store strictly in job order; completed
// work arriving out of order waits for its predecessors. Failed ordinals
// advance the cursor without writing, so a rerun re-attempts exactly them.
class OrderedFlusher {
 public:
  OrderedFlusher(RatingStore* store, size_t count)
      : store_(store), done_(count, false), pending_(count) {}

  void deliver(size_t ordinal, const RatingRecord* record) {
    std::lock_guard<std::mutex> lock(mutex_);
    done_[ordinal] = true;
    if (record) pending_[ordinal] = *record;
    while (next_ < done_.size() && done_[next_]) {
      if (pending_[next_] && store_) store_->append(*pending_[next_]);
      pending_[next_].reset();
      ++next_;
    }
  }

 private:
  RatingStore* store_;
  std::mutex mutex_;
  std::vector<char> done_;
  std::vector<std::optional<RatingRecord>> pending_;
  size_t next_ = 0;
};

}  // namespace

BatchOutcome run_batch(const std::vector<RatingJob>& jobs, const PromptFn& prompt_for,
                       RaterBackend& backend, RatingStore* store,
                       const BatchOptions& options) {
  if (options.concurrency_limit < 1)
    throw DomainError("run_batch: concurrency_limit must be >= 1");

  BatchOutcome outcome;
  outcome.jobs = jobs.size();

  // Resume: drop jobs whose keys are already persisted.
  std::vector<const RatingJob*> todo;
  for (const RatingJob& job : jobs) {
    if (store && store->contains(job.key())) {
      ++outcome.skipped;
    } else {
      todo.push_back(&job);
    }
  }

  std::vector<std::optional<RatingRecord>> results(todo.size());
  std::vector<std::optional<BatchFailure>> errors(todo.size());
  OrderedFlusher flusher(store, todo.size());
  std::atomic<size_t> next{0};
  std::atomic<size_t> calls{0};
  std::atomic<size_t> retries{0};

  RateOptions rate_options;
  rate_options.max_retries = options.max_retries;
  rate_options.template_hash = options.template_hash;

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const RatingJob& job = *todo[i];
      int job_calls = 0;
      try {
        const std::string prompt = prompt_for(job);
        RatingRecord record = rate(job, prompt, backend, rate_options, &job_calls);
        results[i] = std::move(record);
        flusher.deliver(i, &*results[i]);
      } catch (const std::exception& e) {
        results[i].reset();  // a persist failure demotes the job to failed
        errors[i] = BatchFailure{job, e.what()};
        try {
          flusher.deliver(i, nullptr);
        } catch (const std::exception& sink_error) {
          // A sink failure while flushing successors must not take the
          // worker down; the affected records simply stay unpersisted and a
          // rerun re-attempts them.
          errors[i]->error += std::string("; sink: ") + sink_error.what();
        }
      }
      calls += static_cast<size_t>(job_calls);
      if (job_calls > 1) retries += static_cast<size_t>(job_calls - 1);
    }
  };

  const size_t n_threads =
      std::min<size_t>(static_cast<size_t>(options.concurrency_limit), todo.size());
  if (n_threads <= 1 || !backend.reentrant()) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) outcome.records.push_back(std::move(*results[i]));
    if (errors[i]) outcome.failures.push_back(std::move(*errors[i]));
  }
  outcome.backend_calls = calls.load();
  outcome.retries = retries.load();
  return outcome;
}

}  // namespace alliance
