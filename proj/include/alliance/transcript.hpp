#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alliance {

enum class Speaker { Counselor, Client };

const std::string& speaker_key(Speaker s);  // "counselor" / "client"
Speaker speaker_from_key(const std::string& key);

struct Utterance {
  size_t index = 0;  // contiguous, strictly increasing within a session
  Speaker speaker = Speaker::Counselor;
  std::string text;

  // Unicode code points, not bytes.
  size_t char_length() const;
};

// Client-reported outcome ratings for the session, each aspect in [0, 100].
struct OutcomeRecord {
  double physical_mental = 0;
  double relationships = 0;
  double social_life = 0;
  double overall = 0;
};

struct Session {
  std::string session_id;
  std::string counselor_id;
  std::string client_id;
  int sequence_no = 1;  // ordinal within the counselor-client pair, >= 1
  std::vector<Utterance> utterances;
  std::optional<OutcomeRecord> ors;
};

// Sessions grouped and ordered by (counselor_id, client_id, sequence_no).
// Immutable after ingestion; shareable across threads.
class SessionSet {
 public:
  explicit SessionSet(std::vector<Session> sessions);

  const std::vector<Session>& sessions() const { return sessions_; }
  size_t size() const { return sessions_.size(); }
  bool empty() const { return sessions_.empty(); }
  const Session& by_id(const std::string& session_id) const;
  bool contains(const std::string& session_id) const;

 private:
  std::vector<Session> sessions_;
  std::map<std::string, size_t> index_;
};

// Shape of the corpus overview table: totals and per-role averages.
struct CorpusStats {
  size_t n_dialogues = 0;
  size_t n_speakers_total = 0, n_counselors = 0, n_clients = 0;
  size_t n_utterances_total = 0, n_utterances_counselor = 0, n_utterances_client = 0;
  double avg_sessions_per_counselor = 0, avg_sessions_per_client = 0;
  double avg_utterances_per_dialogue = 0;
  double avg_utterances_per_dialogue_counselor = 0, avg_utterances_per_dialogue_client = 0;
  double avg_chars_per_utterance = 0;
  double avg_chars_per_utterance_counselor = 0, avg_chars_per_utterance_client = 0;

  // Fixed-layout text table (values at 2 decimals).
  std::string render_text() const;
};

// One advisory hit from the personal-information scan.
struct AnonymizationFinding {
  std::string category;  // "phone-like" / "email-like" / "url-like"
  size_t utterance_index = 0;
  std::string span;
};

// Parses line-delimited session records. Malformed input raises SchemaError
// with the line number; duplicate session ids are rejected.
SessionSet ingest(std::istream& stream);
SessionSet ingest_file(const std::string& path);

std::string serialize(const SessionSet& sessions);
std::string serialize(const Session& session);  // one record line, no newline

CorpusStats corpus_stats(const SessionSet& sessions);

// Heuristic scan for contact-like tokens (phone/email/URL). Advisory only;
// never blocks ingestion.
std::vector<AnonymizationFinding> anonymization_check(const Session& session);

struct RoleLabels {
  std::string counselor = "Counselor";
  std::string client = "Client";
};

// Deterministic plain-text block, one "<RoleLabel>: <text>" line per
// utterance in index order.
std::string render_dialogue(const Session& session, const RoleLabels& labels = {});

}  // namespace alliance
