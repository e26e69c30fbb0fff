#include "alliance/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

const std::string& speaker_key(Speaker s) {
  static const std::string keys[] = {"counselor", "client"};
  return keys[static_cast<int>(s)];
}

Speaker speaker_from_key(const std::string& key) {
  if (key == "counselor") return Speaker::Counselor;
  if (key == "client") return Speaker::Client;
  throw SchemaError("unknown speaker role: \"" + key +
                    "\" (allowed roles: counselor, client)");
}

size_t Utterance::char_length() const { return utf8_length(text); }

SessionSet::SessionSet(std::vector<Session> sessions) : sessions_(std::move(sessions)) {
  std::sort(sessions_.begin(), sessions_.end(), [](const Session& a, const Session& b) {
    return std::tie(a.counselor_id, a.client_id, a.sequence_no) <
           std::tie(b.counselor_id, b.client_id, b.sequence_no);
  });
  for (size_t i = 0; i < sessions_.size(); ++i) {
    if (!index_.emplace(sessions_[i].session_id, i).second)
      throw SchemaError("duplicate session_id: " + sessions_[i].session_id);
  }
  // sequence_no unique per counselor-client pair
  for (size_t i = 1; i < sessions_.size(); ++i) {
    const Session& prev = sessions_[i - 1];
    const Session& cur = sessions_[i];
    if (prev.counselor_id == cur.counselor_id && prev.client_id == cur.client_id &&
        prev.sequence_no == cur.sequence_no) {
      throw SchemaError("duplicate sequence_no " + std::to_string(cur.sequence_no) +
                        " for pair (" + cur.counselor_id + ", " + cur.client_id + ")");
    }
  }
}

const Session& SessionSet::by_id(const std::string& session_id) const {
  auto it = index_.find(session_id);
  if (it == index_.end()) throw Error("unknown session_id: " + session_id);
  return sessions_[it->second];
}

bool SessionSet::contains(const std::string& session_id) const {
  return index_.count(session_id) > 0;
}

namespace {

Session parse_session(const json& rec, size_t lineno) {
  auto fail = [lineno](const std::string& msg) -> SchemaError {
    return SchemaError("line " + std::to_string(lineno) + ": " + msg);
  };
  Session s;
  try {
    s.session_id = rec.at("session_id").get<std::string>();
    s.counselor_id = rec.at("counselor_id").get<std::string>();
    s.client_id = rec.at("client_id").get<std::string>();
    s.sequence_no = rec.at("sequence_no").get<int>();
  } catch (const json::exception& e) {
    throw fail(std::string("malformed session record: ") + e.what());
  }
  if (s.session_id.empty()) throw fail("empty session_id");
  if (s.sequence_no < 1) throw fail("sequence_no must be >= 1");

  if (!rec.contains("utterances") || !rec["utterances"].is_array() ||
      rec["utterances"].empty()) {
    throw fail("session " + s.session_id + " has no utterances");
  }
  size_t index = 0;
  for (const json& uj : rec["utterances"]) {
    Utterance u;
    u.index = index++;
    try {
      u.speaker = speaker_from_key(uj.at("speaker").get<std::string>());
      u.text = uj.at("text").get<std::string>();
    } catch (const SchemaError& e) {
      throw fail(e.what());
    } catch (const json::exception& e) {
      throw fail(std::string("malformed utterance: ") + e.what());
    }
    if (u.text.empty()) throw fail("empty utterance text in session " + s.session_id);
    s.utterances.push_back(std::move(u));
  }

  if (rec.contains("ors")) {
    const json& o = rec["ors"];
    OutcomeRecord r;
    try {
      r.physical_mental = o.at("physical_mental").get<double>();
      r.relationships = o.at("relationships").get<double>();
      r.social_life = o.at("social_life").get<double>();
      r.overall = o.at("overall").get<double>();
    } catch (const json::exception& e) {
      throw fail(std::string("malformed ors record: ") + e.what());
    }
    for (double v : {r.physical_mental, r.relationships, r.social_life, r.overall}) {
      if (!(v >= 0.0 && v <= 100.0))
        throw fail("ors value outside [0,100] in session " + s.session_id);
    }
    s.ors = r;
  }
  return s;
}

}  // namespace

SessionSet ingest(std::istream& stream) {
  std::vector<Session> sessions;
  for_each_line(stream, [&](size_t lineno, const std::string& line) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(lineno) +
                        ": malformed record: " + e.what());
    }
    sessions.push_back(parse_session(rec, lineno));
  });
  return SessionSet(std::move(sessions));
}

SessionSet ingest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open transcript file: " + path);
  return ingest(in);
}

std::string serialize(const Session& s) {
  json rec;
  rec["session_id"] = s.session_id;
  rec["counselor_id"] = s.counselor_id;
  rec["client_id"] = s.client_id;
  rec["sequence_no"] = s.sequence_no;
  rec["utterances"] = json::array();
  for (const Utterance& u : s.utterances) {
    rec["utterances"].push_back({{"speaker", speaker_key(u.speaker)}, {"text", u.text}});
  }
  if (s.ors) {
    rec["ors"] = {{"physical_mental", s.ors->physical_mental},
                  {"relationships", s.ors->relationships},
                  {"social_life", s.ors->social_life},
                  {"overall", s.ors->overall}};
  }
  return rec.dump();
}

std::string serialize(const SessionSet& sessions) {
  std::string out;
  for (const Session& s : sessions.sessions()) {
    out += serialize(s);
    out += "\n";
  }
  return out;
}

CorpusStats corpus_stats(const SessionSet& set) {
  if (set.empty()) throw Error("corpus_stats: empty session set");
  CorpusStats st;
  std::set<std::string> counselors, clients;
  size_t chars_total = 0, chars_counselor = 0, chars_client = 0;
  st.n_dialogues = set.size();
  for (const Session& s : set.sessions()) {
    counselors.insert(s.counselor_id);
    clients.insert(s.client_id);
    for (const Utterance& u : s.utterances) {
      const size_t len = u.char_length();
      ++st.n_utterances_total;
      chars_total += len;
      if (u.speaker == Speaker::Counselor) {
        ++st.n_utterances_counselor;
        chars_counselor += len;
      } else {
        ++st.n_utterances_client;
        chars_client += len;
      }
    }
  }
  st.n_counselors = counselors.size();
  st.n_clients = clients.size();
  st.n_speakers_total = st.n_counselors + st.n_clients;
  const double nd = static_cast<double>(st.n_dialogues);
  st.avg_sessions_per_counselor = nd / static_cast<double>(st.n_counselors);
  st.avg_sessions_per_client = nd / static_cast<double>(st.n_clients);
  st.avg_utterances_per_dialogue = static_cast<double>(st.n_utterances_total) / nd;
  st.avg_utterances_per_dialogue_counselor =
      static_cast<double>(st.n_utterances_counselor) / nd;
  st.avg_utterances_per_dialogue_client =
      static_cast<double>(st.n_utterances_client) / nd;
  auto safe_div = [](size_t num, size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  st.avg_chars_per_utterance = safe_div(chars_total, st.n_utterances_total);
  st.avg_chars_per_utterance_counselor =
      safe_div(chars_counselor, st.n_utterances_counselor);
  st.avg_chars_per_utterance_client = safe_div(chars_client, st.n_utterances_client);
  return st;
}

std::string CorpusStats::render_text() const {
  std::ostringstream out;
  auto row = [&out](const std::string& label, const std::string& total,
                    const std::string& counselor, const std::string& client) {
    out << label;
    for (size_t i = label.size(); i < 34; ++i) out << ' ';
    auto cell = [&out](const std::string& v) {
      for (size_t i = v.size(); i < 12; ++i) out << ' ';
      out << v;
    };
    cell(total);
    cell(counselor);
    cell(client);
    out << "\n";
  };
  row("Category", "Total", "Counselor", "Client");
  out << std::string(70, '-') << "\n";
  row("# Dialogues", std::to_string(n_dialogues), "-", "-");
  row("# Speakers", std::to_string(n_speakers_total), std::to_string(n_counselors),
      std::to_string(n_clients));
  row("# Avg. sessions per speaker", "-", fixed(avg_sessions_per_counselor, 2),
      fixed(avg_sessions_per_client, 2));
  row("# Utterances", std::to_string(n_utterances_total),
      std::to_string(n_utterances_counselor), std::to_string(n_utterances_client));
  row("Avg. utterances per dialogue", fixed(avg_utterances_per_dialogue, 2),
      fixed(avg_utterances_per_dialogue_counselor, 2),
      fixed(avg_utterances_per_dialogue_client, 2));
  row("Avg. length per utterance", fixed(avg_chars_per_utterance, 2),
      fixed(avg_chars_per_utterance_counselor, 2),
      fixed(avg_chars_per_utterance_client, 2));
  return out.str();
}

std::vector<AnonymizationFinding> anonymization_check(const Session& session) {
  // Long digit runs (7+, separators allowed), emails, and URLs. Heuristic;
  // findings are advisory and redaction is left to the corpus owner.
  static const std::regex phone_re(R"((\+?\d[\d\-\s]{5,}\d))");
  static const std::regex email_re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})");
  static const std::regex url_re(R"((https?://[^\s]+|www\.[^\s]+))");

  std::vector<AnonymizationFinding> findings;
  auto scan = [&](const Utterance& u, const std::regex& re, const std::string& category,
                  size_t min_digits) {
    for (std::sregex_iterator it(u.text.begin(), u.text.end(), re), end; it != end; ++it) {
      const std::string span = it->str();
      if (min_digits > 0) {
        size_t digits = 0;
        for (char c : span)
          if (std::isdigit(static_cast<unsigned char>(c))) ++digits;
        if (digits < min_digits) continue;
      }
      findings.push_back({category, u.index, span});
    }
  };
  for (const Utterance& u : session.utterances) {
    scan(u, phone_re, "phone-like", 7);
    scan(u, email_re, "email-like", 0);
    scan(u, url_re, "url-like", 0);
  }
  return findings;
}

std::string render_dialogue(const Session& session, const RoleLabels& labels) {
  std::string out;
  for (const Utterance& u : session.utterances) {
    out += u.speaker == Speaker::Counselor ? labels.counselor : labels.client;
    out += ": ";
    out += u.text;
    out += "\n";
  }
  return out;
}

}  // namespace alliance
