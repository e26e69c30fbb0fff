#include "alliance/rubric.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

const std::string& dimension_key(Dimension d) {
  static const std::string keys[] = {"goal", "approach", "affective_bond"};
  return keys[static_cast<int>(d)];
}

Dimension dimension_from_key(const std::string& key) {
  for (Dimension d : kAllDimensions) {
    if (dimension_key(d) == key) return d;
  }
  throw SchemaError("unknown dimension id: " + key);
}

const std::string& guideline_level_key(GuidelineLevel level) {
  static const std::string keys[] = {"none", "general", "detailed"};
  return keys[static_cast<int>(level)];
}

GuidelineLevel guideline_level_from_key(const std::string& key) {
  if (key == "none") return GuidelineLevel::None;
  if (key == "general") return GuidelineLevel::General;
  if (key == "detailed") return GuidelineLevel::Detailed;
  throw SchemaError("unknown guideline level: " + key + " (expected none|general|detailed)");
}

int question_number(const std::string& id) {
  if (id.size() >= 2 && id[0] == 'Q') {
    int n = 0;
    for (size_t i = 1; i < id.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(id[i]))) { n = -1; break; }
      n = n * 10 + (id[i] - '0');
    }
    if (n >= 1 && n <= kQuestionCount) return n;
  }
  throw SchemaError("unknown question id: " + id);
}

std::string question_id(int number) {
  if (number < 1 || number > kQuestionCount)
    throw SchemaError("question number out of range: " + std::to_string(number));
  return "Q" + std::to_string(number);
}

const std::string& GuidelineSet::entry(int score) const {
  if (score < 1 || score > 5)
    throw DomainError("guideline score out of range: " + std::to_string(score));
  return entries[static_cast<size_t>(score - 1)];
}

std::string GuidelineSet::concatenated() const {
  std::string out;
  for (int score = 1; score <= 5; ++score) {
    out += std::to_string(score);
    out += " = ";
    out += entry(score);
    if (score < 5) out += "\n";
  }
  return out;
}

const Question& Rubric::question(const std::string& id) const {
  return question(question_number(id));
}

const Question& Rubric::question(int number) const {
  if (number < 1 || number > kQuestionCount)
    throw SchemaError("question number out of range: " + std::to_string(number));
  return questions_[static_cast<size_t>(number - 1)];
}

const std::string& Rubric::dimension_label(Dimension d) const {
  return dimension_labels_.at(d);
}

std::vector<const Question*> Rubric::questions_of(Dimension d) const {
  std::vector<const Question*> out;
  for (const Question& q : questions_) {
    if (q.dimension == d) out.push_back(&q);
  }
  return out;
}

const GuidelineSet& Rubric::detailed_guidelines(const std::string& qid) const {
  return detailed_.at(question_id(question_number(qid)));
}

std::optional<std::string> Rubric::guideline_text(const std::string& qid,
                                                  GuidelineLevel level) const {
  question_number(qid);  // validate id even when no text is returned
  switch (level) {
    case GuidelineLevel::None:
      return std::nullopt;
    case GuidelineLevel::General:
      return general_.concatenated();
    case GuidelineLevel::Detailed:
      return detailed_guidelines(qid).concatenated();
  }
  throw DomainError("invalid guideline level");
}

namespace {

// Markers of disagreement-type evidence, used to sanity-check that the
// favorable extreme of each guideline set does not read more negatively than
// the unfavorable one (anchor-direction consistency).
int negative_marker_count(const std::string& text) {
  static const char* kMarkers[] = {"disagree",  "dissatis", "conflict",
                                   "refus",     "mistrust", "distrust",
                                   "hostil",    "oppos",    "negative reaction",
                                   "inconsisten"};
  std::string lower;
  lower.reserve(text.size());
  for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  int count = 0;
  for (const char* marker : kMarkers) {
    size_t pos = 0;
    const size_t len = std::string(marker).size();
    while ((pos = lower.find(marker, pos)) != std::string::npos) {
      ++count;
      pos += len;
    }
  }
  return count;
}

GuidelineSet parse_guideline_set(const json& node, const std::string& owner) {
  GuidelineSet set;
  for (int score = 1; score <= 5; ++score) {
    const std::string key = std::to_string(score);
    if (!node.contains(key) || !node[key].is_string() ||
        node[key].get<std::string>().empty()) {
      throw SchemaError("detailed guideline absent: " + owner + "/" + key);
    }
    set.entries[static_cast<size_t>(score - 1)] = node[key].get<std::string>();
  }
  return set;
}

}  // namespace

Rubric load_rubric(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("rubric document is not valid JSON: ") + e.what());
  }

  Rubric rubric;
  rubric.language_ = doc.value("language", std::string("und"));

  if (!doc.contains("scale")) throw SchemaError("missing element: scale");
  const json& scale = doc["scale"];
  if (scale.value("min", 0) != Rubric::kScaleMin ||
      scale.value("max", 0) != Rubric::kScaleMax ||
      scale.value("neutral", 0) != Rubric::kNeutralPoint) {
    throw SchemaError("scale outside 1..5 with neutral 3");
  }

  if (!doc.contains("dimensions") || !doc["dimensions"].is_array())
    throw SchemaError("missing element: dimensions");
  std::set<Dimension> seen_dims;
  for (const json& d : doc["dimensions"]) {
    Dimension dim = dimension_from_key(d.at("id").get<std::string>());
    if (!seen_dims.insert(dim).second)
      throw SchemaError("duplicate dimension: " + d.at("id").get<std::string>());
    rubric.dimension_labels_[dim] = d.at("label").get<std::string>();
  }
  if (seen_dims.size() != kAllDimensions.size())
    throw SchemaError("expected exactly 3 dimensions, got " +
                      std::to_string(seen_dims.size()));

  if (!doc.contains("questions") || !doc["questions"].is_array())
    throw SchemaError("missing element: questions");
  std::map<int, Question> by_number;
  for (const json& qj : doc["questions"]) {
    Question q;
    q.id = qj.at("id").get<std::string>();
    q.number = question_number(q.id);
    q.id = question_id(q.number);
    q.dimension = dimension_from_key(qj.at("dimension").get<std::string>());
    q.text = qj.at("text").get<std::string>();
    if (q.text.empty()) throw SchemaError("empty question text: " + q.id);
    const std::string pol = qj.at("polarity").get<std::string>();
    if (pol == "forward") q.polarity = Polarity::Forward;
    else if (pol == "reverse") q.polarity = Polarity::Reverse;
    else throw SchemaError("unknown polarity for " + q.id + ": " + pol);
    if (by_number.count(q.number))
      throw SchemaError("duplicate question mapping: " + q.id);
    by_number[q.number] = q;
  }
  if (by_number.size() != kQuestionCount)
    throw SchemaError("expected exactly 12 questions, got " +
                      std::to_string(by_number.size()));
  for (auto& [number, q] : by_number) rubric.questions_.push_back(q);

  // Each dimension owns exactly four questions.
  for (Dimension d : kAllDimensions) {
    const auto owned = rubric.questions_of(d);
    if (owned.size() != kQuestionsPerDimension)
      throw SchemaError("dimension " + dimension_key(d) + " owns " +
                        std::to_string(owned.size()) + " questions, expected 4");
  }

  if (!doc.contains("general_guidelines"))
    throw SchemaError("missing element: general_guidelines");
  rubric.general_ = parse_guideline_set(doc["general_guidelines"], "general");

  if (!doc.contains("detailed_guidelines"))
    throw SchemaError("missing element: detailed_guidelines");
  for (const Question& q : rubric.questions_) {
    if (!doc["detailed_guidelines"].contains(q.id))
      throw SchemaError("detailed guideline absent: " + q.id);
    rubric.detailed_[q.id] = parse_guideline_set(doc["detailed_guidelines"][q.id], q.id);
  }

  // Anchor-direction check: warn (not error) when the favorable extreme
  // carries more disagreement markers than the unfavorable one.
  for (const Question& q : rubric.questions_) {
    const GuidelineSet& set = rubric.detailed_.at(q.id);
    const int fav_score = q.polarity == Polarity::Reverse ? 1 : 5;
    const int unfav_score = q.polarity == Polarity::Reverse ? 5 : 1;
    const int fav = negative_marker_count(set.entry(fav_score));
    const int unfav = negative_marker_count(set.entry(unfav_score));
    if (fav >= 2 && fav > unfav) {
      rubric.warnings_.push_back(
          "anchor-direction inconsistency: " + q.id + " score-" +
          std::to_string(fav_score) +
          " guideline reads like disagreement evidence");
    }
  }

  return rubric;
}

Rubric load_rubric_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rubric file: " + path);
  return load_rubric(in);
}

std::string Rubric::serialize() const {
  json doc;
  doc["language"] = language_;
  doc["scale"] = {{"min", kScaleMin}, {"max", kScaleMax}, {"neutral", kNeutralPoint}};
  doc["dimensions"] = json::array();
  for (Dimension d : kAllDimensions) {
    doc["dimensions"].push_back(
        {{"id", dimension_key(d)}, {"label", dimension_labels_.at(d)}});
  }
  doc["questions"] = json::array();
  for (const Question& q : questions_) {
    doc["questions"].push_back(
        {{"id", q.id},
         {"dimension", dimension_key(q.dimension)},
         {"text", q.text},
         {"polarity", q.polarity == Polarity::Reverse ? "reverse" : "forward"}});
  }
  json general;
  for (int s = 1; s <= 5; ++s) general[std::to_string(s)] = general_.entry(s);
  doc["general_guidelines"] = general;
  json detailed;
  for (const Question& q : questions_) {
    json per;
    for (int s = 1; s <= 5; ++s) per[std::to_string(s)] = detailed_.at(q.id).entry(s);
    detailed[q.id] = per;
  }
  doc["detailed_guidelines"] = detailed;
  return doc.dump(2) + "\n";
}

double normalize_score(const Question& q, double raw) {
  if (!(raw >= Rubric::kScaleMin && raw <= Rubric::kScaleMax))
    throw DomainError("score outside [1,5]: " + std::to_string(raw));
  return q.polarity == Polarity::Reverse ? 6.0 - raw : raw;
}

}  // namespace alliance
