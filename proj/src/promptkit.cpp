#include "alliance/promptkit.hpp"

#include <algorithm>
#include <sstream>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

bool EvalSetting::is_studied_setting() const {
  if (cot) return guidelines == GuidelineLevel::Detailed;
  return true;  // none / general / detailed without CoT
}

std::string EvalSetting::key() const {
  std::string k = guideline_level_key(guidelines);
  if (cot) k += "+cot";
  return k;
}

EvalSetting eval_setting_from_key(const std::string& key) {
  EvalSetting s;
  std::string base = key;
  const auto plus = key.find('+');
  if (plus != std::string::npos) {
    const std::string suffix = key.substr(plus + 1);
    if (suffix != "cot") throw SchemaError("unknown setting suffix: " + suffix);
    s.cot = true;
    base = key.substr(0, plus);
  }
  s.guidelines = guideline_level_from_key(base);
  return s;
}

std::string Prompt::text() const {
  std::vector<const std::string*> parts;
  parts.push_back(&task_definition);
  parts.push_back(&dialogue);
  parts.push_back(&question);
  if (guidelines) parts.push_back(&*guidelines);
  if (cot_instruction) parts.push_back(&*cot_instruction);
  parts.push_back(&expected_response_format);
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "\n\n";
    out += *parts[i];
  }
  return out;
}

PromptTemplate PromptTemplate::parse(const std::string& content) {
  PromptTemplate tmpl;
  tmpl.hash_ = fnv1a64_hex(content);

  std::istringstream in(content);
  std::string line, current;
  std::string body;
  auto flush = [&]() {
    if (current.empty()) return;
    // strip one trailing newline left by the section separator
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    tmpl.sections_.emplace_back(current, body);
    body.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      flush();
      current = line.substr(1, line.size() - 2);
      continue;
    }
    if (current.empty()) {
      if (!trim(line).empty())
        throw SchemaError("template content before first [section] header");
      continue;
    }
    body += line;
    body += "\n";
  }
  flush();

  for (const char* required : {"task", "dialogue", "question", "guidelines", "cot",
                               "format", "format_cot"}) {
    bool found = false;
    for (const auto& [name, text] : tmpl.sections_)
      if (name == required) found = true;
    if (!found) throw SchemaError(std::string("template missing section: [") + required + "]");
  }

  // Reject unknown {tokens} up front; legitimate braces in dialogue content
  // never reach this check since it runs on the template, not the output.
  for (const auto& [name, text] : tmpl.sections_) {
    size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
      const size_t close = text.find('}', pos);
      if (close == std::string::npos) break;
      const std::string token = text.substr(pos + 1, close - pos - 1);
      bool identifier = !token.empty() && token.size() <= 16;
      for (char c : token)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') identifier = false;
      if (identifier && token != "dialogue" && token != "question" && token != "guidelines") {
        throw SchemaError("template placeholder unresolved: {" + token + "} in [" + name + "]");
      }
      pos = close + 1;
    }
  }
  return tmpl;
}

PromptTemplate PromptTemplate::load_file(const std::string& path) {
  return parse(read_file(path));
}

const std::string& PromptTemplate::section(const std::string& name) const {
  for (const auto& [key, text] : sections_) {
    if (key == name) return text;
  }
  throw SchemaError("template missing section: [" + name + "]");
}

namespace {

std::string substitute(std::string text,
                       const std::vector<std::pair<std::string, std::string>>& vars) {
  for (const auto& [name, value] : vars) {
    const std::string placeholder = "{" + name + "}";
    size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
      text.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  // A known placeholder still present means its value was unavailable in
  // this setting (e.g. {guidelines} in a section rendered without them).
  for (const char* name : {"dialogue", "question", "guidelines"}) {
    const std::string placeholder = std::string("{") + name + "}";
    if (text.find(placeholder) != std::string::npos)
      throw SchemaError("template placeholder unresolved: " + placeholder);
  }
  return text;
}

}  // namespace

Prompt build_prompt(const Session& session, const Question& q,
                    const EvalSetting& setting, const Rubric& rubric,
                    const PromptTemplate& tmpl) {
  return build_prompt(session, q, setting, rubric, tmpl, PromptLimits{});
}

Prompt build_prompt(const Session& session, const Question& q,
                    const EvalSetting& setting, const Rubric& rubric,
                    const PromptTemplate& tmpl, const PromptLimits& limits) {
  Prompt prompt;
  const std::string dialogue_text = render_dialogue(session);
  std::vector<std::pair<std::string, std::string>> vars = {
      {"dialogue", dialogue_text}, {"question", q.text}};
  const auto guideline_text = rubric.guideline_text(q.id, setting.guidelines);
  if (guideline_text) vars.emplace_back("guidelines", *guideline_text);

  prompt.task_definition = substitute(tmpl.section("task"), vars);
  prompt.dialogue = substitute(tmpl.section("dialogue"), vars);
  prompt.question = substitute(tmpl.section("question"), vars);
  if (guideline_text) prompt.guidelines = substitute(tmpl.section("guidelines"), vars);
  if (setting.cot) prompt.cot_instruction = substitute(tmpl.section("cot"), vars);
  prompt.expected_response_format =
      substitute(tmpl.section(setting.cot ? "format_cot" : "format"), vars);

  if (limits.max_chars > 0) {
    const size_t total = utf8_length(prompt.text());
    if (total > limits.max_chars) {
      throw DomainError("prompt for session " + session.session_id + " / " + q.id +
                        " exceeds the character budget (" + std::to_string(total) +
                        " > " + std::to_string(limits.max_chars) +
                        "); refusing to truncate");
    }
  }
  return prompt;
}

std::string RatingJob::key() const {
  return session_id + "|" + question_id(question_number) + "|" +
         std::to_string(run_index);
}

std::vector<RatingJob> enumerate_jobs(const SessionSet& sessions,
                                      const EvalSetting& setting, int runs) {
  if (runs < 1) throw DomainError("enumerate_jobs: runs must be >= 1");
  std::vector<std::string> ids;
  ids.reserve(sessions.size());
  for (const Session& s : sessions.sessions()) ids.push_back(s.session_id);
  std::sort(ids.begin(), ids.end());

  std::vector<RatingJob> jobs;
  jobs.reserve(ids.size() * kQuestionCount * static_cast<size_t>(runs));
  for (const std::string& sid : ids) {
    for (int qn = 1; qn <= kQuestionCount; ++qn) {
      for (int run = 0; run < runs; ++run) {
        jobs.push_back(RatingJob{sid, qn, run, setting});
      }
    }
  }
  return jobs;
}

}  // namespace alliance
