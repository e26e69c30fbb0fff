// Command-line entry point: ingest -> evaluate -> report -> feedback.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "alliance/analysis.hpp"
#include "alliance/errors.hpp"
#include "alliance/feedback.hpp"
#include "alliance/mock_rater.hpp"
#include "alliance/promptkit.hpp"
#include "alliance/providers.hpp"
#include "alliance/rater.hpp"
#include "alliance/reporting.hpp"
#include "alliance/rubric.hpp"
#include "alliance/transcript.hpp"
#include "alliance/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alliance;

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct OutputSpec {
  std::string out_dir;       // empty = stdout
  std::string format = "";   // "", "records" or "text"; empty = both (files) / text (stdout)
};

// Writes (or prints) one report in the requested format(s).
void emit_report(const OutputSpec& spec, const std::string& name,
                 const std::string& records, const std::string& text) {
  if (spec.out_dir.empty()) {
    std::cout << (spec.format == "records" ? records : text);
    return;
  }
  fs::create_directories(spec.out_dir);
  if (spec.format.empty() || spec.format == "records")
    write_file((fs::path(spec.out_dir) / (name + ".jsonl")).string(), records);
  if (spec.format.empty() || spec.format == "text")
    write_file((fs::path(spec.out_dir) / (name + ".txt")).string(), text);
}

std::vector<ScoreSheet> sheets_from_file(const std::string& ratings_path,
                                         const Rubric& rubric,
                                         const std::string& rater_label = "") {
  return sheets_from_records(RatingStore::read_all(ratings_path), rubric, rater_label);
}

int run(int argc, char** argv) {
  CLI::App app{"Working-alliance scoring and analysis for text-based counseling"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default option values");

  // ---- ingest ----
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate transcripts and print corpus statistics");
  std::string in_transcripts, in_out;
  bool in_scan = false;
  ingest_cmd->add_option("--transcripts", in_transcripts, "line-delimited session records")
      ->required();
  ingest_cmd->add_option("--out", in_out, "directory for the validated session store");
  ingest_cmd->add_flag("--check-anonymization", in_scan,
                       "also report contact-like tokens (advisory)");

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "Run rating jobs against a backend");
  struct {
    std::string sessions, rubric, tmpl, setting = "detailed", backend = "mock";
    std::string provider, truth, out;
    bool cot = false;
    int runs = 3, concurrency = 1, max_retries = 2;
    double noise_sd = 0.0, misbehave_rate = 0.0;
    std::uint64_t seed = 0;
    size_t max_prompt_chars = 0;
  } ev;
  // Required inputs may also arrive via --config; validated after the merge.
  eval_cmd->add_option("--sessions", ev.sessions);
  eval_cmd->add_option("--rubric", ev.rubric);
  eval_cmd->add_option("--template", ev.tmpl);
  eval_cmd->add_option("--setting", ev.setting, "none|general|detailed");
  eval_cmd->add_flag("--cot", ev.cot, "require evidence before the score");
  eval_cmd->add_option("--runs", ev.runs, "independent runs per question");
  eval_cmd->add_option("--backend", ev.backend, "mock|http");
  eval_cmd->add_option("--provider", ev.provider, "provider config (http backend)");
  eval_cmd->add_option("--truth", ev.truth, "hidden-truth file (mock backend)");
  eval_cmd->add_option("--noise-sd", ev.noise_sd, "mock noise standard deviation");
  eval_cmd->add_option("--misbehave-rate", ev.misbehave_rate, "mock unparseable-output rate");
  eval_cmd->add_option("--seed", ev.seed, "mock random seed");
  eval_cmd->add_option("--concurrency", ev.concurrency, "in-flight backend calls");
  eval_cmd->add_option("--max-retries", ev.max_retries, "extra attempts per job");
  eval_cmd->add_option("--max-prompt-chars", ev.max_prompt_chars,
                       "refuse prompts longer than this (0 = no limit)");
  eval_cmd->add_option("--out", ev.out, "output directory");

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "Produce an analysis report");
  struct {
    std::string kind, ratings, human_ratings, rubric, sessions, counselors, out, format;
  } rp;
  report_cmd
      ->add_option("kind", rp.kind,
                   "consistency|alignment|distribution|experience|phases|outcomes")
      ->required();
  report_cmd->add_option("--ratings", rp.ratings);
  report_cmd->add_option("--human-ratings", rp.human_ratings);
  report_cmd->add_option("--rubric", rp.rubric);
  report_cmd->add_option("--sessions", rp.sessions);
  report_cmd->add_option("--counselors", rp.counselors, "counselor metadata records");
  report_cmd->add_option("--out", rp.out);
  report_cmd->add_option("--format", rp.format, "records|text");

  // ---- feedback ----
  auto* feedback_cmd = app.add_subcommand("feedback", "Compose or summarize feedback");
  feedback_cmd->require_subcommand(1);
  auto* compose_cmd = feedback_cmd->add_subcommand("compose", "render per-session feedback");
  struct {
    std::string ratings, rubric, session, rater, out, format;
  } fc;
  compose_cmd->add_option("--ratings", fc.ratings)->required();
  compose_cmd->add_option("--rubric", fc.rubric)->required();
  compose_cmd->add_option("--session", fc.session, "session id (default: all sessions)");
  compose_cmd->add_option("--rater", fc.rater, "restrict to one rater id");
  compose_cmd->add_option("--out", fc.out);
  compose_cmd->add_option("--format", fc.format, "records|text");
  auto* summarize_cmd = feedback_cmd->add_subcommand("summarize", "aggregate assessments");
  struct {
    std::string assessments, out, format;
  } fsm;
  summarize_cmd->add_option("--assessments", fsm.assessments)->required();
  summarize_cmd->add_option("--out", fsm.out);
  summarize_cmd->add_option("--format", fsm.format, "records|text");

  CLI11_PARSE(app, argc, argv);

  // Config file supplies defaults for evaluate options not given on the line.
  json config = json::object();
  if (!config_path.empty()) {
    config = json::parse(read_file(config_path));
    auto fill = [&](const char* key, auto& slot, const CLI::Option* opt) {
      using T = std::decay_t<decltype(slot)>;
      if (opt->count() == 0 && config.contains(key)) slot = config[key].get<T>();
    };
    fill("sessions", ev.sessions, eval_cmd->get_option("--sessions"));
    fill("rubric", ev.rubric, eval_cmd->get_option("--rubric"));
    fill("template", ev.tmpl, eval_cmd->get_option("--template"));
    fill("setting", ev.setting, eval_cmd->get_option("--setting"));
    fill("runs", ev.runs, eval_cmd->get_option("--runs"));
    fill("backend", ev.backend, eval_cmd->get_option("--backend"));
    fill("provider", ev.provider, eval_cmd->get_option("--provider"));
    fill("truth", ev.truth, eval_cmd->get_option("--truth"));
    fill("noise_sd", ev.noise_sd, eval_cmd->get_option("--noise-sd"));
    fill("misbehave_rate", ev.misbehave_rate, eval_cmd->get_option("--misbehave-rate"));
    fill("seed", ev.seed, eval_cmd->get_option("--seed"));
    fill("concurrency", ev.concurrency, eval_cmd->get_option("--concurrency"));
    fill("max_retries", ev.max_retries, eval_cmd->get_option("--max-retries"));
    fill("out", ev.out, eval_cmd->get_option("--out"));
    if (eval_cmd->get_option("--cot")->count() == 0 && config.contains("cot"))
      ev.cot = config["cot"].get<bool>();
  }

  if (ingest_cmd->parsed()) {
    const SessionSet sessions = ingest_file(in_transcripts);
    const CorpusStats stats = corpus_stats(sessions);
    std::cout << stats.render_text();
    if (in_scan) {
      size_t total = 0;
      for (const Session& s : sessions.sessions()) {
        for (const AnonymizationFinding& f : anonymization_check(s)) {
          std::cout << "finding: session=" << s.session_id << " utterance=" << f.utterance_index
                    << " category=" << f.category << " span=\"" << f.span << "\"\n";
          ++total;
        }
      }
      std::cout << "anonymization findings: " << total << " (advisory only)\n";
    }
    if (!in_out.empty()) {
      fs::create_directories(in_out);
      write_file((fs::path(in_out) / "sessions.jsonl").string(), serialize(sessions));
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    for (const auto& [name, value] :
         {std::pair<const char*, const std::string*>{"--sessions", &ev.sessions},
          {"--rubric", &ev.rubric},
          {"--template", &ev.tmpl},
          {"--out", &ev.out}}) {
      if (value->empty())
        throw Error(std::string(name) + " is required (on the command line or in --config)");
    }
    const SessionSet sessions = ingest_file(ev.sessions);
    const Rubric rubric = load_rubric_file(ev.rubric);
    for (const std::string& w : rubric.warnings()) std::cerr << "rubric warning: " << w << "\n";
    const PromptTemplate tmpl = PromptTemplate::load_file(ev.tmpl);

    EvalSetting setting;
    setting.guidelines = guideline_level_from_key(ev.setting);
    setting.cot = ev.cot;
    if (!setting.is_studied_setting())
      std::cerr << "note: setting \"" << setting.key() << "\" is a non-standard combination\n";

    std::unique_ptr<RaterBackend> backend;
    if (ev.backend == "mock") {
      MockRaterConfig mock_config;
      if (!ev.truth.empty()) mock_config = MockRaterConfig::from_truth_file(ev.truth);
      mock_config.noise_sd = ev.noise_sd;
      mock_config.misbehave_rate = ev.misbehave_rate;
      mock_config.seed = ev.seed;
      backend = std::make_unique<MockRater>(std::move(mock_config));
    } else if (ev.backend == "http") {
      if (ev.provider.empty()) throw Error("http backend requires --provider");
      backend = std::make_unique<HttpProviderRater>(ProviderConfig::load_file(ev.provider),
                                                    make_httplib_transport());
    } else {
      throw Error("unknown backend: " + ev.backend + " (expected mock|http)");
    }

    const auto jobs = enumerate_jobs(sessions, setting, ev.runs);
    PromptLimits limits;
    limits.max_chars = ev.max_prompt_chars;
    const PromptFn prompt_for = [&](const RatingJob& job) {
      return build_prompt(sessions.by_id(job.session_id),
                          rubric.question(job.question_number), job.setting, rubric, tmpl,
                          limits)
          .text();
    };

    fs::create_directories(ev.out);
    RatingStore store((fs::path(ev.out) / "ratings.jsonl").string());

    BatchOptions options;
    options.concurrency_limit = ev.concurrency;
    options.max_retries = ev.max_retries;
    options.template_hash = tmpl.hash();

    const std::string started = iso_now();
    const BatchOutcome outcome = run_batch(jobs, prompt_for, *backend, &store, options);

    // Provenance sidecar: resolved configuration plus wall-clock bounds.
    json manifest;
    manifest["started_at"] = started;
    manifest["finished_at"] = iso_now();
    manifest["template_hash"] = tmpl.hash();
    manifest["setting"] = setting.key();
    manifest["studied_setting"] = setting.is_studied_setting();
    manifest["runs"] = ev.runs;
    manifest["concurrency"] = ev.concurrency;
    manifest["seed"] = ev.seed;
    manifest["noise_sd"] = ev.noise_sd;
    manifest["misbehave_rate"] = ev.misbehave_rate;
    manifest["backend"] = ev.backend;
    manifest["model"] = backend->model_name();
    manifest["sessions_file"] = ev.sessions;
    manifest["rubric_file"] = ev.rubric;
    manifest["template_file"] = ev.tmpl;
    if (!config.empty()) manifest["config"] = config;
    manifest["config_hash"] = fnv1a64_hex(config.dump());
    manifest["summary"] = outcome.summary_line();
    write_file((fs::path(ev.out) / "run_manifest.json").string(), manifest.dump(2) + "\n");

    std::cout << outcome.summary_line() << "\n";
    for (const BatchFailure& f : outcome.failures)
      std::cerr << "failed: " << f.job.key() << ": " << f.error << "\n";
    return outcome.all_succeeded() ? 0 : 1;
  }

  if (report_cmd->parsed()) {
    if (rp.rubric.empty()) throw Error("report requires --rubric");
    const Rubric rubric = load_rubric_file(rp.rubric);
    OutputSpec spec{rp.out, rp.format};

    if (rp.kind == "consistency") {
      if (rp.ratings.empty()) throw Error("report consistency requires --ratings");
      const auto report = self_consistency(RatingStore::read_all(rp.ratings), rubric);
      emit_report(spec, "consistency", consistency_records(report, rubric),
                  consistency_text(report, rubric));
    } else if (rp.kind == "alignment") {
      if (rp.ratings.empty() || rp.human_ratings.empty())
        throw Error("report alignment requires --ratings and --human-ratings");
      const auto model_sheets = sheets_from_file(rp.ratings, rubric);
      const auto human_sheets = sheets_from_file(rp.human_ratings, rubric);
      const auto report = alignment(model_sheets, human_sheets, rubric);
      emit_report(spec, "alignment", alignment_records(report, rubric),
                  alignment_text(report, rubric));
    } else if (rp.kind == "distribution") {
      if (rp.ratings.empty()) throw Error("report distribution requires --ratings");
      const auto report = descriptive_distribution(sheets_from_file(rp.ratings, rubric), rubric);
      emit_report(spec, "distribution", distribution_records(report, rubric),
                  distribution_text(report, rubric));
    } else if (rp.kind == "experience") {
      if (rp.ratings.empty() || rp.sessions.empty() || rp.counselors.empty())
        throw Error("report experience requires --ratings, --sessions and --counselors");
      const SessionSet sessions = ingest_file(rp.sessions);
      const auto report = experience_comparison(sheets_from_file(rp.ratings, rubric), sessions,
                                                load_counselor_metadata(rp.counselors));
      for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
      emit_report(spec, "experience", experience_records(report, rubric),
                  experience_text(report, rubric));
    } else if (rp.kind == "phases") {
      if (rp.ratings.empty() || rp.sessions.empty())
        throw Error("report phases requires --ratings and --sessions");
      const SessionSet sessions = ingest_file(rp.sessions);
      const auto report = phase_trend(sheets_from_file(rp.ratings, rubric), sessions);
      for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
      emit_report(spec, "phases", phase_records(report, rubric), phase_text(report, rubric));
    } else if (rp.kind == "outcomes") {
      if (rp.ratings.empty() || rp.sessions.empty())
        throw Error("report outcomes requires --ratings and --sessions");
      const SessionSet sessions = ingest_file(rp.sessions);
      const auto report = outcome_correlation(sheets_from_file(rp.ratings, rubric), sessions);
      emit_report(spec, "outcomes", outcome_records(report, rubric),
                  outcome_text(report, rubric));
    } else {
      throw Error("unknown report kind: " + rp.kind);
    }
    return 0;
  }

  if (compose_cmd->parsed()) {
    const Rubric rubric = load_rubric_file(fc.rubric);
    auto records = RatingStore::read_all(fc.ratings);
    if (!fc.rater.empty()) {
      std::erase_if(records, [&](const RatingRecord& r) { return r.rater_id != fc.rater; });
    }
    std::map<std::string, std::vector<RatingRecord>> by_session;
    for (const RatingRecord& r : records) by_session[r.session_id].push_back(r);
    if (by_session.empty()) throw Error("no rating records matched");

    std::string records_out, text_out;
    for (const auto& [sid, recs] : by_session) {
      if (!fc.session.empty() && sid != fc.session) continue;
      const ScoreSheet sheet = aggregate(recs, rubric);
      const FeedbackReport report = compose_feedback(sheet, recs, rubric);
      records_out += report.to_json_line(rubric) + "\n";
      if (!text_out.empty()) text_out += "\n";
      text_out += report.render_text(rubric);
    }
    if (records_out.empty()) throw Error("no rating records for session " + fc.session);
    emit_report(OutputSpec{fc.out, fc.format}, "feedback", records_out, text_out);
    return 0;
  }

  if (summarize_cmd->parsed()) {
    const auto summary = summarize_assessments(load_assessments(fsm.assessments));
    emit_report(OutputSpec{fsm.out, fsm.format}, "assessments", assessment_records(summary),
                assessment_text(summary));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
