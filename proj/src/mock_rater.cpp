#include "alliance/mock_rater.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "alliance/errors.hpp"
#include "alliance/util.hpp"

namespace alliance {

using nlohmann::json;

MockRaterConfig MockRaterConfig::from_truth_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open truth file: " + path);
  MockRaterConfig config;
  for_each_line(in, [&](size_t lineno, const std::string& line) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("truth line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string sid = rec.at("session_id").get<std::string>();
    for (const auto& [qid, score] : rec.at("scores").items()) {
      const int v = score.get<int>();
      if (v < 1 || v > 5)
        throw SchemaError("truth line " + std::to_string(lineno) + ": score " +
                          std::to_string(v) + " outside 1..5 for " + qid);
      config.hidden_truth[{sid, question_id(question_number(qid))}] = v;
    }
  });
  return config;
}

MockRater::MockRater(MockRaterConfig config) : config_(std::move(config)) {
  if (config_.noise_sd < 0) throw DomainError("mock noise_sd must be >= 0");
  if (config_.misbehave_rate < 0 || config_.misbehave_rate > 1)
    throw DomainError("mock misbehave_rate must lie in [0,1]");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  // 53-bit mantissa in (0, 1]; never exactly 0 so log() stays finite.
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

double gaussian(std::uint64_t& state) {
  const double u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

int MockRater::draw_score(const RatingJob& job, int attempt) const {
  auto it = config_.hidden_truth.find({job.session_id, question_id(job.question_number)});
  if (it == config_.hidden_truth.end()) {
    throw Error("mock has no hidden truth for " + job.session_id + "/" +
                question_id(job.question_number));
  }
  const int truth = it->second;
  if (config_.noise_sd == 0.0) return truth;

  std::uint64_t state =
      config_.seed ^ fnv1a64(job.key() + "|score|" + std::to_string(attempt));
  const double noisy = truth + config_.noise_sd * gaussian(state);
  const double rounded = std::round(noisy);
  return static_cast<int>(std::min(5.0, std::max(1.0, rounded)));
}

std::string MockRater::complete(const RatingJob& job, const std::string& prompt,
                                int attempt) {
  (void)prompt;
  if (config_.misbehave_rate > 0.0) {
    std::uint64_t state =
        config_.seed ^ fnv1a64(job.key() + "|misbehave|" + std::to_string(attempt));
    if (uniform01(state) <= config_.misbehave_rate) {
      return "I am unable to commit to a single rating for this conversation.";
    }
  }
  const int score = draw_score(job, attempt);
  if (job.setting.cot) {
    return "Evidence: synthetic evidence for " + question_id(job.question_number) +
           " in session " + job.session_id + " (run " + std::to_string(job.run_index) +
           ").\nScore: " + std::to_string(score);
  }
  return "Score: " + std::to_string(score);
}

std::string CountingBackend::complete(const RatingJob& job, const std::string& prompt,
                                      int attempt) {
  const size_t n = calls_.fetch_add(1);
  if (n >= fail_after_) {
    throw TransportError("injected transport failure after " +
                         std::to_string(fail_after_) + " calls");
  }
  return inner_.complete(job, prompt, attempt);
}

}  // namespace alliance
