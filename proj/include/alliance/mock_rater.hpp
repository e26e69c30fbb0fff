#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>

#include "alliance/rater.hpp"

namespace alliance {

// Deterministic stand-in for a model backend. Emits hidden-truth scores
// perturbed by rounded Gaussian noise clipped to [1, 5]; optionally
// misbehaves (unparseable text) at a configured rate. All draws derive from
// hash(seed, session, question, run, attempt), so outputs are identical for
// any concurrency and resume pattern.
struct MockRaterConfig {
  std::map<std::pair<std::string, std::string>, int> hidden_truth;  // (session, "Qn") -> 1..5
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  double misbehave_rate = 0.0;
  std::string model_name = "mock-rater";

  static MockRaterConfig from_truth_file(const std::string& path);
};

class MockRater final : public RaterBackend {
 public:
  explicit MockRater(MockRaterConfig config);

  std::string complete(const RatingJob& job, const std::string& prompt,
                       int attempt) override;
  std::string model_name() const override { return config_.model_name; }
  BackendKind kind() const override { return BackendKind::Mock; }

  // The score the mock would emit for this (job, attempt); exposed for tests.
  int draw_score(const RatingJob& job, int attempt) const;

 private:
  MockRaterConfig config_;
};

// Forwards to an inner backend, counting calls and optionally failing every
// call after a budget is spent. Used to exercise resume behavior.
class CountingBackend final : public RaterBackend {
 public:
  CountingBackend(RaterBackend& inner, size_t fail_after = SIZE_MAX)
      : inner_(inner), fail_after_(fail_after) {}

  std::string complete(const RatingJob& job, const std::string& prompt,
                       int attempt) override;
  std::string model_name() const override { return inner_.model_name(); }
  BackendKind kind() const override { return inner_.kind(); }
  double temperature() const override { return inner_.temperature(); }
  double top_p() const override { return inner_.top_p(); }

  size_t calls() const { return calls_; }

 private:
  RaterBackend& inner_;
  size_t fail_after_;
  std::atomic<size_t> calls_{0};
};

}  // namespace alliance
