#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "socrates/gateway.hpp"
#include "socrates/prompt.hpp"

namespace socrates {

struct TrialConfig {
  std::string model_id;
  int k = 1;
  int threshold = 1;
  double temperature = 1.0;
  Component component = Component::playground;
  int max_output_tokens = 0;
};

// Judge votes cast on each trial output. A trial output counts as Yes when at
// least `threshold` of `votes` verification replies parse as Yes.
struct JudgeConfig {
  std::string model_id;
  int votes = 1;
  int threshold = 1;
  double temperature = 0.0;
  Component component = Component::grader;
};

struct TrialSet {
  PromptBundle prompt;
  int k = 0;
  int threshold = 1;
  // Index i holds trial_index i. A failed trial has an empty response and its
  // error message recorded at the same index.
  std::vector<ChatResponse> responses;
  std::vector<std::optional<std::string>> errors;
  std::optional<std::vector<Verdict>> verdicts;

  int failed_count() const;
  std::vector<std::string> outputs() const;
};

struct ConsistencyDecision {
  int yes_count = 0;
  bool passed = false;
  int ambiguous_count = 0;

  bool operator==(const ConsistencyDecision&) const = default;
};

class AllTrialsFailed : public std::runtime_error {
 public:
  explicit AllTrialsFailed(const std::string& detail)
      : std::runtime_error("all trials failed: " + detail) {}
};

// Requests exactly cfg.k completions (trial_index 0..k-1) concurrently; the
// gateway bounds how many are in flight.
TrialSet run_trials(Gateway& gateway, const PromptBundle& prompt, const TrialConfig& cfg);

// Requires 1 <= threshold <= verdicts.size().
ConsistencyDecision decide(const std::vector<Verdict>& verdicts, int threshold);

// Runs the judge on one candidate. A judge that fails on every vote yields an
// ambiguous No.
Verdict judge_output(Gateway& gateway, std::string_view candidate, std::string_view sample,
                     const JudgeConfig& judge);

// Fills trials.verdicts. Failed solving trials are recorded as No without a
// judge call.
void verify_trials(Gateway& gateway, TrialSet& trials, std::string_view sample,
                   const JudgeConfig& judge);

}  // namespace socrates
