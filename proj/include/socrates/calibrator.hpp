#pragma once

// Certifies a question's knowledge gap: the model should fail when the answer
// areas are blank (baseline arm) and succeed with the instructor's sample
// answer (guided arm).

#include <optional>
#include <stdexcept>
#include <string>

#include "socrates/assignment.hpp"
#include "socrates/gateway.hpp"

namespace socrates {

enum class GapClass { too_easy, well_gapped, too_hard, inconclusive };

std::string_view to_string(GapClass c);

struct CalibrationOptions {
  int trials_per_arm = 10;
  double baseline_max = 0.2;
  double guided_min = 0.8;
  std::optional<std::string> model;        // solving model override
  std::optional<std::string> judge_model;  // defaults to the solving model
  // Judge votes per trial output; default to the question's trials/threshold.
  std::optional<int> judge_trials;
  std::optional<int> judge_threshold;
};

struct ArmResult {
  int correct = 0;
  int total = 0;
  int failed = 0;  // solving trials whose provider call failed
  bool all_failed = false;

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct CalibrationVerdict {
  std::string question_id;
  std::string model;
  std::string judge_model;
  double baseline_success_rate = 0.0;
  double guided_success_rate = 0.0;
  ArmResult baseline;
  ArmResult guided;
  int trials_per_arm = 0;
  int verifiable_test_cases = 0;
  double baseline_max = 0.0;
  double guided_min = 0.0;
  GapClass classification = GapClass::inconclusive;
  std::optional<std::string> failed_arm;  // "baseline" or "guided" when inconclusive
};

class NoVerifiableTestCase : public std::runtime_error {
 public:
  explicit NoVerifiableTestCase(const std::string& qid)
      : std::runtime_error("question " + qid + " has no test case with a sample_output") {}
};

// Pure decision on measured rates.
GapClass classify_gap(double baseline_rate, double guided_rate, double baseline_max,
                      double guided_min);

// Answers with every area blanked, used by the baseline arm.
AreaAnswers blank_answers(const Question& q);

// An arm whose solving trials all fail makes the verdict inconclusive rather
// than raising.
CalibrationVerdict calibrate(const Assignment& assignment, const Question& question,
                             const AreaAnswers& sample_answer, Gateway& gateway,
                             const CalibrationOptions& options = {});

json calibration_verdict_to_json(const CalibrationVerdict& v);

}  // namespace socrates
