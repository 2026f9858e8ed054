#include "socrates/calibrator.hpp"

#include "socrates/consistency.hpp"
#include "socrates/prompt.hpp"

namespace socrates {

std::string_view to_string(GapClass c) {
  switch (c) {
    case GapClass::too_easy:
      return "too_easy";
    case GapClass::well_gapped:
      return "well_gapped";
    case GapClass::too_hard:
      return "too_hard";
    case GapClass::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

GapClass classify_gap(double baseline_rate, double guided_rate, double baseline_max,
                      double guided_min) {
  if (baseline_rate > baseline_max) return GapClass::too_easy;
  if (guided_rate >= guided_min) return GapClass::well_gapped;
  return GapClass::too_hard;
}

AreaAnswers blank_answers(const Question& q) {
  AreaAnswers out;
  for (const auto& area : q.answer_areas) out.emplace(area.id, std::string{});
  return out;
}

namespace {

ArmResult run_arm(Gateway& gateway, const Question& q, const AreaAnswers& answers,
                  const std::vector<const TestCase*>& cases, const TrialConfig& solve,
                  const JudgeConfig& judge) {
  ArmResult arm;
  for (const TestCase* tc : cases) {
    const PromptBundle prompt = assemble_task_prompt(q, answers, *tc, true);
    arm.total += solve.k;
    TrialSet trials;
    try {
      trials = run_trials(gateway, prompt, solve);
    } catch (const AllTrialsFailed&) {
      arm.failed += solve.k;
      continue;
    }
    arm.failed += trials.failed_count();
    verify_trials(gateway, trials, *tc->sample_output, judge);
    for (const auto& v : *trials.verdicts) {
      if (v.is_yes()) ++arm.correct;
    }
  }
  arm.all_failed = arm.total > 0 && arm.failed == arm.total;
  return arm;
}

}  // namespace

CalibrationVerdict calibrate(const Assignment& assignment, const Question& question,
                             const AreaAnswers& sample_answer, Gateway& gateway,
                             const CalibrationOptions& options) {
  if (options.trials_per_arm < 1) throw std::invalid_argument("trials_per_arm must be >= 1");
  for (const auto& area : question.answer_areas) {
    if (!sample_answer.contains(area.id)) throw MissingAnswerArea(area.id);
  }
  std::vector<const TestCase*> cases;
  for (const auto& tc : question.test_cases) {
    if (tc.sample_output && !tc.sample_output->empty()) cases.push_back(&tc);
  }
  if (cases.empty()) throw NoVerifiableTestCase(question.id);

  CalibrationVerdict v;
  v.question_id = question.id;
  v.model = options.model.value_or(effective_model(assignment, question));
  v.judge_model = options.judge_model.value_or(v.model);
  v.trials_per_arm = options.trials_per_arm;
  v.verifiable_test_cases = static_cast<int>(cases.size());
  v.baseline_max = options.baseline_max;
  v.guided_min = options.guided_min;
  if (!gateway.has_model(v.model)) throw UnknownModel(v.model);
  if (!gateway.has_model(v.judge_model)) throw UnknownModel(v.judge_model);

  TrialConfig solve;
  solve.model_id = v.model;
  solve.k = options.trials_per_arm;
  solve.threshold = 1;
  solve.temperature = effective_temperature(assignment, question);
  solve.component = Component::calibrator;

  JudgeConfig judge;
  judge.model_id = v.judge_model;
  judge.votes = options.judge_trials.value_or(effective_trials(assignment, question));
  judge.threshold = options.judge_threshold.value_or(effective_threshold(assignment, question));
  judge.component = Component::calibrator;
  if (judge.threshold < 1 || judge.threshold > judge.votes) {
    throw std::invalid_argument("judge threshold must be in [1, judge trials]");
  }

  // Arms run one after the other.
  v.baseline = run_arm(gateway, question, blank_answers(question), cases, solve, judge);
  v.guided = run_arm(gateway, question, sample_answer, cases, solve, judge);
  v.baseline_success_rate = v.baseline.rate();
  v.guided_success_rate = v.guided.rate();

  if (v.baseline.all_failed) {
    v.classification = GapClass::inconclusive;
    v.failed_arm = "baseline";
  } else if (v.guided.all_failed) {
    v.classification = GapClass::inconclusive;
    v.failed_arm = "guided";
  } else {
    v.classification = classify_gap(v.baseline_success_rate, v.guided_success_rate,
                                    options.baseline_max, options.guided_min);
  }
  return v;
}

json calibration_verdict_to_json(const CalibrationVerdict& v) {
  auto arm = [](const ArmResult& a) {
    return json{{"correct", a.correct}, {"total", a.total}, {"failed", a.failed}};
  };
  json j = {{"question_id", v.question_id},
            {"model", v.model},
            {"judge_model", v.judge_model},
            {"baseline_success_rate", v.baseline_success_rate},
            {"guided_success_rate", v.guided_success_rate},
            {"baseline", arm(v.baseline)},
            {"guided", arm(v.guided)},
            {"trials_per_arm", v.trials_per_arm},
            {"verifiable_test_cases", v.verifiable_test_cases},
            {"baseline_max", v.baseline_max},
            {"guided_min", v.guided_min},
            {"classification", to_string(v.classification)}};
  if (v.failed_arm) j["failed_arm"] = *v.failed_arm;
  return j;
}

}  // namespace socrates
