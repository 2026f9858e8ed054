#include "socrates/grader.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "socrates/consistency.hpp"
#include "socrates/prompt.hpp"

namespace socrates {

namespace {

struct Plan {
  std::string model;
  std::string judge_model;
  int trials = 0;
  int threshold = 0;
  int judge_votes = 0;
  int judge_threshold = 0;
  double temperature = 1.0;
  std::vector<const TestCase*> cases;
};

std::vector<const TestCase*> grading_cases(const Question& q, bool include_student_cases) {
  std::vector<const TestCase*> out;
  for (const auto& tc : q.test_cases) {
    if (tc.visibility == Visibility::grader ||
        (include_student_cases && tc.sample_output && !tc.sample_output->empty())) {
      out.push_back(&tc);
    }
  }
  return out;
}

Plan plan_for(const Assignment& a, const Question& q, const GradeOptions& opt) {
  Plan p;
  p.model = effective_model(a, q);
  p.judge_model = opt.judge_model.value_or(p.model);
  p.trials = opt.trials.value_or(effective_trials(a, q));
  p.threshold = opt.threshold.value_or(effective_threshold(a, q));
  p.judge_votes = opt.judge_trials.value_or(p.trials);
  p.judge_threshold = opt.judge_threshold.value_or(p.threshold);
  p.temperature = effective_temperature(a, q);
  p.cases = grading_cases(q, opt.include_student_cases);
  return p;
}

void validate(const Assignment& a, const GradeOptions& opt, const Gateway& gateway) {
  if (opt.parallel < 1) throw GradeConfigError("--parallel must be >= 1");
  if (opt.min_cases && *opt.min_cases < 1) throw GradeConfigError("--min-cases must be >= 1");
  for (const auto& q : a.questions) {
    if (q.demo) continue;
    const Plan p = plan_for(a, q, opt);
    const std::string where = "question " + q.id + ": ";
    if (p.trials < 1) throw GradeConfigError(where + "trials must be >= 1");
    if (p.threshold < 1 || p.threshold > p.trials) {
      throw GradeConfigError(where + "threshold must be in [1, trials]");
    }
    if (p.judge_votes < 1) throw GradeConfigError(where + "judge trials must be >= 1");
    if (p.judge_threshold < 1 || p.judge_threshold > p.judge_votes) {
      throw GradeConfigError(where + "judge threshold must be in [1, judge trials]");
    }
    if (p.cases.empty()) throw GradeConfigError(where + "no grading test cases");
    if (!gateway.has_model(p.model)) throw GradeConfigError(where + "unknown model " + p.model);
    if (!gateway.has_model(p.judge_model)) {
      throw GradeConfigError(where + "unknown judge model " + p.judge_model);
    }
  }
}

TestCaseGrade grade_case(Gateway& gateway, const Question& q, const AreaAnswers& answers,
                         const TestCase& tc, const Plan& p) {
  TestCaseGrade g;
  g.test_case_id = tc.id;
  g.visibility = tc.visibility;
  g.trials = p.trials;
  g.threshold = p.threshold;

  const PromptBundle prompt = assemble_task_prompt(q, answers, tc, true);
  TrialConfig cfg;
  cfg.model_id = p.model;
  cfg.k = p.trials;
  cfg.threshold = p.threshold;
  cfg.temperature = p.temperature;
  cfg.component = Component::grader;

  TrialSet trials;
  try {
    trials = run_trials(gateway, prompt, cfg);
  } catch (const AllTrialsFailed&) {
    g.failed_trials = p.trials;
    g.flag = "all_trials_failed";
    return g;
  }
  JudgeConfig judge;
  judge.model_id = p.judge_model;
  judge.votes = p.judge_votes;
  judge.threshold = p.judge_threshold;
  judge.component = Component::grader;
  verify_trials(gateway, trials, *tc.sample_output, judge);

  const ConsistencyDecision d = decide(*trials.verdicts, p.threshold);
  g.yes_count = d.yes_count;
  g.ambiguous_count = d.ambiguous_count;
  g.failed_trials = trials.failed_count();
  g.passed = d.passed;
  return g;
}

std::optional<std::string> blank_area(const Question& q, const AreaAnswers* answers) {
  if (!answers) return "no answer submitted";
  for (const auto& area : q.answer_areas) {
    auto it = answers->find(area.id);
    if (it == answers->end() || it->second.find_first_not_of(" \t\r\n") == std::string::npos) {
      return "empty answer area: " + area.id;
    }
  }
  return std::nullopt;
}

StudentGrade grade_student(const Assignment& a, const AnswerFile& f, Gateway& gateway,
                           const GradeOptions& opt, bool& exhausted) {
  StudentGrade sg;
  sg.student_id = f.student_id;
  sg.submitted_at = f.submitted_at;
  for (const auto& q : a.questions) {
    if (q.demo) continue;
    const Plan p = plan_for(a, q, opt);
    QuestionGrade qg;
    qg.question_id = q.id;
    qg.model = p.model;
    qg.judge_model = p.judge_model;

    auto it = f.answers.find(q.id);
    const AreaAnswers* answers = it == f.answers.end() ? nullptr : &it->second;
    if (auto reason = blank_area(q, answers)) {
      qg.reason = std::move(reason);
    } else {
      int passed_cases = 0;
      for (const TestCase* tc : p.cases) {
        TestCaseGrade g = grade_case(gateway, q, *answers, *tc, p);
        if (g.flag) exhausted = true;
        if (g.passed) ++passed_cases;
        qg.test_cases.push_back(std::move(g));
      }
      const int total = static_cast<int>(p.cases.size());
      const int needed = std::min(total, opt.min_cases.value_or(total));
      qg.passed = passed_cases >= needed;
      if (!qg.passed) {
        qg.reason = std::to_string(passed_cases) + " of " + std::to_string(total) +
                    " test cases passed";
      }
    }
    ++sg.gradable_count;
    if (qg.passed) ++sg.passed_count;
    sg.questions.push_back(std::move(qg));
  }
  sg.score = sg.gradable_count == 0
                 ? 0.0
                 : static_cast<double>(sg.passed_count) / static_cast<double>(sg.gradable_count);
  return sg;
}

}  // namespace

const QuestionGrade* StudentGrade::find(std::string_view question_id) const {
  auto it = std::find_if(questions.begin(), questions.end(),
                         [&](const QuestionGrade& q) { return q.question_id == question_id; });
  return it == questions.end() ? nullptr : &*it;
}

const StudentGrade* GradeReport::find(std::string_view student_id) const {
  auto it = std::find_if(students.begin(), students.end(),
                         [&](const StudentGrade& s) { return s.student_id == student_id; });
  return it == students.end() ? nullptr : &*it;
}

GradeReport grade(const Assignment& assignment, const std::vector<AnswerFile>& answer_files,
                  Gateway& gateway, const GradeOptions& options) {
  validate(assignment, options, gateway);

  std::vector<const AnswerFile*> files;
  std::set<std::string> seen;
  for (const auto& f : answer_files) {
    try {
      check_answer_file(assignment, f);
    } catch (const AnswerFileError& e) {
      throw AnswerFileInvalid(f.student_id, e.what());
    }
    if (!seen.insert(f.student_id).second) {
      throw AnswerFileInvalid(f.student_id, "more than one answer file");
    }
    files.push_back(&f);
  }
  std::sort(files.begin(), files.end(),
            [](const AnswerFile* l, const AnswerFile* r) { return l->student_id < r->student_id; });

  GradeReport report;
  report.assignment_id = assignment.assignment_id;
  report.options = options;
  for (const auto& q : assignment.questions) {
    if (q.demo) continue;
    const bool trials_differ = options.trials && *options.trials != effective_trials(assignment, q);
    const bool threshold_differs =
        options.threshold && *options.threshold != effective_threshold(assignment, q);
    if (trials_differ || threshold_differs) report.divergent_questions.push_back(q.id);
  }

  const std::size_t ledger_start = gateway.ledger().size();
  report.students.resize(files.size());
  std::vector<char> exhausted(files.size(), 0);
  auto work = [&](std::size_t i) {
    bool ex = false;
    report.students[i] = grade_student(assignment, *files[i], gateway, options, ex);
    exhausted[i] = ex ? 1 : 0;
  };

  if (options.parallel <= 1 || files.size() <= 1) {
    for (std::size_t i = 0; i < files.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.parallel), files.size());
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  auto entries = gateway.ledger().entries();
  report.costs.assign(entries.begin() + static_cast<long>(ledger_start), entries.end());
  report.provider_exhausted =
      std::any_of(exhausted.begin(), exhausted.end(), [](char c) { return c != 0; });
  return report;
}

namespace {

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json grade_report_to_json(const GradeReport& r) {
  const GradeOptions& o = r.options;
  json meta = {
      {"correctness_unit", "student_question"},
      {"verification_component", "grader"},
      {"question_pass_rule", o.min_cases ? "min_cases" : "all_cases"},
      {"min_cases", opt_int(o.min_cases)},
      {"include_student_cases", o.include_student_cases},
      {"judge_model_override", o.judge_model ? json(*o.judge_model) : json(nullptr)},
      {"overrides",
       {{"trials", opt_int(o.trials)},
        {"threshold", opt_int(o.threshold)},
        {"judge_trials", opt_int(o.judge_trials)},
        {"judge_threshold", opt_int(o.judge_threshold)}}},
      {"divergent_questions", r.divergent_questions},
  };

  json students = json::array();
  int graded = 0;
  int passed = 0;
  int flagged = 0;
  double score_sum = 0.0;
  for (const auto& s : r.students) {
    json qs = json::array();
    for (const auto& q : s.questions) {
      json cases = json::array();
      for (const auto& c : q.test_cases) {
        json jc = {{"test_case_id", c.test_case_id},
                   {"visibility", to_string(c.visibility)},
                   {"trials", c.trials},
                   {"threshold", c.threshold},
                   {"yes_count", c.yes_count},
                   {"ambiguous_count", c.ambiguous_count},
                   {"failed_trials", c.failed_trials},
                   {"passed", c.passed}};
        if (c.flag) {
          jc["flag"] = *c.flag;
          ++flagged;
        }
        cases.push_back(std::move(jc));
      }
      json jq = {{"question_id", q.question_id},
                 {"model", q.model},
                 {"judge_model", q.judge_model},
                 {"passed", q.passed},
                 {"test_cases", std::move(cases)}};
      if (q.reason) jq["reason"] = *q.reason;
      qs.push_back(std::move(jq));
    }
    graded += s.gradable_count;
    passed += s.passed_count;
    score_sum += s.score;
    students.push_back({{"student_id", s.student_id},
                        {"submitted_at", s.submitted_at},
                        {"questions", std::move(qs)},
                        {"passed_count", s.passed_count},
                        {"gradable_count", s.gradable_count},
                        {"score", s.score}});
  }

  return {
      {"assignment_id", r.assignment_id},
      {"metadata", std::move(meta)},
      {"students", std::move(students)},
      {"totals",
       {{"students", r.students.size()},
        {"questions_graded", graded},
        {"questions_passed", passed},
        {"mean_score", r.students.empty() ? 0.0 : score_sum / static_cast<double>(r.students.size())},
        {"flagged_test_cases", flagged}}},
      {"cost_summary", cost_summary_json(r.costs)},
      {"tool_versions",
       {{"socrates-grade", kToolVersion},
        {"assignment_schema", kAssignmentSchemaVersion},
        {"answer_file_schema", kAnswerFileSchemaVersion}}},
  };
}

ManualLabels parse_manual_labels(const json& j) {
  if (!j.is_object()) throw LabelError("labels must be an object of student -> question -> label");
  ManualLabels out;
  for (const auto& [student, qs] : j.items()) {
    if (!qs.is_object()) throw LabelError("labels for " + student + " must be an object");
    for (const auto& [question, label] : qs.items()) {
      const std::string v = label.is_string() ? label.get<std::string>() : std::string{};
      if (v == "correct") {
        out[{student, question}] = ManualLabel::correct;
      } else if (v == "incorrect") {
        out[{student, question}] = ManualLabel::incorrect;
      } else {
        throw LabelError("label for " + student + "/" + question +
                         " must be \"correct\" or \"incorrect\"");
      }
    }
  }
  return out;
}

GraderAccuracy grader_accuracy(const GradeReport& report, const ManualLabels& labels) {
  if (labels.empty()) throw EmptyLabels();
  GraderAccuracy acc;
  for (const auto& [key, label] : labels) {
    const StudentGrade* s = report.find(key.first);
    const QuestionGrade* q = s ? s->find(key.second) : nullptr;
    if (!q) throw LabelError("label for ungraded cell " + key.first + "/" + key.second);
    const bool correct = label == ManualLabel::correct;
    if (q->passed && correct) {
      ++acc.tp;
    } else if (!q->passed && !correct) {
      ++acc.tn;
    } else if (q->passed) {
      ++acc.fp;
    } else {
      ++acc.fn;
    }
  }
  acc.correctness = static_cast<double>(acc.tp + acc.tn) /
                    static_cast<double>(acc.tp + acc.tn + acc.fp + acc.fn);
  return acc;
}

json grader_accuracy_to_json(const GraderAccuracy& a) {
  return {{"tp", a.tp},
          {"tn", a.tn},
          {"fp", a.fp},
          {"fn", a.fn},
          {"correctness", a.correctness},
          {"unit", "student_question"}};
}

}  // namespace socrates
