#include "socrates/playground.hpp"

#include <algorithm>

namespace socrates {

namespace {

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

}  // namespace

ValidationFailed::ValidationFailed(std::vector<std::string> problems)
    : std::runtime_error("submission incomplete: " + join(problems)),
      problems_(std::move(problems)) {}

bool constant_time_equals(std::string_view a, std::string_view b) {
  const std::size_t n = std::max(a.size(), b.size());
  unsigned char diff = a.size() == b.size() ? 0 : 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ca = static_cast<unsigned char>(i < a.size() ? a[i] : 0);
    const auto cb = static_cast<unsigned char>(i < b.size() ? b[i] : 0);
    diff |= static_cast<unsigned char>(ca ^ cb);
  }
  return diff == 0;
}

Playground::Playground(Assignment assignment, Gateway& gateway, AnswerStore& store,
                       PlaygroundOptions options)
    : assignment_(std::move(assignment)),
      gateway_(gateway),
      store_(store),
      options_(std::move(options)) {
  if (!options_.now_ms) options_.now_ms = system_now_ms;
  if (options_.run_quota < 0) throw std::invalid_argument("run quota must be >= 0");
}

Session Playground::login(std::string_view passcode) {
  const std::string* match = nullptr;
  int matches = 0;
  for (const auto& [student, code] : assignment_.passcodes) {
    const bool eq = constant_time_equals(code, passcode);
    matches += eq ? 1 : 0;
    if (eq) match = &student;
  }
  if (matches != 1) throw InvalidPasscode();

  Session s;
  s.token = random_hex(16);
  s.student_id = *match;
  s.assignment_id = assignment_.assignment_id;
  s.created_at_ms = options_.now_ms();
  s.last_seen_ms = s.created_at_ms;
  std::lock_guard lock(mu_);
  s.runs_used = runs_used_[s.student_id];
  sessions_.emplace(s.token, s);
  return s;
}

Session Playground::touch(const std::string& token) {
  const auto now = options_.now_ms();
  std::lock_guard lock(mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) throw SessionExpired();
  if (now - it->second.last_seen_ms > options_.session_idle_timeout.count()) {
    sessions_.erase(it);
    throw SessionExpired();
  }
  it->second.last_seen_ms = now;
  it->second.runs_used = runs_used_[it->second.student_id];
  return it->second;
}

void Playground::reserve_run(const std::string& student_id) {
  std::lock_guard lock(mu_);
  int& used = runs_used_[student_id];
  if (used >= options_.run_quota) throw QuotaExceeded();
  ++used;
}

int Playground::runs_used(const std::string& student_id) const {
  std::lock_guard lock(mu_);
  auto it = runs_used_.find(student_id);
  return it == runs_used_.end() ? 0 : it->second;
}

StudentView Playground::get_assignment(const std::string& token) {
  const Session s = touch(token);
  return sanitize_for_student(assignment_, s.student_id);
}

RunResult Playground::run_question(const std::string& token, const std::string& question_id,
                                   const AreaAnswers& answers, const std::string& test_case_id) {
  const Session s = touch(token);
  const Question* q = assignment_.find_question(question_id);
  if (!q) throw UnknownQuestion(question_id);
  const TestCase* tc = q->find_test_case(test_case_id);
  if (!tc) throw UnknownTestCase(test_case_id);
  if (tc->visibility != Visibility::student) throw HiddenTestCase(test_case_id);

  // Demo questions always run the instructor's sample answer.
  const AreaAnswers& used_answers = q->demo ? *q->sample_answer : answers;
  const PromptBundle prompt = assemble_task_prompt(*q, used_answers, *tc, false);
  if (!q->demo) reserve_run(s.student_id);

  TrialConfig cfg;
  cfg.model_id = effective_model(assignment_, *q);
  cfg.k = effective_trials(assignment_, *q);
  cfg.threshold = effective_threshold(assignment_, *q);
  cfg.temperature = effective_temperature(assignment_, *q);
  cfg.component = Component::playground;
  TrialSet trials = run_trials(gateway_, prompt, cfg);

  RunResult result;
  result.trial_outputs = trials.outputs();
  if (tc->sample_output && !tc->sample_output->empty()) {
    JudgeConfig judge;
    judge.model_id = options_.judge_model.value_or(cfg.model_id);
    judge.votes = cfg.k;
    judge.threshold = cfg.threshold;
    judge.component = Component::playground;
    verify_trials(gateway_, trials, *tc->sample_output, judge);
    result.decision = decide(*trials.verdicts, cfg.threshold);
    if (assignment_.show_trials) result.threshold = cfg.threshold;
  }
  result.runs_used = runs_used(s.student_id);
  result.runs_remaining = std::max(0, options_.run_quota - result.runs_used);
  return result;
}

SubmitReceipt Playground::submit(const std::string& token, const SubmittedAnswers& answers) {
  const Session s = touch(token);
  auto problems = submission_problems(assignment_, answers);
  if (!problems.empty()) throw ValidationFailed(std::move(problems));

  AnswerFile f;
  f.assignment_id = assignment_.assignment_id;
  f.student_id = s.student_id;
  f.submitted_at = format_utc_millis(options_.now_ms());
  f.answers = answers;
  return store_.store(f);
}

json run_result_to_json(const RunResult& r) {
  json j = {{"trial_outputs", r.trial_outputs},
            {"runs_used", r.runs_used},
            {"runs_remaining", r.runs_remaining}};
  if (r.decision) {
    j["decision"] = {{"yes_count", r.decision->yes_count},
                     {"passed", r.decision->passed},
                     {"ambiguous_count", r.decision->ambiguous_count}};
    if (r.threshold) j["decision"]["threshold"] = *r.threshold;
  } else {
    j["decision"] = nullptr;
  }
  return j;
}

}  // namespace socrates
