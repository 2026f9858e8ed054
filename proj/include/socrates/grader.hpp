#pragma once

// Offline adjudication of answer files.
//
// For each student and each non-demo question the grader rebuilds the
// playground prompt with the hidden prompt included, runs K solving trials per
// grading test case, asks the judge to vote on every trial output against the
// sample output, and applies the threshold. A question passes when all of its
// grading test cases pass (or at least --min-cases of them).

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "socrates/answer_file.hpp"
#include "socrates/assignment.hpp"
#include "socrates/gateway.hpp"

namespace socrates {

struct GradeOptions {
  std::optional<std::string> judge_model;
  std::optional<int> trials;
  std::optional<int> threshold;
  std::optional<int> judge_trials;
  std::optional<int> judge_threshold;
  bool include_student_cases = false;
  std::optional<int> min_cases;
  int parallel = 1;
};

struct TestCaseGrade {
  std::string test_case_id;
  Visibility visibility = Visibility::grader;
  int trials = 0;
  int threshold = 0;
  int yes_count = 0;
  int ambiguous_count = 0;
  int failed_trials = 0;
  bool passed = false;
  std::optional<std::string> flag;  // "all_trials_failed"

  bool operator==(const TestCaseGrade&) const = default;
};

struct QuestionGrade {
  std::string question_id;
  std::string model;
  std::string judge_model;
  bool passed = false;
  std::optional<std::string> reason;
  std::vector<TestCaseGrade> test_cases;

  bool operator==(const QuestionGrade&) const = default;
};

struct StudentGrade {
  std::string student_id;
  std::string submitted_at;
  std::vector<QuestionGrade> questions;
  int passed_count = 0;
  int gradable_count = 0;
  double score = 0.0;

  const QuestionGrade* find(std::string_view question_id) const;
  bool operator==(const StudentGrade&) const = default;
};

struct GradeReport {
  std::string assignment_id;
  GradeOptions options;
  std::vector<std::string> divergent_questions;
  std::vector<StudentGrade> students;  // sorted by student_id
  std::vector<CostEntry> costs;        // ledger entries made while grading
  bool provider_exhausted = false;     // some test case had every trial fail

  const StudentGrade* find(std::string_view student_id) const;
};

class GradeConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AnswerFileInvalid : public std::runtime_error {
 public:
  AnswerFileInvalid(std::string student, const std::string& reason)
      : std::runtime_error("answer file of " + student + " invalid: " + reason),
        student_(std::move(student)) {}
  const std::string& student() const noexcept { return student_; }

 private:
  std::string student_;
};

GradeReport grade(const Assignment& assignment, const std::vector<AnswerFile>& answer_files,
                  Gateway& gateway, const GradeOptions& options = {});

inline constexpr std::string_view kToolVersion = "1.0.0";

json grade_report_to_json(const GradeReport& report);

// ---------------------------------------------------------------------------

enum class ManualLabel { correct, incorrect };

// (student_id, question_id) -> label
using ManualLabels = std::map<std::pair<std::string, std::string>, ManualLabel>;

ManualLabels parse_manual_labels(const json& j);

struct GraderAccuracy {
  int tp = 0;
  int tn = 0;
  int fp = 0;
  int fn = 0;
  double correctness = 0.0;

  bool operator==(const GraderAccuracy&) const = default;
};

class EmptyLabels : public std::runtime_error {
 public:
  EmptyLabels() : std::runtime_error("no manual labels given") {}
};

class LabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Positive means "passed"/"correct". Computed per (student, question) over the
// labeled cells only.
GraderAccuracy grader_accuracy(const GradeReport& report, const ManualLabels& labels);

json grader_accuracy_to_json(const GraderAccuracy& a);

}  // namespace socrates
