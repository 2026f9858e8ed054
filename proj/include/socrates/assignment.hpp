#pragma once

// Instructor-authored assignment file: the contract shared by the playground,
// the grader and the calibrator.
//
// Field names are the wire format. Per-question overrides (model, trials,
// threshold, temperature) are kept distinct from the assignment defaults;
// use the effective_* helpers to resolve them.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/json_util.hpp"

namespace socrates {

inline constexpr int kAssignmentSchemaVersion = 1;
inline constexpr std::size_t kMinPasscodeLength = 8;

enum class AreaKind { freeform, steps };
enum class Visibility { student, grader };

std::string_view to_string(AreaKind k);
std::string_view to_string(Visibility v);

struct ModelDefaults {
  std::string model;
  int trials = 5;
  int threshold = 3;
  double temperature = 1.0;

  bool operator==(const ModelDefaults&) const = default;
};

struct AnswerArea {
  std::string id;
  std::string label;
  AreaKind kind = AreaKind::freeform;

  bool operator==(const AnswerArea&) const = default;
};

struct TestCase {
  std::string id;
  std::string input;
  Visibility visibility = Visibility::student;
  std::optional<std::string> sample_output;

  bool operator==(const TestCase&) const = default;
};

// area_id -> text
using AreaAnswers = std::map<std::string, std::string>;

struct Question {
  std::string id;
  std::string description;
  bool demo = false;
  std::optional<AreaAnswers> sample_answer;
  std::vector<AnswerArea> answer_areas;
  std::optional<std::string> model;
  std::optional<std::string> additional_prompt;
  std::optional<std::string> hidden_prompt;
  std::vector<TestCase> test_cases;
  std::optional<int> trials;
  std::optional<int> threshold;
  std::optional<double> temperature;

  const TestCase* find_test_case(std::string_view id) const;
  const AnswerArea* find_area(std::string_view id) const;

  bool operator==(const Question&) const = default;
};

struct Assignment {
  int schema_version = kAssignmentSchemaVersion;
  std::string assignment_id;
  std::string overview;
  // student_id -> passcode
  std::map<std::string, std::string> passcodes;
  ModelDefaults defaults;
  // Instructor opt-in to reveal trial counts and thresholds to students.
  bool show_trials = false;
  std::vector<Question> questions;

  const Question* find_question(std::string_view id) const;

  bool operator==(const Assignment&) const = default;
};

// Question field wins over the assignment default.
std::string effective_model(const Assignment& a, const Question& q);
int effective_trials(const Assignment& a, const Question& q);
int effective_threshold(const Assignment& a, const Question& q);
double effective_temperature(const Assignment& a, const Question& q);

class MalformedJson : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// First violation found, located by a JSON pointer into the document.
class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::string path, std::string reason);

  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

class UnknownStudent : public std::runtime_error {
 public:
  explicit UnknownStudent(const std::string& student_id)
      : std::runtime_error("unknown student: " + student_id) {}
};

Assignment parse_assignment(std::string_view bytes);
Assignment assignment_from_json(const json& j);
json assignment_to_json(const Assignment& a);
std::string serialize_assignment(const Assignment& a);

// Identifiers end up in file names (answer files), so they are restricted to
// [A-Za-z0-9._-], must not start with '.', and are at most 128 bytes.
bool is_safe_identifier(std::string_view id);

// ---------------------------------------------------------------------------
// Student-facing subset of an assignment.

struct StudentTestCase {
  std::string id;
  std::string input;
  // True when the instructor attached a sample output, i.e. a playground run
  // on this case also returns a consistency decision.
  bool verifiable = false;

  bool operator==(const StudentTestCase&) const = default;
};

struct StudentQuestion {
  std::string id;
  std::string description;
  bool demo = false;
  bool read_only = false;
  std::optional<AreaAnswers> sample_answer;
  std::vector<AnswerArea> answer_areas;
  std::vector<StudentTestCase> test_cases;
  std::optional<int> trials;
  std::optional<int> threshold;

  bool operator==(const StudentQuestion&) const = default;
};

struct StudentView {
  std::string assignment_id;
  std::string student_id;
  std::string overview;
  std::vector<StudentQuestion> questions;

  bool operator==(const StudentView&) const = default;
};

StudentView sanitize_for_student(const Assignment& a, std::string_view student_id);
json student_view_to_json(const StudentView& v);

}  // namespace socrates
