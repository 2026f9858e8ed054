#pragma once

// Prompt assembly for solving and judging, plus verdict parsing.
//
// A task prompt's user text is built from labeled sections in a fixed order:
//   description, answer areas (declaration order), additional prompt,
//   hidden prompt (grader/calibrator only), task input.
// Sections are separated by one blank line. Every byte of the user text is
// owned by exactly one slot, so concatenating slot texts reproduces it.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/assignment.hpp"
#include "socrates/gateway.hpp"

namespace socrates {

enum class PromptKind { task, verification };

enum class SlotSource {
  description,
  answer_area,
  additional_prompt,
  hidden_prompt,
  test_case,
  candidate_output,
  sample_output,
};

std::string_view to_string(SlotSource s);

struct PromptSlot {
  SlotSource source;
  std::string ref;   // area id for answer_area, test case id for test_case
  std::string text;  // exact bytes contributed to user_text

  // "answer_area(area1)", "test_case(t1)", "description", ...
  std::string name() const;
  bool operator==(const PromptSlot&) const = default;
};

struct PromptBundle {
  PromptKind kind = PromptKind::task;
  std::string system_text;
  std::string user_text;
  std::vector<PromptSlot> slots;

  std::vector<ChatMessage> messages() const;
  // user_text with the given source's slots removed.
  std::string user_text_without(SlotSource source) const;
  bool operator==(const PromptBundle&) const = default;
};

inline constexpr std::string_view kAnswerAreaHeaderPrefix = "### Instructor guidance from the student (";
inline constexpr std::string_view kTaskInputHeader = "### Task input";

class MissingAnswerArea : public std::runtime_error {
 public:
  explicit MissingAnswerArea(std::string area_id)
      : std::runtime_error("missing answer for area " + area_id), area_id_(std::move(area_id)) {}
  const std::string& area_id() const noexcept { return area_id_; }

 private:
  std::string area_id_;
};

class ForeignTestCase : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySample : public std::runtime_error {
 public:
  EmptySample() : std::runtime_error("verification needs a non-empty sample output") {}
};

// The playground passes hidden_included = false; grader and calibrator true.
PromptBundle assemble_task_prompt(const Question& q, const AreaAnswers& answers,
                                  const TestCase& test_case, bool hidden_included);

PromptBundle assemble_verification_prompt(std::string_view candidate, std::string_view sample);

enum class VerdictValue { yes, no };

struct Verdict {
  VerdictValue value = VerdictValue::no;
  bool ambiguous = true;
  std::string raw_text;

  bool is_yes() const { return value == VerdictValue::yes; }
  bool operator==(const Verdict&) const = default;
};

// The first run of ASCII letters decides: "yes"/"no" case-insensitively,
// anything else is an ambiguous No.
Verdict parse_verdict(std::string_view raw);

json prompt_bundle_to_json(const PromptBundle& b);

}  // namespace socrates
