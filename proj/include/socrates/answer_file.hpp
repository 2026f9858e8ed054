#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/assignment.hpp"

namespace socrates {

inline constexpr int kAnswerFileSchemaVersion = 1;

// question_id -> area_id -> text
using SubmittedAnswers = std::map<std::string, AreaAnswers>;

struct AnswerFile {
  int schema_version = kAnswerFileSchemaVersion;
  std::string assignment_id;
  std::string student_id;
  std::string submitted_at;
  SubmittedAnswers answers;

  bool operator==(const AnswerFile&) const = default;
};

class AnswerFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json answer_file_to_json(const AnswerFile& f);
AnswerFile answer_file_from_json(const json& j);
AnswerFile parse_answer_file(std::string_view bytes);
std::string serialize_answer_file(const AnswerFile& f);

SubmittedAnswers answers_from_json(const json& j);

// Structural check against the assignment: ids match, every question and area
// exists. Throws AnswerFileError. Empty areas are allowed here.
void check_answer_file(const Assignment& a, const AnswerFile& f);

// Everything that blocks a submission, as "question/area" entries for empty
// or missing areas of non-demo questions and "unknown question: q" /
// "unknown area: q/a" entries for foreign ids. Empty when the answers are
// submittable.
std::vector<std::string> submission_problems(const Assignment& a, const SubmittedAnswers& answers);

// Replaces `path` with `content` via write-to-temp + fsync + rename.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

struct SubmitReceipt {
  std::filesystem::path path;
  std::string receipt_hash;  // sha256 of the canonical JSON written
  std::string submitted_at;
  // Where the previous submission was archived, if there was one.
  std::optional<std::filesystem::path> archived_to;
};

// <data_dir>/<assignment_id>/<student_id>.json, prior versions archived as
// <student_id>.1.json, <student_id>.2.json, ... Writes for one student are
// serialized.
class AnswerStore {
 public:
  explicit AnswerStore(std::filesystem::path data_dir);

  SubmitReceipt store(const AnswerFile& f);
  std::filesystem::path path_for(std::string_view assignment_id,
                                 std::string_view student_id) const;
  std::vector<std::filesystem::path> archives_for(std::string_view assignment_id,
                                                  std::string_view student_id) const;

 private:
  std::mutex& student_mutex(const std::string& key);

  std::filesystem::path data_dir_;
  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> student_mu_;
};

// Every <student>.json directly under `dir` (archives are skipped), ordered by
// file name.
std::vector<AnswerFile> load_answer_dir(const std::filesystem::path& dir);

}  // namespace socrates
