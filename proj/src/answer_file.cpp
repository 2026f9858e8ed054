#include "socrates/answer_file.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace socrates {

namespace fs = std::filesystem;

json answer_file_to_json(const AnswerFile& f) {
  return {{"schema_version", f.schema_version},
          {"assignment_id", f.assignment_id},
          {"student_id", f.student_id},
          {"submitted_at", f.submitted_at},
          {"answers", f.answers}};
}

SubmittedAnswers answers_from_json(const json& j) {
  if (!j.is_object()) throw AnswerFileError("answers must be an object");
  SubmittedAnswers out;
  for (const auto& [qid, areas] : j.items()) {
    if (!areas.is_object()) throw AnswerFileError("answers/" + qid + " must be an object");
    AreaAnswers aa;
    for (const auto& [aid, text] : areas.items()) {
      if (!text.is_string()) {
        throw AnswerFileError("answers/" + qid + "/" + aid + " must be a string");
      }
      aa.emplace(aid, text.get<std::string>());
    }
    out.emplace(qid, std::move(aa));
  }
  return out;
}

AnswerFile answer_file_from_json(const json& j) {
  if (!j.is_object()) throw AnswerFileError("answer file must be a JSON object");
  AnswerFile f;
  try {
    f.schema_version = j.at("schema_version").get<int>();
    f.assignment_id = j.at("assignment_id").get<std::string>();
    f.student_id = j.at("student_id").get<std::string>();
    f.submitted_at = j.at("submitted_at").get<std::string>();
  } catch (const json::exception& e) {
    throw AnswerFileError(std::string("answer file: ") + e.what());
  }
  if (f.schema_version != kAnswerFileSchemaVersion) {
    throw AnswerFileError("unsupported answer file schema_version");
  }
  if (!j.contains("answers")) throw AnswerFileError("answer file: missing answers");
  f.answers = answers_from_json(j.at("answers"));
  return f;
}

AnswerFile parse_answer_file(std::string_view bytes) {
  try {
    return answer_file_from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::parse_error& e) {
    throw AnswerFileError(std::string("malformed answer file: ") + e.what());
  }
}

std::string serialize_answer_file(const AnswerFile& f) {
  return canonical_dump(answer_file_to_json(f));
}

void check_answer_file(const Assignment& a, const AnswerFile& f) {
  if (f.assignment_id != a.assignment_id) {
    throw AnswerFileError("answer file is for assignment " + f.assignment_id);
  }
  if (!a.passcodes.contains(f.student_id)) {
    throw AnswerFileError("student " + f.student_id + " is not enrolled");
  }
  for (const auto& [qid, areas] : f.answers) {
    const Question* q = a.find_question(qid);
    if (!q) throw AnswerFileError("unknown question: " + qid);
    for (const auto& [aid, _] : areas) {
      if (!q->find_area(aid)) throw AnswerFileError("unknown area: " + qid + "/" + aid);
    }
  }
}

std::vector<std::string> submission_problems(const Assignment& a,
                                             const SubmittedAnswers& answers) {
  std::vector<std::string> problems;
  for (const auto& [qid, areas] : answers) {
    const Question* q = a.find_question(qid);
    if (!q) {
      problems.push_back("unknown question: " + qid);
      continue;
    }
    for (const auto& [aid, _] : areas) {
      if (!q->find_area(aid)) problems.push_back("unknown area: " + qid + "/" + aid);
    }
  }
  for (const auto& q : a.questions) {
    if (q.demo) continue;
    auto qit = answers.find(q.id);
    for (const auto& area : q.answer_areas) {
      bool filled = false;
      if (qit != answers.end()) {
        auto ait = qit->second.find(area.id);
        filled = ait != qit->second.end() &&
                 ait->second.find_first_not_of(" \t\r\n") != std::string::npos;
      }
      if (!filled) problems.push_back(q.id + "/" + area.id);
    }
  }
  return problems;
}

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

void atomic_write_file(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp." + random_hex(8);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + tmp.string());
  std::size_t off = 0;
  while (off < content.size()) {
    const ssize_t n = ::write(fd, content.data() + off, content.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      ::unlink(tmp.c_str());
      throw_errno("write " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw_errno("fsync " + tmp.string());
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw_errno("rename " + tmp.string());
  }
  fsync_dir(path.parent_path());
}

AnswerStore::AnswerStore(fs::path data_dir) : data_dir_(std::move(data_dir)) {}

fs::path AnswerStore::path_for(std::string_view assignment_id, std::string_view student_id) const {
  return data_dir_ / std::string(assignment_id) / (std::string(student_id) + ".json");
}

std::vector<fs::path> AnswerStore::archives_for(std::string_view assignment_id,
                                                std::string_view student_id) const {
  std::vector<fs::path> out;
  const fs::path dir = data_dir_ / std::string(assignment_id);
  for (int n = 1;; ++n) {
    fs::path p = dir / (std::string(student_id) + "." + std::to_string(n) + ".json");
    if (!fs::exists(p)) break;
    out.push_back(std::move(p));
  }
  return out;
}

std::mutex& AnswerStore::student_mutex(const std::string& key) {
  std::lock_guard lock(map_mu_);
  auto& slot = student_mu_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

SubmitReceipt AnswerStore::store(const AnswerFile& f) {
  if (!is_safe_identifier(f.assignment_id) || !is_safe_identifier(f.student_id)) {
    throw AnswerFileError("unsafe identifier in answer file");
  }
  std::lock_guard lock(student_mutex(f.assignment_id + "/" + f.student_id));
  const fs::path dir = data_dir_ / f.assignment_id;
  fs::create_directories(dir);
  const fs::path target = path_for(f.assignment_id, f.student_id);

  SubmitReceipt receipt;
  if (fs::exists(target)) {
    int n = 1;
    fs::path archive;
    do {
      archive = dir / (f.student_id + "." + std::to_string(n++) + ".json");
    } while (fs::exists(archive));
    // Copy rather than move so the current file stays in place until the
    // atomic replace below.
    fs::copy_file(target, archive);
    receipt.archived_to = archive;
  }
  const std::string content = serialize_answer_file(f);
  atomic_write_file(target, content);
  receipt.path = target;
  receipt.receipt_hash = sha256_hex(content);
  receipt.submitted_at = f.submitted_at;
  return receipt;
}

std::vector<AnswerFile> load_answer_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw AnswerFileError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ".json") continue;
    // "<student>.json" only; "<student>.<n>.json" archives are skipped.
    const std::string stem = p.stem().string();
    const auto dot = stem.rfind('.');
    if (dot != std::string::npos &&
        std::all_of(stem.begin() + static_cast<long>(dot) + 1, stem.end(),
                    [](char c) { return c >= '0' && c <= '9'; }) &&
        dot + 1 < stem.size()) {
      continue;
    }
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<AnswerFile> out;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      out.push_back(parse_answer_file(ss.str()));
    } catch (const AnswerFileError& e) {
      throw AnswerFileError(p.filename().string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace socrates
