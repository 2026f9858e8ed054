#pragma once

// Student-facing playground: passcode sessions, sanitized assignment
// delivery, live trial runs with a per-student quota, and answer submission.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "socrates/answer_file.hpp"
#include "socrates/assignment.hpp"
#include "socrates/consistency.hpp"
#include "socrates/gateway.hpp"

namespace httplib {
class Server;
}

namespace socrates {

struct PlaygroundOptions {
  int run_quota = 100;  // per student per assignment
  std::chrono::milliseconds session_idle_timeout{std::chrono::hours(12)};
  // Judge for verifiable student test cases; defaults to the solving model.
  std::optional<std::string> judge_model;
  std::function<std::int64_t()> now_ms;  // default: system clock
};

struct Session {
  std::string token;
  std::string student_id;
  std::string assignment_id;
  std::int64_t created_at_ms = 0;
  std::int64_t last_seen_ms = 0;
  int runs_used = 0;
};

struct RunResult {
  std::vector<std::string> trial_outputs;
  std::optional<ConsistencyDecision> decision;
  // Only set when the assignment opts in with show_trials.
  std::optional<int> threshold;
  int runs_used = 0;
  int runs_remaining = 0;
};

class InvalidPasscode : public std::runtime_error {
 public:
  InvalidPasscode() : std::runtime_error("invalid passcode") {}
};

class SessionExpired : public std::runtime_error {
 public:
  SessionExpired() : std::runtime_error("session expired or unknown") {}
};

class QuotaExceeded : public std::runtime_error {
 public:
  QuotaExceeded() : std::runtime_error("run quota exhausted") {}
};

class UnknownQuestion : public std::runtime_error {
 public:
  explicit UnknownQuestion(const std::string& id) : std::runtime_error("unknown question: " + id) {}
};

class UnknownTestCase : public std::runtime_error {
 public:
  explicit UnknownTestCase(const std::string& id)
      : std::runtime_error("unknown test case: " + id) {}
};

class HiddenTestCase : public std::runtime_error {
 public:
  explicit HiddenTestCase(const std::string& id)
      : std::runtime_error("test case is not available in the playground: " + id) {}
};

class ValidationFailed : public std::runtime_error {
 public:
  explicit ValidationFailed(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Compares every byte of both strings regardless of where they differ.
bool constant_time_equals(std::string_view a, std::string_view b);

class Playground {
 public:
  Playground(Assignment assignment, Gateway& gateway, AnswerStore& store,
             PlaygroundOptions options = {});

  // Checks the passcode against every student before answering.
  Session login(std::string_view passcode);
  StudentView get_assignment(const std::string& token);
  RunResult run_question(const std::string& token, const std::string& question_id,
                         const AreaAnswers& answers, const std::string& test_case_id);
  SubmitReceipt submit(const std::string& token, const SubmittedAnswers& answers);

  int runs_used(const std::string& student_id) const;
  const Assignment& assignment() const { return assignment_; }
  const PlaygroundOptions& options() const { return options_; }

 private:
  Session touch(const std::string& token);
  void reserve_run(const std::string& student_id);

  const Assignment assignment_;
  Gateway& gateway_;
  AnswerStore& store_;
  PlaygroundOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, int> runs_used_;
};

json run_result_to_json(const RunResult& r);

// HTTP+JSON binding:
//   POST /api/session                {passcode}              -> {token, student_id}
//   GET  /api/assignment             Bearer token            -> StudentView
//   POST /api/questions/{id}/run     {answers, test_case_id} -> RunResult
//   POST /api/submit                 {answers}               -> {receipt_hash, submitted_at}
// Static client assets, when a directory is given, are mounted under "/".
class PlaygroundServer {
 public:
  explicit PlaygroundServer(Playground& playground,
                            std::optional<std::string> static_dir = std::nullopt);
  ~PlaygroundServer();

  PlaygroundServer(const PlaygroundServer&) = delete;
  PlaygroundServer& operator=(const PlaygroundServer&) = delete;

  // Returns the bound port, or -1.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  Playground& playground_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace socrates
