#include <httplib.h>

#include "socrates/playground.hpp"

namespace socrates {

namespace {

constexpr std::size_t kMaxBodyBytes = 1 << 20;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code,
                std::string_view message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

std::string bearer_token(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
    throw SessionExpired();
  }
  return header.substr(prefix.size());
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);  // parse_error handled by the caller
  if (!body.is_object()) throw AnswerFileError("request body must be a JSON object");
  return body;
}

// Maps domain errors onto status codes. Messages of provider failures are not
// forwarded: they can carry upstream response bodies.
template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const InvalidPasscode&) {
    send_error(res, 401, "invalid_passcode", "invalid passcode");
  } catch (const SessionExpired&) {
    send_error(res, 401, "session_expired", "session expired or unknown; log in again");
  } catch (const QuotaExceeded&) {
    send_error(res, 429, "quota_exceeded", "run quota exhausted");
  } catch (const UnknownQuestion& e) {
    send_error(res, 404, "unknown_question", e.what());
  } catch (const UnknownTestCase& e) {
    send_error(res, 404, "unknown_test_case", e.what());
  } catch (const HiddenTestCase& e) {
    send_error(res, 403, "hidden_test_case", e.what());
  } catch (const MissingAnswerArea& e) {
    send_json(res, 422,
              {{"error", "missing_answer_area"}, {"message", e.what()}, {"area_id", e.area_id()}});
  } catch (const ValidationFailed& e) {
    send_json(res, 422,
              {{"error", "validation_failed"}, {"message", "submission incomplete"},
               {"problems", e.problems()}});
  } catch (const AnswerFileError& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const json::exception&) {
    send_error(res, 400, "bad_request", "request body is not the expected JSON");
  } catch (const AllTrialsFailed&) {
    send_error(res, 502, "provider_unavailable", "the language model did not respond; try again");
  } catch (const ProviderUnreachable&) {
    send_error(res, 502, "provider_unavailable", "the language model did not respond; try again");
  } catch (const ProviderRejected&) {
    send_error(res, 502, "provider_rejected", "the language model rejected the request");
  } catch (const std::exception&) {
    send_error(res, 500, "internal_error", "internal error");
  }
}

}  // namespace

PlaygroundServer::PlaygroundServer(Playground& playground, std::optional<std::string> static_dir)
    : playground_(playground), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.set_payload_max_length(kMaxBodyBytes);

  srv.Post("/api/session", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const Session s = playground_.login(body.at("passcode").get<std::string>());
      send_json(res, 200, {{"token", s.token}, {"student_id", s.student_id}});
    });
  });

  srv.Get("/api/assignment", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const StudentView v = playground_.get_assignment(bearer_token(req));
      send_json(res, 200, student_view_to_json(v));
    });
  });

  srv.Post(R"(/api/questions/([A-Za-z0-9._-]+)/run)",
           [this](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const std::string token = bearer_token(req);
               const json body = parse_body(req);
               AreaAnswers answers;
               if (body.contains("answers") && !body.at("answers").is_null()) {
                 answers = body.at("answers").get<AreaAnswers>();
               }
               const RunResult r = playground_.run_question(
                   token, req.matches[1].str(), answers, body.at("test_case_id").get<std::string>());
               send_json(res, 200, run_result_to_json(r));
             });
           });

  srv.Post("/api/submit", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = bearer_token(req);
      const json body = parse_body(req);
      const SubmitReceipt r = playground_.submit(token, answers_from_json(body.at("answers")));
      send_json(res, 200, {{"receipt_hash", r.receipt_hash}, {"submitted_at", r.submitted_at}});
    });
  });

  if (static_dir) srv.set_mount_point("/", *static_dir);
}

PlaygroundServer::~PlaygroundServer() { stop(); }

int PlaygroundServer::bind_to_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool PlaygroundServer::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool PlaygroundServer::listen_after_bind() { return server_->listen_after_bind(); }

void PlaygroundServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void PlaygroundServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace socrates
