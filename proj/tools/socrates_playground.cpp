// socrates-playground: serve the student playground over HTTP.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

#include "socrates/answer_file.hpp"
#include "socrates/assignment.hpp"
#include "socrates/gateway.hpp"
#include "socrates/playground.hpp"

namespace fs = std::filesystem;
using namespace socrates;

namespace {

PlaygroundServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Student playground for teaching an LLM"};
  app.name("socrates-playground");

  std::string assignment_path;
  std::string data_dir;
  std::string bind = "127.0.0.1:8080";
  std::string providers_path;
  std::string static_dir;
  std::string judge_model;
  int quota = 100;
  int parallelism = 5;

  app.add_option("--assignment", assignment_path, "Assignment JSON file")->required();
  app.add_option("--data-dir", data_dir, "Answer files and archives")->required();
  app.add_option("--bind", bind, "Listen address host:port")->default_val("127.0.0.1:8080");
  app.add_option("--providers", providers_path, "Provider config JSON")->required();
  app.add_option("--quota", quota, "Runs per student per assignment")->default_val(100);
  app.add_option("--parallel", parallelism, "Concurrent LLM requests")->default_val(5);
  app.add_option("--judge-model", judge_model, "Judge for verifiable student test cases");
  app.add_option("--static-dir", static_dir, "Browser client assets served under /");

  CLI11_PARSE(app, argc, argv);

  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "socrates-playground: --bind must be host:port\n";
    return 2;
  }
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "socrates-playground: invalid port in --bind\n";
    return 2;
  }

  try {
    const Assignment assignment = parse_assignment(read_file(assignment_path));
    GatewayBuildOptions build;
    build.gateway.parallelism = parallelism;
    auto gateway = build_gateway(load_provider_config(providers_path),
                                 fs::absolute(providers_path).parent_path().string(), build);
    for (const auto& q : assignment.questions) {
      const std::string m = effective_model(assignment, q);
      if (!gateway->has_model(m)) {
        std::cerr << "socrates-playground: question " << q.id << " uses unknown model " << m
                  << "\n";
        return 2;
      }
    }

    AnswerStore store(data_dir);
    PlaygroundOptions opts;
    opts.run_quota = quota;
    if (!judge_model.empty()) opts.judge_model = judge_model;
    Playground playground(assignment, *gateway, store, opts);
    PlaygroundServer server(playground,
                            static_dir.empty() ? std::nullopt : std::optional(static_dir));
    if (!server.bind(host, port)) {
      std::cerr << "socrates-playground: cannot bind " << bind << "\n";
      return 1;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "socrates-playground: serving " << assignment.assignment_id << " on " << bind
              << "\n";
    server.listen_after_bind();
    g_server = nullptr;
    return 0;
  } catch (const SchemaViolation& e) {
    std::cerr << "socrates-playground: assignment " << e.what() << "\n";
    return 2;
  } catch (const MalformedJson& e) {
    std::cerr << "socrates-playground: malformed assignment: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "socrates-playground: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "socrates-playground: " << e.what() << "\n";
    return 1;
  }
}
