// socrates-calibrate: check that a question's knowledge gap holds for a model.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "socrates/answer_file.hpp"
#include "socrates/assignment.hpp"
#include "socrates/calibrator.hpp"
#include "socrates/gateway.hpp"
#include "socrates/prompt.hpp"

namespace fs = std::filesystem;
using namespace socrates;

int main(int argc, char** argv) {
  CLI::App app{"Measure baseline vs guided success rates for one question"};
  app.name("socrates-calibrate");

  std::string assignment_path;
  std::string question_id;
  std::string providers_path;
  std::string out_path;
  std::string model;
  std::string script_path;
  bool dry_run = false;
  CalibrationOptions opts;

  app.add_option("--assignment", assignment_path, "Assignment JSON file")->required();
  app.add_option("--question", question_id, "Question id")->required();
  app.add_option("--providers", providers_path, "Provider config JSON")->required();
  app.add_option("--trials", opts.trials_per_arm, "Solving trials per test case per arm")
      ->default_val(10);
  app.add_option("--baseline-max", opts.baseline_max, "Highest acceptable baseline success rate")
      ->default_val(0.2);
  app.add_option("--guided-min", opts.guided_min, "Lowest acceptable guided success rate")
      ->default_val(0.8);
  app.add_option("--model", model, "Solving model (default: the question's)");
  app.add_option("--out", out_path, "Verdict path")->required();
  app.add_flag("--dry-run", dry_run, "Serve every model from the scripted provider; no network");
  app.add_option("--script", script_path, "Script for --dry-run");

  CLI11_PARSE(app, argc, argv);
  if (!model.empty()) opts.model = model;

  try {
    const Assignment assignment = parse_assignment(read_file(assignment_path));
    const Question* q = assignment.find_question(question_id);
    if (!q) {
      std::cerr << "socrates-calibrate: unknown question " << question_id << "\n";
      return 2;
    }
    if (!q->sample_answer) {
      std::cerr << "socrates-calibrate: question " << question_id << " has no sample_answer\n";
      return 2;
    }

    GatewayBuildOptions build;
    build.dry_run = dry_run;
    if (!script_path.empty()) build.dry_run_script = fs::absolute(script_path).string();
    auto gateway = build_gateway(load_provider_config(providers_path),
                                 fs::absolute(providers_path).parent_path().string(), build);

    const CalibrationVerdict v = calibrate(assignment, *q, *q->sample_answer, *gateway, opts);
    json out = calibration_verdict_to_json(v);
    out["cost_summary"] = cost_summary_json(gateway->ledger().entries());
    atomic_write_file(fs::absolute(out_path), canonical_dump(out));
    std::cout << question_id << ": " << to_string(v.classification) << " (baseline "
              << v.baseline.correct << "/" << v.baseline.total << ", guided " << v.guided.correct
              << "/" << v.guided.total << ")\n";
    return 0;
  } catch (const SchemaViolation& e) {
    std::cerr << "socrates-calibrate: assignment " << e.what() << "\n";
    return 2;
  } catch (const MalformedJson& e) {
    std::cerr << "socrates-calibrate: malformed assignment: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "socrates-calibrate: " << e.what() << "\n";
    return 2;
  } catch (const NoVerifiableTestCase& e) {
    std::cerr << "socrates-calibrate: " << e.what() << "\n";
    return 2;
  } catch (const MissingAnswerArea& e) {
    std::cerr << "socrates-calibrate: sample_answer " << e.what() << "\n";
    return 2;
  } catch (const UnknownModel& e) {
    std::cerr << "socrates-calibrate: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "socrates-calibrate: " << e.what() << "\n";
    return 1;
  }
}
