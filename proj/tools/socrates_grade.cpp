// socrates-grade: offline grading of a directory of answer files.
//
// Exit codes: 0 success, 2 validation/configuration error, 3 provider
// exhaustion (some test case had every trial fail; the report is still
// written), 1 anything else.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "socrates/answer_file.hpp"
#include "socrates/assignment.hpp"
#include "socrates/gateway.hpp"
#include "socrates/grader.hpp"

namespace fs = std::filesystem;
using namespace socrates;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitProviderExhausted = 3;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  atomic_write_file(fs::absolute(path), content);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grade student answer files with LLM self-consistency voting"};
  app.name("socrates-grade");

  std::string assignment_path;
  std::string answers_dir;
  std::string providers_path;
  std::string labels_path;
  std::string out_path = "-";
  std::string costs_path;
  std::string script_path;
  bool dry_run = false;
  GradeOptions opts;
  std::string judge_model;
  int trials = 0, threshold = 0, judge_trials = 0, judge_threshold = 0, min_cases = 0;

  app.add_option("--assignment", assignment_path, "Assignment JSON file")->required();
  app.add_option("--answers", answers_dir, "Directory of <student>.json answer files")->required();
  app.add_option("--providers", providers_path, "Provider config JSON")->required();
  app.add_option("--judge-model", judge_model, "Judge model (default: each question's model)");
  app.add_option("--trials", trials, "Override K, the solving trials per test case");
  app.add_option("--threshold", threshold, "Override T, the Yes votes needed per test case");
  app.add_option("--judge-trials", judge_trials, "Judge votes per trial output (default: K)");
  app.add_option("--judge-threshold", judge_threshold, "Judge Yes votes needed (default: T)");
  app.add_flag("--include-student-cases", opts.include_student_cases,
               "Also grade student-visible test cases that carry a sample_output");
  app.add_option("--min-cases", min_cases, "Test cases that must pass per question (default: all)");
  app.add_option("--parallel", opts.parallel, "Students graded concurrently")->default_val(1);
  app.add_option("--labels", labels_path, "Manual labels JSON for grader accuracy");
  app.add_option("--out", out_path, "Report path ('-' for stdout)");
  app.add_option("--costs", costs_path, "Cost summary path");
  app.add_flag("--dry-run", dry_run, "Serve every model from the scripted provider; no network");
  app.add_option("--script", script_path, "Script for --dry-run (default: first scripted model's)");
  int retries = 3;
  app.add_option("--retries", retries, "Retries per LLM call on transient failure")
      ->default_val(3)
      ->check(CLI::Range(0, 10));

  CLI11_PARSE(app, argc, argv);

  if (!judge_model.empty()) opts.judge_model = judge_model;
  if (app.count("--trials")) opts.trials = trials;
  if (app.count("--threshold")) opts.threshold = threshold;
  if (app.count("--judge-trials")) opts.judge_trials = judge_trials;
  if (app.count("--judge-threshold")) opts.judge_threshold = judge_threshold;
  if (app.count("--min-cases")) opts.min_cases = min_cases;

  for (const auto& p : {assignment_path, answers_dir, providers_path}) {
    if (!fs::exists(p)) {
      std::cerr << "socrates-grade: no such file or directory: " << p << "\n";
      return kExitValidation;
    }
  }

  try {
    const Assignment assignment = parse_assignment(read_file(assignment_path));
    const auto answer_files = load_answer_dir(answers_dir);

    GatewayBuildOptions build;
    build.dry_run = dry_run;
    build.gateway.retries = retries;
    if (!script_path.empty()) build.dry_run_script = fs::absolute(script_path).string();
    const auto specs = load_provider_config(providers_path);
    auto gateway =
        build_gateway(specs, fs::absolute(providers_path).parent_path().string(), build);

    std::optional<ManualLabels> labels;
    if (!labels_path.empty()) labels = parse_manual_labels(json::parse(read_file(labels_path)));

    const GradeReport report = grade(assignment, answer_files, *gateway, opts);
    json out = grade_report_to_json(report);
    if (labels) out["accuracy"] = grader_accuracy_to_json(grader_accuracy(report, *labels));
    write_output(out_path, canonical_dump(out));

    if (!costs_path.empty()) {
      json costs = cost_summary_json(report.costs);
      costs["accounting_note"] = "judge verification calls are attributed to component=grader";
      json entries = json::array();
      for (const auto& e : report.costs) {
        entries.push_back({{"timestamp", format_utc_millis(e.timestamp_ms)},
                           {"component", to_string(e.component)},
                           {"model_id", e.model_id},
                           {"tokens_in", e.tokens_in},
                           {"tokens_out", e.tokens_out},
                           {"usd", e.usd}});
      }
      costs["entries"] = std::move(entries);
      write_output(costs_path, canonical_dump(costs));
    }

    if (report.provider_exhausted) {
      std::cerr << "socrates-grade: some test cases had every trial fail; see flags in report\n";
      return kExitProviderExhausted;
    }
    return 0;
  } catch (const SchemaViolation& e) {
    std::cerr << "socrates-grade: assignment " << e.what() << "\n";
    return kExitValidation;
  } catch (const MalformedJson& e) {
    std::cerr << "socrates-grade: malformed assignment: " << e.what() << "\n";
    return kExitValidation;
  } catch (const AnswerFileInvalid& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const AnswerFileError& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GradeConfigError& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LabelError& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const EmptyLabels& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ProviderUnreachable& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return kExitProviderExhausted;
  } catch (const std::exception& e) {
    std::cerr << "socrates-grade: " << e.what() << "\n";
    return 1;
  }
}
