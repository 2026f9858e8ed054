#include "socrates/assignment.hpp"

#include <algorithm>
#include <set>

namespace socrates {

std::string_view to_string(AreaKind k) {
  return k == AreaKind::steps ? "steps" : "freeform";
}

std::string_view to_string(Visibility v) {
  return v == Visibility::grader ? "grader" : "student";
}

SchemaViolation::SchemaViolation(std::string path, std::string reason)
    : std::runtime_error("schema violation at " + path + ": " + reason),
      path_(std::move(path)),
      reason_(std::move(reason)) {}

const TestCase* Question::find_test_case(std::string_view tc_id) const {
  auto it = std::find_if(test_cases.begin(), test_cases.end(),
                         [&](const TestCase& t) { return t.id == tc_id; });
  return it == test_cases.end() ? nullptr : &*it;
}

const AnswerArea* Question::find_area(std::string_view area_id) const {
  auto it = std::find_if(answer_areas.begin(), answer_areas.end(),
                         [&](const AnswerArea& a) { return a.id == area_id; });
  return it == answer_areas.end() ? nullptr : &*it;
}

const Question* Assignment::find_question(std::string_view q_id) const {
  auto it = std::find_if(questions.begin(), questions.end(),
                         [&](const Question& q) { return q.id == q_id; });
  return it == questions.end() ? nullptr : &*it;
}

std::string effective_model(const Assignment& a, const Question& q) {
  return q.model.value_or(a.defaults.model);
}
int effective_trials(const Assignment& a, const Question& q) {
  return q.trials.value_or(a.defaults.trials);
}
int effective_threshold(const Assignment& a, const Question& q) {
  return q.threshold.value_or(a.defaults.threshold);
}
double effective_temperature(const Assignment& a, const Question& q) {
  return q.temperature.value_or(a.defaults.temperature);
}

bool is_safe_identifier(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

namespace {

// Reads one JSON object, tracking its pointer path and rejecting unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaViolation(where(), "expected object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, _] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw SchemaViolation(child(k), "unknown field");
      }
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const {
    if (!j_.contains(key)) throw SchemaViolation(child(key), "required field missing");
    return j_.at(key);
  }

  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw SchemaViolation(child(key), "expected string");
    return v.get<std::string>();
  }

  std::optional<std::string> opt_string(const char* key) const {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  int integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw SchemaViolation(child(key), "expected integer");
    const auto n = v.get<std::int64_t>();
    if (n < INT32_MIN || n > INT32_MAX) throw SchemaViolation(child(key), "integer out of range");
    return static_cast<int>(n);
  }

  std::optional<int> opt_integer(const char* key) const {
    if (!has(key)) return std::nullopt;
    return integer(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw SchemaViolation(child(key), "expected number");
    return v.get<double>();
  }

  std::optional<double> opt_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw SchemaViolation(child(key), "expected boolean");
    return v.get<bool>();
  }

  const json& array(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) throw SchemaViolation(child(key), "expected array");
    return v;
  }

  std::string child(std::string_view key) const { return path_ + "/" + json_pointer_escape(key); }
  const std::string& where() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

std::map<std::string, std::string> string_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaViolation(path, "expected object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) {
      throw SchemaViolation(path + "/" + json_pointer_escape(k), "expected string");
    }
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

void require_identifier(const std::string& id, const std::string& path) {
  if (!is_safe_identifier(id)) {
    throw SchemaViolation(path, "identifier must match [A-Za-z0-9._-]+ and not start with '.'");
  }
}

ModelDefaults parse_defaults(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.allow_only({"model", "trials", "threshold", "temperature"});
  ModelDefaults d;
  d.model = r.string("model");
  if (d.model.empty()) throw SchemaViolation(r.child("model"), "model id must be non-empty");
  d.trials = r.integer("trials");
  if (d.trials < 1) throw SchemaViolation(r.child("trials"), "trials must be positive");
  d.threshold = r.integer("threshold");
  if (d.threshold < 1) throw SchemaViolation(r.child("threshold"), "threshold must be positive");
  if (d.threshold > d.trials) {
    throw SchemaViolation(r.child("threshold"), "threshold exceeds trials");
  }
  d.temperature = r.has("temperature") ? r.number("temperature") : 1.0;
  if (!(d.temperature >= 0.0)) {
    throw SchemaViolation(r.child("temperature"), "temperature must be >= 0");
  }
  return d;
}

AnswerArea parse_area(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.allow_only({"id", "label", "kind"});
  AnswerArea area;
  area.id = r.string("id");
  require_identifier(area.id, r.child("id"));
  area.label = r.string("label");
  if (area.label.empty()) throw SchemaViolation(r.child("label"), "label must be non-empty");
  if (r.has("kind")) {
    const std::string kind = r.string("kind");
    if (kind == "freeform") {
      area.kind = AreaKind::freeform;
    } else if (kind == "steps") {
      area.kind = AreaKind::steps;
    } else {
      throw SchemaViolation(r.child("kind"), "expected one of freeform, steps");
    }
  }
  return area;
}

TestCase parse_test_case(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.allow_only({"id", "input", "visibility", "sample_output"});
  TestCase tc;
  tc.id = r.string("id");
  require_identifier(tc.id, r.child("id"));
  tc.input = r.string("input");
  const std::string vis = r.string("visibility");
  if (vis == "student") {
    tc.visibility = Visibility::student;
  } else if (vis == "grader") {
    tc.visibility = Visibility::grader;
  } else {
    throw SchemaViolation(r.child("visibility"), "expected one of student, grader");
  }
  tc.sample_output = r.opt_string("sample_output");
  if (tc.visibility == Visibility::grader && (!tc.sample_output || tc.sample_output->empty())) {
    throw SchemaViolation(r.child("sample_output"),
                          "grader test case requires a non-empty sample_output");
  }
  return tc;
}

Question parse_question(const json& j, const std::string& path, const ModelDefaults& defaults) {
  ObjectReader r(j, path);
  r.allow_only({"id", "description", "demo", "sample_answer", "answer_areas", "model",
                "additional_prompt", "hidden_prompt", "test_cases", "trials", "threshold",
                "temperature"});
  Question q;
  q.id = r.string("id");
  require_identifier(q.id, r.child("id"));
  q.description = r.string("description");
  q.demo = r.boolean("demo", false);

  const json& areas = r.array("answer_areas");
  if (areas.empty()) throw SchemaViolation(r.child("answer_areas"), "at least one answer area");
  std::set<std::string> area_ids;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const std::string apath = r.child("answer_areas") + "/" + std::to_string(i);
    AnswerArea area = parse_area(areas[i], apath);
    if (!area_ids.insert(area.id).second) {
      throw SchemaViolation(apath + "/id", "duplicate answer area id");
    }
    q.answer_areas.push_back(std::move(area));
  }

  if (r.has("sample_answer")) {
    q.sample_answer = string_map(r.at("sample_answer"), r.child("sample_answer"));
    for (const auto& [k, _] : *q.sample_answer) {
      if (!area_ids.contains(k)) {
        throw SchemaViolation(r.child("sample_answer") + "/" + json_pointer_escape(k),
                              "sample answer for unknown answer area");
      }
    }
  }
  if (q.demo) {
    if (!q.sample_answer) {
      throw SchemaViolation(r.child("sample_answer"), "demo question requires a sample_answer");
    }
    for (const auto& area : q.answer_areas) {
      if (!q.sample_answer->contains(area.id)) {
        throw SchemaViolation(r.child("sample_answer") + "/" + json_pointer_escape(area.id),
                              "demo sample_answer must cover every answer area");
      }
    }
  }

  q.model = r.opt_string("model");
  if (q.model && q.model->empty()) {
    throw SchemaViolation(r.child("model"), "model id must be non-empty");
  }
  q.additional_prompt = r.opt_string("additional_prompt");
  q.hidden_prompt = r.opt_string("hidden_prompt");

  const json& cases = r.array("test_cases");
  std::set<std::string> case_ids;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string cpath = r.child("test_cases") + "/" + std::to_string(i);
    TestCase tc = parse_test_case(cases[i], cpath);
    if (!case_ids.insert(tc.id).second) {
      throw SchemaViolation(cpath + "/id", "duplicate test case id");
    }
    q.test_cases.push_back(std::move(tc));
  }

  q.trials = r.opt_integer("trials");
  if (q.trials && *q.trials < 1) throw SchemaViolation(r.child("trials"), "trials must be positive");
  q.threshold = r.opt_integer("threshold");
  if (q.threshold && *q.threshold < 1) {
    throw SchemaViolation(r.child("threshold"), "threshold must be positive");
  }
  q.temperature = r.opt_number("temperature");
  if (q.temperature && !(*q.temperature >= 0.0)) {
    throw SchemaViolation(r.child("temperature"), "temperature must be >= 0");
  }

  const int trials = q.trials.value_or(defaults.trials);
  const int threshold = q.threshold.value_or(defaults.threshold);
  if (threshold > trials) {
    throw SchemaViolation(r.child(q.threshold ? "threshold" : "trials"),
                          "threshold exceeds trials");
  }
  return q;
}

}  // namespace

Assignment assignment_from_json(const json& j) {
  ObjectReader r(j, "");
  r.allow_only({"schema_version", "assignment_id", "overview", "passcodes", "defaults",
                "show_trials", "questions"});
  Assignment a;
  a.schema_version = r.integer("schema_version");
  if (a.schema_version != kAssignmentSchemaVersion) {
    throw SchemaViolation(r.child("schema_version"), "unsupported schema_version");
  }
  a.assignment_id = r.string("assignment_id");
  require_identifier(a.assignment_id, r.child("assignment_id"));
  a.overview = r.has("overview") ? r.string("overview") : std::string{};

  a.passcodes = string_map(r.at("passcodes"), r.child("passcodes"));
  std::set<std::string> seen;
  for (const auto& [student, code] : a.passcodes) {
    const std::string ppath = r.child("passcodes") + "/" + json_pointer_escape(student);
    require_identifier(student, ppath);
    if (code.size() < kMinPasscodeLength) {
      throw SchemaViolation(ppath, "passcode shorter than 8 characters");
    }
    if (!seen.insert(code).second) throw SchemaViolation(ppath, "passcode not unique");
  }

  a.defaults = parse_defaults(r.at("defaults"), r.child("defaults"));
  a.show_trials = r.boolean("show_trials", false);

  const json& qs = r.array("questions");
  if (qs.empty()) throw SchemaViolation(r.child("questions"), "at least one question");
  std::set<std::string> q_ids;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const std::string qpath = r.child("questions") + "/" + std::to_string(i);
    Question q = parse_question(qs[i], qpath, a.defaults);
    if (!q_ids.insert(q.id).second) throw SchemaViolation(qpath + "/id", "duplicate question id");
    a.questions.push_back(std::move(q));
  }
  return a;
}

Assignment parse_assignment(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw MalformedJson(e.what());
  }
  return assignment_from_json(j);
}

json assignment_to_json(const Assignment& a) {
  json out = json::object();
  out["schema_version"] = a.schema_version;
  out["assignment_id"] = a.assignment_id;
  out["overview"] = a.overview;
  out["passcodes"] = a.passcodes;
  out["defaults"] = {{"model", a.defaults.model},
                     {"trials", a.defaults.trials},
                     {"threshold", a.defaults.threshold},
                     {"temperature", a.defaults.temperature}};
  out["show_trials"] = a.show_trials;
  json qs = json::array();
  for (const auto& q : a.questions) {
    json jq = json::object();
    jq["id"] = q.id;
    jq["description"] = q.description;
    jq["demo"] = q.demo;
    if (q.sample_answer) jq["sample_answer"] = *q.sample_answer;
    json areas = json::array();
    for (const auto& area : q.answer_areas) {
      areas.push_back({{"id", area.id}, {"label", area.label}, {"kind", to_string(area.kind)}});
    }
    jq["answer_areas"] = std::move(areas);
    if (q.model) jq["model"] = *q.model;
    if (q.additional_prompt) jq["additional_prompt"] = *q.additional_prompt;
    if (q.hidden_prompt) jq["hidden_prompt"] = *q.hidden_prompt;
    json cases = json::array();
    for (const auto& tc : q.test_cases) {
      json jt = {{"id", tc.id}, {"input", tc.input}, {"visibility", to_string(tc.visibility)}};
      if (tc.sample_output) jt["sample_output"] = *tc.sample_output;
      cases.push_back(std::move(jt));
    }
    jq["test_cases"] = std::move(cases);
    if (q.trials) jq["trials"] = *q.trials;
    if (q.threshold) jq["threshold"] = *q.threshold;
    if (q.temperature) jq["temperature"] = *q.temperature;
    qs.push_back(std::move(jq));
  }
  out["questions"] = std::move(qs);
  return out;
}

std::string serialize_assignment(const Assignment& a) {
  return canonical_dump(assignment_to_json(a));
}

StudentView sanitize_for_student(const Assignment& a, std::string_view student_id) {
  if (!a.passcodes.contains(std::string(student_id))) {
    throw UnknownStudent(std::string(student_id));
  }
  StudentView view;
  view.assignment_id = a.assignment_id;
  view.student_id = std::string(student_id);
  view.overview = a.overview;
  for (const auto& q : a.questions) {
    StudentQuestion sq;
    sq.id = q.id;
    sq.description = q.description;
    sq.demo = q.demo;
    sq.read_only = q.demo;
    if (q.demo) sq.sample_answer = q.sample_answer;
    sq.answer_areas = q.answer_areas;
    for (const auto& tc : q.test_cases) {
      if (tc.visibility != Visibility::student) continue;
      sq.test_cases.push_back({tc.id, tc.input, tc.sample_output.has_value()});
    }
    if (a.show_trials) {
      sq.trials = effective_trials(a, q);
      sq.threshold = effective_threshold(a, q);
    }
    view.questions.push_back(std::move(sq));
  }
  return view;
}

json student_view_to_json(const StudentView& v) {
  json out = json::object();
  out["assignment_id"] = v.assignment_id;
  out["student_id"] = v.student_id;
  out["overview"] = v.overview;
  json qs = json::array();
  for (const auto& q : v.questions) {
    json jq = json::object();
    jq["id"] = q.id;
    jq["description"] = q.description;
    jq["demo"] = q.demo;
    jq["read_only"] = q.read_only;
    if (q.sample_answer) jq["sample_answer"] = *q.sample_answer;
    json areas = json::array();
    for (const auto& area : q.answer_areas) {
      areas.push_back({{"id", area.id}, {"label", area.label}, {"kind", to_string(area.kind)}});
    }
    jq["answer_areas"] = std::move(areas);
    json cases = json::array();
    for (const auto& tc : q.test_cases) {
      cases.push_back({{"id", tc.id}, {"input", tc.input}, {"verifiable", tc.verifiable}});
    }
    jq["test_cases"] = std::move(cases);
    if (q.trials) jq["trials"] = *q.trials;
    if (q.threshold) jq["threshold"] = *q.threshold;
    qs.push_back(std::move(jq));
  }
  out["questions"] = std::move(qs);
  return out;
}

}  // namespace socrates
