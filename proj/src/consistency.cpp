#include "socrates/consistency.hpp"

#include <algorithm>
#include <thread>

namespace socrates {

int TrialSet::failed_count() const {
  return static_cast<int>(
      std::count_if(errors.begin(), errors.end(), [](const auto& e) { return e.has_value(); }));
}

std::vector<std::string> TrialSet::outputs() const {
  std::vector<std::string> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(r.text);
  return out;
}

TrialSet run_trials(Gateway& gateway, const PromptBundle& prompt, const TrialConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
  if (cfg.threshold < 1 || cfg.threshold > cfg.k) {
    throw std::invalid_argument("threshold must be in [1, k]");
  }
  if (!gateway.has_model(cfg.model_id)) throw UnknownModel(cfg.model_id);

  TrialSet set;
  set.prompt = prompt;
  set.k = cfg.k;
  set.threshold = cfg.threshold;
  set.responses.resize(static_cast<std::size_t>(cfg.k));
  set.errors.resize(static_cast<std::size_t>(cfg.k));

  const auto messages = prompt.messages();
  auto one = [&](int index) {
    ChatRequest req;
    req.model_id = cfg.model_id;
    req.messages = messages;
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    req.trial_index = index;
    const auto i = static_cast<std::size_t>(index);
    try {
      set.responses[i] = gateway.complete(req, cfg.component);
    } catch (const std::exception& e) {
      set.responses[i] = ChatResponse{};
      set.responses[i].model_id = cfg.model_id;
      set.errors[i] = e.what();
    }
  };

  if (cfg.k == 1) {
    one(0);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(cfg.k));
    for (int i = 0; i < cfg.k; ++i) workers.emplace_back(one, i);
  }

  if (set.failed_count() == cfg.k) throw AllTrialsFailed(*set.errors.back());
  return set;
}

ConsistencyDecision decide(const std::vector<Verdict>& verdicts, int threshold) {
  if (threshold < 1 || threshold > static_cast<int>(verdicts.size())) {
    throw std::invalid_argument("threshold must be in [1, number of verdicts]");
  }
  ConsistencyDecision d;
  for (const auto& v : verdicts) {
    if (v.is_yes()) ++d.yes_count;
    if (v.ambiguous) ++d.ambiguous_count;
  }
  d.passed = d.yes_count >= threshold;
  return d;
}

Verdict judge_output(Gateway& gateway, std::string_view candidate, std::string_view sample,
                     const JudgeConfig& judge) {
  const PromptBundle prompt = assemble_verification_prompt(candidate, sample);
  TrialConfig cfg;
  cfg.model_id = judge.model_id;
  cfg.k = judge.votes;
  cfg.threshold = judge.threshold;
  cfg.temperature = judge.temperature;
  cfg.component = judge.component;

  Verdict out;
  TrialSet votes;
  try {
    votes = run_trials(gateway, prompt, cfg);
  } catch (const AllTrialsFailed&) {
    return out;  // ambiguous No
  }
  std::vector<Verdict> parsed;
  parsed.reserve(votes.responses.size());
  for (std::size_t i = 0; i < votes.responses.size(); ++i) {
    // A failed vote parses as an ambiguous No.
    parsed.push_back(parse_verdict(votes.errors[i] ? std::string_view{} : votes.responses[i].text));
  }
  const ConsistencyDecision d = decide(parsed, judge.threshold);
  out.value = d.passed ? VerdictValue::yes : VerdictValue::no;
  out.ambiguous = !d.passed && d.ambiguous_count > 0;
  out.raw_text = parsed.front().raw_text;
  return out;
}

void verify_trials(Gateway& gateway, TrialSet& trials, std::string_view sample,
                   const JudgeConfig& judge) {
  std::vector<Verdict> verdicts;
  verdicts.reserve(trials.responses.size());
  for (std::size_t i = 0; i < trials.responses.size(); ++i) {
    if (trials.errors[i]) {
      Verdict failed;
      failed.ambiguous = false;
      verdicts.push_back(std::move(failed));
      continue;
    }
    verdicts.push_back(judge_output(gateway, trials.responses[i].text, sample, judge));
  }
  trials.verdicts = std::move(verdicts);
}

}  // namespace socrates
