#include "socrates/cost_ledger.hpp"

#include <algorithm>
#include <map>

namespace socrates {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::playground:
      return "playground";
    case Component::grader:
      return "grader";
    case Component::calibrator:
      return "calibrator";
  }
  return "unknown";
}

double token_cost_usd(std::int64_t tokens_in, std::int64_t tokens_out, double price_in,
                      double price_out) {
  return static_cast<double>(tokens_in) * price_in / 1e6 +
         static_cast<double>(tokens_out) * price_out / 1e6;
}

void CostLedger::append(CostEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<CostEntry> CostLedger::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t CostLedger::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<CostTotal> summarize_costs(const std::vector<CostEntry>& entries, CostGrouping by) {
  struct Acc {
    std::vector<double> usd;
    CostTotal total;
  };
  std::map<std::string, Acc> groups;
  for (const auto& e : entries) {
    const std::string key =
        by == CostGrouping::model ? e.model_id : std::string(to_string(e.component));
    Acc& acc = groups[key];
    acc.usd.push_back(e.usd);
    acc.total.tokens_in += e.tokens_in;
    acc.total.tokens_out += e.tokens_out;
    acc.total.calls += 1;
  }
  std::vector<CostTotal> out;
  out.reserve(groups.size());
  for (auto& [key, acc] : groups) {
    std::sort(acc.usd.begin(), acc.usd.end());
    double sum = 0.0;
    for (double u : acc.usd) sum += u;
    acc.total.key = key;
    acc.total.total_usd = sum;
    out.push_back(std::move(acc.total));
  }
  return out;
}

json cost_totals_to_json(const std::vector<CostTotal>& totals) {
  json arr = json::array();
  for (const auto& t : totals) {
    arr.push_back({{"key", t.key},
                   {"total_usd", t.total_usd},
                   {"tokens_in", t.tokens_in},
                   {"tokens_out", t.tokens_out},
                   {"total_tokens", t.total_tokens()},
                   {"calls", t.calls}});
  }
  return arr;
}

json cost_summary_json(const std::vector<CostEntry>& entries) {
  return {{"by_model", cost_totals_to_json(summarize_costs(entries, CostGrouping::model))},
          {"by_component",
           cost_totals_to_json(summarize_costs(entries, CostGrouping::component))}};
}

}  // namespace socrates
