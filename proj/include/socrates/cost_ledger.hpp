#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/json_util.hpp"

namespace socrates {

enum class Component { playground, grader, calibrator };

std::string_view to_string(Component c);

struct CostEntry {
  std::int64_t timestamp_ms = 0;  // unix epoch millis
  Component component = Component::playground;
  std::string model_id;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  double usd = 0.0;

  bool operator==(const CostEntry&) const = default;
};

// Prices are USD per one million tokens.
double token_cost_usd(std::int64_t tokens_in, std::int64_t tokens_out, double price_in,
                      double price_out);

// Append-only, thread-safe.
class CostLedger {
 public:
  void append(CostEntry entry);
  std::vector<CostEntry> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CostEntry> entries_;
};

enum class CostGrouping { model, component };

struct CostTotal {
  std::string key;
  double total_usd = 0.0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t calls = 0;

  std::int64_t total_tokens() const { return tokens_in + tokens_out; }
  bool operator==(const CostTotal&) const = default;
};

// Sorted by key. Within a group, usd values are summed in ascending order so the
// result does not depend on the order concurrent calls landed in the ledger.
std::vector<CostTotal> summarize_costs(const std::vector<CostEntry>& entries, CostGrouping by);

json cost_totals_to_json(const std::vector<CostTotal>& totals);

// {"by_component": [...], "by_model": [...]}
json cost_summary_json(const std::vector<CostEntry>& entries);

}  // namespace socrates
