#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <thread>

#include "socrates/cost_ledger.hpp"

using namespace socrates;

TEST_CASE("token cost formula") {
  CHECK(token_cost_usd(0, 0, 2.5, 10.0) == 0.0);
  CHECK(token_cost_usd(1'000'000, 0, 2.5, 10.0) == doctest::Approx(2.5));
  CHECK(token_cost_usd(0, 1'000'000, 2.5, 10.0) == doctest::Approx(10.0));
  CHECK(token_cost_usd(1000, 500, 0.15, 0.6) ==
        doctest::Approx(1000 * 0.15 / 1e6 + 500 * 0.6 / 1e6).epsilon(1e-12));
}

TEST_CASE("two calls sum to 0.35") {
  const std::vector<CostEntry> e = {{1, Component::grader, "m", 0, 0, 0.10},
                                    {2, Component::grader, "m", 0, 0, 0.25}};
  const auto totals = summarize_costs(e, CostGrouping::model);
  REQUIRE(totals.size() == 1);
  CHECK(totals[0].total_usd == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(totals[0].calls == 2);
}

TEST_CASE("empty ledger summarizes to nothing") {
  CHECK(summarize_costs({}, CostGrouping::model).empty());
  const json j = cost_summary_json({});
  CHECK(j["by_model"].empty());
  CHECK(j["by_component"].empty());
}

TEST_CASE("grouping keys and JSON shape") {
  const std::vector<CostEntry> e = {{1, Component::playground, "b", 10, 5, 0.5},
                                    {2, Component::grader, "a", 3, 4, 0.25},
                                    {3, Component::grader, "b", 1, 1, 0.0}};
  const auto by_model = summarize_costs(e, CostGrouping::model);
  REQUIRE(by_model.size() == 2);
  CHECK(by_model[0].key == "a");
  CHECK(by_model[1].key == "b");
  CHECK(by_model[1].tokens_in == 11);
  CHECK(by_model[1].total_tokens() == 17);
  const auto by_comp = summarize_costs(e, CostGrouping::component);
  REQUIRE(by_comp.size() == 2);
  CHECK(by_comp[0].key == "grader");
  CHECK(by_comp[0].calls == 2);
  const json j = cost_summary_json(e);
  CHECK(j["by_model"][1]["total_tokens"] == 17);
}

TEST_CASE("property: totals match an independent re-sum and ignore arrival order") {
  std::mt19937_64 rng(4242);
  const std::vector<std::string> models = {"m1", "m2", "m3"};
  for (int round = 0; round < 20; ++round) {
    std::vector<CostEntry> entries;
    for (int i = 0; i < 300; ++i) {
      CostEntry e;
      e.model_id = models[rng() % models.size()];
      e.component = static_cast<Component>(rng() % 3);
      e.tokens_in = static_cast<std::int64_t>(rng() % 5000);
      e.tokens_out = static_cast<std::int64_t>(rng() % 2000);
      e.usd = token_cost_usd(e.tokens_in, e.tokens_out, 2.5, 10.0);
      entries.push_back(e);
    }
    // Oracle: long double accumulation in insertion order.
    std::map<std::string, long double> oracle;
    for (const auto& e : entries) oracle[e.model_id] += e.usd;
    const auto totals = summarize_costs(entries, CostGrouping::model);
    for (const auto& t : totals) {
      CHECK(std::abs(static_cast<long double>(t.total_usd) - oracle[t.key]) <= 1e-9L);
    }
    auto shuffled = entries;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(summarize_costs(shuffled, CostGrouping::model) == totals);
    CHECK(summarize_costs(shuffled, CostGrouping::component) ==
          summarize_costs(entries, CostGrouping::component));
  }
}

TEST_CASE("property: totals over a growing prefix never decrease") {
  std::mt19937_64 rng(5);
  std::vector<CostEntry> entries;
  double last = 0.0;
  for (int i = 0; i < 200; ++i) {
    entries.push_back({i, Component::grader, "m", 0, 0, static_cast<double>(rng() % 1000) / 1e4});
    const double now = summarize_costs(entries, CostGrouping::model)[0].total_usd;
    CHECK(now >= last);
    last = now;
  }
}

TEST_CASE("ledger appends are thread-safe") {
  CostLedger ledger;
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&ledger, t] {
        for (int i = 0; i < 250; ++i) ledger.append({i, Component::grader, "m" + std::to_string(t), 1, 1, 0.001});
      });
    }
  }
  CHECK(ledger.size() == 2000);
  CHECK(summarize_costs(ledger.entries(), CostGrouping::component)[0].calls == 2000);
}
