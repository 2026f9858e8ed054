#pragma once

// Hand-labeled judge replies. Shared by the unit tests and the acceptance run.

#include <vector>

#include "socrates/prompt.hpp"

namespace socrates::testing {

struct VerdictRow {
  const char* raw;
  VerdictValue value;
  bool ambiguous;
};

inline const std::vector<VerdictRow>& verdict_corpus() {
  static const std::vector<VerdictRow> rows = {
      {"Yes", VerdictValue::yes, false},
      {"yes", VerdictValue::yes, false},
      {"YES", VerdictValue::yes, false},
      {"yEs.", VerdictValue::yes, false},
      {"  \n**Yes**", VerdictValue::yes, false},
      {"- Yes, the output matches.", VerdictValue::yes, false},
      {"1. Yes", VerdictValue::yes, false},
      {"No", VerdictValue::no, false},
      {"no.", VerdictValue::no, false},
      {"NO!", VerdictValue::no, false},
      {"\"No\" - the sign is wrong.", VerdictValue::no, false},
      {"No. The candidate wrote ```Yes``` but the value differs.", VerdictValue::no, false},
      {"", VerdictValue::no, true},
      {"...", VerdictValue::no, true},
      {"Yesterday it was fine", VerdictValue::no, true},
      {"Nope", VerdictValue::no, true},
      {"Probably yes", VerdictValue::no, true},
      {"It is hard to say; maybe.", VerdictValue::no, true},
      {"```\nAnswer: Yes\n```\nNo", VerdictValue::no, true},
      {"The candidate output says Yes", VerdictValue::no, true},
  };
  return rows;
}

}  // namespace socrates::testing
