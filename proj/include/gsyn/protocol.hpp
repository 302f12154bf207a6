#pragma once

#include <string>
#include <vector>

#include "gsyn/common.hpp"
#include "gsyn/simnet.hpp"

namespace gsyn {

struct ProtoParams {
  int n = 0;
  int f = 0;
  Time delta = 1;
  int d = 1;       // synchronous diameter (or fallback)
  int dprime = 1;  // partially synchronous diameter (or fallback)
  NodeId self = 0;
  std::string input;
  // When non-empty, proposals are validated against this set before voting
  // (the external-validity predicate; BFT only).
  std::vector<std::string> valid_values;
  bool prephase = false;
};

inline NodeId leader_of(int view, int n) { return view % n; }

inline std::string view_tag(const char* base, int view) {
  return std::string(base) + ":" + std::to_string(view);
}

}  // namespace gsyn
