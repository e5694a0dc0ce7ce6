#pragma once

#include <string>
#include <vector>

namespace cmcgraph {

struct InvariantResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;   // worst observed value
  double threshold = 0.0;  // bound the observation must respect
  double margin = 0.0;     // threshold - observed (sign-adjusted; > 0 passes)
  std::string detail;
};

struct VerifyOptions {
  bool quick = false;               // smaller meshes in the solver checks
  bool inject_c_sign_flip = false;  // test fixture: corrupt the profile coefficient C
};

// Runs the cross-module invariant suite and returns one result per invariant.
std::vector<InvariantResult> run_verification(const VerifyOptions& opts = {});

bool all_passed(const std::vector<InvariantResult>& results);

}  // namespace cmcgraph
