/*
 Copyright 2026 The kmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace kmpc::acceptance {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool informational = false;  // a failure is reported but does not fail the suite
  std::string measured;
  std::string tolerance;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  std::string description;
  std::function<CheckResult()> run;
};

/// The full acceptance suite, in reporting order.
const std::vector<Check>& all_checks();

/// "PASS gradient_oracle: max rel err 3.1e-10 (tolerance < 1e-06) [0.02 s]"
std::string format_result(const CheckResult& result);

/// Runs the checks whose names are in `only` (all when empty), printing one
/// line per check to `out`. Returns true when no gating check failed.
/// Unknown names throw std::invalid_argument.
bool run_checks(const std::vector<std::string>& only, std::ostream& out,
                std::vector<CheckResult>* results = nullptr);

}  // namespace kmpc::acceptance
