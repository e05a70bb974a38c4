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

// One line per acceptance criterion; exit status 1 if any gating check fails.

#include <iostream>
#include <string>
#include <vector>

#include "checks.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> only(argv + 1, argv + argc);
  std::vector<kmpc::acceptance::CheckResult> results;
  const bool ok = kmpc::acceptance::run_checks(only, std::cout, &results);
  int passed = 0;
  for (const auto& r : results) passed += r.passed ? 1 : 0;
  std::cout << passed << "/" << results.size() << " acceptance checks passed" << std::endl;
  return ok ? 0 : 1;
}
