// Copyright 2026 The dfd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Acceptance runner: executes the numbered validation checks and prints one
// PASS/FAIL line each. Exit code 0 only if every selected check passes.
//
//   dfd_acceptance              all checks
//   dfd_acceptance --only 3 7   a subset

#include <cstdlib>
#include <iostream>
#include <set>
#include <string>

#include "dfd/validate.hpp"

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only") continue;
    only.insert(std::atoi(arg.c_str()));
  }
  const std::vector<dfd::CheckResult> results =
      dfd::run_acceptance_checks(only);
  const bool all = dfd::print_results(std::cout, results);
  return all ? 0 : 1;
}
