// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace wsg {

/// One verification check, mapped to an acceptance criterion.
struct CheckResult {
    int criterion = 0;  // 1..10
    std::string suite;
    std::string name;
    bool passed = false;
    std::string detail;  // measured values and the tolerance applied
};

/// Suites: wavelet, modconv, fusion, complexity, losses, bench, graph, all.
std::vector<std::string> verify_suite_names();

std::vector<CheckResult> run_verify_suite(const std::string& suite);

}  // namespace wsg
