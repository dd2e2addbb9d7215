#pragma once

// Named verification suites over a channel: each suite turns one guarantee of
// the scheme (distributional, exactness, or numerical) into a list of checks
// with explicit statistics and thresholds. Statistical checks use fixed
// levels with a Bonferroni split across the suite's p-value tests, so a
// seeded run is a stable regression gate.

#include "pm/channel.hpp"
#include "pm/codec.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace pm {

struct CheckResult {
    std::string name;
    double statistic = 0;
    double threshold = 0;
    bool pass = false;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::string channel_hash;
    std::vector<CheckResult> checks;
    bool pass = true;
    double alpha = 0.01;  // base level; p-value checks carry their split share
};

struct VerifyOptions {
    long trials = 0;    // 0: suite default
    long samples = 0;   // 0: suite default
    long n = 0;         // 0: suite default horizon
    Rational target_error = Rational(1, 10);
    Seeds seeds;
    bool quick = false;  // cut sizes for smoke runs; same checks
};

const std::vector<std::string>& verify_suite_names();

// Throws config_error on an unknown suite name.
SuiteReport run_verify_suite(const std::string& name, const ChannelSpec& ch,
                             const VerifyOptions& opt = {});

nlohmann::ordered_json suite_report_to_json(const SuiteReport& rep);

}  // namespace pm
