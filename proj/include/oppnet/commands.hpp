#pragma once

#include <iosfwd>
#include <vector>

#include "oppnet/config.hpp"

namespace oppnet {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitVerification = 2,
    kExitCalibration = 3,
};

// Each command writes only inside cfg.output_dir and reports on `log`.
// Config and calibration problems surface as ConfigError / CalibrationError.

// trials.csv (+ trace.csv when cfg.trace).
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
// tradeoff.csv plus a trend summary on `log`.
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
// verify.csv; kExitVerification when a selected check fails.
int cmd_verify(const RunConfig& cfg, const std::vector<Lemma>& lemmas, std::ostream& log);
// curves.csv, and overlay.csv when tradeoff.csv is present in output_dir.
int cmd_curves(const RunConfig& cfg, std::ostream& log);

// Shared by the sweep summary and the acceptance suite.
struct TrendVerdict {
    bool m_increasing_in_d = false;
    bool power_decreasing_in_m = false;
};
TrendVerdict trend_verdict(const std::vector<OperatingPoint>& points, Engine engine);

// For every opportunistic point, the baseline points whose D_measured lies
// within `tolerance` (relative) of it; true when each has at least one match
// and the opportunistic P_total is lower than every matched baseline.
struct DominanceCheck {
    bool pass = false;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
};
DominanceCheck power_dominance(const std::vector<OperatingPoint>& points, double tolerance = 0.10);

} // namespace oppnet
