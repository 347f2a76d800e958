#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tamsm/cohort.hpp"

namespace tamsm::cli {

/// Runs the command line `argv[0] <subcommand> ...`. Reports go to the
/// files named by --out or, when omitted, to `out`. Failures print one line
/// `error: <subcommand>: <message>` to `err` and return nonzero.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `start:end:step`, end inclusive (up to rounding).
std::vector<double> parse_grid(std::string_view text);

// A cohort directory holds baseline.csv, events.csv and optionally
// cohort.cfg with `horizon=<years>` and `processes=<name,name,...>`.
Cohort load_cohort_dir(const std::string& dir);
void save_cohort_dir(const Cohort& cohort, const std::string& dir);

}  // namespace tamsm::cli
