#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace slelab {

/**
 * Report documents are ordered JSON so rerunning a command reproduces the
 * file byte for byte except for the timestamp field. Every report carries
 * test, version, timestamp, and the resolved config it ran under; checks add
 * estimate/target/zscore/pass, and plot-ready data goes into "table" as
 * {"columns": [names...], "rows": [[...], ...]} for CSV extraction.
 */
using ReportDoc = nlohmann::ordered_json;

/// Skeleton with test name, library version, and UTC timestamp filled in.
ReportDoc report_skeleton(const std::string& test);

/// Column table helper for the plot-ready CSV extraction.
ReportDoc make_table(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

void write_report(const ReportDoc& doc, const std::string& file);
ReportDoc read_report(const std::string& file);

struct BundleResult {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t informational = 0;  ///< reports without a "pass" verdict
  std::vector<std::string> unreadable;
  std::vector<std::string> tables_written;

  int exit_code() const { return unreadable.empty() && fail == 0 ? 0 : 1; }
};

/**
 * Aggregate every *.json report in dir (non-recursive) into index.json:
 * per-report verdicts, pass/fail totals, and unreadable files. Reports with
 * a "table" member get a sibling <name>_table.csv. Returns the totals; the
 * caller maps exit_code() onto the process status.
 */
BundleResult bundle_reports(const std::string& dir);

}  // namespace slelab
