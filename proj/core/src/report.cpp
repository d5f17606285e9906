#include "slelab/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "slelab/version.hpp"

namespace slelab {

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ReportDoc report_skeleton(const std::string& test) {
  ReportDoc doc;
  doc["test"] = test;
  doc["version"] = kVersion;
  doc["timestamp"] = utc_now();
  return doc;
}

ReportDoc make_table(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw std::invalid_argument("make_table: row width does not match columns");
    }
  }
  ReportDoc table;
  table["columns"] = columns;
  table["rows"] = rows;
  return table;
}

void write_report(const ReportDoc& doc, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + file);
}

ReportDoc read_report(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  return ReportDoc::parse(in);
}

BundleResult bundle_reports(const std::string& dir) {
  namespace fs = std::filesystem;
  BundleResult result;
  ReportDoc index = report_skeleton("report_bundle");
  ReportDoc entries = ReportDoc::array();

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ".json" || p.filename() == "index.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  for (const fs::path& p : files) {
    ReportDoc doc;
    try {
      doc = read_report(p.string());
      if (!doc.is_object()) throw std::runtime_error("not an object");
    } catch (const std::exception&) {
      result.unreadable.push_back(p.filename().string());
      continue;
    }
    ReportDoc entry;
    entry["file"] = p.filename().string();
    entry["test"] = doc.value("test", std::string("unknown"));
    if (doc.contains("pass") && doc["pass"].is_boolean()) {
      const bool ok = doc["pass"].get<bool>();
      entry["pass"] = ok;
      ++(ok ? result.pass : result.fail);
    } else {
      entry["pass"] = nullptr;
      ++result.informational;
    }
    entries.push_back(entry);

    if (doc.contains("table") && doc["table"].is_object() &&
        doc["table"].contains("columns") && doc["table"].contains("rows")) {
      const fs::path csv = p.parent_path() / (p.stem().string() + "_table.csv");
      std::ofstream out(csv);
      const auto& cols = doc["table"]["columns"];
      for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i].get<std::string>();
      }
      out << '\n';
      char buf[64];
      for (const auto& row : doc["table"]["rows"]) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%.17g", row[i].get<double>());
          out << (i ? "," : "") << buf;
        }
        out << '\n';
      }
      if (out) result.tables_written.push_back(csv.filename().string());
    }
  }

  index["entries"] = entries;
  index["pass"] = result.pass;
  index["fail"] = result.fail;
  index["informational"] = result.informational;
  index["unreadable"] = result.unreadable;
  index["tables"] = result.tables_written;
  write_report(index, (fs::path(dir) / "index.json").string());
  return result;
}

}  // namespace slelab
