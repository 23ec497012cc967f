#include "report.hpp"

#include "mfl/core.hpp"

#include <cmath>
#include <cstdio>

namespace mfl::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path.string()) {
  if (!out_) throw Error(ErrorKind::input, "cli.csv", "cannot open " + path_);
  for (const auto& h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  sep();
  out_ << quote_csv(s);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw Error(ErrorKind::numeric, "cli.csv", path_ + ": row has " + std::to_string(in_row_) + " fields, expected " +
                                                   std::to_string(columns_));
  out_ << "\r\n";
  in_row_ = 0;
}

Rule within(std::string name, double value, double lo, double hi, std::string note) {
  Rule r;
  r.name = std::move(name);
  r.value = value;
  r.lo = lo;
  r.hi = hi;
  r.pass = value >= lo && value <= hi;
  r.note = std::move(note);
  return r;
}

bool Summary::pass() const {
  for (const auto& r : rules)
    if (!r.pass) return false;
  return true;
}

json Summary::to_json() const {
  json j;
  j["schema"] = "mfl-summary/1";
  j["command"] = command;
  j["results"] = results;
  json rs = json::array();
  for (const auto& r : rules) {
    json x;
    x["name"] = r.name;
    x["value"] = r.value;
    x["lo"] = r.lo;
    x["hi"] = r.hi;
    x["pass"] = r.pass;
    if (!r.note.empty()) x["note"] = r.note;
    rs.push_back(x);
  }
  j["rules"] = rs;
  j["warnings"] = warnings;
  j["pass"] = pass();
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::input, "cli.json", "cannot open " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace mfl::cli
