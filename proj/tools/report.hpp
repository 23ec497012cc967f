// CSV and JSON output for the command-line driver.
#ifndef MFL_TOOLS_REPORT_HPP
#define MFL_TOOLS_REPORT_HPP

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace mfl::cli {

using json = nlohmann::ordered_json;

/// RFC 4180 writer: CRLF line ends, header mandatory, floats with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  size_t columns_ = 0, in_row_ = 0;
  std::string path_;
};

std::string format_double(double v);
std::string quote_csv(const std::string& s);

/// One acceptance verdict in summary.json.
struct Rule {
  std::string name;
  double value = 0;
  double lo = 0, hi = 0;
  bool pass = false;
  std::string note;
};

Rule within(std::string name, double value, double lo, double hi, std::string note = "");

struct Summary {
  std::string command;
  json results = json::object();
  std::vector<Rule> rules;
  std::vector<std::string> warnings;

  bool pass() const;
  json to_json() const;
};

void write_json(const std::filesystem::path& path, const json& j);

}  // namespace mfl::cli

#endif
