#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <deque>
#include <variant>
#include <vector>

#include <json.hpp>

namespace roughvol::cli {

using Cell = std::variant<double, long, bool, std::string>;

struct Table {
  std::string name;  // file suffix; empty for the main table
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// One command's output: scalar summary entries plus per-row tables.
class Report {
 public:
  Report(std::string command, std::string config_hash, std::uint64_t seed);

  void set(const std::string& key, Cell value);
  /// Free-form note, shown in the text form and under "notes" in JSON.
  void note(const std::string& text);
  Table& table(const std::string& name, std::vector<std::string> columns);

  /// "roughvol <command>", "config_hash: ...", "seed: ..." lines.
  std::string header_text() const;
  /// header_text() with each line prefixed by "# ".
  std::string header_comment() const;

  void write_csv(const std::filesystem::path& dir) const;
  void write_json(const std::filesystem::path& dir) const;
  void write_text(std::ostream& os) const;
  void write_text(const std::filesystem::path& dir) const;

  const std::string& command() const { return command_; }

 private:
  std::string stem(const Table& t) const;

  std::string command_;
  std::string hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, Cell>> summary_;
  std::vector<std::string> notes_;
  std::deque<Table> tables_;
};

/// %.17g; "nan", "inf", "-inf" for non-finite values.
std::string format_full(double x);

}  // namespace roughvol::cli
