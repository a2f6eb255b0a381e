#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace roughvol::cli {

namespace {

std::string format_short(double x) {
  if (!std::isfinite(x)) return format_full(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string cell_text(const Cell& c, bool full) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return full ? format_full(v) : format_short(v);
        else if constexpr (std::is_same_v<T, long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
        }
        return v;
      },
      c);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

}  // namespace

std::string format_full(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
  rows.push_back(std::move(row));
}

Report::Report(std::string command, std::string config_hash, std::uint64_t seed)
    : command_(std::move(command)), hash_(std::move(config_hash)), seed_(seed) {}

void Report::set(const std::string& key, Cell value) {
  for (auto& [k, v] : summary_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  summary_.emplace_back(key, std::move(value));
}

void Report::note(const std::string& text) { notes_.push_back(text); }

Table& Report::table(const std::string& name, std::vector<std::string> columns) {
  tables_.push_back(Table{name, std::move(columns), {}});
  return tables_.back();
}

std::string Report::header_text() const {
  return "roughvol " + command_ + "\nconfig_hash: " + hash_ + "\nseed: " + std::to_string(seed_);
}

std::string Report::header_comment() const {
  std::string out;
  std::istringstream is(header_text());
  for (std::string line; std::getline(is, line);) out += "# " + line + "\n";
  return out;
}

std::string Report::stem(const Table& t) const {
  std::string s = command_;
  std::replace(s.begin(), s.end(), ' ', '_');
  return t.name.empty() ? s : s + "_" + t.name;
}

void Report::write_csv(const std::filesystem::path& dir) const {
  for (const auto& t : tables_) {
    auto os = open_out(dir / (stem(t) + ".csv"));
    os << header_comment();
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i], true);
      os << '\n';
    }
  }
}

void Report::write_json(const std::filesystem::path& dir) const {
  nlohmann::ordered_json j;
  j["header"] = {{"command", command_}, {"config_hash", hash_}, {"seed", seed_}};
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [k, v] : summary_) summary[k] = cell_json(v);
  j["summary"] = summary;
  if (!notes_.empty()) j["notes"] = notes_;
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  for (const auto& t : tables_) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
      nlohmann::ordered_json row;
      for (std::size_t i = 0; i < r.size(); ++i) row[t.columns[i]] = cell_json(r[i]);
      rows.push_back(row);
    }
    tables[t.name.empty() ? "main" : t.name] = rows;
  }
  j["tables"] = tables;
  std::string s = command_;
  std::replace(s.begin(), s.end(), ' ', '_');
  auto os = open_out(dir / (s + ".json"));
  os << j.dump(2) << '\n';
}

void Report::write_text(std::ostream& os) const {
  os << header_comment();
  std::size_t w = 0;
  for (const auto& [k, _] : summary_) w = std::max(w, k.size());
  for (const auto& [k, v] : summary_) {
    std::string key = k;
    key.resize(w, ' ');
    os << key << "  " << cell_text(v, false) << '\n';
  }
  for (const auto& n : notes_) os << "note: " << n << '\n';
  for (const auto& t : tables_) {
    os << '\n';
    if (!t.name.empty()) os << "[" << t.name << "]\n";
    std::vector<std::size_t> width(t.columns.size());
    std::vector<std::vector<std::string>> text;
    for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
    for (const auto& r : t.rows) {
      std::vector<std::string> line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line.push_back(cell_text(r[i], false));
        width[i] = std::max(width[i], line.back().size());
      }
      text.push_back(std::move(line));
    }
    auto emit = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string pad(width[i] - cells[i].size(), ' ');
        os << (i ? "  " : "") << pad << cells[i];
      }
      os << '\n';
    };
    emit(t.columns);
    for (const auto& line : text) emit(line);
  }
}

void Report::write_text(const std::filesystem::path& dir) const {
  std::string s = command_;
  std::replace(s.begin(), s.end(), ' ', '_');
  auto os = open_out(dir / (s + ".txt"));
  write_text(os);
}

}  // namespace roughvol::cli
