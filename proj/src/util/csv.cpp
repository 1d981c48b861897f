#include "blastlab/util/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "blastlab/error.hpp"

namespace blastlab::csv {

std::string fmt(double v, int precision) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::string& configNote)
    : path_(path), out_(path, std::ios::binary), width_(header.size()) {
  if (!out_) throw DataError("cannot write " + path.string());
  if (!configNote.empty()) out_ << "# config=" << configNote << '\n';
  row(header);
}

void Writer::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw ContractError("csv row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw DataError("failed writing " + path_.string());
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw DataError("missing csv column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line, int lineNo) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(lineNo, "unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

Table parse(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  bool haveHeader = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    auto fields = split_line(line, lineNo);
    if (!haveHeader) {
      t.header = std::move(fields);
      haveHeader = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError(lineNo, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!haveHeader) throw DataError("csv has no header");
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

double to_double(const std::string& field, const std::string& what) {
  if (field.empty()) return std::nan("");
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size()) throw DataError("");
    return v;
  } catch (const std::exception&) {
    throw DataError("bad number '" + field + "' for " + what);
  }
}

long to_long(const std::string& field, const std::string& what) {
  long v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw DataError("bad integer '" + field + "' for " + what);
  }
  return v;
}

}  // namespace blastlab::csv
