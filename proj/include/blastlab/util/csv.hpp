#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace blastlab::csv {

// Shortest round-trippable-enough text for analysis tables; NaN becomes an
// empty field.
std::string fmt(double v, int precision = 10);
std::string escape(const std::string& field);

class Writer {
 public:
  // `configNote`, when non-empty, is written as a leading "# config=" line.
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header,
         const std::string& configNote = "");
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  // text after '#', in order

  // Column index; throws DataError when missing.
  int column(const std::string& name) const;
};

// Reads a header plus rows. Lines starting with '#' are comments. Throws
// DataError on ragged rows or unreadable files.
Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

double to_double(const std::string& field, const std::string& what);
long to_long(const std::string& field, const std::string& what);

}  // namespace blastlab::csv
