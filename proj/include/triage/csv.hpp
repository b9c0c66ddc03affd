#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace triage {

// Minimal RFC-4180-ish CSV support: comma separator, double-quote quoting,
// "" escapes inside quoted fields, LF or CRLF line ends. Enough for the
// on-disk schemas this project defines; not a general-purpose parser.

struct CsvRow {
  int line = 0; // 1-based line number in the source file
  std::vector<std::string> fields;
};

class CsvReader {
public:
  // Throws DataError when the file cannot be opened.
  explicit CsvReader(const std::filesystem::path &path);

  // Header as read from the first line. Empty file -> empty header.
  const std::vector<std::string> &header() const { return header_; }

  // Column index lookup; returns -1 when absent.
  int column(const std::string &name) const;

  // Reads the next data row. Returns false at end of file.
  bool next(CsvRow &row);

private:
  std::ifstream in_;
  std::string pending_;
  int line_ = 0;
  std::vector<std::string> header_;
  std::unordered_map<std::string, int> index_;

  bool read_record(std::vector<std::string> &fields);
};

class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path &path);

  void write_row(const std::vector<std::string> &fields);

private:
  std::ofstream out_;
};

std::string csv_escape(const std::string &field);

} // namespace triage
