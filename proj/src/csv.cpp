#include "triage/csv.hpp"

#include "triage/errors.hpp"

namespace triage {

CsvReader::CsvReader(const std::filesystem::path &path) : in_(path) {
  if (!in_)
    throw DataError("cannot open file: " + path.string());
  std::vector<std::string> fields;
  if (read_record(fields)) {
    header_ = fields;
    for (size_t i = 0; i < header_.size(); ++i)
      index_.emplace(header_[i], static_cast<int>(i));
  }
}

int CsvReader::column(const std::string &name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

bool CsvReader::next(CsvRow &row) {
  row.fields.clear();
  if (!read_record(row.fields))
    return false;
  row.line = line_;
  return true;
}

bool CsvReader::read_record(std::vector<std::string> &fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in_, line))
    return false;
  ++line_;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();

  std::string field;
  bool quoted = false;
  size_t i = 0;
  while (true) {
    if (i >= line.size()) {
      if (quoted) {
        // Embedded newline inside a quoted field: pull the next line.
        if (!std::getline(in_, line)) {
          fields.push_back(field);
          return true; // tolerate missing closing quote at EOF
        }
        ++line_;
        if (!line.empty() && line.back() == '\r')
          line.pop_back();
        field.push_back('\n');
        i = 0;
        continue;
      }
      fields.push_back(field);
      return true;
    }
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
      ++i;
    } else {
      field.push_back(c);
      ++i;
    }
  }
}

CsvWriter::CsvWriter(const std::filesystem::path &path) : out_(path) {
  if (!out_)
    throw DataError("cannot open file for writing: " + path.string());
}

std::string csv_escape(const std::string &field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote)
    return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"')
      out += "\"\"";
    else
      out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void CsvWriter::write_row(const std::vector<std::string> &fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i)
      out_.put(',');
    out_ << csv_escape(fields[i]);
  }
  out_.put('\n');
}

} // namespace triage
