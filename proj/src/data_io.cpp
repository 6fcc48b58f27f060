#include "fsc/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "fsc/error.hpp"

namespace fsc {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Reads one RFC-4180 record; quoted fields may contain delimiters, doubled
// quotes and line breaks. Returns false at end of input.
bool read_record(std::istream& in, char delim, std::vector<std::string>& fields, long& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c = 0;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get(c);
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool is_blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

std::size_t resolve_column(const std::string& token, const std::vector<std::string>& names,
                           std::size_t width) {
  const std::string t = trim(token);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == t) return i;
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
  if (!t.empty() && ec == std::errc() && ptr == t.data() + t.size() && idx < width) return idx;
  throw Error(ErrorKind::schema, "unknown column '" + t + "'");
}

bool parse_bool(const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw Error(ErrorKind::schema, "expected a boolean, got '" + t + "'");
}

}  // namespace

DatasetSchema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open schema file " + path);
  DatasetSchema schema;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::schema, "expected key=value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "class_col") {
      schema.class_column = value;
    } else if (key == "feature_cols") {
      schema.feature_columns.clear();
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const auto comma = value.find(',', pos);
        schema.feature_columns.push_back(trim(value.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } else if (key == "delimiter") {
      schema.delimiter = value == "\\t" || value == "tab" ? '\t' : value.empty() ? ',' : value[0];
    } else if (key == "header") {
      schema.header = parse_bool(value);
    } else if (key == "standardize") {
      schema.standardize = parse_bool(value);
    } else {
      throw Error(ErrorKind::schema, "unknown schema key '" + key + "'");
    }
  }
  return schema;
}

Dataset read_csv(std::istream& in, const DatasetSchema& schema) {
  if (schema.class_column.empty()) throw Error(ErrorKind::schema, "no class column given");
  std::vector<std::string> fields;
  std::vector<std::string> names;
  long line_no = 0;
  std::size_t width = 0;

  if (schema.header) {
    do {
      if (!read_record(in, schema.delimiter, fields, line_no)) {
        throw Error(ErrorKind::parse, "file is empty");
      }
    } while (is_blank(fields));
    for (auto& f : fields) names.push_back(trim(f));
    width = names.size();
  }

  std::vector<std::vector<std::string>> records;
  std::vector<long> record_lines;
  while (read_record(in, schema.delimiter, fields, line_no)) {
    if (is_blank(fields)) continue;
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(width) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    records.push_back(fields);
    record_lines.push_back(line_no);
  }
  if (records.empty()) throw Error(ErrorKind::parse, "no data rows");

  const std::size_t class_idx = resolve_column(schema.class_column, names, width);
  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < width; ++i) {
      if (i != class_idx) feature_idx.push_back(i);
    }
  } else {
    for (const auto& f : schema.feature_columns) {
      const std::size_t idx = resolve_column(f, names, width);
      if (idx == class_idx) {
        throw Error(ErrorKind::schema, "column '" + f + "' is both a feature and the class");
      }
      feature_idx.push_back(idx);
    }
  }
  if (feature_idx.empty()) throw Error(ErrorKind::schema, "no feature columns selected");

  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(feature_idx.size()));
  for (const std::size_t idx : feature_idx) {
    out.feature_names.push_back(names.empty() ? std::to_string(idx) : names[idx]);
  }
  std::unordered_map<std::string, int> class_ids;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (std::size_t c = 0; c < feature_idx.size(); ++c) {
      const std::string cell = trim(rec[feature_idx[c]]);
      const std::string where = "line " + std::to_string(record_lines[r]) + ", column '" +
                                out.feature_names[c] + "'";
      if (cell.empty() || cell == "NA" || cell == "NaN") {
        throw Error(ErrorKind::parse, "missing value at " + where);
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::parse, "non-numeric value '" + cell + "' at " + where);
      }
      out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    const std::string label = trim(rec[class_idx]);
    if (label.empty() || label == "NA") {
      if (!schema.allow_unlabelled) {
        throw Error(ErrorKind::parse, "missing class at line " + std::to_string(record_lines[r]));
      }
      out.truth.push_back(-1);
      continue;
    }
    const auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(class_ids.size()));
    if (inserted) out.class_names.push_back(label);
    out.truth.push_back(it->second);
  }
  if (schema.standardize) standardize_columns(out.x);
  return out;
}

Dataset load_csv(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::input, "cannot open data file " + path);
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& class_column, char delimiter) {
  const auto quote = [&](const std::string& s) {
    if (s.find_first_of(std::string("\"\n") + delimiter) == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  for (const auto& name : data.feature_names) out << quote(name) << delimiter;
  out << quote(class_column) << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.x.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, data.x(r, c));
      out.write(buf, res.ptr - buf);
      out << delimiter;
    }
    const int t = data.truth[static_cast<std::size_t>(r)];
    if (t >= 0) out << quote(data.class_names[static_cast<std::size_t>(t)]);
    out << '\n';
  }
}

void standardize_columns(Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) return;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    x.col(c).array() -= mean;
    const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0.0) x.col(c) /= sd;
  }
}

}  // namespace fsc
