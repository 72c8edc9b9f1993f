#include "otter/io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "otter/error.h"

namespace otter {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitCells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(Trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool ParseDouble(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (*b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path + " for reading");
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  return out;
}

void Finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

json ReadJson(const std::string& path) {
  std::ifstream in = OpenIn(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

std::vector<double> JsonNumbers(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw Error(ErrorCode::kParseError, what + " must be an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw Error(ErrorCode::kParseError, what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Matrix parse_csv_matrix(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::vector<std::string> cells = SplitCells(line);
    std::vector<double> values(cells.size());
    std::size_t bad = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!ParseDouble(cells[c], values[c])) {
        bad = c;
        break;
      }
    }
    if (bad < cells.size()) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw Error(ErrorCode::kParseError,
                  source + ": row " + std::to_string(line_no) + ", column " +
                      std::to_string(bad + 1) + ": '" + cells[bad] + "' is not a number");
    }
    first = false;
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(ErrorCode::kParseError,
                  source + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(values.size()) + " columns, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::kParseError, source + ": no numeric rows");
  return Matrix::FromRows(rows);
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in = OpenIn(path);
  return parse_csv_matrix(in, path);
}

ScoreMatrix read_scores(const std::string& path) { return validate_scores(read_csv_matrix(path)); }

void write_scores(const ScoreMatrix& s, const std::string& path) {
  std::ofstream out = OpenOut(path);
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.k(); ++j) out << (j ? "," : "") << format_double(s(i, j));
    out << '\n';
  }
  Finish(out, path);
}

LabelDistribution read_distribution(const std::string& path) {
  std::ifstream in = OpenIn(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string trimmed = Trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, path + ": " + e.what());
    }
    if (!j.contains("probs")) throw Error(ErrorCode::kParseError, path + ": missing \"probs\"");
    return LabelDistribution::Create(JsonNumbers(j["probs"], path + ": probs"));
  }
  std::istringstream csv(text);
  const Matrix m = parse_csv_matrix(csv, path);
  if (m.rows() != 1) {
    throw Error(ErrorCode::kParseError, path + ": expected one row of probabilities");
  }
  return LabelDistribution::Create(std::vector<double>(m.row(0).begin(), m.row(0).end()));
}

void write_distribution(const LabelDistribution& nu, std::ostream& out) {
  for (std::size_t j = 0; j < nu.k(); ++j) out << (j ? "," : "") << format_double(nu[j]);
  out << '\n';
}

void write_distribution(const LabelDistribution& nu, const std::string& path) {
  std::ofstream out = OpenOut(path);
  write_distribution(nu, out);
  Finish(out, path);
}

void write_predictions(const Predictions& p, std::ostream& out) {
  out << "index,label\n";
  for (std::size_t i = 0; i < p.n(); ++i) out << i + 1 << ',' << p.labels[i] + 1 << '\n';
}

void write_predictions(const Predictions& p, const std::string& path) {
  std::ofstream out = OpenOut(path);
  write_predictions(p, out);
  Finish(out, path);
}

Predictions read_labels(const std::string& path, std::size_t k) {
  const Matrix m = read_csv_matrix(path);
  if (m.cols() != 1 && m.cols() != 2) {
    throw Error(ErrorCode::kParseError, path + ": expected a label column or index,label pairs");
  }
  const std::size_t col = m.cols() - 1;
  Predictions p;
  p.method = Method::kTruth;
  int largest = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double v = m(i, col);
    if (v != std::floor(v) || v < 1.0 || v > 1e9) {
      throw Error(ErrorCode::kParseError,
                  path + ": label " + format_double(v) + " on data row " + std::to_string(i + 1) +
                      " is not a positive integer");
    }
    p.labels.push_back(static_cast<int>(v) - 1);
    largest = std::max(largest, static_cast<int>(v));
  }
  p.k = k ? k : static_cast<std::size_t>(largest);
  p.Validate();
  return p;
}

StoredReweight read_reweight(const std::string& path) {
  const json j = ReadJson(path);
  if (!j.is_object() || !j.contains("r")) {
    throw Error(ErrorCode::kParseError, path + ": expected an object with \"r\"");
  }
  StoredReweight out;
  out.r = ReweightVector::Create(JsonNumbers(j["r"], path + ": r"));
  if (j.contains("k") && (!j["k"].is_number_integer() || j["k"].get<std::size_t>() != out.r.k())) {
    throw Error(ErrorCode::kParseError, path + ": \"k\" does not match the length of \"r\"");
  }
  if (j.contains("temperature")) {
    if (!j["temperature"].is_number() || !(j["temperature"].get<double>() > 0.0)) {
      throw Error(ErrorCode::kParseError, path + ": temperature must be a positive number");
    }
    out.temperature = j["temperature"].get<double>();
  }
  return out;
}

void write_reweight(const ReweightVector& r, double temperature, std::ostream& out) {
  // Hand-written so numbers keep their shortest round-trip text.
  out << "{\"k\": " << r.k() << ", \"r\": [";
  for (std::size_t j = 0; j < r.k(); ++j) out << (j ? ", " : "") << format_double(r[j]);
  out << ']';
  if (temperature != 1.0) out << ", \"temperature\": " << format_double(temperature);
  out << "}\n";
}

void write_reweight(const ReweightVector& r, double temperature, const std::string& path) {
  std::ofstream out = OpenOut(path);
  write_reweight(r, temperature, out);
  Finish(out, path);
}

Hierarchy read_hierarchy(const std::string& path, std::size_t k) {
  const json j = ReadJson(path);
  if (!j.is_object() || !j.contains("groups") || !j["groups"].is_array()) {
    throw Error(ErrorCode::kParseError, path + ": expected {\"groups\": [[...], ...]}");
  }
  std::vector<std::vector<int>> groups;
  for (const auto& g : j["groups"]) {
    if (!g.is_array()) throw Error(ErrorCode::kParseError, path + ": each group must be an array");
    std::vector<int> members;
    for (const auto& v : g) {
      if (!v.is_number_integer()) {
        throw Error(ErrorCode::kParseError, path + ": subclass indices must be integers");
      }
      members.push_back(v.get<int>() - 1);
    }
    groups.push_back(std::move(members));
  }
  return Hierarchy::Create(std::move(groups), k);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "tv_distance,method,noise_kind,noise_level,seed,accuracy\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.tv_distance) << ',' << r.method << ',' << r.noise_kind << ','
        << format_double(r.noise_level) << ',' << r.seed << ',' << format_double(r.accuracy)
        << '\n';
  }
}

}  // namespace otter
