#include "qrshape/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ParseError("not a number: '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value: '" + s + "'", line);
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ParseError("not an integer: '" + s + "'", line);
  return v;
}

// Next non-blank, non-comment line; false at end of input.
bool next_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    line = t;
    return true;
  }
  return false;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::vector<std::string> LandmarkDataset::groups() const {
  std::vector<std::string> out;
  for (const auto& s : specimens)
    if (std::find(out.begin(), out.end(), s.group) == out.end()) out.push_back(s.group);
  return out;
}

LandmarkDataset read_landmark_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!next_line(in, line, lineno)) throw ParseError("empty file, expected header N,K", lineno + 1);
  auto head = split(line);
  if (head.size() == 2 && head[0] == "N" && head[1] == "K") {
    if (!next_line(in, line, lineno)) throw ParseError("missing N,K values", lineno + 1);
    head = split(line);
  }
  if (head.size() != 2) throw ParseError("header must be 'N,K'", lineno);
  const int N = parse_int(head[0], lineno), K = parse_int(head[1], lineno);
  if (N < 2 || K < 1) throw ParseError("need N >= 2 and K >= 1", lineno);

  LandmarkDataset data;
  data.dims = Dims(N, K);
  const std::size_t width = 2 + static_cast<std::size_t>(N) * K;
  bool first = true;
  while (next_line(in, line, lineno)) {
    const auto cells = split(line);
    if (first && !cells.empty() && cells[0] == "id") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields (id, group, " +
                           std::to_string(N * K) + " coordinates), found " +
                           std::to_string(cells.size()),
                       lineno);
    if (cells[0].empty()) throw ParseError("empty specimen id", lineno);
    if (cells[1].empty()) throw ParseError("empty group label", lineno);
    Matrix X(N, K);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < K; ++j) X(i, j) = parse_double(cells[2 + i * K + j], lineno);
    data.specimens.push_back({cells[0], cells[1], LandmarkConfiguration(std::move(X))});
  }
  if (data.specimens.empty()) throw ParseError("no specimen records", lineno);
  return data;
}

LandmarkDataset load_landmark_csv(const std::string& path) {
  auto in = open_input(path);
  return read_landmark_csv(in);
}

void write_landmark_csv(std::ostream& out, const LandmarkDataset& data) {
  const int N = data.dims.N, K = data.dims.K;
  out << "N,K\n" << N << ',' << K << "\nid,group";
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= K; ++j) out << ",x" << i << '_' << j;
  out << '\n' << std::setprecision(17);
  for (const auto& s : data.specimens) {
    out << s.id << ',' << s.group;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < K; ++j) out << ',' << s.X.data()(i, j);
    out << '\n';
  }
  if (!out) throw IoError("failed writing landmark CSV");
}

Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  while (next_line(in, line, lineno)) {
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(parse_double(c, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged matrix row", lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix", lineno + 1);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix load_matrix_csv(const std::string& path) {
  auto in = open_input(path);
  return read_matrix_csv(in);
}

std::vector<ShapeRecord> extract_dataset(const LandmarkDataset& data, const Matrix& theta,
                                         ReflectionMode mode) {
  if (theta.rows() != data.dims.K || theta.cols() != data.dims.K)
    throw DimensionError("Theta must be K x K");
  std::vector<ShapeRecord> out;
  out.reserve(data.specimens.size());
  for (const auto& s : data.specimens) {
    try {
      out.push_back({s.id, s.group, extract_shape(s.X, theta, mode)});
    } catch (const DegenerateConfigurationError& e) {
      throw DegenerateConfigurationError("specimen '" + s.id + "': " + e.what());
    }
  }
  return out;
}

void write_shape_csv(std::ostream& out, const std::vector<ShapeRecord>& records) {
  if (records.empty()) return;
  const Vector w0 = vech(records.front().shape.W);
  out << "id,group,r";
  for (Eigen::Index i = 1; i <= w0.size(); ++i) out << ",w" << i;
  for (Eigen::Index i = 1; i <= records.front().shape.u.size(); ++i) out << ",u" << i;
  out << '\n' << std::setprecision(17);
  for (const auto& r : records) {
    out << r.id << ',' << r.group << ',' << r.shape.r;
    const Vector w = vech(r.shape.W);
    for (Eigen::Index i = 0; i < w.size(); ++i) out << ',' << w(i);
    for (Eigen::Index i = 0; i < r.shape.u.size(); ++i) out << ',' << r.shape.u(i);
    out << '\n';
  }
  if (!out) throw IoError("failed writing shape CSV");
}

Sample sample_of(const std::vector<ShapeRecord>& records, const Dims& dims,
                 const std::optional<std::string>& group) {
  std::vector<ShapeCoordinates> obs;
  for (const auto& r : records)
    if (!group || r.group == *group) obs.push_back(r.shape);
  if (obs.empty())
    throw DimensionError(group ? "no specimens in group '" + *group + "'" : "no specimens");
  return Sample(std::move(obs), dims);
}

}  // namespace qrshape
