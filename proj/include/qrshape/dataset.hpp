#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qrshape/inference.hpp"

namespace qrshape {

struct Specimen {
  std::string id;
  std::string group;
  LandmarkConfiguration X;
};

/// Landmark CSV: first non-comment line "N,K"; an optional column header
/// starting with "id"; then one record per specimen:
///   id,group,x_11,x_12,...,x_1K,x_21,...,x_NK   (landmarks row by row)
/// Lines starting with '#' and blank lines are ignored.
struct LandmarkDataset {
  Dims dims;
  std::vector<Specimen> specimens;

  /// Group labels in order of first appearance.
  std::vector<std::string> groups() const;
};

LandmarkDataset read_landmark_csv(std::istream& in);
LandmarkDataset load_landmark_csv(const std::string& path);
void write_landmark_csv(std::ostream& out, const LandmarkDataset& data);

/// Plain numeric matrix, one row per line.
Matrix read_matrix_csv(std::istream& in);
Matrix load_matrix_csv(const std::string& path);

struct ShapeRecord {
  std::string id;
  std::string group;
  ShapeCoordinates shape;
};

std::vector<ShapeRecord> extract_dataset(const LandmarkDataset& data, const Matrix& theta,
                                         ReflectionMode mode);
/// Header id,group,r,w1..w_{m+1},u1..u_m with w in vech order.
void write_shape_csv(std::ostream& out, const std::vector<ShapeRecord>& records);

/// Observations of one group, or all of them.
Sample sample_of(const std::vector<ShapeRecord>& records, const Dims& dims,
                 const std::optional<std::string>& group = std::nullopt);

}  // namespace qrshape
