#include <sstream>

#include "qrshape/dataset.hpp"
#include "qrshape/error.hpp"
#include "support.hpp"

using namespace qrshape;
using namespace qrshape::test;

namespace {

int parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_landmark_csv(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("reading landmark files") {
  std::istringstream in(
      "# triangles\n"
      "N,K\n"
      "3,2\n"
      "id,group,x1,y1,x2,y2,x3,y3\n"
      "\n"
      "t1,A,0,0,1,0,0,1\n"
      "t2, B ,0,0,2,0,0,1.5e0\n"
      "# trailing comment\n"
      "t3,A,1,1,2,1,1,3\n");
  const LandmarkDataset d = read_landmark_csv(in);
  CHECK(d.dims == Dims(3, 2));
  REQUIRE(d.specimens.size() == 3);
  CHECK(d.specimens[1].id == "t2");
  CHECK(d.specimens[1].group == "B");
  CHECK(d.specimens[1].X.data()(2, 1) == 1.5);
  CHECK(d.specimens[0].X.data()(1, 0) == 1.0);
  CHECK(d.groups() == std::vector<std::string>{"A", "B"});

  std::istringstream bare("3,1\ns1,g,0,1,3\n");
  CHECK(read_landmark_csv(bare).dims == Dims(3, 1));
}

TEST_CASE("malformed landmark files report the offending line") {
  CHECK(parse_error_line("") == 1);
  CHECK(parse_error_line("N,K\n") == 2);
  CHECK(parse_error_line("3\n") == 1);
  CHECK(parse_error_line("N,K\n1,2\n") == 2);
  CHECK(parse_error_line("3,2\na,A,0,0,1,0,0,1\nb,A,0,0,1,0,0\n") == 3);
  CHECK(parse_error_line("3,2\na,A,0,0,1,0,0,x\n") == 2);
  CHECK(parse_error_line("3,2\n# c\n\na,A,0,0,1,0,0,nan\n") == 4);
  CHECK(parse_error_line("3,2\n,A,0,0,1,0,0,1\n") == 2);
  CHECK(parse_error_line("3,2\na,,0,0,1,0,0,1\n") == 2);
  CHECK(parse_error_line("3,2\nid,group\n") == 2);
  CHECK_THROWS_AS(load_landmark_csv("/nonexistent/landmarks.csv"), IoError);
}

TEST_CASE("landmark files round-trip exactly") {
  std::mt19937_64 rng(1);
  LandmarkDataset d{Dims(4, 3), {}};
  for (int i = 0; i < 5; ++i)
    d.specimens.push_back({"s" + std::to_string(i), i < 2 ? "x" : "y", LandmarkConfiguration(random_matrix(rng, 4, 3))});
  std::stringstream buf;
  write_landmark_csv(buf, d);
  const LandmarkDataset back = read_landmark_csv(buf);
  REQUIRE(back.specimens.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(back.specimens[i].id == d.specimens[i].id);
    CHECK(back.specimens[i].group == d.specimens[i].group);
    CHECK(back.specimens[i].X.data() == d.specimens[i].X.data());
  }
}

TEST_CASE("matrix files") {
  std::istringstream in("# Theta\n2, 0.5\n0.5,1\n");
  const Matrix m = read_matrix_csv(in);
  CHECK(m == Matrix{{2.0, 0.5}, {0.5, 1.0}});
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), ParseError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_matrix_csv(empty), ParseError);
}

TEST_CASE("shape extraction over a dataset") {
  std::istringstream in(
      "4,2\n"
      "a,G,0,0,1,0,1,1,0,1.2\n"
      "b,G,5,-3,6,-3,6,-2,5,-1.8\n"
      "c,H,0,0,2,0,2,2,0,2.4\n");
  const LandmarkDataset d = read_landmark_csv(in);
  const auto shapes = extract_dataset(d, Matrix::Identity(2, 2), ReflectionMode::IncludesReflection);
  REQUIRE(shapes.size() == 3);
  // Translated and scaled copies share the shape.
  CHECK(max_abs_diff(shapes[1].shape.W, shapes[0].shape.W) < 1e-12);
  CHECK(max_abs_diff(shapes[2].shape.W, shapes[0].shape.W) < 1e-12);
  CHECK(shapes[2].shape.r == doctest::Approx(2 * shapes[0].shape.r));

  std::ostringstream out;
  write_shape_csv(out, shapes);
  std::istringstream lines(out.str());
  std::string header, row0, row1;
  std::getline(lines, header);
  std::getline(lines, row0);
  std::getline(lines, row1);
  CHECK(header == "id,group,r,w1,w2,w3,w4,w5,u1,u2,u3,u4");
  // Same row up to roundoff, apart from id and size.
  std::istringstream m0(row0), m1(row1);
  std::string a, b;
  for (int field = 0; std::getline(m0, a, ',') && std::getline(m1, b, ','); ++field)
    if (field >= 3) CHECK(std::stod(a) == doctest::Approx(std::stod(b)).epsilon(1e-12));
  CHECK(sample_of(shapes, d.dims).size() == 3);
  CHECK(sample_of(shapes, d.dims, std::string("H")).size() == 1);
  CHECK_THROWS_AS(sample_of(shapes, d.dims, std::string("Q")), DimensionError);
  CHECK_THROWS_AS(extract_dataset(d, Matrix::Identity(3, 3), ReflectionMode::IncludesReflection), DimensionError);

  std::istringstream degenerate("3,2\nz,G,0,0,1,1,2,2\n");
  CHECK_THROWS_AS(extract_dataset(read_landmark_csv(degenerate), Matrix::Identity(2, 2),
                                  ReflectionMode::IncludesReflection),
                  DegenerateConfigurationError);
}
