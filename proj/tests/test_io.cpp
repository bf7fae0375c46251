#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "holoseis/config.hpp"
#include "holoseis/errors.hpp"
#include "holoseis/io.hpp"

using namespace holoseis;
namespace fs = std::filesystem;

TEST(GridMatrix, StreamRoundTripKeepsKindAndBits) {
  std::srand(4);
  const CMatrix m = CMatrix::Random(5, 3);
  std::stringstream ss;
  io::write_matrix(ss, m, io::MatrixKind::kernel);
  io::MatrixKind kind = io::MatrixKind::generic;
  const CMatrix back = io::read_matrix(ss, &kind);
  EXPECT_TRUE(back == m);
  EXPECT_EQ(kind, io::MatrixKind::kernel);
}

TEST(GridMatrix, HeaderLayout) {
  std::stringstream ss;
  io::write_matrix(ss, CMatrix::Constant(2, 1, cplx(1.0, -2.0)), io::MatrixKind::field);
  const std::string s = ss.str();
  ASSERT_EQ(s.size(), 8u + 4 + 4 + 8 + 8 + 2 * 16);
  EXPECT_EQ(s.substr(0, 8), "HOLOSGMX");
  EXPECT_EQ(static_cast<unsigned char>(s[8]), io::kFormatVersion);
  EXPECT_EQ(static_cast<unsigned char>(s[12]), 2);  // field
  EXPECT_EQ(static_cast<unsigned char>(s[16]), 2);  // rows
  EXPECT_EQ(static_cast<unsigned char>(s[24]), 1);  // cols
}

TEST(GridMatrix, RejectsCorruptInput) {
  std::stringstream bad("NOTAGRID........");
  EXPECT_THROW(io::read_matrix(bad), IoError);
  std::stringstream ss;
  io::write_matrix(ss, CMatrix::Ones(4, 4));
  std::string s = ss.str();
  s.resize(s.size() - 5);
  std::stringstream cut(s);
  EXPECT_THROW(io::read_matrix(cut), IoError);
  EXPECT_THROW(io::load_matrix("/nonexistent/dir/file.hsgm"), IoError);
}

TEST(GridMatrix, FileRoundTrip) {
  const auto path = (fs::temp_directory_path() / "holoseis_io_test.hsgm").string();
  std::srand(5);
  const CMatrix m = CMatrix::Random(7, 2);
  io::save_matrix(path, m, io::MatrixKind::hologram);
  io::MatrixKind kind;
  EXPECT_TRUE(io::load_matrix(path, &kind) == m);
  EXPECT_EQ(kind, io::MatrixKind::hologram);
  fs::remove(path);
}

TEST(Csv, HeaderAndRoundTripPrecision) {
  const auto path = (fs::temp_directory_path() / "holoseis_io_test.csv").string();
  const double x = 0.1 + 0.2;
  io::write_csv(path, {"a", "b"}, {{x, -1.0 / 3.0}, {1e-300, 2.0}});
  std::ifstream is(path);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "a,b");
  const auto comma = row.find(',');
  EXPECT_EQ(std::stod(row.substr(0, comma)), x);
  EXPECT_EQ(std::stod(row.substr(comma + 1)), -1.0 / 3.0);
  fs::remove(path);
}

TEST(Config, DefaultsAndRoundTrip) {
  const ExperimentConfig c = parse_config(R"({
    "name": "rt",
    "geometry": {"half_width": 0.3, "points_per_wavelength": 9, "receivers": 20, "receiver_radius": 0.5},
    "medium": {"gamma0": 0.2},
    "truth": [{"quantity": "c", "shape": "block", "amplitude": 0.05, "center": [0.1, 0.0], "half_width": 0.05}],
    "band": {"count": 3, "min": 4.5, "max": 5.0},
    "realizations": 50,
    "hologram": {"pupil": [0, 2, 4]},
    "kernels": {"pairs": [["c", "gamma"]], "targets": [[0.0, 0.1]]},
    "inversion": {"quantities": ["c"], "alpha0_rel": 0.01, "max_outer": 4}
  })");
  EXPECT_EQ(c.n_receivers, 20);
  EXPECT_EQ(c.rho0, 1.0);
  EXPECT_EQ(c.band.frequencies(), (std::vector<double>{4.5, 4.75, 5.0}));
  ASSERT_EQ(c.truth.size(), 1u);
  EXPECT_EQ(c.truth[0].shape, Shape::block);
  EXPECT_EQ(c.pupil, (std::vector<int>{0, 2, 4}));
  EXPECT_EQ(c.kernel_pairs[0][1], Quantity::gamma);
  EXPECT_EQ(c.inversion.max_outer, 4);
  const ExperimentConfig again = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
  EXPECT_EQ(config_hash(again), config_hash(c));
  ExperimentConfig moved = c;
  moved.output_dir = "elsewhere";
  moved.workers = 4;
  EXPECT_EQ(config_hash(moved), config_hash(c));
  moved.seed = 99;
  EXPECT_NE(config_hash(moved), config_hash(c));
}

TEST(Config, RejectsInvalidDocuments) {
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometri": {}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"points_per_wavelength": 5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"receivers": 1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"receiver_radius": 0.3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"truth": [{"quantity": "pressure", "half_width": 0.1}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"band": {"count": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"realizations": "many"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"beta_mode": "approximate"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"hologram": {"pupil": [99]}})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
