#include <gtest/gtest.h>

#include <fstream>

#include "fpclust/image_io.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

using namespace fpclust;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// 16x16 ASCII PGM with values 0..255 in raster order.
std::string ascending_p2() {
  std::string s = "P2\n# ascending ramp\n16 16\n255\n";
  for (int v = 0; v < 256; ++v) s += std::to_string(v) + (v % 16 == 15 ? "\n" : " ");
  return s;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArg;
}

}  // namespace

TEST(ImageIo, AsciiRampDecodesByHand) {
  ScratchDir dir("io_ramp");
  write_file(dir / "a.pgm", ascending_p2());
  write_file(dir / "manifest.csv", "id,path,label\nimg1,a.pgm,2\nimg2,a.pgm,1\n");
  const Dataset ds = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(ds.size(), 2u);
  const auto& px = ds.images[0].pixels;
  ASSERT_EQ(px.rows(), 16);
  ASSERT_EQ(px.cols(), 16);
  EXPECT_EQ(px(0, 0), 0.0);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) EXPECT_DOUBLE_EQ(px(r, c), (16 * r + c) / 255.0);
  EXPECT_EQ((*ds.labels)[0], 2);
}

TEST(ImageIo, BinaryRoundTripWithinHalfStep) {
  ScratchDir dir("io_round");
  Eigen::MatrixXd px = oracle::random_normal(7, 9, 3).array() * 0.4 + 0.5;  // some values leave [0,1]
  write_pgm(px, dir / "x.pgm");
  const Eigen::MatrixXd back = read_pgm(dir / "x.pgm");
  const Eigen::MatrixXd clamped = px.cwiseMax(0.0).cwiseMin(1.0);
  EXPECT_LE((back - clamped).cwiseAbs().maxCoeff(), 1.0 / (2 * 255) + 1e-12);
}

TEST(ImageIo, BinaryRasterMatchesHandEncoding) {
  ScratchDir dir("io_p5");
  std::string s = "P5\n# c\n3 2\n255\n";
  s += std::string{'\x00', '\x80', '\xff', '\x01', '\x02', '\x03'};
  write_file(dir / "b.pgm", s);
  const auto px = read_pgm(dir / "b.pgm");
  ASSERT_EQ(px.rows(), 2);
  ASSERT_EQ(px.cols(), 3);
  EXPECT_DOUBLE_EQ(px(0, 1), 128 / 255.0);
  EXPECT_DOUBLE_EQ(px(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(px(1, 2), 3 / 255.0);
}

TEST(ImageIo, RoundingIsHalfUp) {
  EXPECT_EQ(to_byte(0.5), 128);
  EXPECT_EQ(to_byte(0.0), 0);
  EXPECT_EQ(to_byte(1.0), 255);
  EXPECT_EQ(to_byte(-0.2), 0);
  EXPECT_EQ(to_byte(1.7), 255);
}

TEST(ImageIo, RejectsOtherMaxval) {
  ScratchDir dir("io_maxval");
  write_file(dir / "m.pgm", "P2\n2 2\n15\n0 1 2 3\n");
  EXPECT_EQ(kind_of([&] { read_pgm(dir / "m.pgm"); }), ErrorKind::UnsupportedFormat);
}

TEST(ImageIo, RejectsOtherMagic) {
  ScratchDir dir("io_magic");
  write_file(dir / "m.ppm", "P6\n2 2\n255\n");
  EXPECT_EQ(kind_of([&] { read_pgm(dir / "m.ppm"); }), ErrorKind::UnsupportedFormat);
}

TEST(ImageIo, MissingImageFile) {
  ScratchDir dir("io_missing");
  write_file(dir / "manifest.csv", "id,path\nimg1,nope.pgm\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "manifest.csv"); }), ErrorKind::MissingFile);
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "absent.csv"); }), ErrorKind::MissingFile);
}

TEST(ImageIo, MixedSizesAreDimensionMismatch) {
  ScratchDir dir("io_dims");
  write_pgm(Eigen::MatrixXd::Constant(4, 4, 0.5), dir / "a.pgm");
  write_pgm(Eigen::MatrixXd::Constant(5, 4, 0.5), dir / "b.pgm");
  write_file(dir / "manifest.csv", "id,path\na,a.pgm\nb,b.pgm\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "manifest.csv"); }), ErrorKind::DimensionMismatch);
}

TEST(ImageIo, ManifestOrderAndBom) {
  ScratchDir dir("io_order");
  const std::vector<std::string> ids{"zeta", "alpha", "mid", "b"};
  std::string manifest = "\xEF\xBB\xBFid,path\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    write_pgm(Eigen::MatrixXd::Constant(3, 3, i / 4.0), dir / (ids[i] + ".pgm"));
    manifest += ids[i] + "," + ids[i] + ".pgm\n";
  }
  write_file(dir / "manifest.csv", manifest);
  const Dataset ds = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(ds.size(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ds.images[i].id, ids[i]);
  EXPECT_FALSE(ds.labels.has_value());
  EXPECT_EQ(ds.find("mid"), 2u);
  EXPECT_FALSE(ds.find("nope").has_value());
}

TEST(ImageIo, MalformedManifestRows) {
  ScratchDir dir("io_bad");
  write_pgm(Eigen::MatrixXd::Constant(3, 3, 0.5), dir / "a.pgm");
  write_file(dir / "h.csv", "name,file\na,a.pgm\n");
  write_file(dir / "l.csv", "id,path,label\na,a.pgm,0\nb,a.pgm,1\n");
  write_file(dir / "f.csv", "id,path\na,a.pgm,3\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "h.csv"); }), ErrorKind::MalformedManifest);
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "l.csv"); }), ErrorKind::MalformedManifest);
  EXPECT_EQ(kind_of([&] { load_manifest(dir / "f.csv"); }), ErrorKind::MalformedManifest);
}

TEST(ImageIo, GridValidation) {
  EXPECT_EQ(kind_of([] { ImageGrid{"x", Eigen::MatrixXd::Zero(1, 5)}.validate(); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { ImageGrid{"x", Eigen::MatrixXd::Constant(2, 2, 1.5)}.validate(); }), ErrorKind::InvalidArg);
}

TEST(ErrorKinds, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::InvalidConfig), 2);
  EXPECT_EQ(exit_code(ErrorKind::MissingFile), 3);
  EXPECT_EQ(exit_code(ErrorKind::DimensionMismatch), 3);
  EXPECT_EQ(exit_code(ErrorKind::RankDeficient), 4);
  EXPECT_EQ(exit_code(ErrorKind::NumericalFailure), 4);
}
