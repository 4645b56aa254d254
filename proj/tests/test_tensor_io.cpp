#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include "evcrowd/annotations.hpp"
#include "evcrowd/npy.hpp"
#include "oracles.hpp"

using namespace evcrowd;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evcrowd_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

// Hand-built NPY 1.0 container with a '<f4' payload.
std::string float32_npy(const std::string& shape, const std::vector<float>& values) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
  while ((10 + dict.size() + 1) % 16 != 0) dict.push_back(' ');
  dict.push_back('\n');
  std::string out = "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xFF));
  out.push_back(static_cast<char>(dict.size() >> 8));
  out += dict;
  for (float f : values) {
    auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  return out;
}

}  // namespace

using TensorIo = TempDir;

TEST_F(TensorIo, DensityMapRoundTrip) {
  DensityMap m(2, 2, {1, 2, 3, 4});
  write_array(m, dir_ / "m.npy");
  auto back = std::get<DensityMap>(read_array(dir_ / "m.npy"));
  ASSERT_EQ(back.height(), 2u);
  ASSERT_EQ(back.width(), 2u);
  EXPECT_EQ(back.at(0, 0), 1);
  EXPECT_EQ(back.at(0, 1), 2);
  EXPECT_EQ(back.at(1, 0), 3);
  EXPECT_EQ(back.at(1, 1), 4);

  write_array(DensityMap(1, 1, {0.5}), dir_ / "half.npy");
  EXPECT_EQ(read_density_map(dir_ / "half.npy").at(0, 0), 0.5);
}

TEST_F(TensorIo, StackRoundTripIsBitExact) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(3 * 8 * 8);
  for (auto& x : v) x = u(gen);
  RealizationStack s(3, 8, 8, v);
  auto bytes = encode_array(s);
  write_array(s, dir_ / "s.npy");
  auto back = read_stack(dir_ / "s.npy");
  EXPECT_EQ(back.sources(), 3u);
  ASSERT_EQ(back.values().size(), v.size());
  EXPECT_EQ(std::memcmp(back.values().data(), v.data(), v.size() * sizeof(double)), 0);
  // Re-encoding the decoded stack reproduces the same file bytes.
  EXPECT_EQ(encode_array(back), bytes);
  EXPECT_EQ(read_file(dir_ / "s.npy"), bytes);
}

TEST_F(TensorIo, EnsembleOfTenIsReadAsStack) {
  RealizationStack s(10, 64, 64, std::vector<double>(10 * 64 * 64, 0.25));
  write_array(s, dir_ / "ens.npy");
  auto payload = read_array(dir_ / "ens.npy");
  ASSERT_TRUE(std::holds_alternative<RealizationStack>(payload));
  EXPECT_EQ(std::get<RealizationStack>(payload).sources(), 10u);
}

TEST_F(TensorIo, HeaderIsAlignedAndNumpyCompatible) {
  auto bytes = encode_array(DensityMap(3, 5));
  auto header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0);
  EXPECT_NE(bytes.find("'descr': '<f8'"), std::string::npos);
  EXPECT_NE(bytes.find("'shape': (3, 5)"), std::string::npos);
  EXPECT_EQ(bytes[10 + header_len - 1], '\n');
}

TEST_F(TensorIo, ReadsFloat32Payload) {
  auto arr = npy::parse(float32_npy("(2, 2)", {0.25f, 1.5f, 3.0f, 0.125f}));
  EXPECT_EQ(arr.dtype, npy::DType::kFloat32);
  auto m = std::get<DensityMap>(to_payload(arr));
  EXPECT_EQ(m.at(0, 1), 1.5);
  EXPECT_EQ(m.at(1, 1), 0.125);
}

TEST_F(TensorIo, RejectsWrongRank) {
  EXPECT_THROW(to_payload(npy::parse(npy::serialize({4}, std::vector<double>(4, 0.0)))), RankError);
  EXPECT_THROW(to_payload(npy::parse(npy::serialize({1, 1, 1, 1}, std::vector<double>(1, 0.0)))),
               RankError);
  write_array(RealizationStack(2, 2, 2, std::vector<double>(8, 0.1)), dir_ / "s.npy");
  EXPECT_THROW(read_density_map(dir_ / "s.npy"), RankError);
}

TEST_F(TensorIo, MalformedHeaderReportsByteOffset) {
  auto good = npy::serialize({2, 2}, std::vector<double>(4, 1.0));
  auto bad_magic = good;
  bad_magic[1] = 'X';
  try {
    npy::parse(bad_magic);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 0"), std::string::npos) << e.what();
  }
  auto bad_descr = good;
  bad_descr.replace(bad_descr.find("<f8"), 3, ">i4");
  try {
    npy::parse(bad_descr);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 20"), std::string::npos) << e.what();
  }
  EXPECT_THROW(npy::parse(good.substr(0, good.size() - 3)), FormatError);
  EXPECT_THROW(npy::parse("\x93NUM"), FormatError);
  auto fortran = good;
  fortran.replace(fortran.find("False"), 5, "True ");
  EXPECT_THROW(npy::parse(fortran), FormatError);
}

TEST_F(TensorIo, NonFiniteValueNamesFirstIndex) {
  std::vector<double> v(6, 0.5);
  v[4] = std::numeric_limits<double>::quiet_NaN();
  v[5] = std::numeric_limits<double>::infinity();
  try {
    to_payload(npy::parse(npy::serialize({2, 3}, v)));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos) << e.what();
  }
}

TEST_F(TensorIo, RejectsEmptyMap) {
  EXPECT_THROW(DensityMap(0, 0), ShapeError);
  EXPECT_THROW(to_payload(npy::parse(npy::serialize({0, 0}, std::vector<double>{}))), ShapeError);
}

TEST_F(TensorIo, StackIngestClampsAndCounts) {
  std::vector<double> v{-0.2, 0.0, 0.3, 1.0, 1.7, 0.999};
  IngestReport report;
  auto s = std::get<RealizationStack>(to_payload(npy::parse(npy::serialize({2, 1, 3}, v)), &report));
  EXPECT_EQ(report.clamped, 2u);
  std::vector<double> want{0.0, 0.0, 0.3, 1.0, 1.0, 0.999};
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(s.values()[i], want[i]);
}

TEST_F(TensorIo, ClampingPropertyOnRandomStacks) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n(0.5, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(2 * 5 * 7);
    for (auto& x : v) x = n(gen);
    auto [s, count] = RealizationStack::clamped(2, 5, 7, v);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double got = s.values()[i];
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
      if (v[i] >= 0.0 && v[i] <= 1.0) {
        EXPECT_EQ(got, v[i]);
      } else {
        ++outside;
      }
    }
    EXPECT_EQ(count, outside);
  }
}

TEST_F(TensorIo, RoundTripPropertyOnRandomShapes) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t h = dim(gen), w = dim(gen);
    std::vector<double> v(h * w);
    for (auto& x : v) x = u(gen) * 1e3;
    DensityMap m(h, w, v);
    auto bytes = encode_array(m);
    auto back = std::get<DensityMap>(to_payload(npy::parse(bytes)));
    EXPECT_EQ(back.height(), h);
    EXPECT_EQ(back.width(), w);
    EXPECT_EQ(encode_array(back), bytes);
  }
}

TEST_F(TensorIo, UnwritablePathIsIoError) {
  EXPECT_THROW(write_array(DensityMap(1, 1), dir_ / "missing" / "dir" / "m.npy"), IoError);
  EXPECT_THROW(read_array(dir_ / "nope.npy"), IoError);
}

TEST_F(TensorIo, FailedWriteLeavesExistingFileUntouched) {
  write_array(DensityMap(1, 1, {0.5}), dir_ / "keep.npy");
  auto before = read_file(dir_ / "keep.npy");
  {
    StagedOutputs staged;
    staged.add(dir_ / "keep.npy", "garbage");
    // Destroyed without commit.
  }
  EXPECT_EQ(read_file(dir_ / "keep.npy"), before);
  std::size_t files = 0;
  for ([[maybe_unused]] auto& e : fs::directory_iterator(dir_)) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(Annotations, ParsesPointsAndDefaultsPerspective) {
  auto ann = parse_annotations(R"({"width":100,"height":100,"points":[[10,20]]})");
  ASSERT_EQ(ann.points.size(), 1u);
  EXPECT_EQ(ann.points[0], (HeadPoint{10, 20}));
  EXPECT_TRUE(ann.perspective.is_constant());
  EXPECT_EQ(ann.perspective.scale_at(0), 1.0);
  EXPECT_EQ(ann.perspective.scale_at(99), 1.0);
}

TEST(Annotations, PointOutsideImageNamesIndex) {
  try {
    parse_annotations(R"({"width":100,"height":100,"points":[[5,5],[120,20]]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("point 1"), std::string::npos) << e.what();
  }
}

TEST(Annotations, PerspectiveInterpolatesLinearly) {
  auto ann = parse_annotations(
      R"({"width":50,"height":100,"points":[],"perspective":{"rows":[0,50,100],"scale":[1.0,2.0,4.0]}})");
  EXPECT_DOUBLE_EQ(ann.perspective.scale_at(-5), 1.0);
  EXPECT_DOUBLE_EQ(ann.perspective.scale_at(25), 1.5);
  EXPECT_DOUBLE_EQ(ann.perspective.scale_at(50), 2.0);
  EXPECT_DOUBLE_EQ(ann.perspective.scale_at(75), 3.0);
  EXPECT_DOUBLE_EQ(ann.perspective.scale_at(200), 4.0);
}

TEST(Annotations, SchemaErrors) {
  EXPECT_THROW(parse_annotations(
                   R"({"width":10,"height":10,"points":[],"perspective":{"rows":[0,5,5],"scale":[1,1,1]}})"),
               SchemaError);
  EXPECT_THROW(parse_annotations(
                   R"({"width":10,"height":10,"points":[],"perspective":{"rows":[0,5],"scale":[1,-1]}})"),
               SchemaError);
  EXPECT_THROW(parse_annotations(R"({"width":10,"points":[]})"), SchemaError);
  EXPECT_THROW(parse_annotations(R"({"width":10,"height":10,"points":[[1]]})"), SchemaError);
  EXPECT_THROW(parse_annotations("not json"), SchemaError);
}

TEST(Annotations, SerializeParseRoundTrip) {
  HeadAnnotations ann;
  ann.width = 64;
  ann.height = 32;
  ann.points = {{1.25, 2.5}, {63.75, 31.0}};
  ann.perspective = PerspectiveProfile({0, 31}, {0.5, 2.0});
  auto back = parse_annotations(serialize_annotations(ann));
  EXPECT_EQ(back.points, ann.points);
  EXPECT_EQ(back.perspective.rows(), ann.perspective.rows());
  EXPECT_EQ(back.perspective.scales(), ann.perspective.scales());
}
