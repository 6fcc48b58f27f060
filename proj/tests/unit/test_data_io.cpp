#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fsc/data_io.hpp"
#include "error_kind.hpp"
#include "oracles.hpp"

using namespace fsc;
using Eigen::MatrixXd;

namespace {

Dataset parse(const std::string& text, DatasetSchema schema) {
  std::istringstream in(text);
  return read_csv(in, schema);
}

DatasetSchema by_class(const std::string& col) {
  DatasetSchema s;
  s.class_column = col;
  return s;
}

std::string data_file(const std::string& name) { return std::string(FSC_DATA_DIR) + "/" + name; }

}  // namespace

TEST(ReadCsv, BasicFile) {
  const Dataset d = parse("a,b,species\n1,2,x\n3,4.5,y\n-1e-3,6,x\n", by_class("species"));
  ASSERT_EQ(d.x.rows(), 3);
  ASSERT_EQ(d.x.cols(), 2);
  EXPECT_EQ(d.x(1, 1), 4.5);
  EXPECT_EQ(d.x(2, 0), -1e-3);
  EXPECT_EQ(d.truth, (Partition{0, 1, 0}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(ReadCsv, QuotedFieldsAndCrlf) {
  const Dataset d = parse("\"a\",\"b,c\",cls\r\n1,2,\"two words\"\r\n3,4,\"say \"\"hi\"\"\"\r\n", by_class("cls"));
  EXPECT_EQ(d.feature_names[1], "b,c");
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"two words", "say \"hi\""}));
  EXPECT_EQ(d.x(1, 1), 4.0);
}

TEST(ReadCsv, SelectColumnsByNameOrIndex) {
  DatasetSchema s = by_class("2");
  s.feature_columns = {"c", "0"};
  const Dataset d = parse("a,b,cls,c\n1,2,x,3\n4,5,y,6\n", s);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(d.x(1, 0), 6.0);
  EXPECT_EQ(d.x(1, 1), 4.0);

  DatasetSchema headerless = by_class("0");
  headerless.header = false;
  const Dataset h = parse("x,1,2\ny,3,4\n", headerless);
  EXPECT_EQ(h.x(1, 1), 4.0);
}

TEST(ReadCsv, Errors) {
  try {
    parse("a,b,cls\n1,2,x\n3,,y\n", by_class("cls"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { parse("a,cls\nfoo,x\n", by_class("cls")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([] { parse("a,cls\n1,x\n", by_class("label")); }), ErrorKind::schema);
  DatasetSchema s = by_class("cls");
  s.feature_columns = {"cls"};
  EXPECT_EQ(kind_of([&] { parse("a,cls\n1,x\n", s); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([] { parse("a,cls\n1,x,3\n", by_class("cls")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([] { parse("a,cls\n1,\n", by_class("cls")); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([] { load_csv("/nonexistent/file.csv", by_class("cls")); }), ErrorKind::input);
}

TEST(ReadCsv, EmptyClassCellsCanMeanUnlabelled) {
  DatasetSchema s = by_class("cls");
  s.allow_unlabelled = true;
  const Dataset d = parse("a,cls\n1,x\n2,\n3,y\n", s);
  EXPECT_EQ(d.truth, (Partition{0, -1, 1}));
}

TEST(WriteCsv, RoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  Dataset d;
  d.x = oracle::normal_matrix(rng, 40, 3) * 1e3;
  d.x(0, 0) = 1.0 / 3.0;
  d.x(1, 1) = 5e-320;
  d.feature_names = {"f1", "f,2", "f3"};
  d.class_names = {"a", "b"};
  for (int i = 0; i < 40; ++i) d.truth.push_back(i % 2);
  std::stringstream io;
  write_csv(io, d);
  const Dataset back = read_csv(io, by_class("class"));
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.truth, d.truth);
  EXPECT_EQ(back.feature_names, d.feature_names);
}

TEST(Standardize, ZeroMeanUnitVariance) {
  std::mt19937_64 rng(4);
  MatrixXd x = oracle::normal_matrix(rng, 50, 4) * 7.0;
  x.col(2).array() += 100.0;
  x.col(3).setConstant(2.5);
  standardize_columns(x);
  for (Eigen::Index c = 0; c < 3; ++c) {
    EXPECT_NEAR(x.col(c).mean(), 0.0, 1e-10);
    EXPECT_NEAR(x.col(c).squaredNorm() / 49.0, 1.0, 1e-10);
  }
  EXPECT_NEAR(x.col(3).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(SchemaFile, KeysAreParsed) {
  const auto path = std::filesystem::temp_directory_path() / "fsc_schema_test.txt";
  {
    std::ofstream f(path);
    f << "# comment\nclass_col = species\nfeature_cols = a, c\ndelimiter = ;\nheader = true\nstandardize = yes\n";
  }
  const DatasetSchema s = load_schema_file(path.string());
  EXPECT_EQ(s.class_column, "species");
  EXPECT_EQ(s.feature_columns, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(s.delimiter, ';');
  EXPECT_TRUE(s.standardize);
  {
    std::ofstream f(path);
    f << "colour = red\n";
  }
  EXPECT_EQ(kind_of([&] { load_schema_file(path.string()); }), ErrorKind::schema);
  std::filesystem::remove(path);
}

class BenchmarkFiles : public ::testing::Test {
 protected:
  Dataset load(const std::string& name) {
    if (!std::filesystem::exists(data_file(name))) {
      ADD_FAILURE() << data_file(name) << " is missing; run tools/fetch_datasets.py";
      return {};
    }
    return load_csv(data_file(name), by_class("class"));
  }
};

TEST_F(BenchmarkFiles, Iris) {
  const Dataset d = load("iris.csv");
  EXPECT_EQ(d.x.rows(), 150);
  EXPECT_EQ(d.x.cols(), 4);
  ASSERT_EQ(d.num_classes(), 3);
  for (int g = 0; g < 3; ++g) EXPECT_EQ(std::count(d.truth.begin(), d.truth.end(), g), 50);
}

TEST_F(BenchmarkFiles, Wine) {
  const Dataset d = load("wine.csv");
  EXPECT_EQ(d.x.rows(), 178);
  EXPECT_EQ(d.x.cols(), 13);
  EXPECT_EQ(d.num_classes(), 3);
}

TEST_F(BenchmarkFiles, Crabs) {
  const Dataset d = load("crabs.csv");
  EXPECT_EQ(d.x.rows(), 200);
  EXPECT_EQ(d.x.cols(), 5);
  ASSERT_EQ(d.num_classes(), 4);
  for (int g = 0; g < 4; ++g) EXPECT_EQ(std::count(d.truth.begin(), d.truth.end(), g), 50);
}
