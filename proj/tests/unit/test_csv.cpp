#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "ptfa/csv.hpp"

using namespace ptfa;

TEST(Csv, RoundTripIsExact) {
  csv::Table t;
  t.label_name = "date";
  t.labels = {"2000-01", "a,b", "q\"x"};
  t.columns = {"x1", "y 1"};
  t.values.resize(3, 2);
  t.values << 0.1, 1.0 / 3.0, -1e-300, std::numeric_limits<double>::quiet_NaN(), 12345678.875, 2.0;
  std::stringstream ss;
  csv::write(ss, t);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), csv::kVersionLine);
  const csv::Table back = csv::read(ss);
  EXPECT_EQ(back.label_name, "date");
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.columns, t.columns);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      if (std::isnan(t.values(i, j))) {
        EXPECT_TRUE(std::isnan(back.values(i, j)));
      } else {
        EXPECT_EQ(back.values(i, j), t.values(i, j));
      }
    }
}

TEST(Csv, LabelDetectionAndMissingCells) {
  std::istringstream numeric("a,b\n1,2\n3,\n");
  const csv::Table n = csv::read(numeric);
  EXPECT_FALSE(n.has_labels());
  EXPECT_TRUE(std::isnan(n.values(1, 1)));
  std::istringstream named("id,b\nfoo,2\nbar,NA\n");
  const csv::Table l = csv::read(named);
  EXPECT_TRUE(l.has_labels());
  EXPECT_EQ(l.columns.size(), 1u);
  EXPECT_TRUE(std::isnan(l.values(1, 0)));
  std::istringstream t_col("t,b\n1,2\n2,3\n");
  EXPECT_TRUE(csv::read(t_col).has_labels());
}

TEST(Csv, ParseErrors) {
  auto code_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      csv::read(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code_of(""), ErrorCode::ParseError);
  EXPECT_EQ(code_of("a,b\n1,2,3\n"), ErrorCode::ParseError);
  EXPECT_EQ(code_of("date,b\nx,zz\n"), ErrorCode::ParseError);
  EXPECT_EQ(code_of("a,b\n\"1,2\n"), ErrorCode::ParseError);
  EXPECT_EQ(csv::split_record("a,\"b,\"\"c\"\"\",d"), (std::vector<std::string>{"a", "b,\"c\"", "d"}));
}

TEST(Csv, SelectColumns) {
  std::istringstream in("# comment\ndate,x,y,z\nd1,1,2,3\nd2,4,5,6\n");
  const csv::Table t = csv::read(in);
  const Matrix s = t.select({"z", "x"});
  EXPECT_EQ(s(1, 0), 6.0);
  EXPECT_EQ(s(1, 1), 4.0);
  EXPECT_EQ(t.columns_except({"y"}), (std::vector<std::string>{"x", "z"}));
  EXPECT_THROW(t.column_index("w"), Error);
}
