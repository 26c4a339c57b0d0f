#include <fstream>
#include <sstream>

#include "terrain_energy/csv.hpp"
#include "terrain_energy/errors.hpp"
#include "test_support.hpp"

using namespace terrain_energy;

TEST(Csv, NumberRoundTripsShortest) {
  EXPECT_EQ(csv::number(0.1), "0.1");
  EXPECT_EQ(csv::number(288.0), "288");
  const double tricky = 0.1 + 0.2;
  EXPECT_EQ(std::stod(csv::number(tricky)), tricky);
}

TEST(Csv, ReadsHeaderAndRows) {
  te_test::TempDir tmp;
  {
    std::ofstream out(tmp / "a.csv");
    out << "a,b,c\n1,2.5,-3e2\n4,5,6\n";
  }
  const auto t = csv::read(tmp / "a.csv", {"a", "b"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][2], -300.0);
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_THROW(t.column("zzz"), ValidationError);
}

TEST(Csv, RejectsWrongHeaderAndBadNumbers) {
  te_test::TempDir tmp;
  {
    std::ofstream out(tmp / "h.csv");
    out << "x,y\n1,2\n";
    std::ofstream bad(tmp / "n.csv");
    bad << "a,b\n1,zz\n";
  }
  EXPECT_THROW(csv::read(tmp / "h.csv", {"a"}), ValidationError);
  EXPECT_THROW(csv::read(tmp / "n.csv", {"a", "b"}), ValidationError);
  EXPECT_THROW(csv::read(tmp / "missing.csv", {"a"}), IoError);
}

TEST(Csv, WriteRow) {
  std::ostringstream out;
  csv::write_row(out, {1.0, 0.5, -2.0});
  EXPECT_EQ(out.str(), "1,0.5,-2\n");
}
