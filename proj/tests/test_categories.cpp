#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "droploss/categories.hpp"

using namespace droploss;

TEST_SUITE_BEGIN("categories");

TEST_CASE("bin boundaries") {
  CHECK(bin_of(0) == Bin::kRare);
  CHECK(bin_of(1) == Bin::kRare);
  CHECK(bin_of(10) == Bin::kRare);
  CHECK(bin_of(11) == Bin::kCommon);
  CHECK(bin_of(100) == Bin::kCommon);
  CHECK(bin_of(101) == Bin::kFrequent);
  CHECK(bin_of(100000) == Bin::kFrequent);
}

TEST_CASE("tail indicator is strict") {
  CHECK(tail_indicator(0.1, 0.2) == 1);
  CHECK(tail_indicator(0.2, 0.2) == 0);
  CHECK(tail_indicator(0.3, 0.2) == 0);
}

TEST_CASE("from_counts basic statistics") {
  auto table = CategoryTable::from_counts({5, 50, 500, 2000}, LambdaMode::kBinAligned);
  REQUIRE(table.num_categories() == 4);
  const double total = 5 + 50 + 500 + 2000;
  CHECK(table.frequency(0) == doctest::Approx(5 / total).epsilon(1e-15));
  CHECK(table.frequency(3) == doctest::Approx(2000 / total).epsilon(1e-15));
  double sum = 0;
  for (double f : table.frequencies()) sum += f;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.bin(0) == Bin::kRare);
  CHECK(table.bin(1) == Bin::kCommon);
  CHECK(table.bin(2) == Bin::kFrequent);
  CHECK(table.tail_instance_fraction() == doctest::Approx(55 / total).epsilon(1e-15));
}

TEST_CASE("bin-aligned lambda selects exactly rare+common") {
  auto table = CategoryTable::from_counts({3, 8, 40, 90, 150, 4000},
                                          LambdaMode::kBinAligned);
  for (int j = 0; j < table.num_categories(); ++j) {
    const bool expect_tail = table.bin(j) != Bin::kFrequent;
    CHECK(table.is_tail(j) == expect_tail);
    // The stored lambda must reproduce the same selection via the strict
    // frequency comparison.
    CHECK(tail_indicator(table.frequency(j), table.lambda()) ==
          static_cast<int>(expect_tail));
  }
}

TEST_CASE("bin-aligned with no frequent categories marks everything tail") {
  auto table = CategoryTable::from_counts({2, 30, 90}, LambdaMode::kBinAligned);
  for (int j = 0; j < 3; ++j) CHECK(table.is_tail(j));
  CHECK(table.tail_instance_fraction() == doctest::Approx(1.0));
}

TEST_CASE("bin-aligned with only frequent categories marks nothing tail") {
  auto table = CategoryTable::from_counts({200, 300, 400}, LambdaMode::kBinAligned);
  for (int j = 0; j < 3; ++j) CHECK_FALSE(table.is_tail(j));
  CHECK(table.tail_instance_fraction() == doctest::Approx(0.0));
}

TEST_CASE("explicit lambda uses the raw threshold") {
  auto table = CategoryTable::from_counts({100, 100, 800}, LambdaMode::kExplicit, 0.15);
  CHECK(table.lambda() == 0.15);
  CHECK(table.is_tail(0));   // f = 0.1 < 0.15
  CHECK(table.is_tail(1));
  CHECK_FALSE(table.is_tail(2));  // f = 0.8
}

TEST_CASE("explicit lambda zero disables the tail set") {
  auto table = CategoryTable::from_counts({5, 50, 500}, LambdaMode::kExplicit, 0.0);
  for (int j = 0; j < 3; ++j) CHECK_FALSE(table.is_tail(j));
}

TEST_CASE("all-zero counts are rejected") {
  CHECK_THROWS(CategoryTable::from_counts({0, 0, 0}, LambdaMode::kBinAligned));
  CHECK_THROWS(CategoryTable::from_counts({}, LambdaMode::kBinAligned));
}

TEST_CASE("csv load accepts shuffled ids and rejects malformed files") {
  const char* path = "categories_test.csv";
  {
    std::ofstream out(path);
    out << "category_id,count\n2,500\n0,5\n1,50\n";
  }
  auto table = CategoryTable::from_csv(path, LambdaMode::kBinAligned);
  CHECK(table.count(0) == 5);
  CHECK(table.count(1) == 50);
  CHECK(table.count(2) == 500);

  {
    std::ofstream out(path);
    out << "2,500\n0,5\n1,50\n";  // missing header
  }
  CHECK_THROWS(CategoryTable::from_csv(path, LambdaMode::kBinAligned));

  {
    std::ofstream out(path);
    out << "category_id,count\n0,5\n0,50\n";  // duplicate id
  }
  CHECK_THROWS(CategoryTable::from_csv(path, LambdaMode::kBinAligned));
  std::remove(path);
}

TEST_SUITE_END();
