#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "monomvn/data_layout.hpp"
#include "monomvn/error.hpp"

#include <sstream>

using namespace monomvn;

namespace {

DataMatrix parse(const std::string& text, const std::string& na = "NA") {
  std::istringstream in(text);
  return load_matrix(in, na);
}

// Staircase: column counts 5, 4, 2 in original order c, a, b.
const char* kStair =
    "a,b,c\n"
    "1,2,3\n"
    "4,5,6\n"
    "7,NA,9\n"
    "10,NA,12\n"
    "NA,NA,15\n";

}  // namespace

TEST_CASE("load_matrix parses values and missing tokens") {
  const DataMatrix d = parse("x,y\n1.0,NA\n2.0,3.0\n4.5,-1\n");
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.cell(0, 1) == Cell::missing);
  CHECK(d.missing_in_column(1) == 1);
  CHECK(d.values(2, 0) == 4.5);
  CHECK(d.labels == std::vector<std::string>{"x", "y"});
  CHECK(parse("x,y\n1,2\n3,4\n").missing_in_column(0) == 0);
  CHECK(parse("x\ty\n1\t.\n2\t3\n4\t5\n", ".").missing_in_column(1) == 1);
  CHECK(parse("x;y\n1;2\n3;4\n").cols() == 2);
}

TEST_CASE("load_matrix rejects bad input") {
  CHECK_THROWS_AS(parse("x,y\n1,2\n3\n"), DataError);
  CHECK_THROWS_AS(parse("x,y\n1,abc\n3,4\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("x,y\n"), DataError);
  try {
    parse("x,y\n1,NA\n2,NA\n");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'y'") != std::string::npos);
  }
  // a lone value cannot give a variance
  CHECK_THROWS_AS(parse("x,y\n1,NA\n2,3\n"), DataError);
}

TEST_CASE("order_monotone sorts columns by missing count") {
  Eigen::MatrixXd v(4, 3);
  const double na = NAN;
  v << 1, 2, 3, 4, 5, 6, na, 8, 9, na, 11, na;
  const MonotoneLayout L = order_monotone(DataMatrix(v));
  CHECK(L.col_order == std::vector<int>{1, 2, 0});
  CHECK(L.n_obs == std::vector<int>{4, 3, 2});

  const MonotoneLayout full = order_monotone(DataMatrix(Eigen::MatrixXd::Ones(3, 2)));
  CHECK(full.col_order == std::vector<int>{0, 1});
  CHECK(full.row_order == std::vector<int>{0, 1, 2});
  CHECK(full.n_obs == std::vector<int>{3, 3});
}

TEST_CASE("staircase is monotone and reordering is idempotent") {
  const DataMatrix d = parse(kStair);
  const MonotoneLayout L = order_monotone(d);
  CHECK(L.col_order == std::vector<int>{2, 0, 1});
  for (int k = 1; k < L.cols(); ++k) CHECK(L.n_obs[k] <= L.n_obs[k - 1]);
  CHECK(check_monotone(L, d).empty());

  const DataMatrix r = reorder(d, L);
  const MonotoneLayout L2 = order_monotone(r);
  CHECK(L2.col_order == std::vector<int>{0, 1, 2});
  CHECK(L2.row_order == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("interior hole is reported and marked as a gap") {
  // In layout order (c, a, b): a is missing in row 1 while b is observed.
  const DataMatrix d = parse("a,b,c\n1,2,3\nNA,5,6\n7,8,9\n10,NA,12\n13,NA,15\n");
  const MonotoneLayout L = order_monotone(d);
  const auto bad = check_monotone(L, d);
  REQUIRE(bad.size() == 1);
  const int row = L.row_order[bad[0].first];
  const int col = L.col_order[bad[0].second];
  CHECK(row == 1);
  CHECK(col == 0);

  auto [g, G] = mark_gaps(d, L);
  CHECK(g.gap_count() == 1);
  CHECK(g.cell(1, 0) == Cell::gap);
  const int k = static_cast<int>(std::find(G.col_order.begin(), G.col_order.end(), 0) - G.col_order.begin());
  REQUIRE(G.gaps[k].size() == 1);
  CHECK(G.row_order[G.gaps[k][0]] == 1);
  CHECK(check_monotone(G, g).empty());
  // support rows of every column are exactly the first n_j
  for (int c = 0; c < G.cols(); ++c)
    for (int r = 0; r < G.rows(); ++r)
      CHECK((g.cell(G.row_order[r], G.col_order[c]) != Cell::missing) == (r < G.n_obs[c]));
  // the last supported row is never a gap
  for (int c = 0; c < G.cols(); ++c) CHECK(g.cell(G.row_order[G.n_obs[c] - 1], G.col_order[c]) != Cell::gap);

  const auto [g0, G0] = mark_gaps(parse(kStair), order_monotone(parse(kStair)));
  CHECK(g0.gap_count() == 0);
}

TEST_CASE("design_for_column shapes and gap guard") {
  const DataMatrix d = parse(kStair);
  const MonotoneLayout L = order_monotone(d);
  const ColumnDesign c0 = design_for_column(0, d, L, false);
  CHECK(c0.Y.cols() == 0);
  CHECK(c0.y.size() == 5);
  for (int j = 0; j < 3; ++j) {
    for (bool icpt : {false, true}) {
      const ColumnDesign c = design_for_column(j, d, L, icpt);
      CHECK(c.Y.rows() == L.n_obs[j]);
      CHECK(c.Y.cols() == j + (icpt ? 1 : 0));
    }
  }
  const ColumnDesign c2 = design_for_column(2, d, L, true);
  CHECK(c2.Y(0, 0) == 1.0);
  CHECK(c2.Y(1, 1) == 6.0);
  CHECK(c2.Y(1, 2) == 4.0);
  CHECK(c2.y(1) == 5.0);

  const DataMatrix h = parse("a,b,c\n1,2,3\nNA,5,6\n7,8,9\n10,NA,12\n13,NA,15\n");
  auto [g, G] = mark_gaps(h, order_monotone(h));
  const int kb = static_cast<int>(std::find(G.col_order.begin(), G.col_order.end(), 1) - G.col_order.begin());
  CHECK_THROWS_AS(design_for_column(kb, g, G, true), DataError);
}
