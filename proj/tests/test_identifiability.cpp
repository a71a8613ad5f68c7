#include <doctest.h>

#include "esrlcm/identifiability.hpp"
#include "oracles.hpp"

using namespace esrlcm;
using namespace esrlcm::identifiability;

namespace {

BaseClassMatrix random_matrix(Rng& rng, std::size_t C, std::size_t J, int max_label) {
  std::uniform_int_distribution<int> lab(1, max_label);
  std::vector<BaseColumn> cols;
  for (std::size_t j = 0; j < J; ++j) {
    BaseColumn col(C);
    for (auto& x : col) x = lab(rng);
    cols.push_back(canonicalize(col));
  }
  return BaseClassMatrix(cols, false);
}

// Random merge of B: each column's labels are mapped through a random map.
BaseClassMatrix random_merge(Rng& rng, const BaseClassMatrix& B) {
  std::vector<BaseColumn> cols;
  for (std::size_t j = 0; j < B.items(); ++j) {
    int labels = B.base_classes(j);
    std::uniform_int_distribution<int> to(1, labels);
    std::vector<int> g(static_cast<std::size_t>(labels));
    for (auto& x : g) x = to(rng);
    BaseColumn col(B.classes());
    for (std::size_t c = 0; c < B.classes(); ++c) col[c] = g[static_cast<std::size_t>(B.at(c, j)) - 1];
    cols.push_back(canonicalize(col));
  }
  return BaseClassMatrix(cols, false);
}

}  // namespace

TEST_CASE("is_merged_of examples") {
  auto B = paper::example_B();
  CHECK(is_merged_of(B, B));
  std::vector<BaseColumn> ones(B.items(), BaseColumn(B.classes(), 1));
  CHECK(is_merged_of(B, BaseClassMatrix(ones)));
  CHECK(is_merged_of(paper::merge_example_fine(), paper::merge_example_coarse()));
  CHECK_FALSE(is_merged_of(paper::merge_example_coarse(), paper::merge_example_fine()));
  CHECK_THROWS_AS(is_merged_of(B, BaseClassMatrix::unrestricted(5, 2)), DimensionError);
}

TEST_CASE("merge relation is reflexive and transitive") {
  Rng rng(10);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 200; ++t) {
    auto C = static_cast<std::size_t>(dim(rng));
    auto J = static_cast<std::size_t>(dim(rng));
    auto A = random_matrix(rng, C, J, static_cast<int>(C));
    auto B = random_merge(rng, A);
    auto D = random_merge(rng, B);
    CHECK(is_merged_of(A, A));
    CHECK(is_merged_of(A, B));
    CHECK(is_merged_of(B, D));
    CHECK(is_merged_of(A, D));
  }
}

TEST_CASE("check_conditions on the paper example") {
  auto B = paper::example_B();
  auto report = check_conditions(B, paper::example_levels(), paper::example_partition(), paper::example_merged1(),
                                 paper::example_merged2());
  CHECK(report.holds);
  CHECK(report.failures.empty());
  auto ones = BaseClassMatrix({BaseColumn(5, 1), BaseColumn(5, 1)});
  auto bad = check_conditions(B, paper::example_levels(), paper::example_partition(), ones, paper::example_merged2());
  CHECK_FALSE(bad.holds);
  CHECK_FALSE(bad.failures.empty());
}

TEST_CASE("check_conditions small hand example") {
  auto B = BaseClassMatrix({{1, 2}, {1, 2}, {1, 2}});
  Tripartition part{{{{0}, {1}, {2}}}};
  auto m1 = BaseClassMatrix({{1, 2}});
  CHECK(check_conditions(B, {2, 2, 2}, part, m1, m1).holds);
  // too many merged labels for the response levels
  auto B3 = BaseClassMatrix({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  auto m3 = BaseClassMatrix({{1, 2, 3}});
  CHECK_FALSE(check_conditions(B3, {2, 2, 2}, part, m3, m3).holds);
  CHECK(check_conditions(B3, {3, 3, 3}, part, m3, m3).holds);
}

TEST_CASE("check_conditions rejects malformed partitions") {
  auto B = BaseClassMatrix({{1, 2}, {1, 2}, {1, 2}});
  auto m1 = BaseClassMatrix({{1, 2}});
  Tripartition dup{{{{0}, {0}, {2}}}};
  CHECK_THROWS_AS(check_conditions(B, {2, 2, 2}, dup, m1, m1), DimensionError);
  Tripartition missing{{{{0}, {1}, {}}}};
  CHECK_THROWS_AS(check_conditions(B, {2, 2, 2}, missing, m1, m1), DimensionError);
  Tripartition out_of_range{{{{0}, {1}, {2, 7}}}};
  CHECK_THROWS_AS(check_conditions(B, {2, 2, 2}, out_of_range, m1, m1), DimensionError);
}

TEST_CASE("greedy search on the paper example") {
  auto B = paper::example_B();
  auto r = greedy_search(B, paper::example_levels());
  REQUIRE(r.status == Status::Identifiable);
  REQUIRE(r.witness);
  CHECK(check_conditions(B, paper::example_levels(), r.witness->partition, r.witness->merged1, r.witness->merged2)
            .holds);
  Rng rng(1);
  auto nv = numeric_verify(B, paper::example_levels(), r.witness->partition, rng, 10);
  CHECK(nv.passed);
  for (int s : nv.rank_sums) CHECK(s >= 12);
}

TEST_CASE("greedy search reports Unknown when counting fails") {
  auto B = BaseClassMatrix::unrestricted(3, 2);
  auto r = greedy_search(B, {2, 2});
  CHECK(r.status == Status::Unknown);
  CHECK_FALSE(r.witness);
}

TEST_CASE("exhaustive search examples") {
  auto ex = exhaustive_search(paper::example_B(), paper::example_levels());
  REQUIRE(ex.status == Status::Identifiable);
  CHECK(check_conditions(paper::example_B(), paper::example_levels(), ex.witness->partition, ex.witness->merged1,
                         ex.witness->merged2)
            .holds);
  auto single = exhaustive_search(BaseClassMatrix::unrestricted(2, 1), {2});
  CHECK(single.status == Status::Unknown);
  CHECK_THROWS_AS(exhaustive_search(paper::example_B(), paper::example_levels(), 3), BudgetExceeded);
}

TEST_CASE("greedy is contained in exhaustive on random fixtures") {
  Rng rng(2023);
  std::uniform_int_distribution<int> Cdist(2, 5), Jdist(3, 8), mdist(2, 3);
  int greedy_hits = 0;
  for (int t = 0; t < 200; ++t) {
    auto C = static_cast<std::size_t>(Cdist(rng));
    auto J = static_cast<std::size_t>(Jdist(rng));
    auto B = random_matrix(rng, C, J, static_cast<int>(C));
    ItemLevels m(J);
    for (auto& x : m) x = mdist(rng);
    auto g = greedy_search(B, m);
    auto e = exhaustive_search(B, m);
    if (g.status == Status::Identifiable) {
      ++greedy_hits;
      CHECK(e.status == Status::Identifiable);
      CHECK(check_conditions(B, m, g.witness->partition, g.witness->merged1, g.witness->merged2).holds);
    }
    if (e.status == Status::Identifiable) {
      CHECK(check_conditions(B, m, e.witness->partition, e.witness->merged1, e.witness->merged2).holds);
      Rng vr(static_cast<std::uint64_t>(t));
      CHECK(numeric_verify(B, m, e.witness->partition, vr, 10).passed);
    } else {
      CHECK_FALSE(e.witness);
    }
  }
  CHECK(greedy_hits > 0);
}

TEST_CASE("kruskal rank examples") {
  CHECK(kruskal_rank(Eigen::MatrixXd::Identity(3, 3)) == 3);
  Eigen::MatrixXd dup(3, 3);
  dup << 1, 1, 0, 2, 2, 1, 3, 3, 5;
  CHECK(kruskal_rank(dup) == 1);
  Eigen::MatrixXd m(2, 3);
  m << 1, 0, 1, 0, 1, 1;
  CHECK(kruskal_rank(m) == 2);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK(kruskal_rank(zero) == 0);
}

TEST_CASE("kruskal rank is bounded by rank") {
  Rng rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int t = 0; t < 100; ++t) {
    int r = dim(rng), c = dim(rng);
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) M(i, j) = z(rng);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    CHECK(kruskal_rank(M) == static_cast<int>(lu.rank()));
    // repeat a column: Kruskal rank drops to 1, rank is unchanged
    Eigen::MatrixXd D(r, c + 1);
    D << M, M.col(0);
    CHECK(kruskal_rank(D) <= static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(D).rank()));
    CHECK(kruskal_rank(D) == 1);
  }
}

TEST_CASE("numeric_verify examples") {
  Rng rng(3);
  auto B = BaseClassMatrix({{1, 2}, {1, 2}, {1, 2}});
  Tripartition part{{{{0}, {1}, {2}}}};
  auto ok = numeric_verify(B, {2, 2, 2}, part, rng, 10);
  CHECK(ok.passed);
  for (int s : ok.rank_sums) CHECK(s == 6);
  auto dupB = BaseClassMatrix({{1, 1, 2}, {1, 1, 2}, {1, 1, 2}});
  CHECK_FALSE(numeric_verify(dupB, {2, 2, 2}, part, rng, 10).passed);
  std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  auto big = BaseClassMatrix::unrestricted(2, 13);
  Tripartition huge{{{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, {}, {}}}};
  CHECK_THROWS_AS(numeric_verify(big, ItemLevels(13, 2), huge, rng, 1), DomainError);
}

TEST_CASE("q_matrix_to_base examples") {
  auto B = q_matrix_to_base({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(B.classes() == 4);
  CHECK(B.column(0) == BaseColumn{1, 1, 1, 1});
  CHECK(B.column(1) == BaseColumn{1, 2, 1, 2});
  CHECK(B.column(2) == BaseColumn{1, 2, 3, 4});
  CHECK(B.column(3) == BaseColumn{1, 1, 2, 2});
  CHECK_THROWS(q_matrix_to_base({{0, 0, 0, 0, 0, 0}}));
}

TEST_CASE("block-diagonal Q-matrices are certified by greedy search") {
  for (int K = 1; K <= 3; ++K) {
    // every M3 whose columns each contain a 1, with up to two rows
    std::vector<std::vector<int>> rows;
    for (int mask = 1; mask < (1 << K); ++mask) {
      std::vector<int> r(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) r[static_cast<std::size_t>(k)] = (mask >> k) & 1;
      rows.push_back(r);
    }
    std::vector<std::vector<std::vector<int>>> m3s;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      m3s.push_back({rows[a]});
      for (std::size_t b = a; b < rows.size(); ++b) m3s.push_back({rows[a], rows[b]});
    }
    for (const auto& m3 : m3s) {
      std::vector<int> covered(static_cast<std::size_t>(K), 0);
      for (const auto& r : m3) {
        for (int k = 0; k < K; ++k) covered[static_cast<std::size_t>(k)] |= r[static_cast<std::size_t>(k)];
      }
      if (std::count(covered.begin(), covered.end(), 0)) continue;
      std::vector<std::vector<int>> Q;
      for (int rep = 0; rep < 2; ++rep) {
        for (int k = 0; k < K; ++k) {
          std::vector<int> e(static_cast<std::size_t>(K), 0);
          e[static_cast<std::size_t>(k)] = 1;
          Q.push_back(e);
        }
      }
      Q.insert(Q.end(), m3.begin(), m3.end());
      auto B = q_matrix_to_base(Q);
      CAPTURE(K);
      CAPTURE(Q);
      auto r = greedy_search(B, ItemLevels(B.items(), 2));
      CHECK(r.status == Status::Identifiable);
    }
  }
}
