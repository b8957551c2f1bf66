#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "stg/datagen.hpp"

using namespace stg;

namespace {

std::size_t count_split(const Dataset& d, Split s) { return d.rows_of(s).size(); }

bool same_dataset(const Dataset& a, const Dataset& b) {
  return a.x == b.x && a.y == b.y && a.labels == b.labels && a.split == b.split &&
         a.informative == b.informative;
}

}  // namespace

TEST(DefaultSparsity, Examples) {
  EXPECT_EQ(default_sparsity(64), 10u);
  EXPECT_EQ(default_sparsity(1), 1u);
  EXPECT_EQ(default_sparsity(16), 4u);  // 0.4·8 = 3.2
}

TEST(Xor, LabelsAndSplit) {
  Rng rng(1);
  const Dataset d = gen_xor(1500, 10, rng);
  d.validate();
  EXPECT_EQ(d.n_features(), 10u);
  EXPECT_EQ(d.informative, (std::vector<std::size_t>{0, 1}));
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    for (std::size_t j = 0; j < 10; ++j) EXPECT_TRUE(d.x(i, j) == 0 || d.x(i, j) == 1);
    EXPECT_EQ(d.labels[i], static_cast<int>(d.x(i, 0)) ^ static_cast<int>(d.x(i, 1)));
  }
  EXPECT_EQ(count_split(d, Split::test), 1050u);
  EXPECT_EQ(count_split(d, Split::valid), 45u);
  EXPECT_EQ(count_split(d, Split::train), 405u);
}

TEST(Xor, SeededReproducibility) {
  Rng a(7), b(7), c(8);
  const Dataset da = gen_xor(200, 5, a), db = gen_xor(200, 5, b), dc = gen_xor(200, 5, c);
  EXPECT_TRUE(same_dataset(da, db));
  EXPECT_FALSE(same_dataset(da, dc));
}

TEST(TwoMoons, Geometry) {
  Rng rng(2);
  const Dataset d = gen_two_moons(1000, 6, rng, 0.0);
  d.validate();
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    const double x = d.x(i, 0), y = d.x(i, 1);
    if (d.labels[i] == 0) {
      EXPECT_NEAR(x * x + y * y, 1.0, 1e-12);
      EXPECT_GE(y, -1e-12);
    } else {
      EXPECT_NEAR((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5), 1.0, 1e-12);
      EXPECT_LE(y, 0.5 + 1e-12);
    }
  }
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 0), 500);
}

TEST(Friedman, ResponseOracle) {
  const std::vector<double> half(5, 0.5);
  // 10 sin²(0.25) + 5 + 10·sign(0.05), 30-digit arithmetic.
  EXPECT_NEAR(friedman_mod_response(half), 15.6120871905481364, 1e-12);
  const std::vector<double> edge{0, 0, 0, 1, 0.2};
  EXPECT_NEAR(friedman_mod_response(edge), 0.0, 1e-15);
}

TEST(Friedman, Normalization) {
  Rng rng(3);
  const Dataset d = gen_friedman_mod(600, 10, rng);
  d.validate();
  double mean = 0, max_abs = 0;
  for (double v : d.y) mean += v;
  mean /= static_cast<double>(d.y.size());
  for (double v : d.y) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(max_abs, 1.0, 1e-12);
  for (double v : d.x.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(count_split(d, Split::test), 100u);
  EXPECT_EQ(count_split(d, Split::valid), 50u);
  EXPECT_EQ(count_split(d, Split::train), 450u);
  EXPECT_EQ(d.informative, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  // Undoing the normalization gives the raw response plus unit-variance noise.
  double resid_sq = 0;
  for (std::size_t i = 0; i < 600; ++i) {
    const double raw = d.y[i] * d.meta.at("y_scale") + d.meta.at("y_shift");
    const double r = raw - friedman_mod_response(d.x.row(i).subspan(0, 5));
    resid_sq += r * r;
  }
  EXPECT_NEAR(resid_sq / 600.0, 1.0, 0.2);
}

TEST(Madelon, Structure) {
  MadelonParams p;
  p.n_samples = 2000;
  Rng rng(4);
  const Dataset d = gen_madelon_like(p, rng);
  d.validate();
  EXPECT_EQ(d.n_features(), 500u);
  EXPECT_EQ(d.informative, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  ASSERT_EQ(d.weakly_relevant.size(), 15u);
  EXPECT_EQ(d.weakly_relevant.front(), 5u);
  EXPECT_EQ(d.meta.at("flipped"), 20.0);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1) +
                std::count(d.labels.begin(), d.labels.end(), 0),
            2000);
  // Nuisance columns are standard normal.
  double m = 0, v = 0;
  for (std::size_t i = 0; i < 2000; ++i) m += d.x(i, 400);
  m /= 2000;
  for (std::size_t i = 0; i < 2000; ++i) v += (d.x(i, 400) - m) * (d.x(i, 400) - m);
  v /= 1999;
  EXPECT_NEAR(m, 0.0, 0.1);
  EXPECT_NEAR(v, 1.0, 0.12);
}

TEST(Madelon, ClustersAndCombinations) {
  MadelonParams p;
  p.n_samples = 4000;
  p.feature_noise_std = 0.0;
  p.flip_frac = 0.0;
  p.n_nuisance = 10;
  Rng rng(5);
  const Dataset d = gen_madelon_like(p, rng);
  // Cluster means sit on distinct ±1 vertices, and the clusters of one class
  // never share a vertex with the other class.
  std::vector<std::vector<double>> means(4, std::vector<double>(5, 0.0));
  std::vector<int> cluster_label(4, -1);
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) means[i % 4][j] += d.x(i, j) / 1000.0;
    cluster_label[i % 4] = d.labels[i];
  }
  std::set<std::vector<double>> verts;
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> v(5);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_NEAR(std::abs(means[c][j]), 1.0, 0.15);
      v[j] = means[c][j] > 0 ? 1.0 : -1.0;
    }
    verts.insert(v);
  }
  EXPECT_EQ(verts.size(), 4u);
  EXPECT_NE(cluster_label[0], cluster_label[1]);
  // Without feature noise every combined column is an exact linear
  // combination of the informative ones.
  const Matrix inf = d.x.select_cols(std::vector<std::size_t>{0, 1, 2, 3, 4});
  const Vector col = d.x.column(7);
  const Vector coef = solve_spd(matmul_tn(inf, inf), matvec_t(inf, col));
  const Vector fit = matvec(inf, coef);
  for (std::size_t i = 0; i < d.n_samples(); ++i) EXPECT_NEAR(fit[i], col[i], 1e-9);
}

TEST(SparseLinear, ShapeAndSupport) {
  Rng rng(6);
  const SparseLinear s = gen_sparse_linear(120, 64, false, 0.25, rng);
  s.data.validate();
  EXPECT_EQ(s.data.informative.size(), 10u);
  std::size_t nnz = 0;
  for (std::size_t j = 0; j < 64; ++j) {
    if (s.beta_star[j] != 0) {
      ++nnz;
      EXPECT_EQ(std::abs(s.beta_star[j]), 1.0);
      EXPECT_TRUE(std::binary_search(s.data.informative.begin(), s.data.informative.end(), j));
    }
  }
  EXPECT_EQ(nnz, 10u);
  EXPECT_EQ(count_split(s.data, Split::train), 120u);
  double rss = 0;
  const Vector pred = matvec(s.data.x, s.beta_star);
  for (std::size_t i = 0; i < 120; ++i) rss += (s.data.y[i] - pred[i]) * (s.data.y[i] - pred[i]);
  EXPECT_NEAR(rss / 120, 0.25, 0.1);
}

TEST(SparseLinear, CorrelatedRows) {
  Rng rng(7);
  const SparseLinear s = gen_sparse_linear(20000, 8, true, 0.25, rng, 3);
  double c01 = 0, c02 = 0;
  for (std::size_t i = 0; i < 20000; ++i) {
    c01 += s.data.x(i, 0) * s.data.x(i, 1);
    c02 += s.data.x(i, 0) * s.data.x(i, 2);
  }
  EXPECT_NEAR(c01 / 20000, 0.3, 0.03);
  EXPECT_NEAR(c02 / 20000, 0.09, 0.03);
  const Matrix sigma = toeplitz_covariance(3, 0.3);
  EXPECT_DOUBLE_EQ(sigma(0, 2), 0.09);
  EXPECT_DOUBLE_EQ(sigma(1, 1), 1.0);
}

TEST(Survival, CensoringAndTheta) {
  SurvivalParams p;
  p.n_samples = 4000;
  Rng rng(8);
  const Dataset d = gen_survival(p, rng);
  d.validate();
  std::size_t censored = 0;
  for (const auto& t : d.survival) {
    EXPECT_GT(t.time, 0.0);
    censored += t.event ? 0 : 1;
  }
  EXPECT_NEAR(static_cast<double>(censored) / 4000.0, 0.3, 0.03);
  const Vector theta = survival_theta(d);
  ASSERT_EQ(theta.size(), 20u);
  std::size_t nz = 0;
  for (std::size_t j = 0; j < 20; ++j) {
    if (theta[j] != 0) {
      ++nz;
      EXPECT_EQ(std::abs(theta[j]), 1.0);
    }
  }
  EXPECT_EQ(nz, 2u);
}

TEST(Split, CountsAndDisjointness) {
  Rng rng(9);
  Dataset d = gen_xor(100, 3, rng);
  assign_split_counts(d, 60, 15, 25, rng);
  EXPECT_EQ(count_split(d, Split::train), 60u);
  EXPECT_EQ(count_split(d, Split::valid), 15u);
  EXPECT_EQ(count_split(d, Split::test), 25u);
  EXPECT_THROW(assign_split_counts(d, 60, 15, 26, rng), std::invalid_argument);
  const Dataset tr = d.part(Split::train);
  EXPECT_EQ(tr.n_samples(), 60u);
  for (Split s : tr.split) EXPECT_EQ(s, Split::train);
}

TEST(SelectFeatures, RemapsInformative) {
  Rng rng(10);
  const Dataset d = gen_friedman_mod(60, 8, rng);
  const std::vector<std::size_t> keep{1, 3, 6};
  const Dataset s = d.select_features(keep);
  EXPECT_EQ(s.n_features(), 3u);
  EXPECT_EQ(s.informative, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(s.x(5, 2), d.x(5, 6));
}

TEST(Csv, RoundTrip) {
  Rng rng(11);
  const Dataset d = gen_friedman_mod(30, 6, rng);
  std::stringstream ss;
  write_csv(d, ss);
  const Dataset back = read_csv(ss, {TaskKind::regression, "", ""});
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.y, d.y);

  SurvivalParams p;
  p.n_samples = 40;
  p.n_features = 3;
  const Dataset s = gen_survival(p, rng);
  std::stringstream ss2;
  write_csv(s, ss2);
  const Dataset sb = read_csv(ss2, {TaskKind::survival, "", ""});
  ASSERT_EQ(sb.survival.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(sb.survival[i].time, s.survival[i].time);
    EXPECT_EQ(sb.survival[i].event, s.survival[i].event);
  }
}

TEST(Csv, NamedColumnsAndErrors) {
  std::istringstream in("a,label,b\n1,0,2\n3,1,4\n");
  const Dataset d = read_csv(in, {TaskKind::classification, "label", ""});
  EXPECT_EQ(d.n_features(), 2u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.x(1, 1), 4.0);
  EXPECT_EQ(d.n_classes, 2);

  std::istringstream bad("a,y\n1,2\n1,x\n");
  try {
    read_csv(bad, {TaskKind::regression, "", ""});
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream ragged("a,y\n1,2,3\n");
  EXPECT_THROW(read_csv(ragged, {TaskKind::regression, "", ""}), CsvError);
  std::istringstream neg("a,label\n1,-1\n");
  EXPECT_THROW(read_csv(neg, {TaskKind::classification, "", ""}), CsvError);
  std::istringstream missing("a,y\n1,2\n");
  EXPECT_THROW(read_csv(missing, {TaskKind::regression, "zz", ""}), CsvError);
}
