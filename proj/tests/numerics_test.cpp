#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gunl/errors.hpp"
#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/rng.hpp"
#include "gunl/numerics/sparse.hpp"
#include "gunl/numerics/tape.hpp"
#include "gunl/oracles/oracles.hpp"
#include "support/fixtures.hpp"

namespace gunl {
namespace {

using testing::max_rel_err;
using testing::random_dense;

Sparse path4() {
  return Sparse(4, 4, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}, {2, 3, 1}, {3, 2, 1}});
}

Sparse random_sparse(std::size_t n, std::size_t m, double density, Rng& rng) {
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c)
      if (rng.bernoulli(density)) t.push_back({r, c, rng.uniform(-2.0, 2.0)});
  return Sparse(n, m, std::move(t));
}

TEST(Spmm, IdentityReturnsInput) {
  Rng rng(1);
  Dense x = random_dense(5, 3, rng);
  EXPECT_EQ(Sparse::identity(5).multiply(x), x);
}

TEST(Spmm, PathTimesOnesGivesDegrees) {
  Dense y = path4().multiply(Dense(4, 1, 1.0));
  EXPECT_EQ(y, Dense(4, 1, std::vector<double>{1, 2, 2, 1}));
}

TEST(Spmm, MatchesDensifiedProduct) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Sparse a = random_sparse(5, 5, 0.4, rng);
    Dense x = random_dense(5, 3, rng, 1e3);
    Dense got = a.multiply(x);
    Dense want = dense::matmul(a.to_dense(), x);
    EXPECT_LE(dense::max_abs_diff(got, want), 1e-12 * 1e3);
  }
}

TEST(Spmm, ShapeMismatchThrows) {
  EXPECT_THROW(path4().multiply(Dense(3, 2)), ShapeError);
  Tape tape;
  Var x = tape.constant(Dense(3, 2));
  EXPECT_THROW(ad::spmm(path4(), x), ShapeError);
}

TEST(Sparse, RejectsDuplicatesAndOutOfRange) {
  EXPECT_THROW(Sparse(2, 2, {{0, 1, 1}, {0, 1, 2}}), ContractError);
  EXPECT_THROW(Sparse(2, 2, {{0, 2, 1}}), ShapeError);
}

TEST(Sparse, CanonicalOrderRegardlessOfInput) {
  Sparse a(3, 3, {{2, 0, 1}, {0, 2, 3}, {0, 1, 2}});
  Sparse b(3, 3, {{0, 1, 2}, {0, 2, 3}, {2, 0, 1}});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.col_idx(), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Gradients, SumGivesOnes) {
  ParamStore ps;
  ps.add("W", Dense::from_rows({{1, -2}, {3, 4}}));
  Tape tape;
  Var loss = ad::sum(tape.param(ps, "W"));
  GradMap g = gradients(loss, ps);
  EXPECT_EQ(g.at("W"), Dense(2, 2, 1.0));
}

TEST(Gradients, HalfSquaredNormGivesW) {
  ParamStore ps;
  ps.add("W", Dense::from_rows({{1, -2}, {3, 0.5}}));
  Tape tape;
  Var w = tape.param(ps, "W");
  Var loss = ad::scale(ad::sum(ad::mul(w, w)), 0.5);
  EXPECT_EQ(gradients(loss, ps).at("W"), ps.value("W"));
}

TEST(Gradients, UnreachableParameterGetsZeros) {
  ParamStore ps;
  ps.add("a", Dense(2, 2, 1.0));
  ps.add("b", Dense(1, 3, 1.0));
  Tape tape;
  Var loss = ad::sum(tape.param(ps, "a"));
  GradMap g = gradients(loss, ps);
  EXPECT_EQ(g.at("b"), Dense(1, 3));
}

TEST(Gradients, NonScalarLossThrows) {
  ParamStore ps;
  ps.add("a", Dense(2, 2, 1.0));
  Tape tape;
  Var a = tape.param(ps, "a");
  EXPECT_THROW(gradients(a, ps), ContractError);
}

TEST(Gradients, BackwardIsBitDeterministic) {
  Rng rng(5);
  ParamStore ps;
  ps.add("w1", random_dense(4, 6, rng));
  ps.add("w2", random_dense(6, 3, rng));
  Sparse a = random_sparse(7, 7, 0.3, rng);
  Dense x = random_dense(7, 4, rng);
  auto run = [&] {
    Tape tape;
    Var h = ad::relu(ad::spmm(a, ad::matmul(tape.constant_ref(x), tape.param(ps, "w1"))));
    Var p = ad::row_softmax(ad::matmul(h, tape.param(ps, "w2")));
    return gradients(ad::sum(ad::log(p)), ps);
  };
  EXPECT_EQ(run(), run());
}

// Every differentiable primitive is checked as loss = sum(op(inputs) .* R)
// against central differences, over 20 random draws each.
struct OpCase {
  std::string name;
  std::size_t n_inputs;
  std::function<Dense(Rng&, std::size_t which)> make_input;
  std::function<Var(Tape&, std::span<const Var>)> op;
};

Dense positive(Rng& rng, std::size_t r, std::size_t c) {
  Dense d(r, c);
  for (double& v : d.values()) v = rng.uniform(0.5, 2.0);
  return d;
}

// Keeps entries away from the kinks of relu/clamp so differences stay smooth.
Dense away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  Dense d(r, c);
  for (double& v : d.values()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.5);
  return d;
}

std::vector<OpCase> op_cases() {
  static const Sparse a = Sparse(4, 4, {{0, 1, 0.5}, {1, 0, 0.5}, {1, 3, -1.5}, {2, 2, 2.0}, {3, 0, 1.0}});
  static const std::vector<std::size_t> rows{2, 0, 2};
  auto rnd = [](std::size_t r, std::size_t c) {
    return [r, c](Rng& rng, std::size_t) { return random_dense(r, c, rng); };
  };
  return {
      {"matmul", 2, [](Rng& rng, std::size_t w) { return w == 0 ? random_dense(3, 4, rng) : random_dense(4, 2, rng); },
       [](Tape&, std::span<const Var> v) { return ad::matmul(v[0], v[1]); }},
      {"spmm", 1, rnd(4, 3), [](Tape&, std::span<const Var> v) { return ad::spmm(a, v[0]); }},
      {"transpose", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::transpose(v[0]); }},
      {"add", 2, rnd(3, 3), [](Tape&, std::span<const Var> v) { return ad::add(v[0], v[1]); }},
      {"sub", 2, rnd(3, 3), [](Tape&, std::span<const Var> v) { return ad::sub(v[0], v[1]); }},
      {"mul", 2, rnd(3, 3), [](Tape&, std::span<const Var> v) { return ad::mul(v[0], v[1]); }},
      {"div", 2, [](Rng& rng, std::size_t w) { return w == 0 ? random_dense(3, 3, rng) : positive(rng, 3, 3); },
       [](Tape&, std::span<const Var> v) { return ad::div(v[0], v[1]); }},
      {"scale", 1, rnd(2, 3), [](Tape&, std::span<const Var> v) { return ad::scale(v[0], -1.7); }},
      {"add_scalar", 1, rnd(2, 3), [](Tape&, std::span<const Var> v) { return ad::add_scalar(v[0], 0.3); }},
      {"neg", 1, rnd(2, 3), [](Tape&, std::span<const Var> v) { return ad::neg(v[0]); }},
      {"relu", 1, [](Rng& rng, std::size_t) { return away_from_zero(rng, 3, 3); },
       [](Tape&, std::span<const Var> v) { return ad::relu(v[0]); }},
      {"exp", 1, rnd(3, 2), [](Tape&, std::span<const Var> v) { return ad::exp(v[0]); }},
      {"log", 1, [](Rng& rng, std::size_t) { return positive(rng, 3, 2); },
       [](Tape&, std::span<const Var> v) { return ad::log(v[0]); }},
      {"clamp_min", 1, [](Rng& rng, std::size_t) { return away_from_zero(rng, 3, 3); },
       [](Tape&, std::span<const Var> v) { return ad::clamp_min(v[0], 0.0); }},
      {"row_softmax", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::row_softmax(v[0]); }},
      {"sum", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::sum(v[0]); }},
      {"mean", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::mean(v[0]); }},
      {"col_sums", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::col_sums(v[0]); }},
      {"row_sums", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::row_sums(v[0]); }},
      {"row_l2norm", 1, rnd(3, 4), [](Tape&, std::span<const Var> v) { return ad::row_l2norm(v[0]); }},
      {"slice_cols", 1, rnd(3, 5), [](Tape&, std::span<const Var> v) { return ad::slice_cols(v[0], 1, 4); }},
      {"gather_rows", 1, rnd(3, 2), [](Tape&, std::span<const Var> v) { return ad::gather_rows(v[0], rows); }},
      {"concat_cols", 2, [](Rng& rng, std::size_t w) { return random_dense(3, w + 1, rng); },
       [](Tape&, std::span<const Var> v) { return ad::concat_cols(v); }},
      {"broadcast_rows", 1, rnd(1, 3), [](Tape&, std::span<const Var> v) { return ad::broadcast_rows(v[0], 4); }},
      {"broadcast_cols", 1, rnd(4, 1), [](Tape&, std::span<const Var> v) { return ad::broadcast_cols(v[0], 3); }},
  };
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const OpCase c = op_cases()[GetParam()];
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(derive_seed({GetParam(), trial}));
    ParamStore ps;
    for (std::size_t k = 0; k < c.n_inputs; ++k) ps.add("in" + std::to_string(k), c.make_input(rng, k));
    Dense weights;
    auto build = [&](Tape& tape, const ParamStore& store) {
      std::vector<Var> in;
      for (std::size_t k = 0; k < c.n_inputs; ++k) in.push_back(tape.param(store, "in" + std::to_string(k)));
      Var out = c.op(tape, in);
      if (weights.empty()) weights = random_dense(out.rows(), out.cols(), rng);
      return ad::sum(ad::mul(out, tape.constant_ref(weights)));
    };
    Tape tape;
    GradMap analytic = gradients(build(tape, ps), ps);
    GradMap numeric = oracle::finite_diff(
        [&](const ParamStore& store) {
          Tape t;
          return build(t, store).value().item();
        },
        ps);
    EXPECT_LE(max_rel_err(analytic, numeric), 1e-4) << c.name << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, op_cases().size()),
                         [](const auto& info) { return op_cases()[info.param].name; });

TEST(RowSoftmax, RowsAreStochastic) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var p = ad::row_softmax(tape.constant(random_dense(6, 5, rng, 50.0)));
    for (std::size_t r = 0; r < 6; ++r) {
      double s = 0;
      for (double v : p.value().row(r)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Log, ClampsAtTiny) {
  Tape tape;
  Var y = ad::log(tape.constant(Dense(1, 1, 0.0)));
  EXPECT_DOUBLE_EQ(y.value().item(), std::log(1e-12));
}

TEST(AdamW, ZeroGradientLeavesParamsUnchanged) {
  ParamStore ps;
  ps.add("w", Dense::from_rows({{1, -2, 3}}));
  const Dense before = ps.value("w");
  adamw_step(ps, {{"w", Dense(1, 3)}}, {.lr = 0.1});
  EXPECT_EQ(ps.value("w"), before);
  EXPECT_EQ(ps.slot("w").step, 1);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  ParamStore ps;
  ps.add("w", Dense::scalar(1.0));
  adamw_step(ps, {{"w", Dense::scalar(1.0)}}, {.lr = 0.1});
  EXPECT_NEAR(ps.value("w").item(), 0.9, 1e-6);
}

// Scalar AdamW written independently from the library, for comparison.
double reference_adamw(double w, int steps, double lr) {
  double m = 0, v = 0;
  for (int t = 1; t <= steps; ++t) {
    const double g = 2 * w;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    w -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
  return w;
}

TEST(AdamW, QuadraticConvergesLikeReference) {
  ParamStore ps;
  ps.add("w", Dense::scalar(1.0));
  for (int i = 0; i < 100; ++i) {
    const double w = ps.value("w").item();
    adamw_step(ps, {{"w", Dense::scalar(2 * w)}}, {.lr = 0.05});
  }
  const double w = ps.value("w").item();
  EXPECT_LT(std::abs(w), 0.1);
  EXPECT_NEAR(w, reference_adamw(1.0, 100, 0.05), 1e-6);
}

TEST(AdamW, DecoupledDecayShrinksWithoutGradient) {
  ParamStore ps;
  ps.add("w", Dense::scalar(2.0));
  adamw_step(ps, {{"w", Dense::scalar(0.0)}}, {.lr = 0.1, .weight_decay = 0.5});
  EXPECT_DOUBLE_EQ(ps.value("w").item(), 2.0 * (1 - 0.05));
}

TEST(AdamW, MissingGradientThrows) {
  ParamStore ps;
  ps.add("w", Dense::scalar(1.0));
  EXPECT_THROW(adamw_step(ps, {}, {}), ContractError);
  EXPECT_THROW(adamw_step(ps, {{"w", Dense(2, 1)}}, {}), ShapeError);
}

TEST(ParamStore, DuplicateNameThrows) {
  ParamStore ps;
  ps.add("w", Dense::scalar(1.0));
  EXPECT_THROW(ps.add("w", Dense::scalar(2.0)), ContractError);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed({1, 2, 3}), derive_seed({1, 3, 2}));
  EXPECT_EQ(derive_seed({1, 2, 3}), derive_seed({1, 2, 3}));
  Rng a(4), b(4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.below(7), b.below(7));
}

}  // namespace
}  // namespace gunl
