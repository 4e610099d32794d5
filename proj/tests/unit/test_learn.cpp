#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "qp_oracle.hpp"
#include "vantage/learn.hpp"

using namespace vantage;
using vantage::testing::svm2k_oracle;
using vantage::testing::svm_oracle;

namespace {

// Objective recomputed from the returned expansion, independent of the
// solver's own bookkeeping.
double recomputed_objective(const Svm2kModel& m, const MatrixXd& xv, const MatrixXd& xg,
                            const VectorXd& y) {
  const MatrixXd kvv = gram(m.kernel_v, m.support_v, m.support_v);
  const MatrixXd kgg = gram(m.kernel_g, m.support_g, m.support_g);
  double obj = 0.5 * m.coef_v.dot(kvv * m.coef_v) + 0.5 * m.coef_g.dot(kgg * m.coef_g);
  const auto& p = m.params;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const ViewOutputs o = m.outputs_standardized(xv.row(i).transpose(), xg.row(i).transpose());
    obj += p.c_v * std::max(0.0, 1.0 - y[i] * o.f_v);
    obj += p.c_g * std::max(0.0, 1.0 - y[i] * o.f_g);
    obj += p.d * std::max(0.0, std::abs(o.f_v - o.f_g) - p.epsilon);
  }
  return obj;
}

}  // namespace

TEST_CASE("gram entries") {
  MatrixXd x(3, 1);
  x << 0, 1, 2;
  const MatrixXd k = gram({1.0}, x, x);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(k(0, 2) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(k(2, 0) == k(0, 2));
  const MatrixXd k0 = gram({1e-14}, x, x);
  CHECK(k0.minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  MatrixXd bad(2, 2);
  CHECK_THROWS_AS(gram({1.0}, x, bad), InvalidArgument);
  CHECK_THROWS_AS(gram({0.0}, x, x), InvalidArgument);
}

TEST_CASE("standardization is idempotent") {
  std::mt19937_64 rng(3);
  const Dataset d = testing::random_two_view(rng, 30, 4, 3);
  const Standardizer s1 = Standardizer::fit(d.view_v);
  const MatrixXd once = s1.apply(d.view_v);
  const MatrixXd twice = Standardizer::fit(once).apply(once);
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardizer drops constant columns") {
  MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Standardizer s = Standardizer::fit(x);
  CHECK(s.output_dim() == 1);
}

TEST_CASE("single-view SVM: small cases") {
  MatrixXd x(2, 1);
  x << -1, 1;
  VectorXd y(2);
  y << -1, 1;
  const SvmModel m = train_svm(x, y, 1.0, {1.0});
  CHECK(m.decision_value(x.row(0).transpose()) < 0.0);
  CHECK(m.decision_value(x.row(1).transpose()) > 0.0);

  MatrixXd xor4(4, 2);
  xor4 << 0, 0, 1, 1, 0, 1, 1, 0;
  VectorXd yx(4);
  yx << 1, 1, -1, -1;
  const SvmModel mx = train_svm(xor4, yx, 10.0, {1.0});
  for (int i = 0; i < 4; ++i) CHECK(mx.decision_value(xor4.row(i).transpose()) * yx[i] > 0.0);
  const auto oracle = svm_oracle(gram({1.0}, xor4, xor4), yx, 10.0);
  CHECK(mx.objective == doctest::Approx(oracle.objective).epsilon(1e-4));

  VectorXd one = VectorXd::Ones(2);
  CHECK_THROWS_AS(train_svm(x, one, 1.0, {1.0}), InvalidArgument);
}

TEST_CASE("single-view SVM matches the QP oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + trial % 15;
    const Dataset d = testing::random_two_view(rng, n, 3, 2);
    const KernelSpec spec{0.5};
    const SvmModel m = train_svm(d.view_v, d.y, 4.0, spec);
    const auto oracle = svm_oracle(gram(spec, d.view_v, d.view_v), d.y, 4.0);
    REQUIRE(oracle.converged);
    CHECK(std::abs(m.objective - oracle.objective) <= 1e-4 * std::max(1.0, oracle.objective));
    CHECK(m.kkt_violation <= 1e-3);
  }
}

TEST_CASE("SVM-2K matches the QP oracle and is feasible") {
  std::mt19937_64 rng(7);
  const Svm2kParams p;
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 4 + trial;
    const Dataset d = testing::random_two_view(rng, n, 3, 4);
    const KernelSpec kv{0.4}, kg{0.7};
    const Svm2kModel m = train_svm2k_standardized(d.view_v, d.view_g, d.y, p, kv, kg);
    const auto oracle = svm2k_oracle(gram(kv, d.view_v, d.view_v), gram(kg, d.view_g, d.view_g),
                                     d.y, p.epsilon, p.c_v, p.c_g, p.d);
    REQUIRE(oracle.converged);
    const double obj = recomputed_objective(m, d.view_v, d.view_g, d.y);
    CHECK(std::abs(obj - oracle.objective) <= 1e-4 * std::max(1.0, std::abs(oracle.objective)));
    CHECK(std::abs(obj - m.diagnostics.primal_objective) <= 1e-9 * std::max(1.0, obj));
    CHECK(m.diagnostics.coupling_violation <= 1e-6);
    CHECK(m.diagnostics.slack_v >= 0.0);
    CHECK(m.diagnostics.slack_g >= 0.0);
    CHECK(m.diagnostics.slack_eta >= 0.0);
    CHECK(m.diagnostics.relative_gap <= 1e-3);
  }
}

TEST_CASE("SVM-2K with D = 0 decouples into two SVMs") {
  std::mt19937_64 rng(19);
  const Dataset d = testing::random_two_view(rng, 16, 3, 3);
  Svm2kParams p;
  p.d = 0.0;
  const KernelSpec kv{0.5}, kg{0.3};
  const Svm2kModel m = train_svm2k_standardized(d.view_v, d.view_g, d.y, p, kv, kg);
  const SvmModel sv = train_svm(d.view_v, d.y, p.c_v, kv);
  const SvmModel sg = train_svm(d.view_g, d.y, p.c_g, kg);
  CHECK(m.diagnostics.primal_objective ==
        doctest::Approx(sv.objective + sg.objective).epsilon(1e-3));
}

TEST_CASE("SVM-2K on identical views agrees across machines") {
  const Dataset base = testing::separable(5, 30);
  Dataset d = base;
  d.view_g = d.view_v;
  const Svm2kModel m = train_svm2k(d);
  const MatrixXd xv = m.standardizer_v.apply(d.view_v);
  const MatrixXd xg = m.standardizer_g.apply(d.view_g);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const ViewOutputs o = m.outputs_standardized(xv.row(i).transpose(), xg.row(i).transpose());
    CHECK(std::abs(o.f_v - o.f_g) <= m.params.epsilon + 1e-6);
    CHECK(decide(o.f()) == static_cast<int>(d.y[i]));
  }
}

TEST_CASE("decision and score") {
  CHECK(decide(0.0) == 1);
  CHECK(decide(-1e-300) == -1);
  CHECK(score(0.0) == 0.5);
  CHECK(score(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(score(800.0) == 1.0);
  CHECK(score(-3.0) < score(-2.0));
}

TEST_CASE("support sample with a large margin keeps its label") {
  const Dataset d = testing::separable(9, 40);
  const Svm2kModel m = train_svm2k(d);
  int checked = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const VectorXd v = d.view_v.row(i).transpose(), g = d.view_g.row(i).transpose();
    const double f = m.outputs(v, g).f();
    if (std::abs(f) >= 1.0) {
      CHECK(decide(m, v, g) == static_cast<int>(d.y[i]));
      ++checked;
    }
    CHECK(score(m, v, g) == doctest::Approx(score(f)));
  }
  CHECK(checked > 0);
}

TEST_CASE("model JSON round trip is bit exact") {
  std::mt19937_64 rng(2);
  const Dataset d = testing::random_two_view(rng, 24, 5, 3);
  const Svm2kModel m = train_svm2k(d);
  const auto path = std::filesystem::temp_directory_path() / "vantage_model_rt.json";
  save_model(m, path);
  const Svm2kModel r = load_model(path);
  std::filesystem::remove(path);
  CHECK(model_to_json(r) == model_to_json(m));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const VectorXd v = d.view_v.row(i).transpose(), g = d.view_g.row(i).transpose();
    const ViewOutputs a = m.outputs(v, g), b = r.outputs(v, g);
    CHECK(a.f_v == b.f_v);
    CHECK(a.f_g == b.f_g);
  }
  CHECK_THROWS_AS(model_from_json("{\"format\": \"other\"}"), ParseError);
  CHECK_THROWS_AS(model_from_json("{ not json"), ParseError);
}

TEST_CASE("stratified folds are deterministic and balanced") {
  VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = i < 12 ? 1.0 : -1.0;
  const auto a = stratified_folds(y, 10, 42);
  const auto b = stratified_folds(y, 10, 42);
  CHECK(a == b);
  std::vector<int> pos(10, 0), all(10, 0);
  for (int i = 0; i < 40; ++i) {
    all[a[i]]++;
    if (y[i] > 0) pos[a[i]]++;
  }
  for (int f = 0; f < 10; ++f) {
    CHECK(all[f] == 4);
    CHECK(pos[f] >= 1);
    CHECK(pos[f] <= 2);
  }
}

TEST_CASE("cross-validation on separable and on shuffled labels") {
  const Dataset d = testing::separable(4, 60);
  const CvReport r = crossvalidate(d, 10, {}, 1);
  CHECK(r.mean_error < 0.02);
  CHECK(r.warnings.empty());

  double mean = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    Dataset noisy = testing::complementary_noise(100 + s, 60);
    std::mt19937_64 rng(s);
    std::shuffle(noisy.y.data(), noisy.y.data() + noisy.y.size(), rng);
    mean += crossvalidate(noisy, 10, {}, s).mean_error / 5.0;
  }
  CHECK(mean == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("cross-validation skips folds missing a class") {
  Dataset d = testing::separable(8, 20);
  for (int i = 0; i < 20; ++i) d.y[i] = i == 0 ? 1.0 : -1.0;
  const CvReport r = crossvalidate(d, 10, {}, 3);
  int skipped = 0;
  for (bool s : r.skipped) skipped += s;
  CHECK(skipped == 1);
  CHECK(r.warnings.size() == 1);
  CHECK(r.mean_error >= 0.0);
  CHECK(r.mean_error <= 1.0);
}
