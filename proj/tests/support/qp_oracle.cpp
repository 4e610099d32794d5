#include "qp_oracle.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace vantage::testing {

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, double tol, int max_iter) {
  const Eigen::Index n = qp.f.size();
  const Eigen::Index m = qp.b.size();
  const Eigen::Index p = qp.e.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = (qp.b - qp.a * x).cwiseMax(1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);

  QpResult out;
  const double scale = 1.0 + std::max(qp.f.cwiseAbs().maxCoeff(), qp.b.cwiseAbs().maxCoeff());
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    Eigen::VectorXd rd = qp.h * x + qp.f + qp.a.transpose() * z;
    if (p > 0) rd += qp.e.transpose() * y;
    const Eigen::VectorXd rp = qp.a * x + s - qp.b;
    const Eigen::VectorXd re = p > 0 ? Eigen::VectorXd(qp.e * x - qp.e_rhs) : Eigen::VectorXd();
    const double mu = s.dot(z) / m;
    const double res = std::max({rd.cwiseAbs().maxCoeff(), rp.cwiseAbs().maxCoeff(),
                                 p > 0 ? re.cwiseAbs().maxCoeff() : 0.0});
    if (res < 10.0 * tol * scale && mu < tol) {
      out.converged = true;
      break;
    }

    // Augmented system [H A' E'; A -S/Z 0; E 0 0], better conditioned than
    // the normal equations once complementarity gets small.
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m + p, n + m + p);
    kkt.topLeftCorner(n, n) = qp.h;
    kkt.topLeftCorner(n, n).diagonal().array() += 1e-13;
    kkt.block(0, n, n, m) = qp.a.transpose();
    kkt.block(n, 0, m, n) = qp.a;
    kkt.block(n, n, m, m).diagonal() = -s.cwiseQuotient(z);
    if (p > 0) {
      kkt.block(0, n + m, n, p) = qp.e.transpose();
      kkt.block(n + m, 0, p, n) = qp.e;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);

    auto solve = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                     Eigen::VectorXd& dz, Eigen::VectorXd& dy) {
      Eigen::VectorXd rhs(n + m + p);
      rhs.head(n) = -rd;
      rhs.segment(n, m) = -rp + rc.cwiseQuotient(z);
      if (p > 0) rhs.tail(p) = -re;
      Eigen::VectorXd sol = lu.solve(rhs);
      sol += lu.solve(rhs - kkt * sol);
      dx = sol.head(n);
      dz = sol.segment(n, m);
      dy = p > 0 ? Eigen::VectorXd(sol.tail(p)) : Eigen::VectorXd();
      ds = (-rc - s.cwiseProduct(dz)).cwiseQuotient(z);
    };

    Eigen::VectorXd dx, ds, dz, dy;
    solve(s.cwiseProduct(z), dx, ds, dz, dy);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m;
    const double sigma = std::pow(mu_aff / mu, 3.0);
    const Eigen::VectorXd rc =
        s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(m, sigma * mu);
    solve(rc, dx, ds, dz, dy);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    if (p > 0) y += alpha * dy;
  }
  out.x = x;
  out.objective = 0.5 * x.dot(qp.h * x) + qp.f.dot(x);
  return out;
}

QpResult svm2k_oracle(const Eigen::MatrixXd& kv, const Eigen::MatrixXd& kg,
                      const Eigen::VectorXd& y, double epsilon, double c_v, double c_g,
                      double d) {
  const Eigen::Index n = y.size();
  const Eigen::Index nv = 5 * n + 2;
  const Eigen::Index bv = 2 * n, bg = 2 * n + 1, xv = 2 * n + 2, xg = 3 * n + 2,
                     et = 4 * n + 2;
  QpProblem qp;
  qp.h = Eigen::MatrixXd::Zero(nv, nv);
  qp.h.block(0, 0, n, n) = kv;
  qp.h.block(n, n, n, n) = kg;
  qp.f = Eigen::VectorXd::Zero(nv);
  qp.f.segment(xv, n).setConstant(c_v);
  qp.f.segment(xg, n).setConstant(c_g);
  qp.f.segment(et, n).setConstant(d);
  qp.a = Eigen::MatrixXd::Zero(7 * n, nv);
  qp.b = Eigen::VectorXd::Zero(7 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // y (K_V beta_v + b_v) >= 1 - xi_v
    qp.a.block(i, 0, 1, n) = -y[i] * kv.row(i);
    qp.a(i, bv) = -y[i];
    qp.a(i, xv + i) = -1.0;
    qp.b[i] = -1.0;
    const Eigen::Index r1 = n + i;
    qp.a.block(r1, n, 1, n) = -y[i] * kg.row(i);
    qp.a(r1, bg) = -y[i];
    qp.a(r1, xg + i) = -1.0;
    qp.b[r1] = -1.0;
    // |f_v - f_g| <= eta + eps
    for (int sgn : {1, -1}) {
      const Eigen::Index r = (sgn > 0 ? 2 * n : 3 * n) + i;
      qp.a.block(r, 0, 1, n) = sgn * kv.row(i);
      qp.a.block(r, n, 1, n) = -sgn * kg.row(i);
      qp.a(r, bv) = sgn;
      qp.a(r, bg) = -sgn;
      qp.a(r, et + i) = -1.0;
      qp.b[r] = epsilon;
    }
    qp.a(4 * n + i, xv + i) = -1.0;
    qp.a(5 * n + i, xg + i) = -1.0;
    qp.a(6 * n + i, et + i) = -1.0;
  }
  qp.e = Eigen::MatrixXd(0, nv);
  return solve_qp(qp);
}

QpResult svm_oracle(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c) {
  const Eigen::Index n = y.size();
  const Eigen::Index nv = 2 * n + 1;
  QpProblem qp;
  qp.h = Eigen::MatrixXd::Zero(nv, nv);
  qp.h.topLeftCorner(n, n) = k;
  qp.f = Eigen::VectorXd::Zero(nv);
  qp.f.tail(n).setConstant(c);
  qp.a = Eigen::MatrixXd::Zero(2 * n, nv);
  qp.b = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    qp.a.block(i, 0, 1, n) = -y[i] * k.row(i);
    qp.a(i, n) = -y[i];
    qp.a(i, n + 1 + i) = -1.0;
    qp.b[i] = -1.0;
    qp.a(n + i, n + 1 + i) = -1.0;
  }
  qp.e = Eigen::MatrixXd(0, nv);
  return solve_qp(qp);
}

}  // namespace vantage::testing
