#include "vantage/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json_io.hpp"
#include "vantage/errors.hpp"
#include "vantage/io.hpp"

namespace vantage {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hinge(double m) { return m < 1.0 ? 1.0 - m : 0.0; }

// Minimizer over a sorted candidate list of a convex function that is
// linear between the candidates.
template <class F>
double argmin_convex_on(std::vector<double> pts, F&& f) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::size_t lo = 0, hi = pts.size() - 1;
  while (hi - lo > 2) {
    const std::size_t m1 = lo + (hi - lo) / 3;
    const std::size_t m2 = hi - (hi - lo) / 3;
    if (f(pts[m1]) <= f(pts[m2]))
      hi = m2;
    else
      lo = m1;
  }
  double best = pts[lo], best_val = f(pts[lo]);
  for (std::size_t k = lo + 1; k <= hi; ++k) {
    const double v = f(pts[k]);
    if (v < best_val) {
      best_val = v;
      best = pts[k];
    }
  }
  return best;
}

// Bias minimizing C sum hinge(y (f + b)).
double optimal_single_bias(const VectorXd& f, const VectorXd& y) {
  std::vector<double> pts(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) pts[i] = y[i] - f[i];
  return argmin_convex_on(pts, [&](double b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) s += hinge(y[i] * (f[i] + b));
    return s;
  });
}

struct Biases {
  double v;
  double g;
};

// Terms of the SVM-2K primal that depend on the biases.
double bias_terms(const VectorXd& fv, const VectorXd& fg, const VectorXd& y, double bv,
                  double bg, const Svm2kParams& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double ov = fv[i] + bv;
    const double og = fg[i] + bg;
    s += p.c_v * hinge(y[i] * ov) + p.c_g * hinge(y[i] * og) +
         p.d * std::max(0.0, std::abs(ov - og) - p.epsilon);
  }
  return s;
}

Biases optimal_biases(const VectorXd& fv, const VectorXd& fg, const VectorXd& y,
                      const Svm2kParams& p) {
  const Eigen::Index n = y.size();
  auto inner = [&](double bv) {
    std::vector<double> pts;
    pts.reserve(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pts.push_back(y[i] - fg[i]);
      if (p.d > 0.0) {
        pts.push_back(fv[i] + bv - fg[i] - p.epsilon);
        pts.push_back(fv[i] + bv - fg[i] + p.epsilon);
      }
    }
    const double bg = argmin_convex_on(pts, [&](double b) {
      return bias_terms(fv, fg, y, bv, b, p);
    });
    return std::make_pair(bg, bias_terms(fv, fg, y, bv, bg, p));
  };
  const double span = std::max(fv.cwiseAbs().maxCoeff(), fg.cwiseAbs().maxCoeff()) + 2.0 +
                      std::abs(p.epsilon);
  double lo = -4.0 * span, hi = 4.0 * span;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * span; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (inner(m1).second <= inner(m2).second)
      hi = m2;
    else
      lo = m1;
  }
  // The outer function is piecewise linear too; snap to the best nearby
  // V-hinge breakpoint when it is at least as good.
  double bv = 0.5 * (lo + hi);
  auto [bg, val] = inner(bv);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cand = y[i] - fv[i];
    if (std::abs(cand - bv) > 1e-6 * span) continue;
    const auto r = inner(cand);
    if (r.second <= val) {
      val = r.second;
      bv = cand;
      bg = r.first;
    }
  }
  return {bv, bg};
}

}  // namespace

// ---------------------------------------------------------------------------

MatrixXd gram(const KernelSpec& spec, const MatrixXd& a, const MatrixXd& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("gram: dimension mismatch");
  if (!(spec.gamma > 0.0)) throw InvalidArgument("gram: gamma must be positive");
  MatrixXd k(a.rows(), b.rows());
  const bool same = &a == &b;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = same ? i : 0; j < b.rows(); ++j) {
      const double v = std::exp(-spec.gamma * (a.row(i) - b.row(j)).squaredNorm());
      k(i, j) = v;
      if (same) k(j, i) = v;
    }
  return k;
}

double median_heuristic_gamma(const MatrixXd& x) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j)
      d.push_back((x.row(i) - x.row(j)).squaredNorm());
  if (d.empty()) return 1.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + mid);
    med = 0.5 * (med + lower);
  }
  return med > 0.0 ? 1.0 / med : 1.0;
}

Standardizer Standardizer::fit(const MatrixXd& x) {
  if (x.rows() == 0) throw InvalidArgument("Standardizer::fit: no rows");
  VectorXd mean = x.colwise().mean().transpose();
  VectorXd scale(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    scale[c] = std::sqrt((x.col(c).array() - mean[c]).square().mean());
  return from_parts(std::move(mean), std::move(scale));
}

Standardizer Standardizer::from_parts(VectorXd mean, VectorXd scale) {
  if (mean.size() != scale.size()) throw InvalidArgument("Standardizer: size mismatch");
  Standardizer s;
  s.mean_ = std::move(mean);
  s.scale_ = std::move(scale);
  for (Eigen::Index c = 0; c < s.scale_.size(); ++c)
    if (s.scale_[c] >= 1e-12) s.kept_.push_back(static_cast<int>(c));
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim())
    throw InvalidArgument("Standardizer::apply: dimension mismatch");
  MatrixXd out(x.rows(), kept_.size());
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    const int c = kept_[k];
    out.col(k) = (x.col(c).array() - mean_[c]) / scale_[c];
  }
  return out;
}

VectorXd Standardizer::apply(const VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw InvalidArgument("Standardizer::apply: dimension mismatch");
  VectorXd out(kept_.size());
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    const int c = kept_[k];
    out[k] = (x[c] - mean_[c]) / scale_[c];
  }
  return out;
}

void Dataset::validate() const {
  const Eigen::Index n = y.size();
  if (view_v.rows() != n || view_g.rows() != n)
    throw InvalidArgument("dataset: view row counts differ from label count");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != n)
    throw InvalidArgument("dataset: id count differs from label count");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 1.0 && y[i] != -1.0) throw InvalidArgument("dataset: labels must be +1 or -1");
  if (!view_v.allFinite() || !view_g.allFinite())
    throw InvalidArgument("dataset: non-finite feature value");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.view_v.resize(rows.size(), view_v.cols());
  out.view_g.resize(rows.size(), view_g.cols());
  out.y.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.view_v.row(k) = view_v.row(rows[k]);
    out.view_g.row(k) = view_g.row(rows[k]);
    out.y[k] = y[rows[k]];
    if (!ids.empty()) out.ids.push_back(ids[rows[k]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SMO

double SvmModel::decision_value(const VectorXd& x) const {
  double f = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    f += coef[i] * std::exp(-kernel.gamma * (support.row(i).transpose() - x).squaredNorm());
  return f;
}

SvmModel train_svm(const MatrixXd& x, const VectorXd& y, double c, const KernelSpec& spec,
                   double tol) {
  const Eigen::Index n = y.size();
  if (x.rows() != n) throw InvalidArgument("train_svm: row count differs from labels");
  if (!(c > 0.0)) throw InvalidArgument("train_svm: C must be positive");
  if ((y.array() > 0).all() || (y.array() < 0).all())
    throw InvalidArgument("train_svm: both classes are required");

  const MatrixXd k = gram(spec, x, x);
  VectorXd alpha = VectorXd::Zero(n);
  VectorXd grad = VectorXd::Constant(n, -1.0);  // Q alpha - e
  const std::size_t max_iter = std::max<std::size_t>(100000, 100 * static_cast<std::size_t>(n));
  auto in_up = [&](Eigen::Index t) { return y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](Eigen::Index t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

  SvmModel model;
  model.kernel = spec;
  model.c = c;
  std::size_t iter = 0;
  double violation = 0.0;
  for (; iter < max_iter; ++iter) {
    double gmax = -kInf, gmax2 = -kInf;
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    double obj_min = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, y[t] * grad[t]);
      if (i < 0) continue;
      const double b = gmax + y[t] * grad[t];
      if (b <= 0.0) continue;
      double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (a <= 0.0) a = 1e-12;
      if (-(b * b) / a <= obj_min) {
        obj_min = -(b * b) / a;
        j = t;
      }
    }
    violation = gmax + gmax2;
    if (violation < tol || j < 0) break;

    const double qij = y[i] * y[j] * k(i, j);
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_i, daj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * k(t, i) * dai + y[j] * k(t, j) * daj);
  }

  const VectorXd coef = y.cwiseProduct(alpha);
  const VectorXd f = k * coef;
  model.bias = optimal_single_bias(f, y);
  double slack = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) slack += hinge(y[t] * (f[t] + model.bias));
  model.objective = 0.5 * coef.dot(f) + c * slack;
  model.kkt_violation = violation;
  model.iterations = iter;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] != 0.0) sv.push_back(t);
  model.support.resize(sv.size(), x.cols());
  model.coef.resize(sv.size());
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support.row(s) = x.row(sv[s]);
    model.coef[s] = coef[sv[s]];
  }
  return model;
}

// ---------------------------------------------------------------------------
// SVM-2K dual decomposition
//
// Dual variables: a in [0, C_V], c in [0, C_G], delta in [-D, D], with
// u = y.a - delta and v = y.c + delta the expansion weights of w_V and w_G.
// Minimize F = 1/2 u'K_V u + 1/2 v'K_G v - sum a - sum c + eps |delta|_1
// subject to sum u = 0 and sum v = 0. Every step moves along one of the
// elementary feasible directions (a-pair, c-pair, delta-pair, or an
// a / delta / c triple) with an exact line search.

namespace {

enum class Var { A, C, Delta };

struct Change {
  Var var;
  Eigen::Index index;
  double sign;  // variable moves by sign * t
};

struct Svm2kState {
  const MatrixXd& kv;
  const MatrixXd& kg;
  const VectorXd& y;
  const Svm2kParams& p;
  VectorXd a, c, delta, u, v, gu, gv;

  Svm2kState(const MatrixXd& kv_, const MatrixXd& kg_, const VectorXd& y_,
             const Svm2kParams& p_)
      : kv(kv_), kg(kg_), y(y_), p(p_) {
    const Eigen::Index n = y.size();
    a = c = delta = u = v = gu = gv = VectorXd::Zero(n);
  }

  void refresh() {
    u = y.cwiseProduct(a) - delta;
    v = y.cwiseProduct(c) + delta;
    gu = kv * u;
    gv = kg * v;
  }

  double dual_value() const {
    return 0.5 * u.dot(gu) + 0.5 * v.dot(gv) - a.sum() - c.sum() +
           p.epsilon * delta.cwiseAbs().sum();
  }

  // Cost per unit t of increasing u_i through a_i (and of decreasing it).
  bool a_up(Eigen::Index i) const { return y[i] > 0 ? a[i] < p.c_v : a[i] > 0.0; }
  bool a_down(Eigen::Index i) const { return y[i] > 0 ? a[i] > 0.0 : a[i] < p.c_v; }
  bool c_up(Eigen::Index i) const { return y[i] > 0 ? c[i] < p.c_g : c[i] > 0.0; }
  bool c_down(Eigen::Index i) const { return y[i] > 0 ? c[i] > 0.0 : c[i] < p.c_g; }
  double rho_a(Eigen::Index i) const { return gu[i] - y[i]; }
  double rho_c(Eigen::Index i) const { return gv[i] - y[i]; }
  double delta_up_cost(Eigen::Index k) const {
    return -gu[k] + gv[k] + p.epsilon * (delta[k] >= 0.0 ? 1.0 : -1.0);
  }
  double delta_down_cost(Eigen::Index k) const {
    return gu[k] - gv[k] + p.epsilon * (delta[k] <= 0.0 ? 1.0 : -1.0);
  }
};

struct Best {
  double cost = kInf;
  Eigen::Index index = -1;
  void offer(double c, Eigen::Index i) {
    if (c < cost) {
      cost = c;
      index = i;
    }
  }
};

// Exact minimization of F along the move; returns the step taken.
double line_step(Svm2kState& s, const std::vector<Change>& move) {
  const Svm2kParams& p = s.p;
  std::vector<std::pair<Eigen::Index, double>> du, dv;
  auto add = [](std::vector<std::pair<Eigen::Index, double>>& v, Eigen::Index i, double d) {
    for (auto& e : v)
      if (e.first == i) {
        e.second += d;
        return;
      }
    v.emplace_back(i, d);
  };
  double slope = 0.0;  // smooth part
  double t_max = kInf;
  std::vector<double> kinks;
  for (const Change& ch : move) {
    const Eigen::Index i = ch.index;
    switch (ch.var) {
      case Var::A:
        add(du, i, s.y[i] * ch.sign);
        slope -= ch.sign;
        t_max = std::min(t_max, ch.sign > 0 ? p.c_v - s.a[i] : s.a[i]);
        break;
      case Var::C:
        add(dv, i, s.y[i] * ch.sign);
        slope -= ch.sign;
        t_max = std::min(t_max, ch.sign > 0 ? p.c_g - s.c[i] : s.c[i]);
        break;
      case Var::Delta:
        add(du, i, -ch.sign);
        add(dv, i, ch.sign);
        t_max = std::min(t_max, ch.sign > 0 ? p.d - s.delta[i] : s.delta[i] + p.d);
        if (s.delta[i] != 0.0 && (s.delta[i] > 0.0) != (ch.sign > 0.0))
          kinks.push_back(std::abs(s.delta[i]));
        break;
    }
  }
  double curvature = 0.0;
  for (const auto& [i, di] : du) {
    slope += di * s.gu[i];
    for (const auto& [j, dj] : du) curvature += di * dj * s.kv(i, j);
  }
  for (const auto& [i, di] : dv) {
    slope += di * s.gv[i];
    for (const auto& [j, dj] : dv) curvature += di * dj * s.kg(i, j);
  }
  t_max = std::max(t_max, 0.0);
  std::sort(kinks.begin(), kinks.end());
  std::vector<double> ends;
  for (double k : kinks)
    if (k < t_max) ends.push_back(k);
  ends.push_back(t_max);

  double t = 0.0;
  for (double end : ends) {
    if (end <= t) continue;
    const double mid = 0.5 * (t + end);
    double seg_slope = slope + curvature * t;
    for (const Change& ch : move)
      if (ch.var == Var::Delta) {
        const double val = s.delta[ch.index] + ch.sign * mid;
        seg_slope += p.epsilon * ch.sign * (val > 0.0 ? 1.0 : -1.0);
      }
    if (seg_slope >= 0.0) break;
    if (curvature > 0.0) {
      const double stop = t - seg_slope / curvature;
      if (stop <= end) {
        t = stop;
        break;
      }
    }
    t = end;
  }
  if (!std::isfinite(t) || t <= 0.0) return 0.0;

  for (const Change& ch : move) {
    const Eigen::Index i = ch.index;
    switch (ch.var) {
      case Var::A:
        s.a[i] = std::clamp(s.a[i] + ch.sign * t, 0.0, p.c_v);
        break;
      case Var::C:
        s.c[i] = std::clamp(s.c[i] + ch.sign * t, 0.0, p.c_g);
        break;
      case Var::Delta: {
        const double before = s.delta[i];
        double after = std::clamp(before + ch.sign * t, -p.d, p.d);
        if (before != 0.0 && t == std::abs(before) && (before > 0.0) != (ch.sign > 0.0))
          after = 0.0;
        s.delta[i] = after;
        break;
      }
    }
  }
  // Snap values that ended within rounding of a bound.
  for (const Change& ch : move) {
    const Eigen::Index i = ch.index;
    auto snap = [](double& x, double lo, double hi) {
      const double tol = 1e-14 * std::max(1.0, hi - lo);
      if (std::abs(x - lo) <= tol) x = lo;
      if (std::abs(x - hi) <= tol) x = hi;
    };
    if (ch.var == Var::A) snap(s.a[i], 0.0, p.c_v);
    if (ch.var == Var::C) snap(s.c[i], 0.0, p.c_g);
    if (ch.var == Var::Delta) {
      snap(s.delta[i], -p.d, p.d);
      if (std::abs(s.delta[i]) <= 1e-15 * std::max(1.0, p.d)) s.delta[i] = 0.0;
    }
  }
  // Incremental gradient update from the realized changes.
  for (const auto& [i, di] : du) {
    (void)di;
    const double nu = s.y[i] * s.a[i] - s.delta[i];
    const double d = nu - s.u[i];
    if (d != 0.0) {
      s.gu += d * s.kv.col(i);
      s.u[i] = nu;
    }
  }
  for (const auto& [i, di] : dv) {
    (void)di;
    const double nv = s.y[i] * s.c[i] + s.delta[i];
    const double d = nv - s.v[i];
    if (d != 0.0) {
      s.gv += d * s.kg.col(i);
      s.v[i] = nv;
    }
  }
  return t;
}

}  // namespace

double svm2k_primal_objective(const MatrixXd& kv, const MatrixXd& kg, const VectorXd& y,
                              const VectorXd& coef_v, const VectorXd& coef_g,
                              double bias_v, double bias_g, const Svm2kParams& params) {
  const VectorXd fv = kv * coef_v;
  const VectorXd fg = kg * coef_g;
  return 0.5 * coef_v.dot(fv) + 0.5 * coef_g.dot(fg) +
         bias_terms(fv, fg, y, bias_v, bias_g, params);
}

Svm2kModel train_svm2k_standardized(const MatrixXd& xv, const MatrixXd& xg,
                                    const VectorXd& y, const Svm2kParams& params,
                                    const KernelSpec& kernel_v, const KernelSpec& kernel_g) {
  const Eigen::Index n = y.size();
  if (n < 2) throw InvalidArgument("train_svm2k: at least two samples are required");
  if (xv.rows() != n || xg.rows() != n)
    throw InvalidArgument("train_svm2k: row count differs from labels");
  if ((y.array() > 0).all() || (y.array() < 0).all())
    throw InvalidArgument("train_svm2k: both classes are required");
  if (!(params.c_v > 0.0) || !(params.c_g > 0.0) || params.d < 0.0 || params.epsilon < 0.0)
    throw InvalidArgument("train_svm2k: invalid hyperparameters");

  const MatrixXd kv = gram(kernel_v, xv, xv);
  const MatrixXd kg = gram(kernel_g, xg, xg);
  Svm2kState s(kv, kg, y, params);
  const std::size_t max_iter =
      params.max_iterations ? params.max_iterations
                            : 200000 + 2000 * static_cast<std::size_t>(n);

  std::size_t iter = 0;
  double violation = kInf;
  std::size_t stalled = 0;
  for (; iter < max_iter; ++iter) {
    if (iter % 5000 == 4999) s.refresh();
    Best up_a, down_a, up_c, down_c, up_d, down_d;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s.a_up(i)) up_a.offer(s.rho_a(i), i);
      if (s.a_down(i)) down_a.offer(-s.rho_a(i), i);
      if (s.c_up(i)) up_c.offer(s.rho_c(i), i);
      if (s.c_down(i)) down_c.offer(-s.rho_c(i), i);
      if (params.d > 0.0) {
        if (s.delta[i] < params.d) up_d.offer(s.delta_up_cost(i), i);
        if (s.delta[i] > -params.d) down_d.offer(s.delta_down_cost(i), i);
      }
    }
    double best_cost = 0.0;
    std::vector<Change> move;
    auto consider = [&](double cost, std::vector<Change> m) {
      if (std::isfinite(cost) && cost < best_cost) {
        best_cost = cost;
        move = std::move(m);
      }
    };
    consider(up_a.cost + down_a.cost,
             {{Var::A, up_a.index, y[up_a.index] > 0 ? 1.0 : -1.0},
              {Var::A, down_a.index, y[down_a.index] > 0 ? -1.0 : 1.0}});
    consider(up_c.cost + down_c.cost,
             {{Var::C, up_c.index, y[up_c.index] > 0 ? 1.0 : -1.0},
              {Var::C, down_c.index, y[down_c.index] > 0 ? -1.0 : 1.0}});
    if (params.d > 0.0) {
      consider(up_d.cost + down_d.cost,
               {{Var::Delta, up_d.index, 1.0}, {Var::Delta, down_d.index, -1.0}});
      consider(up_a.cost + up_d.cost + down_c.cost,
               {{Var::A, up_a.index, y[up_a.index] > 0 ? 1.0 : -1.0},
                {Var::Delta, up_d.index, 1.0},
                {Var::C, down_c.index, y[down_c.index] > 0 ? -1.0 : 1.0}});
      consider(down_a.cost + down_d.cost + up_c.cost,
               {{Var::A, down_a.index, y[down_a.index] > 0 ? -1.0 : 1.0},
                {Var::Delta, down_d.index, -1.0},
                {Var::C, up_c.index, y[up_c.index] > 0 ? 1.0 : -1.0}});
    }
    violation = -best_cost;
    if (move.empty() || violation < params.tol) break;
    const double t = line_step(s, move);
    stalled = t > 0.0 ? 0 : stalled + 1;
    if (stalled > 3) break;
  }
  s.refresh();

  Svm2kModel model;
  model.params = params;
  model.kernel_v = kernel_v;
  model.kernel_g = kernel_g;
  const VectorXd& fv = s.gu;
  const VectorXd& fg = s.gv;
  const Biases b = optimal_biases(fv, fg, y, params);
  model.bias_v = b.v;
  model.bias_g = b.g;

  auto& dg = model.diagnostics;
  dg.iterations = iter;
  dg.max_violation = std::max(violation, 0.0);
  dg.dual_objective = -s.dual_value();
  dg.primal_objective =
      0.5 * s.u.dot(fv) + 0.5 * s.v.dot(fg) + bias_terms(fv, fg, y, b.v, b.g, params);
  dg.relative_gap = std::max(0.0, dg.primal_objective - dg.dual_objective) /
                    std::max(1.0, std::abs(dg.primal_objective));
  dg.coupling_violation = -kInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ov = fv[i] + b.v, og = fg[i] + b.g;
    const double xi_v = hinge(y[i] * ov), xi_g = hinge(y[i] * og);
    const double eta = std::max(0.0, std::abs(ov - og) - params.epsilon);
    dg.slack_v += xi_v;
    dg.slack_g += xi_g;
    dg.slack_eta += eta;
    dg.coupling_violation =
        std::max(dg.coupling_violation, std::abs(ov - og) - eta - params.epsilon);
  }

  std::vector<Eigen::Index> sv_v, sv_g;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.u[i] != 0.0) sv_v.push_back(i);
    if (s.v[i] != 0.0) sv_g.push_back(i);
  }
  model.support_v.resize(sv_v.size(), xv.cols());
  model.coef_v.resize(sv_v.size());
  for (std::size_t k = 0; k < sv_v.size(); ++k) {
    model.support_v.row(k) = xv.row(sv_v[k]);
    model.coef_v[k] = s.u[sv_v[k]];
  }
  model.support_g.resize(sv_g.size(), xg.cols());
  model.coef_g.resize(sv_g.size());
  for (std::size_t k = 0; k < sv_g.size(); ++k) {
    model.support_g.row(k) = xg.row(sv_g[k]);
    model.coef_g[k] = s.v[sv_g[k]];
  }

  if (iter >= max_iter || dg.relative_gap > params.gap_tol) {
    std::ostringstream msg;
    msg << "SVM-2K stopped after " << iter << " iterations with relative gap "
        << dg.relative_gap;
    throw Svm2kConvergenceError(msg.str(), std::move(model));
  }
  return model;
}

Svm2kModel train_svm2k(const Dataset& data, const Svm2kParams& params) {
  data.validate();
  const Standardizer sv = Standardizer::fit(data.view_v);
  const Standardizer sg = Standardizer::fit(data.view_g);
  const MatrixXd xv = sv.apply(data.view_v);
  const MatrixXd xg = sg.apply(data.view_g);
  const KernelSpec kv{params.gamma_v.value_or(median_heuristic_gamma(xv))};
  const KernelSpec kg{params.gamma_g.value_or(median_heuristic_gamma(xg))};
  auto finish = [&](Svm2kModel m) {
    m.standardizer_v = sv;
    m.standardizer_g = sg;
    return m;
  };
  try {
    return finish(train_svm2k_standardized(xv, xg, data.y, params, kv, kg));
  } catch (const Svm2kConvergenceError& e) {
    throw Svm2kConvergenceError(e.what(), finish(e.model()));
  }
}

ViewOutputs Svm2kModel::outputs_standardized(const VectorXd& v, const VectorXd& g) const {
  ViewOutputs o{bias_v, bias_g};
  for (Eigen::Index i = 0; i < support_v.rows(); ++i)
    o.f_v += coef_v[i] *
             std::exp(-kernel_v.gamma * (support_v.row(i).transpose() - v).squaredNorm());
  for (Eigen::Index i = 0; i < support_g.rows(); ++i)
    o.f_g += coef_g[i] *
             std::exp(-kernel_g.gamma * (support_g.row(i).transpose() - g).squaredNorm());
  return o;
}

ViewOutputs Svm2kModel::outputs(const VectorXd& raw_v, const VectorXd& raw_g) const {
  return outputs_standardized(standardizer_v.apply(raw_v), standardizer_g.apply(raw_g));
}

int decide(double f) { return f >= 0.0 ? 1 : -1; }

int decide(const Svm2kModel& model, const VectorXd& raw_v, const VectorXd& raw_g) {
  return decide(model.outputs(raw_v, raw_g).f());
}

double score(double f) { return 1.0 / (1.0 + std::exp(-f)); }

double score(const Svm2kModel& model, const VectorXd& raw_v, const VectorXd& raw_g) {
  return score(model.outputs(raw_v, raw_g).f());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json to_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(VectorXd(m.row(i))));
  return rows;
}

VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixXd matrix_from(const json& j, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const VectorXd r = vector_from(j[i]);
    if (r.size() != cols) throw InvalidArgument("support row has wrong length");
    m.row(static_cast<Eigen::Index>(i)) = r;
  }
  return m;
}

}  // namespace

std::string model_to_json(const Svm2kModel& m) {
  json j;
  j["format"] = "vantage-svm2k";
  j["version"] = 1;
  const auto& p = m.params;
  j["params"] = {{"epsilon", p.epsilon}, {"c_v", p.c_v},     {"c_g", p.c_g},
                 {"d", p.d},             {"tol", p.tol},     {"gap_tol", p.gap_tol},
                 {"max_iterations", p.max_iterations}};
  j["standardizer_v"] = {{"mean", to_json(m.standardizer_v.mean())},
                         {"scale", to_json(m.standardizer_v.scale())}};
  j["standardizer_g"] = {{"mean", to_json(m.standardizer_g.mean())},
                         {"scale", to_json(m.standardizer_g.scale())}};
  j["kernel_v"] = {{"kind", "rbf"}, {"gamma", m.kernel_v.gamma}};
  j["kernel_g"] = {{"kind", "rbf"}, {"gamma", m.kernel_g.gamma}};
  j["support_v"] = to_json(m.support_v);
  j["support_g"] = to_json(m.support_g);
  j["coef_v"] = to_json(m.coef_v);
  j["coef_g"] = to_json(m.coef_g);
  j["bias_v"] = m.bias_v;
  j["bias_g"] = m.bias_g;
  const auto& d = m.diagnostics;
  j["diagnostics"] = {{"primal_objective", d.primal_objective},
                      {"dual_objective", d.dual_objective},
                      {"relative_gap", d.relative_gap},
                      {"max_violation", d.max_violation},
                      {"slack_v", d.slack_v},
                      {"slack_g", d.slack_g},
                      {"slack_eta", d.slack_eta},
                      {"coupling_violation", d.coupling_violation},
                      {"iterations", d.iterations}};
  return j.dump(1);
}

Svm2kModel model_from_json(const std::string& text, const std::string& source) {
  const json j = detail::parse_located(text, source).doc;
  try {
    if (j.at("format") != "vantage-svm2k") throw InvalidArgument("not a vantage-svm2k model");
    if (j.at("version") != 1) throw InvalidArgument("unsupported model version");
    Svm2kModel m;
    const auto& p = j.at("params");
    m.params.epsilon = p.at("epsilon");
    m.params.c_v = p.at("c_v");
    m.params.c_g = p.at("c_g");
    m.params.d = p.at("d");
    m.params.tol = p.at("tol");
    m.params.gap_tol = p.at("gap_tol");
    m.params.max_iterations = p.at("max_iterations");
    m.standardizer_v = Standardizer::from_parts(vector_from(j.at("standardizer_v").at("mean")),
                                                vector_from(j.at("standardizer_v").at("scale")));
    m.standardizer_g = Standardizer::from_parts(vector_from(j.at("standardizer_g").at("mean")),
                                                vector_from(j.at("standardizer_g").at("scale")));
    m.kernel_v.gamma = j.at("kernel_v").at("gamma");
    m.kernel_g.gamma = j.at("kernel_g").at("gamma");
    m.params.gamma_v = m.kernel_v.gamma;
    m.params.gamma_g = m.kernel_g.gamma;
    m.support_v = matrix_from(j.at("support_v"), m.standardizer_v.output_dim());
    m.support_g = matrix_from(j.at("support_g"), m.standardizer_g.output_dim());
    m.coef_v = vector_from(j.at("coef_v"));
    m.coef_g = vector_from(j.at("coef_g"));
    if (m.coef_v.size() != m.support_v.rows() || m.coef_g.size() != m.support_g.rows())
      throw InvalidArgument("coefficient count differs from support rows");
    m.bias_v = j.at("bias_v");
    m.bias_g = j.at("bias_g");
    if (j.contains("diagnostics")) {
      const auto& d = j["diagnostics"];
      auto& dg = m.diagnostics;
      dg.primal_objective = d.value("primal_objective", 0.0);
      dg.dual_objective = d.value("dual_objective", 0.0);
      dg.relative_gap = d.value("relative_gap", 0.0);
      dg.max_violation = d.value("max_violation", 0.0);
      dg.slack_v = d.value("slack_v", 0.0);
      dg.slack_g = d.value("slack_g", 0.0);
      dg.slack_eta = d.value("slack_eta", 0.0);
      dg.coupling_violation = d.value("coupling_violation", 0.0);
      dg.iterations = d.value("iterations", std::size_t{0});
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("model schema: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(source, 0, e.what());
  }
}

void save_model(const Svm2kModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model) + "\n");
}

Svm2kModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<int> stratified_folds(const VectorXd& y, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
  if (y.size() < folds) throw InvalidArgument("fewer samples than folds");
  std::vector<std::size_t> pos, neg;
  for (Eigen::Index i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<int> fold(y.size());
  std::size_t k = 0;
  for (std::size_t i : pos) fold[i] = static_cast<int>(k++ % folds);
  for (std::size_t i : neg) fold[i] = static_cast<int>(k++ % folds);
  return fold;
}

CvReport crossvalidate(const Dataset& data, int folds, const Svm2kParams& params,
                       std::uint64_t seed, Learner learner) {
  data.validate();
  const std::vector<int> fold = stratified_folds(data.y, folds, seed);
  CvReport report;
  double total = 0.0;
  int ran = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? test : train).push_back(i);
    const Dataset tr = data.subset(train);
    const bool both = (tr.y.array() > 0).any() && (tr.y.array() < 0).any();
    if (!both || test.empty()) {
      report.fold_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      report.skipped.push_back(true);
      report.warnings.push_back("fold " + std::to_string(f) +
                                " skipped: training split lacks a class");
      continue;
    }
    std::size_t wrong = 0;
    if (learner == Learner::Svm2k) {
      Svm2kModel model;
      try {
        model = train_svm2k(tr, params);
      } catch (const Svm2kConvergenceError& e) {
        report.warnings.push_back("fold " + std::to_string(f) + ": " + e.what());
        model = e.model();
      }
      for (std::size_t i : test)
        if (decide(model, data.view_v.row(i).transpose(), data.view_g.row(i).transpose()) !=
            static_cast<int>(data.y[i]))
          ++wrong;
    } else {
      const bool image = learner == Learner::ImageOnly;
      const MatrixXd& raw = image ? tr.view_v : tr.view_g;
      const Standardizer st = Standardizer::fit(raw);
      const MatrixXd x = st.apply(raw);
      const std::optional<double> gamma = image ? params.gamma_v : params.gamma_g;
      const KernelSpec spec{gamma.value_or(median_heuristic_gamma(x))};
      const SvmModel model = train_svm(x, tr.y, image ? params.c_v : params.c_g, spec);
      for (std::size_t i : test) {
        const VectorXd row = image ? VectorXd(data.view_v.row(i).transpose())
                                   : VectorXd(data.view_g.row(i).transpose());
        if (decide(model.decision_value(st.apply(row))) != static_cast<int>(data.y[i]))
          ++wrong;
      }
    }
    const double err = static_cast<double>(wrong) / test.size();
    report.fold_errors.push_back(err);
    report.skipped.push_back(false);
    total += err;
    ++ran;
  }
  report.mean_error = ran > 0 ? total / ran : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace vantage
