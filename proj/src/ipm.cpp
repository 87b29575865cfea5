#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ddcqa/conic.hpp"
#include "ddcqa/error.hpp"
#include "standard_form.hpp"

namespace ddcqa {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rotated blocks are rewritten as plain second-order cones by the symmetric
// orthogonal map (u, v) -> ((u+v)/sqrt2, (u-v)/sqrt2). Applying it twice is
// the identity, so the same call maps multipliers back.
void rotate_pairs(const std::vector<detail::Block>& blocks, Vec& v) {
  for (const auto& blk : blocks) {
    if (blk.type != ConeType::RotatedSOC) continue;
    const double u = v[blk.offset];
    const double w = v[blk.offset + 1];
    v[blk.offset] = (u + w) / std::numbers::sqrt2;
    v[blk.offset + 1] = (u - w) / std::numbers::sqrt2;
  }
}

struct Cone {
  bool soc = false;
  int off = 0;
  int dim = 0;
  std::vector<int> support;  // columns of G touched by the block
  Mat gs;                    // G restricted to the block rows and support
};

struct Scaling {
  // nonneg blocks: d (W = diag d); soc blocks: dense W and its inverse
  std::vector<Vec> d;
  std::vector<Mat> w;
  std::vector<Mat> winv;
};

class Solver {
public:
  Solver(const ConicProblem& p, const SolverOptions& opts) : opts_(opts), sf_(detail::standard_form(p)) {
    n_ = sf_.n;
    p_ = static_cast<int>(sf_.b.size());
    m_ = sf_.rows();
    cscale_ = std::max(1.0, sf_.c.cwiseAbs().maxCoeff());
    c_ = sf_.c / cscale_;
    a_ = sf_.a;
    b_ = sf_.b;
    g_ = sf_.g;
    h_ = sf_.h;
    for (Eigen::Index j = 0; j < n_; ++j) {
      Vec col = g_.col(j);
      rotate_pairs(sf_.blocks, col);
      g_.col(j) = col;
    }
    rotate_pairs(sf_.blocks, h_);
    degree_ = 0;
    for (const auto& blk : sf_.blocks) {
      Cone cone;
      cone.soc = blk.type != ConeType::NonNeg;
      cone.off = blk.offset;
      cone.dim = blk.dim;
      for (int j = 0; j < n_; ++j) {
        if (g_.block(blk.offset, j, blk.dim, 1).cwiseAbs().maxCoeff() > 0.0) cone.support.push_back(j);
      }
      cone.gs.resize(blk.dim, static_cast<Eigen::Index>(cone.support.size()));
      for (size_t k = 0; k < cone.support.size(); ++k) {
        cone.gs.col(static_cast<Eigen::Index>(k)) = g_.block(blk.offset, cone.support[k], blk.dim, 1);
      }
      degree_ += cone.soc ? 1 : blk.dim;
      cones_.push_back(std::move(cone));
    }
  }

  ConicSolution run();

private:
  // ---- cone algebra -------------------------------------------------------
  Vec identity() const {
    Vec e = Vec::Zero(m_);
    for (const auto& k : cones_) {
      if (k.soc) {
        e[k.off] = 1.0;
      } else {
        e.segment(k.off, k.dim).setOnes();
      }
    }
    return e;
  }

  Vec jprod(const Vec& u, const Vec& v) const {
    Vec r(m_);
    for (const auto& k : cones_) {
      if (!k.soc) {
        r.segment(k.off, k.dim) = u.segment(k.off, k.dim).cwiseProduct(v.segment(k.off, k.dim));
        continue;
      }
      const int q = k.dim - 1;
      r[k.off] = u.segment(k.off, k.dim).dot(v.segment(k.off, k.dim));
      r.segment(k.off + 1, q) = u[k.off] * v.segment(k.off + 1, q) + v[k.off] * u.segment(k.off + 1, q);
    }
    return r;
  }

  // x with l o x = d
  Vec jdiv(const Vec& l, const Vec& d) const {
    Vec r(m_);
    for (const auto& k : cones_) {
      if (!k.soc) {
        r.segment(k.off, k.dim) = d.segment(k.off, k.dim).cwiseQuotient(l.segment(k.off, k.dim));
        continue;
      }
      const int q = k.dim - 1;
      const double l0 = l[k.off];
      const auto l1 = l.segment(k.off + 1, q);
      const double n1 = l1.norm();
      const double det = (l0 - n1) * (l0 + n1);
      const double x0 = (l0 * d[k.off] - l1.dot(d.segment(k.off + 1, q))) / det;
      r[k.off] = x0;
      r.segment(k.off + 1, q) = (d.segment(k.off + 1, q) - x0 * l1) / l0;
    }
    return r;
  }

  // largest alpha with u + alpha du inside the cone (inf when unbounded)
  double max_step(const Vec& u, const Vec& du) const {
    double alpha = kInf;
    for (const auto& k : cones_) {
      if (!k.soc) {
        for (int i = k.off; i < k.off + k.dim; ++i) {
          if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
        }
        continue;
      }
      const int q = k.dim - 1;
      const double u0 = u[k.off];
      const double d0 = du[k.off];
      const auto u1 = u.segment(k.off + 1, q);
      const auto d1 = du.segment(k.off + 1, q);
      const double nu = u1.norm();
      const double cc = (u0 - nu) * (u0 + nu);
      const double bb = u0 * d0 - u1.dot(d1);
      const double aa = d0 * d0 - d1.squaredNorm();
      double root = kInf;
      if (std::abs(aa) < 1e-300) {
        if (bb < 0) root = -cc / (2 * bb);
      } else {
        const double disc = bb * bb - aa * cc;
        if (disc >= 0) {
          const double sq = std::sqrt(disc);
          const double qq = -(bb + (bb >= 0 ? sq : -sq));
          for (double r : {qq / aa, qq != 0 ? cc / qq : kInf}) {
            if (r > 0) root = std::min(root, r);
          }
        }
      }
      if (d0 < 0) root = std::min(root, -u0 / d0);
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  // largest eigenvalue of -u over all blocks
  double max_neg_eig(const Vec& u) const {
    double t = -kInf;
    for (const auto& k : cones_) {
      if (k.soc) {
        t = std::max(t, u.segment(k.off + 1, k.dim - 1).norm() - u[k.off]);
      } else {
        t = std::max(t, (-u.segment(k.off, k.dim)).maxCoeff());
      }
    }
    return t;
  }

  // ---- scaling -------------------------------------------------------------
  Scaling nt_scaling(const Vec& s, const Vec& z) const {
    Scaling sc;
    sc.d.resize(cones_.size());
    sc.w.resize(cones_.size());
    sc.winv.resize(cones_.size());
    for (size_t i = 0; i < cones_.size(); ++i) {
      const auto& k = cones_[i];
      if (!k.soc) {
        sc.d[i] = s.segment(k.off, k.dim).cwiseQuotient(z.segment(k.off, k.dim)).cwiseSqrt();
        continue;
      }
      const int q = k.dim - 1;
      const Vec sv = s.segment(k.off, k.dim);
      const Vec zv = z.segment(k.off, k.dim);
      const double ns = sv.tail(q).norm();
      const double nz = zv.tail(q).norm();
      const double sjs = std::max((sv[0] - ns) * (sv[0] + ns), 1e-300);
      const double zjz = std::max((zv[0] - nz) * (zv[0] + nz), 1e-300);
      const Vec sb = sv / std::sqrt(sjs);
      const Vec zb = zv / std::sqrt(zjz);
      const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
      Vec wb(k.dim);
      wb[0] = (sb[0] + zb[0]) / (2 * gamma);
      wb.tail(q) = (sb.tail(q) - zb.tail(q)) / (2 * gamma);
      const double eta = std::pow(sjs / zjz, 0.25);
      Vec v = wb;
      v[0] += 1.0;
      v /= std::sqrt(2.0 * (wb[0] + 1.0));
      Mat j = Mat::Identity(k.dim, k.dim);
      j.bottomRightCorner(q, q) *= -1.0;
      const Vec jv = j * v;
      sc.w[i] = eta * (2.0 * v * v.transpose() - j);
      sc.winv[i] = (2.0 * jv * jv.transpose() - j) / eta;
    }
    return sc;
  }

  Vec apply_w(const Scaling& sc, const Vec& u, bool inverse) const {
    Vec r(m_);
    for (size_t i = 0; i < cones_.size(); ++i) {
      const auto& k = cones_[i];
      if (k.soc) {
        r.segment(k.off, k.dim) = (inverse ? sc.winv[i] : sc.w[i]) * u.segment(k.off, k.dim);
      } else if (inverse) {
        r.segment(k.off, k.dim) = u.segment(k.off, k.dim).cwiseQuotient(sc.d[i]);
      } else {
        r.segment(k.off, k.dim) = u.segment(k.off, k.dim).cwiseProduct(sc.d[i]);
      }
    }
    return r;
  }

  Vec apply_w2(const Scaling& sc, const Vec& u, bool inverse) const {
    return apply_w(sc, apply_w(sc, u, inverse), inverse);
  }

  // ---- Newton system --------------------------------------------------------
  //   [0  A' G' ] [ux]   [r1]
  //   [A  0  0  ] [uy] = [r2]
  //   [G  0 -W2 ] [uz]   [r3]
  void factor(const Scaling& sc) {
    Mat h = Mat::Zero(n_, n_);
    for (size_t i = 0; i < cones_.size(); ++i) {
      const auto& k = cones_[i];
      if (k.support.empty()) continue;
      Mat wg;
      if (k.soc) {
        wg = sc.winv[i] * k.gs;
      } else {
        wg = sc.d[i].cwiseInverse().asDiagonal() * k.gs;
      }
      const Mat blockh = wg.transpose() * wg;
      for (size_t a = 0; a < k.support.size(); ++a) {
        for (size_t b = 0; b < k.support.size(); ++b) {
          h(k.support[a], k.support[b]) += blockh(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
    }
    // small fixed shift; iterative refinement removes its effect
    const double reg = 1e-10;
    Mat kkt = Mat::Zero(n_ + p_, n_ + p_);
    kkt.topLeftCorner(n_, n_) = h;
    kkt.topLeftCorner(n_, n_).diagonal().array() += reg;
    if (p_ > 0) {
      kkt.topRightCorner(n_, p_) = a_.transpose();
      kkt.bottomLeftCorner(p_, n_) = a_;
      kkt.bottomRightCorner(p_, p_).diagonal().setConstant(-reg);
    }
    lu_.compute(kkt);
  }

  void reduced_solve(const Scaling& sc, const Vec& r1, const Vec& r2, const Vec& r3, Vec& ux, Vec& uy,
                     Vec& uz) const {
    Vec rhs(n_ + p_);
    rhs.head(n_) = r1 + g_.transpose() * apply_w2(sc, r3, true);
    rhs.tail(p_) = r2;
    const Vec sol = lu_.solve(rhs);
    ux = sol.head(n_);
    uy = sol.tail(p_);
    uz = apply_w2(sc, g_ * ux - r3, true);
  }

  void solve(const Scaling& sc, const Vec& r1, const Vec& r2, const Vec& r3, Vec& ux, Vec& uy, Vec& uz) const {
    reduced_solve(sc, r1, r2, r3, ux, uy, uz);
    for (int pass = 0; pass < 10; ++pass) {
      Vec e1 = r1 - g_.transpose() * uz;
      if (p_ > 0) e1 -= a_.transpose() * uy;
      const Vec e2 = p_ > 0 ? Vec(r2 - a_ * ux) : Vec(0);
      const Vec e3 = r3 - (g_ * ux - apply_w2(sc, uz, false));
      const double err = std::max({e1.cwiseAbs().maxCoeff(), p_ > 0 ? e2.cwiseAbs().maxCoeff() : 0.0,
                                   m_ > 0 ? e3.cwiseAbs().maxCoeff() : 0.0});
      if (!(err > 1e-15)) break;
      Vec dx, dy, dz;
      reduced_solve(sc, e1, e2, e3, dx, dy, dz);
      ux += dx;
      uy += dy;
      uz += dz;
    }
  }

  // ---- reporting ------------------------------------------------------------
  void candidate(const Vec& x, const Vec& y, const Vec& z, double tau, Vec& cx, Vec& cy, Vec& cz) const {
    cx = x / tau;
    cy = y * (cscale_ / tau);
    cz = z * (cscale_ / tau);
    rotate_pairs(sf_.blocks, cz);
  }

  SolverOptions opts_;
  detail::StandardForm sf_;
  int n_ = 0, p_ = 0, m_ = 0, degree_ = 0;
  double cscale_ = 1.0;
  Vec c_, b_, h_;
  Mat a_, g_;
  std::vector<Cone> cones_;
  Eigen::PartialPivLU<Mat> lu_;
};

ConicSolution Solver::run() {
  ConicSolution out;
  out.x = Vec::Zero(n_);
  out.y = Vec::Zero(p_);
  out.z = Vec::Zero(m_);
  if (m_ == 0) throw ValidationError("problem has no cone rows");

  // Starting point from two least-squares solves with W = I.
  Scaling unit;
  unit.d.resize(cones_.size());
  unit.w.resize(cones_.size());
  unit.winv.resize(cones_.size());
  for (size_t i = 0; i < cones_.size(); ++i) {
    if (cones_[i].soc) {
      unit.w[i] = unit.winv[i] = Mat::Identity(cones_[i].dim, cones_[i].dim);
    } else {
      unit.d[i] = Vec::Ones(cones_[i].dim);
    }
  }
  factor(unit);
  Vec x, y, z, s, tmp;
  solve(unit, Vec::Zero(n_), b_, h_, x, y, tmp);
  s = -tmp;
  Vec x2, y2;
  solve(unit, -c_, Vec::Zero(p_), Vec::Zero(m_), x2, y, z);
  const Vec e = identity();
  {
    const double ts = max_neg_eig(s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + std::max(ts, 0.0)) * e;
    const double tz = max_neg_eig(z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + std::max(tz, 0.0)) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  double best = kInf;
  int tiny_steps = 0;
  const double cnorm = std::max(1.0, c_.norm());
  const double bnorm = std::max(1.0, b_.norm());
  const double hnorm = std::max(1.0, h_.norm());
  out.status = SolveStatus::MaxIter;

  for (int it = 0;; ++it) {
    // current candidate
    Vec cx, cy, cz;
    candidate(x, y, z, tau, cx, cy, cz);
    const KktResiduals res = detail::residuals(sf_, cx, cy, cz);
    IterationRecord rec;
    rec.pcost = sf_.c.dot(cx) + sf_.c0;
    rec.dcost = -sf_.b.dot(cy) - sf_.h.dot(cz) + sf_.c0;
    rec.gap = s.dot(z) * cscale_ / (tau * tau);
    rec.pres = res.primal;
    rec.dres = res.dual;
    out.history.push_back(rec);
    out.iterations = it;
    if (!std::isfinite(res.max()) || !std::isfinite(tau)) {
      out.status = SolveStatus::NumericalFailure;
      break;
    }
    if (res.max() < best) {
      best = res.max();
      out.x = cx;
      out.y = cy;
      out.z = cz;
      out.residuals = res;
      out.objective = rec.pcost;
    }
    if (res.max() <= opts_.tol) {
      out.status = SolveStatus::Optimal;
      break;
    }

    // infeasibility certificates
    Vec hrx = g_.transpose() * z;
    if (p_ > 0) hrx += a_.transpose() * y;
    const double byhz = b_.dot(y) + h_.dot(z);
    if (byhz < 0 && hrx.norm() / cnorm / -byhz <= opts_.tol) {
      out.status = SolveStatus::Infeasible;
      out.x = Vec::Zero(n_);
      out.y = y * (cscale_ / -byhz);
      out.z = z * (cscale_ / -byhz);
      rotate_pairs(sf_.blocks, out.z);
      out.objective = kInf;
      break;
    }
    const double cx_dir = c_.dot(x);
    if (cx_dir < 0) {
      const double pr = p_ > 0 ? (a_ * x).norm() / bnorm : 0.0;
      const double gr = (s + g_ * x).norm() / hnorm;
      if (std::max(pr, gr) / -cx_dir <= opts_.tol) {
        out.status = SolveStatus::Unbounded;
        out.x = x / -cx_dir;
        out.y = Vec::Zero(p_);
        out.z = Vec::Zero(m_);
        out.objective = -kInf;
        break;
      }
    }
    if (it >= opts_.max_iter) break;

    // Newton step
    const Scaling sc = nt_scaling(s, z);
    const Vec lambda = apply_w(sc, z, false);
    factor(sc);

    Vec rx = g_.transpose() * z + c_ * tau;
    if (p_ > 0) rx += a_.transpose() * y;
    const Vec ry = p_ > 0 ? Vec(-a_ * x + b_ * tau) : Vec(0);
    const Vec rz = s + g_ * x - h_ * tau;
    const double rt = kappa + c_.dot(x) + b_.dot(y) + h_.dot(z);
    const double mu = (lambda.squaredNorm() + tau * kappa) / (degree_ + 1);

    Vec x1, y1, z1;
    solve(sc, -c_, b_, h_, x1, y1, z1);
    const double den = c_.dot(x1) + b_.dot(y1) + h_.dot(z1) - kappa / tau;

    Vec dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0, alpha = 0.0;
    Vec ds_a, dz_a;
    double dtau_a = 0.0, dkappa_a = 0.0;
    double sigma = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      Vec dsv = -jprod(lambda, lambda);
      double dk = -tau * kappa;
      if (pass == 1) {
        dsv -= jprod(apply_w(sc, ds_a, true), apply_w(sc, dz_a, false));
        dsv += sigma * mu * e;
        dk += -dtau_a * dkappa_a + sigma * mu;
      }
      const Vec wld = apply_w(sc, jdiv(lambda, dsv), false);
      Vec x0, y0, z0;
      solve(sc, -(1 - sigma) * rx, (1 - sigma) * ry, -(1 - sigma) * rz - wld, x0, y0, z0);
      dtau = (-(1 - sigma) * rt - dk / tau - (c_.dot(x0) + b_.dot(y0) + h_.dot(z0))) / den;
      dx = x0 + dtau * x1;
      dy = y0 + dtau * y1;
      dz = z0 + dtau * z1;
      ds = wld - apply_w2(sc, dz, false);
      dkappa = (dk - kappa * dtau) / tau;

      alpha = std::min(max_step(s, ds), max_step(z, dz));
      if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
      if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
      if (pass == 0) {
        const double a_aff = std::min(1.0, alpha);
        sigma = std::pow(1.0 - a_aff, 3);
        ds_a = ds;
        dz_a = dz;
        dtau_a = dtau;
        dkappa_a = dkappa;
      }
    }
    const double step = std::min(1.0, 0.99 * alpha);
    if (!std::isfinite(step) || step <= 0) {
      out.status = SolveStatus::NumericalFailure;
      break;
    }
    tiny_steps = step < 1e-10 ? tiny_steps + 1 : 0;
    if (tiny_steps >= 3) {
      out.status = SolveStatus::NumericalFailure;
      break;
    }
    x += step * dx;
    y += step * dy;
    z += step * dz;
    s += step * ds;
    tau += step * dtau;
    kappa += step * dkappa;
  }
  if (out.status == SolveStatus::Optimal || out.status == SolveStatus::MaxIter ||
      out.status == SolveStatus::NumericalFailure) {
    // the reported point is the best candidate seen
    out.residuals = detail::residuals(sf_, out.x, out.y, out.z);
  }
  return out;
}

}  // namespace

ConicSolution EmbeddedIpm::solve(const ConicProblem& p, const SolverOptions& opts) const {
  Solver solver(p, opts);
  return solver.run();
}

}  // namespace ddcqa
