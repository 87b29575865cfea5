#include "ddcqa/conic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ddcqa/error.hpp"
#include "standard_form.hpp"

namespace ddcqa {

double LinearExpr::eval(const Eigen::VectorXd& x) const {
  long double acc = constant;
  for (const auto& [v, k] : terms) acc += static_cast<long double>(k) * x[v];
  return static_cast<double>(acc);
}

void ConicProblem::validate() const {
  const int n = var_count();
  auto check = [n](const LinearExpr& e) {
    for (const auto& [v, k] : e.terms) {
      if (v < 0 || v >= n) throw ValidationError("expression references variable " + std::to_string(v));
      if (!std::isfinite(k)) throw ValidationError("non-finite coefficient");
    }
    if (!std::isfinite(e.constant)) throw ValidationError("non-finite constant");
  };
  check(objective);
  for (const auto& e : equalities) check(e);
  for (const auto& blk : cones) {
    if (blk.rows.empty()) throw ValidationError("empty cone block");
    if (blk.tag.empty()) throw ValidationError("cone block without a tag");
    if (blk.type == ConeType::RotatedSOC && blk.rows.size() < 3) {
      throw ValidationError("rotated cone block '" + blk.tag + "' has fewer than 3 rows");
    }
    if (blk.type == ConeType::SOC && blk.rows.size() < 2) {
      throw ValidationError("cone block '" + blk.tag + "' has fewer than 2 rows");
    }
    for (const auto& e : blk.rows) check(e);
  }
}

ConeBlock quad_to_soc(const ConvexQuadratic& q, const LinearExpr& bound, const std::vector<int>& var_of,
                      std::string tag) {
  const auto d = static_cast<Eigen::Index>(q.vars.size());
  if (static_cast<Eigen::Index>(var_of.size()) != d) throw ValidationError("variable map size mismatch");
  // u = bound - B'X - c
  LinearExpr u = bound;
  u.constant -= q.c;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (q.b[i] != 0.0) u.add(var_of[static_cast<size_t>(i)], -q.b[i]);
  }
  ConeBlock blk;
  blk.tag = std::move(tag);
  Eigen::MatrixXd f;
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q.a + q.a.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, q.a.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-9 * scale) {
      throw NumericError("quadratic for " + q.target.name(1) + " is not convex (eigenvalue " +
                         std::to_string(ev.minCoeff()) + ")");
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (ev[k] > 1e-12) keep.push_back(k);
    }
    f.resize(d, static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
      f.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(ev[keep[k]]);
    }
  }
  if (f.cols() == 0) {
    blk.type = ConeType::NonNeg;
    blk.rows.push_back(std::move(u));
    return blk;
  }
  blk.type = ConeType::RotatedSOC;
  blk.rows.push_back(std::move(u));
  blk.rows.emplace_back(0.5);
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    LinearExpr w;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (f(i, k) != 0.0) w.add(var_of[static_cast<size_t>(i)], f(i, k));
    }
    blk.rows.push_back(std::move(w));
  }
  return blk;
}

bool cone_contains(const ConeBlock& block, const Eigen::VectorXd& x, double tol) {
  std::vector<double> v;
  for (const auto& r : block.rows) v.push_back(r.eval(x));
  switch (block.type) {
    case ConeType::NonNeg:
      for (double e : v) {
        if (e < -tol) return false;
      }
      return true;
    case ConeType::SOC: {
      double s = 0.0;
      for (size_t k = 1; k < v.size(); ++k) s += v[k] * v[k];
      return std::sqrt(s) <= v[0] + tol;
    }
    case ConeType::RotatedSOC: {
      double s = 0.0;
      for (size_t k = 2; k < v.size(); ++k) s += v[k] * v[k];
      return v[0] >= -tol && v[1] >= -tol && s <= 2.0 * v[0] * v[1] + tol;
    }
  }
  return false;
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIter: return "max-iter";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

namespace detail {

StandardForm standard_form(const ConicProblem& p) {
  p.validate();
  StandardForm sf;
  sf.n = p.var_count();
  sf.c = Eigen::VectorXd::Zero(sf.n);
  for (const auto& [v, k] : p.objective.terms) sf.c[v] += k;
  sf.c0 = p.objective.constant;
  const auto neq = static_cast<Eigen::Index>(p.equalities.size());
  sf.a = Eigen::MatrixXd::Zero(neq, sf.n);
  sf.b = Eigen::VectorXd::Zero(neq);
  for (Eigen::Index r = 0; r < neq; ++r) {
    const auto& e = p.equalities[static_cast<size_t>(r)];
    for (const auto& [v, k] : e.terms) sf.a(r, v) += k;
    sf.b[r] = -e.constant;
  }
  int m = 0;
  for (const auto& blk : p.cones) m += static_cast<int>(blk.rows.size());
  sf.g = Eigen::MatrixXd::Zero(m, sf.n);
  sf.h = Eigen::VectorXd::Zero(m);
  int off = 0;
  for (const auto& blk : p.cones) {
    sf.blocks.push_back({blk.type, off, static_cast<int>(blk.rows.size())});
    for (const auto& e : blk.rows) {
      // s = e(x) = h - G x
      for (const auto& [v, k] : e.terms) sf.g(off, v) -= k;
      sf.h[off] = e.constant;
      ++off;
    }
  }
  return sf;
}

double cone_violation(const StandardForm& sf, const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (const auto& blk : sf.blocks) {
    const auto seg = v.segment(blk.offset, blk.dim);
    switch (blk.type) {
      case ConeType::NonNeg:
        acc += seg.cwiseMin(0.0).squaredNorm();
        break;
      case ConeType::SOC: {
        const double e = seg.tail(blk.dim - 1).norm() - seg[0];
        if (e > 0) acc += e * e;
        break;
      }
      case ConeType::RotatedSOC: {
        const double t = (seg[0] + seg[1]) / std::numbers::sqrt2;
        const double u = (seg[0] - seg[1]) / std::numbers::sqrt2;
        const double e = std::sqrt(u * u + seg.tail(blk.dim - 2).squaredNorm()) - t;
        if (e > 0) acc += e * e;
        break;
      }
    }
  }
  return std::sqrt(acc);
}

KktResiduals residuals(const StandardForm& sf, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& z) {
  if (x.size() != sf.n || y.size() != sf.b.size() || z.size() != sf.h.size()) {
    throw ValidationError("solution dimensions do not match the problem");
  }
  KktResiduals r;
  const Eigen::VectorXd s = sf.h - sf.g * x;
  const double eq = sf.b.size() ? (sf.a * x - sf.b).norm() : 0.0;
  r.primal = std::max(eq, cone_violation(sf, s)) / (1.0 + std::max(sf.b.norm(), sf.h.norm()));
  Eigen::VectorXd stat = sf.c + sf.g.transpose() * z;
  if (sf.b.size()) stat += sf.a.transpose() * y;
  r.dual = std::max(stat.norm(), cone_violation(sf, z)) / (1.0 + sf.c.norm());
  const double pobj = sf.c.dot(x);
  const double dobj = -sf.b.dot(y) - sf.h.dot(z);
  r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
  return r;
}

}  // namespace detail

KktResiduals kkt_residuals(const ConicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z) {
  return detail::residuals(detail::standard_form(p), x, y, z);
}

KktResiduals kkt_residuals(const ConicProblem& p, const ConicSolution& s) { return kkt_residuals(p, s.x, s.y, s.z); }

ConicSolution solve_ipm(const ConicProblem& p, const SolverOptions& opts) { return EmbeddedIpm().solve(p, opts); }

// ---------------------------------------------------------------------------
// Text format
//
//   conic 1
//   vars <n>
//   <name>                      (n lines)
//   objective <constant> <k> <var> <coef> ...
//   equalities <count>
//   row <constant> <k> <var> <coef> ...
//   cones <count>
//   cone <nonneg|soc|rsoc> <rows> <tag>
//   row ...                     (rows lines)

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_expr(std::ostringstream& os, const char* head, const LinearExpr& e) {
  os << head << " " << num(e.constant) << " " << e.terms.size();
  for (const auto& [v, k] : e.terms) os << " " << v << " " << num(k);
  os << "\n";
}

const char* cone_word(ConeType t) {
  switch (t) {
    case ConeType::NonNeg: return "nonneg";
    case ConeType::SOC: return "soc";
    case ConeType::RotatedSOC: return "rsoc";
  }
  return "nonneg";
}

class Reader {
public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::istringstream next(const std::string& expect) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ls(line);
      if (!expect.empty()) {
        std::string word;
        ls >> word;
        if (word != expect) throw ParseError("expected '" + expect + "' but found '" + word + "'", line_);
      }
      return ls;
    }
    throw ParseError("unexpected end of input, expected '" + expect + "'", line_);
  }

  std::string raw_line() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError("unexpected end of input", line_);
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  LinearExpr expr(const std::string& head, int n) {
    auto ls = next(head);
    LinearExpr e;
    size_t k = 0;
    std::string tok;
    if (!(ls >> tok)) throw ParseError("missing constant", line_);
    e.constant = number(tok);
    if (!(ls >> k)) throw ParseError("missing term count", line_);
    for (size_t i = 0; i < k; ++i) {
      int v = 0;
      if (!(ls >> v >> tok)) throw ParseError("truncated term list", line_);
      if (v < 0 || v >= n) throw ParseError("variable index out of range", line_);
      e.terms.emplace_back(v, number(tok));
    }
    return e;
  }

  double number(const std::string& tok) const {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError("invalid number '" + tok + "'", line_);
    return v;
  }

  int line() const { return line_; }

private:
  std::istringstream in_;
  int line_ = 0;
};

}  // namespace

std::string write_conic_text(const ConicProblem& p) {
  std::ostringstream os;
  os << "conic 1\n";
  os << "vars " << p.var_count() << "\n";
  for (const auto& name : p.var_names) os << name << "\n";
  write_expr(os, "objective", p.objective);
  os << "equalities " << p.equalities.size() << "\n";
  for (const auto& e : p.equalities) write_expr(os, "row", e);
  os << "cones " << p.cones.size() << "\n";
  for (const auto& blk : p.cones) {
    os << "cone " << cone_word(blk.type) << " " << blk.rows.size() << " " << blk.tag << "\n";
    for (const auto& e : blk.rows) write_expr(os, "row", e);
  }
  return os.str();
}

ConicProblem parse_conic_text(const std::string& text) {
  Reader rd(text);
  {
    auto ls = rd.next("conic");
    int version = 0;
    if (!(ls >> version) || version != 1) throw ParseError("unsupported format version", rd.line());
  }
  ConicProblem p;
  int n = 0;
  {
    auto ls = rd.next("vars");
    if (!(ls >> n) || n < 0) throw ParseError("invalid variable count", rd.line());
  }
  for (int i = 0; i < n; ++i) p.var_names.push_back(rd.raw_line());
  p.objective = rd.expr("objective", n);
  size_t count = 0;
  {
    auto ls = rd.next("equalities");
    if (!(ls >> count)) throw ParseError("invalid equality count", rd.line());
  }
  for (size_t i = 0; i < count; ++i) p.equalities.push_back(rd.expr("row", n));
  {
    auto ls = rd.next("cones");
    if (!(ls >> count)) throw ParseError("invalid cone count", rd.line());
  }
  for (size_t i = 0; i < count; ++i) {
    auto ls = rd.next("cone");
    std::string word;
    size_t rows = 0;
    if (!(ls >> word >> rows)) throw ParseError("invalid cone header", rd.line());
    ConeBlock blk;
    if (word == "nonneg") {
      blk.type = ConeType::NonNeg;
    } else if (word == "soc") {
      blk.type = ConeType::SOC;
    } else if (word == "rsoc") {
      blk.type = ConeType::RotatedSOC;
    } else {
      throw ParseError("unknown cone type '" + word + "'", rd.line());
    }
    std::getline(ls >> std::ws, blk.tag);
    for (size_t r = 0; r < rows; ++r) blk.rows.push_back(rd.expr("row", n));
    p.cones.push_back(std::move(blk));
  }
  p.validate();
  return p;
}

}  // namespace ddcqa
