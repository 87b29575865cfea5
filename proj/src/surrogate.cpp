#include "ddcqa/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "ddcqa/error.hpp"
#include "ddcqa/parallel.hpp"
#include "ddcqa/rng.hpp"

namespace ddcqa {

using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kBagStream = 0x42414747ULL;

}  // namespace

// ---------------------------------------------------------------------------
// ConvexQuadratic

double ConvexQuadratic::eval(const Eigen::VectorXd& x) const {
  const auto d = static_cast<Eigen::Index>(vars.size());
  long double acc = c;
  for (Eigen::Index i = 0; i < d; ++i) {
    const long double xi = x[vars[static_cast<size_t>(i)]];
    long double row = b[i];
    for (Eigen::Index j = 0; j < d; ++j) row += static_cast<long double>(a(i, j)) * x[vars[static_cast<size_t>(j)]];
    acc += row * xi;
  }
  return static_cast<double>(acc);
}

Eigen::VectorXd ConvexQuadratic::eval_rows(const Eigen::MatrixXd& xs) const {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index r = 0; r < xs.rows(); ++r) out[r] = eval(xs.row(r).transpose());
  return out;
}

double ConvexQuadratic::min_eigenvalue() const {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Features

FeatureSpec dense_spec(std::vector<int> vars) {
  FeatureSpec spec;
  spec.vars = std::move(vars);
  const int d = static_cast<int>(spec.vars.size());
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) spec.pairs.emplace_back(a, b);
  }
  return spec;
}

FeatureSpec target_spec(const QuantityId& target, const AdmittanceMatrix& y, FeaturePattern pattern) {
  LocalQuadratic lq = injection_matrix(target, y);
  if (pattern == FeaturePattern::Dense) return dense_spec(lq.vars);
  FeatureSpec spec;
  spec.vars = std::move(lq.vars);
  spec.pairs = std::move(lq.structure);
  return spec;
}

Eigen::VectorXd quadratic_features(const Eigen::VectorXd& x, const FeatureSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.vars.size());
  if (x.size() != d) throw ValidationError("feature input has " + std::to_string(x.size()) + " entries, expected " +
                                           std::to_string(d));
  Eigen::VectorXd f(spec.feature_count());
  f[0] = 1.0;
  f.segment(1, d) = x;
  Eigen::Index k = 1 + d;
  for (const auto& [a, b] : spec.pairs) f[k++] = x[a] * x[b];
  return f;
}

Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ValidationError("nearest_psd needs a square matrix");
  if (m.size() == 0) return m;
  const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(skew <= 1e-9)) throw ValidationError("nearest_psd input is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double loss(double y, double yhat) {
  const double r = y - yhat;
  return 0.5 * r * r;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, const std::vector<int>& vars) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(vars.size()));
  for (size_t k = 0; k < vars.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(vars[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Ridge design

QuadraticDesign::QuadraticDesign(const Eigen::MatrixXd& xs, const FeatureSpec& spec, const LearnerOptions& opts)
    : spec_(spec), xs_(xs), rows_(xs.rows()) {
  const auto d = static_cast<Eigen::Index>(spec.vars.size());
  if (xs.cols() != d) throw ValidationError("design columns do not match the feature spec");
  if (rows_ == 0) throw ValidationError("cannot fit on an empty dataset");
  if (!(opts.ridge >= 0.0)) throw ValidationError("ridge weight must be nonnegative");

  // Drop constant columns, then scale what is left with one scale per bus.
  std::vector<double> mean(static_cast<size_t>(d)), var(static_cast<size_t>(d));
  std::vector<int> local_of(static_cast<size_t>(d), -1);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = xs.col(j).mean();
    const double range = xs.col(j).maxCoeff() - xs.col(j).minCoeff();
    mean[static_cast<size_t>(j)] = mu;
    var[static_cast<size_t>(j)] = (xs.col(j).array() - mu).square().mean();
    if (range > 1e-13 * (1.0 + std::abs(mu))) {
      local_of[static_cast<size_t>(j)] = static_cast<int>(kept_.size());
      kept_.push_back(static_cast<int>(j));
    }
  }
  std::map<int, std::pair<double, int>> group;  // bus node -> (variance sum, count)
  for (int j : kept_) {
    auto& g = group[spec.vars[static_cast<size_t>(j)] / 2];
    g.first += var[static_cast<size_t>(j)];
    g.second += 1;
  }
  const auto k = static_cast<Eigen::Index>(kept_.size());
  mean_.resize(k);
  scale_.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const int j = kept_[static_cast<size_t>(i)];
    const auto& g = group[spec.vars[static_cast<size_t>(j)] / 2];
    mean_[i] = mean[static_cast<size_t>(j)];
    scale_[i] = std::sqrt(g.first / g.second);
  }
  for (size_t p = 0; p < spec.pairs.size(); ++p) {
    if (local_of[static_cast<size_t>(spec.pairs[p].first)] >= 0 &&
        local_of[static_cast<size_t>(spec.pairs[p].second)] >= 0) {
      kept_pairs_.push_back(static_cast<int>(p));
    }
  }

  Eigen::MatrixXd z(rows_, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    z.col(i) = (xs.col(kept_[static_cast<size_t>(i)]).array() - mean_[i]) / scale_[i];
  }
  const auto p = 1 + k + static_cast<Eigen::Index>(kept_pairs_.size());
  Eigen::MatrixXd phi(rows_, p);
  phi.col(0).setOnes();
  phi.middleCols(1, k) = z;
  Eigen::Index col = 1 + k;
  for (int idx : kept_pairs_) {
    const auto [a, b] = spec.pairs[static_cast<size_t>(idx)];
    const int la = local_of[static_cast<size_t>(a)], lb = local_of[static_cast<size_t>(b)];
    // Cross terms carry sqrt(2) so the penalty is the Frobenius norm of the Hessian.
    const double w = a == b ? 1.0 : std::numbers::sqrt2;
    phi.col(col++) = w * z.col(la).cwiseProduct(z.col(lb));
  }
  lambda_ = opts.ridge_relative ? opts.ridge * phi.squaredNorm() / static_cast<double>(p) : opts.ridge;

  if (lambda_ == 0.0) {
    ridge_qr_.compute(phi);
    if (ridge_qr_.rank() < p) {
      throw NumericError("underdetermined fit: " + std::to_string(rows_) + " samples for " + std::to_string(p) +
                         " features (rank " + std::to_string(ridge_qr_.rank()) +
                         "); use a ridge penalty or the admittance-sparse pattern");
    }
  } else {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(rows_ + p - 1, p);
    aug.topRows(rows_) = phi;
    aug.bottomRightCorner(p - 1, p - 1).diagonal().setConstant(std::sqrt(lambda_));
    ridge_qr_.compute(aug);
  }
  Eigen::MatrixXd lin(rows_, 1 + k);
  lin.col(0).setOnes();
  lin.rightCols(k) = z;
  linear_qr_.compute(lin);
}

ConvexQuadratic QuadraticDesign::fit(const Eigen::VectorXd& response, bool project) const {
  if (response.size() != rows_) throw ValidationError("response length does not match the design");
  const auto k = static_cast<Eigen::Index>(kept_.size());
  const auto p = 1 + k + static_cast<Eigen::Index>(kept_pairs_.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ridge_qr_.rows());
  rhs.head(rows_) = response;
  const Eigen::VectorXd theta = ridge_qr_.solve(rhs);

  std::vector<int> local_of(spec_.vars.size(), -1);
  for (Eigen::Index i = 0; i < k; ++i) local_of[static_cast<size_t>(kept_[static_cast<size_t>(i)])] = static_cast<int>(i);
  Eigen::MatrixXd az = Eigen::MatrixXd::Zero(k, k);
  Eigen::Index col = 1 + k;
  for (int idx : kept_pairs_) {
    const auto [a, b] = spec_.pairs[static_cast<size_t>(idx)];
    const int la = local_of[static_cast<size_t>(a)], lb = local_of[static_cast<size_t>(b)];
    const double t = theta[col++];
    if (la == lb) {
      az(la, la) += t;
    } else {
      const double half = 0.5 * std::numbers::sqrt2 * t;
      az(la, lb) += half;
      az(lb, la) += half;
    }
  }
  (void)p;
  if (project) az = nearest_psd(az);

  // Express the Hessian in the original coordinates and refit the rest there.
  const auto d = static_cast<Eigen::Index>(spec_.vars.size());
  ConvexQuadratic q;
  q.vars = spec_.vars;
  q.a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      q.a(kept_[static_cast<size_t>(i)], kept_[static_cast<size_t>(j)]) = az(i, j) / (scale_[i] * scale_[j]);
    }
  }
  q.b = Eigen::VectorXd::Zero(d);
  refit_linear(q, response);
  return q;
}

void QuadraticDesign::refit_linear(ConvexQuadratic& q, const Eigen::VectorXd& response) const {
  const auto k = static_cast<Eigen::Index>(kept_.size());
  const auto d = static_cast<Eigen::Index>(spec_.vars.size());
  // Quadratic part about the mean, so the linear solve sees centered data.
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < k; ++i) mu[kept_[static_cast<size_t>(i)]] = mean_[i];
  Eigen::VectorXd resid(rows_);
  for (Eigen::Index r = 0; r < rows_; ++r) {
    const Eigen::VectorXd dx = xs_.row(r).transpose() - mu;
    resid[r] = response[r] - dx.dot(q.a * dx);
  }
  const Eigen::VectorXd beta = linear_qr_.solve(resid);
  // Back to x: (x-mu)'A(x-mu) + bz'(x-mu)/s + c0.
  Eigen::VectorXd bs = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < k; ++i) bs[kept_[static_cast<size_t>(i)]] = beta[1 + i] / scale_[i];
  const Eigen::VectorXd a_mu = q.a * mu;
  q.b = bs - 2.0 * a_mu;
  q.c = beta[0] + mu.dot(a_mu) - bs.dot(mu);
}

ConvexQuadratic fit_base_learner(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                                 const LearnerOptions& opts) {
  if (opts.enforce_min_samples && train.size() < minimum_samples(train.bus_count, train.phase_count)) {
    throw ValidationError("training set has " + std::to_string(train.size()) + " samples; at least " +
                          std::to_string(minimum_samples(train.bus_count, train.phase_count)) + " are required");
  }
  const FeatureSpec spec = target_spec(target, y, opts.pattern_for(target));
  QuadraticDesign design(gather_columns(train.x, spec.vars), spec, opts);
  ConvexQuadratic q = design.fit(train.y.col(train.target_column(target)), opts.project_each);
  q.target = target;
  return q;
}

// ---------------------------------------------------------------------------
// Ensembles

std::string method_name(Method m) {
  switch (m) {
    case Method::PR: return "pr";
    case Method::GB: return "gb";
    case Method::BAG: return "bag";
  }
  return "pr";
}

Method parse_method(const std::string& s) {
  if (s == "pr") return Method::PR;
  if (s == "gb") return Method::GB;
  if (s == "bag") return Method::BAG;
  throw ValidationError("unknown method '" + s + "' (expected pr, gb, or bag)");
}

double EnsembleModel::eval(const Eigen::VectorXd& x) const {
  long double acc = gamma;
  for (size_t t = 0; t < members.size(); ++t) acc += static_cast<long double>(weights[t]) * members[t].eval(x);
  return static_cast<double>(acc);
}

ConvexQuadratic collapse(const EnsembleModel& model) {
  ConvexQuadratic out;
  out.target = model.target;
  if (model.members.empty()) {
    out.vars = model.collapsed.vars;
    out.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.vars.size()), static_cast<Eigen::Index>(out.vars.size()));
    out.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.vars.size()));
    out.c = model.gamma;
    return out;
  }
  out.vars = model.members.front().vars;
  const auto d = static_cast<Eigen::Index>(out.vars.size());
  out.a = Eigen::MatrixXd::Zero(d, d);
  out.b = Eigen::VectorXd::Zero(d);
  out.c = model.gamma;
  for (size_t t = 0; t < model.members.size(); ++t) {
    const auto& m = model.members[t];
    if (m.vars != out.vars) throw ValidationError("ensemble members disagree on their variables");
    out.a += model.weights[t] * m.a;
    out.b += model.weights[t] * m.b;
    out.c += model.weights[t] * m.c;
  }
  out.a = 0.5 * (out.a + out.a.transpose());
  return out;
}

namespace {

void check_size(const Dataset& train, const LearnerOptions& opts) {
  if (train.size() == 0) throw ValidationError("cannot fit on an empty dataset");
  if (opts.enforce_min_samples && train.size() < minimum_samples(train.bus_count, train.phase_count)) {
    throw ValidationError("training set has " + std::to_string(train.size()) + " samples; at least " +
                          std::to_string(minimum_samples(train.bus_count, train.phase_count)) + " are required");
  }
}

}  // namespace

EnsembleModel pr_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                     const LearnerOptions& opts) {
  check_size(train, opts);
  const FeatureSpec spec = target_spec(target, y, opts.pattern_for(target));
  QuadraticDesign design(gather_columns(train.x, spec.vars), spec, opts);
  EnsembleModel m;
  m.kind = Method::PR;
  m.target = target;
  ConvexQuadratic q = design.fit(train.y.col(train.target_column(target)), true);
  q.target = target;
  m.members.push_back(q);
  m.weights.push_back(1.0);
  m.lambda = design.lambda();
  m.collapsed = collapse(m);
  return m;
}

EnsembleModel gb_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                     const BoostOptions& boost, const LearnerOptions& opts, const Dataset* test, FitTrace* trace) {
  if (boost.learners < 1) throw ValidationError("learner count T must be at least 1");
  check_size(train, opts);
  const FeatureSpec spec = target_spec(target, y, opts.pattern_for(target));
  QuadraticDesign design(gather_columns(train.x, spec.vars), spec, opts);
  const int col = train.target_column(target);
  const Eigen::VectorXd obs = train.y.col(col);

  EnsembleModel m;
  m.kind = Method::GB;
  m.target = target;
  m.requested = boost.learners;
  m.lambda = design.lambda();
  m.gamma = obs.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(obs.size(), m.gamma);
  Eigen::VectorXd pred_test;
  if (test) pred_test = Eigen::VectorXd::Constant(test->size(), m.gamma);
  Eigen::VectorXd resid = obs - pred;
  double sse = resid.squaredNorm();
  int stalls = 0;
  for (int t = 1; t <= boost.learners; ++t) {
    ConvexQuadratic h;
    try {
      h = design.fit(resid, opts.project_each);
    } catch (const Error& e) {
      throw Error("learner " + std::to_string(t) + " of " + target.name(train.phase_count) + ": " + e.what());
    }
    h.target = target;
    const Eigen::VectorXd hx = h.eval_rows(train.x);
    double beta = 0.0;
    if (boost.beta_mode == BetaMode::Constant) {
      beta = boost.beta;
    } else {
      const double den = hx.squaredNorm();
      const double num = resid.dot(hx);
      if (den > 0.0 && num > 0.0) beta = num / den;
    }
    Eigen::VectorXd next = resid - beta * hx;
    const double next_sse = next.squaredNorm();
    if (beta > 0.0 && boost.beta_mode == BetaMode::Search && !(next_sse < sse)) beta = 0.0;
    if (beta > 0.0) {
      m.members.push_back(std::move(h));
      m.weights.push_back(beta);
      pred += beta * hx;
      resid = std::move(next);
      sse = next_sse;
      if (test) pred_test += beta * m.members.back().eval_rows(test->x);
      stalls = 0;
    } else {
      ++stalls;
    }
    if (trace) {
      trace->train.push_back(pred);
      if (test) trace->test.push_back(pred_test);
    }
    if (stalls >= boost.stall_limit && t < boost.learners) {
      m.stopped_at = t;
      if (trace) {
        for (int s = t + 1; s <= boost.learners; ++s) {
          trace->train.push_back(pred);
          if (test) trace->test.push_back(pred_test);
        }
      }
      break;
    }
  }
  m.collapsed = collapse(m);
  if (!opts.project_each) {
    m.collapsed.a = nearest_psd(m.collapsed.a);
    design.refit_linear(m.collapsed, obs);
  }
  return m;
}

EnsembleModel bagging_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                          const BagOptions& bag, const LearnerOptions& opts, const Dataset* test, FitTrace* trace) {
  if (bag.bootstraps < 1) throw ValidationError("bootstrap count BT must be at least 1");
  check_size(train, opts);
  const int size = bag.bootstrap_size > 0 ? bag.bootstrap_size : train.size();
  if (size > train.size()) throw ValidationError("bootstrap size exceeds the training size");
  const FeatureSpec spec = target_spec(target, y, opts.pattern_for(target));
  const Eigen::MatrixXd xs = gather_columns(train.x, spec.vars);
  const Eigen::VectorXd obs = train.y.col(train.target_column(target));

  EnsembleModel m;
  m.kind = Method::BAG;
  m.target = target;
  m.requested = bag.bootstraps;
  m.bootstrap_size = size;
  m.seed = bag.seed;
  for (int bt = 0; bt < bag.bootstraps; ++bt) {
    std::vector<int> rows(static_cast<size_t>(size));
    if (bag.identity_resample) {
      for (int i = 0; i < size; ++i) rows[static_cast<size_t>(i)] = i;
    } else {
      // The phase is left out of the key so balanced phases resample alike.
      KeyedStream rng{kBagStream, bag.seed, static_cast<std::uint64_t>(target.kind),
                      static_cast<std::uint64_t>(target.element), static_cast<std::uint64_t>(bt)};
      for (auto& r : rows) r = static_cast<int>(rng.below(static_cast<std::uint64_t>(train.size())));
    }
    Eigen::MatrixXd bx(size, xs.cols());
    Eigen::VectorXd by(size);
    for (int i = 0; i < size; ++i) {
      bx.row(i) = xs.row(rows[static_cast<size_t>(i)]);
      by[i] = obs[rows[static_cast<size_t>(i)]];
    }
    ConvexQuadratic h;
    try {
      QuadraticDesign design(bx, spec, opts);
      if (bt == 0) m.lambda = design.lambda();
      h = design.fit(by, true);
    } catch (const Error& e) {
      throw Error("bootstrap " + std::to_string(bt + 1) + " of " + target.name(train.phase_count) + ": " + e.what());
    }
    h.target = target;
    if (trace) {
      trace->train.push_back(h.eval_rows(train.x));
      if (test) trace->test.push_back(h.eval_rows(test->x));
    }
    m.members.push_back(std::move(h));
    m.weights.push_back(1.0 / bag.bootstraps);
  }
  m.collapsed = collapse(m);
  return m;
}

// ---------------------------------------------------------------------------
// Scoring

std::string family_name(Family f) {
  switch (f) {
    case Family::P: return "P";
    case Family::Q: return "Q";
    case Family::Pij: return "Pij";
    case Family::Qij: return "Qij";
  }
  return "P";
}

bool in_family(const QuantityId& id, Family f) {
  switch (f) {
    case Family::P: return id.kind == QuantityKind::P;
    case Family::Q: return id.kind == QuantityKind::Q;
    case Family::Pij: return id.kind == QuantityKind::Pij;
    case Family::Qij: return id.kind == QuantityKind::Qij;
  }
  return false;
}

namespace {

double rmse_of(const Eigen::VectorXd& pred, const Eigen::VectorXd& obs) {
  return std::sqrt((pred - obs).squaredNorm() / static_cast<double>(obs.size()));
}

}  // namespace

double target_rmse(const ConvexQuadratic& q, const Dataset& ds) {
  if (ds.size() == 0) throw ValidationError("cannot score on an empty dataset");
  return rmse_of(q.eval_rows(ds.x), ds.y.col(ds.target_column(q.target)));
}

double family_rmse(const std::vector<ConvexQuadratic>& models, const Dataset& ds, Family f) {
  double sum = 0.0;
  int count = 0;
  for (const auto& q : models) {
    if (!in_family(q.target, f)) continue;
    sum += target_rmse(q, ds);
    ++count;
  }
  if (count == 0) throw ValidationError("no models in family " + family_name(f));
  return sum / count;
}

std::vector<SweepPoint> tune_sweep(const Dataset& train, const Dataset& test, Family family,
                                   const std::vector<QuantityId>& targets, const AdmittanceMatrix& y, Method method,
                                   const BoostOptions& boost, const BagOptions& bag, const LearnerOptions& opts,
                                   int workers) {
  if (method == Method::PR) throw ValidationError("sweeps need gb or bag");
  if (test.size() == 0 || train.size() == 0) throw ValidationError("cannot sweep on an empty dataset");
  std::vector<QuantityId> fam;
  for (const auto& id : targets) {
    if (in_family(id, family)) fam.push_back(id);
  }
  if (fam.empty()) throw ValidationError("no targets in family " + family_name(family));
  const int steps = method == Method::GB ? boost.learners : bag.bootstraps;
  if (steps < 1) throw ValidationError("empty sweep");

  // Per target and step: train, test, single train, single test.
  std::vector<Eigen::MatrixXd> per(fam.size());
  parallel_for(static_cast<int>(fam.size()), workers, [&](int k) {
    const QuantityId& id = fam[static_cast<size_t>(k)];
    const Eigen::VectorXd ytr = train.y.col(train.target_column(id));
    const Eigen::VectorXd yte = test.y.col(test.target_column(id));
    FitTrace tr;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(steps, 4);
    if (method == Method::GB) {
      gb_fit(train, id, y, boost, opts, &test, &tr);
      for (int s = 0; s < steps; ++s) {
        out(s, 0) = rmse_of(tr.train[static_cast<size_t>(s)], ytr);
        out(s, 1) = rmse_of(tr.test[static_cast<size_t>(s)], yte);
      }
    } else {
      bagging_fit(train, id, y, bag, opts, &test, &tr);
      Eigen::VectorXd sum_tr = Eigen::VectorXd::Zero(ytr.size());
      Eigen::VectorXd sum_te = Eigen::VectorXd::Zero(yte.size());
      for (int s = 0; s < steps; ++s) {
        sum_tr += tr.train[static_cast<size_t>(s)];
        sum_te += tr.test[static_cast<size_t>(s)];
        out(s, 0) = rmse_of(sum_tr / (s + 1), ytr);
        out(s, 1) = rmse_of(sum_te / (s + 1), yte);
        out(s, 2) = rmse_of(tr.train[static_cast<size_t>(s)], ytr);
        out(s, 3) = rmse_of(tr.test[static_cast<size_t>(s)], yte);
      }
    }
    per[static_cast<size_t>(k)] = std::move(out);
  });
  std::vector<SweepPoint> curve(static_cast<size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (const auto& m : per) acc += m.row(s).transpose();
    acc /= static_cast<double>(per.size());
    curve[static_cast<size_t>(s)] = {s + 1, acc[0], acc[1], acc[2], acc[3]};
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

json lower_triangle(const Eigen::MatrixXd& a) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) arr.push_back(a(i, j));
  }
  return arr;
}

Eigen::MatrixXd from_lower(const json& arr, Eigen::Index d) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != d * (d + 1) / 2) {
    throw ParseError("model Hessian has the wrong number of entries", 0);
  }
  Eigen::MatrixXd a(d, d);
  size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      a(i, j) = a(j, i) = arr[k++].get<double>();
    }
  }
  return a;
}

json quad_json(const ConvexQuadratic& q) {
  json j;
  j["A"] = lower_triangle(q.a);
  j["B"] = std::vector<double>(q.b.data(), q.b.data() + q.b.size());
  j["c"] = q.c;
  return j;
}

ConvexQuadratic quad_from(const json& j, const QuantityId& target, const std::vector<int>& vars) {
  ConvexQuadratic q;
  q.target = target;
  q.vars = vars;
  const auto d = static_cast<Eigen::Index>(vars.size());
  q.a = from_lower(j.at("A"), d);
  const auto b = j.at("B").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(b.size()) != d) throw ParseError("model linear term has the wrong length", 0);
  q.b = Eigen::Map<const Eigen::VectorXd>(b.data(), d);
  q.c = j.at("c").get<double>();
  return q;
}

}  // namespace

std::string render_model(const EnsembleModel& m, int phase_count, bool with_members) {
  json j;
  j["kind"] = method_name(m.kind);
  j["target_id"] = m.target.name(phase_count);
  j["variable_map"] = m.collapsed.vars;
  const json body = quad_json(m.collapsed);
  j["A"] = body["A"];
  j["B"] = body["B"];
  j["c"] = body["c"];
  json meta;
  if (m.kind == Method::GB) meta["T"] = m.requested;
  if (m.kind == Method::BAG) {
    meta["BT"] = m.requested;
    meta["bootstrap_size"] = m.bootstrap_size;
  }
  meta["lambda"] = m.lambda;
  meta["seed"] = m.seed;
  meta["train_fingerprint"] = m.train_fingerprint;
  meta["gamma"] = m.gamma;
  if (with_members) meta["learners"] = m.members.size();
  if (m.stopped_at > 0) meta["stopped_at"] = m.stopped_at;
  j["meta"] = meta;
  if (with_members) {
    json members = json::array();
    for (size_t t = 0; t < m.members.size(); ++t) {
      json e = quad_json(m.members[t]);
      e["weight"] = m.weights[t];
      members.push_back(e);
    }
    j["members"] = members;
  }
  return j.dump(1) + "\n";
}

EnsembleModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what(), 0);
  }
  try {
    EnsembleModel m;
    m.kind = parse_method(j.at("kind").get<std::string>());
    m.target = QuantityId::parse(j.at("target_id").get<std::string>());
    const auto vars = j.at("variable_map").get<std::vector<int>>();
    m.collapsed = quad_from(j, m.target, vars);
    const json& meta = j.at("meta");
    m.requested = meta.contains("T") ? meta["T"].get<int>() : meta.contains("BT") ? meta["BT"].get<int>() : 1;
    m.bootstrap_size = meta.value("bootstrap_size", 0);
    m.lambda = meta.value("lambda", 0.0);
    m.seed = meta.value("seed", std::uint64_t{0});
    m.train_fingerprint = meta.value("train_fingerprint", std::string());
    m.gamma = meta.value("gamma", 0.0);
    m.stopped_at = meta.value("stopped_at", 0);
    if (j.contains("members")) {
      for (const auto& e : j["members"]) {
        m.members.push_back(quad_from(e, m.target, vars));
        m.weights.push_back(e.at("weight").get<double>());
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model schema violation: ") + e.what(), 0);
  }
}

}  // namespace ddcqa
