#include "eshed/qpcore.hpp"

#include "eshed/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <functional>
#include <cmath>
#include <optional>

namespace eshed::qp {

namespace {

constexpr double kPrimalReg = 1e-9;
constexpr double kDualReg = 1e-9;
constexpr int kRefineSteps = 4;
constexpr double kMaxRegScale = 1e6;
constexpr double kShortStep = 0.1;
constexpr double kRecenter = 0.5;
constexpr double kElasticPenalty = 1e4;
constexpr double kPerturbation = 1e-6;
constexpr double kCertifiedGap = 1e-6;
constexpr double kVerdictGap = 1e-6;
constexpr double kPinWindow = 100.0; // in units of the perturbation; the shifts stack along rows
constexpr int kPolishRounds = 3;
constexpr double kPolishWindow = 10.0;
constexpr double kStallStep = 1e-8;
constexpr int kStallLimit = 3;
constexpr double kStepFraction = 0.995;
constexpr double kDivergence = 1e13;

// Program after eliminating fixed variables and dropping rows with h = +inf.
struct ReducedProgram {
  const QuadProgram* full = nullptr;
  std::vector<int> free_vars;   // reduced index -> full index
  std::vector<int> kept_eq;     // reduced A row -> full A row
  std::vector<int> kept_rows;   // reduced G row -> full G row
  Vector fixed_values;          // full-size, x for fixed vars, 0 elsewhere
  std::vector<bool> is_fixed;

  int n = 0;
  Vector hess;  // 2 q
  Vector c;
  SparseMatrix A;
  Vector b;
  SparseMatrix G;
  Vector h;
  Vector lo;
  Vector hi;
  std::vector<int> lower_idx; // reduced vars with finite lower bound
  std::vector<int> upper_idx;
};

ReducedProgram reduce(const QuadProgram& p) {
  ReducedProgram r;
  r.full = &p;
  r.is_fixed.assign(p.n, false);
  r.fixed_values = Vector::Zero(p.n);
  std::vector<int> to_reduced(p.n, -1);
  for (int j = 0; j < p.n; ++j) {
    if (p.lower[j] == p.upper[j]) {
      r.is_fixed[j] = true;
      r.fixed_values[j] = p.lower[j];
    } else {
      to_reduced[j] = static_cast<int>(r.free_vars.size());
      r.free_vars.push_back(j);
    }
  }
  r.n = static_cast<int>(r.free_vars.size());
  r.hess.resize(r.n);
  r.c.resize(r.n);
  r.lo.resize(r.n);
  r.hi.resize(r.n);
  for (int k = 0; k < r.n; ++k) {
    const int j = r.free_vars[k];
    r.hess[k] = 2.0 * p.q_diag[j];
    r.c[k] = p.c_lin[j];
    r.lo[k] = p.lower[j];
    r.hi[k] = p.upper[j];
    if (std::isfinite(r.lo[k])) r.lower_idx.push_back(k);
    if (std::isfinite(r.hi[k])) r.upper_idx.push_back(k);
  }

  auto restrict_columns = [&](const SparseMatrix& m, const std::vector<int>& rows_kept, Vector& rhs) {
    std::vector<int> row_map(m.rows(), -1);
    for (std::size_t i = 0; i < rows_kept.size(); ++i) row_map[rows_kept[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.nonZeros());
    for (int col = 0; col < m.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
        const int row = row_map[it.row()];
        if (row < 0) continue;
        if (r.is_fixed[col])
          rhs[row] -= it.value() * r.fixed_values[col];
        else
          trips.emplace_back(row, to_reduced[col], it.value());
      }
    SparseMatrix out(static_cast<Eigen::Index>(rows_kept.size()), r.n);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
  };

  // rows left without free variables are dropped when the fixed values satisfy them
  auto live_rows = [&](const SparseMatrix& m, const Vector& rhs, bool equality) {
    std::vector<bool> has_free(m.rows(), false);
    Vector adjusted = rhs;
    for (int col = 0; col < m.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
        if (r.is_fixed[col])
          adjusted[it.row()] -= it.value() * r.fixed_values[col];
        else
          has_free[it.row()] = true;
      }
    std::vector<int> rows;
    for (int i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(rhs[i])) continue;
      const double tol = 1e-12 * (1.0 + std::abs(rhs[i]));
      const bool satisfied = equality ? std::abs(adjusted[i]) <= tol : adjusted[i] >= -tol;
      if (has_free[i] || !satisfied) rows.push_back(i);
    }
    return rows;
  };

  r.kept_eq = live_rows(p.A_eq, p.b_eq, true);
  r.b.resize(static_cast<Eigen::Index>(r.kept_eq.size()));
  for (std::size_t i = 0; i < r.kept_eq.size(); ++i) r.b[static_cast<Eigen::Index>(i)] = p.b_eq[r.kept_eq[i]];
  r.A = restrict_columns(p.A_eq, r.kept_eq, r.b);

  r.kept_rows = live_rows(p.G_ineq, p.h_ineq, false);
  r.h.resize(static_cast<Eigen::Index>(r.kept_rows.size()));
  for (std::size_t i = 0; i < r.kept_rows.size(); ++i) r.h[static_cast<Eigen::Index>(i)] = p.h_ineq[r.kept_rows[i]];
  r.G = restrict_columns(p.G_ineq, r.kept_rows, r.h);
  return r;
}

struct Iterate {
  Vector x, y, z, s, zl, wl, zu, wu;
};

struct CoreOutcome {
  Solution solution;
  bool converged = false;
};

// Symmetric quasi-definite system
//   [ H + D + dp   A'     G'          ]
//   [ A           -dd     0           ]
//   [ G            0     -S/Z - dd    ]
// stored as its upper triangle with a fixed sparsity pattern.
class KktSystem {
public:
  explicit KktSystem(const ReducedProgram& r) : r_(r) {
    n_ = r.n;
    m_ = static_cast<int>(r.A.rows());
    p_ = static_cast<int>(r.G.rows());
    const int dim = n_ + m_ + p_;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(r.A.nonZeros() + r.G.nonZeros() + dim);
    for (int k = 0; k < dim; ++k) trips.emplace_back(k, k, 1.0);
    for (int col = 0; col < r.A.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(r.A, col); it; ++it)
        trips.emplace_back(col, n_ + static_cast<int>(it.row()), it.value());
    for (int col = 0; col < r.G.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(r.G, col); it; ++it)
        trips.emplace_back(col, n_ + m_ + static_cast<int>(it.row()), it.value());
    K_.resize(dim, dim);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();
    diag_pos_.resize(dim);
    for (int k = 0; k < dim; ++k) {
      const int* begin = K_.innerIndexPtr() + K_.outerIndexPtr()[k];
      const int* end = K_.innerIndexPtr() + K_.outerIndexPtr()[k + 1];
      diag_pos_[k] = static_cast<int>(std::lower_bound(begin, end, k) - K_.innerIndexPtr());
    }
    reg_ = Vector(dim);
    reg_.head(n_).setConstant(kPrimalReg);
    reg_.tail(m_ + p_).setConstant(-kDualReg);
    ldlt_.analyzePattern(K_);
  }

  int dim() const { return n_ + m_ + p_; }

  // x_diag = H + D (without regularization), z_diag = s/z.
  // Zero pivots (free variables without curvature) are retried with a larger shift.
  bool factorize(const Vector& x_diag, const Vector& z_diag) {
    for (double scale = 1.0; scale <= kMaxRegScale; scale *= 100.0) {
      reg_.head(n_).setConstant(kPrimalReg * scale);
      reg_.tail(m_ + p_).setConstant(-kDualReg * scale);
      double* values = K_.valuePtr();
      for (int k = 0; k < n_; ++k) values[diag_pos_[k]] = x_diag[k] + reg_[k];
      for (int k = 0; k < m_; ++k) values[diag_pos_[n_ + k]] = reg_[n_ + k];
      for (int k = 0; k < p_; ++k) values[diag_pos_[n_ + m_ + k]] = -z_diag[k] + reg_[n_ + m_ + k];
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success && ldlt_.vectorD().allFinite()) return true;
    }
    return false;
  }

  // Solves the unregularized system by iterative refinement on the regularized factorization.
  Vector solve(const Vector& rhs) const {
    Vector sol = ldlt_.solve(rhs);
    for (int step = 0; step < kRefineSteps; ++step) {
      Vector resid = rhs - apply(sol);
      if (resid.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += ldlt_.solve(resid);
    }
    return sol;
  }

private:
  Vector apply(const Vector& v) const {
    Vector out = K_.selfadjointView<Eigen::Upper>() * v;
    out -= reg_.cwiseProduct(v);
    return out;
  }

  const ReducedProgram& r_;
  int n_ = 0, m_ = 0, p_ = 0;
  SparseMatrix K_;
  std::vector<int> diag_pos_;
  Vector reg_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt_;
};

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

bool meets_tolerances(const QuadProgram& p, const Solution& sol, const SolverConfig& cfg) {
  KktResiduals res = kkt_residuals(p, sol);
  if (res.stationarity > cfg.tol_dual || res.feasibility > cfg.tol_primal || res.complementarity > cfg.tol_gap)
    return false;
  return duality_gap(p, sol) <= cfg.tol_gap * (1.0 + std::abs(sol.objective));
}

class InteriorPoint {
public:
  using Accept = std::function<bool(const Solution&)>;

  InteriorPoint(const ReducedProgram& r, const SolverConfig& cfg, Accept accept = {})
      : r_(r), cfg_(cfg), kkt_(r), accept_(std::move(accept)) {
    nl_ = static_cast<int>(r.lower_idx.size());
    nu_ = static_cast<int>(r.upper_idx.size());
    p_ = static_cast<int>(r.G.rows());
    m_ = static_cast<int>(r.A.rows());
    linear_ = r.hess.isZero(0.0);
  }

  CoreOutcome run() {
    CoreOutcome out;
    Iterate it = initial_point();
    const int n_comp = p_ + nl_ + nu_;
    int iter = 0;
    for (;; ++iter) {
      out.solution = expand(it);
      out.solution.iterations = iter;
      if (accept_ ? accept_(out.solution) : converged(out.solution)) {
        out.converged = true;
        return out;
      }
      if (iter >= cfg_.max_iter || diverged(it)) return out;

      Residuals res = residuals(it);
      const double mu = n_comp > 0 ? complementarity_sum(it) / n_comp : 0.0;

      Vector x_diag = r_.hess;
      for (int k = 0; k < nl_; ++k) x_diag[r_.lower_idx[k]] += it.zl[k] / it.wl[k];
      for (int k = 0; k < nu_; ++k) x_diag[r_.upper_idx[k]] += it.zu[k] / it.wu[k];
      Vector z_diag = it.s.cwiseQuotient(it.z);
      if (!kkt_.factorize(x_diag, z_diag)) return out;

      // Predictor (affine scaling) direction.
      Vector rsz = it.s.cwiseProduct(it.z);
      Vector rlz = it.wl.cwiseProduct(it.zl);
      Vector ruz = it.wu.cwiseProduct(it.zu);
      Iterate aff = direction(it, res, rsz, rlz, ruz);
      auto [ap_aff, ad_aff] = step_lengths(it, aff, 1.0);

      Vector d_rsz = rsz, d_rlz = rlz, d_ruz = ruz;
      if (n_comp > 0) {
        const double mu_aff =
            ((it.s + ap_aff * aff.s).dot(it.z + ad_aff * aff.z) + (it.wl + ap_aff * aff.wl).dot(it.zl + ad_aff * aff.zl) +
             (it.wu + ap_aff * aff.wu).dot(it.zu + ad_aff * aff.zu)) /
            n_comp;
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
        // Corrector: second-order term plus centering.
        d_rsz += aff.s.cwiseProduct(aff.z) - Vector::Constant(p_, sigma * mu);
        d_rlz += aff.wl.cwiseProduct(aff.zl) - Vector::Constant(nl_, sigma * mu);
        d_ruz += aff.wu.cwiseProduct(aff.zu) - Vector::Constant(nu_, sigma * mu);
      }
      Iterate dir = n_comp > 0 ? direction(it, res, d_rsz, d_rlz, d_ruz) : aff;
      auto [ap, ad] = step_lengths(it, dir, kStepFraction);
      // jammed against a boundary: take a strongly centering step instead
      if (n_comp > 0 && std::min(ap, ad) < kShortStep) {
        const double target = kRecenter * mu;
        Iterate centred = direction(it, res, rsz - Vector::Constant(p_, target), rlz - Vector::Constant(nl_, target),
                                    ruz - Vector::Constant(nu_, target));
        auto [cp, cd] = step_lengths(it, centred, kStepFraction);
        if (std::min(cp, cd) > std::min(ap, ad)) {
          dir = std::move(centred);
          ap = cp;
          ad = cd;
        }
      }

      stalled_ = std::max(ap, ad) < kStallStep ? stalled_ + 1 : 0;
      if (stalled_ >= kStallLimit) return out;

      it.x += ap * dir.x;
      it.s += ap * dir.s;
      it.wl += ap * dir.wl;
      it.wu += ap * dir.wu;
      it.y += ad * dir.y;
      it.z += ad * dir.z;
      it.zl += ad * dir.zl;
      it.zu += ad * dir.zu;
      keep_positive(it);
    }
  }

private:
  struct Residuals {
    Vector rd, req, rin, rl, ru;
  };

  Residuals residuals(const Iterate& it) const {
    Residuals res;
    res.rd = r_.hess.cwiseProduct(it.x) + r_.c;
    if (m_ > 0) res.rd += r_.A.transpose() * it.y;
    if (p_ > 0) res.rd += r_.G.transpose() * it.z;
    for (int k = 0; k < nl_; ++k) res.rd[r_.lower_idx[k]] -= it.zl[k];
    for (int k = 0; k < nu_; ++k) res.rd[r_.upper_idx[k]] += it.zu[k];
    res.req = m_ > 0 ? Vector(r_.A * it.x - r_.b) : Vector(0);
    res.rin = p_ > 0 ? Vector(r_.G * it.x + it.s - r_.h) : Vector(0);
    res.rl.resize(nl_);
    for (int k = 0; k < nl_; ++k) res.rl[k] = it.x[r_.lower_idx[k]] - it.wl[k] - r_.lo[r_.lower_idx[k]];
    res.ru.resize(nu_);
    for (int k = 0; k < nu_; ++k) res.ru[k] = it.x[r_.upper_idx[k]] + it.wu[k] - r_.hi[r_.upper_idx[k]];
    return res;
  }

  double complementarity_sum(const Iterate& it) const {
    return it.s.dot(it.z) + it.wl.dot(it.zl) + it.wu.dot(it.zu);
  }

  Iterate direction(const Iterate& it, const Residuals& res, const Vector& rsz, const Vector& rlz,
                    const Vector& ruz) const {
    const int n = r_.n;
    Vector rhs(kkt_.dim());
    Vector top = -res.rd;
    for (int k = 0; k < nl_; ++k)
      top[r_.lower_idx[k]] -= (rlz[k] + it.zl[k] * res.rl[k]) / it.wl[k];
    for (int k = 0; k < nu_; ++k)
      top[r_.upper_idx[k]] -= (it.zu[k] * res.ru[k] - ruz[k]) / it.wu[k];
    rhs.head(n) = top;
    rhs.segment(n, m_) = -res.req;
    if (p_ > 0) rhs.tail(p_) = -res.rin + rsz.cwiseQuotient(it.z);

    Vector sol = kkt_.solve(rhs);
    Iterate d;
    d.x = sol.head(n);
    d.y = sol.segment(n, m_);
    d.z = sol.tail(p_);
    d.s = p_ > 0 ? Vector(-res.rin - r_.G * d.x) : Vector(0);
    d.wl.resize(nl_);
    d.zl.resize(nl_);
    for (int k = 0; k < nl_; ++k) {
      d.wl[k] = d.x[r_.lower_idx[k]] + res.rl[k];
      d.zl[k] = -(rlz[k] + it.zl[k] * d.wl[k]) / it.wl[k];
    }
    d.wu.resize(nu_);
    d.zu.resize(nu_);
    for (int k = 0; k < nu_; ++k) {
      d.wu[k] = -res.ru[k] - d.x[r_.upper_idx[k]];
      d.zu[k] = -(ruz[k] + it.zu[k] * d.wu[k]) / it.wu[k];
    }
    return d;
  }

  std::pair<double, double> step_lengths(const Iterate& it, const Iterate& d, double fraction) const {
    double ap = std::min({max_step(it.s, d.s), max_step(it.wl, d.wl), max_step(it.wu, d.wu)});
    double ad = std::min({max_step(it.z, d.z), max_step(it.zl, d.zl), max_step(it.zu, d.zu)});
    ap = std::min(1.0, fraction * ap);
    ad = std::min(1.0, fraction * ad);
    if (!linear_) ap = ad = std::min(ap, ad);
    return {ap, ad};
  }

  static void keep_positive(Iterate& it) {
    auto floor = [](Vector& v) {
      for (double& e : v) e = std::max(e, 1e-300);
    };
    floor(it.s);
    floor(it.z);
    floor(it.wl);
    floor(it.zl);
    floor(it.wu);
    floor(it.zu);
  }

  Iterate initial_point() {
    const int n = r_.n;
    Iterate it;
    // Regularized least-squares start: D = I, S/Z = I.
    Vector x_diag = r_.hess + Vector::Ones(n);
    Vector z_diag = Vector::Ones(p_);
    Vector x0 = Vector::Zero(n);
    if (kkt_.factorize(x_diag, z_diag)) {
      Vector rhs(kkt_.dim());
      rhs.head(n) = -r_.c;
      rhs.segment(n, m_) = r_.b;
      rhs.tail(p_) = r_.h;
      Vector sol = kkt_.solve(rhs);
      if (sol.allFinite()) x0 = sol.head(n);
    }
    for (int k = 0; k < n; ++k) {
      const double lo = r_.lo[k], hi = r_.hi[k];
      const double margin = std::isfinite(lo) && std::isfinite(hi) ? std::min(1.0, 0.25 * (hi - lo)) : 1.0;
      if (std::isfinite(lo)) x0[k] = std::max(x0[k], lo + margin);
      if (std::isfinite(hi)) x0[k] = std::min(x0[k], hi - margin);
    }
    it.x = x0;
    it.y = Vector::Zero(m_);
    it.s = p_ > 0 ? Vector((r_.h - r_.G * x0).cwiseMax(1.0)) : Vector(0);
    it.z = Vector::Ones(p_);
    it.wl.resize(nl_);
    for (int k = 0; k < nl_; ++k) it.wl[k] = x0[r_.lower_idx[k]] - r_.lo[r_.lower_idx[k]];
    it.wu.resize(nu_);
    for (int k = 0; k < nu_; ++k) it.wu[k] = r_.hi[r_.upper_idx[k]] - x0[r_.upper_idx[k]];
    it.zl = Vector::Ones(nl_);
    it.zu = Vector::Ones(nu_);
    return it;
  }

  bool diverged(const Iterate& it) const {
    auto big = [](const Vector& v) { return v.size() > 0 && !(v.lpNorm<Eigen::Infinity>() < kDivergence); };
    return big(it.x) || big(it.y) || big(it.z) || big(it.zl) || big(it.zu);
  }

  bool converged(const Solution& sol) const { return meets_tolerances(*r_.full, sol, cfg_); }

  // Maps a reduced iterate back onto the full program, including multipliers of fixed variables.
  Solution expand(const Iterate& it) const {
    const QuadProgram& p = *r_.full;
    Solution sol;
    sol.x = r_.fixed_values;
    for (int k = 0; k < r_.n; ++k) sol.x[r_.free_vars[k]] = it.x[k];
    sol.duals_eq = Vector::Zero(p.num_eq());
    for (std::size_t i = 0; i < r_.kept_eq.size(); ++i)
      sol.duals_eq[r_.kept_eq[i]] = it.y[static_cast<Eigen::Index>(i)];
    sol.duals_ineq = Vector::Zero(p.num_ineq());
    for (std::size_t i = 0; i < r_.kept_rows.size(); ++i)
      sol.duals_ineq[r_.kept_rows[i]] = it.z[static_cast<Eigen::Index>(i)];
    sol.duals_lower = Vector::Zero(p.n);
    sol.duals_upper = Vector::Zero(p.n);
    for (int k = 0; k < nl_; ++k) sol.duals_lower[r_.free_vars[r_.lower_idx[k]]] = it.zl[k];
    for (int k = 0; k < nu_; ++k) sol.duals_upper[r_.free_vars[r_.upper_idx[k]]] = it.zu[k];
    if (static_cast<int>(r_.free_vars.size()) < p.n) {
      Vector grad = 2.0 * p.q_diag.cwiseProduct(sol.x) + p.c_lin;
      if (p.num_eq() > 0) grad += p.A_eq.transpose() * sol.duals_eq;
      if (p.num_ineq() > 0) grad += p.G_ineq.transpose() * sol.duals_ineq;
      for (int j = 0; j < p.n; ++j) {
        if (!r_.is_fixed[j]) continue;
        sol.duals_lower[j] = std::max(grad[j], 0.0);
        sol.duals_upper[j] = std::max(-grad[j], 0.0);
      }
    }
    sol.objective = p.objective(sol.x);
    return sol;
  }

  const ReducedProgram& r_;
  const SolverConfig& cfg_;
  KktSystem kkt_;
  Accept accept_;
  int stalled_ = 0;
  int nl_ = 0, nu_ = 0, p_ = 0, m_ = 0;
  bool linear_ = false;
};

CoreOutcome run_core(const QuadProgram& p, const SolverConfig& cfg, InteriorPoint::Accept accept = {}) {
  ReducedProgram r = reduce(p);
  InteriorPoint ipm(r, cfg, std::move(accept));
  return ipm.run();
}

// min f(x) + rho sum(v)  s.t.  A x = b,  G x - v <= h,  v >= 0. The penalty keeps the
// inequality multipliers bounded when the feasible set has no interior.
// G x - v <= h, v >= 0 at cost rho per finite row: always has an interior in the rows.
QuadProgram elastic_program(const QuadProgram& p, double rho) {
  std::vector<int> finite_rows;
  for (int i = 0; i < p.num_ineq(); ++i)
    if (std::isfinite(p.h_ineq[i])) finite_rows.push_back(i);
  const int mi = static_cast<int>(finite_rows.size());
  QuadProgram q = QuadProgram::with_variables(p.n + mi);
  q.q_diag.head(p.n) = p.q_diag;
  q.c_lin.head(p.n) = p.c_lin;
  q.c_lin.tail(mi).setConstant(rho);
  q.lower.head(p.n) = p.lower;
  q.upper.head(p.n) = p.upper;
  q.lower.tail(mi).setZero();
  q.A_eq = SparseMatrix(p.num_eq(), p.n + mi);
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < p.A_eq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(p.A_eq, col); it; ++it) trips.emplace_back(it.row(), col, it.value());
  q.A_eq.setFromTriplets(trips.begin(), trips.end());
  q.b_eq = p.b_eq;
  std::vector<int> row_map(p.num_ineq(), -1);
  for (int k = 0; k < mi; ++k) row_map[finite_rows[k]] = k;
  trips.clear();
  for (int col = 0; col < p.G_ineq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(p.G_ineq, col); it; ++it)
      if (row_map[it.row()] >= 0) trips.emplace_back(row_map[it.row()], col, it.value());
  for (int k = 0; k < mi; ++k) trips.emplace_back(k, p.n + k, -1.0);
  q.G_ineq = SparseMatrix(mi, p.n + mi);
  q.G_ineq.setFromTriplets(trips.begin(), trips.end());
  q.h_ineq.resize(mi);
  for (int k = 0; k < mi; ++k) q.h_ineq[k] = p.h_ineq[finite_rows[k]];
  return q;
}

Solution project_elastic(const QuadProgram& p, const Solution& e) {
  Solution sol;
  sol.x = e.x.head(p.n);
  sol.duals_eq = e.duals_eq;
  sol.duals_ineq = Vector::Zero(p.num_ineq());
  for (int i = 0, k = 0; i < p.num_ineq(); ++i)
    if (std::isfinite(p.h_ineq[i])) sol.duals_ineq[i] = e.duals_ineq[k++];
  sol.duals_lower = e.duals_lower.head(p.n);
  sol.duals_upper = e.duals_upper.head(p.n);
  sol.objective = p.objective(sol.x);
  sol.iterations = e.iterations;
  return sol;
}

std::optional<Solution> solve_elastic(const QuadProgram& p, const SolverConfig& cfg) {
  if (p.num_ineq() == 0) return std::nullopt;
  const double scale = 1.0 + std::max(p.c_lin.lpNorm<Eigen::Infinity>(), p.q_diag.lpNorm<Eigen::Infinity>());
  const QuadProgram q = elastic_program(p, kElasticPenalty * scale);
  CoreOutcome out =
      run_core(q, cfg, [&](const Solution& e) { return meets_tolerances(p, project_elastic(p, e), cfg); });
  if (!out.converged) return std::nullopt;
  return project_elastic(p, out.solution);
}

// Solves q, which is p with the variables in `pinned` fixed at a bound. Pins whose
// multipliers come back with the wrong sign are released and the solve repeated.
// The result must be optimal for p itself, or, given a lower bound on p's
// optimum, feasible for p and within kCertifiedGap of that bound.
std::optional<Solution> solve_pinned(const QuadProgram& p, QuadProgram q, std::vector<int> pinned,
                                     const SolverConfig& cfg, int* iterations,
                                     std::optional<double> lower_bound = std::nullopt) {
  const double tol = cfg.tol_dual * (1.0 + p.c_lin.lpNorm<Eigen::Infinity>());
  auto certified = [&](const Solution& sol) {
    if (!lower_bound || kkt_residuals(p, sol).feasibility > cfg.tol_primal) return false;
    return sol.objective <= *lower_bound + kCertifiedGap * (1.0 + std::abs(*lower_bound));
  };
  for (int round = 0; round < kPolishRounds && !pinned.empty(); ++round) {
    CoreOutcome out = run_core(q, cfg);
    *iterations += out.solution.iterations;
    if (!out.converged) return std::nullopt;
    if (meets_tolerances(p, out.solution, cfg) || certified(out.solution)) return out.solution;
    // a pin at the lower bound needs a nonnegative lower multiplier, and vice versa
    std::vector<int> kept;
    for (int j : pinned) {
      const bool at_lower = q.upper[j] == p.lower[j];
      const double wrong = at_lower ? out.solution.duals_upper[j] : out.solution.duals_lower[j];
      if (wrong > tol) {
        q.lower[j] = p.lower[j];
        q.upper[j] = p.upper[j];
      } else {
        kept.push_back(j);
      }
    }
    if (kept.size() == pinned.size()) return std::nullopt;
    pinned = std::move(kept);
  }
  return std::nullopt;
}

// p with every finite bound that is not a fixing, and every finite row, loosened by delta (1 + |b|).
QuadProgram widened(const QuadProgram& p, double delta) {
  QuadProgram wide = p;
  for (int j = 0; j < p.n; ++j) {
    if (p.lower[j] == p.upper[j]) continue;
    if (std::isfinite(p.lower[j])) wide.lower[j] -= delta * (1.0 + std::abs(p.lower[j]));
    if (std::isfinite(p.upper[j])) wide.upper[j] += delta * (1.0 + std::abs(p.upper[j]));
  }
  for (int i = 0; i < p.num_ineq(); ++i)
    if (std::isfinite(p.h_ineq[i])) wide.h_ineq[i] += delta * (1.0 + std::abs(p.h_ineq[i]));
  return wide;
}

// For feasible sets without an interior: solve a slightly widened program, pin
// the variables it leaves at or past a bound of p, and solve p on what remains.
// A widened program is a relaxation, so its optimum bounds p's from below; a
// tighter widening sharpens that bound when the solver manages one.
std::optional<Solution> solve_perturbed(const QuadProgram& p, const SolverConfig& cfg, int* iterations) {
  CoreOutcome out = run_core(widened(p, kPerturbation), cfg);
  *iterations += out.solution.iterations;
  if (!out.converged) return std::nullopt;
  double bound = out.solution.objective;
  for (double delta : {1e-2 * kPerturbation, 1e-1 * kPerturbation}) {
    CoreOutcome tight = run_core(widened(p, delta), cfg);
    *iterations += tight.solution.iterations;
    if (!tight.converged) continue;
    bound = std::max(bound, tight.solution.objective);
    break;
  }

  QuadProgram q = p;
  std::vector<int> pinned;
  for (int j = 0; j < p.n; ++j) {
    if (p.lower[j] == p.upper[j]) continue;
    const double x = out.solution.x[j];
    if (std::isfinite(p.lower[j]) && x <= p.lower[j] + kPinWindow * kPerturbation * (1.0 + std::abs(p.lower[j]))) {
      q.upper[j] = p.lower[j];
      pinned.push_back(j);
    } else if (std::isfinite(p.upper[j]) &&
               x >= p.upper[j] - kPinWindow * kPerturbation * (1.0 + std::abs(p.upper[j]))) {
      q.lower[j] = p.upper[j];
      pinned.push_back(j);
    }
  }
  return solve_pinned(p, std::move(q), std::move(pinned), cfg, iterations, bound);
}

// min sum(e+) + sum(e-) + sum(v)  s.t.  A x - e+ + e- = b,  G x - v <= h,  lo <= x <= hi,  e, v >= 0
QuadProgram phase_one_program(const QuadProgram& p) {
  const int me = p.num_eq();
  std::vector<int> finite_rows;
  for (int i = 0; i < p.num_ineq(); ++i)
    if (std::isfinite(p.h_ineq[i])) finite_rows.push_back(i);
  const int mi = static_cast<int>(finite_rows.size());
  const int n1 = p.n + 2 * me + mi;

  QuadProgram q = QuadProgram::with_variables(n1);
  q.lower.head(p.n) = p.lower;
  q.upper.head(p.n) = p.upper;
  q.lower.tail(n1 - p.n).setZero();
  q.c_lin.tail(n1 - p.n).setOnes();

  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < p.A_eq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(p.A_eq, col); it; ++it) trips.emplace_back(it.row(), col, it.value());
  for (int i = 0; i < me; ++i) {
    trips.emplace_back(i, p.n + i, -1.0);
    trips.emplace_back(i, p.n + me + i, 1.0);
  }
  q.A_eq = SparseMatrix(me, n1);
  q.A_eq.setFromTriplets(trips.begin(), trips.end());
  q.b_eq = p.b_eq;

  std::vector<int> row_map(p.num_ineq(), -1);
  for (int k = 0; k < mi; ++k) row_map[finite_rows[k]] = k;
  trips.clear();
  for (int col = 0; col < p.G_ineq.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(p.G_ineq, col); it; ++it)
      if (row_map[it.row()] >= 0) trips.emplace_back(row_map[it.row()], col, it.value());
  for (int k = 0; k < mi; ++k) trips.emplace_back(k, p.n + 2 * me + k, -1.0);
  q.G_ineq = SparseMatrix(mi, n1);
  q.G_ineq.setFromTriplets(trips.begin(), trips.end());
  q.h_ineq.resize(mi);
  for (int k = 0; k < mi; ++k) q.h_ineq[k] = p.h_ineq[finite_rows[k]];
  return q;
}

std::optional<FeasibilityResult> phase_one(const QuadProgram& p, const SolverConfig& cfg) {
  QuadProgram q = phase_one_program(p);
  // The verdict only needs the violation on the right side of feas_tol, so a
  // looser gap is enough once the primal and dual residuals are small.
  auto decided = [&](const Solution& sol) {
    if (meets_tolerances(q, sol, cfg)) return true;
    const KktResiduals res = kkt_residuals(q, sol);
    if (res.stationarity > cfg.tol_dual || res.feasibility > cfg.tol_primal) return false;
    const double gap = std::abs(duality_gap(q, sol));
    if (gap > kVerdictGap * (1.0 + std::abs(sol.objective))) return false;
    return sol.objective <= cfg.feas_tol || sol.objective - gap > cfg.feas_tol;
  };
  CoreOutcome out = run_core(q, cfg, decided);
  if (!out.converged) return std::nullopt;
  FeasibilityResult res;
  res.violation = std::max(out.solution.objective, 0.0);
  res.feasible = res.violation <= cfg.feas_tol;
  res.iterations = out.solution.iterations;
  return res;
}

std::optional<Solution> solve_core_or_elastic(const QuadProgram& p, const SolverConfig& cfg, int* iterations,
                                              Solution* last = nullptr) {
  CoreOutcome out = run_core(p, cfg);
  *iterations += out.solution.iterations;
  if (out.converged) return out.solution;
  if (last) *last = out.solution;
  if (auto elastic = solve_elastic(p, cfg)) {
    *iterations += elastic->iterations;
    return elastic;
  }
  return solve_perturbed(p, cfg, iterations);
}

// Pins costed variables within 10 sqrt(tol) of a bound, plus whatever single-variable
// inequality rows then force onto a bound, and re-solves. Pins whose multipliers
// come back with the wrong sign are released. Kept only when the result is optimal
// for the original program and no worse.
std::optional<Solution> polish(const QuadProgram& p, const Solution& sol, const SolverConfig& cfg) {
  const double delta = kPolishWindow * std::sqrt(cfg.tol_primal);
  QuadProgram q = p;
  std::vector<int> pinned;
  std::vector<bool> is_pinned(p.n, false);
  auto pin = [&](int j, double value) {
    q.lower[j] = q.upper[j] = value;
    is_pinned[j] = true;
    pinned.push_back(j);
  };
  for (int j = 0; j < p.n; ++j) {
    if (p.lower[j] == p.upper[j]) {
      is_pinned[j] = true;
      continue;
    }
    if (p.q_diag[j] == 0.0 && p.c_lin[j] == 0.0) continue;
    if (std::isfinite(p.lower[j]) && sol.x[j] - p.lower[j] <= delta * (1.0 + std::abs(p.lower[j])))
      pin(j, p.lower[j]);
    else if (std::isfinite(p.upper[j]) && p.upper[j] - sol.x[j] <= delta * (1.0 + std::abs(p.upper[j])))
      pin(j, p.upper[j]);
  }
  if (pinned.empty()) return std::nullopt;
  // a x_j <= h - (pinned part) with a > 0 and x_j >= that bound: x_j is forced
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = p.G_ineq;
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < rows.rows(); ++i) {
      if (!std::isfinite(p.h_ineq[i])) continue;
      int free_col = -1, free_count = 0;
      double a = 0.0, rest = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
        if (is_pinned[it.col()]) {
          rest += it.value() * q.lower[it.col()];
        } else {
          free_col = static_cast<int>(it.col());
          a = it.value();
          ++free_count;
        }
      }
      if (free_count != 1 || a <= 0.0) continue;
      const double bound = (p.h_ineq[i] - rest) / a;
      if (std::abs(bound - q.lower[free_col]) <= 1e-12 * (1.0 + std::abs(bound))) {
        pin(free_col, q.lower[free_col]);
        changed = true;
      }
    }
  }

  int iterations = 0;
  std::optional<Solution> out = solve_pinned(p, std::move(q), std::move(pinned), cfg, &iterations);
  if (!out || out->objective > sol.objective + cfg.tol_gap * (1.0 + std::abs(sol.objective))) return std::nullopt;
  out->iterations = sol.iterations + iterations;
  return out;
}

} // namespace

Solution solve_qp(const QuadProgram& program, const SolverConfig& config) {
  program.check();
  config.check();
  int iterations = 0;
  Solution sol;
  if (std::optional<Solution> best = solve_core_or_elastic(program, config, &iterations, &sol)) {
    best->iterations = iterations;
    if (config.polish)
      if (std::optional<Solution> polished = polish(program, *best, config)) best = std::move(polished);
    best->status = SolveStatus::optimal;
    return *best;
  }
  sol.iterations = iterations;
  if (auto feas = phase_one(program, config)) {
    sol.phase1_violation = feas->violation;
    sol.status = feas->feasible ? SolveStatus::max_iter : SolveStatus::infeasible;
  } else {
    sol.status = SolveStatus::max_iter;
  }
  return sol;
}

FeasibilityResult check_feasibility(const QuadProgram& program, const SolverConfig& config) {
  program.check();
  config.check();
  if (auto res = phase_one(program, config)) return *res;
  throw SolverError("phase-1 feasibility problem did not converge");
}

} // namespace eshed::qp
