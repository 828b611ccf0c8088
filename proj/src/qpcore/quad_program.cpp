#include "eshed/qpcore.hpp"

#include "eshed/error.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace eshed::qp {

QuadProgram QuadProgram::with_variables(int n) {
  QuadProgram p;
  p.n = n;
  p.q_diag = Vector::Zero(n);
  p.c_lin = Vector::Zero(n);
  p.A_eq = SparseMatrix(0, n);
  p.b_eq = Vector(0);
  p.G_ineq = SparseMatrix(0, n);
  p.h_ineq = Vector(0);
  p.lower = Vector::Constant(n, -kInf);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

void QuadProgram::check() const {
  if (n < 0) throw DimensionError("negative variable count");
  auto expect = [](bool ok, const std::string& what) {
    if (!ok) throw DimensionError("dimension mismatch: " + what);
  };
  expect(q_diag.size() == n, "q_diag");
  expect(c_lin.size() == n, "c_lin");
  expect(lower.size() == n && upper.size() == n, "bounds");
  expect(A_eq.cols() == n && A_eq.rows() == b_eq.size(), "A_eq/b_eq");
  expect(G_ineq.cols() == n && G_ineq.rows() == h_ineq.size(), "G_ineq/h_ineq");
  expect(names.empty() || static_cast<int>(names.size()) == n, "names");
  for (int j = 0; j < n; ++j) {
    if (!(q_diag[j] >= 0.0) || !std::isfinite(q_diag[j]))
      throw DimensionError(fmt::format("non-convex objective: q_diag[{}] = {}", j, q_diag[j]));
    if (!std::isfinite(c_lin[j])) throw DimensionError(fmt::format("c_lin[{}] is not finite", j));
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == kInf || upper[j] == -kInf)
      throw DimensionError(fmt::format("invalid bounds for variable {}: [{}, {}]", j, lower[j], upper[j]));
  }
  for (int i = 0; i < b_eq.size(); ++i)
    if (!std::isfinite(b_eq[i])) throw DimensionError(fmt::format("b_eq[{}] is not finite", i));
  for (int i = 0; i < h_ineq.size(); ++i)
    if (std::isnan(h_ineq[i]) || h_ineq[i] == -kInf)
      throw DimensionError(fmt::format("h_ineq[{}] is invalid", i));
}

double QuadProgram::objective(const Vector& x) const {
  return q_diag.dot(x.cwiseProduct(x)) + c_lin.dot(x);
}

SparseMatrix RowBuilder::matrix() const {
  SparseMatrix m(rows(), cols_);
  m.setFromTriplets(triplets_.begin(), triplets_.end());
  m.makeCompressed();
  return m;
}

Vector RowBuilder::rhs() const {
  return Eigen::Map<const Vector>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
}

void SolverConfig::check() const {
  if (!(tol_primal > 0 && tol_dual > 0 && tol_gap > 0 && feas_tol > 0 && max_iter > 0))
    throw DimensionError("solver tolerances and iteration limit must be positive");
}

const char* to_string(SolveStatus status) {
  switch (status) {
  case SolveStatus::optimal: return "optimal";
  case SolveStatus::infeasible: return "infeasible";
  case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, feasibility, complementarity}); }

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double finite_inf_norm(const Vector& v) {
  double m = 0.0;
  for (double e : v)
    if (std::isfinite(e)) m = std::max(m, std::abs(e));
  return m;
}

void check_solution_dims(const QuadProgram& p, const Solution& s) {
  if (s.x.size() != p.n || s.duals_eq.size() != p.num_eq() || s.duals_ineq.size() != p.num_ineq() ||
      s.duals_lower.size() != p.n || s.duals_upper.size() != p.n)
    throw DimensionError("solution dimensions do not match the program");
}

} // namespace

KktResiduals kkt_residuals(const QuadProgram& p, const Solution& s) {
  check_solution_dims(p, s);
  const Vector& x = s.x;

  Vector grad = 2.0 * p.q_diag.cwiseProduct(x) + p.c_lin;
  if (p.num_eq() > 0) grad += p.A_eq.transpose() * s.duals_eq;
  if (p.num_ineq() > 0) grad += p.G_ineq.transpose() * s.duals_ineq;
  grad -= s.duals_lower;
  grad += s.duals_upper;

  KktResiduals r;
  r.stationarity = inf_norm(grad) / (1.0 + inf_norm(p.c_lin));

  double infeas = 0.0;
  double comp = 0.0;
  if (p.num_eq() > 0) infeas = inf_norm(p.A_eq * x - p.b_eq);
  if (p.num_ineq() > 0) {
    Vector slack = p.h_ineq - p.G_ineq * x;
    for (int i = 0; i < slack.size(); ++i) {
      if (!std::isfinite(slack[i])) continue;
      infeas = std::max(infeas, -slack[i]);
      comp = std::max({comp, std::abs(s.duals_ineq[i] * slack[i]), -s.duals_ineq[i]});
    }
  }
  for (int j = 0; j < p.n; ++j) {
    if (std::isfinite(p.lower[j])) {
      infeas = std::max(infeas, p.lower[j] - x[j]);
      comp = std::max({comp, std::abs(s.duals_lower[j] * (x[j] - p.lower[j])), -s.duals_lower[j]});
    } else {
      comp = std::max(comp, std::abs(s.duals_lower[j]));
    }
    if (std::isfinite(p.upper[j])) {
      infeas = std::max(infeas, x[j] - p.upper[j]);
      comp = std::max({comp, std::abs(s.duals_upper[j] * (p.upper[j] - x[j])), -s.duals_upper[j]});
    } else {
      comp = std::max(comp, std::abs(s.duals_upper[j]));
    }
  }
  const double data_scale =
      std::max({inf_norm(p.b_eq), finite_inf_norm(p.h_ineq), finite_inf_norm(p.lower), finite_inf_norm(p.upper)});
  r.feasibility = std::max(infeas, 0.0) / (1.0 + data_scale);
  r.complementarity = comp / (1.0 + std::abs(p.objective(x)));
  return r;
}

double duality_gap(const QuadProgram& p, const Solution& s) {
  check_solution_dims(p, s);
  const Vector& x = s.x;
  // Lagrangian dual evaluated at x, valid when x is stationary for (y, z):
  // d = -x'Qx - b'y - h'z + lo'z_lo - hi'z_hi
  double dual = -p.q_diag.dot(x.cwiseProduct(x)) - p.b_eq.dot(s.duals_eq);
  for (int i = 0; i < p.num_ineq(); ++i)
    if (std::isfinite(p.h_ineq[i])) dual -= p.h_ineq[i] * s.duals_ineq[i];
  for (int j = 0; j < p.n; ++j) {
    if (std::isfinite(p.lower[j])) dual += p.lower[j] * s.duals_lower[j];
    if (std::isfinite(p.upper[j])) dual -= p.upper[j] * s.duals_upper[j];
  }
  return p.objective(x) - dual;
}

namespace {

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double e : v) {
    if (std::isfinite(e))
      a.push_back(e);
    else
      a.push_back(nullptr);
  }
  return a;
}

Vector vector_from_json(const nlohmann::json& a, double null_value) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = a[i].is_null() ? null_value : a[i].get<double>();
  return v;
}

nlohmann::json matrix_json(const SparseMatrix& m) {
  nlohmann::json t = nlohmann::json::array();
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      t.push_back({it.row(), it.col(), it.value()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"triplets", t}};
}

SparseMatrix matrix_from_json(const nlohmann::json& j) {
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& t : j.at("triplets")) trips.emplace_back(t[0].get<int>(), t[1].get<int>(), t[2].get<double>());
  SparseMatrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

} // namespace

nlohmann::json to_json(const QuadProgram& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["q_diag"] = vector_json(p.q_diag);
  j["c_lin"] = vector_json(p.c_lin);
  j["A_eq"] = matrix_json(p.A_eq);
  j["b_eq"] = vector_json(p.b_eq);
  j["G_ineq"] = matrix_json(p.G_ineq);
  j["h_ineq"] = vector_json(p.h_ineq);
  j["lower"] = vector_json(p.lower);
  j["upper"] = vector_json(p.upper);
  j["names"] = p.names;
  return j;
}

QuadProgram quad_program_from_json(const nlohmann::json& j) {
  QuadProgram p;
  p.n = j.at("n").get<int>();
  p.q_diag = vector_from_json(j.at("q_diag"), 0.0);
  p.c_lin = vector_from_json(j.at("c_lin"), 0.0);
  p.A_eq = matrix_from_json(j.at("A_eq"));
  p.b_eq = vector_from_json(j.at("b_eq"), 0.0);
  p.G_ineq = matrix_from_json(j.at("G_ineq"));
  p.h_ineq = vector_from_json(j.at("h_ineq"), kInf);
  p.lower = vector_from_json(j.at("lower"), -kInf);
  p.upper = vector_from_json(j.at("upper"), kInf);
  if (j.contains("names")) p.names = j.at("names").get<std::vector<std::string>>();
  p.check();
  return p;
}

} // namespace eshed::qp
