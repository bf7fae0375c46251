#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "holoseis/holography.hpp"

namespace holoseis {

// Gamma = (beta I + W^{1/2} C W^{1/2})^{-1} in weighted receiver coordinates.
NoiseWeight lavrentiev_weight(const CovarianceOperator& c, double beta);
// 0.1 tr(W^{1/2} C W^{1/2}) / dim.
double default_beta(const CovarianceOperator& c, double rel = 0.1);

using LinearMap = std::function<RVector(const RVector&)>;

struct CgResult {
  RVector x;
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// CG for (N + alpha I) x = rhs, N self-adjoint PSD in the inner product
// sum_i w_i x_i y_i (plain dot product when weights is null). An optional
// projector restricts the iteration to a subspace (its range must contain rhs).
CgResult cg_normal_solve(const LinearMap& apply_normal, const RVector& rhs, double alpha, int max_iter = 50,
                         double tol = 1e-6, const RVector* weights = nullptr, const LinearMap* project = nullptr);

// Largest eigenvalue of a self-adjoint PSD map by power iteration.
double power_iteration(const LinearMap& op, const RVector& weights, double rel_tol = 0.01, int max_iter = 200,
                       std::uint64_t seed = 1);

// Unknown vector z (quantity blocks of n, flow as two blocks) mapped to
// parameter updates by dq = mask . M z, M the Gaussian smoother. The z space
// carries the interior quadrature repeated per block.
class Parametrization {
 public:
  Parametrization(std::shared_ptr<const Stencil> st, const RVector& w_int, std::vector<Quantity> qs,
                  double smoothing_width, int edge_layers);

  int size() const { return int(offsets_.back()); }
  int n() const { return n_; }
  const std::vector<Quantity>& quantities() const { return qs_; }
  int offset(Quantity q) const;
  const RVector& weights() const { return wz_; }

  ParamFields to_fields(const RVector& z) const;
  // Weighted transpose: the z-gradient of a functional with L^2 dual g.
  RVector from_dual(const ParamFields& g) const;
  RMatrix dense() const;  // matrix of to_fields in z-block order

 private:
  RVector apply_block(Quantity q, const RVector& x, bool transpose) const;

  std::shared_ptr<const Stencil> st_;
  int n_;
  std::vector<Quantity> qs_;
  std::vector<int> offsets_;
  RMatrix smoother_;
  bool smooth_ = false;
  RVector edge_mask_, wz_;
};

// One frequency of data plus its fixed reference operator.
struct FrequencyData {
  FrequencyContext fc;
  std::shared_ptr<const GreensOperator> g0;
  CMatrix corr;
  int n_realizations = 1;
  CMatrix boundary;  // empty if none
  double weight = 1.0;
};

struct InversionOptions {
  std::vector<Quantity> quantities = {Quantity::S};
  double alpha0 = 0.0;      // 0: alpha0_rel times the largest eigenvalue of the first normal operator
  double alpha0_rel = 1.0;
  double alpha_decay = 0.9;
  double tau = 1.05;
  double beta_rel = 0.1;
  bool weighted = true;  // false: Gamma = I
  int max_outer = 15;
  int max_cg = 50;
  double cg_tol = 1e-6;
  double smoothing_width = 0.0;
  int edge_layers = 2;
  int max_backtrack = 4;
  bool mass_conservation = false;
  BetaMode beta_mode = BetaMode::exact;
  std::string checkpoint_dir;  // empty: no checkpoints
  bool resume = false;
};

struct InversionState {
  MediumParams q_n, q_0;
  RVector z;  // accumulated update in the parametrization
  double alpha_n = 0.0, alpha_0 = 0.0;
  int iteration = 0;
  std::vector<double> misfit_history;
  double noise_level = 0.0;
};

// Forward stack evaluated at one iterate, shared by misfit and step.
struct Evaluation {
  std::vector<FrequencyModel> models;
  std::vector<NoiseWeight> weights;
  std::vector<CMatrix> residuals;  // Corr - C[q]
  std::vector<double> misfit2;     // per-frequency weighted misfit^2 (times band weight)
  double misfit = 0.0;             // sqrt of the sum
  double noise_level = 0.0;        // sqrt(sum tr(Gamma C)^2 / N)
};

Evaluation evaluate(const MediumParams& q, const std::vector<FrequencyData>& data, const InversionOptions& o);

// Normal operator of the linearised problem in z coordinates (alpha excluded).
LinearMap normal_operator(const Evaluation& ev, const std::vector<FrequencyData>& data, const Parametrization& par);
// z-gradient of the data term: sum_f P^T C'^*(Gamma (Corr - C) Gamma).
RVector data_gradient(const Evaluation& ev, const std::vector<FrequencyData>& data, const Parametrization& par);

// Divergence of rho u on the medium stencil, interior x (2 interior).
struct ConstraintOperator {
  RMatrix matrix;
  RVector weights;
  double residual(const ParamFields& du) const;  // ||R du|| / ||du||
};

ConstraintOperator make_constraint(const Stencil& st, const RVector& rho);

// Orthonormal basis of the constraint rows in z coordinates and its projector.
struct ConstraintBasis {
  RMatrix q;  // z x rank
  int rank = 0;
  RVector project(const RVector& z) const { return z - q * (q.transpose() * z); }
};

ConstraintBasis constraint_basis(const ConstraintOperator& r, const Parametrization& par);

struct StepInfo {
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool dense_kkt = false;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
};

// delta z minimising the weighted Tikhonov functional about the current state.
RVector irgnm_step(const InversionState& s, const Evaluation& ev, const std::vector<FrequencyData>& data,
                   const Parametrization& par, const InversionOptions& o, StepInfo* info = nullptr);

// Same step with the mass-conservation constraint R P dz = 0. Uses the dense
// KKT system when the unknown count is at most dense_limit, projected CG
// otherwise.
RVector constrained_flow_step(const InversionState& s, const Evaluation& ev, const std::vector<FrequencyData>& data,
                              const Parametrization& par, const ConstraintBasis& basis, const InversionOptions& o,
                              StepInfo* info = nullptr, int dense_limit = 2000);

struct IterationRecord {
  int iteration = 0;
  double alpha = 0.0, misfit = 0.0, noise_level = 0.0;
  double param_error = -1.0;  // relative to the initial error; -1 if truth unknown
  int cg_iterations = 0, backtracks = 0;
  bool accepted = true, clamped = false;
  double constraint_residual = 0.0;
  std::vector<double> per_frequency;
};

struct InversionResult {
  InversionState state;
  std::vector<IterationRecord> history;
  std::string stop_reason;  // discrepancy, max_outer, stagnation, divergence
};

InversionResult run_irgnm(const MediumParams& q0, const std::vector<FrequencyData>& data, const InversionOptions& o,
                          const MediumParams* truth = nullptr);

void write_diagnostics(const InversionResult& r, const std::string& dir);

}  // namespace holoseis
