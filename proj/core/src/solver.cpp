#include "isac/solver.hpp"

#include "isac/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace isac {

namespace {

const double kLog2e = 1.0 / std::log(2.0);

double re_inner(const CMatrix& a, const CMatrix& b) {
  // Re <a, b>_F = Re Tr(a^H b)
  return (a.array().conjugate() * b.array()).real().sum();
}

void check_dims(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                const ChannelRealization& channels) {
  const auto n = F.rows();
  if (n != channels.n_tx() || F.cols() != channels.n_users() || U.rows() != n ||
      U.cols() != n || V.rows() != n || V.cols() != n ||
      channels.sense_steering.size() != n) {
    std::ostringstream os;
    os << "dimension mismatch: F " << F.rows() << "x" << F.cols() << ", U " << U.rows() << "x"
       << U.cols() << ", V " << V.rows() << "x" << V.cols() << ", channels " << channels.n_tx()
       << "x" << channels.n_users();
    throw DimensionError(os.str());
  }
}

// d |g^H B f_i|^2 / dF* for receive vector g and stream i, with B the Bussgang
// gain of F. Equivalent to the product-rule expansion through B(F):
//   2 beta3 Diag(f_i (.) g*) F z* + z (beta1* g i_i^T + 2 beta3* Diag(f_i* (.) g) F
//   + 2 beta3* (g (.) diag(C)) i_i^T),  z = g^H B f_i.
// The two Diag(.) F terms are complex conjugates of each other, so they fold
// into a single real row scaling.
void add_gain_term_gradient(const CVector& g, int i, const CMatrix& F, const CVector& b,
                            Complex beta3, double weight, CMatrix& out) {
  const Complex z = g.dot(b.cwiseProduct(F.col(i)));  // g^H B f_i
  const RVector row_scale =
      (2.0 * (beta3 * std::conj(z)) * F.col(i).cwiseProduct(g.conjugate())).real() * 2.0;
  out.noalias() += weight * (row_scale.cast<Complex>().asDiagonal() * F);
  out.col(i).noalias() += (weight * z) * b.conjugate().cwiseProduct(g);
}

// d (g^H (C (.) |C|^2) g) / dF* = (2 G (.) C (.) C* + G* (.) C (.) C) F, G = g g^H.
CMatrix distortion_form_gradient(const CVector& g, const CMatrix& C, const CMatrix& F) {
  const CMatrix G = g * g.adjoint();
  const CMatrix M = 2.0 * G.cwiseProduct(C).cwiseProduct(C.conjugate()) +
                    G.conjugate().cwiseProduct(C).cwiseProduct(C);
  return M * F;
}

}  // namespace

void SolverOptions::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("solver: " + msg); };
  if (max_outer_iters <= 0) fail("max_outer_iters must be positive");
  if (!(outer_tol > 0.0)) fail("outer_tol must be positive");
  if (max_mo_iters <= 0) fail("max_mo_iters must be positive");
  if (mo_grad_tol && !(*mo_grad_tol > 0.0)) fail("mo_grad_tol must be positive");
  if (armijo_init_step && !(*armijo_init_step > 0.0)) fail("armijo_init_step must be positive");
  if (!(armijo_contraction > 0.0 && armijo_contraction < 1.0))
    fail("armijo_contraction must lie in (0, 1)");
  if (!(armijo_slope > 0.0 && armijo_slope < 1.0)) fail("armijo_slope must lie in (0, 1)");
  if (armijo_max_backtracks <= 0) fail("armijo_max_backtracks must be positive");
  if (!(penalty_growth > 1.0)) fail("penalty_growth must exceed 1");
  if (!(moment_residual_tol > 0.0)) fail("moment_residual_tol must be positive");
  if (max_growth_rounds < 0) fail("max_growth_rounds must be non-negative");
}

double SolverOptions::grad_tol(int n_tx, int n_users) const {
  if (mo_grad_tol) return *mo_grad_tol;
  return 1e-6 * std::sqrt(static_cast<double>(n_tx) * n_users);
}

ObjectiveTerms objective_terms(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                               const ChannelRealization& channels, const SystemConfig& config) {
  check_dims(F, U, V, channels);
  const int K = static_cast<int>(F.cols());
  const CMatrix C = F * F.adjoint();
  const CVector b = bussgang_gain(F, config.beta1, config.beta3).diagonal();
  const CMatrix BF = b.asDiagonal() * F;
  const CMatrix Ce = (2.0 * std::norm(config.beta3)) * exact_moment_v(C);

  ObjectiveTerms t;
  t.signal.resize(static_cast<std::size_t>(K));
  t.interference.resize(static_cast<std::size_t>(K));
  t.distortion.resize(static_cast<std::size_t>(K));
  double rate_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const CVector& h = channels.user_channels.col(k);
    const Eigen::RowVectorXcd row = h.adjoint() * BF;
    const double s = std::norm(row(k));
    const double i = std::max(row.squaredNorm() - s, 0.0);
    const double d = (h.adjoint() * Ce * h)(0, 0).real();
    const auto ku = static_cast<std::size_t>(k);
    t.signal[ku] = s;
    t.interference[ku] = i;
    t.distortion[ku] = d;
    rate_sum += std::log2(1.0 + s / (i + d + config.noise_user.at(ku)));
  }
  const CVector& a = channels.sense_steering;
  const double g2 = std::norm(channels.target_gain);
  t.sense_signal = g2 * (a.adjoint() * BF).squaredNorm();
  t.sense_distortion = g2 * (a.adjoint() * Ce * a)(0, 0).real();
  const double mi = std::log2(1.0 + t.sense_signal / (t.sense_distortion + config.noise_sense));
  t.isac = config.weight_comm * rate_sum + config.weight_sense * mi;

  t.penalty_u = (U - exact_moment_u(C)).squaredNorm();
  t.penalty_v = (V - U.cwiseProduct(C)).squaredNorm();
  t.penalized = t.isac + config.penalty1 * t.penalty_u + config.penalty2 * t.penalty_v;
  return t;
}

CMatrix euclidean_gradient(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                           const ChannelRealization& channels, const SystemConfig& config) {
  const ObjectiveTerms t = objective_terms(F, U, V, channels, config);
  const int N = static_cast<int>(F.rows());
  const int K = static_cast<int>(F.cols());
  const Complex beta3 = config.beta3;
  const double b3sq = std::norm(beta3);
  const CMatrix C = F * F.adjoint();
  const CVector b = bussgang_gain(F, config.beta1, beta3).diagonal();

  CMatrix grad = CMatrix::Zero(N, K);

  // Communication rates: quotient rule on log2(1 + S_k / N_k).
  if (config.weight_comm != 0.0) {
    for (int k = 0; k < K; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const CVector& h = channels.user_channels.col(k);
      const double S = t.signal[ku];
      const double Nk = t.interference[ku] + t.distortion[ku] + config.noise_user.at(ku);
      // weight * (Nk dS - S dNk) / (Nk (Nk + S))
      const double w = config.weight_comm * kLog2e / (Nk * (Nk + S));
      CMatrix dS = CMatrix::Zero(N, K);
      add_gain_term_gradient(h, k, F, b, beta3, 1.0, dS);
      CMatrix dN = CMatrix::Zero(N, K);
      for (int i = 0; i < K; ++i)
        if (i != k) add_gain_term_gradient(h, i, F, b, beta3, 1.0, dN);
      if (b3sq > 0.0) dN += (2.0 * b3sq) * distortion_form_gradient(h, C, F);
      grad += w * (Nk * dS - S * dN);
    }
  }

  // Sensing mutual information.
  if (config.weight_sense != 0.0) {
    const CVector& a = channels.sense_steering;
    const double g2 = std::norm(channels.target_gain);
    const double S = t.sense_signal;
    const double Ns = t.sense_distortion + config.noise_sense;
    const double w = config.weight_sense * kLog2e / (Ns * (Ns + S));
    CMatrix dS = CMatrix::Zero(N, K);
    for (int i = 0; i < K; ++i) add_gain_term_gradient(a, i, F, b, beta3, g2, dS);
    CMatrix dN = CMatrix::Zero(N, K);
    if (b3sq > 0.0) dN = (2.0 * b3sq * g2) * distortion_form_gradient(a, C, F);
    grad += w * (Ns * dS - S * dN);
  }

  // Penalty on U - |C|^2.
  if (config.penalty1 != 0.0) {
    const CMatrix CCC = C.cwiseProduct(C).cwiseProduct(C.conjugate());
    const RMatrix re_sym = U.real() + U.real().transpose();
    const CMatrix dC1 = 4.0 * CCC * F - 2.0 * (re_sym.cast<Complex>().cwiseProduct(C)) * F;
    grad += config.penalty1 * dC1;
  }

  // Penalty on V - U (.) C.
  if (config.penalty2 != 0.0) {
    const CMatrix Ut = U.transpose();
    const CMatrix M = U.cwiseProduct(U.conjugate()).cwiseProduct(C) +
                      Ut.cwiseProduct(U.adjoint()).cwiseProduct(C) -
                      V.cwiseProduct(U.conjugate()) - V.adjoint().cwiseProduct(Ut);
    grad += config.penalty2 * (M * F);
  }
  return grad;
}

CMatrix riemannian_gradient(const CMatrix& egrad, const CMatrix& F) {
  const double n2 = F.squaredNorm();
  if (!(n2 > 0.0)) throw Error("riemannian_gradient: F must be nonzero");
  if (egrad.rows() != F.rows() || egrad.cols() != F.cols())
    throw DimensionError("riemannian_gradient: gradient and point shapes differ");
  return egrad - (re_inner(egrad, F) / n2) * F;
}

CMatrix retract(const CMatrix& F, const CMatrix& step, double c1) {
  if (!(c1 > 0.0)) {
    std::ostringstream os;
    os << "retract: Frobenius budget c1 = " << c1 << " is not positive";
    throw InfeasibleMomentBudget(os.str());
  }
  const CMatrix moved = F + step;
  const double n = moved.norm();
  if (!(n > 0.0)) throw Error("retract: cannot retract the zero matrix");
  return (std::sqrt(c1) / n) * moved;
}

double frobenius_budget(const CMatrix& U, const CMatrix& V, const SystemConfig& config) {
  const double re = (std::conj(config.beta1) * config.beta3).real();
  return (config.p_tot_mw - 4.0 * re * U.trace().real() -
          6.0 * std::norm(config.beta3) * V.trace().real()) /
         std::norm(config.beta1);
}

MoResult optimize_precoder(const CMatrix& F_init, const CMatrix& U, const CMatrix& V,
                    const ChannelRealization& channels, const SystemConfig& config,
                    const SolverOptions& options) {
  const int N = static_cast<int>(F_init.rows());
  const int K = static_cast<int>(F_init.cols());
  const double c1 = frobenius_budget(U, V, config);
  const double tol = options.grad_tol(N, K);
  const int restart_every = std::max(1, N * K);

  MoResult res;
  CMatrix F = retract(F_init, CMatrix::Zero(N, K), c1);
  double obj = penalized_objective(F, U, V, channels, config);
  CMatrix grad = riemannian_gradient(euclidean_gradient(F, U, V, channels, config), F);
  double g2 = grad.squaredNorm();
  res.objective_trace.push_back(obj);

  if (std::sqrt(g2) < tol) {
    res.point = F;
    res.grad_norm = std::sqrt(g2);
    res.stop = MoStop::GradientNorm;
    return res;
  }

  CMatrix dir = grad;
  int since_restart = 0;
  res.stop = MoStop::MaxIterations;
  for (int it = 0; it < options.max_mo_iters; ++it) {
    if (since_restart >= restart_every || re_inner(dir, grad) <= 0.0) {
      dir = grad;
      since_restart = 0;
    }

    // Backtracking on the sufficient-increase condition. A failed search
    // along a conjugate direction is retried once along the gradient.
    bool accepted = false;
    CMatrix F_next;
    double obj_next = obj;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        if (since_restart == 0) break;
        dir = grad;
        since_restart = 0;
      }
      double step = options.armijo_init_step.value_or(1.0 / std::sqrt(g2));
      for (int bt = 0; bt <= options.armijo_max_backtracks; ++bt) {
        F_next = retract(F, step * dir, c1);
        obj_next = penalized_objective(F_next, U, V, channels, config);
        if (obj_next >= obj + options.armijo_slope * step * g2) {
          accepted = true;
          break;
        }
        step *= options.armijo_contraction;
      }
    }
    if (!accepted) {
      res.stop = MoStop::LineSearchFailed;
      break;
    }

    const double rel_change = std::abs(obj_next - obj) / std::max(std::abs(obj), 1e-300);
    F = std::move(F_next);
    obj = obj_next;
    res.objective_trace.push_back(obj);
    ++res.iterations;

    CMatrix grad_next = riemannian_gradient(euclidean_gradient(F, U, V, channels, config), F);
    const double g2_next = grad_next.squaredNorm();
    if (std::sqrt(g2_next) < tol) {
      grad = std::move(grad_next);
      g2 = g2_next;
      res.stop = MoStop::GradientNorm;
      break;
    }
    if (rel_change < options.outer_tol / 10.0) {
      grad = std::move(grad_next);
      g2 = g2_next;
      res.stop = MoStop::ObjectiveStalled;
      break;
    }
    const double fr = g2_next / g2;
    // Transport the previous direction by projecting onto the new tangent space.
    dir = grad_next + fr * riemannian_gradient(dir, F);
    grad = std::move(grad_next);
    g2 = g2_next;
    ++since_restart;
  }
  res.point = std::move(F);
  res.grad_norm = std::sqrt(g2);
  return res;
}

AuxUpdate update_u(const CMatrix& F, const CMatrix& V, const SystemConfig& config) {
  const CMatrix C = F * F.adjoint();
  const RMatrix W = C.cwiseAbs2();
  const double re = (std::conj(config.beta1) * config.beta3).real();
  AuxUpdate out;
  if (re == 0.0) {
    out.value = W.cast<Complex>();
    out.degenerate = true;
    return out;
  }
  const double c2 = (config.p_tot_mw - std::norm(config.beta1) * F.squaredNorm() -
                     6.0 * std::norm(config.beta3) * V.trace().real()) /
                    (4.0 * re);
  const RMatrix xi = (config.penalty1 + config.penalty2 * W.array()).matrix();
  const CMatrix numer = config.penalty1 * W.cast<Complex>() +
                        config.penalty2 * V.cwiseProduct(C.conjugate());
  CMatrix U = numer.cwiseQuotient(xi.cast<Complex>());
  const RVector inv_xi_diag = xi.diagonal().cwiseInverse();
  const double base_trace = U.diagonal().real().sum();
  // mu / 2 * Tr(I (/) Xi) closes the gap to c2; the dual is real.
  const double half_mu = (c2 - base_trace) / inv_xi_diag.sum();
  U.diagonal() += (half_mu * inv_xi_diag).cast<Complex>();
  out.value = 0.5 * (U + U.adjoint());
  out.dual = 2.0 * half_mu;
  return out;
}

AuxUpdate update_v(const CMatrix& F, const CMatrix& U, const SystemConfig& config) {
  const CMatrix C = F * F.adjoint();
  CMatrix target = U.cwiseProduct(C);
  target = 0.5 * (target + target.adjoint()).eval();
  AuxUpdate out;
  const double b3sq = std::norm(config.beta3);
  if (b3sq == 0.0) {
    out.value = target;
    out.degenerate = true;
    return out;
  }
  const double re = (std::conj(config.beta1) * config.beta3).real();
  const double c3 = (config.p_tot_mw - std::norm(config.beta1) * F.squaredNorm() -
                     4.0 * re * U.trace().real()) /
                    (6.0 * b3sq);
  const auto n = static_cast<double>(F.rows());
  const double shift = (target.trace().real() - c3) / n;
  target.diagonal().array() -= shift;
  out.value = std::move(target);
  return out;
}

CMatrix initial_precoder(const ChannelRealization& channels, const SystemConfig& config) {
  CMatrix F = channels.user_channels;
  for (int k = 0; k < F.cols(); ++k) {
    const double n = F.col(k).norm();
    if (!(n > 0.0)) throw Error("initial_precoder: zero user channel");
    F.col(k) /= n;
  }
  return power_match(F, config.beta1, config.beta3, config.p_tot_mw);
}

namespace {

struct MomentResiduals {
  double u = 0.0;
  double v = 0.0;
};

MomentResiduals moment_residuals(const CMatrix& F, const CMatrix& U, const CMatrix& V) {
  const CMatrix C = F * F.adjoint();
  const CMatrix Wt = exact_moment_u(C);
  const CMatrix Vt = U.cwiseProduct(C);
  MomentResiduals r;
  const double wn = Wt.norm();
  const double vn = Vt.norm();
  r.u = wn > 0.0 ? (U - Wt).norm() / wn : (U - Wt).norm();
  r.v = vn > 0.0 ? (V - Vt).norm() / vn : (V - Vt).norm();
  return r;
}

}  // namespace

PenalizedResult solve_penalized(const ChannelRealization& channels, const SystemConfig& config,
                  const SolverOptions& options, std::optional<CMatrix> F_init) {
  options.validate();
  SystemConfig cfg = config;
  const bool linear_pa = std::norm(cfg.beta3) == 0.0;
  // With a linear PA the power constraint does not involve U or V, so the
  // moment penalties would only bias F; switch them off.
  if (linear_pa) {
    cfg.penalty1 = 0.0;
    cfg.penalty2 = 0.0;
  }

  CMatrix F = F_init ? *F_init : initial_precoder(channels, cfg);
  if (F.rows() != channels.n_tx() || F.cols() != channels.n_users())
    throw DimensionError("solve_penalized: F_init must be N_t x K");
  auto reset_moments = [&](CMatrix& U, CMatrix& V) {
    const CMatrix C = F * F.adjoint();
    U = exact_moment_u(C);
    V = exact_moment_v(C);
  };
  CMatrix U, V;
  reset_moments(U, V);
  if (!linear_pa) {
    // Penalty weights are relative to the energy of the initial moment |C|^2,
    // which scales as P_tot^2; this keeps their stiffness power-independent.
    const double energy = U.squaredNorm();
    if (energy > 0.0) {
      cfg.penalty1 /= energy;
      cfg.penalty2 /= energy;
    }
  }

  PenalizedResult res;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  bool record_mo = true;

  for (int round = 0; round <= options.max_growth_rounds; ++round) {
    if (round > 0) {
      // Each continuation round restarts from a consistent point: exact PA
      // power and exact moments. The AO updates preserve Tr U and Tr V, so
      // drift accumulated under softer penalties is otherwise unrecoverable.
      F = power_match(F, cfg.beta1, cfg.beta3, cfg.p_tot_mw);
      reset_moments(U, V);
    }
    bool outer_converged = false;
    for (int outer = 0; outer < options.max_outer_iters; ++outer) {
      double c1 = frobenius_budget(U, V, cfg);
      while (!(c1 > 0.0)) {
        if (++res.budget_rescues > options.max_budget_rescues) {
          std::ostringstream os;
          os << "solve_penalized: Frobenius budget c1 = " << c1 << " stayed non-positive after "
             << options.max_budget_rescues << " rescues (Tr U = " << U.trace().real()
             << ", Tr V = " << V.trace().real() << ")";
          throw InfeasibleMomentBudget(os.str());
        }
        F *= 0.9;
        reset_moments(U, V);
        c1 = frobenius_budget(U, V, cfg);
      }

      MoResult mo = optimize_precoder(F, U, V, channels, cfg, options);
      for (std::size_t i = 1; i < mo.objective_trace.size(); ++i)
        if (mo.objective_trace[i] < mo.objective_trace[i - 1]) res.mo_monotone = false;
      if (record_mo) {
        // Skip the duplicated starting value of each subsequent inner run.
        const std::size_t first = res.mo_trace.empty() ? 0 : 1;
        res.mo_trace.insert(res.mo_trace.end(), mo.objective_trace.begin() + static_cast<long>(first),
                            mo.objective_trace.end());
      }
      F = std::move(mo.point);
      U = update_u(F, V, cfg).value;
      V = update_v(F, U, cfg).value;

      const ObjectiveTerms terms = objective_terms(F, U, V, channels, cfg);
      const MomentResiduals mr = moment_residuals(F, U, V);
      TraceRecord rec;
      rec.round = round;
      rec.iteration = outer;
      rec.penalized_objective_value = terms.penalized;
      rec.isac_objective = terms.isac;
      rec.grad_norm = mo.grad_norm;
      rec.power_residual =
          std::abs(radiated_power(F, cfg.beta1, cfg.beta3).total - cfg.p_tot_mw) / cfg.p_tot_mw;
      rec.moment_residual_u = mr.u;
      rec.moment_residual_v = mr.v;
      res.trace.push_back(rec);

      const double obj = terms.penalized;
      const bool stalled = !std::isnan(prev_obj) &&
                           std::abs(obj - prev_obj) <= options.outer_tol * std::abs(prev_obj);
      prev_obj = obj;
      if (stalled) {
        outer_converged = true;
        break;
      }
    }
    record_mo = false;

    const MomentResiduals mr = moment_residuals(F, U, V);
    if (linear_pa || (mr.u <= options.moment_residual_tol && mr.v <= options.moment_residual_tol)) {
      res.converged = outer_converged;
      break;
    }
    if (round == options.max_growth_rounds) {
      res.converged = false;
      break;
    }
    cfg.penalty1 *= options.penalty_growth;
    cfg.penalty2 *= options.penalty_growth;
    prev_obj = std::numeric_limits<double>::quiet_NaN();
    ++res.growth_rounds;
  }

  res.state.full_digital = F;
  res.state.aux_u = U;
  res.state.aux_v = V;
  res.final_penalty1 = cfg.penalty1;
  res.final_penalty2 = cfg.penalty2;
  res.power_residual =
      std::abs(radiated_power(F, cfg.beta1, cfg.beta3).total - cfg.p_tot_mw) / cfg.p_tot_mw;
  const double c1 = frobenius_budget(U, V, cfg);
  res.manifold_residual = std::abs(F.squaredNorm() - c1) / c1;
  return res;
}

}  // namespace isac
