#include "isac/model.hpp"

#include <cmath>
#include <sstream>

namespace isac {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double noise_from_snr(double p_tot_mw, double snr_db) {
  return p_tot_mw / std::pow(10.0, snr_db / 10.0);
}
double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

double MetricsReport::sum_rate() const {
  double s = 0.0;
  for (double r : user_rates) s += r;
  return s;
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (n_tx <= 0) fail("n_tx must be positive");
  if (n_rf <= 0) fail("n_rf must be positive");
  if (n_users <= 0) fail("n_users must be positive");
  if (n_paths <= 0) fail("n_paths must be positive");
  if (n_tx % n_rf != 0) {
    std::ostringstream os;
    os << "n_tx (" << n_tx << ") must be divisible by n_rf (" << n_rf << ")";
    fail(os.str());
  }
  if (!(n_users <= n_rf && n_rf <= n_tx)) fail("require n_users <= n_rf <= n_tx");
  if (weight_comm < 0.0 || weight_comm > 1.0 || weight_sense < 0.0 || weight_sense > 1.0)
    fail("weight_comm and weight_sense must lie in [0, 1]");
  if (std::abs(weight_comm + weight_sense - 1.0) > 1e-12)
    fail("weight_comm + weight_sense must equal 1");
  if (!(p_tot_mw > 0.0)) fail("p_tot must be positive");
  if (static_cast<int>(noise_user.size()) != n_users)
    fail("noise_user must hold one entry per user");
  for (double n : noise_user)
    if (!(n > 0.0)) fail("noise_user entries must be positive");
  if (!(noise_sense > 0.0)) fail("noise_sense must be positive");
  if (!(penalty1 < 0.0)) fail("penalty1 must be negative");
  if (!(penalty2 < 0.0)) fail("penalty2 must be negative");
}

void SystemConfig::set_snr_db(double snr_db) {
  const double n0 = noise_from_snr(p_tot_mw, snr_db);
  noise_user.assign(static_cast<std::size_t>(n_users), n0);
  noise_sense = n0;
}

CVector steering_vector(double angle, int n_tx) {
  CVector a(n_tx);
  const double phase_step = kPi * std::cos(angle);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
  for (int m = 0; m < n_tx; ++m) a(m) = std::polar(scale, phase_step * m);
  // entry 0 is exactly 1/sqrt(N_t)
  a(0) = Complex(scale, 0.0);
  return a;
}

Complex complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

CMatrix complex_normal_matrix(int rows, int cols, std::mt19937_64& rng) {
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = complex_normal(rng);
  return m;
}

ChannelRealization make_channels(const SystemConfig& config, const RMatrix& path_angles,
                                 const CMatrix& path_gains) {
  const int K = static_cast<int>(path_angles.rows());
  const int L = static_cast<int>(path_angles.cols());
  if (path_gains.rows() != K || path_gains.cols() != L)
    throw DimensionError("path_angles and path_gains must share shape K x L");
  ChannelRealization ch;
  ch.path_angles = path_angles;
  ch.path_gains = path_gains;
  ch.user_channels = CMatrix::Zero(config.n_tx, K);
  const double amp = std::sqrt(static_cast<double>(config.n_tx) / L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      ch.user_channels.col(k) += amp * path_gains(k, l) * steering_vector(path_angles(k, l), config.n_tx);
  ch.target_angle = deg_to_rad(config.target_angle_deg);
  ch.target_gain = config.target_gain;
  ch.sense_steering = steering_vector(ch.target_angle, config.n_tx);
  return ch;
}

ChannelRealization draw_channels(const SystemConfig& config, std::mt19937_64& rng) {
  const int K = config.n_users;
  const int L = config.n_paths;
  RMatrix angles(K, L);
  CMatrix gains(K, L);
  std::uniform_real_distribution<double> ud(0.0, kPi);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      angles(k, l) = ud(rng);
      gains(k, l) = complex_normal(rng);
    }
  }
  return make_channels(config, angles, gains);
}

DiagMatrix bussgang_gain(const CMatrix& F, Complex beta1, Complex beta3) {
  const RVector row_energy = F.rowwise().squaredNorm();
  CVector d = CVector::Constant(F.rows(), beta1);
  d += (2.0 * beta3) * row_energy.cast<Complex>();
  return DiagMatrix(d);
}

CMatrix exact_moment_u(const CMatrix& tx_cov) {
  return tx_cov.cwiseAbs2().cast<Complex>();
}

CMatrix exact_moment_v(const CMatrix& tx_cov) {
  return tx_cov.cwiseProduct(exact_moment_u(tx_cov));
}

CMatrix distortion_covariance(const CMatrix& F, Complex beta3) {
  const CMatrix C = F * F.adjoint();
  return (2.0 * std::norm(beta3)) * exact_moment_v(C);
}

DistortionModel distortion_model(const CMatrix& F, Complex beta1, Complex beta3) {
  DistortionModel dm;
  dm.tx_cov = F * F.adjoint();
  dm.bussgang_gain = bussgang_gain(F, beta1, beta3);
  dm.distortion_cov = (2.0 * std::norm(beta3)) * exact_moment_v(dm.tx_cov);
  return dm;
}

RadiatedPower radiated_power(const CMatrix& F, Complex beta1, Complex beta3) {
  RadiatedPower p;
  const RVector var = F.rowwise().squaredNorm();
  const double tr_c = var.sum();
  p.trace_u = var.array().square().sum();
  p.trace_v = var.array().cube().sum();
  p.linear = std::norm(beta1) * tr_c;
  p.total = p.linear + 4.0 * (std::conj(beta1) * beta3).real() * p.trace_u +
            6.0 * std::norm(beta3) * p.trace_v;
  return p;
}

double moment_power(const CMatrix& F, const CMatrix& U, const CMatrix& V, Complex beta1,
                    Complex beta3) {
  return std::norm(beta1) * F.squaredNorm() +
         4.0 * (std::conj(beta1) * beta3).real() * U.trace().real() +
         6.0 * std::norm(beta3) * V.trace().real();
}

double power_matching_scale(const CMatrix& F, Complex beta1, Complex beta3, double p_tot,
                            double rel_tol) {
  if (!(F.squaredNorm() > 0.0)) throw Error("cannot power-match a zero precoder");
  auto power_at = [&](double c) { return radiated_power(c * F, beta1, beta3).total; };
  double lo = 0.0;
  double hi = std::sqrt(p_tot / (std::norm(beta1) * F.squaredNorm()));
  while (power_at(hi) < p_tot) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double pm = power_at(mid);
    if (std::abs(pm - p_tot) <= rel_tol * p_tot) return mid;
    if (pm < p_tot)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

CMatrix power_match(const CMatrix& F, Complex beta1, Complex beta3, double p_tot) {
  return power_matching_scale(F, beta1, beta3, p_tot) * F;
}

double user_sindr(const CVector& h, const CMatrix& F, int k, const DistortionModel& dm,
                  double noise) {
  // Row vector h^H B F, one entry per stream.
  const Eigen::RowVectorXcd gains = h.adjoint() * dm.bussgang_gain * F;
  const double signal = std::norm(gains(k));
  const double interference = gains.squaredNorm() - signal;
  const double distortion = (h.adjoint() * dm.distortion_cov * h)(0, 0).real();
  return signal / (std::max(interference, 0.0) + std::max(distortion, 0.0) + noise);
}

double sensing_sndr(const CVector& a_s, Complex alpha_s, const CMatrix& F,
                    const DistortionModel& dm, double noise) {
  const double g2 = std::norm(alpha_s);
  const double signal = g2 * (a_s.adjoint() * dm.bussgang_gain * F).squaredNorm();
  const double distortion = g2 * (a_s.adjoint() * dm.distortion_cov * a_s)(0, 0).real();
  return signal / (std::max(distortion, 0.0) + noise);
}

MetricsReport evaluate_metrics(const ChannelRealization& channels, const CMatrix& F,
                               const SystemConfig& config) {
  if (F.rows() != channels.n_tx() || F.cols() != channels.n_users())
    throw DimensionError("precoder must be N_t x K");
  const DistortionModel dm = distortion_model(F, config.beta1, config.beta3);
  MetricsReport r;
  const int K = channels.n_users();
  r.user_sindr.resize(static_cast<std::size_t>(K));
  r.user_rates.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const double noise = config.noise_user.at(static_cast<std::size_t>(k));
    const double g = user_sindr(channels.user_channels.col(k), F, k, dm, noise);
    r.user_sindr[static_cast<std::size_t>(k)] = g;
    r.user_rates[static_cast<std::size_t>(k)] = std::log2(1.0 + g);
  }
  r.sense_sndr =
      sensing_sndr(channels.sense_steering, channels.target_gain, F, dm, config.noise_sense);
  r.sense_mi = std::log2(1.0 + r.sense_sndr);
  r.weighted_objective = config.weight_comm * r.sum_rate() + config.weight_sense * r.sense_mi;
  r.radiated_power = radiated_power(F, config.beta1, config.beta3).total;
  return r;
}

MetricsReport evaluate_metrics(const ChannelRealization& channels, const PrecoderState& state,
                               const SystemConfig& config) {
  if (state.has_hybrid()) return evaluate_metrics(channels, CMatrix(state.analog * state.digital), config);
  return evaluate_metrics(channels, state.full_digital, config);
}

}  // namespace isac
