#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using DiagMatrix = Eigen::DiagonalMatrix<Complex, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when the Frobenius-norm budget c1 of the F-manifold is not positive.
class InfeasibleMomentBudget : public Error {
 public:
  using Error::Error;
};

class RankDeficientChannel : public Error {
 public:
  RankDeficientChannel(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
// Noise power for a given transmit SNR, N0 = P_tot / 10^(snr/10).
double noise_from_snr(double p_tot_mw, double snr_db);
double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Physical and model parameters of one ISAC transmitter scenario.
///
/// Angles are degrees here and radians everywhere downstream; powers are
/// linear milliwatts. `noise_user` holds one entry per user.
struct SystemConfig {
  int n_tx = 64;
  int n_rf = 16;
  int n_users = 2;
  int n_paths = 5;
  double p_tot_mw = 19.952623149688797;  // 13 dBm
  std::vector<double> noise_user = {0.19952623149688797, 0.19952623149688797};
  double noise_sense = 0.19952623149688797;
  double weight_comm = 0.5;
  double weight_sense = 0.5;
  Complex beta1{1.14, -0.08};
  Complex beta3{-0.08, 0.1};
  double target_angle_deg = 60.0;
  Complex target_gain{1.0, 0.0};
  double penalty1 = -0.01;
  double penalty2 = -0.01;
  std::uint64_t rng_seed = 1;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  // Sets every user's noise and the sensing noise from an SNR in dB.
  void set_snr_db(double snr_db);

  int subarray_size() const { return n_tx / n_rf; }
};

struct ChannelRealization {
  CMatrix user_channels;  // N_t x K, column k is h_k
  RMatrix path_angles;    // K x L, radians
  CMatrix path_gains;     // K x L
  CVector sense_steering;
  double target_angle = 0.0;  // radians
  Complex target_gain{1.0, 0.0};

  int n_tx() const { return static_cast<int>(user_channels.rows()); }
  int n_users() const { return static_cast<int>(user_channels.cols()); }
};

struct DistortionModel {
  DiagMatrix bussgang_gain;
  CMatrix distortion_cov;
  CMatrix tx_cov;
};

struct PrecoderState {
  CMatrix full_digital;
  CMatrix aux_u;
  CMatrix aux_v;
  CMatrix analog;
  CMatrix digital;

  bool has_hybrid() const { return analog.size() > 0 && digital.size() > 0; }
};

struct MetricsReport {
  std::vector<double> user_sindr;
  std::vector<double> user_rates;
  double sense_sndr = 0.0;
  double sense_mi = 0.0;
  double weighted_objective = 0.0;
  double radiated_power = 0.0;

  double sum_rate() const;
};

}  // namespace isac
