#include "isac/baselines.hpp"

#include "isac/model.hpp"

#include <Eigen/SVD>
#include <limits>
#include <sstream>

namespace isac {

CMatrix mrt_precoder(const ChannelRealization& channels, const SystemConfig& config) {
  CMatrix F = channels.user_channels;
  for (int k = 0; k < F.cols(); ++k) {
    const double n = F.col(k).norm();
    if (!(n > 0.0)) {
      std::ostringstream os;
      os << "mrt_precoder: channel of user " << k << " is zero";
      throw Error(os.str());
    }
    F.col(k) /= n;
  }
  return power_match(F, config.beta1, config.beta3, config.p_tot_mw);
}

CMatrix zf_precoder(const ChannelRealization& channels, const SystemConfig& config) {
  const CMatrix& H = channels.user_channels;
  if (H.cols() > H.rows()) throw DimensionError("zf_precoder: more users than antennas");
  Eigen::JacobiSVD<CMatrix> svd(H);
  const RVector sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smin > 0.0) || cond > 1e12) {
    std::ostringstream os;
    os << "zf_precoder: channel matrix is rank deficient (condition number " << cond << ")";
    throw RankDeficientChannel(os.str(), cond);
  }
  const CMatrix gram = H.adjoint() * H;
  const CMatrix F = H * gram.ldlt().solve(CMatrix::Identity(H.cols(), H.cols()));
  return power_match(F, config.beta1, config.beta3, config.p_tot_mw);
}

CMatrix rbf_precoder(const SystemConfig& config, std::mt19937_64& rng) {
  const CMatrix F = complex_normal_matrix(config.n_tx, config.n_users, rng);
  return power_match(F, config.beta1, config.beta3, config.p_tot_mw);
}

SystemConfig linear_pa_view(const SystemConfig& config) {
  SystemConfig c = config;
  c.beta3 = Complex(0.0, 0.0);
  return c;
}

PenalizedResult proposed_known_pa(const ChannelRealization& channels, const SystemConfig& config,
                           const SolverOptions& options) {
  return solve_penalized(channels, config, options);
}

PenalizedResult proposed_unknown_pa(const ChannelRealization& channels, const SystemConfig& config,
                             const SolverOptions& options) {
  return solve_penalized(channels, linear_pa_view(config), options);
}

}  // namespace isac
