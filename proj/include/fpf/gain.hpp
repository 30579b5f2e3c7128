#pragma once

#include "fpf/basis.hpp"
#include "fpf/gain_field.hpp"
#include "fpf/grid.hpp"
#include "fpf/kernels.hpp"
#include "fpf/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fpf {

/// Closed form for Gaussian p and affine h: K = Sigma H, constant in x.
/// Throws PreconditionError "exact solver requires affine h" otherwise.
GainField solve_gain_exact_gaussian(const ParticleEnsemble& ens, const PosteriorStats& stats,
                                    const SdeModel& model);

/// K_j = (1/N) sum_i (h(X_i) - h_hat)(X_ij - mean_j).
GainField solve_gain_constant(const ParticleEnsemble& ens, const SdeModel& model,
                              Exec exec = Exec::parallel);

/// Galerkin solution of the weak form with the empirical measure.  The ridge
/// defaults to 1e-6 tr(A) / dim(A).
GainField solve_gain_galerkin(const ParticleEnsemble& ens, const SdeModel& model,
                              const GalerkinBasis& basis, std::optional<double> ridge = std::nullopt,
                              Exec exec = Exec::parallel);

/// u_i = -1/2 K_i (h_i + h_hat) + 1/2 (grad K^T)_i^T K_i.
Mat compute_u(const Mat& k, const Mat& k_jac, const Vec& h_vals, double h_hat);

struct AdmissibilityReport {
  Vec dets;
  std::vector<std::size_t> flagged;
};

/// Flags particles whose det(I + grad v^T) is at most eps.
AdmissibilityReport check_admissible(const Mat& v, const Mat& v_jac, double eps = 1e-8,
                                     Exec exec = Exec::parallel);

/// Max over interior nodes of |d/dx (p K) + (h - h_hat) p|, central
/// differences, h_hat taken from the grid.  1-D only.
double gain_residual_on_grid(const GridDensity& density, const Vec& k_on_grid, const SdeModel& model);

/// `i,x_1..x_d,K_1..K_d,u_1..u_d,detV`.
void write_gain_csv(std::ostream& os, const Mat& states, const GainField& gain, const Vec& det_v);

}  // namespace fpf
