#pragma once

// Particle-loop kernels.  Each kernel has a plain serial reference version
// and an OpenMP version.  The OpenMP reductions accumulate over fixed blocks
// of particles and combine the block partials in index order, so their
// output does not depend on the number of threads.

#include "fpf/basis.hpp"
#include "fpf/gain_field.hpp"
#include "fpf/model.hpp"

#include <cstdint>

namespace fpf {

enum class Exec { serial, parallel };

/// Worker count for the parallel kernels: FPF_LAB_THREADS when set to a
/// positive value, otherwise the OpenMP default.
int worker_count();
/// Overrides worker_count() for the rest of the process; 0 restores the
/// FPF_LAB_THREADS / OpenMP default.
void set_worker_count(int n);

namespace kernels {

/// Particles per reduction block in the parallel kernels.
inline constexpr int kBlock = 256;

namespace serial {
// X_i += a(X_i) dt + L sqrt(dt) z_i with z_i drawn from stream (seed, i) at
// `counter`.  Returns the next unused counter.
std::uint64_t propagate_em(Mat& states, const SdeModel& model, double dt, std::uint64_t seed,
                           std::uint64_t counter);
Vec eval_obs(const Mat& states, const SdeModel& model);
// A = (1/N) sum grad psi grad psi^T,  b = (1/N) sum c_i (psi(X_i) - mean psi).
void assemble_gram(const GalerkinBasis& basis, const Mat& states, const Vec& centered_h, Mat& A,
                   Vec& b);
// Fills k, k_jac, u, u_jac of `out` for phi = sum coef_k psi_k.
void galerkin_field(const GalerkinBasis& basis, const Vec& coef, const Mat& states,
                    const Vec& h_vals, double h_hat, const SdeModel& model, GainField& out);
// X_i += K_i dz + u_i dt.
void apply_control(Mat& states, const Mat& k, const Mat& u, double dz, double dt);
// det(I + V_i) for the flattened d x d blocks of v_jac.
Vec admissibility_dets(const Mat& v_jac, int d);
// Gaussian KDE of the sorted samples, evaluated at lo + g dx for g < n.
Vec kde_on_grid(const Vec& sorted, double bandwidth, double lo, double dx, int n);
}  // namespace serial

// Same contracts as the serial versions.
namespace omp {
std::uint64_t propagate_em(Mat& states, const SdeModel& model, double dt, std::uint64_t seed,
                           std::uint64_t counter);
Vec eval_obs(const Mat& states, const SdeModel& model);
void assemble_gram(const GalerkinBasis& basis, const Mat& states, const Vec& centered_h, Mat& A,
                   Vec& b);
void galerkin_field(const GalerkinBasis& basis, const Vec& coef, const Mat& states,
                    const Vec& h_vals, double h_hat, const SdeModel& model, GainField& out);
void apply_control(Mat& states, const Mat& k, const Mat& u, double dz, double dt);
Vec admissibility_dets(const Mat& v_jac, int d);
Vec kde_on_grid(const Vec& sorted, double bandwidth, double lo, double dx, int n);
}  // namespace omp

inline std::uint64_t propagate_em(Exec e, Mat& states, const SdeModel& model, double dt,
                                  std::uint64_t seed, std::uint64_t counter) {
  return e == Exec::serial ? serial::propagate_em(states, model, dt, seed, counter)
                           : omp::propagate_em(states, model, dt, seed, counter);
}
inline Vec eval_obs(Exec e, const Mat& states, const SdeModel& model) {
  return e == Exec::serial ? serial::eval_obs(states, model) : omp::eval_obs(states, model);
}
inline void assemble_gram(Exec e, const GalerkinBasis& basis, const Mat& states, const Vec& ch,
                          Mat& A, Vec& b) {
  e == Exec::serial ? serial::assemble_gram(basis, states, ch, A, b)
                    : omp::assemble_gram(basis, states, ch, A, b);
}
inline void galerkin_field(Exec e, const GalerkinBasis& basis, const Vec& coef, const Mat& states,
                           const Vec& h_vals, double h_hat, const SdeModel& model, GainField& out) {
  e == Exec::serial ? serial::galerkin_field(basis, coef, states, h_vals, h_hat, model, out)
                    : omp::galerkin_field(basis, coef, states, h_vals, h_hat, model, out);
}
inline void apply_control(Exec e, Mat& states, const Mat& k, const Mat& u, double dz, double dt) {
  e == Exec::serial ? serial::apply_control(states, k, u, dz, dt)
                    : omp::apply_control(states, k, u, dz, dt);
}
inline Vec admissibility_dets(Exec e, const Mat& v_jac, int d) {
  return e == Exec::serial ? serial::admissibility_dets(v_jac, d) : omp::admissibility_dets(v_jac, d);
}
inline Vec kde_on_grid(Exec e, const Vec& sorted, double bandwidth, double lo, double dx, int n) {
  return e == Exec::serial ? serial::kde_on_grid(sorted, bandwidth, lo, dx, n)
                           : omp::kde_on_grid(sorted, bandwidth, lo, dx, n);
}

}  // namespace kernels
}  // namespace fpf
