#include "fpf/error.hpp"
#include "fpf/kernels.hpp"
#include "kernel_detail.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <climits>
#include <cstdlib>
#include <string>

namespace fpf {

namespace {
std::atomic<int> g_override{0};
}  // namespace

void set_worker_count(int n) { g_override.store(std::max(0, n)); }

int worker_count() {
  if (const int o = g_override.load(); o > 0) return o;
  static const int configured = [] {
    const char* env = std::getenv("FPF_LAB_THREADS");
    if (env == nullptr) return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    return (end != env && v > 0) ? static_cast<int>(std::min<long>(v, 1024)) : 0;
  }();
  return configured > 0 ? configured : omp_get_max_threads();
}

namespace kernels::omp {

namespace {

int block_count(int n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

std::uint64_t propagate_em(Mat& states, const SdeModel& model, double dt, std::uint64_t seed,
                           std::uint64_t counter) {
  const int n = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());
  const Mat L = detail::noise_factor(model);
  const double sqdt = std::sqrt(dt);
  int first_bad = INT_MAX;
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<double> z(d);
#pragma omp for schedule(static) reduction(min : first_bad)
    for (int i = 0; i < n; ++i) {
      if (!detail::em_particle(states, i, model, L, sqdt, dt, seed, counter, z))
        first_bad = std::min(first_bad, i);
    }
  }
  if (first_bad != INT_MAX)
    throw NumericalError("non-finite drift at particle " + std::to_string(first_bad));
  return counter + (static_cast<std::uint64_t>(d) + 1) / 2;
}

Vec eval_obs(const Mat& states, const SdeModel& model) {
  const int n = static_cast<int>(states.rows());
  Vec h(n);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int i = 0; i < n; ++i) h(i) = model.obs(states.row(i).transpose());
  return h;
}

void assemble_gram(const GalerkinBasis& basis, const Mat& states, const Vec& centered_h, Mat& A,
                   Vec& b) {
  const int n = static_cast<int>(states.rows());
  const int d = basis.dim();
  const int m = basis.size();
  const int nb = block_count(n);

  // Pass 1: basis means, needed to centre the right-hand side.
  std::vector<Vec> mean_part(nb, Vec::Zero(m));
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<double> v(m);
#pragma omp for schedule(static)
    for (int blk = 0; blk < nb; ++blk) {
      const int end = std::min(n, (blk + 1) * kBlock);
      for (int i = blk * kBlock; i < end; ++i) {
        const Vec x = states.row(i).transpose();
        basis.values(x.data(), v.data());
        for (int k = 0; k < m; ++k) mean_part[blk](k) += v[k];
      }
    }
  }
  Vec psi_mean = Vec::Zero(m);
  for (const auto& p : mean_part) psi_mean += p;
  psi_mean /= n;

  // Pass 2: Gram matrix and load vector.
  std::vector<Mat> a_part(nb, Mat::Zero(m, m));
  std::vector<Vec> b_part(nb, Vec::Zero(m));
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<double> g(static_cast<std::size_t>(m) * d), v(m);
#pragma omp for schedule(static)
    for (int blk = 0; blk < nb; ++blk) {
      Mat& ab = a_part[blk];
      Vec& bb = b_part[blk];
      const int end = std::min(n, (blk + 1) * kBlock);
      for (int i = blk * kBlock; i < end; ++i) {
        const Vec x = states.row(i).transpose();
        basis.gradients(x.data(), g.data());
        basis.values(x.data(), v.data());
        for (int k = 0; k < m; ++k) {
          for (int l = 0; l <= k; ++l) {
            double dot = 0.0;
            for (int a = 0; a < d; ++a) dot += g[k * d + a] * g[l * d + a];
            ab(k, l) += dot;
          }
          bb(k) += centered_h(i) * (v[k] - psi_mean(k));
        }
      }
    }
  }
  A = Mat::Zero(m, m);
  b = Vec::Zero(m);
  for (int blk = 0; blk < nb; ++blk) {
    A += a_part[blk];
    b += b_part[blk];
  }
  A /= n;
  b /= n;
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
}

void galerkin_field(const GalerkinBasis& basis, const Vec& coef, const Mat& states,
                    const Vec& h_vals, double h_hat, const SdeModel& model, GainField& out) {
  const int n = static_cast<int>(states.rows());
  const int d = basis.dim();
  out.k.resize(n, d);
  out.k_jac.resize(n, d * d);
  out.u.resize(n, d);
  out.u_jac.resize(n, d * d);
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<double> k(d), kj(d * d), u(d), uj(d * d), t;
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      const Vec x = states.row(i).transpose();
      detail::galerkin_particle(basis, coef, x, h_vals(i), h_hat, model.obs_gradient(x), k.data(),
                                kj.data(), u.data(), uj.data(), t);
      for (int a = 0; a < d; ++a) {
        out.k(i, a) = k[a];
        out.u(i, a) = u[a];
      }
      for (int a = 0; a < d * d; ++a) {
        out.k_jac(i, a) = kj[a];
        out.u_jac(i, a) = uj[a];
      }
    }
  }
}

void apply_control(Mat& states, const Mat& k, const Mat& u, double dz, double dt) {
  const int n = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) states(i, j) += k(i, j) * dz + u(i, j) * dt;
}

Vec admissibility_dets(const Mat& v_jac, int d) {
  const int n = static_cast<int>(v_jac.rows());
  Vec dets(n);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int i = 0; i < n; ++i) dets(i) = detail::det_identity_plus(v_jac, i, d);
  return dets;
}

// Only samples within 8 bandwidths of a grid point contribute; the neglected
// kernel mass is below 1e-14 relative.
Vec kde_on_grid(const Vec& sorted, double bandwidth, double lo, double dx, int n) {
  Vec out = Vec::Zero(n);
  const double scale = 1.0 / (static_cast<double>(sorted.size()) * bandwidth);
  const double* first = sorted.data();
  const double* last = sorted.data() + sorted.size();
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int g = 0; g < n; ++g) {
    const double x = lo + g * dx;
    const double* it = std::lower_bound(first, last, x - 8.0 * bandwidth);
    const double* stop = std::upper_bound(it, last, x + 8.0 * bandwidth);
    double acc = 0.0;
    for (; it != stop; ++it) acc += detail::gauss_kernel((x - *it) / bandwidth);
    out(g) = acc * scale;
  }
  return out;
}

}  // namespace kernels::omp
}  // namespace fpf
