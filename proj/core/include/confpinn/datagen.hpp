#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "confpinn/dataset.hpp"
#include "confpinn/physics.hpp"

namespace confpinn::datagen {

// --------------------------------------------------------------- logistic ---

/// Closed-form solution n0 / (n0 + (1 - n0) exp(-beta t)).
double logistic_analytic(double t, double beta, double n0) noexcept;

/// Classical RK4 on dN/dt = beta N (1 - N), reported at each point of a
/// strictly increasing `t_grid`; each interval is split into equal substeps
/// no longer than `max_step`. The first entry is n0 at t_grid[0].
std::vector<double> solve_ode_rk4(double beta, double n0, std::span<const double> t_grid,
                                  double max_step = 0.1);

/// `count` equispaced points on [lower, upper], both endpoints included.
std::vector<double> linspace(double lower, double upper, std::size_t count);

/// Noise-free logistic dataset on `t_grid` (RK4 solution).
Dataset logistic_dataset(double beta, double n0, std::span<const double> t_grid);

// -------------------------------------------------------- Buckley-Leverett ---

/// Exact Godunov flux for u_t + g(u)_x = 0 with g = f, the Buckley-Leverett
/// flux: min of f over [ul, ur] when ul <= ur, max over [ur, ul] otherwise.
/// Extrema are taken over the endpoints and f's stationary points.
double godunov_flux(double ul, double ur) noexcept;

/// Finite-volume reference solution on a uniform grid of cell centres.
struct BlReference {
    std::vector<double> x;       ///< cell centres
    std::vector<double> t;       ///< snapshot times, t.front() = t_min, t.back() = t_max
    std::vector<double> u;       ///< row-major, t.size() x x.size()
    double dx = 0.0;
    std::size_t steps = 0;       ///< time steps taken
    double max_mass_defect = 0.0; ///< worst per-step |change in mass - boundary inflow|
    double max_cfl = 0.0;

    std::span<const double> snapshot(std::size_t k) const
    {
        return {u.data() + k * x.size(), x.size()};
    }
    /// Linear interpolation in x (clamped to the outer cell centres) and t.
    double sample(double time, double position) const;
};

/// Godunov scheme for u_t - f(u)_x = 0, i.e. u_t + g(u)_x = 0 with g = -f,
/// whose exact interface flux is G(ul, ur) = -godunov_flux(ur, ul).
/// Transmissive (zero-gradient) boundaries; time steps sized so that
/// max|f'| dt / dx <= cfl. Needs nx, nt >= 16; nt is the number of snapshot
/// times (evenly spaced over the time domain, both ends included).
BlReference solve_bl_reference(const physics::BuckleyLeverettProblem& problem, std::size_t nx,
                               std::size_t nt, double cfl = 0.9);

/// Dataset at the line t = `time` with `count` equispaced x in the domain
/// (inputs (t, x), observation u).
Dataset bl_dataset(const BlReference& reference, const physics::BuckleyLeverettProblem& problem,
                   double time, std::size_t count);

// ------------------------------------------------------- noise and splits ---

/// Adds i.i.d. N(0, sigma^2) to every observation; inputs and order are
/// untouched and the seed and sigma are recorded in the metadata.
Dataset add_noise(const Dataset& data, double sigma, std::uint64_t seed);

struct SplitSpec {
    std::size_t n_train = 25;
    std::size_t n_holdout = 100;
    std::size_t n_test = 25;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    Dataset train;
    Dataset holdout;
    Dataset test;
    /// Row indices into the source dataset, ascending within each part.
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> holdout_indices;
    std::vector<std::size_t> test_indices;
};

/// Uniformly random partition without replacement. The three sizes must add
/// up to the dataset size.
DatasetSplit split(const Dataset& data, const SplitSpec& spec);

struct HoldoutSplit {
    Dataset calibration;
    Dataset validation;
    std::vector<std::size_t> calibration_indices;
    std::vector<std::size_t> validation_indices;
};

/// Random calibration / validation partition of a holdout set; n_c + n_v
/// must equal its size. n_v = 0 puts everything in calibration.
HoldoutSplit split_holdout(const Dataset& holdout, std::size_t n_calibration,
                           std::size_t n_validation, std::uint64_t seed);

/// Random partition of 0..n-1 into consecutive parts of the given sizes
/// (which must sum to n); each part comes back sorted.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t n,
                                                        std::span<const std::size_t> sizes,
                                                        std::uint64_t seed);

} // namespace confpinn::datagen
