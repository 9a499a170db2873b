#include "confpinn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "confpinn/error.hpp"
#include "confpinn/random.hpp"

namespace confpinn::datagen {

// --------------------------------------------------------------- logistic ---

double logistic_analytic(double t, double beta, double n0) noexcept
{
    return n0 / (n0 + (1.0 - n0) * std::exp(-beta * t));
}

std::vector<double> solve_ode_rk4(double beta, double n0, std::span<const double> t_grid,
                                  double max_step)
{
    if (!(max_step > 0.0)) {
        throw ConfigError("rk4: max_step must be positive");
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) {
            throw ConfigError("rk4: time grid must be strictly increasing (index " +
                              std::to_string(i) + ")");
        }
    }
    const auto rhs = [beta](double n) { return beta * n * (1.0 - n); };

    std::vector<double> out;
    out.reserve(t_grid.size());
    if (t_grid.empty()) {
        return out;
    }
    double n = n0;
    out.push_back(n);
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        const auto substeps = static_cast<std::size_t>(std::ceil(span / max_step - 1e-12));
        const double h = span / static_cast<double>(std::max<std::size_t>(substeps, 1));
        for (std::size_t s = 0; s < std::max<std::size_t>(substeps, 1); ++s) {
            const double k1 = rhs(n);
            const double k2 = rhs(n + 0.5 * h * k1);
            const double k3 = rhs(n + 0.5 * h * k2);
            const double k4 = rhs(n + h * k3);
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!std::isfinite(n)) {
            throw NumericError("rk4: solution became non-finite at t = " +
                               std::to_string(t_grid[i]));
        }
        out.push_back(n);
    }
    return out;
}

std::vector<double> linspace(double lower, double upper, std::size_t count)
{
    std::vector<double> v(count);
    if (count == 1) {
        v[0] = lower;
        return v;
    }
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    v.back() = upper;
    return v;
}

Dataset logistic_dataset(double beta, double n0, std::span<const double> t_grid)
{
    Dataset data;
    data.inputs = net::Batch::from_scalars(t_grid);
    data.observations = solve_ode_rk4(beta, n0, t_grid);
    data.input_names = {"t"};
    data.observation_name = "N";
    data.meta.problem = "logistic";
    data.meta.true_beta = beta;
    return data;
}

// -------------------------------------------------------- Buckley-Leverett ---

namespace {

/// min and max of the Buckley-Leverett flux over [a, b], a <= b.
std::pair<double, double> flux_range(double a, double b) noexcept
{
    double lo = std::min(physics::flux(a), physics::flux(b));
    double hi = std::max(physics::flux(a), physics::flux(b));
    for (double c : physics::flux_critical_points) {
        if (c > a && c < b) {
            lo = std::min(lo, physics::flux(c));
            hi = std::max(hi, physics::flux(c));
        }
    }
    return {lo, hi};
}

/// Upper bound on |f'| over [a, b] from a dense sample with a small margin.
double max_wave_speed(double a, double b)
{
    constexpr std::size_t samples = 4001;
    double s = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = a + (b - a) * static_cast<double>(i) / static_cast<double>(samples - 1);
        s = std::max(s, std::abs(physics::flux_derivative(u)));
    }
    return 1.01 * s;
}

} // namespace

double godunov_flux(double ul, double ur) noexcept
{
    if (ul <= ur) {
        return flux_range(ul, ur).first;
    }
    return flux_range(ur, ul).second;
}

double BlReference::sample(double time, double position) const
{
    const auto nx = x.size();
    const auto interp_x = [&](std::size_t k) {
        const auto row = snapshot(k);
        if (position <= x.front()) {
            return row.front();
        }
        if (position >= x.back()) {
            return row.back();
        }
        const double s = (position - x.front()) / dx;
        const auto i = std::min(static_cast<std::size_t>(s), nx - 2);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * row[i] + w * row[i + 1];
    };
    if (time <= t.front()) {
        return interp_x(0);
    }
    if (time >= t.back()) {
        return interp_x(t.size() - 1);
    }
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const auto k = static_cast<std::size_t>(it - t.begin()) - 1;
    const double w = (time - t[k]) / (t[k + 1] - t[k]);
    return (1.0 - w) * interp_x(k) + w * interp_x(k + 1);
}

BlReference solve_bl_reference(const physics::BuckleyLeverettProblem& problem, std::size_t nx,
                               std::size_t nt, double cfl)
{
    problem.validate();
    if (nx < 16 || nt < 16) {
        throw ConfigError("Buckley-Leverett reference needs nx, nt >= 16");
    }
    if (!(cfl > 0.0 && cfl <= 0.9)) {
        throw ConfigError("Buckley-Leverett reference needs 0 < cfl <= 0.9");
    }

    BlReference ref;
    const auto& xd = problem.x_domain;
    ref.dx = xd.width() / static_cast<double>(nx);
    ref.x.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        ref.x[i] = xd.lower + (static_cast<double>(i) + 0.5) * ref.dx;
    }
    ref.t = linspace(problem.t_domain.lower, problem.t_domain.upper, nt);
    ref.u.resize(nt * nx);

    std::vector<double> u(nx), next(nx), iface(nx + 1);
    for (std::size_t i = 0; i < nx; ++i) {
        u[i] = problem.initial_value(ref.x[i]);
    }
    std::copy(u.begin(), u.end(), ref.u.begin());

    const auto [umin, umax] = std::minmax_element(u.begin(), u.end());
    const double speed = max_wave_speed(*umin, *umax);

    // Interface flux for g = -f: G(ul, ur) = -godunov_flux(ur, ul).
    const auto interface_flux = [](double ul, double ur) { return -godunov_flux(ur, ul); };

    for (std::size_t k = 1; k < nt; ++k) {
        const double interval = ref.t[k] - ref.t[k - 1];
        std::size_t substeps = 1;
        if (speed > 0.0) {
            const double dt_max = cfl * ref.dx / speed;
            substeps = static_cast<std::size_t>(std::ceil(interval / dt_max));
        }
        const double dt = interval / static_cast<double>(substeps);
        ref.max_cfl = std::max(ref.max_cfl, speed * dt / ref.dx);

        for (std::size_t s = 0; s < substeps; ++s) {
            iface[0] = interface_flux(u[0], u[0]);
            for (std::size_t i = 1; i < nx; ++i) {
                iface[i] = interface_flux(u[i - 1], u[i]);
            }
            iface[nx] = interface_flux(u[nx - 1], u[nx - 1]);

            double mass_before = 0.0;
            double mass_after = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                next[i] = u[i] - dt / ref.dx * (iface[i + 1] - iface[i]);
                if (!std::isfinite(next[i])) {
                    throw NumericError("Buckley-Leverett reference became non-finite");
                }
                mass_before += u[i];
                mass_after += next[i];
            }
            const double inflow = dt * (iface[0] - iface[nx]);
            const double defect = std::abs((mass_after - mass_before) * ref.dx - inflow);
            ref.max_mass_defect = std::max(ref.max_mass_defect, defect);
            u.swap(next);
            ++ref.steps;
        }
        std::copy(u.begin(), u.end(), ref.u.begin() + static_cast<std::ptrdiff_t>(k * nx));
    }
    return ref;
}

Dataset bl_dataset(const BlReference& reference, const physics::BuckleyLeverettProblem& problem,
                   double time, std::size_t count)
{
    Dataset data;
    data.inputs = net::Batch(2);
    data.input_names = {"t", "x"};
    data.observation_name = "u";
    data.meta.problem = "buckley-leverett";
    for (double x : linspace(problem.x_domain.lower, problem.x_domain.upper, count)) {
        const double p[2] = {time, x};
        data.inputs.push_back(p);
        data.observations.push_back(reference.sample(time, x));
    }
    return data;
}

// ------------------------------------------------------- noise and splits ---

Dataset add_noise(const Dataset& data, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("noise sigma must be a finite non-negative number");
    }
    Dataset out = data;
    out.meta.noise_sigma = sigma;
    out.meta.seed = seed;
    if (sigma == 0.0) {
        return out;
    }
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& y : out.observations) {
        y += noise(rng);
    }
    return out;
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n,
                                                        std::span<const std::size_t> sizes,
                                                        std::uint64_t seed)
{
    const auto total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total != n) {
        throw ConfigError("split sizes add up to " + std::to_string(total) + " but there are " +
                          std::to_string(n) + " points");
    }
    Rng rng(seed);
    const auto perm = random_permutation(n, rng);
    std::vector<std::vector<std::size_t>> parts;
    std::size_t offset = 0;
    for (auto size : sizes) {
        std::vector<std::size_t> part(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                                      perm.begin() + static_cast<std::ptrdiff_t>(offset + size));
        std::sort(part.begin(), part.end());
        parts.push_back(std::move(part));
        offset += size;
    }
    return parts;
}

DatasetSplit split(const Dataset& data, const SplitSpec& spec)
{
    const std::size_t sizes[] = {spec.n_train, spec.n_holdout, spec.n_test};
    auto parts = partition_indices(data.size(), sizes, spec.seed);
    DatasetSplit out;
    out.train_indices = std::move(parts[0]);
    out.holdout_indices = std::move(parts[1]);
    out.test_indices = std::move(parts[2]);
    out.train = data.subset(out.train_indices);
    out.holdout = data.subset(out.holdout_indices);
    out.test = data.subset(out.test_indices);
    return out;
}

HoldoutSplit split_holdout(const Dataset& holdout, std::size_t n_calibration,
                           std::size_t n_validation, std::uint64_t seed)
{
    if (n_calibration == 0) {
        throw ConfigError("calibration set must not be empty");
    }
    const std::size_t sizes[] = {n_calibration, n_validation};
    auto parts = partition_indices(holdout.size(), sizes, seed);
    HoldoutSplit out;
    out.calibration_indices = std::move(parts[0]);
    out.validation_indices = std::move(parts[1]);
    out.calibration = holdout.subset(out.calibration_indices);
    out.validation = holdout.subset(out.validation_indices);
    return out;
}

} // namespace confpinn::datagen
