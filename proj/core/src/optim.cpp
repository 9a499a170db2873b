#include "confpinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "confpinn/error.hpp"

namespace confpinn::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace

// ----------------------------------------------------------------- Adam ---

void AdamConfig::validate() const
{
    if (epochs < 1) {
        throw ConfigError("adam: epochs must be at least 1");
    }
    if (!(lr_start > 0.0)) {
        throw ConfigError("adam: lr_start must be positive");
    }
    if (!(lr_end >= 0.0) || lr_end > lr_start) {
        throw ConfigError("adam: lr_end must lie in [0, lr_start]");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("adam: moment decay rates must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("adam: epsilon must be positive");
    }
}

double adam_learning_rate(const AdamConfig& config, std::size_t epoch)
{
    if (config.epochs <= 1) {
        return config.lr_start;
    }
    const double frac = static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
    return (1.0 - frac) * config.lr_start + frac * config.lr_end;
}

AdamResult run_adam(std::vector<double>& x, const Objective& objective, const AdamConfig& config)
{
    config.validate();
    const auto n = x.size();
    std::vector<double> grad(n), m(n, 0.0), v(n, 0.0);
    std::vector<double> best_x = x;
    double best = std::numeric_limits<double>::infinity();

    AdamResult result;
    result.loss_trace.reserve(config.epochs);
    result.learning_rates.reserve(config.epochs);

    double b1_pow = 1.0;
    double b2_pow = 1.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double f = objective(x, grad);
        if (!std::isfinite(f)) {
            throw NumericError("adam: loss became non-finite at epoch " + std::to_string(epoch));
        }
        if (epoch == 0) {
            result.initial_loss = f;
        }
        result.loss_trace.push_back(f);
        if (f < best) {
            best = f;
            best_x = x;
        }

        const double lr = adam_learning_rate(config, epoch);
        result.learning_rates.push_back(lr);
        b1_pow *= config.beta1;
        b2_pow *= config.beta2;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / (1.0 - b1_pow);
            const double v_hat = v[i] / (1.0 - b2_pow);
            x[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
        ++result.steps;
    }

    double final_loss = objective(x, grad);
    if (!std::isfinite(final_loss)) {
        if (!config.keep_best) {
            throw NumericError("adam: loss became non-finite after epoch " +
                               std::to_string(config.epochs - 1));
        }
        final_loss = std::numeric_limits<double>::infinity();
    }
    if (config.keep_best && best < final_loss) {
        x = best_x;
        final_loss = best;
    }
    result.final_loss = final_loss;
    return result;
}

// --------------------------------------------------------------- L-BFGS ---

std::string_view to_string(Termination reason) noexcept
{
    switch (reason) {
    case Termination::gradient_tolerance: return "gradient_tolerance";
    case Termination::step_tolerance: return "step_tolerance";
    case Termination::max_iterations: return "max_iterations";
    case Termination::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

Termination termination_from_string(std::string_view name)
{
    for (auto r : {Termination::gradient_tolerance, Termination::step_tolerance,
                   Termination::max_iterations, Termination::line_search_failure}) {
        if (to_string(r) == name) {
            return r;
        }
    }
    throw ParseError("unknown termination reason '" + std::string(name) + "'");
}

void LbfgsConfig::validate() const
{
    if (history_size < 1) {
        throw ConfigError("lbfgs: history_size must be at least 1");
    }
    if (max_iterations < 1) {
        throw ConfigError("lbfgs: max_iterations must be at least 1");
    }
    if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0)) {
        throw ConfigError("lbfgs: tolerances must be positive");
    }
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
        throw ConfigError("lbfgs: need 0 < c1 < c2 < 1");
    }
    if (max_line_search_evaluations < 2) {
        throw ConfigError("lbfgs: max_line_search_evaluations must be at least 2");
    }
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double d = 0.0; ///< directional derivative at alpha
};

/// Strong-Wolfe line search along `dir` from `x`. On success the accepted
/// point and its gradient are left in `x_out` / `g_out`.
class LineSearch {
  public:
    LineSearch(const Objective& objective, const LbfgsConfig& config, std::span<const double> x,
               std::span<const double> dir, double f0, double d0)
        : objective_{objective}, config_{config}, x_{x}, dir_{dir}, f0_{f0}, d0_{d0},
          trial_x_(x.size()), trial_g_(x.size()), best_x_(x.size()), best_g_(x.size())
    {}

    /// True when a point with lower objective was accepted.
    bool run(double alpha1, std::vector<double>& x_out, std::vector<double>& g_out, double& f_out)
    {
        Probe prev{0.0, f0_, d0_};
        double alpha = alpha1;
        for (;;) {
            const Probe cur = probe(alpha);
            if (!std::isfinite(cur.f) || cur.f > f0_ + config_.wolfe_c1 * alpha * d0_ ||
                (evaluations_ > 1 && cur.f >= prev.f)) {
                return finish(zoom(prev, cur), x_out, g_out, f_out);
            }
            if (std::abs(cur.d) <= -config_.wolfe_c2 * d0_) {
                return finish(true, x_out, g_out, f_out);
            }
            if (cur.d >= 0.0) {
                return finish(zoom(cur, prev), x_out, g_out, f_out);
            }
            if (evaluations_ >= config_.max_line_search_evaluations) {
                return finish(false, x_out, g_out, f_out);
            }
            prev = cur;
            alpha *= 2.0;
        }
    }

    std::size_t evaluations() const noexcept { return evaluations_; }

  private:
    Probe probe(double alpha)
    {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            trial_x_[i] = x_[i] + alpha * dir_[i];
        }
        const double f = objective_(trial_x_, trial_g_);
        ++evaluations_;
        last_f_ = f;
        Probe p{alpha, f, std::numeric_limits<double>::quiet_NaN()};
        if (std::isfinite(f)) {
            p.d = dot(trial_g_, dir_);
            if (f <= f0_ + config_.wolfe_c1 * alpha * d0_ && f < best_f_) {
                best_f_ = f;
                best_x_ = trial_x_;
                best_g_ = trial_g_;
            }
        }
        else {
            p.f = std::numeric_limits<double>::infinity();
        }
        return p;
    }

    static double cubic_minimizer(const Probe& a, const Probe& b)
    {
        const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
        const double disc = d1 * d1 - a.d * b.d;
        if (!(disc >= 0.0) || !std::isfinite(b.f) || !std::isfinite(b.d)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        return b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
    }

    /// `lo` satisfies sufficient decrease and has the lower value; the
    /// minimizer lies between lo and hi.
    bool zoom(Probe lo, Probe hi)
    {
        while (evaluations_ < config_.max_line_search_evaluations) {
            const double left = std::min(lo.alpha, hi.alpha);
            const double right = std::max(lo.alpha, hi.alpha);
            const double width = right - left;
            if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, right)) {
                return false;
            }
            double alpha = cubic_minimizer(lo, hi);
            const double margin = 0.1 * width;
            if (!std::isfinite(alpha) || alpha < left + margin || alpha > right - margin) {
                alpha = 0.5 * (left + right);
            }
            const Probe cur = probe(alpha);
            if (!std::isfinite(cur.f) || cur.f > f0_ + config_.wolfe_c1 * alpha * d0_ ||
                cur.f >= lo.f) {
                hi = cur;
            }
            else {
                if (std::abs(cur.d) <= -config_.wolfe_c2 * d0_) {
                    return true;
                }
                if (cur.d * (hi.alpha - lo.alpha) >= 0.0) {
                    hi = lo;
                }
                lo = cur;
            }
        }
        return false;
    }

    /// On a clean Wolfe exit the last probe is the accepted point. Otherwise
    /// fall back to the best sufficient-decrease point, if there was one.
    bool finish(bool wolfe, std::vector<double>& x_out, std::vector<double>& g_out,
                double& f_out)
    {
        if (wolfe) {
            x_out = trial_x_;
            g_out = trial_g_;
            f_out = last_f_;
            return true;
        }
        if (best_f_ < f0_) {
            x_out = best_x_;
            g_out = best_g_;
            f_out = best_f_;
            return true;
        }
        return false;
    }

    const Objective& objective_;
    const LbfgsConfig& config_;
    std::span<const double> x_;
    std::span<const double> dir_;
    double f0_;
    double d0_;
    std::vector<double> trial_x_;
    std::vector<double> trial_g_;
    std::vector<double> best_x_;
    std::vector<double> best_g_;
    double best_f_ = std::numeric_limits<double>::infinity();
    double last_f_ = 0.0;
    std::size_t evaluations_ = 0;
};

struct Correction {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

/// Two-loop recursion: dir = -H g.
void lbfgs_direction(const std::deque<Correction>& history, std::span<const double> g,
                     std::vector<double>& dir)
{
    const auto n = g.size();
    dir.assign(g.begin(), g.end());
    std::vector<double> alphas(history.size());
    for (std::size_t j = history.size(); j-- > 0;) {
        const auto& c = history[j];
        alphas[j] = c.rho * dot(c.s, dir);
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] -= alphas[j] * c.y[i];
        }
    }
    if (!history.empty()) {
        const auto& last = history.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (auto& d : dir) {
            d *= gamma;
        }
    }
    for (std::size_t j = 0; j < history.size(); ++j) {
        const auto& c = history[j];
        const double beta = c.rho * dot(c.y, dir);
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] += (alphas[j] - beta) * c.s[i];
        }
    }
    for (auto& d : dir) {
        d = -d;
    }
}

} // namespace

LbfgsResult run_lbfgs(std::vector<double>& x, const Objective& objective, const LbfgsConfig& config)
{
    config.validate();
    const auto n = x.size();
    std::vector<double> g(n), dir(n), x_new(n), g_new(n);

    LbfgsResult result;
    double f = objective(x, g);
    ++result.evaluations;
    if (!std::isfinite(f)) {
        throw NumericError("lbfgs: objective is not finite at the starting point");
    }
    result.initial_loss = f;

    std::deque<Correction> history;
    bool just_restarted = false;
    result.termination = Termination::max_iterations;

    while (true) {
        const double gnorm = norm(g);
        if (gnorm < config.gradient_tolerance) {
            result.termination = Termination::gradient_tolerance;
            break;
        }
        if (result.iterations >= config.max_iterations) {
            result.termination = Termination::max_iterations;
            break;
        }

        lbfgs_direction(history, g, dir);
        double d0 = dot(g, dir);
        if (!(d0 < 0.0)) {
            history.clear();
            for (std::size_t i = 0; i < n; ++i) {
                dir[i] = -g[i];
            }
            d0 = -gnorm * gnorm;
        }
        const double alpha1 = history.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

        LineSearch search(objective, config, x, dir, f, d0);
        double f_new = 0.0;
        const bool ok = search.run(alpha1, x_new, g_new, f_new);
        result.evaluations += search.evaluations();

        if (!ok) {
            if (!history.empty() && !just_restarted) {
                history.clear();
                just_restarted = true;
                continue;
            }
            result.termination = Termination::line_search_failure;
            break;
        }
        just_restarted = false;

        Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
        double step_inf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c.s[i] = x_new[i] - x[i];
            c.y[i] = g_new[i] - g[i];
            step_inf = std::max(step_inf, std::abs(c.s[i]));
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        ++result.iterations;

        const double sy = dot(c.s, c.y);
        const double yy = dot(c.y, c.y);
        if (sy > std::numeric_limits<double>::epsilon() * yy && yy > 0.0) {
            c.rho = 1.0 / sy;
            history.push_back(std::move(c));
            if (history.size() > config.history_size) {
                history.pop_front();
            }
        }

        if (step_inf < config.step_tolerance) {
            result.termination = Termination::step_tolerance;
            break;
        }
    }

    result.final_loss = f;
    result.gradient_norm = norm(g);
    return result;
}

} // namespace confpinn::optim
