#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "confpinn/datagen.hpp"
#include "confpinn/error.hpp"
#include "confpinn/physics.hpp"
#include "confpinn/random.hpp"

namespace {

using namespace confpinn;
using namespace confpinn::physics;

// {u, f, f', f''} from symbolic differentiation (tests/oracles/flux_oracle.py).
constexpr std::array<std::array<double, 4>, 16> flux_table{{
#include "flux_values.inc"
}};

bool close_rel(double a, double b, double rel, double abs_floor)
{
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

// Logistic curve written exactly as a [1, 1, 1] tanh network on the scaled
// input s = (t - 75) / 75: N = 1/2 + tanh((beta t + logit n0) / 2) / 2.
net::MlpModel exact_logistic_network(double beta, double n0, bool inverse)
{
    net::MlpModel m({1, 1, 1}, inverse);
    const double logit = std::log(n0 / (1.0 - n0));
    m.weights(0)[0] = 75.0 * beta / 2.0;
    m.biases(0)[0] = (75.0 * beta + logit) / 2.0;
    m.weights(1)[0] = 0.5;
    m.biases(1)[0] = 0.5;
    if (inverse) {
        m.set_beta(beta);
    }
    return m;
}

TEST(Flux, KnownValues)
{
    EXPECT_EQ(flux(0.0), 0.0);
    EXPECT_DOUBLE_EQ(flux(1.0), 1.0);
    EXPECT_DOUBLE_EQ(flux(0.5), 0.8);
    EXPECT_DOUBLE_EQ(flux(3.0), 0.9);
    EXPECT_EQ(flux_derivative(0.0), 0.0);
}

TEST(FluxOracle, SymbolicValues)
{
    for (const auto& row : flux_table) {
        const double u = row[0];
        EXPECT_PRED4(close_rel, flux(u), row[1], 1e-13, 1e-15) << "u = " << u;
        EXPECT_PRED4(close_rel, flux_derivative(u), row[2], 1e-13, 1e-15) << "u = " << u;
        EXPECT_PRED4(close_rel, flux_second_derivative(u), row[3], 1e-12, 1e-14) << "u = " << u;
    }
}

TEST(Flux, DerivativesMatchFiniteDifferences)
{
    constexpr double h = 1e-5;
    for (double u = -4.0; u <= 4.0; u += 0.0173) {
        const double d1 = (flux(u + h) - flux(u - h)) / (2 * h);
        const double d2 = (flux_derivative(u + h) - flux_derivative(u - h)) / (2 * h);
        EXPECT_PRED4(close_rel, flux_derivative(u), d1, 1e-6, 1e-9);
        EXPECT_PRED4(close_rel, flux_second_derivative(u), d2, 1e-6, 1e-8);
    }
}

TEST(Flux, BoundedAndMonotoneOnUnitInterval)
{
    double prev = flux(0.0);
    for (int i = 0; i <= 10000; ++i) {
        const double f = flux(i / 10000.0);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
        EXPECT_GE(f, prev);
        prev = f;
    }
}

TEST(Scaling, MapsDomainOntoUnitBox)
{
    const auto s = scaling_for(BuckleyLeverettProblem{});
    const auto b = s.apply(net::Batch(2, {0.0, -1.0, 1.0, 1.0, 0.5, 0.0}));
    EXPECT_DOUBLE_EQ(b(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(b(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(b(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(b(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(b(2, 0), 0.0);
    EXPECT_DOUBLE_EQ(s.factor(0), 2.0);
    EXPECT_DOUBLE_EQ(scaling_for(LogisticProblem{}).factor(0), 2.0 / 150.0);
}

TEST(LogisticResidual, ConstantNetworks)
{
    LogisticProblem p;
    const auto t = datagen::linspace(0.0, 150.0, 31);
    net::MlpModel zero({1, 4, 1}, false);
    for (double r : logistic_residual(zero, p, t)) {
        EXPECT_EQ(r, 0.0);
    }
    net::MlpModel one({1, 4, 1}, false);
    one.biases(1)[0] = 1.0;
    for (double r : logistic_residual(one, p, t)) {
        EXPECT_EQ(r, 0.0);
    }
}

TEST(LogisticResidual, AnalyticSurrogateHasTinyResidual)
{
    LogisticProblem p;
    const auto m = exact_logistic_network(p.beta, p.n0, false);
    const auto t = datagen::linspace(0.0, 150.0, 301);
    const auto n = predict(m, scaling_for(p), net::Batch::from_scalars(t));
    for (std::size_t i = 0; i < t.size(); ++i) {
        ASSERT_NEAR(n[i], datagen::logistic_analytic(t[i], p.beta, p.n0), 1e-6);
    }
    for (double r : logistic_residual(m, p, t)) {
        EXPECT_LE(std::abs(r), 1e-3);
    }
}

TEST(LogisticResidual, ModeMismatchRejected)
{
    LogisticProblem p;
    p.inverse_mode = true;
    const auto m = net::init_model({1, 3, 1}, 0, false);
    const std::vector<double> t{1.0};
    EXPECT_THROW(logistic_residual(m, p, t), ConfigError);
}

TEST(BlResidual, ConstantNetworkIsZero)
{
    BuckleyLeverettProblem p;
    net::MlpModel m({2, 3, 1}, false);
    m.biases(1)[0] = 0.7;
    const net::Batch b(2, {0.1, -0.5, 0.9, 0.3});
    for (double r : bl_residual(m, p, b)) {
        EXPECT_EQ(r, 0.0);
    }
}

TEST(BlResidual, IdentityInXGivesMinusFluxDerivative)
{
    BuckleyLeverettProblem p; // x domain [-1, 1] scales to itself
    net::MlpModel m({2, 1}, false);
    m.weights(0)[0] = 0.0;
    m.weights(0)[1] = 1.0;
    for (const auto& row : flux_table) {
        const double x = row[0];
        if (x < -1.0 || x > 1.0) {
            continue;
        }
        const double point[2] = {0.4, x};
        net::Batch b(2);
        b.push_back(point);
        EXPECT_PRED4(close_rel, bl_residual(m, p, b)[0], -row[2], 1e-13, 1e-15) << "x = " << x;
    }
}

TEST(Grids, LogisticGridShape)
{
    const auto g = logistic_grid(LogisticProblem{}, 200);
    EXPECT_EQ(g.interior.size(), 200u);
    EXPECT_EQ(g.interior(0, 0), 0.0);
    EXPECT_EQ(g.interior(199, 0), 150.0);
    ASSERT_EQ(g.initial.size(), 1u);
    EXPECT_EQ(g.initial_values[0], 0.1);
}

TEST(Grids, BlGridSkipsDiscontinuity)
{
    BuckleyLeverettProblem p;
    const auto g = bl_grid(p, 50, 50, 101); // odd count puts a centre on x = 0
    EXPECT_EQ(g.interior.size(), 2500u);
    EXPECT_EQ(g.initial.size(), 100u);
    for (std::size_t i = 0; i < g.initial.size(); ++i) {
        EXPECT_NE(g.initial(i, 1), 0.0);
        EXPECT_EQ(g.initial(i, 0), 0.0);
        EXPECT_EQ(g.initial_values[i], g.initial(i, 1) < 0 ? -3.0 : 3.0);
    }
    for (std::size_t i = 0; i < g.interior.size(); ++i) {
        EXPECT_TRUE(p.t_domain.contains(g.interior(i, 0)));
        EXPECT_TRUE(p.x_domain.contains(g.interior(i, 1)));
    }
}

datagen::Dataset two_point_dataset()
{
    datagen::Dataset d;
    d.inputs = net::Batch::from_scalars(std::vector<double>{10.0, 20.0});
    d.observations = {0.3, -0.4};
    return d;
}

TEST(PinnLoss, HandComputedZeroNetwork)
{
    LogisticProblem p;
    const auto grid = logistic_grid(p, 5);
    LossWeights w{2.0, 3.0, 5.0};
    const auto loss = make_logistic_loss(p, two_point_dataset(), grid, w);
    net::MlpModel zero({1, 4, 1}, false);
    const auto b = loss->evaluate(zero);
    EXPECT_DOUBLE_EQ(b.data, (0.09 + 0.16) / 2.0);
    EXPECT_EQ(b.physics, 0.0);
    EXPECT_DOUBLE_EQ(b.initial, 0.01);
    EXPECT_DOUBLE_EQ(b.total, 2.0 * 0.125 + 5.0 * 0.01);
}

TEST(PinnLoss, ZeroPhysicsWeightIsRegression)
{
    LogisticProblem p;
    const auto m = net::init_model({1, 5, 1}, 3, false);
    const auto data = two_point_dataset();
    const auto loss = make_logistic_loss(p, data, logistic_grid(p, 20), {1.0, 0.0, 1.0});
    const auto pred = predict(m, loss->scaling(), data.inputs);
    const auto ic = predict(m, loss->scaling(), net::Batch::from_scalars(std::vector<double>{0.0}));
    const double mse = (std::pow(pred[0] - 0.3, 2) + std::pow(pred[1] + 0.4, 2)) / 2.0;
    EXPECT_NEAR(loss->evaluate(m).total, mse + std::pow(ic[0] - 0.1, 2), 1e-15);
}

TEST(PinnLoss, PerfectInterpolantHasZeroLoss)
{
    LogisticProblem p;
    const auto m = exact_logistic_network(p.beta, p.n0, false);
    const auto t = datagen::linspace(0.0, 150.0, 11);
    auto data = datagen::logistic_dataset(p.beta, p.n0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        data.observations[i] = datagen::logistic_analytic(t[i], p.beta, p.n0);
    }
    const auto b = make_logistic_loss(p, data, logistic_grid(p, 50))->evaluate(m);
    EXPECT_LT(b.total, 1e-25);
}

TEST(PinnLoss, EmptyDatasetAndGridRejected)
{
    datagen::Dataset empty;
    EXPECT_THROW(make_logistic_loss(LogisticProblem{}, empty, CollocationGrid{}), ConfigError);
    datagen::Dataset empty2;
    empty2.inputs = net::Batch(2);
    empty2.input_names = {"t", "x"};
    EXPECT_THROW(make_bl_loss(BuckleyLeverettProblem{}, empty2, CollocationGrid{}), ConfigError);
}

template <class MakeModel>
void check_loss_gradient(const PinnLoss& loss, MakeModel make, int instances)
{
    constexpr double h = 1e-5;
    for (int k = 0; k < instances; ++k) {
        auto m = make(k);
        std::vector<double> grad(m.parameter_count());
        const auto b = loss.evaluate(m, grad);
        EXPECT_GE(b.total, 0.0);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double saved = m.parameters()[i];
            m.parameters()[i] = saved + h;
            const double up = loss.evaluate(m).total;
            m.parameters()[i] = saved - h;
            const double down = loss.evaluate(m).total;
            m.parameters()[i] = saved;
            EXPECT_PRED4(close_rel, grad[i], (up - down) / (2 * h), 1e-4, 1e-7)
                << "instance " << k << " parameter " << i;
        }
    }
}

TEST(PinnLossOracle, InverseLogisticGradientIncludingBeta)
{
    LogisticProblem p;
    p.inverse_mode = true;
    p.t_domain = {0.0, 30.0};
    auto data = datagen::logistic_dataset(0.3, 0.1, datagen::linspace(0.0, 30.0, 10));
    const auto loss = make_logistic_loss(p, data, logistic_grid(p, 40));
    Rng rng(17);
    std::uniform_real_distribution<double> beta(0.0, 0.5);
    check_loss_gradient(
        *loss,
        [&](int k) {
            auto m = net::init_model({1, 10, 10, 1}, 100 + k, true);
            m.set_beta(beta(rng));
            return m;
        },
        10);
}

TEST(PinnLossOracle, BuckleyLeverettGradient)
{
    BuckleyLeverettProblem p;
    const auto ref = datagen::solve_bl_reference(p, 200, 21);
    const auto data = datagen::bl_dataset(ref, p, 1.0, 12);
    const auto loss = make_bl_loss(p, data, bl_grid(p, 6, 6, 10));
    check_loss_gradient(
        *loss, [](int k) { return net::init_model({2, 6, 6, 1}, 200 + k, false); }, 5);
}

TEST(Training, NoiselessInverseRecoversBeta)
{
    LogisticProblem p;
    p.inverse_mode = true;
    p.t_domain = {0.0, 30.0};
    const auto data = datagen::logistic_dataset(0.25, 0.1, datagen::linspace(0.0, 30.0, 10));
    const auto loss = make_logistic_loss(p, data, logistic_grid(p, 100));
    auto m = net::init_model({1, 10, 10, 1}, 1, true);
    const auto report = train(m, *loss, TrainingConfig{});
    EXPECT_LE(report.final_loss, report.initial_loss);
    EXPECT_NEAR(*m.beta(), 0.25, 1e-3);
    EXPECT_EQ(report.adam.loss_trace.size(), 100u);
}

} // namespace
