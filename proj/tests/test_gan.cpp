#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hessgan/errors.hpp"
#include "hessgan/gan.hpp"
#include "hessgan/metrics.hpp"
#include "hessgan/oracles.hpp"

using namespace hessgan;

namespace {

GanArchitecture tiny_arch(std::size_t data_dim = 2) {
    GanArchitecture a;
    a.latent_dim = 3;
    a.data_dim = data_dim;
    a.g_hidden = {6};
    a.d_hidden = {5};
    return a;
}

// Zero D's output layer so D ≡ sigmoid(bias).
void set_d_output(GanModel& m, double bias) {
    const auto& d = m.discriminator;
    const std::size_t last = d.num_layers() - 1;
    for (std::size_t i = d.weight_offset(last); i < d.bias_offset(last); ++i) m.phi[i] = 0.0;
    m.phi[d.bias_offset(last)] = bias;
}

double clamp_p(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// 1-D model: G(z) = b (constant), D(x) = sigmoid(x).
GanModel probe_model(double g_bias) {
    GanArchitecture a;
    a.latent_dim = 1;
    a.data_dim = 1;
    a.g_hidden = {1};
    a.d_hidden = {1};
    a.g_activation = ActivationSpec{Activation::identity};
    a.d_activation = ActivationSpec{Activation::identity};
    GanModel m = GanModel::create(a, 1);
    std::fill(m.theta.begin(), m.theta.end(), 0.0);
    m.theta.back() = g_bias;
    m.phi = {1.0, 0.0, 1.0, 0.0};
    return m;
}

}  // namespace

TEST_CASE("loss identities with an indifferent discriminator") {
    GanModel m = GanModel::create(tiny_arch(), 3);
    set_d_output(m, 0.0);
    const Batch real = sample_latent(8, 2, 1);
    const Batch z = sample_latent(8, 3, 2);
    CHECK(std::abs(d_loss(m, real, z) - 2.0 * std::log(0.5)) <= 1e-12);
    CHECK(std::abs(d_loss(m, real, z) - (-1.3862943611)) <= 1e-10);
    CHECK(std::abs(g_loss_minimax(m, z) - (-0.6931471806)) <= 1e-10);
    CHECK(std::abs(g_loss_nonsaturating(m, z) - 0.6931471806) <= 1e-10);
}

TEST_CASE("saturation limits") {
    SUBCASE("perfect discriminator drives d_loss to its supremum 0") {
        GanModel m = probe_model(-1.0);
        m.phi = {1000.0, 0.0, 1.0, 0.0};  // D(x) = sigmoid(1000 x)
        const Batch real(4, 1, 1.0);
        const Batch z = sample_latent(4, 1, 3);
        const double l = d_loss(m, real, z);
        CHECK(l <= 0.0);
        CHECK(l >= -1e-6);
    }
    SUBCASE("D(G(z)) -> 0: minimax loss -> 0, non-saturating large") {
        GanModel m = probe_model(-40.0);
        const Batch z = sample_latent(4, 1, 3);
        CHECK(std::abs(g_loss_minimax(m, z)) <= 1e-6);
        CHECK(g_loss_nonsaturating(m, z) == doctest::Approx(-std::log(kProbClamp)));
    }
    SUBCASE("D(G(z)) -> 1: non-saturating loss -> 0") {
        GanModel m = probe_model(40.0);
        const Batch z = sample_latent(4, 1, 3);
        CHECK(g_loss_nonsaturating(m, z) <= 1e-6);
    }
}

TEST_CASE("seeded losses match a term-by-term evaluation") {
    const GanModel m = GanModel::create(tiny_arch(), 9);
    const Batch real = sample_latent(6, 2, 4);
    const Batch z = sample_latent(6, 3, 5);
    const Matrix fake = forward(m.generator, m.theta, z);
    const Matrix d_real = forward(m.discriminator, m.phi, real);
    const Matrix d_fake = forward(m.discriminator, m.phi, fake);
    double expected_d = 0.0, expected_mm = 0.0, expected_ns = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        expected_d += std::log(clamp_p(d_real(i, 0))) / 6.0 + std::log(1.0 - clamp_p(d_fake(i, 0))) / 6.0;
        expected_mm += std::log(1.0 - clamp_p(d_fake(i, 0))) / 6.0;
        expected_ns -= std::log(clamp_p(d_fake(i, 0))) / 6.0;
    }
    CHECK(d_loss(m, real, z) == doctest::Approx(expected_d).epsilon(1e-13));
    CHECK(g_loss_minimax(m, z) == doctest::Approx(expected_mm).epsilon(1e-13));
    CHECK(g_loss_nonsaturating(m, z) == doctest::Approx(expected_ns).epsilon(1e-13));
    // the descent objectives agree with the loss functions
    const auto d_obj = discriminator_objective(m, real, z);
    CHECK(d_obj.value(m.phi) == doctest::Approx(-expected_d).epsilon(1e-13));
    CHECK(generator_objective(m, z, GeneratorLoss::minimax).value(m.theta) ==
          doctest::Approx(expected_mm).epsilon(1e-13));
    CHECK(generator_objective(m, z, GeneratorLoss::nonsaturating).value(m.theta) ==
          doctest::Approx(expected_ns).epsilon(1e-13));
}

TEST_CASE("non-saturating gradient stays large where the minimax one vanishes") {
    const double logit = std::log(0.01 / 0.99);  // D(G(z)) = 0.01
    const GanModel m = probe_model(logit);
    const Batch z = sample_latent(4, 1, 8);
    const auto ns = generator_objective(m, z, GeneratorLoss::nonsaturating);
    const auto mm = generator_objective(m, z, GeneratorLoss::minimax);
    const auto g_ns = oracle::fd_gradient(ns, m.theta);
    const auto g_mm = oracle::fd_gradient(mm, m.theta);
    // derivative along G's output bias
    CHECK(g_ns.back() == doctest::Approx(-0.99).epsilon(1e-6));
    CHECK(g_mm.back() == doctest::Approx(-0.01).epsilon(1e-6));
    ParamVector exact(m.theta.size());
    ns.value_and_grad(m.theta, exact);
    CHECK(oracle::relative_error(exact, g_ns) <= 1e-6);
}

TEST_CASE("both descent objectives pass the derivative oracles") {
    const GanModel m = GanModel::create(tiny_arch(), 21);
    const Batch real = sample_latent(5, 2, 1);
    const Batch z = sample_latent(5, 3, 2);
    const auto d_obj = discriminator_objective(m, real, z);
    const auto g_obj = generator_objective(m, z, GeneratorLoss::nonsaturating);
    ParamVector gd(m.phi.size()), gg(m.theta.size());
    d_obj.value_and_grad(m.phi, gd);
    g_obj.value_and_grad(m.theta, gg);
    CHECK(oracle::coordinate_error(gd, oracle::fd_gradient(d_obj, m.phi), 1e-5, 1e-7) <= 1e-5);
    CHECK(oracle::coordinate_error(gg, oracle::fd_gradient(g_obj, m.theta), 1e-5, 1e-7) <= 1e-5);
    ParamVector v(m.theta.size(), 0.3), hv(m.theta.size());
    g_obj.hvp(m.theta, v, hv);
    CHECK(oracle::relative_error(hv, oracle::fd_hvp(g_obj, m.theta, v)) <= 1e-4);
}

TEST_CASE("a tiny D ascent step does not decrease the value function") {
    TrainConfig cfg;
    cfg.d_adam.lr = 1e-6;
    TrainState st = TrainState::create(tiny_arch(), cfg, 4);
    const Batch real = sample_latent(16, 2, 1);
    const Batch z = sample_latent(16, 3, 2);
    const double before = d_loss(st.model, real, z);
    nugan_step(Player::discriminator, st, real, z, cfg, 0);
    CHECK(d_loss(st.model, real, z) >= before);
}

TEST_CASE("clamping keeps every loss finite at extreme parameters") {
    GanModel m = GanModel::create(tiny_arch(), 5);
    for (double& w : m.phi) w *= 1e4;
    for (double& w : m.theta) w *= 1e4;
    const Batch real = sample_latent(8, 2, 1);
    const Batch z = sample_latent(8, 3, 2);
    CHECK(std::isfinite(d_loss(m, real, z)));
    CHECK(std::isfinite(g_loss_minimax(m, z)));
    CHECK(std::isfinite(g_loss_nonsaturating(m, z)));
}

TEST_CASE("gda_epoch bookkeeping") {
    const auto ring = gaussian_ring(8, 2.0, 0.02, 640, 1);
    TrainConfig cfg;
    cfg.batch_size = 64;
    SUBCASE("two records per minibatch, D then G") {
        TrainState st = TrainState::create(tiny_arch(), cfg, 1);
        std::ostringstream log;
        write_trace_header(log, cfg);
        CHECK(gda_epoch(st, ring.dataset, cfg, &log));
        CHECK(st.trace.size() == 2 * minibatches_per_epoch(ring.dataset, cfg));
        CHECK(st.trace[0].player == Player::discriminator);
        CHECK(st.trace[1].player == Player::generator);
        CHECK(st.step == 10);
        CHECK(st.epoch == 1);
        CHECK(log.str().find("\"alternation\":\"D-then-G\"") != std::string::npos);
    }
    SUBCASE("zero learning rates leave parameters unchanged") {
        cfg.g_adam.lr = 0.0;
        cfg.d_adam.lr = 0.0;
        TrainState st = TrainState::create(tiny_arch(), cfg, 1);
        const auto theta = st.model.theta, phi = st.model.phi;
        gda_epoch(st, ring.dataset, cfg);
        CHECK(st.model.theta == theta);
        CHECK(st.model.phi == phi);
    }
    SUBCASE("n_critic and max_steps") {
        cfg.n_critic = 2;
        cfg.max_steps = 3;
        TrainState st = TrainState::create(tiny_arch(), cfg, 1);
        CHECK_FALSE(gda_epoch(st, ring.dataset, cfg));
        CHECK(st.step == 3);
        CHECK(st.trace.size() == 9);
    }
    SUBCASE("same seed, same trajectory") {
        TrainState a = TrainState::create(tiny_arch(), cfg, 6);
        TrainState b = TrainState::create(tiny_arch(), cfg, 6);
        gda_epoch(a, ring.dataset, cfg);
        gda_epoch(b, ring.dataset, cfg);
        CHECK(a.model.theta == b.model.theta);
        CHECK(a.model.phi == b.model.phi);
    }
    SUBCASE("batch larger than the dataset") {
        cfg.batch_size = 1000;
        TrainState st = TrainState::create(tiny_arch(), cfg, 1);
        CHECK_THROWS_AS(gda_epoch(st, ring.dataset, cfg), ConfigError);
    }
}

TEST_CASE("k = 0 NuGAN training is bit-identical to Adam training") {
    const auto ring = gaussian_ring(8, 2.0, 0.02, 320, 2);
    TrainConfig adam;
    adam.batch_size = 32;
    TrainConfig nu = adam;
    nu.optimizer = OptimizerKind::nugan;
    nu.nudge.k = 0;
    TrainState a = TrainState::create(tiny_arch(), adam, 8);
    TrainState b = TrainState::create(tiny_arch(), nu, 8);
    for (int e = 0; e < 3; ++e) {
        gda_epoch(a, ring.dataset, adam);
        gda_epoch(b, ring.dataset, nu);
    }
    CHECK(a.model.theta == b.model.theta);
    CHECK(a.model.phi == b.model.phi);
    CHECK(a.g_opt.v == b.g_opt.v);
}

TEST_CASE("NuGAN steps log post-nudge orthogonality") {
    const auto ring = gaussian_ring(8, 2.0, 0.02, 320, 2);
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.optimizer = OptimizerKind::nugan;
    cfg.nudge.k = 2;
    cfg.nudge.lanczos_steps = 15;
    cfg.nudge.recompute_stride = 3;
    TrainState st = TrainState::create(tiny_arch(), cfg, 8);
    gda_epoch(st, ring.dataset, cfg);
    for (const auto& r : st.trace) {
        CHECK(r.info.nudged);
        CHECK(r.info.max_projection <= 1e-8 * (r.info.grad_norm + 1e-12));
        CHECK(r.info.nudged_norm <= r.info.grad_norm * (1.0 + 1e-12));
        CHECK(r.info.eigenvalues.size() == 2);
    }
}

TEST_CASE("NSGAN on a 1-D bimodal target runs 2k steps to completion") {
    MixtureSpec spec;
    spec.centers = {{-2.0}, {2.0}};
    spec.std = 0.1;
    spec.weights = {0.5, 0.5};
    const Dataset data = sample_mixture(spec, 4000, 3);
    GanArchitecture arch;
    arch.latent_dim = 2;
    arch.data_dim = 1;
    arch.g_hidden = {16};
    arch.d_hidden = {16};
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.max_steps = 2000;
    cfg.g_adam.lr = cfg.d_adam.lr = 1e-3;
    TrainState st = TrainState::create(arch, cfg, 2);
    while (gda_epoch(st, data, cfg)) {
    }
    CHECK(st.step == 2000);
    const Matrix samples = generate(st.model, sample_latent(1000, 2, 9));
    CHECK(all_finite(samples.values()));
    const auto cov = mode_coverage(samples, spec);
    MESSAGE("1-D bimodal coverage: " << cov.covered_modes << "/2, hq " << cov.high_quality_fraction);
    CHECK(cov.total_modes == 2);
}

TEST_CASE("LNE verdicts on constructed quadratic games") {
    LneOptions opts;
    const auto convex = QuadraticObjective::diagonal(std::vector<double>{1.0, 2.0});
    const auto indefinite = QuadraticObjective::diagonal(std::vector<double>{1.0, -1.0});
    const auto concave = QuadraticObjective::diagonal(std::vector<double>{-1.0, -3.0});
    const ParamVector origin{0.0, 0.0}, off{1.0, 1.0};
    CHECK(classify_critical_point(convex, origin, opts).verdict == LneVerdict::local_min_candidate);
    CHECK(classify_critical_point(indefinite, origin, opts).verdict == LneVerdict::saddle);
    CHECK(classify_critical_point(convex, off, opts).verdict == LneVerdict::non_critical);
    CHECK(classify_critical_point(concave, origin, opts).verdict == LneVerdict::local_max_candidate);
    const auto r = lne_check(convex, origin, indefinite, origin, opts);
    CHECK(r.generator.verdict == LneVerdict::local_min_candidate);
    CHECK(r.discriminator.verdict == LneVerdict::saddle);
    CHECK(r.generator.min_eig == doctest::Approx(1.0));
    CHECK(r.discriminator.min_eig == doctest::Approx(-1.0));
}

TEST_CASE("lne_check on a briefly trained GAN reports finite curvature") {
    const auto ring = gaussian_ring(8, 2.0, 0.02, 640, 1);
    TrainConfig cfg;
    TrainState st = TrainState::create(tiny_arch(), cfg, 3);
    gda_epoch(st, ring.dataset, cfg);
    const Batch real = gather_rows(ring.dataset.samples, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    const Batch z = sample_latent(8, 3, 4);
    const auto rep = lne_check(st, real, z, cfg.g_loss, {});
    for (const auto* p : {&rep.generator, &rep.discriminator}) {
        CHECK(std::isfinite(p->min_eig));
        CHECK(std::isfinite(p->max_eig));
        CHECK(p->min_residual <= 1e-3);
        CHECK(p->max_residual <= 1e-3);
        MESSAGE("verdict " << verdict_name(p->verdict));
    }
}

TEST_CASE("enum names round-trip") {
    CHECK(parse_generator_loss(generator_loss_name(GeneratorLoss::minimax)) == GeneratorLoss::minimax);
    CHECK(parse_optimizer(optimizer_name(OptimizerKind::nugan)) == OptimizerKind::nugan);
    CHECK_THROWS_AS(parse_optimizer("sgd"), ConfigError);
}
