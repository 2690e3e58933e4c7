#include <doctest.h>

#include <cmath>

#include "mia/optim.hpp"
#include "mia/rng.hpp"

using namespace mia;

namespace {

Param<float> make_param(std::string name, std::vector<float> v) {
    Param<float> p;
    p.name = std::move(name);
    const std::size_t n = v.size();
    p.value = Tensor({n}, std::move(v));
    p.grad = Tensor({n});
    return p;
}

// Straight transcription of the rectified update for one scalar, in double.
struct RAdamRef {
    double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0, v = 0;
    int t = 0;
    double step(double p, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double rinf = 2 / (1 - b2) - 1;
        const double bt = std::pow(b2, t);
        const double rt = rinf - 2 * t * bt / (1 - bt);
        if (rt > 4) {
            const double vh = std::sqrt(v / (1 - bt));
            const double r = std::sqrt((rt - 4) * (rt - 2) * rinf / ((rinf - 4) * (rinf - 2) * rt));
            return p - lr * r * mh / (vh + eps);
        }
        return p - lr * mh;
    }
};

}  // namespace

TEST_CASE("rho and the rectification gate") {
    CHECK(RAdam::rho_inf(0.999) == doctest::Approx(1999.0));
    CHECK(RAdam::rho(0.999, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(RAdam::rectification(0.999, 1).has_value());
    CHECK_FALSE(RAdam::rectification(0.999, 4).has_value());
    CHECK(RAdam::rectification(0.999, 5).has_value());
    // The factor approaches 1 as t grows.
    CHECK(*RAdam::rectification(0.999, 100000) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("RAdam follows the reference trace") {
    Rng rng(1);
    auto p = make_param("w", {0.5f, -1.0f, 2.0f});
    ParamList params{&p};
    RAdam opt({1e-2});
    std::vector<RAdamRef> ref(3, RAdamRef{1e-2});
    std::vector<double> shadow{0.5, -1.0, 2.0};
    for (int t = 0; t < 40; ++t) {
        for (std::size_t j = 0; j < 3; ++j) p.grad[j] = static_cast<float>(rng.uniform(-1, 1));
        for (std::size_t j = 0; j < 3; ++j) shadow[j] = ref[j].step(shadow[j], p.grad[j]);
        opt.step(params);
        for (std::size_t j = 0; j < 3; ++j) CHECK(p.value[j] == doctest::Approx(shadow[j]).epsilon(1e-5));
    }
    CHECK(opt.steps() == 40);
}

TEST_CASE("RAdam warm-up steps are plain momentum") {
    auto p = make_param("w", {1.0f});
    ParamList params{&p};
    RAdam opt({0.1});
    p.grad[0] = 2.0f;
    opt.step(params);
    // m_hat = g on the first step.
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 2.0));
}

TEST_CASE("RAdam state round trip") {
    Rng rng(2);
    auto a = make_param("w", {0.1f, 0.2f});
    auto b = a;
    ParamList pa{&a}, pb{&b};
    RAdam oa({1e-3}), ob({1e-3});
    for (int t = 0; t < 7; ++t) {
        a.grad[0] = static_cast<float>(rng.uniform(-1, 1));
        a.grad[1] = static_cast<float>(rng.uniform(-1, 1));
        oa.step(pa);
    }
    b.value = a.value;
    ob.load_state(pb, oa.state(pa));
    CHECK(ob.steps() == 7);
    a.grad[0] = b.grad[0] = 0.3f;
    a.grad[1] = b.grad[1] = -0.7f;
    oa.step(pa);
    ob.step(pb);
    CHECK(a.value == b.value);
}

TEST_CASE("SGD momentum update") {
    auto p = make_param("w", {1.0f});
    ParamList params{&p};
    SgdMomentum opt({0.1, 0.9});
    p.grad[0] = 1.0f;
    opt.step(params);
    CHECK(p.value[0] == doctest::Approx(0.9));
    opt.step(params);
    // v = 0.9 * -0.1 - 0.1 = -0.19
    CHECK(p.value[0] == doctest::Approx(0.71));
    CHECK(opt.velocity()[0][0] == doctest::Approx(-0.19));
    CHECK_THROWS_AS(SgdMomentum({0.1, 1.0}), std::invalid_argument);
}

TEST_CASE("optimizers reject changed parameter lists") {
    auto p = make_param("w", {1.0f});
    auto q = make_param("u", {1.0f, 2.0f});
    RAdam opt;
    opt.step({&p});
    CHECK_THROWS_AS(opt.step({&q}), std::invalid_argument);
}

TEST_CASE("plateau scheduler halves after exactly patience stale epochs") {
    PlateauScheduler s(1e-4, 0.5, 20);
    s.update(0.5);
    for (int i = 1; i < 20; ++i) CHECK(s.update(0.5) == 1e-4);
    CHECK(s.update(0.4) == 5e-5);
    for (int i = 1; i < 20; ++i) CHECK(s.update(0.5) == 5e-5);
    CHECK(s.update(0.5) == 2.5e-5);
    CHECK(s.reductions() == 2);
    // A strict improvement resets the counter.
    for (int i = 0; i < 19; ++i) s.update(0.5);
    s.update(0.6);
    for (int i = 0; i < 19; ++i) CHECK(s.update(0.6) == 2.5e-5);
}

TEST_CASE("early stopper stops at best plus patience and restores the best weights") {
    auto p = make_param("w", {0.0f});
    ParamList params{&p};
    EarlyStopper st(5, 100);
    const double metrics[] = {0.1, 0.3, 0.2, 0.3, 0.25, 0.1, 0.0};
    int epoch = 0;
    StopDecision d = StopDecision::proceed;
    std::uint64_t best_sum = 0;
    for (double m : metrics) {
        ++epoch;
        p.value[0] = static_cast<float>(epoch);
        d = st.update(epoch, m, params);
        if (epoch == 2) best_sum = tensor_checksum(params);
        if (d == StopDecision::stop) break;
    }
    CHECK(epoch == 7);
    CHECK(st.best_epoch() == 2);
    st.restore(params);
    CHECK(p.value[0] == 2.0f);
    CHECK(tensor_checksum(params) == best_sum);
}

TEST_CASE("early stopper honours max_epochs") {
    auto p = make_param("w", {0.0f});
    EarlyStopper st(80, 10);
    for (int e = 1; e < 10; ++e) CHECK(st.update(e, e * 0.01, {&p}) == StopDecision::proceed);
    CHECK(st.update(10, 1.0, {&p}) == StopDecision::stop);
}
