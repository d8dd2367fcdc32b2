#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mrn/data.hpp"
#include "mrn/model.hpp"

using namespace mrn;

namespace {

// Central finite differences, the independent gradient oracle.
ParamVector fd_gradient(const Model& model, const Dataset& data, std::span<const int> batch,
                        const ParamVector& at, double h) {
    ParamVector g(at.size());
    ParamVector p = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        p[i] = at[i] + h;
        const double up = model_loss_grad(model, data, batch, p).loss;
        p[i] = at[i] - h;
        const double dn = model_loss_grad(model, data, batch, p).loss;
        p[i] = at[i];
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

double max_rel_diff(const ParamVector& a, const ParamVector& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({1.0, std::abs(a[i]), std::abs(b[i])}));
    return worst;
}

std::vector<int> full_index(const Dataset& d) {
    std::vector<int> all(static_cast<std::size_t>(d.n_samples()));
    std::iota(all.begin(), all.end(), 0);
    return all;
}

}  // namespace

TEST_CASE("zero-parameter logistic regression on a balanced batch is at ln(n_classes)") {
    const Dataset d = make_synthetic({40, 6, 2, 0.3, 1, 0});
    const Model model{ModelKind::LogisticRegression, 6, 2, 0};
    const auto all = full_index(d);
    const auto lg = model_loss_grad(model, d, all, ParamVector::Zero(model.param_count()));
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const Dataset d3 = make_synthetic({60, 6, 3, 0.3, 1, 0});
    const Model model3{ModelKind::LogisticRegression, 6, 3, 0};
    const auto lg3 = model_loss_grad(model3, d3, full_index(d3),
                                     ParamVector::Zero(model3.param_count()));
    CHECK(lg3.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences on 100 random triples") {
    Prng g(17);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto kind = static_cast<ModelKind>(trial % 3);
        const int f = 3 + static_cast<int>(g.next_u64() % 5);
        const int c = 2 + static_cast<int>(g.next_u64() % 3);
        const int h = 2 + static_cast<int>(g.next_u64() % 4);
        const Model model{kind, f, kind == ModelKind::Quadratic ? 1 : c, h};

        const Dataset d = make_synthetic(
            {12, f, std::max(2, model.n_classes), 0.5, g.next_u64(), 0});
        std::vector<int> batch;
        for (int i = 0; i < 6; ++i)
            batch.push_back(static_cast<int>(g.next_u64() % 12));

        const ParamVector at = rng_gaussian(g, model.param_count(), 0.7);
        const auto lg = model_loss_grad(model, d, batch, at);
        const ParamVector fd = fd_gradient(model, d, batch, at, 1e-5);
        CHECK(max_rel_diff(lg.grad, fd) < 1e-6);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("duplicating every batch sample leaves loss and gradient unchanged") {
    const Dataset d = make_synthetic({30, 5, 3, 0.4, 2, 0});
    const Model model{ModelKind::MlpOneHidden, 5, 3, 4};
    const ParamVector at = rng_gaussian(RngState{3, 0}, model.param_count(), 0.5);

    std::vector<int> batch{1, 4, 7, 9};
    std::vector<int> doubled{1, 1, 4, 4, 7, 7, 9, 9};
    const auto a = model_loss_grad(model, d, batch, at);
    const auto b = model_loss_grad(model, d, doubled, at);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    CHECK(max_rel_diff(a.grad, b.grad) < 1e-12);
}

TEST_CASE("quadratic model has the closed-form loss and gradient") {
    Dataset d;
    d.n_classes = 1;
    d.features.resize(2, 3);
    d.features << 1.0, 2.0, 3.0, -1.0, 0.0, 1.0;
    d.labels = {0, 0};
    const Model model{ModelKind::Quadratic, 3, 1, 0};
    ParamVector w(3);
    w << 0.5, 0.5, 0.5;
    const std::vector<int> all{0, 1};
    const auto lg = model_loss_grad(model, d, all, w);

    const double expected =
        0.5 * ((0.25 + 2.25 + 6.25) + (2.25 + 0.25 + 0.25));
    CHECK(lg.loss == doctest::Approx(expected / 2.0).epsilon(1e-15));
    CHECK(lg.grad[0] == doctest::Approx(0.5 - 0.0).epsilon(1e-15));
    CHECK(lg.grad[1] == doctest::Approx(0.5 - 1.0).epsilon(1e-15));
    CHECK(lg.grad[2] == doctest::Approx(0.5 - 2.0).epsilon(1e-15));
}

TEST_CASE("logistic loss is convex along random parameter segments") {
    const Dataset d = make_synthetic({50, 6, 3, 0.5, 4, 0});
    const Model model{ModelKind::LogisticRegression, 6, 3, 0};
    const auto all = full_index(d);
    Prng g(23);
    for (int trial = 0; trial < 50; ++trial) {
        const ParamVector a = rng_gaussian(g, model.param_count(), 1.0);
        const ParamVector b = rng_gaussian(g, model.param_count(), 1.0);
        const double fa = model_loss_grad(model, d, all, a).loss;
        const double fb = model_loss_grad(model, d, all, b).loss;
        const double fm = model_loss_grad(model, d, all, ParamVector(0.5 * (a + b))).loss;
        CHECK(fm <= 0.5 * (fa + fb) + 1e-12);
    }
}

TEST_CASE("dimension mismatches are contract violations") {
    const Dataset d = make_synthetic({10, 4, 2, 0.3, 1, 0});
    const Model model{ModelKind::LogisticRegression, 4, 2, 0};
    const std::vector<int> batch{0, 1};
    CHECK_THROWS_AS(model_loss_grad(model, d, batch, ParamVector::Zero(3)),
                    std::invalid_argument);
    CHECK_THROWS_AS(model_loss_grad(model, d, {}, ParamVector::Zero(model.param_count())),
                    std::invalid_argument);
}

TEST_CASE("initialization is deterministic and layer-structured") {
    const Model mlp{ModelKind::MlpOneHidden, 6, 3, 5};
    const ParamVector a = init_params(mlp, 9);
    const ParamVector b = init_params(mlp, 9);
    CHECK((a == b).all());
    // biases zero, weights not
    const Eigen::Index w1 = 5 * 6;
    CHECK((a.segment(w1, 5) == 0.0).all());
    CHECK((a.head(w1) != 0.0).any());

    const Model logit{ModelKind::LogisticRegression, 6, 3, 0};
    CHECK((init_params(logit, 9) == 0.0).all());
}

TEST_CASE("accuracy counts argmax hits") {
    const Dataset d = make_synthetic({200, 8, 3, 1e-3, 6, 0});
    const Model model{ModelKind::LogisticRegression, 8, 3, 0};
    ParamVector w = init_params(model, 1);
    const auto all = full_index(d);
    for (int it = 0; it < 300; ++it) w -= 0.5 * model_loss_grad(model, d, all, w).grad;
    CHECK(model_accuracy(model, d, w) == 1.0);
    CHECK(model_accuracy(model, d, ParamVector::Zero(model.param_count())) <
          1.0);  // uniform logits cannot be perfect on 3 classes
}
