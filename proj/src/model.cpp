#include "mrn/model.hpp"

#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace mrn {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gather_rows(const Dataset& data, std::span<const int> batch) {
    MatrixXd x(static_cast<Index>(batch.size()), data.n_features());
    for (std::size_t i = 0; i < batch.size(); ++i)
        x.row(static_cast<Index>(i)) = data.features.row(batch[i]);
    return x;
}

// Row-wise softmax with log-sum-exp stabilization; returns probabilities and
// accumulates the cross-entropy of the true labels.
MatrixXd softmax_ce(const MatrixXd& logits, const Dataset& data,
                    std::span<const int> batch, double& loss_out) {
    MatrixXd p(logits.rows(), logits.cols());
    double loss = 0.0;
    for (Index i = 0; i < logits.rows(); ++i) {
        const double zmax = logits.row(i).maxCoeff();
        const Eigen::ArrayXd e = (logits.row(i).array() - zmax).exp();
        const double sum = e.sum();
        p.row(i) = (e / sum).matrix();
        const int y = data.labels[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])];
        loss -= std::log(p(i, y));
    }
    loss_out = loss / static_cast<double>(logits.rows());
    return p;
}

void subtract_labels(MatrixXd& p, const Dataset& data, std::span<const int> batch) {
    for (Index i = 0; i < p.rows(); ++i) {
        const int y = data.labels[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])];
        p(i, y) -= 1.0;
    }
    p /= static_cast<double>(p.rows());
}

}  // namespace

Eigen::Index Model::param_count() const {
    switch (kind) {
        case ModelKind::LogisticRegression:
            return static_cast<Index>(n_classes) * n_features + n_classes;
        case ModelKind::MlpOneHidden:
            return static_cast<Index>(hidden) * n_features + hidden +
                   static_cast<Index>(n_classes) * hidden + n_classes;
        case ModelKind::Quadratic:
            return n_features;
    }
    throw std::logic_error("Model: unknown kind");
}

LossGrad model_loss_grad(const Model& model, const Dataset& data,
                         std::span<const int> batch, const ParamVector& at) {
    if (at.size() != model.param_count())
        throw std::invalid_argument("model_loss_grad: parameter dimension mismatch");
    if (batch.empty()) throw std::invalid_argument("model_loss_grad: empty batch");

    const MatrixXd x = gather_rows(data, batch);
    const auto nb = static_cast<double>(batch.size());
    LossGrad out;
    out.grad.resize(at.size());

    switch (model.kind) {
        case ModelKind::LogisticRegression: {
            const Index f = model.n_features, c = model.n_classes;
            Eigen::Map<const MatrixXd> w(at.data(), c, f);
            Eigen::Map<const VectorXd> b(at.data() + c * f, c);
            MatrixXd logits = x * w.transpose();
            logits.rowwise() += b.transpose();
            MatrixXd p = softmax_ce(logits, data, batch, out.loss);
            subtract_labels(p, data, batch);
            Eigen::Map<MatrixXd> gw(out.grad.data(), c, f);
            Eigen::Map<VectorXd> gb(out.grad.data() + c * f, c);
            gw = p.transpose() * x;
            gb = p.colwise().sum().transpose();
            break;
        }
        case ModelKind::MlpOneHidden: {
            const Index f = model.n_features, h = model.hidden, c = model.n_classes;
            const double* base = at.data();
            Eigen::Map<const MatrixXd> w1(base, h, f);
            Eigen::Map<const VectorXd> b1(base + h * f, h);
            Eigen::Map<const MatrixXd> w2(base + h * f + h, c, h);
            Eigen::Map<const VectorXd> b2(base + h * f + h + c * h, c);

            MatrixXd z1 = x * w1.transpose();
            z1.rowwise() += b1.transpose();
            const MatrixXd a1 = z1.array().tanh();
            MatrixXd logits = a1 * w2.transpose();
            logits.rowwise() += b2.transpose();

            MatrixXd d2 = softmax_ce(logits, data, batch, out.loss);
            subtract_labels(d2, data, batch);
            const MatrixXd d1 =
                ((d2 * w2).array() * (1.0 - a1.array().square())).matrix();

            double* gbase = out.grad.data();
            Eigen::Map<MatrixXd> gw1(gbase, h, f);
            Eigen::Map<VectorXd> gb1(gbase + h * f, h);
            Eigen::Map<MatrixXd> gw2(gbase + h * f + h, c, h);
            Eigen::Map<VectorXd> gb2(gbase + h * f + h + c * h, c);
            gw1 = d1.transpose() * x;
            gb1 = d1.colwise().sum().transpose();
            gw2 = d2.transpose() * a1;
            gb2 = d2.colwise().sum().transpose();
            break;
        }
        case ModelKind::Quadratic: {
            const VectorXd mean = x.colwise().mean().transpose();
            out.loss = 0.0;
            for (Index i = 0; i < x.rows(); ++i)
                out.loss += 0.5 * (at.matrix() - x.row(i).transpose()).squaredNorm();
            out.loss /= nb;
            out.grad = at - mean.array();
            break;
        }
    }
    return out;
}

double model_loss(const Model& model, const Dataset& data, const ParamVector& at) {
    std::vector<int> all(static_cast<std::size_t>(data.n_samples()));
    std::iota(all.begin(), all.end(), 0);
    return model_loss_grad(model, data, all, at).loss;
}

double model_accuracy(const Model& model, const Dataset& data, const ParamVector& at) {
    if (model.kind == ModelKind::Quadratic) return 0.0;
    if (at.size() != model.param_count())
        throw std::invalid_argument("model_accuracy: parameter dimension mismatch");

    const Index f = model.n_features, c = model.n_classes;
    MatrixXd logits;
    if (model.kind == ModelKind::LogisticRegression) {
        Eigen::Map<const MatrixXd> w(at.data(), c, f);
        Eigen::Map<const VectorXd> b(at.data() + c * f, c);
        logits = data.features * w.transpose();
        logits.rowwise() += b.transpose();
    } else {
        const Index h = model.hidden;
        const double* base = at.data();
        Eigen::Map<const MatrixXd> w1(base, h, f);
        Eigen::Map<const VectorXd> b1(base + h * f, h);
        Eigen::Map<const MatrixXd> w2(base + h * f + h, c, h);
        Eigen::Map<const VectorXd> b2(base + h * f + h + c * h, c);
        MatrixXd z1 = data.features * w1.transpose();
        z1.rowwise() += b1.transpose();
        logits = (z1.array().tanh()).matrix() * w2.transpose();
        logits.rowwise() += b2.transpose();
    }

    long correct = 0;
    for (Index i = 0; i < logits.rows(); ++i) {
        Index argmax = 0;
        logits.row(i).maxCoeff(&argmax);
        if (static_cast<int>(argmax) == data.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

ParamVector init_params(const Model& model, std::uint64_t seed) {
    ParamVector p = ParamVector::Zero(model.param_count());
    if (model.kind != ModelKind::MlpOneHidden) return p;

    Prng g(seed);
    const Index f = model.n_features, h = model.hidden, c = model.n_classes;
    double* base = p.data();
    Eigen::Map<MatrixXd> w1(base, h, f);
    Eigen::Map<MatrixXd> w2(base + h * f + h, c, h);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(f));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (Index j = 0; j < f; ++j)
        for (Index i = 0; i < h; ++i) w1(i, j) = g.next_gaussian(s1);
    for (Index j = 0; j < h; ++j)
        for (Index i = 0; i < c; ++i) w2(i, j) = g.next_gaussian(s2);
    return p;
}

}  // namespace mrn
