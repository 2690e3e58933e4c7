#include "mia/optim.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mia {

namespace {

void check_grads(const ParamList& params) {
    for (const Param<float>* p : params) {
        if (p->grad.shape() != p->value.shape()) {
            throw std::invalid_argument("optimizer: gradient shape mismatch for " + p->name);
        }
    }
}

void check_slots(const ParamList& params, const std::vector<Tensor>& slots) {
    if (slots.size() != params.size()) throw std::invalid_argument("optimizer: parameter list changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (slots[i].shape() != params[i]->value.shape()) {
            throw std::invalid_argument("optimizer: state shape mismatch for " + params[i]->name);
        }
    }
}

const Tensor& find_state(const std::vector<NamedTensor>& tensors, const std::string& name) {
    for (const auto& t : tensors) {
        if (t.name == name) return t.value;
    }
    throw FormatError(FormatError::Kind::invalid, "optimizer state is missing '" + name + "'");
}

}  // namespace

RAdam::RAdam(RAdamOptions options) : options_(options) {
    if (!(options.lr > 0)) throw std::invalid_argument("radam: lr must be positive");
    if (!(options.beta1 >= 0 && options.beta1 < 1 && options.beta2 >= 0 && options.beta2 < 1)) {
        throw std::invalid_argument("radam: betas must be in [0, 1)");
    }
}

double RAdam::rho_inf(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }

double RAdam::rho(double beta2, std::uint64_t t) {
    const double b2t = std::pow(beta2, static_cast<double>(t));
    return rho_inf(beta2) - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

std::optional<double> RAdam::rectification(double beta2, std::uint64_t t) {
    const double ri = rho_inf(beta2);
    const double rt = rho(beta2, t);
    if (!(rt > 4.0)) return std::nullopt;
    return std::sqrt((rt - 4.0) * (rt - 2.0) * ri / ((ri - 4.0) * (ri - 2.0) * rt));
}

void RAdam::ensure_state(const ParamList& params) {
    if (m_.empty() && !params.empty()) {
        for (const Param<float>* p : params) {
            m_.emplace_back(p->value.shape());
            v_.emplace_back(p->value.shape());
        }
    }
    check_slots(params, m_);
}

void RAdam::step(const ParamList& params) {
    check_grads(params);
    ensure_state(params);
    ++t_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    std::optional<double> r = rectification(b2, t_);
    const bool adaptive = r.has_value() || options_.always_adaptive;
    const double rect = r.value_or(1.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param<float>& p = *params[i];
        float* m = m_[i].raw();
        float* v = v_[i].raw();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            const double mj = b1 * m[j] + (1.0 - b1) * g;
            const double vj = b2 * v[j] + (1.0 - b2) * g * g;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double m_hat = mj / bc1;
            double update;
            if (adaptive) {
                const double v_hat = std::sqrt(vj / bc2);
                update = options_.lr * rect * m_hat / (v_hat + options_.eps);
            } else {
                update = options_.lr * m_hat;
            }
            p.value[j] = static_cast<float>(p.value[j] - update);
        }
    }
}

std::vector<NamedTensor> RAdam::state(const ParamList& params) const {
    std::vector<NamedTensor> out;
    out.push_back({"optim.radam.step", Tensor({1}, {static_cast<float>(t_)})});
    if (m_.empty()) return out;
    check_slots(params, m_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.push_back({"optim.radam.m." + params[i]->name, m_[i]});
        out.push_back({"optim.radam.v." + params[i]->name, v_[i]});
    }
    return out;
}

void RAdam::load_state(const ParamList& params, const std::vector<NamedTensor>& tensors) {
    t_ = static_cast<std::uint64_t>(find_state(tensors, "optim.radam.step")[0]);
    m_.clear();
    v_.clear();
    if (t_ == 0) return;
    for (const Param<float>* p : params) {
        m_.push_back(find_state(tensors, "optim.radam.m." + p->name));
        v_.push_back(find_state(tensors, "optim.radam.v." + p->name));
    }
    check_slots(params, m_);
    check_slots(params, v_);
}

SgdMomentum::SgdMomentum(SgdOptions options) : options_(options) {
    if (!(options.lr > 0)) throw std::invalid_argument("sgd: lr must be positive");
    if (!(options.momentum >= 0 && options.momentum < 1)) throw std::invalid_argument("sgd: momentum must be in [0, 1)");
}

void SgdMomentum::step(const ParamList& params) {
    check_grads(params);
    if (velocity_.empty()) {
        for (const Param<float>* p : params) velocity_.emplace_back(p->value.shape());
    }
    check_slots(params, velocity_);
    const double mu = options_.momentum, lr = options_.lr;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param<float>& p = *params[i];
        float* v = velocity_[i].raw();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double vj = mu * v[j] - lr * p.grad[j];
            v[j] = static_cast<float>(vj);
            p.value[j] = static_cast<float>(p.value[j] + vj);
        }
    }
}

std::vector<NamedTensor> SgdMomentum::state(const ParamList& params) const {
    std::vector<NamedTensor> out;
    if (velocity_.empty()) return out;
    check_slots(params, velocity_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.push_back({"optim.sgd.velocity." + params[i]->name, velocity_[i]});
    }
    return out;
}

void SgdMomentum::load_state(const ParamList& params, const std::vector<NamedTensor>& tensors) {
    velocity_.clear();
    bool any = false;
    for (const auto& t : tensors) any = any || t.name.rfind("optim.sgd.velocity.", 0) == 0;
    if (!any) return;
    for (const Param<float>* p : params) velocity_.push_back(find_state(tensors, "optim.sgd.velocity." + p->name));
    check_slots(params, velocity_);
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, int patience)
    : lr_(initial_lr), factor_(factor), patience_(patience) {
    if (!(initial_lr > 0)) throw std::invalid_argument("scheduler: lr must be positive");
    if (!(factor > 0 && factor < 1)) throw std::invalid_argument("scheduler: factor must be in (0, 1)");
    if (patience < 1) throw std::invalid_argument("scheduler: patience must be >= 1");
}

double PlateauScheduler::update(double metric) {
    if (metric > best_) {
        best_ = metric;
        wait_ = 0;
        return lr_;
    }
    if (++wait_ >= patience_) {
        lr_ *= factor_;
        ++reductions_;
        wait_ = 0;
    }
    return lr_;
}

EarlyStopper::EarlyStopper(int patience, int max_epochs) : patience_(patience), max_epochs_(max_epochs) {
    if (patience < 1 || max_epochs < 1) throw std::invalid_argument("early stopping: patience and max_epochs must be >= 1");
}

StopDecision EarlyStopper::update(int epoch, double metric, const ParamList& params) {
    if (metric > best_) {
        best_ = metric;
        best_epoch_ = epoch;
        wait_ = 0;
        snapshot_.clear();
        for (const Param<float>* p : params) snapshot_.push_back(p->value);
    } else {
        ++wait_;
    }
    if (wait_ >= patience_ || epoch >= max_epochs_) return StopDecision::stop;
    return StopDecision::proceed;
}

void EarlyStopper::restore(const ParamList& params) const {
    if (snapshot_.empty()) return;
    if (snapshot_.size() != params.size()) throw std::invalid_argument("early stopping: snapshot/parameter mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (snapshot_[i].shape() != params[i]->value.shape()) {
            throw std::invalid_argument("early stopping: snapshot shape mismatch for " + params[i]->name);
        }
        params[i]->value = snapshot_[i];
    }
}

namespace {
void fnv(std::uint64_t& h, const Tensor& t) {
    const auto* p = reinterpret_cast<const unsigned char*>(t.raw());
    for (std::size_t i = 0; i < t.size() * sizeof(float); ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}
}  // namespace

std::uint64_t tensor_checksum(const std::vector<Tensor>& tensors) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tensors) fnv(h, t);
    return h;
}

std::uint64_t tensor_checksum(const ParamList& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* p : params) fnv(h, p->value);
    return h;
}

}  // namespace mia
