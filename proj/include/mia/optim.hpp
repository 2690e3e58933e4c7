#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "mia/checkpoint.hpp"
#include "mia/layers.hpp"

namespace mia {

using ParamList = std::vector<Param<float>*>;

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual std::string_view name() const = 0;
    /// Applies one update to every parameter from its accumulated gradient.
    virtual void step(const ParamList& params) = 0;
    virtual double lr() const = 0;
    virtual void set_lr(double lr) = 0;
    /// Accumulators under `optim.*` names, for checkpoints.
    virtual std::vector<NamedTensor> state(const ParamList& params) const = 0;
    virtual void load_state(const ParamList& params, const std::vector<NamedTensor>& tensors) = 0;
};

struct RAdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Skip the warm-up branch and always take the adaptive step (with the
    /// rectification factor when it is defined, 1 otherwise).
    bool always_adaptive = false;
};

/// Rectified Adam. Moments are bias-corrected Adam moments; the adaptive
/// step is scaled by
///   r_t = sqrt((rho_t - 4)(rho_t - 2) rho_inf / ((rho_inf - 4)(rho_inf - 2) rho_t))
/// and only taken when rho_t > 4. Otherwise the step is lr * m_hat.
class RAdam final : public Optimizer {
public:
    explicit RAdam(RAdamOptions options = {});

    std::string_view name() const override { return "radam"; }
    void step(const ParamList& params) override;
    double lr() const override { return options_.lr; }
    void set_lr(double lr) override { options_.lr = lr; }
    std::vector<NamedTensor> state(const ParamList& params) const override;
    void load_state(const ParamList& params, const std::vector<NamedTensor>& tensors) override;

    std::uint64_t steps() const noexcept { return t_; }
    const RAdamOptions& options() const noexcept { return options_; }

    static double rho_inf(double beta2);
    static double rho(double beta2, std::uint64_t t);
    /// Rectification factor, or nullopt when rho_t <= 4.
    static std::optional<double> rectification(double beta2, std::uint64_t t);

private:
    void ensure_state(const ParamList& params);

    RAdamOptions options_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

struct SgdOptions {
    double lr = 1e-4;
    double momentum = 0.9;
};

/// Classical momentum: v <- mu v - lr g; p <- p + v.
class SgdMomentum final : public Optimizer {
public:
    explicit SgdMomentum(SgdOptions options = {});

    std::string_view name() const override { return "sgd_momentum"; }
    void step(const ParamList& params) override;
    double lr() const override { return options_.lr; }
    void set_lr(double lr) override { options_.lr = lr; }
    std::vector<NamedTensor> state(const ParamList& params) const override;
    void load_state(const ParamList& params, const std::vector<NamedTensor>& tensors) override;

    const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

private:
    SgdOptions options_;
    std::vector<Tensor> velocity_;
};

/// Reduce-on-plateau for a maximized metric. Any strictly greater value
/// resets the wait counter; `patience` consecutive non-improving epochs
/// multiply the learning rate by `factor` and reset the counter.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, double factor = 0.5, int patience = 20);

    double update(double metric);
    double lr() const noexcept { return lr_; }
    int wait() const noexcept { return wait_; }
    int reductions() const noexcept { return reductions_; }
    double best() const noexcept { return best_; }

private:
    double lr_;
    double factor_;
    int patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    int wait_ = 0;
    int reductions_ = 0;
};

enum class StopDecision { proceed, stop };

/// Early stopping on a maximized metric with a best-weights snapshot.
/// Stops once `patience` epochs pass without a strict improvement or when
/// `epoch` reaches `max_epochs`, whichever happens first.
class EarlyStopper {
public:
    EarlyStopper(int patience, int max_epochs);

    StopDecision update(int epoch, double metric, const ParamList& params);

    int best_epoch() const noexcept { return best_epoch_; }
    double best() const noexcept { return best_; }
    int wait() const noexcept { return wait_; }
    bool has_snapshot() const noexcept { return !snapshot_.empty(); }
    const std::vector<Tensor>& snapshot() const noexcept { return snapshot_; }
    /// Copies the best recorded weights back into `params`.
    void restore(const ParamList& params) const;

private:
    int patience_;
    int max_epochs_;
    double best_ = -std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int wait_ = 0;
    std::vector<Tensor> snapshot_;
};

/// FNV-1a over the raw bytes of every tensor, in order.
std::uint64_t tensor_checksum(const std::vector<Tensor>& tensors);
std::uint64_t tensor_checksum(const ParamList& params);

}  // namespace mia
