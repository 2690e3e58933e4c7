#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mia/model.hpp"
#include "mia/tensor.hpp"

namespace mia {

/// Per-class multipliers on the cross-entropy term.
struct ClassWeights {
    std::vector<double> weights;

    static ClassWeights uniform(std::size_t classes) { return {std::vector<double>(classes, 1.0)}; }
    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t c) const { return weights[c]; }
};

/// Balanced weighting w_c = total / (K * count_c).
ClassWeights class_weights_from_counts(std::span<const std::size_t> counts);

template <typename T>
struct CceResult {
    double loss = 0.0;
    BasicTensor<T> grad_logits;  // d(loss)/d(logits) through the softmax
};

/// Mean class-weighted categorical cross-entropy over the batch:
///   loss = -(1/N) sum_i w[y_i] log(max(p[i, y_i], 1e-12))
/// with the fused softmax gradient w[y_i] (p_i - onehot_i) / N.
template <typename T>
CceResult<T> weighted_cce(const BasicTensor<T>& probs, const BasicTensor<T>& onehot, const ClassWeights& weights);

template <typename T>
BasicTensor<T> one_hot(std::span<const std::size_t> labels, std::size_t classes);

/// weighted_cce + the model's L2 penalty.
template <typename T>
double total_loss(const Model<T>& model, const BasicTensor<T>& probs, const BasicTensor<T>& onehot,
                  const ClassWeights& weights);

/// Row = true class, column = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const noexcept { return k_; }
    void add(std::size_t truth, std::size_t predicted, std::size_t count = 1);
    std::size_t operator()(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * k_ + predicted); }
    std::size_t total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision, recall and F1 per class; 0/0 evaluates to 0 in each.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);

/// Index of the largest entry of each row; ties go to the lower index.
template <typename T>
std::vector<std::size_t> argmax_rows(const BasicTensor<T>& probs);

struct EvalReport {
    std::vector<std::string> class_names;
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    double loss = 0.0;
    ConfusionMatrix confusion{2};

    /// Flat `key = value` text block.
    std::string to_text(bool reference_footer = true) const;
};

EvalReport make_report(const ConfusionMatrix& cm, double loss, std::vector<std::string> class_names);

/// Reference validation macro F1 values for the three network versions.
/// Documentation only; the dataset behind them is not public.
namespace reference {
inline constexpr double kDetectionWithAugmentation = 0.8681;
inline constexpr double kDetectionWithoutAugmentation = 0.8876;
inline constexpr double kSeverity = 0.7277;
inline constexpr double kDetectionBaseline = 0.74;
inline constexpr double kSeverityBaseline = 0.38;
}  // namespace reference

}  // namespace mia
