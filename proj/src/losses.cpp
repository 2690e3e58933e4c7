#include "mia/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mia/format.hpp"

namespace mia {

ClassWeights class_weights_from_counts(std::span<const std::size_t> counts) {
    if (counts.empty()) throw std::invalid_argument("class weights need at least one class");
    double total = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) throw std::invalid_argument("class weights: every class needs at least one sample");
        total += static_cast<double>(c);
    }
    ClassWeights w;
    const double k = static_cast<double>(counts.size());
    for (std::size_t c : counts) w.weights.push_back(total / (k * static_cast<double>(c)));
    return w;
}

template <typename T>
BasicTensor<T> one_hot(std::span<const std::size_t> labels, std::size_t classes) {
    BasicTensor<T> t({labels.size(), classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw std::invalid_argument("label out of range");
        t[i * classes + labels[i]] = T(1);
    }
    return t;
}

template <typename T>
CceResult<T> weighted_cce(const BasicTensor<T>& probs, const BasicTensor<T>& onehot, const ClassWeights& weights) {
    if (probs.rank() != 2 || probs.shape() != onehot.shape()) {
        throw std::invalid_argument("weighted_cce: probs and labels must both be (N, K)");
    }
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    if (weights.size() != k) throw std::invalid_argument("weighted_cce: need one weight per class");
    CceResult<T> out{0.0, BasicTensor<T>(probs.shape())};
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t label = k;
        for (std::size_t j = 0; j < k; ++j) {
            const T v = onehot[i * k + j];
            if (v == T(1)) {
                if (label != k) throw std::invalid_argument("weighted_cce: label row has more than one hot entry");
                label = j;
            } else if (v != T(0)) {
                throw std::invalid_argument("weighted_cce: labels must be one-hot");
            }
        }
        if (label == k) throw std::invalid_argument("weighted_cce: label row has no hot entry");
        const double w = weights[label];
        const double p = std::max(static_cast<double>(probs[i * k + label]), 1e-12);
        loss -= w * std::log(p);
        for (std::size_t j = 0; j < k; ++j) {
            out.grad_logits[i * k + j] =
                static_cast<T>(w * (static_cast<double>(probs[i * k + j]) - (j == label ? 1.0 : 0.0)) /
                               static_cast<double>(n));
        }
    }
    out.loss = loss / static_cast<double>(n);
    return out;
}

template <typename T>
double total_loss(const Model<T>& model, const BasicTensor<T>& probs, const BasicTensor<T>& onehot,
                  const ClassWeights& weights) {
    return weighted_cce(probs, onehot, weights).loss + model.l2_penalty();
}

template <typename T>
std::vector<std::size_t> argmax_rows(const BasicTensor<T>& probs) {
    if (probs.rank() != 2) throw std::invalid_argument("argmax_rows: expected (N, K)");
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = probs.raw() + i * k;
        out[i] = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    }
    return out;
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t count) {
    if (truth >= k_ || predicted >= k_) throw std::out_of_range("confusion matrix class index out of range");
    counts_[truth * k_ + predicted] += count;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw std::invalid_argument("cannot merge confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes();
    std::vector<ClassMetrics> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = cm(c, c), predicted = 0, actual = 0;
        for (std::size_t j = 0; j < k; ++j) {
            predicted += cm(j, c);
            actual += cm(c, j);
        }
        ClassMetrics& m = out[c];
        m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        m.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        const double pr = m.precision + m.recall;
        m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("macro_f1 of an empty confusion matrix");
    double s = 0.0;
    for (const auto& m : per_class_metrics(cm)) s += m.f1;
    return s / static_cast<double>(cm.classes());
}

EvalReport make_report(const ConfusionMatrix& cm, double loss, std::vector<std::string> class_names) {
    if (class_names.size() != cm.classes()) throw std::invalid_argument("need one name per class");
    EvalReport r;
    r.class_names = std::move(class_names);
    r.per_class = per_class_metrics(cm);
    r.macro_f1 = macro_f1(cm);
    r.loss = loss;
    r.confusion = cm;
    return r;
}

std::string EvalReport::to_text(bool reference_footer) const {
    std::ostringstream os;
    os << "samples = " << confusion.total() << '\n';
    os << "loss = " << format_double(loss) << '\n';
    os << "macro_f1 = " << format_fixed(macro_f1, 4) << '\n';
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const std::string& n = class_names[c];
        os << "precision." << n << " = " << format_fixed(per_class[c].precision, 4) << '\n';
        os << "recall." << n << " = " << format_fixed(per_class[c].recall, 4) << '\n';
        os << "f1." << n << " = " << format_fixed(per_class[c].f1, 4) << '\n';
    }
    for (std::size_t t = 0; t < confusion.classes(); ++t) {
        os << "confusion." << class_names[t] << " =";
        for (std::size_t p = 0; p < confusion.classes(); ++p) os << ' ' << confusion(t, p);
        os << '\n';
    }
    if (reference_footer) {
        os << "# reference macro F1 (not reproducible here)\n";
        os << "reference.detection_with_augmentation = " << format_fixed(reference::kDetectionWithAugmentation, 4) << '\n';
        os << "reference.detection_without_augmentation = "
           << format_fixed(reference::kDetectionWithoutAugmentation, 4) << '\n';
        os << "reference.severity = " << format_fixed(reference::kSeverity, 4) << '\n';
    }
    return os.str();
}

#define MIA_INSTANTIATE(T)                                                                                  \
    template BasicTensor<T> one_hot<T>(std::span<const std::size_t>, std::size_t);                          \
    template CceResult<T> weighted_cce(const BasicTensor<T>&, const BasicTensor<T>&, const ClassWeights&);  \
    template double total_loss(const Model<T>&, const BasicTensor<T>&, const BasicTensor<T>&,               \
                               const ClassWeights&);                                                        \
    template std::vector<std::size_t> argmax_rows(const BasicTensor<T>&);

MIA_INSTANTIATE(float)
MIA_INSTANTIATE(double)
#undef MIA_INSTANTIATE

}  // namespace mia
