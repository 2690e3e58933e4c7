#include "mia/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <limits>

#include "binio.hpp"

namespace mia {

namespace binio {

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace binio

namespace {

constexpr std::string_view kMagic = "MIAC";

// Float meta values are stored as f32; reading them back through the
// shortest decimal representation recovers literals such as 0.05 exactly.
double float_to_decimal(float f) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), f);
    double d = 0.0;
    std::from_chars(buf, end, d);
    return d;
}

const Tensor& require(const Checkpoint& ckpt, std::string_view name) {
    const Tensor* t = ckpt.find(name);
    if (!t) throw FormatError(FormatError::Kind::invalid, "checkpoint is missing tensor '" + std::string(name) + "'");
    return *t;
}

}  // namespace

const Tensor* Checkpoint::find(std::string_view name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t.value;
    }
    return nullptr;
}

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
    binio::Writer w;
    w.bytes(kMagic);
    w.put<std::uint32_t>(Checkpoint::kVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ckpt.variant));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
        if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw std::invalid_argument("checkpoint tensor name too long: " + t.name.substr(0, 32));
        }
        w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
        w.bytes(t.name);
        if (t.value.rank() > std::numeric_limits<std::uint8_t>::max()) throw std::invalid_argument("rank too large");
        w.put<std::uint8_t>(static_cast<std::uint8_t>(t.value.rank()));
        for (std::size_t e : t.value.shape()) {
            if (e > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("extent too large");
            w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
        }
        w.floats(t.value.raw(), t.value.size());
    }
    return std::move(w.buffer());
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
    binio::Reader r(bytes, "checkpoint");
    if (!r.has(4) || r.bytes(4) != kMagic) {
        throw FormatError(FormatError::Kind::bad_magic, "not a MIAC checkpoint file");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != Checkpoint::kVersion) {
        throw FormatError(FormatError::Kind::version_mismatch,
                          "unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto tag = r.get<std::uint8_t>();
    if (tag > 1) throw FormatError(FormatError::Kind::invalid, "unknown model variant tag " + std::to_string(tag));
    ckpt.variant = static_cast<Variant>(tag);
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto len = r.get<std::uint16_t>();
        t.name = std::string(r.bytes(len));
        const auto rank = r.get<std::uint8_t>();
        if (rank == 0) throw FormatError(FormatError::Kind::invalid, "tensor '" + t.name + "' has rank 0");
        Shape shape(rank);
        std::size_t numel = 1;
        for (auto& e : shape) {
            e = r.get<std::uint32_t>();
            if (e == 0) throw FormatError(FormatError::Kind::invalid, "tensor '" + t.name + "' has a zero extent");
            numel *= e;
        }
        if (numel > r.remaining() / sizeof(float)) {
            throw FormatError(FormatError::Kind::truncated, "checkpoint: truncated file");
        }
        std::vector<float> data(numel);
        r.floats(data.data(), numel);
        t.value = Tensor(std::move(shape), std::move(data));
        ckpt.tensors.push_back(std::move(t));
    }
    if (r.remaining() != 0) throw FormatError(FormatError::Kind::invalid, "checkpoint has trailing bytes");
    return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(binio::read_file(path)); }

Checkpoint checkpoint_from_model(const Model<float>& model) {
    const ModelSpec& s = model.spec();
    Checkpoint ckpt;
    ckpt.variant = s.variant;
    const auto f = [](double v) { return static_cast<float>(v); };
    ckpt.tensors.push_back({"meta.input_dims", Tensor({4}, {f(s.input_channels), f(s.input_dims.d), f(s.input_dims.h),
                                                             f(s.input_dims.w)})});
    std::vector<float> l2, flags;
    for (const auto& b : s.conv_blocks) {
        l2.push_back(f(b.l2_weight));
        flags.push_back(b.batchnorm ? 1.0f : 0.0f);
        flags.push_back(b.dropout ? 1.0f : 0.0f);
    }
    if (!l2.empty()) {
        const std::size_t n = l2.size();
        ckpt.tensors.push_back({"meta.conv_l2", Tensor({n}, std::move(l2))});
        ckpt.tensors.push_back({"meta.conv_flags", Tensor({n, 2}, std::move(flags))});
    }
    ckpt.tensors.push_back({"meta.hyper", Tensor({4}, {f(s.l2_bias), f(s.dropout_rate), f(s.batchnorm.momentum),
                                                        f(s.batchnorm.epsilon)})});
    for (const Param<float>* p : model.parameters()) ckpt.tensors.push_back({p->name, p->value});
    return ckpt;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
    ModelSpec s;
    s.variant = ckpt.variant;
    const Tensor& dims = require(ckpt, "meta.input_dims");
    if (dims.size() != 4) throw FormatError(FormatError::Kind::invalid, "meta.input_dims must hold 4 values");
    s.input_channels = static_cast<std::size_t>(dims[0]);
    s.input_dims = {static_cast<std::size_t>(dims[1]), static_cast<std::size_t>(dims[2]),
                    static_cast<std::size_t>(dims[3])};
    const Tensor& hyper = require(ckpt, "meta.hyper");
    if (hyper.size() != 4) throw FormatError(FormatError::Kind::invalid, "meta.hyper must hold 4 values");
    s.l2_bias = float_to_decimal(hyper[0]);
    s.dropout_rate = float_to_decimal(hyper[1]);
    s.batchnorm.momentum = float_to_decimal(hyper[2]);
    s.batchnorm.epsilon = float_to_decimal(hyper[3]);

    const Tensor* l2 = ckpt.find("meta.conv_l2");
    const Tensor* flags = ckpt.find("meta.conv_flags");
    const std::size_t blocks = l2 ? l2->size() : 0;
    if (blocks && (!flags || flags->size() != 2 * blocks)) {
        throw FormatError(FormatError::Kind::invalid, "meta.conv_flags does not match meta.conv_l2");
    }
    for (std::size_t i = 0; i < blocks; ++i) {
        const Tensor& w = require(ckpt, "block" + std::to_string(i + 1) + ".conv.weight");
        if (w.rank() != 5) throw FormatError(FormatError::Kind::invalid, "conv weight must be rank 5");
        s.conv_blocks.push_back({w.dim(0), float_to_decimal((*l2)[i]), (*flags)[2 * i] != 0.0f,
                                 (*flags)[2 * i + 1] != 0.0f});
    }
    for (std::size_t j = 1;; ++j) {
        const Tensor* w = ckpt.find("fc" + std::to_string(j) + ".weight");
        if (!w) break;
        if (w->rank() != 2) throw FormatError(FormatError::Kind::invalid, "dense weight must be rank 2");
        s.fc_units.push_back(w->dim(1));
    }
    const Tensor& out = require(ckpt, "out.weight");
    if (out.rank() != 2) throw FormatError(FormatError::Kind::invalid, "output weight must be rank 2");
    s.output_classes = out.dim(1);

    Model<float> model(std::move(s));
    for (Param<float>* p : model.parameters()) {
        const Tensor& t = require(ckpt, p->name);
        if (t.shape() != p->value.shape()) {
            throw FormatError(FormatError::Kind::invalid, "tensor '" + p->name + "' has shape " + shape_str(t.shape()) +
                                                              ", model expects " + shape_str(p->value.shape()));
        }
        p->value = t;
    }
    return model;
}

}  // namespace mia
