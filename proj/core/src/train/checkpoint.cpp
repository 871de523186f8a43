#include "scs/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace scs::train {

namespace {

class Writer {
  public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <class T>
    void le(T v) {
        static_assert(std::is_integral_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        le(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

  private:
    std::vector<std::uint8_t> out_;
};

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (n > in_.size() - pos_) {
            throw CheckpointError("checkpoint truncated at byte offset " + std::to_string(pos_));
        }
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <class T>
    T le() {
        auto b = bytes(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
        return v;
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string str(std::size_t limit) {
        const auto n = le<std::uint32_t>();
        if (n > limit) throw CheckpointError("checkpoint string length " + std::to_string(n) + " too large");
        auto b = bytes(n);
        return std::string(b.begin(), b.end());
    }
    bool done() const { return pos_ == in_.size(); }
    std::size_t pos() const { return pos_; }

  private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::string config_text(const zoo::LayerVariantConfig& cfg) {
    std::ostringstream os;
    for (const auto& [k, v] : cfg.to_kv()) os << k << '=' << v << '\n';
    return os.str();
}

zoo::LayerVariantConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("bad config line in checkpoint: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    try {
        return zoo::LayerVariantConfig::from_kv(kv);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint config: ") + e.what());
    }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const zoo::Model& model) {
    Writer w;
    w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.le(kCheckpointVersion);
    w.le(model.descriptor().hash());
    w.str(config_text(model.config()));
    const auto& params = model.parameters();
    const auto& buffers = model.buffers();
    w.le(static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const auto& p : params) {
        w.str(p.name);
        w.le(std::uint8_t{0});
        w.le(static_cast<std::uint32_t>(p.tensor.ndim()));
        for (std::size_t d : p.tensor.shape()) w.le(static_cast<std::uint64_t>(d));
        for (double v : p.tensor.data()) w.f64(v);
    }
    for (const auto& b : buffers) {
        w.str(b.name);
        w.le(std::uint8_t{1});
        w.le(std::uint32_t{1});
        w.le(static_cast<std::uint64_t>(b.values->size()));
        for (double v : *b.values) w.f64(v);
    }
    return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto magic = r.bytes(sizeof(kCheckpointMagic));
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw CheckpointError("bad checkpoint magic");
    }
    const auto version = r.le<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.descriptor_hash = r.le<std::uint64_t>();
    ck.config = parse_config_text(r.str(1 << 16));
    const auto count = r.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointBlob blob;
        blob.name = r.str(4096);
        const auto kind = r.le<std::uint8_t>();
        if (kind > 1) throw CheckpointError("bad blob kind for " + blob.name);
        blob.is_buffer = kind == 1;
        const auto ndim = r.le<std::uint32_t>();
        if (ndim > 8) throw CheckpointError("bad rank for " + blob.name);
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            const auto dim = r.le<std::uint64_t>();
            if (dim > (std::uint64_t{1} << 32)) throw CheckpointError("bad dim for " + blob.name);
            blob.shape.push_back(static_cast<std::size_t>(dim));
            n *= static_cast<std::size_t>(dim);
        }
        if (n * 8 > bytes.size()) throw CheckpointError("blob " + blob.name + " larger than file");
        blob.values.resize(n);
        for (double& v : blob.values) v = r.f64();
        ck.blobs.push_back(std::move(blob));
    }
    if (!r.done()) throw CheckpointError("trailing bytes after checkpoint at offset " + std::to_string(r.pos()));
    return ck;
}

void save_checkpoint(const zoo::Model& model, const std::filesystem::path& path) {
    auto bytes = encode_checkpoint(model);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw CheckpointError("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
    return decode_checkpoint(bytes);
}

void restore_into(zoo::Model& model, const Checkpoint& ckpt) {
    if (model.descriptor().hash() != ckpt.descriptor_hash) {
        throw CheckpointError("checkpoint descriptor hash does not match the rebuilt model");
    }
    auto& params = model.parameters();
    auto& buffers = model.buffers();
    if (ckpt.blobs.size() != params.size() + buffers.size()) {
        throw CheckpointError("checkpoint blob count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& blob = ckpt.blobs[i];
        auto& p = params[i];
        if (blob.is_buffer || blob.name != p.name || blob.shape != p.tensor.shape()) {
            throw CheckpointError("checkpoint blob '" + blob.name + "' does not match parameter '" + p.name + "'");
        }
        auto dst = p.tensor.mutable_data();
        std::copy(blob.values.begin(), blob.values.end(), dst.begin());
    }
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        const auto& blob = ckpt.blobs[params.size() + i];
        auto& b = buffers[i];
        if (!blob.is_buffer || blob.name != b.name || blob.values.size() != b.values->size()) {
            throw CheckpointError("checkpoint blob '" + blob.name + "' does not match buffer '" + b.name + "'");
        }
        *b.values = blob.values;
    }
}

std::unique_ptr<zoo::Model> load_model(const std::filesystem::path& path) {
    Checkpoint ck = read_checkpoint(path);
    auto model = zoo::build_model(ck.config);
    restore_into(*model, ck);
    return model;
}

}  // namespace scs::train
