#ifndef BOOLKIT_CHECKPOINT_HPP
#define BOOLKIT_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "boolkit/model.hpp"

// Checkpoint container: a JSON manifest plus one raw blob file per tensor
// group. Dense tensors are little-endian IEEE-754 float32; Boolean weights
// are the BitMatrix word layout (row-major, 64-bit words, LSB-first, zero
// padding) as little-endian u64 words. Every tensor carries a 64-bit FNV-1a
// checksum over its blob slice, and a save/load/save cycle is byte-exact.

namespace boolkit {

namespace ckpt {

using json = nlohmann::ordered_json;

inline constexpr char kManifestName[] = "manifest.json";
inline constexpr char kDenseBlobName[] = "dense.bin";
inline constexpr char kBoolBlobName[] = "bool.bin";

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", (unsigned long long)v);
    return buf;
}

struct Blob {
    std::vector<std::uint8_t> bytes;

    std::size_t append_f32(const std::vector<double>& values) {
        const std::size_t offset = bytes.size();
        for (double v : values) {
            const float f = float(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            bytes.push_back(std::uint8_t(u & 0xFF));
            bytes.push_back(std::uint8_t((u >> 8) & 0xFF));
            bytes.push_back(std::uint8_t((u >> 16) & 0xFF));
            bytes.push_back(std::uint8_t((u >> 24) & 0xFF));
        }
        return offset;
    }

    std::size_t append_bits(const BitMatrix& m) {
        const std::size_t offset = bytes.size();
        for (std::uint64_t w : m.words)
            for (int s = 0; s < 64; s += 8) bytes.push_back(std::uint8_t((w >> s) & 0xFF));
        return offset;
    }
};

struct BlobReader {
    const std::vector<std::uint8_t>* bytes = nullptr;

    std::vector<double> read_f32(std::size_t offset, std::size_t count) const {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t u = 0;
            for (int s = 0; s < 4; ++s)
                u |= std::uint32_t((*bytes)[offset + 4 * i + s]) << (8 * s);
            float f;
            std::memcpy(&f, &u, 4);
            out[i] = double(f);
        }
        return out;
    }

    BitMatrix read_bits(std::size_t offset, std::size_t rows, std::size_t cols) const {
        BitMatrix m(rows, cols);
        for (std::size_t w = 0; w < m.words.size(); ++w) {
            std::uint64_t v = 0;
            for (int s = 0; s < 8; ++s)
                v |= std::uint64_t((*bytes)[offset + 8 * w + s]) << (8 * s);
            m.words[w] = v;
        }
        return m;
    }
};

class Writer {
  public:
    void add_f32(const std::string& name, const std::vector<double>& values,
                 std::vector<std::size_t> shape) {
        const std::size_t offset = dense_.append_f32(values);
        const std::size_t nbytes = values.size() * 4;
        push_entry(name, "dense", "f32", std::move(shape), offset, nbytes,
                   fnv1a64(dense_.bytes.data() + offset, nbytes));
    }

    void add_f32(const std::string& name, const DenseMatrix& m) {
        add_f32(name, m.data, {m.rows, m.cols});
    }

    void add_bits(const std::string& name, const BitMatrix& m) {
        const std::size_t offset = bool_.append_bits(m);
        const std::size_t nbytes = m.payload_bytes();
        push_entry(name, "bool", "u1", {m.rows, m.cols}, offset, nbytes,
                   fnv1a64(bool_.bytes.data() + offset, nbytes));
    }

    void write(const std::filesystem::path& dir, json header) const {
        std::filesystem::create_directories(dir);
        header["groups"] = json::object();
        header["groups"]["dense"] = kDenseBlobName;
        if (!bool_.bytes.empty()) header["groups"]["bool"] = kBoolBlobName;
        header["tensors"] = tensors_;

        write_file(dir / kDenseBlobName, dense_.bytes);
        if (!bool_.bytes.empty()) write_file(dir / kBoolBlobName, bool_.bytes);
        std::ofstream out(dir / kManifestName, std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write manifest");
        out << header.dump(2) << "\n";
    }

  private:
    void push_entry(const std::string& name, const char* group, const char* dtype,
                    std::vector<std::size_t> shape, std::size_t offset, std::size_t nbytes,
                    std::uint64_t checksum) {
        json t;
        t["name"] = name;
        t["group"] = group;
        t["dtype"] = dtype;
        t["shape"] = shape;
        t["offset"] = offset;
        t["nbytes"] = nbytes;
        t["checksum"] = hex64(checksum);
        tensors_.push_back(std::move(t));
    }

    static void write_file(const std::filesystem::path& p,
                           const std::vector<std::uint8_t>& bytes) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + p.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  std::streamsize(bytes.size()));
    }

    Blob dense_, bool_;
    json tensors_ = json::array();
};

struct TensorInfo {
    std::string group, dtype;
    std::vector<std::size_t> shape;
    std::size_t offset = 0, nbytes = 0;
    std::uint64_t checksum = 0;
};

class Reader {
  public:
    explicit Reader(const std::filesystem::path& dir) : dir_(dir) {
        std::ifstream in(dir / kManifestName, std::ios::binary);
        if (!in) throw std::runtime_error("checkpoint: missing manifest in " + dir.string());
        in >> manifest_;

        if (manifest_.contains("groups")) {
            for (const auto& [group, file] : manifest_["groups"].items())
                blobs_[group] = read_file(dir / file.get<std::string>());
        }
        for (const auto& t : manifest_["tensors"]) {
            TensorInfo info;
            info.group = t["group"].get<std::string>();
            info.dtype = t["dtype"].get<std::string>();
            info.shape = t["shape"].get<std::vector<std::size_t>>();
            info.offset = t["offset"].get<std::size_t>();
            info.nbytes = t["nbytes"].get<std::size_t>();
            info.checksum = std::stoull(t["checksum"].get<std::string>(), nullptr, 16);
            verify(info, t["name"].get<std::string>());
            tensors_[t["name"].get<std::string>()] = std::move(info);
        }
    }

    const json& manifest() const { return manifest_; }

    const TensorInfo& info(const std::string& name) const {
        const auto it = tensors_.find(name);
        if (it == tensors_.end())
            throw std::runtime_error("checkpoint: missing tensor " + name);
        return it->second;
    }

    std::vector<double> f32(const std::string& name) const {
        const TensorInfo& t = info(name);
        if (t.dtype != "f32") throw std::runtime_error("checkpoint: dtype mismatch on " + name);
        BlobReader r{&blob(t.group)};
        return r.read_f32(t.offset, t.nbytes / 4);
    }

    DenseMatrix f32_matrix(const std::string& name) const {
        const TensorInfo& t = info(name);
        DenseMatrix m(t.shape.at(0), t.shape.at(1));
        m.data = f32(name);
        if (m.data.size() != m.rows * m.cols)
            throw std::runtime_error("checkpoint: shape mismatch on " + name);
        return m;
    }

    BitMatrix bits(const std::string& name) const {
        const TensorInfo& t = info(name);
        if (t.dtype != "u1") throw std::runtime_error("checkpoint: dtype mismatch on " + name);
        BlobReader r{&blob(t.group)};
        BitMatrix m = r.read_bits(t.offset, t.shape.at(0), t.shape.at(1));
        if (m.payload_bytes() != t.nbytes)
            throw std::runtime_error("checkpoint: size mismatch on " + name);
        return m;
    }

  private:
    const std::vector<std::uint8_t>& blob(const std::string& group) const {
        const auto it = blobs_.find(group);
        if (it == blobs_.end()) throw std::runtime_error("checkpoint: missing group " + group);
        return it->second;
    }

    void verify(const TensorInfo& t, const std::string& name) const {
        const auto& b = blob(t.group);
        if (t.offset + t.nbytes > b.size())
            throw std::runtime_error("checkpoint: blob overrun on " + name);
        if (fnv1a64(b.data() + t.offset, t.nbytes) != t.checksum)
            throw std::runtime_error("checkpoint: checksum mismatch on " + name);
    }

    static std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw std::runtime_error("checkpoint: cannot read " + p.string());
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::filesystem::path dir_;
    json manifest_;
    std::map<std::string, TensorInfo> tensors_;
    std::map<std::string, std::vector<std::uint8_t>> blobs_;
};

}  // namespace ckpt

// ---------------------------------------------------------------------------
// Model <-> checkpoint
// ---------------------------------------------------------------------------

namespace detail {

inline void save_slot(ckpt::Writer& w, const LinearSlot& s, ckpt::json& kernel_counts,
                      ckpt::json& trainable) {
    if (s.is_boolean()) {
        const BooleanLinear& bl = *s.boolean;
        kernel_counts[s.name] = bl.kernel_count();
        trainable[s.name] = std::vector<std::size_t>(bl.trainable.begin(), bl.trainable.end());
        for (std::size_t k = 0; k < bl.kernel_count(); ++k) {
            const std::string base = s.name + ".k" + std::to_string(k);
            w.add_bits(base + ".bits", bl.kernels[k].bits);
            w.add_f32(base + ".s_out", bl.kernels[k].s_out, {bl.kernels[k].s_out.size()});
            w.add_f32(base + ".s_in", bl.kernels[k].s_in, {bl.kernels[k].s_in.size()});
        }
        if (!bl.bias.empty()) w.add_f32(s.name + ".b", bl.bias, {bl.bias.size()});
    } else {
        w.add_f32(s.name + ".W", s.dense.W);
        if (!s.dense.b.empty()) w.add_f32(s.name + ".b", s.dense.b, {s.dense.b.size()});
    }
}

inline void load_slot(const ckpt::Reader& r, LinearSlot& s, std::size_t m_rows,
                      std::size_t n_cols) {
    const ckpt::json& manifest = r.manifest();
    const bool is_bool = manifest["kernel_counts"].contains(s.name);
    if (is_bool) {
        const std::size_t K = manifest["kernel_counts"][s.name].get<std::size_t>();
        std::vector<SvidKernel> kernels;
        for (std::size_t k = 0; k < K; ++k) {
            const std::string base = s.name + ".k" + std::to_string(k);
            SvidKernel ker;
            ker.bits = r.bits(base + ".bits");
            ker.s_out = r.f32(base + ".s_out");
            ker.s_in = r.f32(base + ".s_in");
            detail::check(ker.bits.rows == m_rows && ker.bits.cols == n_cols,
                          "checkpoint: kernel shape mismatch");
            kernels.push_back(std::move(ker));
        }
        const auto idx =
            manifest["trainable"][s.name].get<std::vector<std::size_t>>();
        s.boolean = BooleanLinear::from_kernels(
            std::move(kernels), std::set<std::size_t>(idx.begin(), idx.end()));
        s.dense = DenseLinear{};
        try {
            s.boolean->bias = r.f32(s.name + ".b");
        } catch (const std::runtime_error&) {
            s.boolean->bias.clear();
        }
    } else {
        s.dense.W = r.f32_matrix(s.name + ".W");
        detail::check(s.dense.W.rows == m_rows && s.dense.W.cols == n_cols,
                      "checkpoint: weight shape mismatch");
        try {
            s.dense.b = r.f32(s.name + ".b");
        } catch (const std::runtime_error&) {
            s.dense.b.clear();
        }
        s.dense.zero_grads();
    }
}

}  // namespace detail

inline void save_checkpoint(const Transformer& m, const std::filesystem::path& dir) {
    ckpt::Writer w;
    ckpt::json header;
    header["format_version"] = 1;
    header["kind"] = "transformer";
    header["model"] = {{"vocab", m.cfg.vocab},
                       {"width", m.cfg.width},
                       {"blocks", m.cfg.blocks},
                       {"heads", m.cfg.heads},
                       {"context", m.cfg.context}};
    ckpt::json kernel_counts = ckpt::json::object();
    ckpt::json trainable = ckpt::json::object();

    w.add_f32("tok_emb", m.tok_emb);
    w.add_f32("pos_emb", m.pos_emb);
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const TransformerBlock& blk = m.blocks[b];
        const std::string p = "blk" + std::to_string(b) + ".";
        w.add_f32(p + "ln1.gamma", blk.ln1.gamma, {blk.ln1.gamma.size()});
        w.add_f32(p + "ln1.beta", blk.ln1.beta, {blk.ln1.beta.size()});
        for (const LinearSlot* s : blk.slots())
            detail::save_slot(w, *s, kernel_counts, trainable);
        w.add_f32(p + "ln2.gamma", blk.ln2.gamma, {blk.ln2.gamma.size()});
        w.add_f32(p + "ln2.beta", blk.ln2.beta, {blk.ln2.beta.size()});
    }
    w.add_f32("lnf.gamma", m.ln_f.gamma, {m.ln_f.gamma.size()});
    w.add_f32("lnf.beta", m.ln_f.beta, {m.ln_f.beta.size()});
    detail::save_slot(w, m.head, kernel_counts, trainable);

    header["kernel_counts"] = kernel_counts;
    header["trainable"] = trainable;
    w.write(dir, std::move(header));
}

inline Transformer load_transformer(const std::filesystem::path& dir) {
    ckpt::Reader r(dir);
    const ckpt::json& manifest = r.manifest();
    if (manifest["kind"].get<std::string>() != "transformer")
        throw std::runtime_error("checkpoint: not a transformer checkpoint");

    TransformerConfig cfg;
    cfg.vocab = manifest["model"]["vocab"].get<std::size_t>();
    cfg.width = manifest["model"]["width"].get<std::size_t>();
    cfg.blocks = manifest["model"]["blocks"].get<std::size_t>();
    cfg.heads = manifest["model"]["heads"].get<std::size_t>();
    cfg.context = manifest["model"]["context"].get<std::size_t>();

    Transformer m = build_transformer(cfg, 0);
    m.tok_emb = r.f32_matrix("tok_emb");
    m.pos_emb = r.f32_matrix("pos_emb");
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        TransformerBlock& blk = m.blocks[b];
        const std::string p = "blk" + std::to_string(b) + ".";
        blk.ln1.gamma = r.f32(p + "ln1.gamma");
        blk.ln1.beta = r.f32(p + "ln1.beta");
        blk.ln2.gamma = r.f32(p + "ln2.gamma");
        blk.ln2.beta = r.f32(p + "ln2.beta");
        detail::load_slot(r, blk.wq, cfg.width, cfg.width);
        detail::load_slot(r, blk.wk, cfg.width, cfg.width);
        detail::load_slot(r, blk.wv, cfg.width, cfg.width);
        detail::load_slot(r, blk.wo, cfg.width, cfg.width);
        detail::load_slot(r, blk.fc1, cfg.hidden(), cfg.width);
        detail::load_slot(r, blk.fc2, cfg.width, cfg.hidden());
    }
    m.ln_f.gamma = r.f32("lnf.gamma");
    m.ln_f.beta = r.f32("lnf.beta");
    detail::load_slot(r, m.head, cfg.vocab, cfg.width);
    m.zero_grads();
    return m;
}

inline void save_checkpoint(const MlpModel& m, const std::filesystem::path& dir) {
    ckpt::Writer w;
    ckpt::json header;
    header["format_version"] = 1;
    header["kind"] = "mlp";
    header["model"] = {{"sizes", m.sizes}};
    ckpt::json kernel_counts = ckpt::json::object();
    ckpt::json trainable = ckpt::json::object();
    for (const LinearSlot& s : m.layers) detail::save_slot(w, s, kernel_counts, trainable);
    header["kernel_counts"] = kernel_counts;
    header["trainable"] = trainable;
    w.write(dir, std::move(header));
}

inline MlpModel load_mlp(const std::filesystem::path& dir) {
    ckpt::Reader r(dir);
    const ckpt::json& manifest = r.manifest();
    if (manifest["kind"].get<std::string>() != "mlp")
        throw std::runtime_error("checkpoint: not an mlp checkpoint");
    MlpModel m;
    m.sizes = manifest["model"]["sizes"].get<std::vector<std::size_t>>();
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        LinearSlot slot;
        slot.name = "fc" + std::to_string(l);
        detail::load_slot(r, slot, m.sizes[l + 1], m.sizes[l]);
        m.layers.push_back(std::move(slot));
    }
    return m;
}

/// Kind stored in a checkpoint directory without loading the tensors.
inline std::string checkpoint_kind(const std::filesystem::path& dir) {
    std::ifstream in(dir / ckpt::kManifestName, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: missing manifest in " + dir.string());
    ckpt::json j;
    in >> j;
    return j["kind"].get<std::string>();
}

}  // namespace boolkit

#endif
