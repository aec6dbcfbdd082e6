#include "mimodet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "mimodet/error.hpp"

namespace mimodet {

namespace {

using nlohmann::json;

constexpr char kMagic[12] = {'M', 'I', 'M', 'O', 'D', 'E', 'T', 'C', 'K', 'P', 'T', '\0'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <typename T>
    void pod(const T& v) { bytes(&v, sizeof(T)); }
    void doubles(const Vec& v) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
        bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    }
    const std::vector<char>& data() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& buf, std::size_t end) : buf_(buf), end_(end) {}
    void bytes(void* p, std::size_t n) {
        if (n > end_ - pos_) throw IntegrityError("checkpoint: file is truncated");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T pod() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    Vec doubles() {
        const auto n = pod<std::uint64_t>();
        if (n > (end_ - pos_) / sizeof(double)) throw IntegrityError("checkpoint: file is truncated");
        Vec v(static_cast<Eigen::Index>(n));
        bytes(v.data(), sizeof(double) * n);
        return v;
    }
    std::size_t remaining() const { return end_ - pos_; }

private:
    const std::vector<char>& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

json channel_json(const ChannelModel& m) {
    json j = {{"regime", regime_name(m.regime)},
              {"distribution", distribution_name(m.distribution)},
              {"K", m.K},
              {"N", m.N},
              {"complex", m.is_complex},
              {"fixed_seed", m.fixed_seed}};
    if (m.distribution == ChannelDistribution::AlphaToeplitz) j["alpha"] = m.alpha;
    return j;
}

ChannelModel channel_from_json(const json& j) {
    ChannelModel m;
    m.regime = j.at("regime").get<std::string>() == "FC" ? Regime::Fixed : Regime::Varying;
    m.distribution = j.at("distribution").get<std::string>() == "alpha_toeplitz" ? ChannelDistribution::AlphaToeplitz
                                                                                 : ChannelDistribution::IidGaussian;
    m.K = j.at("K").get<int>();
    m.N = j.at("N").get<int>();
    m.is_complex = j.at("complex").get<bool>();
    m.fixed_seed = j.at("fixed_seed").get<std::uint64_t>();
    if (j.contains("alpha")) m.alpha = j.at("alpha").get<double>();
    return m;
}

json meta_json(const Checkpoint& ck) {
    json j = {{"architecture", architecture_name(architecture_of(ck.params))},
              {"layers", layers_of(ck.params)},
              {"constellation", ck.meta.constellation},
              {"channel", channel_json(ck.meta.channel)},
              {"iterations", ck.meta.iterations},
              {"config_hash", ck.meta.config_hash},
              {"seed", ck.meta.seed},
              {"adam_step", ck.adam ? ck.adam->step : 0}};
    if (ck.adam) {
        j["adam"] = {{"lr", ck.adam->hyper.lr},
                     {"beta1", ck.adam->hyper.beta1},
                     {"beta2", ck.adam->hyper.beta2},
                     {"epsilon", ck.adam->hyper.epsilon}};
    }
    if (const auto* fc = std::get_if<FullyConParams>(&ck.params)) {
        const auto& s = fc->shape();
        j["shape"] = {{"input_dim", s.input_dim}, {"hidden", s.hidden}, {"output_dim", s.output_dim}};
    } else {
        const auto& s = std::get<DetNetParams>(ck.params).shape();
        j["shape"] = {{"x_dim", s.x_dim},
                      {"y_dim", s.y_dim},
                      {"onehot", s.onehot},
                      {"z_width", s.z_width},
                      {"v_width", s.v_width},
                      {"eta", s.eta},
                      {"loss_weighting", s.weighting == LossWeighting::Log ? "log" : "log_plus_one"}};
    }
    return j;
}

NetworkParams params_from_meta(const json& j) {
    const json& s = j.at("shape");
    if (architecture_from_name(j.at("architecture").get<std::string>()) == Architecture::FullyCon) {
        FullyConShape shape;
        shape.input_dim = s.at("input_dim").get<int>();
        shape.hidden = s.at("hidden").get<std::vector<int>>();
        shape.output_dim = s.at("output_dim").get<int>();
        return FullyConParams(shape);
    }
    DetNetShape shape;
    shape.x_dim = s.at("x_dim").get<int>();
    shape.y_dim = s.at("y_dim").get<int>();
    shape.onehot = s.at("onehot").get<int>();
    shape.z_width = s.at("z_width").get<int>();
    shape.v_width = s.at("v_width").get<int>();
    shape.eta = s.at("eta").get<double>();
    shape.weighting = s.at("loss_weighting").get<std::string>() == "log" ? LossWeighting::Log : LossWeighting::LogPlusOne;
    shape.layers = j.at("layers").get<int>();
    return DetNetParams(shape);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(kCheckpointVersion);
    const std::string meta = meta_json(ck).dump();
    w.pod<std::uint64_t>(meta.size());
    w.bytes(meta.data(), meta.size());
    w.doubles(block_of(ck.params).flat());
    w.doubles(ck.adam ? ck.adam->m : Vec());
    w.doubles(ck.adam ? ck.adam->v : Vec());
    w.pod<std::uint64_t>(fnv1a64(w.data().data(), w.data().size()));

    // Write-then-rename keeps the previous checkpoint intact if we fail midway.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("checkpoint: cannot open " + tmp + " for writing");
        out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
        if (!out) throw IoError("checkpoint: write to " + tmp + " failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("checkpoint: cannot rename " + tmp + " to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw IntegrityError("checkpoint: " + path + " is not a checkpoint file");

    const std::size_t body = buf.size() - sizeof(std::uint64_t);
    std::uint64_t stored = 0;
    std::memcpy(&stored, buf.data() + body, sizeof(stored));
    if (stored != fnv1a64(buf.data(), body)) throw IntegrityError("checkpoint: checksum mismatch in " + path);

    Reader r(buf, body);
    char magic[sizeof(kMagic)];
    r.bytes(magic, sizeof(magic));
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw IntegrityError("checkpoint: unsupported format version " + std::to_string(version));
    const auto meta_len = r.pod<std::uint64_t>();
    if (meta_len > r.remaining()) throw IntegrityError("checkpoint: file is truncated");
    std::string meta(meta_len, '\0');
    r.bytes(meta.data(), meta_len);

    Checkpoint ck;
    try {
        const json j = json::parse(meta);
        ck.meta.constellation = j.at("constellation").get<std::string>();
        ck.meta.channel = channel_from_json(j.at("channel"));
        ck.meta.iterations = j.at("iterations").get<long>();
        ck.meta.config_hash = j.at("config_hash").get<std::string>();
        ck.meta.seed = j.at("seed").get<std::uint64_t>();
        ck.params = params_from_meta(j);
        Vec theta = r.doubles();
        if (theta.size() != block_of(ck.params).size())
            throw IntegrityError("checkpoint: parameter count does not match the stored architecture");
        block_of(ck.params).flat() = std::move(theta);
        Vec m = r.doubles();
        Vec v = r.doubles();
        if (m.size() != 0) {
            if (m.size() != block_of(ck.params).size() || v.size() != m.size())
                throw IntegrityError("checkpoint: optimizer state does not match the parameters");
            AdamState st(0);
            const json& a = j.at("adam");
            st.hyper = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                        a.at("epsilon").get<double>()};
            st.m = std::move(m);
            st.v = std::move(v);
            st.step = j.at("adam_step").get<long>();
            ck.adam = std::move(st);
        }
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("checkpoint: malformed metadata: ") + e.what());
    }
    if (r.remaining() != 0) throw IntegrityError("checkpoint: trailing bytes before checksum");
    return ck;
}

std::string describe(const Checkpoint& ck) {
    std::ostringstream os;
    os << "architecture: " << architecture_name(architecture_of(ck.params)) << '\n';
    os << "layers: L=" << layers_of(ck.params) << '\n';
    os << "widths:";
    if (const auto* fc = std::get_if<FullyConParams>(&ck.params)) {
        os << ' ' << fc->shape().input_dim;
        for (int w : fc->shape().hidden) os << ' ' << w;
        os << ' ' << fc->shape().output_dim << '\n';
    } else {
        const auto& s = std::get<DetNetParams>(ck.params).shape();
        os << " z=" << s.z_width << " v=" << s.v_width << " onehot=" << s.onehot << '\n';
    }
    os << "parameters: " << block_of(ck.params).size() << '\n';
    os << "constellation: " << ck.meta.constellation << '\n';
    os << "channel: " << ck.meta.channel.describe() << '\n';
    os << "K: " << ck.meta.channel.K << '\n';
    os << "N: " << ck.meta.channel.N << '\n';
    os << "training iterations: " << ck.meta.iterations << '\n';
    os << "seed: " << ck.meta.seed << '\n';
    os << "config hash: " << ck.meta.config_hash << '\n';
    return os.str();
}

std::string describe_checkpoint(const std::string& path) { return describe(load_checkpoint(path)); }

void require_compatible(const CheckpointMeta& meta, const ChannelModel& m, const Constellation& c) {
    const ChannelModel& t = meta.channel;
    if (meta.constellation != c.name())
        throw IntegrityError("checkpoint mismatch: trained for constellation " + meta.constellation + ", requested " +
                             std::string(c.name()));
    if (t.K != m.K || t.N != m.N || t.is_complex != m.is_complex)
        throw IntegrityError("checkpoint mismatch: trained for K=" + std::to_string(t.K) + " N=" + std::to_string(t.N) +
                             ", requested K=" + std::to_string(m.K) + " N=" + std::to_string(m.N));
}

}  // namespace mimodet
