#include "mimodet/neural.hpp"

#include <cmath>
#include <string>

#include "mimodet/error.hpp"

namespace mimodet {

std::size_t ParamBlock::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    slots_.push_back({std::move(name), rows, cols, size_});
    size_ += rows * cols;
    return slots_.size() - 1;
}

std::string architecture_name(Architecture a) { return a == Architecture::FullyCon ? "fullycon" : "detnet"; }

Architecture architecture_from_name(const std::string& name) {
    if (name == "fullycon") return Architecture::FullyCon;
    if (name == "detnet") return Architecture::DetNet;
    throw ConfigError("architecture: unknown name \"" + name + "\"");
}

FullyConParams::FullyConParams(FullyConShape shape) : shape_(std::move(shape)) {
    if (shape_.input_dim <= 0 || shape_.output_dim <= 0) throw ConfigError("fullycon: input and output widths must be positive");
    int in = shape_.input_dim;
    for (int k = 0; k < shape_.layers(); ++k) {
        const int out = k + 1 < shape_.layers() ? shape_.hidden[static_cast<std::size_t>(k)] : shape_.output_dim;
        if (out <= 0) throw ConfigError("fullycon.widths: every width must be positive");
        block_.add("W" + std::to_string(k + 1), out, in);
        block_.add("b" + std::to_string(k + 1), out, 1);
        in = out;
    }
    block_.allocate();
}

DetNetParams::DetNetParams(DetNetShape shape) : shape_(shape) {
    if (shape_.layers < 1) throw ConfigError("detnet.layers: must be at least 1");
    if (shape_.x_dim <= 0 || shape_.y_dim <= 0 || shape_.onehot <= 0 || shape_.v_width <= 0)
        throw ConfigError("detnet: widths must be positive");
    if (shape_.z_width < shape_.x_dim + shape_.v_width)
        throw ConfigError("detnet.z_width: lifting matrix must have at least dim(x) + v_width rows");
    if (!(shape_.eta >= 0.0 && shape_.eta <= 1.0)) throw ConfigError("detnet.eta: must lie in [0, 1]");
    const int in = shape_.x_dim + shape_.v_width;
    for (int k = 0; k < shape_.layers; ++k) {
        const std::string l = std::to_string(k + 1);
        block_.add("W1_" + l, shape_.z_width, in);
        block_.add("b1_" + l, shape_.z_width, 1);
        block_.add("W2_" + l, shape_.onehot, shape_.z_width);
        block_.add("b2_" + l, shape_.onehot, 1);
        block_.add("W3_" + l, shape_.v_width, shape_.z_width);
        block_.add("b3_" + l, shape_.v_width, 1);
        block_.add("delta1_" + l, 1, 1);
        block_.add("delta2_" + l, 1, 1);
    }
    block_.allocate();
}

Architecture architecture_of(const NetworkParams& p) {
    return std::holds_alternative<FullyConParams>(p) ? Architecture::FullyCon : Architecture::DetNet;
}

ParamBlock& block_of(NetworkParams& p) {
    return std::visit([](auto& q) -> ParamBlock& { return q.block(); }, p);
}

const ParamBlock& block_of(const NetworkParams& p) {
    return std::visit([](const auto& q) -> const ParamBlock& { return q.block(); }, p);
}

int layers_of(const NetworkParams& p) {
    return std::visit([](const auto& q) { return q.layers(); }, p);
}

void initialize(NetworkParams& p, RngStream& rng) {
    ParamBlock& block = block_of(p);
    for (std::size_t i = 0; i < block.slots().size(); ++i) {
        const auto& slot = block.slots()[i];
        auto m = block.mat(i);
        if (slot.name.rfind("delta", 0) == 0) {
            m.setConstant(1e-2);
        } else if (slot.cols == 1) {
            m.setZero();
        } else {
            const double a = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-a, a);
        }
    }
}

FullyConShape default_fullycon_shape(const ChannelModel& m, const Constellation& c, int layers) {
    if (layers < 1) throw ConfigError("fullycon.layers: must be at least 1");
    FullyConShape s;
    s.input_dim = static_cast<int>(m.rows());
    s.hidden.assign(static_cast<std::size_t>(layers - 1), 4 * m.K);
    s.output_dim = static_cast<int>(m.cols() * static_cast<Eigen::Index>(c.onehot_dim));
    return s;
}

DetNetShape default_detnet_shape(const ChannelModel& m, const Constellation& c, int layers) {
    DetNetShape s;
    s.x_dim = static_cast<int>(m.cols());
    s.y_dim = static_cast<int>(m.rows());
    s.onehot = s.x_dim * static_cast<int>(c.onehot_dim);
    s.z_width = 8 * m.K;
    s.v_width = 4 * m.K;
    // Keeps the lifting tall for complex channels, where dim(x) = 2K.
    s.z_width = std::max(s.z_width, s.x_dim + s.v_width);
    s.layers = layers;
    return s;
}

Batch make_batch(std::span<const Sample> samples, bool need_gram) {
    if (samples.empty()) throw DomainError("make_batch: batch is empty");
    const Eigen::Index b = static_cast<Eigen::Index>(samples.size());
    const Sample& first = samples.front();
    Batch out;
    out.y.resize(first.y.size(), b);
    out.hty.resize(first.H.cols(), b);
    out.x_oh.resize(first.x_oh.size(), b);
    if (need_gram) out.gram.reserve(samples.size());
    for (Eigen::Index i = 0; i < b; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        if (s.y.size() != out.y.rows() || s.x_oh.size() != out.x_oh.rows() || s.H.cols() != out.hty.rows())
            throw DomainError("make_batch: samples have inconsistent shapes");
        out.y.col(i) = s.y;
        out.hty.col(i).noalias() = s.H.transpose() * s.y;
        out.x_oh.col(i) = s.x_oh;
        if (need_gram) out.gram.push_back(s.H.transpose() * s.H);
    }
    return out;
}

Batch make_batch(std::span<const Mat> H, std::span<const Vec> y, bool need_gram) {
    if (H.empty() || H.size() != y.size()) throw DomainError("make_batch: need one y per channel");
    const Eigen::Index b = static_cast<Eigen::Index>(H.size());
    Batch out;
    out.y.resize(y[0].size(), b);
    out.hty.resize(H[0].cols(), b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Mat& h = H[static_cast<std::size_t>(i)];
        const Vec& v = y[static_cast<std::size_t>(i)];
        if (h.rows() != v.size() || v.size() != out.y.rows() || h.cols() != out.hty.rows())
            throw DomainError("make_batch: channel and observation shapes disagree");
        out.y.col(i) = v;
        out.hty.col(i).noalias() = h.transpose() * v;
        if (need_gram) out.gram.push_back(h.transpose() * h);
    }
    return out;
}

namespace {

Eigen::Map<const Eigen::RowVectorXd> alphabet_row(const Constellation& c) {
    return {c.real_alphabet.data(), static_cast<Eigen::Index>(c.size())};
}

// x(j, b) = sum_i s_i oh(j |S| + i, b)
Mat decode_columns(const Mat& oh, const Constellation& c) {
    const Eigen::Index s = static_cast<Eigen::Index>(c.size());
    const Eigen::Index x_dim = oh.rows() / s;
    Mat x(x_dim, oh.cols());
    Eigen::Map<Eigen::RowVectorXd>(x.data(), x.size()).noalias() =
        alphabet_row(c) * Eigen::Map<const Mat>(oh.data(), s, x_dim * oh.cols());
    return x;
}

// Adjoint of decode_columns, accumulated into g_oh.
void decode_columns_adjoint(const Mat& g_x, const Constellation& c, Mat& g_oh) {
    const Eigen::Index s = static_cast<Eigen::Index>(c.size());
    Eigen::Map<Mat>(g_oh.data(), s, g_x.size()).noalias() +=
        alphabet_row(c).transpose() * Eigen::Map<const Eigen::RowVectorXd>(g_x.data(), g_x.size());
}

Mat gram_times(const std::vector<Mat>& gram, const Mat& x) {
    Mat out(x.rows(), x.cols());
    for (Eigen::Index b = 0; b < x.cols(); ++b) out.col(b).noalias() = gram[static_cast<std::size_t>(b)] * x.col(b);
    return out;
}

void check_fullycon_input(const FullyConParams& p, const Batch& batch) {
    if (batch.y.rows() != p.shape().input_dim)
        throw ConfigError("fullycon: input has " + std::to_string(batch.y.rows()) + " rows, network expects " +
                          std::to_string(p.shape().input_dim));
}

void check_detnet_input(const DetNetParams& p, const Batch& batch, const Constellation& c) {
    const DetNetShape& s = p.shape();
    if (batch.hty.rows() != s.x_dim || static_cast<int>(batch.gram.size()) != batch.hty.cols())
        throw ConfigError("detnet: batch does not match dim(x) = " + std::to_string(s.x_dim));
    if (s.onehot != s.x_dim * static_cast<int>(c.size()))
        throw ConfigError("detnet: one-hot width does not match constellation " + std::string(c.name()));
}

struct FullyConTape {
    std::vector<Mat> inputs;  // q_k, input of layer k
    std::vector<Mat> pre;     // W_k q_k + b_k for hidden layers
    Mat out;
};

FullyConTape fullycon_tape(const FullyConParams& p, const Batch& batch) {
    check_fullycon_input(p, batch);
    FullyConTape t;
    Mat q = batch.y;
    const int L = p.layers();
    for (int k = 0; k < L; ++k) {
        Mat a = p.W(k) * q;
        a.colwise() += p.b(k).col(0);
        t.inputs.push_back(std::move(q));
        if (k + 1 == L) {
            t.out = std::move(a);
            break;
        }
        q = a.cwiseMax(0.0);
        t.pre.push_back(std::move(a));
    }
    return t;
}

struct DetNetLayerTape {
    Mat gx;      // G x_{k-1}
    Mat in;      // [q_k; v_{k-1}]
    Mat z;       // relu(W1 in + b1)
};

struct DetNetTape {
    std::vector<DetNetLayerTape> layers;
    std::vector<Mat> oh;   // mixed one-hot outputs per layer
    std::vector<Mat> w23;  // [W2; W3] per layer
};

DetNetTape detnet_tape(const DetNetParams& p, const Batch& batch, const Constellation& c) {
    check_detnet_input(p, batch, c);
    const DetNetShape& s = p.shape();
    const Eigen::Index B = batch.size();
    DetNetTape t;
    Mat x = Mat::Zero(s.x_dim, B);
    Mat v = Mat::Zero(s.v_width, B);
    Mat oh = Mat::Zero(s.onehot, B);
    Vec b23(s.onehot + s.v_width);
    for (int k = 0; k < s.layers; ++k) {
        Mat w23(s.onehot + s.v_width, s.z_width);
        w23.topRows(s.onehot) = p.get(k, DetNetParams::W2);
        w23.bottomRows(s.v_width) = p.get(k, DetNetParams::W3);
        b23.head(s.onehot) = p.get(k, DetNetParams::B2).col(0);
        b23.tail(s.v_width) = p.get(k, DetNetParams::B3).col(0);

        DetNetLayerTape lt;
        lt.gx = gram_times(batch.gram, x);
        lt.in.resize(s.x_dim + s.v_width, B);
        lt.in.topRows(s.x_dim) = x - p.delta1(k) * batch.hty + p.delta2(k) * lt.gx;
        lt.in.bottomRows(s.v_width) = v;
        lt.z.noalias() = p.get(k, DetNetParams::W1) * lt.in;
        lt.z = (lt.z.colwise() + p.get(k, DetNetParams::B1).col(0)).cwiseMax(0.0);

        Mat raw = w23 * lt.z;
        oh = s.eta * (raw.topRows(s.onehot).colwise() + b23.head(s.onehot)) + (1.0 - s.eta) * oh;
        v = s.eta * (raw.bottomRows(s.v_width).colwise() + b23.tail(s.v_width)) + (1.0 - s.eta) * v;
        x = decode_columns(oh, c);
        t.oh.push_back(oh);
        t.layers.push_back(std::move(lt));
        t.w23.push_back(std::move(w23));
    }
    return t;
}

void check_finite(const Eigen::RowVectorXd& per_sample) {
    for (Eigen::Index b = 0; b < per_sample.size(); ++b) {
        if (!std::isfinite(per_sample[b]))
            throw NumericalError("gradient: non-finite loss at sample " + std::to_string(b));
    }
}

LossAndGradient fullycon_gradient(const FullyConParams& p, const Batch& batch) {
    const FullyConTape t = fullycon_tape(p, batch);
    const double B = static_cast<double>(batch.size());
    const Mat diff = t.out - batch.x_oh;
    const Eigen::RowVectorXd per_sample = diff.colwise().squaredNorm();
    check_finite(per_sample);

    LossAndGradient r;
    r.loss = per_sample.sum() / B;
    r.grad = Vec::Zero(p.block().size());
    const ParamBlock& blk = p.block();

    Mat g = (2.0 / B) * diff;
    for (int k = p.layers() - 1; k >= 0; --k) {
        blk.mat_of(r.grad, 2 * static_cast<std::size_t>(k)).noalias() = g * t.inputs[static_cast<std::size_t>(k)].transpose();
        blk.mat_of(r.grad, 2 * static_cast<std::size_t>(k) + 1) = g.rowwise().sum();
        if (k == 0) break;
        Mat gq = p.W(k).transpose() * g;
        g = gq.cwiseProduct((t.pre[static_cast<std::size_t>(k - 1)].array() > 0.0).cast<double>().matrix());
    }
    return r;
}

LossAndGradient detnet_gradient(const DetNetParams& p, const Batch& batch, const Constellation& c) {
    const DetNetTape t = detnet_tape(p, batch, c);
    const DetNetShape& s = p.shape();
    const double B = static_cast<double>(batch.size());
    const ParamBlock& blk = p.block();

    LossAndGradient r;
    r.grad = Vec::Zero(blk.size());
    Eigen::RowVectorXd per_sample = Eigen::RowVectorXd::Zero(batch.size());
    for (int k = 0; k < s.layers; ++k) {
        const double w = layer_weight(k + 1, s.weighting);
        if (w != 0.0) per_sample += w * (t.oh[static_cast<std::size_t>(k)] - batch.x_oh).colwise().squaredNorm();
    }
    check_finite(per_sample);
    r.loss = per_sample.sum() / B;

    const Eigen::Index Bn = batch.size();
    Mat g_oh = Mat::Zero(s.onehot, Bn);   // d loss / d oh_k (mixed)
    Mat g_v = Mat::Zero(s.v_width, Bn);   // d loss / d v_k (mixed)
    Mat g_x = Mat::Zero(s.x_dim, Bn);     // d loss / d x_k
    for (int k = s.layers - 1; k >= 0; --k) {
        const auto& lt = t.layers[static_cast<std::size_t>(k)];
        const double w = layer_weight(k + 1, s.weighting);
        if (w != 0.0) g_oh += (2.0 * w / B) * (t.oh[static_cast<std::size_t>(k)] - batch.x_oh);
        decode_columns_adjoint(g_x, c, g_oh);

        Mat g_raw(s.onehot + s.v_width, Bn);
        g_raw.topRows(s.onehot) = s.eta * g_oh;
        g_raw.bottomRows(s.v_width) = s.eta * g_v;
        const Mat g_w23 = g_raw * lt.z.transpose();
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::W2)) = g_w23.topRows(s.onehot);
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::W3)) = g_w23.bottomRows(s.v_width);
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::B2)) = g_raw.topRows(s.onehot).rowwise().sum();
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::B3)) = g_raw.bottomRows(s.v_width).rowwise().sum();

        Mat g_pre = t.w23[static_cast<std::size_t>(k)].transpose() * g_raw;
        g_pre.array() *= (lt.z.array() > 0.0).cast<double>();
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::W1)).noalias() = g_pre * lt.in.transpose();
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::B1)) = g_pre.rowwise().sum();

        const Mat g_in = p.get(k, DetNetParams::W1).transpose() * g_pre;
        const auto g_q = g_in.topRows(s.x_dim);
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::Delta1))(0, 0) = -(g_q.cwiseProduct(batch.hty)).sum();
        blk.mat_of(r.grad, DetNetParams::slot(k, DetNetParams::Delta2))(0, 0) = g_q.cwiseProduct(lt.gx).sum();

        // Gram matrices are symmetric, so G^T g = G g.
        g_x = g_q + p.delta2(k) * gram_times(batch.gram, g_q);
        g_v = (1.0 - s.eta) * g_v + g_in.bottomRows(s.v_width);
        g_oh = (1.0 - s.eta) * g_oh;
    }
    return r;
}

}  // namespace

double layer_weight(int layer_one_based, LossWeighting w) {
    const double l = static_cast<double>(layer_one_based);
    return w == LossWeighting::Log ? std::log(l) : std::log(l + 1.0);
}

namespace {

constexpr Eigen::Index kInferenceTile = 128;
// Below this many samples the Gram products are done one sample at a time.
constexpr Eigen::Index kNarrowTile = 8;

}  // namespace

DetNetInference::DetNetInference(const DetNetParams& p) : shape_(p.shape()) {
    const int L = p.layers();
    for (int k = 0; k < L; ++k) {
        delta1_.push_back(p.delta1(k));
        delta2_.push_back(p.delta2(k));
        w1t_.push_back(p.get(k, DetNetParams::W1).transpose());
        b1_.push_back(p.get(k, DetNetParams::B1).col(0).transpose());
        Mat w23(shape_.z_width, shape_.onehot + shape_.v_width);
        w23.leftCols(shape_.onehot) = p.get(k, DetNetParams::W2).transpose();
        w23.rightCols(shape_.v_width) = p.get(k, DetNetParams::W3).transpose();
        w23t_.push_back(std::move(w23));
        Eigen::RowVectorXd b23(shape_.onehot + shape_.v_width);
        b23.head(shape_.onehot) = p.get(k, DetNetParams::B2).col(0).transpose();
        b23.tail(shape_.v_width) = p.get(k, DetNetParams::B3).col(0).transpose();
        b23_.push_back(std::move(b23));
    }
}

std::vector<Mat> DetNetInference::run(const Batch& batch, const Constellation& c, int upto, bool all) const {
    const DetNetShape& s = shape_;
    if (batch.hty.rows() != s.x_dim || static_cast<int>(batch.gram.size()) != batch.hty.cols())
        throw ConfigError("detnet: batch does not match dim(x) = " + std::to_string(s.x_dim));
    if (s.onehot != s.x_dim * static_cast<int>(c.size()))
        throw ConfigError("detnet: one-hot width does not match constellation " + std::string(c.name()));
    if (upto < 1 || upto > s.layers) throw ConfigError("layer: must lie in [1, " + std::to_string(s.layers) + "]");
    const Eigen::Index B = batch.size();
    const Eigen::Index S = static_cast<Eigen::Index>(c.size());
    const Eigen::Index n = s.x_dim;
    std::vector<Mat> out(all ? static_cast<std::size_t>(upto) : 1, Mat(s.onehot, B));

    // Samples are rows. gram(b, i + j n) holds G(i, j) of sample b.
    Mat x, v, oh, in, z, raw, gram, gx, hty;
    for (Eigen::Index b0 = 0; b0 < B; b0 += kInferenceTile) {
        const Eigen::Index T = std::min(kInferenceTile, B - b0);
        x.setZero(T, n);
        v.setZero(T, s.v_width);
        oh.setZero(T, s.onehot);
        in.resize(T, n + s.v_width);
        gx.resize(T, n);
        gram.resize(T, n * n);
        for (Eigen::Index b = 0; b < T && T >= kNarrowTile; ++b)
            gram.row(b) = Eigen::Map<const Eigen::RowVectorXd>(batch.gram[static_cast<std::size_t>(b0 + b)].data(), n * n);
        hty = batch.hty.middleCols(b0, T).transpose();
        for (int k = 0; k < upto; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            if (T < kNarrowTile) {
                for (Eigen::Index b = 0; b < T; ++b)
                    gx.row(b).transpose().noalias() = batch.gram[static_cast<std::size_t>(b0 + b)] * x.row(b).transpose();
            } else {
                for (Eigen::Index i = 0; i < n; ++i) {
                    auto acc = gx.col(i);
                    acc = gram.col(i).cwiseProduct(x.col(0));
                    for (Eigen::Index j = 1; j < n; ++j) acc += gram.col(i + j * n).cwiseProduct(x.col(j));
                }
            }
            in.leftCols(n) = x - delta1_[kk] * hty + delta2_[kk] * gx;
            in.rightCols(s.v_width) = v;
            z.noalias() = in * w1t_[kk];
            z = (z.rowwise() + b1_[kk]).cwiseMax(0.0);
            raw.noalias() = z * w23t_[kk];
            oh = s.eta * (raw.leftCols(s.onehot).rowwise() + b23_[kk].head(s.onehot)) + (1.0 - s.eta) * oh;
            v = s.eta * (raw.rightCols(s.v_width).rowwise() + b23_[kk].tail(s.v_width)) + (1.0 - s.eta) * v;
            for (Eigen::Index j = 0; j < n; ++j) {
                auto xj = x.col(j);
                xj = c.real_alphabet[0] * oh.col(j * S);
                for (Eigen::Index a = 1; a < S; ++a) xj += c.real_alphabet[static_cast<std::size_t>(a)] * oh.col(j * S + a);
            }
            if (all) out[kk].middleCols(b0, T) = oh.transpose();
        }
        if (!all) out[0].middleCols(b0, T) = oh.transpose();
    }
    return out;
}

std::vector<Mat> forward_batch(const NetworkParams& p, const Batch& batch, const Constellation& c) {
    if (const auto* fc = std::get_if<FullyConParams>(&p)) {
        std::vector<Mat> out;
        out.push_back(fullycon_tape(*fc, batch).out);
        return out;
    }
    const auto& d = std::get<DetNetParams>(p);
    return DetNetInference(d).run(batch, c, d.layers(), true);
}

Mat forward_layer(const NetworkParams& p, const Batch& batch, const Constellation& c, int layer) {
    const int L = layers_of(p);
    if (layer < 0 || layer > L) throw ConfigError("layer: must lie in [0, " + std::to_string(L) + "]");
    if (const auto* fc = std::get_if<FullyConParams>(&p)) return fullycon_tape(*fc, batch).out;
    return std::move(DetNetInference(std::get<DetNetParams>(p)).run(batch, c, layer == 0 ? L : layer, false).front());
}

Vec fullycon_forward(const FullyConParams& p, const Vec& y) {
    Batch b;
    b.y = y;
    return fullycon_tape(p, b).out.col(0);
}

std::vector<Vec> detnet_forward(const DetNetParams& p, const Mat& H, const Vec& y, const Constellation& c) {
    const std::vector<Mat> hs{H};
    const std::vector<Vec> ys{y};
    const Batch b = make_batch(hs, ys);
    std::vector<Vec> out;
    for (const Mat& m : DetNetInference(p).run(b, c, p.layers(), true)) out.push_back(m.col(0));
    return out;
}

double fullycon_loss(const Vec& x_oh, const Vec& x_oh_hat) {
    if (x_oh.size() != x_oh_hat.size()) throw DomainError("fullycon_loss: length mismatch");
    return (x_oh - x_oh_hat).squaredNorm();
}

double detnet_loss(const Vec& x_oh, std::span<const Vec> per_layer, LossWeighting w) {
    double total = 0.0;
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
        if (per_layer[l].size() != x_oh.size()) throw DomainError("detnet_loss: length mismatch");
        total += layer_weight(static_cast<int>(l) + 1, w) * (x_oh - per_layer[l]).squaredNorm();
    }
    return total;
}

LossAndGradient gradient(const NetworkParams& p, const Batch& batch, const Constellation& c) {
    if (batch.size() == 0) throw DomainError("gradient: batch is empty");
    if (const auto* fc = std::get_if<FullyConParams>(&p)) return fullycon_gradient(*fc, batch);
    return detnet_gradient(std::get<DetNetParams>(p), batch, c);
}

double batch_loss(const NetworkParams& p, const Batch& batch, const Constellation& c) {
    const std::vector<Mat> outs = forward_batch(p, batch, c);
    double total = 0.0;
    if (architecture_of(p) == Architecture::FullyCon) {
        total = (outs[0] - batch.x_oh).squaredNorm();
    } else {
        const LossWeighting w = std::get<DetNetParams>(p).shape().weighting;
        for (std::size_t l = 0; l < outs.size(); ++l)
            total += layer_weight(static_cast<int>(l) + 1, w) * (outs[l] - batch.x_oh).squaredNorm();
    }
    return total / static_cast<double>(batch.size());
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr_scale) {
    if (params.size() != grads.size()) throw DomainError("adam_step: gradient and parameter sizes differ");
    if (state.m.size() != params.size()) {
        if (state.step != 0 || state.m.size() != 0) throw DomainError("adam_step: optimizer state has the wrong size");
        state.m = Vec::Zero(params.size());
        state.v = Vec::Zero(params.size());
    }
    const AdamHyper& h = state.hyper;
    ++state.step;
    state.m = h.beta1 * state.m + (1.0 - h.beta1) * grads;
    state.v = h.beta2 * state.v + (1.0 - h.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    const double lr = h.lr * lr_scale;
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + h.epsilon);
}

}  // namespace mimodet
