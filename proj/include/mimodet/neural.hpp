#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mimodet/channel.hpp"
#include "mimodet/constellation.hpp"
#include "mimodet/rng.hpp"
#include "mimodet/types.hpp"

namespace mimodet {

// Named matrices packed into one flat vector, in declaration order. Gradients
// and optimizer moments use the same layout.
class ParamBlock {
public:
    struct Slot {
        std::string name;
        Eigen::Index rows;
        Eigen::Index cols;
        Eigen::Index offset;
    };

    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);
    void allocate() { data_ = Vec::Zero(size_); }

    Eigen::Map<Mat> mat(std::size_t slot) { return mat_of(data_, slot); }
    Eigen::Map<const Mat> mat(std::size_t slot) const { return mat_of(data_, slot); }

    Eigen::Map<Mat> mat_of(Vec& flat, std::size_t slot) const {
        const Slot& s = slots_[slot];
        return {flat.data() + s.offset, s.rows, s.cols};
    }
    Eigen::Map<const Mat> mat_of(const Vec& flat, std::size_t slot) const {
        const Slot& s = slots_[slot];
        return {flat.data() + s.offset, s.rows, s.cols};
    }

    Vec& flat() { return data_; }
    const Vec& flat() const { return data_; }
    const std::vector<Slot>& slots() const { return slots_; }
    Eigen::Index size() const { return size_; }

private:
    std::vector<Slot> slots_;
    Eigen::Index size_ = 0;
    Vec data_;
};

enum class Architecture { FullyCon, DetNet };
std::string architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

// Weighting of the per-layer DetNet loss terms: log(l) as published, or
// log(l + 1) which also trains the first layer directly.
enum class LossWeighting { Log, LogPlusOne };

struct FullyConShape {
    int input_dim = 0;         // dim(y)
    std::vector<int> hidden;   // widths of the L - 1 hidden layers
    int output_dim = 0;        // |S| * dim(x)
    int layers() const { return static_cast<int>(hidden.size()) + 1; }
};

struct DetNetShape {
    int x_dim = 0;  // dim(x)
    int y_dim = 0;  // dim(y)
    int onehot = 0; // |S| * dim(x)
    int z_width = 0;
    int v_width = 0;
    int layers = 0;
    double eta = 0.8;  // residual mixing weight of the fresh layer output
    LossWeighting weighting = LossWeighting::Log;
};

class FullyConParams {
public:
    FullyConParams() = default;
    explicit FullyConParams(FullyConShape shape);

    const FullyConShape& shape() const { return shape_; }
    int layers() const { return shape_.layers(); }
    Eigen::Map<Mat> W(int k) { return block_.mat(2 * static_cast<std::size_t>(k)); }
    Eigen::Map<const Mat> W(int k) const { return block_.mat(2 * static_cast<std::size_t>(k)); }
    Eigen::Map<Mat> b(int k) { return block_.mat(2 * static_cast<std::size_t>(k) + 1); }
    Eigen::Map<const Mat> b(int k) const { return block_.mat(2 * static_cast<std::size_t>(k) + 1); }

    ParamBlock& block() { return block_; }
    const ParamBlock& block() const { return block_; }

private:
    FullyConShape shape_;
    ParamBlock block_;
};

class DetNetParams {
public:
    enum Slot : std::size_t { W1, B1, W2, B2, W3, B3, Delta1, Delta2, kPerLayer };

    DetNetParams() = default;
    explicit DetNetParams(DetNetShape shape);

    const DetNetShape& shape() const { return shape_; }
    int layers() const { return shape_.layers; }

    static std::size_t slot(int k, Slot s) { return static_cast<std::size_t>(k) * kPerLayer + s; }
    Eigen::Map<Mat> get(int k, Slot s) { return block_.mat(slot(k, s)); }
    Eigen::Map<const Mat> get(int k, Slot s) const { return block_.mat(slot(k, s)); }
    double& delta1(int k) { return get(k, Delta1)(0, 0); }
    double delta1(int k) const { return get(k, Delta1)(0, 0); }
    double& delta2(int k) { return get(k, Delta2)(0, 0); }
    double delta2(int k) const { return get(k, Delta2)(0, 0); }

    ParamBlock& block() { return block_; }
    const ParamBlock& block() const { return block_; }

private:
    DetNetShape shape_;
    ParamBlock block_;
};

using NetworkParams = std::variant<FullyConParams, DetNetParams>;

Architecture architecture_of(const NetworkParams& p);
ParamBlock& block_of(NetworkParams& p);
const ParamBlock& block_of(const NetworkParams& p);
int layers_of(const NetworkParams& p);

// Fan-scaled uniform weights, zero biases, step sizes 1e-2.
void initialize(NetworkParams& p, RngStream& rng);

// Default shapes for a channel/constellation pair.
FullyConShape default_fullycon_shape(const ChannelModel& m, const Constellation& c, int layers = 6);
DetNetShape default_detnet_shape(const ChannelModel& m, const Constellation& c, int layers = 30);

// Column-stacked batch. Samples are columns; the Gram matrices are kept per
// sample because the channel may vary.
struct Batch {
    Mat y;      // dim(y) x B
    Mat hty;    // dim(x) x B
    std::vector<Mat> gram;
    Mat x_oh;   // |S| dim(x) x B
    Eigen::Index size() const { return y.cols(); }
};

Batch make_batch(std::span<const Sample> samples, bool need_gram = true);
Batch make_batch(std::span<const Mat> H, std::span<const Vec> y, bool need_gram = true);

// Per-layer one-hot estimates (one entry for FullyCon), each |S| dim(x) x B.
std::vector<Mat> forward_batch(const NetworkParams& p, const Batch& batch, const Constellation& c);
// DetNet weights transposed and stacked for inference on sample-major
// tiles. Detectors build one and reuse it across calls.
class DetNetInference {
public:
    explicit DetNetInference(const DetNetParams& p);

    // One-hot outputs of layers 1..upto, or only layer `upto` unless `all`.
    // Each is |S| dim(x) x B.
    std::vector<Mat> run(const Batch& batch, const Constellation& c, int upto, bool all) const;

private:
    DetNetShape shape_;
    std::vector<double> delta1_, delta2_;
    std::vector<Mat> w1t_;   // W1^T
    std::vector<Mat> w23t_;  // [W2; W3]^T
    std::vector<Eigen::RowVectorXd> b1_, b23_;
};

// Output of one layer (1-based, 0 for the last) without keeping the others.
Mat forward_layer(const NetworkParams& p, const Batch& batch, const Constellation& c, int layer = 0);

Vec fullycon_forward(const FullyConParams& p, const Vec& y);
std::vector<Vec> detnet_forward(const DetNetParams& p, const Mat& H, const Vec& y, const Constellation& c);

double fullycon_loss(const Vec& x_oh, const Vec& x_oh_hat);
double detnet_loss(const Vec& x_oh, std::span<const Vec> per_layer, LossWeighting w = LossWeighting::Log);
double layer_weight(int layer_one_based, LossWeighting w);

struct LossAndGradient {
    double loss = 0.0;  // mean per-sample loss
    Vec grad;           // laid out like the parameter block
};

// Mean loss over the batch and its exact gradient.
LossAndGradient gradient(const NetworkParams& p, const Batch& batch, const Constellation& c);
double batch_loss(const NetworkParams& p, const Batch& batch, const Constellation& c);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    Vec m;
    Vec v;
    long step = 0;

    explicit AdamState(Eigen::Index n = 0, AdamHyper h = {}) : hyper(h), m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

// Bias-corrected Adam update applied in place; `lr_scale` multiplies lr.
void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr_scale = 1.0);

}  // namespace mimodet
