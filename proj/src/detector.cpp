#include "mimodet/detector.hpp"

#include <functional>

#include "mimodet/checkpoint.hpp"
#include "mimodet/error.hpp"
#include "mimodet/evaluation.hpp"

namespace mimodet {

namespace {

using SingleFn = std::function<DetectorOutput(const Sample&)>;

class ClassicalDetector final : public Detector {
public:
    ClassicalDetector(std::string label, bool soft, bool search, SingleFn fn)
        : label_(std::move(label)), soft_(soft), search_(search), fn_(std::move(fn)) {}

    std::string label() const override { return label_; }
    bool soft() const override { return soft_; }
    bool search_based() const override { return search_; }

    std::vector<DetectorOutput> detect(std::span<const Sample> samples) const override {
        std::vector<DetectorOutput> out;
        out.reserve(samples.size());
        for (const Sample& s : samples) {
            try {
                out.push_back(fn_(s));
            } catch (const NumericalError&) {
                out.emplace_back();
            }
        }
        return out;
    }

private:
    std::string label_;
    bool soft_;
    bool search_;
    SingleFn fn_;
};

class NetworkDetector final : public Detector {
public:
    NetworkDetector(NetworkParams p, Constellation c, std::string label, int layer)
        : p_(std::move(p)), c_(std::move(c)), label_(std::move(label)), layer_(layer) {
        const int L = layers_of(p_);
        if (layer_ < 0 || layer_ > L) throw ConfigError("detector.layer: must lie in [0, " + std::to_string(L) + "]");
        if (architecture_of(p_) == Architecture::FullyCon && layer_ > 1)
            throw ConfigError("detector.layer: FullyCon exposes a single output");
        if (const auto* d = std::get_if<DetNetParams>(&p_)) plan_.emplace(*d);
    }

    std::string label() const override { return label_; }
    bool soft() const override { return true; }

    std::vector<DetectorOutput> detect(std::span<const Sample> samples) const override {
        const bool detnet = architecture_of(p_) == Architecture::DetNet;
        const Batch batch = make_batch(samples, detnet);
        const Mat oh = plan_ ? std::move(plan_->run(batch, c_, layer_ == 0 ? layers_of(p_) : layer_, false).front())
                             : forward_layer(p_, batch, c_, layer_);
        std::vector<DetectorOutput> res(samples.size());
        for (std::size_t b = 0; b < samples.size(); ++b) {
            const Vec col = oh.col(static_cast<Eigen::Index>(b));
            res[b].hard = hard_round(soft_decode(col, c_), c_);
            res[b].posteriors = soft_output_from_onehot(col, c_);
        }
        return res;
    }

private:
    NetworkParams p_;
    Constellation c_;
    std::string label_;
    int layer_;
    std::optional<DetNetInference> plan_;
};

}  // namespace

bool is_learned(const std::string& name) { return name == "detnet" || name == "fullycon"; }

std::unique_ptr<Detector> make_network_detector(NetworkParams params, const Constellation& c, std::string label,
                                                int layer) {
    return std::make_unique<NetworkDetector>(std::move(params), c, std::move(label), layer);
}

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec, const ChannelModel& m, const Constellation& c) {
    std::string label = spec.label;
    if (label.empty()) label = spec.name == "mbest" ? "mbest" + std::to_string(spec.M) : spec.name;

    if (spec.name == "zf")
        return std::make_unique<ClassicalDetector>(label, false, false,
                                                   [c](const Sample& s) { return zf_detect(s.H, s.y, c); });
    if (spec.name == "ml")
        return std::make_unique<ClassicalDetector>(label, false, true,
                                                   [c](const Sample& s) { return ml_detect_exhaustive(s.H, s.y, c); });
    if (spec.name == "exact")
        return std::make_unique<ClassicalDetector>(
            label, true, true, [c](const Sample& s) { return exact_posteriors(s.H, s.y, s.sigma2, c); });
    if (spec.name == "sd")
        return std::make_unique<ClassicalDetector>(label, false, true,
                                                   [c](const Sample& s) { return sphere_decode(s.H, s.y, c); });
    if (spec.name == "amp") {
        const AmpConfig cfg = spec.amp;
        return std::make_unique<ClassicalDetector>(
            label, true, false, [c, cfg](const Sample& s) { return amp_detect(s.H, s.y, s.sigma2, c, cfg); });
    }
    if (spec.name == "mbest") {
        if (spec.M < 1) throw ConfigError("detector.M: must be at least 1");
        const std::size_t M = spec.M;
        return std::make_unique<ClassicalDetector>(
            label, true, true, [c, M](const Sample& s) { return mbest_soft(s.H, s.y, s.sigma2, c, M); });
    }
    if (is_learned(spec.name)) {
        if (spec.checkpoint.empty())
            throw ConfigError("detector.checkpoint: learned detector \"" + spec.name + "\" needs a checkpoint");
        Checkpoint ck = load_checkpoint(spec.checkpoint);
        if (architecture_name(architecture_of(ck.params)) != spec.name)
            throw IntegrityError("checkpoint mismatch: " + spec.checkpoint + " holds a " +
                                 architecture_name(architecture_of(ck.params)) + " network");
        require_compatible(ck.meta, m, c);
        return make_network_detector(std::move(ck.params), c, label, spec.layer);
    }
    throw ConfigError("detector.name: unknown detector \"" + spec.name + "\"");
}

}  // namespace mimodet
