#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mimodet/baselines.hpp"
#include "mimodet/channel.hpp"
#include "mimodet/neural.hpp"

namespace mimodet {

// Uniform batch interface over classical and learned detectors. A failed
// trial (singular channel for ZF, say) yields an output with an empty hard
// vector instead of aborting the batch.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::string label() const = 0;
    virtual bool soft() const { return false; }
    // Tree searches whose cost varies per instance.
    virtual bool search_based() const { return false; }
    virtual std::vector<DetectorOutput> detect(std::span<const Sample> samples) const = 0;
};

struct DetectorSpec {
    // zf, ml, exact, amp, sd, mbest, detnet, fullycon
    std::string name;
    std::string label;  // defaults to name (with M for mbest)
    std::size_t M = 5;
    AmpConfig amp;
    int layer = 0;  // learned detectors: 1-based output layer, 0 for the last
    std::string checkpoint;
};

// Learned detectors load spec.checkpoint and check it against (m, c).
std::unique_ptr<Detector> make_detector(const DetectorSpec& spec, const ChannelModel& m, const Constellation& c);

std::unique_ptr<Detector> make_network_detector(NetworkParams params, const Constellation& c, std::string label,
                                                int layer = 0);

bool is_learned(const std::string& detector_name);

}  // namespace mimodet
