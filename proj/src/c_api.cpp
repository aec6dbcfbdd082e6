#include "mimodet/mimodet.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "json.hpp"
#include "mimodet/checkpoint.hpp"
#include "mimodet/detector.hpp"
#include "mimodet/error.hpp"
#include "mimodet/experiment.hpp"

struct mimodet_detector {
    mimodet::ChannelModel model;
    mimodet::Constellation constellation;
    std::unique_ptr<mimodet::Detector> impl;
};

namespace {

thread_local std::string last_error;

mimodet_status status_of(mimodet::ErrorKind k) {
    switch (k) {
        case mimodet::ErrorKind::Config: return MIMODET_ERR_CONFIG;
        case mimodet::ErrorKind::Domain: return MIMODET_ERR_DOMAIN;
        case mimodet::ErrorKind::Numerical: return MIMODET_ERR_NUMERICAL;
        case mimodet::ErrorKind::Refusal: return MIMODET_ERR_REFUSED;
        case mimodet::ErrorKind::Integrity: return MIMODET_ERR_INTEGRITY;
        case mimodet::ErrorKind::Io: return MIMODET_ERR_IO;
    }
    return MIMODET_ERR_INTERNAL;
}

template <class Fn>
mimodet_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        return fn();
    } catch (const mimodet::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        last_error = e.what();
        return MIMODET_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return MIMODET_ERR_INTERNAL;
    }
}

mimodet_status argument_error(const char* what) {
    last_error = what;
    return MIMODET_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* mimodet_version(void) { return "0.1.0"; }

const char* mimodet_last_error(void) { return last_error.c_str(); }

const char* mimodet_status_name(mimodet_status status) {
    switch (status) {
        case MIMODET_OK: return "ok";
        case MIMODET_ERR_CONFIG: return "configuration error";
        case MIMODET_ERR_DOMAIN: return "domain error";
        case MIMODET_ERR_NUMERICAL: return "numerical error";
        case MIMODET_ERR_REFUSED: return "refused";
        case MIMODET_ERR_INTEGRITY: return "integrity error";
        case MIMODET_ERR_IO: return "i/o error";
        case MIMODET_ERR_ARGUMENT: return "invalid argument";
        case MIMODET_ERR_BUFFER: return "buffer too small";
        case MIMODET_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

mimodet_status mimodet_run_config(const char* config_path, int force, const char* output_root,
                                  mimodet_line_fn on_line, void* user) {
    if (!config_path) return argument_error("config_path is null");
    return guarded([&] {
        const mimodet::ExperimentConfig cfg = mimodet::load_experiment(config_path);
        mimodet::RunOptions opt;
        opt.force = force != 0;
        if (output_root) opt.output_root = output_root;
        mimodet::run_experiment(cfg, opt, [&](const std::string& line) {
            if (on_line) on_line(line.c_str(), user);
        });
        return MIMODET_OK;
    });
}

mimodet_status mimodet_describe_checkpoint(const char* path, char* buf, size_t cap, size_t* needed) {
    if (!path) return argument_error("path is null");
    return guarded([&] {
        const std::string text = mimodet::describe_checkpoint(path);
        if (needed) *needed = text.size() + 1;
        if (!buf || cap < text.size() + 1) {
            last_error = "buffer holds " + std::to_string(cap) + " bytes, description needs " +
                         std::to_string(text.size() + 1);
            return MIMODET_ERR_BUFFER;
        }
        std::memcpy(buf, text.c_str(), text.size() + 1);
        return MIMODET_OK;
    });
}

mimodet_status mimodet_detector_create(const char* spec_json, mimodet_detector** out) {
    if (!spec_json || !out) return argument_error("spec_json and out must be non-null");
    *out = nullptr;
    return guarded([&] {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(spec_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw mimodet::ConfigError(std::string("detector spec: invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw mimodet::ConfigError("detector spec: expected an object");
        static const char* allowed[] = {"name", "constellation", "K", "N", "complex", "M", "checkpoint", "layer"};
        for (const auto& [key, value] : j.items()) {
            if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* a) { return key == a; }) ==
                std::end(allowed))
                throw mimodet::ConfigError(key + ": unknown field");
        }
        for (const char* key : {"name", "constellation", "K", "N"})
            if (!j.contains(key)) throw mimodet::ConfigError(std::string(key) + ": required field is missing");
        try {
            auto det = std::make_unique<mimodet_detector>();
            det->constellation = mimodet::constellation_from_name(j.at("constellation").get<std::string>());
            det->model.K = j.at("K").get<int>();
            det->model.N = j.at("N").get<int>();
            det->model.is_complex = j.value("complex", det->constellation.is_complex);
            det->model.validate();
            mimodet::DetectorSpec spec;
            spec.name = j.at("name").get<std::string>();
            spec.M = j.value("M", std::size_t{5});
            spec.checkpoint = j.value("checkpoint", std::string{});
            spec.layer = j.value("layer", 0);
            det->impl = mimodet::make_detector(spec, det->model, det->constellation);
            *out = det.release();
        } catch (const nlohmann::json::exception& e) {
            throw mimodet::ConfigError(std::string("detector spec: ") + e.what());
        }
        return MIMODET_OK;
    });
}

void mimodet_detector_destroy(mimodet_detector* det) { delete det; }

mimodet_status mimodet_detector_dims(const mimodet_detector* det, size_t* rows, size_t* cols) {
    if (!det || !rows || !cols) return argument_error("det, rows and cols must be non-null");
    *rows = static_cast<size_t>(det->model.rows());
    *cols = static_cast<size_t>(det->model.cols());
    last_error.clear();
    return MIMODET_OK;
}

mimodet_status mimodet_detector_detect(const mimodet_detector* det, size_t count, const double* H, const double* y,
                                       const double* sigma2, double* x_out) {
    if (!det || (count > 0 && (!H || !y || !x_out))) return argument_error("det, H, y and x_out must be non-null");
    if (count == 0) return MIMODET_OK;
    return guarded([&] {
        const Eigen::Index rows = det->model.rows();
        const Eigen::Index cols = det->model.cols();
        std::vector<mimodet::Sample> samples(count);
        for (size_t i = 0; i < count; ++i) {
            mimodet::Sample& s = samples[i];
            s.H = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                H + i * static_cast<size_t>(rows * cols), rows, cols);
            s.y = Eigen::Map<const mimodet::Vec>(y + i * static_cast<size_t>(rows), rows);
            s.sigma2 = sigma2 ? sigma2[i] : std::numeric_limits<double>::quiet_NaN();
        }
        const auto outs = det->impl->detect(samples);
        for (size_t i = 0; i < count; ++i) {
            double* dst = x_out + i * static_cast<size_t>(cols);
            if (outs[i].hard.size() == cols) {
                std::copy(outs[i].hard.data(), outs[i].hard.data() + cols, dst);
            } else {
                std::fill(dst, dst + cols, std::numeric_limits<double>::quiet_NaN());
            }
        }
        return MIMODET_OK;
    });
}

}  // extern "C"
