#include "mimodet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mimodet/baselines.hpp"
#include "mimodet/checkpoint.hpp"
#include "mimodet/error.hpp"

namespace mimodet {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::Train: return "train";
        case Mode::Curve: return "curve";
        case Mode::SoftCurve: return "soft-curve";
        case Mode::Bench: return "bench";
        case Mode::OracleCheck: return "oracle-check";
    }
    return "?";
}

namespace {

Mode mode_from_name(const std::string& s) {
    for (Mode m : {Mode::Train, Mode::Curve, Mode::SoftCurve, Mode::Bench, Mode::OracleCheck})
        if (mode_name(m) == s) return m;
    throw ConfigError("mode: unknown mode \"" + s + "\" (train, curve, soft-curve, bench, oracle-check)");
}

template <class T>
T convert(const json& v, const std::string& field);

template <>
bool convert<bool>(const json& v, const std::string& field) {
    if (!v.is_boolean()) throw ConfigError(field + ": expected true or false");
    return v.get<bool>();
}

template <>
double convert<double>(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field + ": expected a number");
    return v.get<double>();
}

template <>
long convert<long>(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ConfigError(field + ": expected an integer");
    return v.get<long>();
}

template <>
int convert<int>(const json& v, const std::string& field) {
    const long x = convert<long>(v, field);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(field + ": out of range");
    return static_cast<int>(x);
}

template <>
std::size_t convert<std::size_t>(const json& v, const std::string& field) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(field + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

template <>
std::string convert<std::string>(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field + ": expected a string");
    return v.get<std::string>();
}

template <class T>
std::vector<T> convert_list(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field + ": expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<T>(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

// Reads the fields of one JSON object and rejects any it did not read.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <class T>
    void read(const std::string& key, T& dst) {
        if (has(key)) dst = convert<T>(raw(key), name(key));
    }

    template <class T>
    void read_list(const std::string& key, std::vector<T>& dst) {
        if (has(key)) dst = convert_list<T>(raw(key), name(key));
    }

    template <class T>
    T need(const std::string& key) {
        if (!has(key)) throw ConfigError(name(key) + ": required field is missing");
        return convert<T>(raw(key), name(key));
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError(name(key) + ": unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_channel(Fields f, ChannelModel& m) {
    if (f.has("regime")) {
        const std::string r = convert<std::string>(f.raw("regime"), f.name("regime"));
        if (r == "VC") m.regime = Regime::Varying;
        else if (r == "FC") m.regime = Regime::Fixed;
        else throw ConfigError(f.name("regime") + ": expected \"VC\" or \"FC\", got \"" + r + "\"");
    }
    if (f.has("distribution")) {
        const std::string d = convert<std::string>(f.raw("distribution"), f.name("distribution"));
        if (d == "iid_gaussian") m.distribution = ChannelDistribution::IidGaussian;
        else if (d == "alpha_toeplitz") m.distribution = ChannelDistribution::AlphaToeplitz;
        else throw ConfigError(f.name("distribution") + ": expected \"iid_gaussian\" or \"alpha_toeplitz\", got \"" + d + "\"");
    }
    f.read("alpha", m.alpha);
    m.K = f.need<int>("K");
    m.N = f.need<int>("N");
    f.read("complex", m.is_complex);
    f.read("fixed_seed", m.fixed_seed);
    f.finish();
}

std::pair<double, double> default_train_snr(ConstellationKind k) {
    switch (k) {
        case ConstellationKind::Bpsk: return {7.0, 14.0};
        case ConstellationKind::Qpsk: return {8.0, 15.0};
        default: return {15.0, 25.0};
    }
}

void parse_train(Fields f, TrainConfig& t, std::string& resume) {
    if (f.has("architecture"))
        t.architecture = architecture_from_name(convert<std::string>(f.raw("architecture"), f.name("architecture")));
    f.read("snr_min_db", t.snr_min_db);
    f.read("snr_max_db", t.snr_max_db);
    f.read("batch_size", t.batch_size);
    f.read("iterations", t.iterations);
    f.read("lr", t.adam.lr);
    f.read("beta1", t.adam.beta1);
    f.read("beta2", t.adam.beta2);
    f.read("epsilon", t.adam.epsilon);
    f.read("checkpoint_every", t.checkpoint_every);
    f.read("log_every", t.log_every);
    f.read("layers", t.layers);
    f.read_list("widths", t.widths);
    f.read("z_width", t.z_width);
    f.read("v_width", t.v_width);
    f.read("eta", t.eta);
    if (f.has("loss_weighting")) {
        const std::string w = convert<std::string>(f.raw("loss_weighting"), f.name("loss_weighting"));
        if (w == "log") t.loss_weighting = LossWeighting::Log;
        else if (w == "log_plus_one") t.loss_weighting = LossWeighting::LogPlusOne;
        else throw ConfigError(f.name("loss_weighting") + ": expected \"log\" or \"log_plus_one\"");
    }
    f.read("lr_decay", t.lr_decay);
    if (f.has("val_snr_db")) t.val_snr_db = convert<double>(f.raw("val_snr_db"), f.name("val_snr_db"));
    f.read("val_trials", t.val_trials);
    f.read("resume", resume);
    f.finish();
}

DetectorSpec parse_detector(Fields f) {
    DetectorSpec d;
    d.name = f.need<std::string>("name");
    static const std::set<std::string> known{"zf", "ml", "exact", "amp", "sd", "mbest", "detnet", "fullycon"};
    if (!known.count(d.name)) throw ConfigError(f.name("name") + ": unknown detector \"" + d.name + "\"");
    f.read("label", d.label);
    f.read("M", d.M);
    f.read("checkpoint", d.checkpoint);
    f.read("layer", d.layer);
    f.read("amp_iterations", d.amp.iterations);
    f.read("amp_damping", d.amp.damping);
    f.finish();
    if (d.M < 1) throw ConfigError(f.name("M") + ": must be at least 1");
    if (d.name != "mbest" && f.has("M")) throw ConfigError(f.name("M") + ": only applies to mbest");
    if (!is_learned(d.name) && (f.has("checkpoint") || f.has("layer")))
        throw ConfigError(f.name(f.has("checkpoint") ? "checkpoint" : "layer") + ": only applies to learned detectors");
    if (is_learned(d.name) && d.checkpoint.empty())
        throw ConfigError(f.name("checkpoint") + ": learned detector " + d.name + " needs a checkpoint");
    if (d.name != "amp" && (f.has("amp_iterations") || f.has("amp_damping")))
        throw ConfigError(f.name("amp_iterations") + ": only applies to amp");
    return d;
}

bool filesystem_safe(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    });
}

std::string hex64(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void require_section(const std::string& section, Mode mode, std::initializer_list<Mode> allowed) {
    if (std::find(allowed.begin(), allowed.end(), mode) == allowed.end())
        throw ConfigError(section + ": not used by mode " + mode_name(mode));
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    Fields f(j, "");
    cfg.experiment_id = f.need<std::string>("experiment_id");
    if (!filesystem_safe(cfg.experiment_id))
        throw ConfigError("experiment_id: must be nonempty and use only letters, digits, '-', '_' and '.'");
    cfg.mode = mode_from_name(f.need<std::string>("mode"));
    f.read("output_dir", cfg.output_dir);
    f.read("seed", cfg.seed);
    f.read("workers", cfg.workers);
    if (cfg.workers < 0) throw ConfigError("workers: must be non-negative");
    f.read("constellation", cfg.constellation);
    const Constellation c = constellation_from_name(cfg.constellation);
    cfg.channel.is_complex = c.is_complex;
    if (!f.has("channel")) throw ConfigError("channel: required section is missing");
    parse_channel(Fields(f.raw("channel"), "channel"), cfg.channel);
    cfg.channel.validate();
    if (cfg.channel.is_complex != c.is_complex)
        throw ConfigError("channel.complex: constellation " + cfg.constellation + " needs " +
                          (c.is_complex ? "a complex" : "a real") + " channel");

    const auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
        return (base_dir / p).string();
    };

    std::tie(cfg.train.snr_min_db, cfg.train.snr_max_db) = default_train_snr(c.kind);
    if (f.has("train")) {
        require_section("train", cfg.mode, {Mode::Train});
        parse_train(Fields(f.raw("train"), "train"), cfg.train, cfg.resume);
        cfg.resume = resolve(cfg.resume);
    }
    cfg.train.channel = cfg.channel;
    cfg.train.constellation = cfg.constellation;
    cfg.train.seed = cfg.seed;
    if (cfg.mode == Mode::Train) cfg.train.validate();

    if (f.has("detectors")) {
        require_section("detectors", cfg.mode, {Mode::Curve, Mode::SoftCurve, Mode::Bench});
        const json& list = f.raw("detectors");
        if (!list.is_array()) throw ConfigError("detectors: expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            DetectorSpec d = parse_detector(Fields(list[i], "detectors[" + std::to_string(i) + "]"));
            d.checkpoint = resolve(d.checkpoint);
            cfg.detectors.push_back(std::move(d));
        }
    }
    if ((cfg.mode == Mode::Curve || cfg.mode == Mode::SoftCurve || cfg.mode == Mode::Bench) && cfg.detectors.empty())
        throw ConfigError("detectors: mode " + mode_name(cfg.mode) + " needs at least one detector");

    if (f.has("curve")) {
        require_section("curve", cfg.mode, {Mode::Curve, Mode::SoftCurve});
        Fields cf(f.raw("curve"), "curve");
        if (!cf.has("snr_db")) throw ConfigError("curve.snr_db: required field is missing");
        cf.read_list("snr_db", cfg.snr_db);
        if (cfg.snr_db.empty()) throw ConfigError("curve.snr_db: must not be empty");
        cf.read("trials", cfg.trials);
        if (cf.has("rate")) {
            const std::string r = convert<std::string>(cf.raw("rate"), cf.name("rate"));
            if (r == "ber") cfg.rate = RateMode::Ber;
            else if (r == "ser") cfg.rate = RateMode::Ser;
            else throw ConfigError("curve.rate: expected \"ber\" or \"ser\"");
        }
        cf.read("chunk", cfg.chunk);
        cf.read("per_layer", cfg.per_layer);
        cf.finish();
        if (cfg.trials < 1) throw ConfigError("curve.trials: must be at least 1");
        if (cfg.chunk < 1) throw ConfigError("curve.chunk: must be at least 1");
    } else if (cfg.mode == Mode::Curve || cfg.mode == Mode::SoftCurve) {
        throw ConfigError("curve: required section is missing");
    }
    if (cfg.rate == RateMode::Ber && c.bits_per_real_symbol == 0)
        throw ConfigError("curve.rate: BER is undefined for " + cfg.constellation);

    if (f.has("bench")) {
        require_section("bench", cfg.mode, {Mode::Bench});
        Fields bf(f.raw("bench"), "bench");
        bf.read_list("batch_sizes", cfg.bench.batch_sizes);
        bf.read("repetitions", cfg.bench.repetitions);
        bf.read("warmup", cfg.bench.warmup);
        bf.read("snr_min_db", cfg.bench.snr_min_db);
        bf.read("snr_max_db", cfg.bench.snr_max_db);
        bf.finish();
        if (cfg.bench.batch_sizes.empty() ||
            std::any_of(cfg.bench.batch_sizes.begin(), cfg.bench.batch_sizes.end(), [](std::size_t b) { return b == 0; }))
            throw ConfigError("bench.batch_sizes: expected positive batch sizes");
        if (cfg.bench.repetitions < 1) throw ConfigError("bench.repetitions: must be at least 1");
        if (cfg.bench.warmup < 0) throw ConfigError("bench.warmup: must be non-negative");
        if (!(cfg.bench.snr_min_db <= cfg.bench.snr_max_db))
            throw ConfigError("bench.snr_min_db: must not exceed bench.snr_max_db");
    }
    cfg.bench.seed = cfg.seed;

    if (f.has("oracle")) {
        require_section("oracle", cfg.mode, {Mode::OracleCheck});
        Fields of(f.raw("oracle"), "oracle");
        of.read("trials", cfg.oracle.trials);
        of.read_list("snr_db", cfg.oracle.snr_db);
        of.finish();
        if (cfg.oracle.trials < 1) throw ConfigError("oracle.trials: must be at least 1");
        if (cfg.oracle.snr_db.empty()) throw ConfigError("oracle.snr_db: must not be empty");
    }
    f.finish();

    cfg.canonical_json = j.dump();
    cfg.config_hash = hex64(fnv1a64(cfg.canonical_json.data(), cfg.canonical_json.size()));
    cfg.train.config_hash = cfg.config_hash;
    return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str(), path.parent_path());
}

namespace {

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    body(os);
    if (!os) throw IoError("write failed: " + path.string());
}

fs::path prepare_directory(const ExperimentConfig& cfg, const RunOptions& opt) {
    fs::path root = cfg.output_dir;
    if (const char* env = std::getenv(kOutputRootEnv); env && *env) root = env;
    if (opt.output_root) root = *opt.output_root;
    const fs::path dir = root / cfg.experiment_id;
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_empty(dir, ec) && !opt.force)
        throw RefusalError("output directory " + dir.string() + " already holds results; pass --force to overwrite");
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

std::vector<std::string> header(const ExperimentConfig& cfg) {
    return {"experiment: " + cfg.experiment_id,
            "mode: " + mode_name(cfg.mode),
            "config_hash: " + cfg.config_hash,
            "seed: " + std::to_string(cfg.seed),
            "constellation: " + cfg.constellation,
            "channel: " + cfg.channel.describe()};
}

int curve_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string curve_line(const EvalRecord& r, RateMode mode) {
    std::ostringstream os;
    os << r.detector;
    if (r.layer) os << " layer=" << *r.layer;
    os << " snr_db=" << fmt(r.snr_db);
    if (r.mean_delta) {
        os << " mean_delta=" << fmt(*r.mean_delta);
    } else {
        os << ' ' << rate_mode_name(mode) << '=' << fmt(r.rate) << " (" << r.errors << '/' << r.denominator << ")"
           << " stderr=" << fmt(r.stderr_rate, 3);
    }
    if (r.skipped) os << " skipped=" << r.skipped;
    return os.str();
}

void run_train(const ExperimentConfig& cfg, const std::optional<Checkpoint>& resume, const fs::path& dir,
               const LineSink& out) {
    TrainConfig tc = cfg.train;
    tc.checkpoint_path = (dir / (cfg.experiment_id + ".ckpt")).string();
    const TrainResult r = train(tc, resume, [&](const TrainLogRow& row) {
        std::ostringstream os;
        os << "iteration=" << row.iteration << " loss=" << fmt(row.loss) << " val_"
           << (constellation_from_name(tc.constellation).bits_per_real_symbol > 0 ? "ber" : "ser") << '='
           << fmt(row.val_ber) << " seconds=" << fmt(row.seconds, 4);
        out(os.str());
    });
    write_file(dir / (cfg.experiment_id + ".csv"), [&](std::ostream& os) { write_train_log_csv(os, r.log, header(cfg)); });
    out("checkpoint: " + tc.checkpoint_path);
}

std::vector<std::unique_ptr<Detector>> build_detectors(const ExperimentConfig& cfg, const Constellation& c) {
    std::vector<std::unique_ptr<Detector>> out;
    for (const DetectorSpec& spec : cfg.detectors) out.push_back(make_detector(spec, cfg.channel, c));
    return out;
}

std::vector<const Detector*> raw(const std::vector<std::unique_ptr<Detector>>& v) {
    std::vector<const Detector*> out;
    for (const auto& d : v) out.push_back(d.get());
    return out;
}

void run_curve(const ExperimentConfig& cfg, const std::vector<std::unique_ptr<Detector>>& detectors,
               const fs::path& dir, const LineSink& out, bool soft) {
    const Constellation c = constellation_from_name(cfg.constellation);
    CurveOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.seed;
    opt.mode = cfg.rate.value_or(default_rate_mode(c));
    opt.workers = curve_workers(cfg);
    opt.chunk = cfg.chunk;

    std::vector<EvalRecord> rows;
    if (soft) {
        rows = soft_distance_curve(raw(detectors), cfg.channel, c, cfg.snr_db, opt);
    } else {
        rows = accuracy_curve(raw(detectors), cfg.channel, c, cfg.snr_db, opt);
        if (cfg.per_layer) {
            for (const DetectorSpec& spec : cfg.detectors) {
                if (spec.name != "detnet") continue;
                const Checkpoint ck = load_checkpoint(spec.checkpoint);
                const std::string label = spec.label.empty() ? spec.name : spec.label;
                const auto layers = layer_curve(std::get<DetNetParams>(ck.params), label, cfg.channel, c, cfg.snr_db, opt);
                rows.insert(rows.end(), layers.begin(), layers.end());
            }
        }
    }
    for (const EvalRecord& r : rows) out(curve_line(r, opt.mode));
    write_file(dir / (cfg.experiment_id + ".csv"), [&](std::ostream& os) { write_curve_csv(os, rows, header(cfg)); });
}

void run_bench(const ExperimentConfig& cfg, const std::vector<std::unique_ptr<Detector>>& detectors,
               const fs::path& dir, const LineSink& out) {
    const Constellation c = constellation_from_name(cfg.constellation);
    const auto rows = runtime_bench(raw(detectors), cfg.channel, c, cfg.bench);
    for (const BenchRecord& r : rows) {
        std::ostringstream os;
        os << r.detector << " batch=" << r.batch << " mean_s=" << fmt(r.mean_s, 4) << " min_s=" << fmt(r.min_s, 4)
           << " max_s=" << fmt(r.max_s, 4);
        out(os.str());
    }
    write_file(dir / (cfg.experiment_id + ".csv"), [&](std::ostream& os) { write_bench_csv(os, rows, header(cfg)); });
}

void run_oracle(const ExperimentConfig& cfg, const fs::path& dir, const LineSink& out) {
    const Constellation c = constellation_from_name(cfg.constellation);
    const ChannelSource source(cfg.channel);
    const double space = std::pow(static_cast<double>(c.size()), static_cast<double>(cfg.channel.cols()));
    const bool check_soft = space <= 4096.0;
    const std::size_t full = static_cast<std::size_t>(space);

    struct Row {
        std::string check;
        double snr;
        std::size_t agree = 0, total = 0;
    };
    std::vector<Row> rows;
    for (double snr : cfg.oracle.snr_db) {
        rows.push_back({"sd==ml", snr});
        if (check_soft) rows.push_back({"mbest==exact", snr});
    }
    std::size_t sd_agree = 0, soft_agree = 0;
    double worst_gap = 0.0;
    RngStream rng(cfg.seed, 0);
    const std::size_t stride = check_soft ? 2 : 1;
    for (std::size_t t = 0; t < cfg.oracle.trials; ++t) {
        const std::size_t point = t % cfg.oracle.snr_db.size();
        const double snr = cfg.oracle.snr_db[point];
        const Sample s = sample_problem(source, c, snr, snr, rng);
        Row& sd_row = rows[point * stride];
        const bool same = sphere_decode(s.H, s.y, c).hard == ml_detect_exhaustive(s.H, s.y, c).hard;
        sd_row.agree += same;
        ++sd_row.total;
        sd_agree += same;
        if (check_soft) {
            const Mat a = *mbest_soft(s.H, s.y, s.sigma2, c, full).posteriors;
            const Mat b = *exact_posteriors(s.H, s.y, s.sigma2, c).posteriors;
            const double gap = (a - b).cwiseAbs().maxCoeff();
            worst_gap = std::max(worst_gap, gap);
            Row& soft_row = rows[point * stride + 1];
            soft_row.agree += gap <= 1e-9;
            ++soft_row.total;
            soft_agree += gap <= 1e-9;
        }
    }
    out("sd==ml: " + std::to_string(sd_agree) + "/" + std::to_string(cfg.oracle.trials));
    if (check_soft)
        out("mbest==exact: " + std::to_string(soft_agree) + "/" + std::to_string(cfg.oracle.trials) +
            " (max gap " + fmt(worst_gap, 3) + ")");
    write_file(dir / (cfg.experiment_id + ".csv"), [&](std::ostream& os) {
        for (const std::string& line : header(cfg)) os << "# " << line << '\n';
        os << "check,snr_db,agree,total\n";
        for (const Row& r : rows) os << r.check << ',' << fmt(r.snr) << ',' << r.agree << ',' << r.total << '\n';
    });
    if (sd_agree != cfg.oracle.trials || (check_soft && soft_agree != cfg.oracle.trials))
        throw NumericalError("oracle-check: detectors disagree with their oracles");
}

}  // namespace

fs::path run_experiment(const ExperimentConfig& cfg, const RunOptions& opt, const LineSink& out) {
    const LineSink emit = out ? out : [](const std::string&) {};
    const Constellation c = constellation_from_name(cfg.constellation);
    std::vector<std::unique_ptr<Detector>> detectors;
    if (cfg.mode == Mode::Curve || cfg.mode == Mode::SoftCurve || cfg.mode == Mode::Bench)
        detectors = build_detectors(cfg, c);
    std::optional<Checkpoint> resume;
    if (cfg.mode == Mode::Train && !cfg.resume.empty()) {
        resume = load_checkpoint(cfg.resume);
        require_compatible(resume->meta, cfg.channel, c);
    }

    const fs::path dir = prepare_directory(cfg, opt);
    write_file(dir / "config.json", [&](std::ostream& os) { os << json::parse(cfg.canonical_json).dump(2) << '\n'; });
    switch (cfg.mode) {
        case Mode::Train: run_train(cfg, resume, dir, emit); break;
        case Mode::Curve: run_curve(cfg, detectors, dir, emit, false); break;
        case Mode::SoftCurve: run_curve(cfg, detectors, dir, emit, true); break;
        case Mode::Bench: run_bench(cfg, detectors, dir, emit); break;
        case Mode::OracleCheck: run_oracle(cfg, dir, emit); break;
    }
    emit("artifacts: " + dir.string());
    return dir;
}

}  // namespace mimodet
