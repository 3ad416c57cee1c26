#include "volalign/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "volalign/bench.hpp"
#include "volalign/error.hpp"
#include "volalign/mrc.hpp"
#include "volalign/pipeline.hpp"
#include "volalign/report.hpp"
#include "volalign/wemd.hpp"

namespace volalign::cli {

namespace {

using nlohmann::json;

// 0 means "pick the default for this input": 32, or the largest level of
// matching parity that fits.
int resolve_level(int requested, int side) {
    if (requested > 0)
        return requested;
    int level = std::min(32, side);
    if ((side - level) % 2 != 0)
        --level;
    return level;
}

double parse_snr(const std::string& text) {
    if (text == "inf" || text == "none")
        return kNoiseFree;
    try {
        const auto slash = text.find('/');
        std::size_t used = 0;
        double value = 0.0;
        if (slash != std::string::npos) {
            const double num = std::stod(text.substr(0, slash), &used);
            const double den = std::stod(text.substr(slash + 1));
            value = num / den;
        } else {
            value = std::stod(text, &used);
            if (used != text.size())
                throw std::invalid_argument(text);
        }
        if (!(value > 0.0))
            throw ArgumentError("SNR must be positive: " + text);
        return value;
    } catch (const std::logic_error&) {
        throw ArgumentError("cannot parse SNR '" + text + "'");
    }
}

struct AlignFlags {
    int downsample = 0;
    int refine_downsample = 0;
    int iterations = 200;
    std::string loss = "wemd";
    std::optional<double> lengthscale;
    bool no_refine = false;
    bool handedness = false;
    int wavelet_levels = 0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    int jobs = 0;
};

void add_alignment_flags(CLI::App* app, AlignFlags& f, bool single_loss) {
    app->add_option("--iters", f.iterations, "Total BO iterations T")->check(CLI::PositiveNumber);
    if (single_loss)
        app->add_option("--loss", f.loss, "BO-stage loss")->check(CLI::IsMember({"wemd", "l2"}));
    app->add_option("--lengthscale", f.lengthscale, "Kernel lengthscale (default 0.75 wemd, 1.0 l2)");
    app->add_flag("--no-refine", f.no_refine, "Skip Nelder-Mead refinement in L2");
    app->add_flag("--handedness", f.handedness, "Also search the mirrored volume");
    app->add_option("--wavelet-levels", f.wavelet_levels, "Wavelet levels (0 = default)");
    app->add_option("--threshold", f.threshold, "Center-of-mass threshold");
    app->add_option("--refine-downsample", f.refine_downsample, "Side length for refinement (0 = default)");
    app->add_option("--seed", f.seed, "Random seed")->envname("VOLALIGN_SEED");
}

AlignOptions to_options(const AlignFlags& f, int side) {
    AlignOptions o;
    o.downsample = resolve_level(f.downsample, side);
    o.refine_downsample = resolve_level(f.refine_downsample, side);
    o.iterations = f.iterations;
    o.loss = parse_loss_kind(f.loss);
    o.lengthscale = f.lengthscale;
    o.refine = !f.no_refine;
    o.handedness = f.handedness;
    o.wavelet_levels = f.wavelet_levels;
    o.threshold = f.threshold;
    o.seed = f.seed;
    return o;
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out)
        throw IoError("failed writing " + path);
}

int cmd_align(const std::string& v1_path, const std::string& v2_path, const AlignFlags& flags,
              const std::string& out_path, const std::string& truth_path, std::ostream& out) {
    const Volume v1 = load_mrc(v1_path);
    const Volume v2 = load_mrc(v2_path);
    if (v1.side() != v2.side())
        throw DimensionError("input maps differ in size: " + std::to_string(v1.side()) + " vs " +
                             std::to_string(v2.side()));
    std::optional<GroundTruth> truth;
    if (!truth_path.empty())
        truth = ground_truth_from_json(read_json(truth_path));
    const AlignmentReport report = align_volumes(v1, v2, to_options(flags, v1.side()), truth);
    const json j = report_to_json(report);
    if (out_path.empty())
        out << j.dump(2) << '\n';
    else
        write_json(j, out_path);
    return kExitOk;
}

struct SynthFlags {
    int size = 64;
    int blobs = 0;
    std::uint64_t seed = 0;
    std::string snr = "inf";
    double shift_scale = 0.05;
    bool reflect = false;
    std::optional<double> voxel_size;
    std::string out;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
    if (f.size < 4)
        throw ArgumentError("synthetic volume size must be at least 4");
    const SynthSpec spec = f.blobs > 0 ? random_synth_spec(f.size, f.blobs, f.seed) : reference_synth_spec(f.size);
    Volume reference = synth_volume(spec);
    reference.set_voxel_size(f.voxel_size);
    SyntheticOptions so;
    so.shift_scale = f.shift_scale;
    so.snr = parse_snr(f.snr);
    so.reflect = f.reflect;
    SyntheticPair pair = make_synthetic_pair(reference, so, f.seed);
    pair.v1.set_voxel_size(f.voxel_size);
    pair.v2.set_voxel_size(f.voxel_size);

    const std::string v1_path = f.out + "_v1.mrc";
    const std::string v2_path = f.out + "_v2.mrc";
    const std::string truth_path = f.out + "_truth.json";
    save_mrc(pair.v1, v1_path);
    save_mrc(pair.v2, v2_path);
    write_json(ground_truth_to_json(pair.truth, f.seed), truth_path);
    out << v1_path << '\n' << v2_path << '\n' << truth_path << '\n';
    return kExitOk;
}

int cmd_distance(const std::string& v1_path, const std::string& v2_path, const std::string& loss,
                 int wavelet_levels, std::ostream& out) {
    const Volume v1 = load_mrc(v1_path);
    const Volume v2 = load_mrc(v2_path);
    if (v1.side() != v2.side())
        throw DimensionError("input maps differ in size: " + std::to_string(v1.side()) + " vs " +
                             std::to_string(v2.side()));
    double d = 0.0;
    if (parse_loss_kind(loss) == LossKind::Wemd) {
        const int levels = wavelet_levels > 0 ? wavelet_levels : default_wavelet_levels(v1.side());
        d = wemd_distance(v1, v2, levels);
    } else {
        d = l2_distance(v1, v2);
    }
    out << std::setprecision(12) << d << '\n';
    return kExitOk;
}

struct BenchFlags {
    AlignFlags align;
    int size = 64;
    int blobs = 0;
    std::vector<int> downsample{32};
    std::vector<int> iterations{200};
    std::vector<std::string> losses{"wemd"};
    std::vector<std::string> snrs{"inf"};
    int trials = 50;
    double shift_scale = 0.05;
    bool reflect = false;
    bool landscape = false;
    bool timing = false;
    std::string out = "bench";
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
    BenchConfig cfg;
    cfg.side = f.size;
    cfg.blobs = f.blobs;
    cfg.downsample = f.downsample;
    cfg.iterations = f.iterations;
    cfg.losses.clear();
    for (const auto& l : f.losses)
        cfg.losses.push_back(parse_loss_kind(l));
    cfg.snrs.clear();
    for (const auto& s : f.snrs)
        cfg.snrs.push_back(parse_snr(s));
    cfg.trials = f.trials;
    cfg.jobs = f.align.jobs > 0 ? f.align.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cfg.seed = f.align.seed;
    cfg.shift_scale = f.shift_scale;
    cfg.refine = !f.align.no_refine;
    cfg.handedness = f.align.handedness;
    cfg.reflect = f.reflect;
    cfg.threshold = f.align.threshold;
    cfg.wavelet_levels = f.align.wavelet_levels;
    cfg.lengthscale = f.align.lengthscale;

    const std::vector<BenchRow> rows = run_bench(cfg);
    write_text(bench_csv(rows), f.out + ".csv");

    json summary;
    summary["cells"] = bench_summary(rows);
    summary["trials"] = cfg.trials;
    summary["seed"] = cfg.seed;
    if (f.landscape || f.timing) {
        const Volume reference = synth_volume(cfg.blobs > 0 ? random_synth_spec(cfg.side, cfg.blobs, cfg.seed)
                                                            : reference_synth_spec(cfg.side));
        if (f.landscape) {
            const int side = resolve_level(f.downsample.front(), cfg.side);
            const Volume working = downsample(reference, side);
            const Landscape w = loss_landscape(working, LossKind::Wemd);
            const Landscape l2 = loss_landscape(working, LossKind::L2);
            summary["landscape"] = {{"grid", w.grid},
                                    {"side", side},
                                    {"wemd_basin_size", w.basin_size},
                                    {"l2_basin_size", l2.basin_size},
                                    {"wemd_values", w.values},
                                    {"l2_values", l2.values}};
        }
        if (f.timing) {
            json timing = json::array();
            for (int side : {32, 64}) {
                if (side > cfg.side || (cfg.side - side) % 2 != 0)
                    continue;
                timing.push_back({{"L0", side},
                                  {"median_wemd_seconds", median_loss_seconds(reference, side, LossKind::Wemd, 20, cfg.seed)}});
            }
            summary["timing"] = timing;
        }
    }
    write_json(summary, f.out + "_summary.json");

    const auto failed = std::count_if(rows.begin(), rows.end(), [](const BenchRow& r) { return r.status != "ok"; });
    out << rows.size() << " trials, " << failed << " failed; wrote " << f.out << ".csv and " << f.out
        << "_summary.json\n";
    return failed == static_cast<long>(rows.size()) ? kExitNumericalError : kExitOk;
}

// Expands `--config FILE` into flags placed ahead of the command-line ones.
// Keys already given explicitly are skipped so the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw ArgumentError("--config needs a file");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty() || rest.size() < 2)
        return rest;
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path);
    auto explicit_key = [&](const std::string& key) {
        const std::string flag = "--" + key;
        return std::any_of(rest.begin(), rest.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        const auto e = t.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
    };
    std::vector<std::string> injected;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError(path + ":" + std::to_string(number) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (explicit_key(key))
            continue;
        if (value == "true")
            injected.push_back("--" + key);
        else if (value != "false")
            injected.push_back("--" + key + "=" + value);
    }
    std::vector<std::string> out{rest[0], rest[1]};
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin() + 2, rest.end());
    return out;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rigid alignment of 3D density maps by Bayesian optimization over SO(3)", "volalign"};
    app.require_subcommand(1);
    std::string config_path;

    std::string v1_path;
    std::string v2_path;
    std::string out_path;
    std::string truth_path;
    AlignFlags align_flags;
    auto* align = app.add_subcommand("align", "Align two MRC maps and write a JSON report");
    align->add_option("--config", config_path, "key=value file mirroring the flags");
    align->add_option("v1", v1_path, "Map to rotate (MRC)")->required();
    align->add_option("v2", v2_path, "Reference map (MRC)")->required();
    align->add_option("--downsample", align_flags.downsample, "Working side length L0 (default 32)");
    align->add_option("--out", out_path, "Report path (default: stdout)");
    align->add_option("--truth", truth_path, "Ground-truth JSON from `synth`, adds error fields");
    add_alignment_flags(align, align_flags, true);

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "Write a synthetic map pair and its ground truth");
    synth->add_option("--config", config_path, "key=value file mirroring the flags");
    synth->add_option("--size", synth_flags.size, "Side length L");
    synth->add_option("--blobs", synth_flags.blobs, "Random blob count (0 = reference volume)");
    synth->add_option("--seed", synth_flags.seed, "Random seed")->envname("VOLALIGN_SEED");
    synth->add_option("--snr", synth_flags.snr, "Signal-to-noise ratio (inf = noiseless)");
    synth->add_option("--shift-scale", synth_flags.shift_scale, "Shift bound as a fraction of L");
    synth->add_flag("--reflect", synth_flags.reflect, "Mirror the first map before rotating");
    synth->add_option("--voxel-size", synth_flags.voxel_size, "Voxel size written to the header");
    synth->add_option("--out", synth_flags.out, "Output prefix")->required();

    std::string dist_loss = "wemd";
    int dist_levels = 0;
    auto* distance = app.add_subcommand("distance", "Print the distance between two maps");
    distance->add_option("--config", config_path, "key=value file mirroring the flags");
    distance->add_option("v1", v1_path, "First map (MRC)")->required();
    distance->add_option("v2", v2_path, "Second map (MRC)")->required();
    distance->add_option("--loss", dist_loss, "Distance kind")->check(CLI::IsMember({"wemd", "l2"}));
    distance->add_option("--wavelet-levels", dist_levels, "Wavelet levels (0 = default)");

    BenchFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "Run repeated synthetic alignment trials");
    bench->add_option("--config", config_path, "key=value file mirroring the flags");
    bench->add_option("--size", bench_flags.size, "Side length of the synthetic volume");
    bench->add_option("--blobs", bench_flags.blobs, "Random blob count (0 = reference volume)");
    bench->add_option("--downsample", bench_flags.downsample, "Working side lengths")->delimiter(',');
    bench->add_option("--loss", bench_flags.losses, "BO-stage losses")->delimiter(',');
    bench->add_option("--snr", bench_flags.snrs, "SNR levels (inf = noiseless, 1/8 accepted)")->delimiter(',');
    bench->add_option("--trials", bench_flags.trials, "Trials per cell");
    bench->add_option("--jobs", bench_flags.align.jobs, "Worker threads (default: all cores)");
    bench->add_option("--shift-scale", bench_flags.shift_scale, "Shift bound as a fraction of L");
    bench->add_flag("--reflect", bench_flags.reflect, "Mirror the moving map in every trial");
    bench->add_flag("--landscape", bench_flags.landscape, "Add the (beta, gamma) loss landscapes");
    bench->add_flag("--timing", bench_flags.timing, "Add loss-evaluation timings at L0 = 32 and 64");
    bench->add_option("--out", bench_flags.out, "Output prefix for CSV and summary JSON");
    add_alignment_flags(bench, bench_flags.align, false);
    bench->remove_option(bench->get_option("--iters"));
    bench->add_option("--iters", bench_flags.iterations, "BO iteration counts")->delimiter(',');

    std::vector<std::string> expanded;
    try {
        expanded = expand_config(args);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    std::vector<const char*> argv;
    for (const auto& a : expanded)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (align->parsed())
            return cmd_align(v1_path, v2_path, align_flags, out_path, truth_path, out);
        if (synth->parsed())
            return cmd_synth(synth_flags, out);
        if (distance->parsed())
            return cmd_distance(v1_path, v2_path, dist_loss, dist_levels, out);
        if (bench->parsed())
            return cmd_bench(bench_flags, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.category() == Error::Category::Input ? kExitInputError : kExitNumericalError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumericalError;
    }
    return kExitInputError;
}

} // namespace volalign::cli
