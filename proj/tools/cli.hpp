// Experiment runner behind the `crssc` executable. Kept in a header so the
// tests can drive it in-process through cli_main().
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crssc/csv.hpp"
#include "crssc/metrics.hpp"
#include "crssc/noisegen.hpp"
#include "crssc/trainer.hpp"

namespace crssc::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

// Bad value or key; the message starts with the key name.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { Generate, TrainBaseline, TrainCrssc, Compare };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::Generate: return "generate";
        case Mode::TrainBaseline: return "train-baseline";
        case Mode::TrainCrssc: return "train-crssc";
        case Mode::Compare: return "compare";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::Generate, Mode::TrainBaseline, Mode::TrainCrssc, Mode::Compare})
        if (s == to_string(m)) return m;
    throw ValidationError("mode: expected generate, train-baseline, train-crssc or compare, got '" +
                          std::string(s) + "'");
}

struct ExperimentSpec {
    Mode mode = Mode::Compare;
    NoiseConfig noise;
    TrainConfig train;
    std::string dataset;  // empty: generate from `noise`
    std::string testset;
    std::size_t max_lag = 5;
    // Keys given explicitly by a config file or flag.
    std::set<std::string> explicit_keys;
};

namespace detail {

template <typename T>
T parse_value(const std::string& key, std::string_view text) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(key + ": cannot parse '" + std::string(text) + "'");
    return v;
}

inline std::vector<std::size_t> parse_dims(const std::string& key, std::string_view text) {
    std::vector<std::size_t> dims;
    if (text.empty()) return dims;
    for (auto part : csv::split(text)) dims.push_back(parse_value<std::size_t>(key, part));
    return dims;
}

inline std::string join_dims(const std::vector<std::size_t>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

// One configurable key: how to set it from text and how to echo it.
struct Key {
    std::string name;
    std::string help;
    std::function<void(ExperimentSpec&, const std::string&)> set;
    std::function<std::string(const ExperimentSpec&)> get;
};

inline const std::vector<Key>& keys() {
    using detail::parse_value;
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto size_key = [&](std::string name, std::string help, auto member) {
            k.push_back({name, std::move(help),
                         [=](ExperimentSpec& s, const std::string& v) { member(s) = parse_value<std::size_t>(name, v); },
                         [=](const ExperimentSpec& s) { return std::to_string(member(s)); }});
        };
        auto real_key = [&](std::string name, std::string help, auto member) {
            k.push_back({name, std::move(help),
                         [=](ExperimentSpec& s, const std::string& v) { member(s) = parse_value<double>(name, v); },
                         [=](const ExperimentSpec& s) {
                             return csv::format_double(member(s));
                         }});
        };
        k.push_back({"mode", "generate | train-baseline | train-crssc | compare",
                     [](ExperimentSpec& s, const std::string& v) { s.mode = parse_mode(v); },
                     [](const ExperimentSpec& s) { return to_string(s.mode); }});
        k.push_back({"dataset", "training set CSV to load instead of generating one",
                     [](ExperimentSpec& s, const std::string& v) { s.dataset = v; },
                     [](const ExperimentSpec& s) { return s.dataset; }});
        k.push_back({"testset", "test set CSV (used with dataset)",
                     [](ExperimentSpec& s, const std::string& v) { s.testset = v; },
                     [](const ExperimentSpec& s) { return s.testset; }});
        k.push_back({"seed", "seed for data generation and training",
                     [](ExperimentSpec& s, const std::string& v) {
                         s.noise.seed = s.train.seed = parse_value<std::uint64_t>("seed", v);
                     },
                     [](const ExperimentSpec& s) { return std::to_string(s.train.seed); }});
        size_key("num_classes", "task classes K", [](auto& s) -> auto& { return s.noise.num_classes; });
        size_key("n_irrelevant_classes", "out-of-task clusters",
                 [](auto& s) -> auto& { return s.noise.n_irrelevant_classes; });
        real_key("corruption_rate", "fraction of task samples relabeled at random",
                 [](auto& s) -> auto& { return s.noise.corruption_rate; });
        size_key("samples_per_class", "training samples per cluster",
                 [](auto& s) -> auto& { return s.noise.samples_per_class; });
        size_key("test_per_class", "test samples per task class",
                 [](auto& s) -> auto& { return s.noise.test_per_class; });
        size_key("feature_dim", "input dimension", [](auto& s) -> auto& { return s.noise.feature_dim; });
        real_key("cluster_spread", "cluster radius unit sigma",
                 [](auto& s) -> auto& { return s.noise.cluster_spread; });
        real_key("hard_fraction", "fraction of each class in the 2-3 sigma band",
                 [](auto& s) -> auto& { return s.noise.hard_fraction; });
        real_key("center_box", "center cube half-width in sigma (0 = automatic)",
                 [](auto& s) -> auto& { return s.noise.center_box; });
        size_key("warmup_epochs", "epochs of plain training", [](auto& s) -> auto& { return s.train.warmup_epochs; });
        size_key("max_epochs", "total epochs", [](auto& s) -> auto& { return s.train.max_epochs; });
        size_key("history_length", "prediction records kept per sample",
                 [](auto& s) -> auto& { return s.train.history_length; });
        real_key("epsilon", "label smoothing level", [](auto& s) -> auto& { return s.train.epsilon; });
        real_key("lr", "learning rate", [](auto& s) -> auto& { return s.train.lr; });
        real_key("momentum", "SGD momentum", [](auto& s) -> auto& { return s.train.momentum; });
        real_key("weight_decay", "L2 on weights", [](auto& s) -> auto& { return s.train.weight_decay; });
        size_key("batch_size", "mini-batch size", [](auto& s) -> auto& { return s.train.batch_size; });
        k.push_back({"hidden", "hidden layer widths, comma separated",
                     [](ExperimentSpec& s, const std::string& v) { s.train.hidden_dims = detail::parse_dims("hidden", v); },
                     [](const ExperimentSpec& s) { return detail::join_dims(s.train.hidden_dims); }});
        size_key("max_lag", "largest overlap lag reported", [](auto& s) -> auto& { return s.max_lag; });
        return k;
    }();
    return table;
}

inline const Key& find_key(const std::string& name) {
    for (const auto& k : keys())
        if (k.name == name) return k;
    throw ValidationError(name + ": unknown configuration key");
}

inline void set_key(ExperimentSpec& spec, const std::string& name, const std::string& value) {
    find_key(name).set(spec, value);
    spec.explicit_keys.insert(name);
}

// key=value per line; '#' starts a comment.
inline void apply_config(ExperimentSpec& spec, std::istream& is, const std::string& source) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError(source + ":" + std::to_string(row) + ": expected key=value");
        set_key(spec, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
}

inline void write_config(std::ostream& os, const ExperimentSpec& spec) {
    for (const auto& k : keys()) os << k.name << '=' << k.get(spec) << '\n';
}

inline void validate(const ExperimentSpec& spec) {
    try {
        if (spec.dataset.empty()) crssc::validate(spec.noise);
        crssc::validate(spec.train);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    if (!spec.testset.empty() && spec.dataset.empty())
        throw ValidationError("testset: only used together with dataset");
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());
}

inline void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path);
    if (!os) throw IoError(path.string() + ": cannot open for writing");
    body(os);
    os.flush();
    if (!os) throw IoError(path.string() + ": write failed");
}

inline Dataset load_dataset(const std::string& path, std::size_t num_classes, const char* key) {
    std::ifstream is(path);
    if (!is) throw IoError(path + ": cannot open for reading");
    try {
        return read_dataset_csv(is, num_classes);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string(key) + ": " + path + ": " + e.what());
    }
}

struct Data {
    Dataset train;
    Dataset test;
};

inline Data obtain_data(const ExperimentSpec& spec) {
    if (spec.dataset.empty()) {
        GeneratedData g = generate(spec.noise);
        return {std::move(g.train), std::move(g.test)};
    }
    const std::size_t k = spec.explicit_keys.contains("num_classes") ? spec.noise.num_classes : 0;
    Data d{load_dataset(spec.dataset, k, "dataset"), {}};
    if (!spec.testset.empty()) {
        d.test = load_dataset(spec.testset, d.train.num_classes, "testset");
        if (d.test.feature_dim != d.train.feature_dim)
            throw ValidationError("testset: feature dimension differs from dataset");
    }
    if (d.train.samples.empty()) throw ValidationError("dataset: no samples");
    return d;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunOutcome {
    std::optional<double> final_test_accuracy;
    std::optional<FitRates> final_fit;
};

inline RunOutcome run_training(const Data& data, const TrainConfig& cfg, std::size_t max_lag, const fs::path& dir,
                               std::ostream& out, const std::string& label) {
    make_dir(dir);
    const TrainResult r = train(data.train, data.test, cfg, [&](const EpochLog& log) {
        out << label << " epoch " << log.epoch << " loss " << csv::format_double(log.mean_loss);
        if (log.test_accuracy) out << " test_acc " << csv::format_double(*log.test_accuracy);
        out << '\n';
    });
    const auto diags = diagnose_run(r.logs, ProvenanceIndex(data.train), max_lag);
    write_file(dir / "epochs.csv", [&](std::ostream& os) { write_epochs_csv(os, r.logs); });
    write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, diags); });
    write_file(dir / "diagnostics.csv", [&](std::ostream& os) { write_diagnostics_csv(os, diags); });
    write_file(dir / "overlap.csv", [&](std::ostream& os) { write_overlap_csv(os, diags); });
    return {r.logs.back().test_accuracy, r.logs.back().train_fit};
}

inline void run(const ExperimentSpec& spec, const fs::path& out_dir, std::ostream& out) {
    validate(spec);
    const Data data = obtain_data(spec);
    make_dir(out_dir);
    write_file(out_dir / "config.txt", [&](std::ostream& os) { write_config(os, spec); });
    write_file(out_dir / "dataset.csv", [&](std::ostream& os) { write_dataset_csv(os, data.train); });
    if (!data.test.samples.empty())
        write_file(out_dir / "testset.csv", [&](std::ostream& os) { write_dataset_csv(os, data.test); });

    TrainConfig baseline = spec.train;
    baseline.warmup_epochs = baseline.max_epochs;
    switch (spec.mode) {
        case Mode::Generate:
            break;
        case Mode::TrainBaseline:
            run_training(data, baseline, spec.max_lag, out_dir, out, "baseline");
            break;
        case Mode::TrainCrssc:
            run_training(data, spec.train, spec.max_lag, out_dir, out, "crssc");
            break;
        case Mode::Compare: {
            const RunOutcome b = run_training(data, baseline, spec.max_lag, out_dir / "baseline", out, "baseline");
            const RunOutcome c = run_training(data, spec.train, spec.max_lag, out_dir / "crssc", out, "crssc");
            write_file(out_dir / "comparison.csv", [&](std::ostream& os) {
                os << "method,final_test_acc,final_fit_mislabeled_observed\n";
                for (const auto& [name, o] : {std::pair{"baseline", &b}, std::pair{"crssc", &c}}) {
                    os << name << ',' << (o->final_test_accuracy ? csv::format_double(*o->final_test_accuracy) : "")
                       << ',' << (o->final_fit ? csv::format_double(o->final_fit->mislabeled_observed) : "") << '\n';
                }
            });
            break;
        }
    }
    out << "wrote " << out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Noisy-label training with drop / reuse / relabel sample selection"};
    std::string config_path, out_dir = "crssc_out";
    bool quiet = false;
    std::map<std::string, std::string> overrides;
    app.add_option("--config", config_path, "flat key=value configuration file");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", quiet, "no per-epoch progress lines");
    for (const auto& k : keys()) {
        std::string flag = "--" + k.name;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        app.add_option_function<std::string>(
            flag, [&overrides, name = k.name](const std::string& v) { overrides[name] = v; }, k.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    try {
        ExperimentSpec spec;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw IoError(config_path + ": cannot open for reading");
            apply_config(spec, is, config_path);
        }
        for (const auto& [name, value] : overrides) set_key(spec, name, value);
        std::ostringstream sink;
        run(spec, out_dir, quiet ? static_cast<std::ostream&>(sink) : out);
        return kOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace crssc::cli
