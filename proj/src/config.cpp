#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mustangs/config.hpp"
#include "mustangs/errors.hpp"

namespace mustangs {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(s);
    while (std::getline(in, current, sep)) parts.push_back(trim(current));
    return parts;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Problems {
    std::vector<std::string> list;

    void add(const std::string& msg) { list.push_back(msg); }

    void raise_if_any() const {
        if (list.empty()) return;
        std::string joined = "invalid configuration:";
        for (const auto& msg : list) joined += "\n  - " + msg;
        throw ConfigError(joined);
    }
};

}  // namespace

const char* to_string(Method method) {
    switch (method) {
        case Method::Mustangs: return "mustangs";
        case Method::LipBce: return "lip-bce";
        case Method::LipLse: return "lip-lse";
        case Method::LipHeu: return "lip-heu";
        case Method::EganStyle: return "egan-style";
        case Method::GanBce: return "gan-bce";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    if (text == "mustangs") return Method::Mustangs;
    if (text == "lip-bce") return Method::LipBce;
    if (text == "lip-lse") return Method::LipLse;
    if (text == "lip-heu") return Method::LipHeu;
    if (text == "egan-style") return Method::EganStyle;
    if (text == "gan-bce") return Method::GanBce;
    throw ConfigError("unknown method '" + std::string(text) + "'");
}

ObjectivePolicy ExperimentConfig::objective_policy() const {
    switch (method) {
        case Method::LipBce:
        case Method::GanBce:
            return ObjectivePolicy::pin(ObjectiveKind::Bce);
        case Method::LipLse:
            return ObjectivePolicy::pin(ObjectiveKind::Lse);
        case Method::LipHeu:
            return ObjectivePolicy::pin(ObjectiveKind::Heu);
        case Method::Mustangs:
        case Method::EganStyle:
            break;
    }
    if (pin != "none") return ObjectivePolicy::pin(parse_objective(pin));
    return ObjectivePolicy::uniform_draw();
}

MixtureSpec ExperimentConfig::mixture() const {
    if (data_name == "ring8") return MixtureSpec::ring8(data_sigma);
    if (data_name == "grid25") return MixtureSpec::grid25(data_sigma);
    return MixtureSpec::custom(data_centers, data_sigma);
}

EngineConfig ExperimentConfig::engine_config(std::uint64_t seed) const {
    EngineConfig ec;
    ec.grid = grid;
    ec.data = mixture();
    ec.seed = seed;
    ec.budget = budget;
    ec.max_epochs = epochs;
    ec.learning_rate = lr;
    ec.batch_size = batch_size;
    ec.steps_per_mutation = steps_per_mutation;
    ec.lr_sigma = lr_sigma;
    ec.policy = objective_policy();
    ec.metrics_every = metrics_every;
    ec.metrics_samples = metrics_samples;
    ec.coverage_threshold = coverage_threshold;
    ec.mode = mode;
    return ec;
}

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) {
                problems.add("line " + std::to_string(line_no) +
                             ": expected key = value");
                continue;
            }
            const std::string key = trim(stripped.substr(0, eq));
            const std::string value = trim(stripped.substr(eq + 1));
            if (key.empty()) {
                problems.add("line " + std::to_string(line_no) + ": empty key");
                continue;
            }
            if (!entries.emplace(key, value).second) {
                problems.add("duplicate key '" + key + "'");
            }
        }
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        std::string value = it->second;
        entries.erase(it);
        return value;
    }

    void finish() {
        for (const auto& [key, value] : entries) {
            problems.add("unknown key '" + key + "'");
        }
    }

    std::map<std::string, std::string> entries;
    Problems problems;
};

template <typename T>
std::optional<T> parse_integer(const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return out;
}

std::optional<double> parse_double(const std::string& value) {
    try {
        std::size_t used = 0;
        const double out = std::stod(value, &used);
        if (used != value.size()) return std::nullopt;
        return out;
    } catch (...) {
        return std::nullopt;
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    Parser parser(text);
    Problems& problems = parser.problems;
    ExperimentConfig cfg;

    const auto int_key = [&](const char* key, auto& slot, auto minimum,
                             const char* what) {
        if (auto v = parser.take(key)) {
            using Slot = std::remove_reference_t<decltype(slot)>;
            if (auto parsed = parse_integer<Slot>(*v);
                parsed.has_value() && *parsed >= static_cast<Slot>(minimum)) {
                slot = *parsed;
            } else {
                problems.add(std::string(key) + " must be " + what);
            }
        }
    };
    const auto double_key = [&](const char* key, double& slot,
                                const char* what, auto&& ok) {
        if (auto v = parser.take(key)) {
            if (auto parsed = parse_double(*v); parsed.has_value() && ok(*parsed)) {
                slot = *parsed;
            } else {
                problems.add(std::string(key) + " must be " + what);
            }
        }
    };

    bool method_given = false;
    if (auto v = parser.take("method")) {
        try {
            cfg.method = parse_method(*v);
            method_given = true;
        } catch (const ConfigError& e) {
            problems.add(e.what());
        }
    } else {
        problems.add("missing required key 'method'");
    }

    if (auto v = parser.take("seeds")) {
        std::set<std::uint64_t> seen;
        for (const std::string& part : split(*v, ',')) {
            if (auto parsed = parse_integer<std::uint64_t>(part)) {
                if (!seen.insert(*parsed).second) {
                    problems.add("seeds must be distinct (duplicate " + part + ")");
                }
                cfg.seeds.push_back(*parsed);
            } else {
                problems.add("bad seed value '" + part + "'");
            }
        }
        if (cfg.seeds.empty()) problems.add("seeds list is empty");
    } else {
        problems.add("missing required key 'seeds'");
    }

    if (auto v = parser.take("out")) {
        if (v->empty()) {
            problems.add("out must be a non-empty path");
        } else {
            cfg.out = *v;
        }
    } else {
        problems.add("missing required key 'out'");
    }

    if (auto v = parser.take("budget")) {
        if (auto parsed = parse_integer<std::uint64_t>(*v)) {
            cfg.budget = *parsed;
        } else {
            problems.add("budget must be a non-negative integer");
        }
    } else {
        problems.add("missing required key 'budget'");
    }

    int_key("epochs", cfg.epochs, 0, "a non-negative integer");
    int_key("grid.width", cfg.grid.width, 1, ">= 1");
    int_key("grid.height", cfg.grid.height, 1, ">= 1");
    int_key("train.batch_size", cfg.batch_size, 1, ">= 1");
    int_key("train.steps_per_mutation", cfg.steps_per_mutation, 0,
            "a non-negative integer");
    int_key("metrics.every", cfg.metrics_every, 1, ">= 1");
    int_key("metrics.samples", cfg.metrics_samples, 2, ">= 2");
    int_key("checkpoint.every", cfg.checkpoint_every, 0,
            "a non-negative integer");

    double_key("data.sigma", cfg.data_sigma, "> 0",
               [](double d) { return d > 0.0; });
    double_key("train.lr", cfg.lr, "in (0, 1]",
               [](double d) { return d > 0.0 && d <= 1.0; });
    double_key("train.lr_sigma", cfg.lr_sigma, ">= 0",
               [](double d) { return d >= 0.0; });
    double_key("metrics.coverage_threshold", cfg.coverage_threshold,
               "in [0, 1]", [](double d) { return d >= 0.0 && d <= 1.0; });

    if (auto v = parser.take("data.name")) {
        if (*v == "ring8" || *v == "grid25" || *v == "custom") {
            cfg.data_name = *v;
        } else {
            problems.add("data.name must be ring8|grid25|custom");
        }
    }
    if (auto v = parser.take("data.centers")) {
        for (const std::string& pair : split(*v, ',')) {
            const auto colon = pair.find(':');
            const auto px = colon == std::string::npos
                                ? std::nullopt
                                : parse_double(trim(pair.substr(0, colon)));
            const auto py = colon == std::string::npos
                                ? std::nullopt
                                : parse_double(trim(pair.substr(colon + 1)));
            if (px.has_value() && py.has_value()) {
                cfg.data_centers.push_back({*px, *py});
            } else {
                problems.add("bad center '" + pair + "' (expected x:y)");
            }
        }
    }
    if (auto v = parser.take("objectives.pin")) {
        if (*v == "none" || *v == "bce" || *v == "lse" || *v == "heu") {
            cfg.pin = *v;
        } else {
            problems.add("objectives.pin must be bce|lse|heu|none");
        }
    }
    if (auto v = parser.take("engine.mode")) {
        if (*v == "sequential") {
            cfg.mode = ExecMode::Sequential;
        } else if (*v == "parallel") {
            cfg.mode = ExecMode::Parallel;
        } else {
            problems.add("engine.mode must be sequential|parallel");
        }
    }

    parser.finish();

    // Cross-field rules.
    if (method_given) {
        const bool single_pair =
            cfg.method == Method::GanBce || cfg.method == Method::EganStyle;
        if (single_pair && (cfg.grid.width != 1 || cfg.grid.height != 1)) {
            problems.add(std::string(to_string(cfg.method)) +
                         " requires a 1x1 grid");
        }
        if (cfg.pin != "none") {
            const char* fixed = nullptr;
            if (cfg.method == Method::LipBce || cfg.method == Method::GanBce) {
                fixed = "bce";
            } else if (cfg.method == Method::LipLse) {
                fixed = "lse";
            } else if (cfg.method == Method::LipHeu) {
                fixed = "heu";
            }
            if (fixed != nullptr && cfg.pin != fixed) {
                problems.add("objectives.pin conflicts with method " +
                             std::string(to_string(cfg.method)));
            }
        }
    }
    if (cfg.data_name == "custom" && cfg.data_centers.empty()) {
        problems.add("data.name=custom requires data.centers");
    }
    if (cfg.data_name != "custom" && !cfg.data_centers.empty()) {
        problems.add("data.centers is only valid with data.name=custom");
    }
    if (cfg.steps_per_mutation == 0 && cfg.budget > 0 && cfg.epochs == 0) {
        problems.add("steps_per_mutation=0 with a nonzero budget needs "
                     "epochs as a stopping rule");
    }

    problems.raise_if_any();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string canonical_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "method = " << to_string(cfg.method) << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (i > 0) out << ",";
        out << cfg.seeds[i];
    }
    out << "\n";
    out << "out = " << cfg.out << "\n";
    out << "budget = " << cfg.budget << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "grid.width = " << cfg.grid.width << "\n";
    out << "grid.height = " << cfg.grid.height << "\n";
    out << "data.name = " << cfg.data_name << "\n";
    out << "data.sigma = " << fmt_double(cfg.data_sigma) << "\n";
    if (!cfg.data_centers.empty()) {
        out << "data.centers = ";
        for (std::size_t i = 0; i < cfg.data_centers.size(); ++i) {
            if (i > 0) out << ",";
            out << fmt_double(cfg.data_centers[i][0]) << ":"
                << fmt_double(cfg.data_centers[i][1]);
        }
        out << "\n";
    }
    out << "train.lr = " << fmt_double(cfg.lr) << "\n";
    out << "train.batch_size = " << cfg.batch_size << "\n";
    out << "train.steps_per_mutation = " << cfg.steps_per_mutation << "\n";
    out << "train.lr_sigma = " << fmt_double(cfg.lr_sigma) << "\n";
    out << "objectives.pin = " << cfg.pin << "\n";
    out << "metrics.every = " << cfg.metrics_every << "\n";
    out << "metrics.samples = " << cfg.metrics_samples << "\n";
    out << "metrics.coverage_threshold = " << fmt_double(cfg.coverage_threshold)
        << "\n";
    out << "engine.mode = "
        << (cfg.mode == ExecMode::Sequential ? "sequential" : "parallel")
        << "\n";
    out << "checkpoint.every = " << cfg.checkpoint_every << "\n";
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // FNV-1a 64.
    const std::string text = canonical_text(cfg);
    std::uint64_t hash = 0xCBF29CE484222325ull;
    for (const char c : text) {
        hash ^= static_cast<std::uint8_t>(c);
        hash *= 0x100000001B3ull;
    }
    return hash;
}

}  // namespace mustangs
