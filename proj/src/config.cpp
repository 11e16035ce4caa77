#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "rydpulse/runner.hpp"

namespace rydpulse {

namespace {

const std::map<std::string, ExperimentKind>& kind_names() {
    static const std::map<std::string, ExperimentKind> names{
        {"ensemble", ExperimentKind::ensemble},
        {"haar-baseline", ExperimentKind::haar_baseline},
        {"ratio-stats", ExperimentKind::ratio_stats},
        {"porter-thomas", ExperimentKind::porter_thomas},
        {"blockade", ExperimentKind::blockade},
        {"eta-pdf", ExperimentKind::eta_pdf},
        {"grape-benchmark", ExperimentKind::grape_benchmark},
        {"grape-study", ExperimentKind::grape_study},
        {"bipartition-scan", ExperimentKind::bipartition_scan}};
    return names;
}

std::string format_error(const std::string& key, int line, const std::string& message) {
    std::string where = line > 0 ? "line " + std::to_string(line) : std::string();
    if (!key.empty()) where += (where.empty() ? "" : ", ") + key;
    return where.empty() ? message : where + ": " + message;
}

// Recursive walk over text already accepted by the JSON parser.
class LineScanner {
public:
    explicit LineScanner(const std::string& text) : text_(text) {}

    std::map<std::string, int> run() {
        skip_ws();
        if (pos_ < text_.size()) value("");
        return lines_;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;

    void advance() {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
    }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
    }
    std::string string_token() {
        std::string out;
        advance();  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') {
                advance();
                if (pos_ >= text_.size()) break;
            }
            out += text_[pos_];
            advance();
        }
        if (pos_ < text_.size()) advance();
        return out;
    }
    void value(const std::string& path) {
        skip_ws();
        if (pos_ >= text_.size()) return;
        if (!path.empty()) lines_[path] = line_;
        const char c = text_[pos_];
        if (c == '{') {
            advance();
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                const std::string key = string_token();
                skip_ws();
                advance();  // ':'
                value(path.empty() ? key : path + "." + key);
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') advance();
                skip_ws();
            }
            if (pos_ < text_.size()) advance();
        } else if (c == '[') {
            advance();
            skip_ws();
            for (int i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
                value(path + "[" + std::to_string(i) + "]");
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') advance();
                skip_ws();
            }
            if (pos_ < text_.size()) advance();
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
                   text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']') {
                advance();
            }
        }
    }
};

// Reads fields out of one JSON object, remembering which keys were used so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const nlohmann::json& doc, std::string prefix, const std::map<std::string, int>& lines)
        : doc_(doc), prefix_(std::move(prefix)), lines_(lines) {
        if (!doc_.is_object()) fail("", "expected an object");
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
    int line_of(const std::string& key) const {
        auto it = lines_.find(path(key));
        return it == lines_.end() ? 0 : it->second;
    }
    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ConfigError(key.empty() ? prefix_ : path(key), key.empty() ? line_of_prefix() : line_of(key), message);
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return doc_.contains(key);
    }

    template <class T>
    void read(const std::string& key, T& field) {
        if (!has(key)) return;
        const auto& v = doc_.at(key);
        try {
            if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer()) fail(key, "expected an integer");
                field = v.get<int>();
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
                field = v.get<std::uint64_t>();
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail(key, "expected a number");
                field = v.get<double>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(key, "expected a string");
                field = v.get<std::string>();
            } else {
                // list of numbers; a bare number is a one-element list
                if (v.is_number()) {
                    field = {v.get<double>()};
                } else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number(); })) {
                    field = v.get<std::vector<double>>();
                } else {
                    fail(key, "expected a number or a list of numbers");
                }
            }
        } catch (const nlohmann::json::exception& e) {
            fail(key, e.what());
        }
    }

    template <class F>
    void read_with(const std::string& key, F&& convert) {
        if (!has(key)) return;
        std::string text;
        read(key, text);
        try {
            convert(text);
        } catch (const std::invalid_argument& e) {
            fail(key, e.what());
        }
    }

    Section sub(const std::string& key) {
        used_.insert(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return Section(doc_.contains(key) ? doc_.at(key) : empty, path(key), lines_);
    }

    void reject_unknown() const {
        for (const auto& [key, value] : doc_.items()) {
            if (!used_.count(key)) fail(key, "unknown key");
        }
    }

private:
    const nlohmann::json& doc_;
    std::string prefix_;
    const std::map<std::string, int>& lines_;
    std::set<std::string> used_;

    int line_of_prefix() const {
        auto it = lines_.find(prefix_);
        return it == lines_.end() ? 0 : it->second;
    }
};

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(assignment, 0, "override must have the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    std::string pointer;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError(key, 0, "override key has an empty component");
        pointer += "/" + part;
    }
    try {
        doc[nlohmann::json::json_pointer(pointer)] = value;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(key, 0, std::string("cannot apply override: ") + e.what());
    }
}

std::string json_number_text(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::runtime_error(format_error(key, line, message)), key_(std::move(key)), line_(line) {}

ExperimentKind parse_experiment_kind(const std::string& name) {
    const auto& names = kind_names();
    auto it = names.find(name);
    if (it != names.end()) return it->second;
    std::string known;
    for (const auto& [n, k] : names) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown experiment '" + name + "' (expected one of " + known + ")");
}

std::string to_string(ExperimentKind kind) {
    for (const auto& [name, k] : kind_names()) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::map<std::string, int> json_key_lines(const std::string& text) {
    return LineScanner(text).run();
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
        std::string what = e.what();
        if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
        throw ConfigError("", line, source + " is not valid JSON: " + what);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    const auto lines = json_key_lines(text);

    ExperimentConfig c;
    Section root(doc, "", lines);
    root.read_with("experiment", [&](const std::string& s) { c.kind = parse_experiment_kind(s); });
    root.read("seed", c.seed);
    root.read("workers", c.workers);
    root.read("output_dir", c.output_dir);
    root.read("samples", c.samples);
    root.read("reference_samples", c.reference_samples);

    Section physics = root.sub("physics");
    physics.read("n_atoms", c.n_atoms);
    physics.read("spacings", c.spacings);
    physics.read("c6", c.c6);
    physics.reject_unknown();

    Section pulses = root.sub("pulses");
    pulses.read("m_segments", c.m_segments);
    pulses.read("t_finals", c.t_finals);
    pulses.read("omega_max", c.omega_max);
    pulses.read("delta_max", c.delta_max);
    pulses.reject_unknown();

    Section analysis = root.sub("analysis");
    auto& a = c.analysis;
    analysis.read("entropy_bins", a.entropy_bins);
    analysis.read("ratio_bins", a.ratio_bins);
    analysis.read("omega_bins", a.omega_bins);
    analysis.read("omega_hi", a.omega_hi);
    analysis.read("keep_central", a.keep_central);
    analysis.read_with("smax", [&](const std::string& s) { a.smax = parse_smax_convention(s); });
    analysis.read("bipartition", a.bipartition);
    analysis.read("gamma", a.gamma);
    analysis.read("delta_s", a.delta_s);
    analysis.reject_unknown();

    Section grape = root.sub("grape");
    auto& g = c.grape;
    auto& o = g.optimizer;
    grape.read("t_max", o.t_max);
    grape.read("a1", o.a1);
    grape.read("a2", o.a2);
    grape.read("a3", o.a3);
    grape.read("alpha", o.alpha);
    grape.read("n_restarts", o.n_restarts);
    grape.read("max_iters", o.max_iters);
    grape.read("grad_tol", o.grad_tol);
    grape.read("target_infidelity", o.target_infidelity);
    grape.read_with("optimizer", [&](const std::string& s) { o.optimizer = parse_optimizer_kind(s); });
    grape.read_with("init_scheme", [&](const std::string& s) {
        o = grape_config_from_json({{"init_scheme", s}}, o);
    });
    grape.read("prep_spacing", g.prep_spacing);
    grape.read("target_spacing", g.target_spacing);
    grape.read("target_t_finals", g.target_t_finals);
    grape.read("pool_size", g.pool_size);
    grape.read("n_bins", g.n_bins);
    grape.read("per_bin", g.per_bin);
    grape.read("n_targets", g.n_targets);
    grape.reject_unknown();

    Section eta = root.sub("eta");
    eta.read("grid_points", c.eta.grid_points);
    eta.read("mc_samples", c.eta.mc_samples);
    eta.reject_unknown();

    root.reject_unknown();

    o.m_segments = c.m_segments;
    o.omega_max = c.omega_max;
    o.delta_max = c.delta_max;
    o.workers = c.workers;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), overrides, path.string());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& a = c.analysis;
    const auto& g = c.grape;
    nlohmann::json grape = to_json(g.optimizer);
    for (const char* key : {"m_segments", "omega_max", "delta_max"}) grape.erase(key);
    grape["prep_spacing"] = g.prep_spacing;
    grape["target_spacing"] = g.target_spacing;
    grape["target_t_finals"] = g.target_t_finals;
    grape["pool_size"] = g.pool_size;
    grape["n_bins"] = g.n_bins;
    grape["per_bin"] = g.per_bin;
    grape["n_targets"] = g.n_targets;
    return {{"experiment", to_string(c.kind)},
            {"seed", c.seed},
            {"workers", c.workers},
            {"output_dir", c.output_dir},
            {"samples", c.samples},
            {"reference_samples", c.reference_samples},
            {"physics", {{"n_atoms", c.n_atoms}, {"spacings", c.spacings}, {"c6", c.c6}}},
            {"pulses",
             {{"m_segments", c.m_segments}, {"t_finals", c.t_finals}, {"omega_max", c.omega_max}, {"delta_max", c.delta_max}}},
            {"analysis",
             {{"entropy_bins", a.entropy_bins},
              {"ratio_bins", a.ratio_bins},
              {"omega_bins", a.omega_bins},
              {"omega_hi", a.omega_hi},
              {"keep_central", a.keep_central},
              {"smax", to_string(a.smax)},
              {"bipartition", a.bipartition},
              {"gamma", a.gamma},
              {"delta_s", a.delta_s}}},
            {"grape", grape},
            {"eta", {{"grid_points", c.eta.grid_points}, {"mc_samples", c.eta.mc_samples}}}};
}

Bipartition resolve_bipartition(const ExperimentConfig& c) {
    const auto& choice = c.analysis.bipartition;
    if (choice == "auto") return find_asymmetric_bipartition(c.n_atoms);
    if (choice == "contiguous") return contiguous_half(c.n_atoms);
    if (choice == "exchange" || choice == "internal") {
        const auto part = choice == "exchange" ? find_exchange_only_bipartition(c.n_atoms)
                                               : find_internal_only_bipartition(c.n_atoms);
        if (!part) throw std::logic_error("no " + choice + "-only bipartition exists for N=" + std::to_string(c.n_atoms));
        return *part;
    }
    return parse_bipartition(c.n_atoms, choice);
}

ValidationReport validate_config(const ExperimentConfig& c, const std::map<std::string, int>& lines) {
    ValidationReport report;
    auto line = [&](const std::string& key) {
        auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    };
    auto error = [&](const std::string& key, const std::string& message) {
        report.errors.emplace_back(key, line(key), message);
    };
    auto warn = [&](const std::string& key, const std::string& message) {
        report.warnings.push_back(format_error(key, line(key), message));
    };
    auto each = [&](const std::string& key, const std::vector<double>& values, auto&& check) {
        if (values.empty()) error(key, "must not be empty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::string k = key + "[" + std::to_string(i) + "]";
            check(lines.count(k) ? k : key, values[i]);
        }
    };

    if (c.n_atoms < 3 || c.n_atoms > kMaxEnumeratedAtoms) {
        error("physics.n_atoms", "must lie in [3, " + std::to_string(kMaxEnumeratedAtoms) + "]");
    }
    if (!(c.c6 > 0.0)) error("physics.c6", "must be positive");
    auto spacing_check = [&](const std::string& key, double d) {
        if (!(d > 0.0) || !std::isfinite(d)) {
            error(key, "spacing must be positive, got " + json_number_text(d));
        } else if (d < 5.0 || d > 10.0) {
            warn(key, "spacing " + json_number_text(d) + " µm lies outside the studied 5-10 µm band");
        }
    };
    each("physics.spacings", c.spacings, spacing_check);
    if (c.m_segments < 1) error("pulses.m_segments", "must be at least 1");
    each("pulses.t_finals", c.t_finals, [&](const std::string& key, double t) {
        if (!(t > 0.0) || !std::isfinite(t)) error(key, "evolution time must be positive");
    });
    if (c.omega_max < 0.0) error("pulses.omega_max", "Rabi bound must be non-negative");
    else if (c.omega_max == 0.0) error("pulses.omega_max", "Rabi bound of zero leaves nothing to sample");
    if (!(c.delta_max > 0.0)) error("pulses.delta_max", "detuning bound must be positive");
    if (c.samples < 1) error("samples", "must be at least 1");
    if (c.reference_samples < 1) error("reference_samples", "must be at least 1");
    if (c.workers < 0) error("workers", "must be non-negative (0 uses every core)");

    const auto& a = c.analysis;
    if (a.entropy_bins < 1) error("analysis.entropy_bins", "must be at least 1");
    if (a.ratio_bins < 1) error("analysis.ratio_bins", "must be at least 1");
    if (a.omega_bins < 1) error("analysis.omega_bins", "must be at least 1");
    if (!(a.omega_hi > 0.0)) error("analysis.omega_hi", "must be positive");
    if (!(a.keep_central > 0.0) || a.keep_central > 1.0) error("analysis.keep_central", "must lie in (0, 1]");
    if (a.gamma < 0.0) error("analysis.gamma", "must be non-negative");
    if (!(a.delta_s > 0.0)) error("analysis.delta_s", "must be positive");
    if (report.errors.empty()) {
        try {
            report.bipartition = resolve_bipartition(c);
        } catch (const std::exception& e) {
            error("analysis.bipartition", e.what());
        }
    }

    const bool grape_kind = c.kind == ExperimentKind::grape_benchmark || c.kind == ExperimentKind::grape_study;
    if (grape_kind) {
        const auto& g = c.grape;
        try {
            validate(g.optimizer);
        } catch (const std::invalid_argument& e) {
            error("grape", e.what());
        }
        spacing_check("grape.prep_spacing", g.prep_spacing);
        spacing_check("grape.target_spacing", g.target_spacing);
        if (c.kind == ExperimentKind::grape_study) {
            each("grape.target_t_finals", g.target_t_finals, [&](const std::string& key, double t) {
                if (!(t > 0.0)) error(key, "evolution time must be positive");
            });
            if (g.pool_size < 1) error("grape.pool_size", "must be at least 1");
            if (g.n_bins < 1) error("grape.n_bins", "must be at least 1");
            if (g.per_bin < 1) error("grape.per_bin", "must be at least 1");
        } else if (g.n_targets < 1) {
            error("grape.n_targets", "must be at least 1");
        }
    }
    if (c.kind == ExperimentKind::eta_pdf) {
        if (c.eta.grid_points < 2) error("eta.grid_points", "must be at least 2");
        if (c.eta.mc_samples < 1) error("eta.mc_samples", "must be at least 1");
    }
    return report;
}

std::string config_hash(const ExperimentConfig& c) {
    nlohmann::json doc = to_json(c);
    doc.erase("workers");
    doc.erase("output_dir");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace rydpulse
