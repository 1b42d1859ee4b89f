#include "exptwist/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "exptwist/errors.hpp"
#include "exptwist/model.hpp"

namespace exptwist {

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::Value: return "value";
        case Pipeline::Twist: return "twist";
        case Pipeline::Reweight: return "reweight";
        case Pipeline::Control: return "control";
        case Pipeline::Checks: return "checks";
        case Pipeline::MeanField: return "meanfield";
    }
    return "?";
}

namespace {

struct Entry {
    std::string value;
    int line;
    bool used = false;
};
using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::map<std::string, Section> tokenize(const std::string& text) {
    std::map<std::string, Section> sections;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header", line_no);
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) throw ConfigError("empty section name", line_no);
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value", line_no);
        if (current.empty())
            throw ConfigError("key outside any [section]", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (value.empty()) throw ConfigError("empty value for key " + key, line_no);
        auto [it, inserted] = sections[current].emplace(key, Entry{value, line_no});
        if (!inserted) throw ConfigError("duplicate key " + key, line_no);
    }
    return sections;
}

double to_number(const Entry& e, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("trailing text");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("value of " + key + " is not a number: " + e.value, e.line);
    }
}

std::uint64_t to_count(const Entry& e, const std::string& key) {
    const double v = to_number(e, key);
    if (v < 0.0 || v != std::floor(v))
        throw ConfigError(key + " must be a nonnegative integer", e.line);
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const Entry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError(key + " must be true or false", e.line);
}

class SectionReader {
public:
    SectionReader(std::map<std::string, Section>& sections, const std::string& name)
        : name_(name) {
        auto it = sections.find(name);
        section_ = it == sections.end() ? nullptr : &it->second;
    }

    bool present() const { return section_ != nullptr; }

    Entry* find(const std::string& key) {
        if (!section_) return nullptr;
        auto it = section_->find(key);
        if (it == section_->end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    std::string require_string(const std::string& key) {
        Entry* e = find(key);
        if (!e)
            throw ConfigError("missing required key " + key + " in [" + name_ + "]");
        return e->value;
    }

    void check_all_used() const {
        if (!section_) return;
        for (const auto& [key, entry] : *section_) {
            if (!entry.used)
                throw ConfigError("unknown key " + key + " in [" + name_ + "]",
                                  entry.line);
        }
    }

private:
    std::string name_;
    Section* section_;
};

Params read_params(SectionReader& reader, const std::vector<std::string>& keys) {
    Params params;
    for (const auto& key : keys) {
        if (Entry* e = reader.find(key)) params[key] = to_number(*e, key);
    }
    return params;
}

Pipeline parse_pipeline(const Entry& e) {
    const std::string& v = e.value;
    if (v == "value") return Pipeline::Value;
    if (v == "twist") return Pipeline::Twist;
    if (v == "reweight") return Pipeline::Reweight;
    if (v == "control") return Pipeline::Control;
    if (v == "checks") return Pipeline::Checks;
    if (v == "meanfield") return Pipeline::MeanField;
    throw ConfigError("unknown pipeline: " + v, e.line);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    auto sections = tokenize(text);
    for (const auto& [name, _] : sections) {
        static const std::vector<std::string> known{
            "model", "cost", "grid", "run", "surface", "checks", "meanfield"};
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw ConfigError("unknown section [" + name + "]");
    }

    RunConfig config;

    SectionReader model(sections, "model");
    if (!model.present()) throw ConfigError("missing [model] section");
    config.model_family = model.require_string("family");
    if (std::find(model_families().begin(), model_families().end(),
                  config.model_family) == model_families().end())
        throw ConfigError("unknown model family: " + config.model_family);
    config.model_params = read_params(model, model_family_keys(config.model_family));
    model.check_all_used();

    SectionReader cost(sections, "cost");
    if (!cost.present()) throw ConfigError("missing [cost] section");
    config.cost_family = cost.require_string("family");
    if (std::find(cost_families().begin(), cost_families().end(),
                  config.cost_family) == cost_families().end())
        throw ConfigError("unknown cost family: " + config.cost_family);
    config.cost_params = read_params(cost, cost_family_keys(config.cost_family));
    cost.check_all_used();

    SectionReader grid(sections, "grid");
    if (!grid.present()) throw ConfigError("missing [grid] section");
    if (Entry* e = grid.find("horizon")) {
        config.horizon = to_number(*e, "horizon");
        if (config.horizon <= 0.0) throw ConfigError("horizon must be > 0", e->line);
    }
    if (Entry* e = grid.find("n_steps")) {
        config.n_steps = to_count(*e, "n_steps");
        if (config.n_steps < 1) throw ConfigError("n_steps must be >= 1", e->line);
    }
    grid.check_all_used();

    SectionReader run(sections, "run");
    if (!run.present()) throw ConfigError("missing [run] section");
    if (Entry* e = run.find("pipeline")) config.pipeline = parse_pipeline(*e);
    if (Entry* e = run.find("n_paths")) {
        config.n_paths = to_count(*e, "n_paths");
        if (config.n_paths < 1) throw ConfigError("n_paths must be >= 1", e->line);
    }
    if (Entry* e = run.find("seed")) {
        config.seed.master = to_count(*e, "seed");
    } else if (const char* env = std::getenv("EXPTWIST_SEED")) {
        try {
            config.seed.master = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("EXPTWIST_SEED is not an integer");
        }
    } else {
        config.seed.master = 12345;
    }
    if (Entry* e = run.find("stream")) config.seed.stream = to_count(*e, "stream");
    if (Entry* e = run.find("output_dir")) config.output_dir = e->value;
    run.check_all_used();

    SectionReader surface(sections, "surface");
    if (Entry* e = surface.find("time_nodes")) {
        config.surface.time_nodes = to_count(*e, "time_nodes");
        if (config.surface.time_nodes < 2)
            throw ConfigError("time_nodes must be >= 2", e->line);
    }
    if (Entry* e = surface.find("nodes_per_axis")) {
        config.surface.nodes_per_axis =
            static_cast<Eigen::Index>(to_count(*e, "nodes_per_axis"));
        if (config.surface.nodes_per_axis < 2)
            throw ConfigError("nodes_per_axis must be >= 2", e->line);
    }
    if (Entry* e = surface.find("n_sub")) {
        config.surface.n_sub = to_count(*e, "n_sub");
        if (config.surface.n_sub < 2) throw ConfigError("n_sub must be >= 2", e->line);
    }
    if (Entry* e = surface.find("box_halfwidth"))
        config.surface.box_halfwidth = to_number(*e, "box_halfwidth");
    surface.check_all_used();

    SectionReader checks(sections, "checks");
    if (Entry* e = checks.find("inject_uncorrected_drift"))
        config.checks.inject_uncorrected_drift = to_bool(*e, "inject_uncorrected_drift");
    if (Entry* e = checks.find("n_bins")) {
        config.checks.n_bins = to_count(*e, "n_bins");
        if (config.checks.n_bins < 3) throw ConfigError("n_bins must be >= 3", e->line);
    }
    if (Entry* e = checks.find("n_paths")) config.checks.n_paths = to_count(*e, "n_paths");
    checks.check_all_used();

    SectionReader meanfield(sections, "meanfield");
    if (Entry* e = meanfield.find("f")) {
        const std::string& v = e->value;
        if (v != "half_square" && v != "linear" && v != "zero")
            throw ConfigError("unknown meanfield f: " + v, e->line);
        config.meanfield.f_family = v;
    }
    if (Entry* e = meanfield.find("coeff"))
        config.meanfield.coeff = to_number(*e, "coeff");
    if (Entry* e = meanfield.find("damping")) {
        config.meanfield.damping = to_number(*e, "damping");
        if (!(config.meanfield.damping > 0.0 && config.meanfield.damping <= 1.0))
            throw ConfigError("damping must lie in (0,1]", e->line);
    }
    if (Entry* e = meanfield.find("tol")) {
        config.meanfield.tol = to_number(*e, "tol");
        if (config.meanfield.tol <= 0.0) throw ConfigError("tol must be > 0", e->line);
    }
    if (Entry* e = meanfield.find("max_iter"))
        config.meanfield.max_iter = to_count(*e, "max_iter");
    meanfield.check_all_used();

    // the parsed pair must satisfy the model hypotheses at probe points
    try {
        const ModelSpec spec = config.build_model();
        const CostSpec cost_spec = config.build_cost();
        const TimeGrid time_grid = config.grid();
        std::vector<std::pair<double, Vec>> probes;
        const Vec origin = Vec::Zero(spec.dim);
        for (double t : {0.0, 0.5 * config.horizon, config.horizon}) {
            probes.emplace_back(t, origin);
            probes.emplace_back(t, Vec(Vec::Ones(spec.dim)));
        }
        const auto report = validate_model(spec, cost_spec, time_grid, probes);
        if (!report.valid())
            throw ConfigError("model validation failed: " + report.to_string());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model construction failed: ") + e.what());
    }

    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

std::string RunConfig::echo() const {
    std::ostringstream out;
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    out << "[model]\nfamily = " << model_family << "\n";
    for (const auto& [k, v] : model_params) out << k << " = " << num(v) << "\n";
    out << "[cost]\nfamily = " << cost_family << "\n";
    for (const auto& [k, v] : cost_params) out << k << " = " << num(v) << "\n";
    out << "[grid]\nhorizon = " << num(horizon) << "\nn_steps = " << n_steps << "\n";
    out << "[run]\npipeline = " << to_string(pipeline)
        << "\nn_paths = " << n_paths << "\nseed = " << seed.master
        << "\nstream = " << seed.stream << "\noutput_dir = " << output_dir << "\n";
    out << "[surface]\ntime_nodes = " << surface.time_nodes
        << "\nnodes_per_axis = " << surface.nodes_per_axis
        << "\nn_sub = " << surface.n_sub
        << "\nbox_halfwidth = " << num(surface.box_halfwidth) << "\n";
    out << "[checks]\ninject_uncorrected_drift = "
        << (checks.inject_uncorrected_drift ? "true" : "false")
        << "\nn_bins = " << checks.n_bins << "\nn_paths = " << checks.n_paths
        << "\n";
    out << "[meanfield]\nf = " << meanfield.f_family
        << "\ncoeff = " << num(meanfield.coeff)
        << "\ndamping = " << num(meanfield.damping)
        << "\ntol = " << num(meanfield.tol)
        << "\nmax_iter = " << meanfield.max_iter << "\n";
    return out.str();
}

}  // namespace exptwist
