#include "ulamsteer/config.hpp"

#include "ulamsteer/error.hpp"
#include "ulamsteer/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace ulamsteer {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

const json& need(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + ": missing key '" + key + "'");
    return *it;
}

template <class T>
T as(const json& v, const std::string& where) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

template <class T>
T get_or(const json& obj, const std::string& where, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as<T>(*it, where + "." + key);
}

std::size_t count_value(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::vector<std::size_t> counts(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of counts");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(count_value(v[i], where));
    return out;
}

Box parse_box(const json& obj, const std::string& where) {
    Box b{as<std::vector<double>>(need(obj, where, "lower"), where + ".lower"),
          as<std::vector<double>>(need(obj, where, "upper"), where + ".upper")};
    if (b.lower.size() != b.upper.size()) throw ConfigError(where + ": lower and upper differ in dimension");
    return b;
}

MeasureSpec parse_measure(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    MeasureSpec m;
    m.type = as<std::string>(need(obj, where, "type"), where + ".type");
    if (m.type == "dirac") {
        allow_keys(obj, where, {"type", "point"});
        m.point = as<std::vector<double>>(need(obj, where, "point"), where + ".point");
    } else if (m.type == "uniform") {
        allow_keys(obj, where, {"type", "lower", "upper"});
        if (obj.contains("lower") || obj.contains("upper")) m.box = parse_box(obj, where);
    } else if (m.type == "gaussian_mixture") {
        allow_keys(obj, where, {"type", "centers", "weights", "sigmas", "truncate_sigmas"});
        m.centers = as<std::vector<State>>(need(obj, where, "centers"), where + ".centers");
        m.weights = as<std::vector<double>>(need(obj, where, "weights"), where + ".weights");
        m.sigmas = as<std::vector<double>>(need(obj, where, "sigmas"), where + ".sigmas");
        m.truncate_sigmas = get_or<double>(obj, where, "truncate_sigmas", 0.0);
    } else if (m.type == "explicit") {
        allow_keys(obj, where, {"type", "weights", "file"});
        if (obj.contains("weights") == obj.contains("file"))
            throw ConfigError(where + ": explicit measure needs exactly one of 'weights' or 'file'");
        if (obj.contains("weights")) m.weights = as<std::vector<double>>(obj["weights"], where + ".weights");
        else m.file = as<std::string>(obj["file"], where + ".file");
    } else {
        throw ConfigError(where + ": unknown measure type '" + m.type + "'");
    }
    return m;
}

SystemSpec parse_system(const json& obj) {
    const std::string where = "system";
    SystemSpec s;
    s.name = as<std::string>(need(obj, where, "name"), where + ".name");
    if (s.name == "translation") {
        allow_keys(obj, where, {"name", "clamp"});
    } else if (s.name == "double_integrator") {
        allow_keys(obj, where, {"name", "clamp", "drift"});
        s.drift = get_or<double>(obj, where, "drift", s.drift);
    } else if (s.name == "gyre_unicycle" || s.name == "double_gyre") {
        s.name = "gyre_unicycle";
        allow_keys(obj, where, {"name", "clamp", "A", "beta", "omega", "tau", "rk4_steps"});
        s.gyre.A = get_or<double>(obj, where, "A", s.gyre.A);
        s.gyre.beta = get_or<double>(obj, where, "beta", s.gyre.beta);
        s.gyre.omega = get_or<double>(obj, where, "omega", s.gyre.omega);
        s.gyre.tau = get_or<double>(obj, where, "tau", s.gyre.tau);
        s.gyre.rk4_steps = get_or<int>(obj, where, "rk4_steps", s.gyre.rk4_steps);
    } else {
        throw ConfigError("system: unknown system '" + s.name + "'");
    }
    s.clamp = get_or<bool>(obj, where, "clamp", true);
    return s;
}

} // namespace

std::uint64_t RunConfig::hash() const {
    Fnv1a h;
    h.add(std::string_view(canonical));
    return h.value();
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(root, "config", {"system", "domain", "controls", "horizon", "cost", "cost_per_volume",
                                "quadrature", "initial", "target", "tolerances", "rollout", "seed", "output"});
    RunConfig c;
    c.base_dir = base_dir;
    c.system = parse_system(need(root, "config", "system"));

    const json& dom = need(root, "config", "domain");
    allow_keys(dom, "domain", {"lower", "upper", "resolution"});
    c.domain = parse_box(dom, "domain");
    c.resolution = counts(need(dom, "domain", "resolution"), "domain.resolution");

    const json& ctl = need(root, "config", "controls");
    allow_keys(ctl, "controls", {"lower", "upper", "counts"});
    c.control_box = parse_box(ctl, "controls");
    c.control_counts = counts(need(ctl, "controls", "counts"), "controls.counts");

    c.horizon = count_value(need(root, "config", "horizon"), "horizon");
    if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
    c.cost = get_or<std::string>(root, "config", "cost", c.cost);
    c.cost_per_volume = get_or<bool>(root, "config", "cost_per_volume", false);
    if (root.contains("quadrature")) c.quadrature = count_value(root["quadrature"], "quadrature");
    if (c.quadrature < 1) throw ConfigError("quadrature must be >= 1");

    c.initial = parse_measure(need(root, "config", "initial"), "initial");
    c.target = parse_measure(need(root, "config", "target"), "target");

    if (root.contains("tolerances")) {
        const json& t = root["tolerances"];
        allow_keys(t, "tolerances", {"lp", "eps_mass", "terminal", "consistency", "support"});
        c.tolerances.lp = get_or<double>(t, "tolerances", "lp", c.tolerances.lp);
        c.tolerances.eps_mass = get_or<double>(t, "tolerances", "eps_mass", c.tolerances.eps_mass);
        c.tolerances.terminal = get_or<double>(t, "tolerances", "terminal", c.tolerances.terminal);
        c.tolerances.consistency = get_or<double>(t, "tolerances", "consistency", c.tolerances.consistency);
        c.tolerances.support = get_or<double>(t, "tolerances", "support", c.tolerances.support);
        if (!(c.tolerances.lp > 0.0) || !(c.tolerances.eps_mass >= 0.0) || !(c.tolerances.terminal > 0.0) ||
            !(c.tolerances.consistency > 0.0) || !(c.tolerances.support >= 0.0))
            throw ConfigError("tolerances must be positive");
    }
    if (root.contains("rollout")) {
        const json& r = root["rollout"];
        allow_keys(r, "rollout", {"agents", "keep_paths", "initial", "point"});
        if (r.contains("agents")) c.rollout.agents = count_value(r["agents"], "rollout.agents");
        if (r.contains("keep_paths")) c.rollout.keep_paths = count_value(r["keep_paths"], "rollout.keep_paths");
        c.rollout.initial = get_or<std::string>(r, "rollout", "initial", c.rollout.initial);
        if (c.rollout.initial == "point")
            c.rollout.point = as<std::vector<double>>(need(r, "rollout", "point"), "rollout.point");
        else if (c.rollout.initial != "measure")
            throw ConfigError("rollout.initial must be 'measure' or 'point'");
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
        c.seed = root["seed"].get<std::uint64_t>();
    }
    c.output = get_or<std::string>(root, "config", "output", c.output);
    c.canonical = root.dump();

    // Resolve names and shapes now so that errors surface as config errors.
    try {
        make_partition(c);
        make_controls(c);
        make_system(c);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (c.cost != "quadratic" && c.cost != "zero" && c.cost != "state" && c.cost != "control")
        throw ConfigError("unknown cost function '" + c.cost + "'");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

Partition make_partition(const RunConfig& c) {
    return build_partition(c.domain.lower, c.domain.upper, c.resolution);
}

ControlGrid make_controls(const RunConfig& c) {
    return discretize_controls(c.control_box.lower, c.control_box.upper, c.control_counts);
}

std::unique_ptr<SystemMap> make_system(const RunConfig& c) {
    const SystemSpec& s = c.system;
    std::unique_ptr<SystemMap> sys;
    if (s.name == "translation") {
        sys = std::make_unique<TranslationSystem>(c.domain, s.clamp);
    } else if (s.name == "double_integrator") {
        sys = std::make_unique<DoubleIntegrator>(c.domain, s.clamp, s.drift);
    } else if (s.name == "gyre_unicycle") {
        s.gyre.validate();
        sys = std::make_unique<GyreUnicycle>(c.domain, s.gyre, s.clamp);
    } else {
        throw ConfigError("unknown system '" + s.name + "'");
    }
    if (sys->control_dim() != c.control_box.dim())
        throw ConfigError("system '" + s.name + "' takes " + std::to_string(sys->control_dim()) +
                          "-dimensional controls");
    return sys;
}

std::vector<double> read_weights_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open weights file " + path);
    std::vector<double> w;
    std::string token;
    while (in >> token) {
        if (token.empty() || token[0] == '#') {
            std::getline(in, token);
            continue;
        }
        std::replace(token.begin(), token.end(), ',', ' ');
        std::istringstream ts(token);
        double v;
        while (ts >> v) w.push_back(v);
        if (!ts.eof()) throw ConfigError("weights file " + path + ": cannot parse '" + token + "'");
    }
    return w;
}

namespace {

Measure normalized(std::vector<double> w, const std::string& what) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError(what + " has no mass on the grid");
    for (double& v : w) v /= total;
    Measure m(std::move(w));
    m.validate();
    return m;
}

} // namespace

Measure project_measure(const MeasureSpec& spec, const Partition& partition, std::size_t q,
                        const std::string& base_dir) {
    const std::size_t nx = partition.size();
    const std::size_t dim = partition.dim();
    if (spec.type == "dirac") {
        if (spec.point.size() != dim) throw ConfigError("dirac point has the wrong dimension");
        auto cell = partition.try_locate(spec.point);
        if (!cell) throw ConfigError("dirac point lies outside the domain");
        return Measure::dirac(nx, *cell);
    }
    if (spec.type == "uniform") {
        if (!spec.box) return Measure::uniform(nx);
        if (spec.box->dim() != dim) throw ConfigError("uniform box has the wrong dimension");
        for (std::size_t d = 0; d < dim; ++d)
            if (!(spec.box->lower[d] < spec.box->upper[d])) throw ConfigError("uniform box is empty");
        std::vector<double> w(nx, 0.0);
        for (std::size_t i = 0; i < nx; ++i)
            for (const State& x : partition.quadrature_points(i, q))
                if (spec.box->contains(x)) w[i] += 1.0;
        return normalized(std::move(w), "uniform measure");
    }
    if (spec.type == "gaussian_mixture") {
        const std::size_t m = spec.centers.size();
        if (m == 0 || spec.weights.size() != m || spec.sigmas.size() != m)
            throw ConfigError("gaussian mixture needs matching centers, weights and sigmas");
        for (std::size_t c = 0; c < m; ++c) {
            if (spec.centers[c].size() != dim) throw ConfigError("gaussian center has the wrong dimension");
            if (!(spec.sigmas[c] > 0.0)) throw ConfigError("gaussian sigma must be positive");
            if (!(spec.weights[c] >= 0.0)) throw ConfigError("gaussian weights must be nonnegative");
        }
        if (spec.truncate_sigmas < 0.0) throw ConfigError("truncate_sigmas must be nonnegative");
        std::vector<double> w(nx, 0.0);
        for (std::size_t i = 0; i < nx; ++i) {
            double acc = 0.0;
            for (const State& x : partition.quadrature_points(i, q))
                for (std::size_t c = 0; c < m; ++c) {
                    double r2 = 0.0;
                    for (std::size_t d = 0; d < dim; ++d) r2 += (x[d] - spec.centers[c][d]) * (x[d] - spec.centers[c][d]);
                    const double s = spec.sigmas[c];
                    if (spec.truncate_sigmas > 0.0 && r2 > spec.truncate_sigmas * spec.truncate_sigmas * s * s)
                        continue;
                    const double norm = std::pow(2.0 * std::numbers::pi * s * s, -0.5 * static_cast<double>(dim));
                    acc += spec.weights[c] * norm * std::exp(-0.5 * r2 / (s * s));
                }
            w[i] = acc;
        }
        return normalized(std::move(w), "gaussian mixture");
    }
    if (spec.type == "explicit") {
        std::vector<double> w = spec.weights;
        if (!spec.file.empty()) {
            std::filesystem::path p(spec.file);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            w = read_weights_file(p.string());
        }
        if (w.size() != nx)
            throw ConfigError("explicit measure has " + std::to_string(w.size()) + " weights for " +
                              std::to_string(nx) + " cells");
        for (double v : w)
            if (!(v >= 0.0)) throw ConfigError("explicit measure has a negative weight");
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("explicit weights do not sum to 1");
        return normalized(std::move(w), "explicit measure");
    }
    throw ConfigError("unknown measure type '" + spec.type + "'");
}

} // namespace ulamsteer
