#include "priomarket/scenario.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace priomarket {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) { throw InputError(what); }

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) fail(where + ": unknown key '" + key + "'");
    }
}

const json& require_object(const json& parent, const std::string& key, const std::string& where) {
    if (!parent.contains(key)) fail(where + "." + key + " is required");
    const auto& v = parent.at(key);
    if (!v.is_object()) fail(where + "." + key + " must be an object");
    return v;
}

double number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) fail(where + "." + key + " is required");
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(where + "." + key + " must be a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& key, const std::string& where,
                 double fallback) {
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

bool boolean_or(const json& obj, const std::string& key, const std::string& where,
                bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) fail(where + "." + key + " must be a boolean");
    return obj.at(key).get<bool>();
}

MarketParams parse_market(const json& m) {
    reject_unknown(m, "market", {"V", "t", "theta", "delta", "lambda", "F", "M", "d0"});
    MarketParams p;
    p.V = number(m, "V", "market");
    p.t = number(m, "t", "market");
    p.theta = number(m, "theta", "market");
    p.delta = number(m, "delta", "market");
    p.lambda = number(m, "lambda", "market");
    p.F = number(m, "F", "market");
    if (!m.contains("M") || !m.at("M").is_number_integer())
        fail("market.M is required and must be an integer");
    p.M = m.at("M").get<int>();
    p.d0 = number(m, "d0", "market");
    return p;
}

std::vector<CPProfile> parse_cps(const json& root) {
    if (!root.contains("cps")) fail("cps is required");
    const auto& arr = root.at("cps");
    if (!arr.is_array()) fail("cps must be an array");
    std::vector<CPProfile> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "cps[" + std::to_string(i + 1) + "]";
        const auto& c = arr[i];
        if (!c.is_object()) fail(where + " must be an object");
        reject_unknown(c, where, {"index", "S", "r", "z"});
        CPProfile cp;
        cp.index = static_cast<int>(i) + 1;
        if (c.contains("index")) {
            if (!c.at("index").is_number_integer() || c.at("index").get<int>() != cp.index)
                fail(where + ".index must be " + std::to_string(cp.index));
        }
        cp.S = number(c, "S", where);
        cp.r = number(c, "r", where);
        cp.z = boolean_or(c, "z", where, false);
        out.push_back(cp);
    }
    return out;
}

CostModel parse_cost(const json& c) {
    reject_unknown(c, "cost", {"family", "c"});
    CostModel cost;
    if (c.contains("family")) {
        if (!c.at("family").is_string() || c.at("family").get<std::string>() != "reciprocal")
            fail("cost.family must be \"reciprocal\"");
    }
    cost.c = number_or(c, "c", "cost", 1.0);
    return cost;
}

DistributionSpec parse_distribution(const json& d) {
    reject_unknown(d, "distribution", {"knots"});
    if (!d.contains("knots") || !d.at("knots").is_array())
        fail("distribution.knots is required and must be an array");
    DistributionSpec spec;
    for (const auto& k : d.at("knots")) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
            fail("distribution.knots entries must be [position, cdf] pairs");
        spec.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    return spec;
}

DelayProfile parse_delays(const json& d) {
    reject_unknown(d, "delays", {"values", "allow_throttling"});
    if (!d.contains("values") || !d.at("values").is_array())
        fail("delays.values is required and must be an array");
    DelayProfile out;
    for (const auto& v : d.at("values")) {
        if (!v.is_number()) fail("delays.values entries must be numbers");
        out.d.push_back(v.get<double>());
    }
    out.allow_throttling = boolean_or(d, "allow_throttling", "delays", false);
    return out;
}

SweepSpec parse_sweep(const json& s) {
    reject_unknown(s, "sweep", {"path", "lo", "hi", "steps"});
    SweepSpec spec;
    if (!s.contains("path") || !s.at("path").is_string())
        fail("sweep.path is required and must be a string");
    spec.path = s.at("path").get<std::string>();
    spec.lo = number(s, "lo", "sweep");
    spec.hi = number(s, "hi", "sweep");
    if (!s.contains("steps") || !s.at("steps").is_number_integer())
        fail("sweep.steps is required and must be an integer");
    spec.steps = s.at("steps").get<int>();
    return spec;
}

int line_of(const std::string& text, std::size_t byte) {
    const auto end = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

} // namespace

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Auto: return "auto";
    case Mode::Multi: return "multi";
    case Mode::Single: return "single";
    case Mode::AllDual: return "all_dual";
    }
    return "?";
}

Mode parse_mode(const std::string& text) {
    if (text == "auto") return Mode::Auto;
    if (text == "multi") return Mode::Multi;
    if (text == "single") return Mode::Single;
    if (text == "all_dual") return Mode::AllDual;
    fail("mode must be one of auto, multi, single, all_dual (got '" + text + "')");
}

std::vector<double> SweepSpec::values() const {
    if (steps < 1) fail("sweep.steps must be >= 1");
    if (steps == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        out[static_cast<std::size_t>(i)] = (i == steps - 1) ? hi : lo + (hi - lo) * i / (steps - 1);
    return out;
}

void Scenario::validate() const {
    market.validate();
    validate_cps(market, cps);
    cost.validate();
    if (distribution) distribution->validate();
    if (delays) validate_delays(market, *delays);
    if (sweep) {
        if (sweep->steps < 1) fail("sweep.steps must be >= 1");
        if (!(sweep->lo <= sweep->hi)) fail("sweep range is empty (lo > hi)");
        Scenario probe = *this;
        probe.sweep.reset();
        apply_path(probe, sweep->path, sweep->lo);
    }
}

DelayProfile Scenario::delay_profile() const {
    return delays ? *delays : DelayProfile::uniform(market);
}

Mode Scenario::resolved_mode() const {
    if (mode != Mode::Auto) return mode;
    if (market.theta <= 0.0) return Mode::Single;
    switch (validate_assumptions(market, cps).regime) {
    case Regime::NoDual: return Mode::Single;
    case Regime::AllDual: return Mode::AllDual;
    default: return Mode::Multi;
    }
}

Scenario table2_scenario() {
    Scenario s;
    s.id = "table2_default";
    s.cps = uniform_cps(s.market, 10.0, 2.27);
    s.cost = CostModel::reciprocal(1.0);
    return s;
}

Scenario parse_scenario(const std::string& text, bool allow_throttling) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("scenario: JSON parse error at line " + std::to_string(line_of(text, e.byte)) +
             ": " + e.what());
    }
    if (!root.is_object()) fail("scenario: top level must be an object");
    reject_unknown(root, "scenario",
                   {"id", "market", "cps", "cost", "distribution", "delays", "sweep", "mode"});

    Scenario s;
    if (root.contains("id")) {
        if (!root.at("id").is_string()) fail("id must be a string");
        s.id = root.at("id").get<std::string>();
    }
    s.market = parse_market(require_object(root, "market", "scenario"));
    s.cps = parse_cps(root);
    if (root.contains("cost")) s.cost = parse_cost(require_object(root, "cost", "scenario"));
    if (root.contains("distribution"))
        s.distribution = parse_distribution(require_object(root, "distribution", "scenario"));
    if (root.contains("delays"))
        s.delays = parse_delays(require_object(root, "delays", "scenario"));
    if (root.contains("sweep")) s.sweep = parse_sweep(require_object(root, "sweep", "scenario"));
    if (root.contains("mode")) {
        if (!root.at("mode").is_string()) fail("mode must be a string");
        s.mode = parse_mode(root.at("mode").get<std::string>());
    }
    if (allow_throttling && s.delays) s.delays->allow_throttling = true;
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path, bool allow_throttling) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), allow_throttling);
}

std::string to_json(const Scenario& s) {
    json root;
    root["id"] = s.id;
    root["market"] = {{"V", s.market.V},         {"t", s.market.t},
                      {"theta", s.market.theta}, {"delta", s.market.delta},
                      {"lambda", s.market.lambda}, {"F", s.market.F},
                      {"M", s.market.M},         {"d0", s.market.d0}};
    json cps = json::array();
    for (const auto& cp : s.cps) {
        json c = {{"S", cp.S}, {"r", cp.r}};
        if (cp.z) c["z"] = true;
        cps.push_back(c);
    }
    root["cps"] = cps;
    root["cost"] = {{"family", s.cost.family_name()}, {"c", s.cost.c}};
    if (s.distribution) {
        json knots = json::array();
        for (const auto& [x, f] : s.distribution->knots) knots.push_back({x, f});
        root["distribution"] = {{"knots", knots}};
    }
    if (s.delays)
        root["delays"] = {{"values", s.delays->d}, {"allow_throttling", s.delays->allow_throttling}};
    if (s.sweep)
        root["sweep"] = {{"path", s.sweep->path},
                         {"lo", s.sweep->lo},
                         {"hi", s.sweep->hi},
                         {"steps", s.sweep->steps}};
    root["mode"] = to_string(s.mode);
    return root.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write scenario file '" + path + "'");
    out << to_json(scenario);
}

void apply_path(Scenario& s, const std::string& path, double value) {
    static const std::regex cp_path(R"(cps\[(\*|[0-9]+)\]\.(S|r))");
    std::smatch m;
    if (path == "cost.c") {
        s.cost.c = value;
    } else if (path.rfind("market.", 0) == 0) {
        const auto field = path.substr(7);
        auto& p = s.market;
        if (field == "V") p.V = value;
        else if (field == "t") p.t = value;
        else if (field == "theta") p.theta = value;
        else if (field == "delta") p.delta = value;
        else if (field == "lambda") p.lambda = value;
        else if (field == "F") p.F = value;
        else if (field == "d0") p.d0 = value;
        else fail("sweep.path: cannot sweep '" + path + "'");
    } else if (std::regex_match(path, m, cp_path)) {
        auto set = [&](CPProfile& cp) { (m[2] == "S" ? cp.S : cp.r) = value; };
        if (m[1] == "*") {
            for (auto& cp : s.cps) set(cp);
        } else {
            const int j = std::stoi(m[1]);
            if (j < 1 || j > static_cast<int>(s.cps.size()))
                fail("sweep.path: CP index " + std::to_string(j) + " out of range");
            set(s.cps[static_cast<std::size_t>(j - 1)]);
        }
    } else {
        fail("sweep.path: unknown path '" + path + "'");
    }
}

} // namespace priomarket
