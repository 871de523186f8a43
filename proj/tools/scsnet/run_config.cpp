#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "scs/analysis/pgd.hpp"
#include "scs/errors.hpp"

namespace scsnet {
namespace {

using scs::ConfigError;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
}

bool parse_integer(const std::string& s, std::uint64_t& v) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool parse_real(const std::string& s, double& v) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool parse_boolean(const std::string& s, bool& v) {
    if (s == "true") {
        v = true;
        return true;
    }
    if (s == "false") {
        v = false;
        return true;
    }
    return false;
}

bool scalar_ok(ValueType t, const std::string& s) {
    std::uint64_t i;
    double d;
    bool b;
    switch (t) {
        case ValueType::integer:
        case ValueType::integer_list:
            return s == "@seed" || parse_integer(s, i);
        case ValueType::real:
        case ValueType::real_list:
            return parse_real(s, d);
        case ValueType::boolean:
        case ValueType::boolean_list:
            return parse_boolean(s, b);
        case ValueType::text:
            return true;
        case ValueType::text_list:
            return !s.empty();
    }
    return false;
}

bool is_list(ValueType t) {
    return t == ValueType::integer_list || t == ValueType::real_list || t == ValueType::boolean_list ||
           t == ValueType::text_list;
}

const char* type_name(ValueType t) {
    switch (t) {
        case ValueType::integer: return "unsigned integer";
        case ValueType::real: return "number";
        case ValueType::boolean: return "true|false";
        case ValueType::text: return "text";
        case ValueType::integer_list: return "comma-separated unsigned integers";
        case ValueType::real_list: return "comma-separated numbers";
        case ValueType::boolean_list: return "comma-separated true|false";
        case ValueType::text_list: return "comma-separated words";
    }
    return "?";
}

std::string default_epsilon_list() {
    std::string out;
    for (double e : scs::analysis::default_epsilons()) {
        if (!out.empty()) out += ",";
        out += format_real(e);
    }
    return out;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    // shortest text that parses back to the same double
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

const std::vector<KeySpec>& key_specs() {
    using T = ValueType;
    static const std::vector<KeySpec> specs = {
        {"seed", T::integer, "0"},
        {"checkpoint", T::text, ""},

        {"data.source", T::text, "cifar10"},
        {"data.dir", T::text, ""},
        {"data.train_size", T::integer, "4000"},
        {"data.test_size", T::integer, "1000"},
        {"data.stratified", T::boolean, "true"},
        {"data.seed", T::integer, "@seed"},

        {"grid.family", T::text_list, "rohrer_100k"},
        {"grid.layer", T::text_list, "scs"},
        {"grid.activation", T::text_list, "none"},
        {"grid.pooling", T::text_list, "maxpool"},
        {"grid.norm", T::text_list, "none"},
        {"grid.p_mode", T::text_list, "learned"},
        {"grid.standardize", T::boolean_list, "false"},
        {"grid.seeds", T::integer_list, "@seed"},

        {"train.epochs", T::integer, "30"},
        {"train.batch_size", T::integer, "128"},
        {"train.eval_batch_size", T::integer, "256"},
        {"train.max_lr", T::real, "0.01"},
        {"train.pct_start", T::real, "0.3"},
        {"train.div_factor", T::real, "25"},
        {"train.final_div_factor", T::real, "10000"},
        {"train.beta1", T::real, "0.9"},
        {"train.beta2", T::real, "0.999"},
        {"train.eps", T::real, "1e-08"},
        {"train.weight_decay", T::real, "0"},

        {"aug.enabled", T::boolean, "true"},
        {"aug.crop_pad", T::integer, "4"},
        {"aug.flip_prob", T::real, "0.5"},

        {"attack.epsilons", T::real_list, default_epsilon_list()},
        {"attack.steps", T::integer, "10"},
        {"attack.step_scale", T::real, "2.5"},
        {"attack.random_start", T::boolean, "false"},
        {"attack.batch_size", T::integer, "100"},
        {"attack.seed", T::integer, "@seed"},

        {"saliency.indices", T::integer_list, "0,1,2"},
        {"saliency.reduction", T::text, "max_abs"},
        {"saliency.target", T::text, "label"},

        {"gradcheck.layers", T::text_list, "all"},
        {"gradcheck.instances", T::integer, "20"},
        {"gradcheck.threshold", T::real, "0.0001"},
        {"gradcheck.seed", T::integer, "@seed"},

        {"demo.feature", T::text, "present"},
        {"demo.sigma", T::real, "0"},
        {"demo.amplitude", T::real, "1"},
        {"demo.seed", T::integer, "@seed"},
    };
    return specs;
}

RunConfig::RunConfig() {
    for (const auto& s : key_specs()) values_[s.key] = s.default_value;
}

const KeySpec& RunConfig::spec(const std::string& key) const {
    const auto& specs = key_specs();
    auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.key == key; });
    if (it == specs.end()) throw ConfigError("unknown config key '" + key + "'");
    return *it;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeySpec& s = spec(key);
    const std::string v = trim(value);
    if (is_list(s.type)) {
        for (const auto& item : split_list(v)) {
            if (!scalar_ok(s.type, item))
                throw ConfigError("config key '" + key + "': '" + v + "' is not " + type_name(s.type));
        }
        if (v.empty()) throw ConfigError("config key '" + key + "' needs at least one value");
    } else if (!scalar_ok(s.type, v)) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not " + type_name(s.type));
    }
    if (key == "seed" && v == "@seed") throw ConfigError("config key 'seed' cannot refer to itself");
    values_[key] = v;
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(it->second));
        seen[key] = lineno;
        try {
            set(key, body.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
}

std::string RunConfig::raw(const std::string& key) const {
    const KeySpec& s = spec(key);
    std::string v = values_.at(key);
    if (s.type == ValueType::integer || s.type == ValueType::integer_list) {
        const std::string seed = values_.at("seed");
        for (auto pos = v.find("@seed"); pos != std::string::npos; pos = v.find("@seed"))
            v.replace(pos, 5, seed);
    }
    return v;
}

std::uint64_t RunConfig::integer(const std::string& key) const {
    std::uint64_t v = 0;
    parse_integer(raw(key), v);
    return v;
}

double RunConfig::real(const std::string& key) const {
    double v = 0.0;
    parse_real(raw(key), v);
    return v;
}

bool RunConfig::boolean(const std::string& key) const {
    bool v = false;
    parse_boolean(raw(key), v);
    return v;
}

std::string RunConfig::text(const std::string& key) const { return raw(key); }

std::vector<std::uint64_t> RunConfig::integer_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_list(raw(key))) {
        std::uint64_t v = 0;
        parse_integer(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(raw(key))) {
        double v = 0.0;
        parse_real(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<bool> RunConfig::boolean_list(const std::string& key) const {
    std::vector<bool> out;
    for (const auto& s : split_list(raw(key))) {
        bool v = false;
        parse_boolean(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> RunConfig::text_list(const std::string& key) const { return split_list(raw(key)); }

std::string RunConfig::snapshot() const {
    std::string out = "# resolved scsnet configuration\n";
    for (const auto& [key, value] : values_) out += key + " = " + raw(key) + "\n";
    return out;
}

}  // namespace scsnet
