#include "shortfall/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace shortfall {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "market.crr.s0", "market.crr.u",    "market.crr.d",    "market.crr.p",    "market.crr.n",
        "market.bs.s",   "market.bs.mu",    "market.bs.sigma", "market.bs.T",     "market.tri.s",
        "market.tri.a",  "market.tri.b",    "market.tri.c",    "market.tri.p1",   "market.tri.p2",
        "market.tri.p3", "claim.call.strike", "claim.table",   "loss.family",     "loss.gamma",
        "loss.lambda",   "loss.alpha",      "budget.x0",
    };
    return keys;
}

std::string where(const std::string& key, const ConfigValue& v) {
    return v.line > 0 ? "line " + std::to_string(v.line) + " (" + key + ")" : "field " + key;
}

void insert(ConfigMap& out, const std::string& key, ConfigValue value) {
    if (!known_keys().count(key)) throw ConfigError(where(key, value) + ": unknown key");
    if (out.count(key)) throw ConfigError(where(key, value) + ": duplicate key");
    out.emplace(key, std::move(value));
}

class Reader {
public:
    explicit Reader(const ConfigMap& values) : values_(values) {}

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    bool has_prefix(const std::string& prefix) const {
        return std::any_of(values_.begin(), values_.end(), [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
    }

    Rational number(const std::string& key) const {
        const ConfigValue& v = get(key);
        if (v.is_list || v.items.size() != 1) throw ConfigError(where(key, v) + ": expected a single number");
        return parse(key, v, v.items.front());
    }

    Rational number_or(const std::string& key, Rational fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::vector<Rational> list(const std::string& key) const {
        const ConfigValue& v = get(key);
        if (!v.is_list) throw ConfigError(where(key, v) + ": expected a list [h1, h2, ...]");
        std::vector<Rational> out;
        for (const auto& item : v.items) out.push_back(parse(key, v, item));
        return out;
    }

    std::string word(const std::string& key) const {
        const ConfigValue& v = get(key);
        if (v.is_list || v.items.size() != 1) throw ConfigError(where(key, v) + ": expected a single word");
        return v.items.front();
    }

    int integer(const std::string& key) const {
        const Rational r = number(key);
        if (denominator(r) != 1 || r < 1 || r > 64) {
            throw ConfigError(where(key, get(key)) + ": expected a positive integer");
        }
        return numerator(r).convert_to<int>();
    }

    // Rethrows domain errors from validation with the field name attached.
    template <typename F>
    auto checked(const std::string& what, F&& f) const {
        try {
            return f();
        } catch (const ConfigError&) {
            throw;
        } catch (const DomainError& e) {
            throw ConfigError(what + ": " + e.what());
        }
    }

private:
    const ConfigValue& get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required field " + key);
        return it->second;
    }

    static Rational parse(const std::string& key, const ConfigValue& v, const std::string& text) {
        try {
            return parse_rational(text);
        } catch (const DomainError& e) {
            throw ConfigError(where(key, v) + ": " + e.what());
        }
    }

    const ConfigMap& values_;
};

void flatten(const nlohmann::json& node, const std::string& prefix, ConfigMap& out) {
    if (node.is_object()) {
        for (const auto& [k, child] : node.items()) flatten(child, prefix.empty() ? k : prefix + "." + k, out);
        return;
    }
    auto scalar_text = [&](const nlohmann::json& x) -> std::string {
        if (x.is_string()) return x.get<std::string>();
        if (x.is_number_integer()) return std::to_string(x.get<long long>());
        if (x.is_number_unsigned()) return std::to_string(x.get<unsigned long long>());
        if (x.is_number_float()) return decimal_string(x.get<double>());
        throw ConfigError("field " + prefix + ": expected a number or string");
    };
    ConfigValue value;
    if (node.is_array()) {
        value.is_list = true;
        for (const auto& item : node) value.items.push_back(scalar_text(item));
    } else {
        value.items.push_back(scalar_text(node));
    }
    insert(out, prefix, std::move(value));
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Bs: return "bs";
        case ModelKind::Crr: return "crr";
        case ModelKind::Tri: return "tri";
    }
    return "unknown";
}

ConfigMap parse_key_values(std::string_view text) {
    ConfigMap out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw.substr(0, raw.find('#'));
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string rhs = trim(std::string_view(line).substr(eq + 1));
        ConfigValue value;
        value.line = line_no;
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (rhs.empty()) throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): empty value");
        if (rhs.front() == '[') {
            if (rhs.back() != ']') throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): unterminated list");
            value.is_list = true;
            std::string inner = rhs.substr(1, rhs.size() - 2);
            std::istringstream items(inner);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) {
                    throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): empty list entry");
                }
                value.items.push_back(item);
            }
        } else {
            std::string word = rhs;
            if (word.size() >= 2 && word.front() == '"' && word.back() == '"') word = word.substr(1, word.size() - 2);
            value.items.push_back(word);
        }
        insert(out, key, std::move(value));
    }
    return out;
}

ConfigMap parse_json_config(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("JSON: top level must be an object");
    ConfigMap out;
    flatten(doc, "", out);
    return out;
}

ConfigMap parse_config_text(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return parse_json_config(text);
    return parse_key_values(text);
}

ProblemSpec build_problem(const ConfigMap& values) {
    const Reader r(values);
    ProblemSpec spec;

    const int fragments = int(r.has_prefix("market.crr.")) + int(r.has_prefix("market.bs.")) +
                          int(r.has_prefix("market.tri."));
    if (fragments != 1) throw ConfigError("exactly one of market.crr, market.bs, market.tri must be given");

    if (r.has_prefix("market.crr.")) {
        spec.model = ModelKind::Crr;
        CrrMarket<Rational> m{r.number("market.crr.s0"), r.number("market.crr.u"), r.number("market.crr.d"),
                              r.number("market.crr.p"), r.integer("market.crr.n")};
        r.checked("market.crr", [&] { m.validate(); return 0; });
        spec.crr = m;
    } else if (r.has_prefix("market.bs.")) {
        spec.model = ModelKind::Bs;
        BsMarket m{to_double(r.number("market.bs.s")), to_double(r.number("market.bs.mu")),
                   to_double(r.number("market.bs.sigma")), to_double(r.number("market.bs.T"))};
        r.checked("market.bs", [&] { m.validate(); return 0; });
        spec.bs = m;
    } else {
        spec.model = ModelKind::Tri;
        TrinomialMarket<Rational> m{r.number("market.tri.s"),  r.number("market.tri.a"),  r.number("market.tri.b"),
                                    r.number("market.tri.c"),  r.number("market.tri.p1"), r.number("market.tri.p2"),
                                    r.number("market.tri.p3")};
        r.checked("market.tri", [&] { m.validate(); return 0; });
        spec.tri = m;
    }

    const bool call = r.has("claim.call.strike");
    const bool table = r.has("claim.table");
    if (call == table) throw ConfigError("exactly one of claim.call.strike and claim.table must be given");
    if (call) {
        spec.claim = r.checked("claim.call.strike", [&] { return ClaimSpec<Rational>::call(r.number("claim.call.strike")); });
    } else {
        spec.claim = r.checked("claim.table", [&] { return ClaimSpec<Rational>::table(r.list("claim.table")); });
    }
    if (spec.model == ModelKind::Bs && !call) throw ConfigError("claim.table: the bs model supports call claims only");
    if (spec.model == ModelKind::Tri && table) {
        r.checked("claim.table", [&] { spec.claim.require_outcomes(3); return 0; });
    }
    if (spec.model == ModelKind::Crr && table) {
        r.checked("claim.table", [&] {
            spec.claim.require_outcomes(std::size_t{1} << std::min(spec.crr->periods, 30));
            return 0;
        });
    }

    const std::string family = r.has("loss.family") ? r.word("loss.family") : "power";
    const Rational gamma = r.number_or("loss.gamma", Rational(1));
    const Rational alpha = r.number_or("loss.alpha", Rational(0));
    if (family == "power") {
        if (r.has("loss.lambda")) throw ConfigError("loss.lambda: only used with loss.family = scaled");
        spec.loss = r.checked("loss", [&] { return LossSpec<Rational>::power(gamma, alpha); });
    } else if (family == "scaled") {
        spec.loss = r.checked("loss", [&] { return LossSpec<Rational>::scaled(r.number("loss.lambda"), gamma, alpha); });
    } else {
        throw ConfigError("loss.family: expected 'power' or 'scaled', got '" + family + "'");
    }

    spec.x0 = r.number("budget.x0");
    if (spec.x0 < 0) throw ConfigError("budget.x0: must be nonnegative");
    return spec;
}

ProblemSpec load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return build_problem(parse_config_text(buffer.str()));
}

}  // namespace shortfall
