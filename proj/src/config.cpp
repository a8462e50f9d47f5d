#include "dualprice/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dualprice {

namespace {

std::string_view trim(std::string_view s) {
    const auto notspace = [](char c) {
        return c != ' ' && c != '\t' && c != '\r';
    };
    while (!s.empty() && !notspace(s.front())) s.remove_prefix(1);
    while (!s.empty() && !notspace(s.back())) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s, int line_no) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": bad number '" + std::string(s) + "'");
    return v;
}

ConfigValue parse_value(std::string_view s, int line_no) {
    if (s == "true") return true;
    if (s == "false") return false;
    if (!s.empty() && s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw std::invalid_argument("config line " +
                                        std::to_string(line_no) +
                                        ": unterminated string");
        return std::string(s.substr(1, s.size() - 2));
    }
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']')
            throw std::invalid_argument("config line " +
                                        std::to_string(line_no) +
                                        ": unterminated array");
        std::vector<double> arr;
        std::string_view body = s.substr(1, s.size() - 2);
        while (!body.empty()) {
            const size_t comma = body.find(',');
            std::string_view tok = trim(body.substr(0, comma));
            if (!tok.empty()) arr.push_back(parse_number(tok, line_no));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        return arr;
    }
    return parse_number(s, line_no);
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
    ConfigMap out;
    std::string section;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        const size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " +
                                            std::to_string(line_no) +
                                            ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " +
                                        std::to_string(line_no) +
                                        ": expected key = value");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty())
            throw std::invalid_argument("config line " +
                                        std::to_string(line_no) +
                                        ": empty key");
        if (!section.empty()) key = section + "." + key;
        out[key] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return out;
}

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

class Reader {
public:
    explicit Reader(const ConfigMap& m) : m_(m) {}

    bool has(const std::string& k) const { return m_.count(k) > 0; }

    double num(const std::string& k) const {
        return get<double>(k, "number");
    }
    double num_or(const std::string& k, double fallback) const {
        return has(k) ? num(k) : fallback;
    }
    bool flag_or(const std::string& k, bool fallback) const {
        return has(k) ? get<bool>(k, "boolean") : fallback;
    }
    std::string str(const std::string& k) const {
        return get<std::string>(k, "string");
    }
    std::string str_or(const std::string& k, const std::string& f) const {
        return has(k) ? str(k) : f;
    }
    std::vector<double> arr(const std::string& k) const {
        return get<std::vector<double>>(k, "array");
    }

private:
    template <class T>
    T get(const std::string& k, const char* what) const {
        auto it = m_.find(k);
        if (it == m_.end())
            throw std::invalid_argument("config: missing key '" + k + "'");
        if (const T* v = std::get_if<T>(&it->second)) return *v;
        throw std::invalid_argument("config: key '" + k + "' must be a " +
                                    what);
    }
    const ConfigMap& m_;
};

RevenueCurve read_curve(const Reader& r, const std::string& sec, Market m) {
    const std::string kind = r.str_or(sec + ".curve", "linear");
    if (kind == "linear") {
        return RevenueCurve::linear(m, r.num(sec + ".b"), r.num(sec + ".c"),
                                    r.num_or(sec + ".d_lower", 0.0),
                                    r.num(sec + ".d_upper"));
    }
    if (kind == "tabulated") {
        const std::vector<double> flat = r.arr(sec + ".points");
        if (flat.size() < 4 || flat.size() % 2 != 0)
            throw std::invalid_argument(
                "config: " + sec + ".points needs flat (d, p) pairs");
        std::vector<std::array<double, 2>> pts;
        for (size_t i = 0; i + 1 < flat.size(); i += 2)
            pts.push_back({flat[i], flat[i + 1]});
        return RevenueCurve::tabulated(m, std::move(pts));
    }
    throw std::invalid_argument("config: unknown curve kind '" + kind + "'");
}

NoiseComponent read_component(const Reader& r, const std::string& sec,
                              const std::string& name, double target) {
    const std::string kind = r.str_or(sec + "." + name, "point");
    if (kind == "point") return PointMass{target};
    if (kind == "truncnormal")
        return TruncatedNormal{target, r.num(sec + "." + name + "_sigma"),
                               r.num(sec + "." + name + "_lo"),
                               r.num(sec + "." + name + "_hi")};
    throw std::invalid_argument("config: unknown noise kind '" + kind + "'");
}

}  // namespace

LoadedInstance load_instance_text(std::string_view text) {
    const ConfigMap map = parse_config(text);
    const Reader r(map);

    LoadedInstance li;
    li.hash = fnv1a64(text);

    ProblemSpec& spec = li.spec;
    spec.T = static_cast<int>(r.num("problem.T"));
    spec.q = r.arr("problem.q");
    spec.last_period_rule = r.flag_or("problem.last_period_rule", true);

    spec.costs.c_h = r.num("costs.c_h");
    spec.costs.c_p = r.num("costs.c_p");
    spec.costs.c_e = r.num("costs.c_e");
    spec.costs.alpha = r.num("costs.alpha");

    spec.curve_s = {read_curve(r, "market.s", Market::OnSite)};
    spec.curve_l = {read_curve(r, "market.l", Market::LongDistance)};
    spec.noise_s = {MarketNoise{read_component(r, "market.s", "eps", 1.0),
                                read_component(r, "market.s", "omega", 0.0)}};
    spec.noise_l = {MarketNoise{read_component(r, "market.l", "eps", 1.0),
                                read_component(r, "market.l", "omega", 0.0)}};

    const std::string corr = r.str_or("correlation.type", "independent");
    if (corr == "independent")
        spec.correlation = Independent{};
    else if (corr == "perfect_linear")
        spec.correlation = PerfectLinear{r.num("correlation.a")};
    else
        throw std::invalid_argument("config: unknown correlation '" + corr +
                                    "'");

    if (r.has("grid.I_min")) {
        li.grid.set = true;
        li.grid.I_min = r.num("grid.I_min");
        li.grid.I_max = r.num("grid.I_max");
        li.grid.step = r.num_or("grid.step", 0.05);
    }
    li.nodes = static_cast<int>(r.num_or("quadrature.nodes", 32));
    return li;
}

LoadedInstance load_instance_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_instance_text(buf.str());
}

const char* bundled_example_config() {
    return R"(# Two-period dual-market reference instance
[problem]
T = 2
q = [2.0, 1.0]
last_period_rule = true

[costs]
c_h = 2.0
c_p = 5.0
c_e = 10.0
alpha = 0.8

[market.s]
curve = "linear"
b = 20.0
c = 2.0
d_lower = 0.0
d_upper = 9.0
eps = "truncnormal"
eps_sigma = 0.6
eps_lo = 0.0
eps_hi = 2.0

[market.l]
curve = "linear"
b = 18.0
c = 2.0
d_lower = 0.0
d_upper = 9.0
eps = "truncnormal"
eps_sigma = 0.9
eps_lo = 0.0
eps_hi = 2.0

[grid]
I_min = -25.0
I_max = 10.0
step = 0.05

[quadrature]
nodes = 32
)";
}

}  // namespace dualprice
