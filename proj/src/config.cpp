#include "freqlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace freqlab {

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}
}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cf;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(lineno, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError(lineno, "empty section name");
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected key = value");
        std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        auto& sec = cf.sections_[section];
        if (sec.count(key)) throw ConfigError(lineno, "duplicate key '" + key + "'");
        sec[key] = Entry{val, lineno, false};
    }
    return cf;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse(os.str());
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    k->second.consumed = true;
    return k->second.value;
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& dflt) const {
    auto v = get(section, key);
    return v ? *v : dflt;
}

void ConfigFile::check_consumed() const {
    for (const auto& [sec, entries] : sections_)
        for (const auto& [key, e] : entries)
            if (!e.consumed)
                throw ConfigError(e.line, "unknown key '" + key + "'" +
                                              (sec.empty() ? "" : " in [" + sec + "]"));
}

double parse_dyadic(const std::string& s) {
    std::string t = trim(s);
    size_t caret = t.find('^');
    if (caret != std::string::npos) {
        double base = std::stod(t.substr(0, caret));
        int expo = std::stoi(t.substr(caret + 1));
        return std::pow(base, expo);
    }
    return std::stod(t);
}

std::vector<double> parse_ladder(const std::string& s) {
    size_t dots = s.find("..");
    if (dots == std::string::npos) {
        std::vector<double> one{parse_dyadic(s)};
        return one;
    }
    double a = parse_dyadic(s.substr(0, dots));
    double b = parse_dyadic(s.substr(dots + 2));
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("ladder endpoints must be positive");
    std::vector<double> out;
    if (a < b) std::swap(a, b);
    for (double v = a; v >= b * (1.0 - 1e-12); v /= 2.0) out.push_back(v);
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(parse_dyadic(trim(tok)));
    return out;
}

namespace {
std::map<std::string, std::string> parse_kv_args(const std::string& inside) {
    std::map<std::string, std::string> kv;
    std::istringstream is(inside);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        // phase ids themselves contain key=value after a colon; only split on
        // the first '=' and re-join perturbed-style args handled by the caller
        size_t eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("operator spec: expected key=value, got '" + tok + "'");
        std::string key = trim(tok.substr(0, eq));
        std::string val = trim(tok.substr(eq + 1));
        if (kv.count(key)) {
            throw std::invalid_argument("operator spec: duplicate key '" + key + "'");
        }
        kv[key] = val;
    }
    return kv;
}
}  // namespace

OperatorSpec parse_operator_spec(const std::string& s, int d) {
    std::string t = trim(s);
    size_t open = t.find('(');
    if (open == std::string::npos || t.back() != ')')
        throw std::invalid_argument("operator spec: expected kind(args)");
    std::string kind = trim(t.substr(0, open));
    std::string inside = t.substr(open + 1, t.size() - open - 2);

    // phase values may contain commas (perturbed:g=cubic,eps=0.05); extract
    // the phase=... argument up front by scanning for known arg starts.
    std::string phase_arg;
    {
        size_t p = inside.find("phase=");
        if (p != std::string::npos) {
            size_t end = inside.size();
            for (const char* key : {"delta=", "alpha=", "eta=", "t0=", "t1=", "nt=", "t="}) {
                size_t q = inside.find(key, p + 6);
                if (q != std::string::npos && q > p) end = std::min(end, q);
            }
            // strip a trailing comma
            std::string seg = inside.substr(p, end - p);
            while (!seg.empty() && (seg.back() == ',' || seg.back() == ' ')) seg.pop_back();
            phase_arg = seg.substr(6);
            inside.erase(p, end - p);
        }
    }
    auto kv = parse_kv_args(inside);
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    OperatorSpec spec;
    if (kind == "tdelta" || kind == "sdelta") {
        if (phase_arg.empty()) throw std::invalid_argument("operator spec: missing phase=");
        auto delta = take("delta");
        if (!delta) throw std::invalid_argument("operator spec: missing delta=");
        PhasePtr psi = parse_phase(phase_arg, d);
        spec = (kind == "tdelta") ? make_tdelta(psi, parse_dyadic(*delta))
                                  : make_sdelta(psi, parse_dyadic(*delta));
        if (auto eta = take("eta")) {
            if (*eta == "one") spec.eta = EtaKind::One;
            else if (*eta == "bump") spec.eta = EtaKind::Bump;
            else throw std::invalid_argument("operator spec: unknown eta '" + *eta + "'");
        }
    } else if (kind == "spherical") {
        auto delta = take("delta");
        if (!delta) throw std::invalid_argument("operator spec: missing delta=");
        spec = make_spherical(parse_dyadic(*delta));
    } else if (kind == "br") {
        auto alpha = take("alpha"), t = take("t");
        if (!alpha) throw std::invalid_argument("operator spec: missing alpha=");
        spec = make_bochner_riesz(parse_dyadic(*alpha), t ? parse_dyadic(*t) : 1.0);
    } else if (kind == "stein") {
        auto alpha = take("alpha"), t0 = take("t0"), t1 = take("t1"), nt = take("nt");
        if (!alpha || !t0 || !t1) throw std::invalid_argument("operator spec: stein needs alpha,t0,t1");
        spec = make_stein_square(parse_dyadic(*alpha), parse_dyadic(*t0), parse_dyadic(*t1),
                                 nt ? std::stoi(*nt) : 512);
    } else {
        throw std::invalid_argument("operator spec: unknown kind '" + kind + "'");
    }
    if (auto t0 = take("t0")) spec.t0 = parse_dyadic(*t0);
    if (auto t1 = take("t1")) spec.t1 = parse_dyadic(*t1);
    if (auto nt = take("nt")) spec.nt = std::stoi(*nt);
    if (!kv.empty())
        throw std::invalid_argument("operator spec: unknown key '" + kv.begin()->first + "'");
    return spec;
}

std::string print_operator_spec(const OperatorSpec& spec) {
    std::ostringstream os;
    os << op_kind_name(spec.kind) << "(";
    switch (spec.kind) {
        case OpKind::TDelta:
        case OpKind::SDelta:
            os << "phase=" << spec.phase->id() << ",delta=" << spec.delta;
            if (spec.eta == EtaKind::Bump) os << ",eta=bump";
            break;
        case OpKind::SphericalSquare: os << "delta=" << spec.delta; break;
        case OpKind::BochnerRiesz: os << "alpha=" << spec.alpha << ",t=" << spec.t_br; break;
        case OpKind::SteinSquare:
            os << "alpha=" << spec.alpha << ",t0=" << spec.t0 << ",t1=" << spec.t1
               << ",nt=" << spec.nt;
            break;
    }
    os << ")";
    return os.str();
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace freqlab
