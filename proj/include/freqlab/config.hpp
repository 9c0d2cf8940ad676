#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "freqlab/multiplier.hpp"

namespace freqlab {

/// Config-file or grammar failure; carries a line number for diagnostics.
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int l, const std::string& msg)
        : std::runtime_error("line " + std::to_string(l) + ": " + msg), line(l) {}
};

/// Strict line-based `key = value` file with [section] headers and # comments.
/// Unknown keys are the caller's problem: consume() tracks what was read and
/// check_consumed() fails fast on anything left over.
class ConfigFile {
  public:
    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::string& path);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key, const std::string& dflt) const;
    void check_consumed() const;  // throws ConfigError on the first untouched key

    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };
    const std::map<std::string, std::map<std::string, Entry>>& sections() const { return sections_; }

  private:
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// "2^-6" | "0.015625" -> double (dyadic powers preferred).
double parse_dyadic(const std::string& s);

/// "2^-3..2^-8" -> descending dyadic ladder.
std::vector<double> parse_ladder(const std::string& s);

/// "4,6" -> values.
std::vector<double> parse_double_list(const std::string& s);

/// Operator spec mini-grammar:
///   tdelta(phase=paraboloid,delta=2^-6)
///   sdelta(phase=affine-time,delta=2^-6,eta=bump)
///   spherical(delta=2^-6)
///   br(alpha=1,t=1)
///   stein(alpha=1,t0=0.5,t1=2,nt=512)
OperatorSpec parse_operator_spec(const std::string& s, int d);
std::string print_operator_spec(const OperatorSpec& spec);

/// %.17g formatting used by every CSV emitter (golden-file stable).
std::string format_g17(double v);

}  // namespace freqlab
