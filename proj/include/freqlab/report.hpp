#pragma once

#include <string>

#include "freqlab/kakeya.hpp"
#include "freqlab/lab.hpp"

namespace freqlab {

/// CSV with the v1 schema header comment; floats at 17 significant digits so
/// golden files are stable. No timestamps (those live in JSON meta only).
std::string scaling_csv(const std::string& experiment_id, const ScalingReport& rep);
std::string bilinear_csv(const std::string& experiment_id, const BilinearReport& rep);
std::string kakeya_csv(const std::string& experiment_id, int d, int k,
                       const std::vector<std::tuple<double, uint64_t, double>>& rows);  // (R, seed, ratio)
std::string exponents_csv(int d_lo, int d_hi);

/// JSON summary for a scaling run: slope, stderr, theoretical, pass flag.
/// The timestamp is confined to the "meta" object.
std::string scaling_json(const ScalingReport& rep, double tolerance, bool with_timestamp = true);

void write_file(const std::string& path, const std::string& contents);

}  // namespace freqlab
