#include "freqlab/report.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freqlab/config.hpp"
#include "freqlab/exponents.hpp"

namespace freqlab {

std::string scaling_csv(const std::string& experiment_id, const ScalingReport& rep) {
    std::ostringstream os;
    os << "# freqlab csv v1: scaling\n";
    os << "experiment_id,d,p,delta,witness,ratio,normalized_constant\n";
    for (const RatioSample& s : rep.samples) {
        if (s.skipped) continue;
        os << experiment_id << "," << rep.d << "," << format_g17(rep.p) << "," << format_g17(s.delta)
           << "," << s.witness << "," << format_g17(s.ratio) << "," << format_g17(s.normalized) << "\n";
    }
    return os.str();
}

std::string bilinear_csv(const std::string& experiment_id, const BilinearReport& rep) {
    std::ostringstream os;
    os << "# freqlab csv v1: bilinear\n";
    os << "experiment_id,d,p,delta,lhs,normalized_constant\n";
    for (const BilinearPoint& pt : rep.points)
        os << experiment_id << "," << rep.d << "," << format_g17(rep.p) << "," << format_g17(pt.delta)
           << "," << format_g17(pt.lhs) << "," << format_g17(pt.normalized) << "\n";
    return os.str();
}

std::string kakeya_csv(const std::string& experiment_id, int d, int k,
                       const std::vector<std::tuple<double, uint64_t, double>>& rows) {
    std::ostringstream os;
    os << "# freqlab csv v1: kakeya\n";
    os << "experiment_id,d,k,R,seed,normalized_ratio\n";
    for (const auto& [big_r, seed, ratio] : rows)
        os << experiment_id << "," << d << "," << k << "," << format_g17(big_r) << "," << seed << ","
           << format_g17(ratio) << "\n";
    return os.str();
}

std::string exponents_csv(int d_lo, int d_hi) {
    std::ostringstream os;
    os << "# freqlab csv v1: exponents\n";
    os << "d,p_circ,p_s,bilinear_square,effective_square,degenerate\n";
    for (int d = d_lo; d <= d_hi; ++d) {
        ExponentTable t = exponents(d);
        os << d << "," << t.p0.str() << "," << (t.ps ? t.ps->str() : "degenerate") << ","
           << t.bilinear_square.str() << "," << t.effective_square.str() << ","
           << (t.ps_degenerate ? 1 : 0) << "\n";
    }
    return os.str();
}

std::string scaling_json(const ScalingReport& rep, double tolerance, bool with_timestamp) {
    nlohmann::json j;
    j["op"] = rep.op_id;
    j["d"] = rep.d;
    j["p"] = rep.p;
    j["slope"] = rep.fit.slope;
    j["stderr"] = rep.fit.stderr_slope;
    j["theoretical"] = rep.theoretical_slope;
    j["tolerance"] = tolerance;
    j["pass"] = std::abs(rep.fit.slope - rep.theoretical_slope) <= tolerance;
    j["dominant_witness"] = rep.dominant_witness;
    j["skipped"] = rep.skipped_deltas;
    if (with_timestamp) {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        j["meta"]["timestamp"] =
            std::chrono::duration_cast<std::chrono::seconds>(now).count();
    }
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << contents;
}

}  // namespace freqlab
