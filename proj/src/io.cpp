#include "ramansim/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ramansim {

namespace {

std::string g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string f6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string hex64(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void render_mode_rows(std::ostringstream& out, char mode, const std::vector<double>& dist) {
    for (size_t n = 0; n < dist.size(); ++n)
        out << mode << "," << n << "," << g17(dist[n]) << "\n";
}

} // namespace

std::string metadata_header(const OutputMeta& meta) {
    std::ostringstream out;
    out << "# " << version_string << "\n";
    out << "# config_hash: " << hex64(meta.config_hash) << "\n";
    out << "# space: n_max_a=" << meta.space.n_max_a << " n_max_b=" << meta.space.n_max_b
        << "\n";
    return out.str();
}

std::string render_scan_csv(const ScanResult& result, const OutputMeta& meta) {
    std::ostringstream out;
    out << metadata_header(meta);
    out << "delta_khz,p_g\n";
    for (const auto& p : result.points)
        out << f6(units::to_khz(p.delta)) << "," << g17(p.p_g) << "\n";
    return out.str();
}

std::string render_fringe_csv(const FringeResult& result, const OutputMeta& meta) {
    std::ostringstream out;
    out << metadata_header(meta);
    out << "offset_hz,p_g\n";
    for (const auto& p : result.points)
        out << f6(p.offset_hz) << "," << g17(p.p_g) << "\n";
    return out.str();
}

std::string render_prepare_report(const RamanPrepResult& result, const OutputMeta& meta) {
    std::ostringstream out;
    out << metadata_header(meta);
    out << "success_probability = " << g17(result.success_probability) << "\n";
    out << "p2_given_g = " << g17(result.p2_given_g) << "\n";
    out << "mean_a_given_g = " << g17(result.mean_a_given_g) << "\n";
    out << "mean_b_given_g = " << g17(result.mean_b_given_g) << "\n";
    out << "mode,n,probability\n";
    render_mode_rows(out, 'a', result.dist_a_given_g);
    render_mode_rows(out, 'b', result.dist_b_given_g);
    return out.str();
}

std::string render_ramsey_report(const FringeResult& result, const OutputMeta& meta) {
    const char* scenario = "raman";
    if (result.spec.scenario == RamseyScenario::vacuum_ref)
        scenario = "vacuum_ref";
    else if (result.spec.scenario == RamseyScenario::one_photon_ref)
        scenario = "one_photon_ref";
    std::ostringstream out;
    out << metadata_header(meta);
    out << "scenario = " << scenario << "\n";
    out << "reference = " << result.reference << "\n";
    out << "fitted_phase_rad = " << g17(result.fitted_phase) << "\n";
    out << "fitted_contrast = " << g17(result.fitted_contrast) << "\n";
    out << "raw_phase_rad = " << g17(result.raw_phase) << "\n";
    out << "reference_phase_rad = " << g17(result.reference_phase) << "\n";
    return out.str();
}

std::string render_reverse_raman_report(const ReverseRamanResult& result, int n,
                                        const OutputMeta& meta) {
    std::ostringstream out;
    out << metadata_header(meta);
    out << "scenario = reverse-raman\n";
    out << "n = " << n << "\n";
    out << "delta_peak_khz = " << f6(units::to_khz(result.delta_peak)) << "\n";
    out << "transfer = " << g17(result.transfer) << "\n";
    out << "forward_transfer = " << g17(result.forward_transfer) << "\n";
    out << "peak_n_b = " << result.peak_n_b << "\n";
    out << "mode,n,probability\n";
    render_mode_rows(out, 'b', result.dist_b_given_e);
    return out.str();
}

std::string render_fifth_order_report(const FifthOrderResult& result, int n,
                                      const OutputMeta& meta) {
    std::ostringstream out;
    out << metadata_header(meta);
    out << "scenario = fifth-order\n";
    out << "n = " << n << "\n";
    out << "delta_peak_khz = " << f6(units::to_khz(result.delta_peak)) << "\n";
    out << "transfer = " << g17(result.transfer) << "\n";
    return out.str();
}

std::string render_config_echo(const RunConfig& cfg) {
    std::ostringstream out;
    out << "# " << version_string << "\n";
    out << "# config_hash: " << hex64(cfg.config_hash) << "\n";
    out << cfg.canonical;
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    try {
        const fs::path p(path);
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot create output directory for " + path + ": " + e.what());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open output file: " + path);
    out << content;
    out.flush();
    if (!out)
        throw IoError("failed writing output file: " + path);
}

} // namespace ramansim
