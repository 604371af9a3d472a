#pragma once

// Output artifacts.  Every file starts with the same metadata header
// (version, configuration hash, truncation sizes) so a result can always be
// traced back to the exact inputs that produced it.  Renderers return
// strings; writing is a separate step so tests can check content without
// touching the filesystem.

#include <cstdint>
#include <string>

#include "ramansim/config.hpp"
#include "ramansim/experiments.hpp"

namespace ramansim {

inline constexpr const char* version_string = "raman-lab 1.0.0";

struct OutputMeta {
    std::uint64_t config_hash = 0;
    FockSpaceConfig space;
};

std::string metadata_header(const OutputMeta& meta);

// CSV with header "delta_khz,p_g".
std::string render_scan_csv(const ScanResult& result, const OutputMeta& meta);
// CSV with header "offset_hz,p_g".
std::string render_fringe_csv(const FringeResult& result, const OutputMeta& meta);
// Key-value summary plus "mode,n,probability" rows for both modes.
std::string render_prepare_report(const RamanPrepResult& result, const OutputMeta& meta);
std::string render_ramsey_report(const FringeResult& result, const OutputMeta& meta);
std::string render_reverse_raman_report(const ReverseRamanResult& result, int n,
                                        const OutputMeta& meta);
std::string render_fifth_order_report(const FifthOrderResult& result, int n,
                                      const OutputMeta& meta);
std::string render_config_echo(const RunConfig& cfg);

// Creates parent directories as needed; IoError on any filesystem failure.
void write_text_file(const std::string& path, const std::string& content);

} // namespace ramansim
