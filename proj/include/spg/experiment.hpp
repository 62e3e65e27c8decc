#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "spg/types.hpp"

namespace spg {

struct RunOptions {
    std::string out_dir;  // empty: $SPG_OUT_DIR or "."
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
};

/// Executes one experiment config (JSON file), writes its outputs and a
/// manifest into the output directory, and returns the manifest path.
std::string run_experiment_file(const std::string& config_path, const RunOptions& opts = {});

/// Same, from config text (the name hint seeds output file defaults).
std::string run_experiment_text(const std::string& config_text, const RunOptions& opts = {});

/// Re-emits the tables referenced by a manifest in the requested format
/// ("csv", "json" or "gnuplot"); returns the number of files written.
int report_from_manifest(const std::string& manifest_path, const std::string& format,
                         const std::string& out_dir);

/// FNV-1a 64-bit digest, used for config hashes and output digests.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace spg
