#pragma once

#include <string>
#include <vector>

namespace moedrive {

/// Provenance of one CLI invocation. The hash covers only the
/// deterministic fields (command, input hashes, seed), not timestamps,
/// so artifacts produced by identical runs are byte-identical.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string dataset_hash;
    std::string checkpoint_hash;
    uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;

    std::string hash() const;
};

void write_run_manifest(const RunManifest& m, const std::string& path);

std::string iso8601_now();

/// Deterministic numeric formatting for CSV cells.
std::string fmt_num(double v);

/// CSV with a `# manifest=<hash>` header comment on the first line.
void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Minimal line plot (one or two series) with the same manifest comment.
void write_line_svg(const std::string& path, const std::string& manifest_hash,
                    const std::string& title, const std::string& x_label,
                    const std::vector<double>& xs,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series);

} // namespace moedrive
