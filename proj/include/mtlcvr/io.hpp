#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtlcvr/absim.hpp"
#include "mtlcvr/events.hpp"
#include "mtlcvr/metrics.hpp"
#include "mtlcvr/model.hpp"
#include "mtlcvr/tasks.hpp"

namespace mtlcvr {

// CLI exit-code taxonomy: ConfigError -> 2, MissingArtifact -> 3, anything
// numeric/runtime -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- hashing -------------------------------------------------------------

std::uint64_t fnv1a64(std::span<const char> bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

// --- INI config ----------------------------------------------------------

// Minimal INI: [section] headers, key = value lines, '#'/';' comments.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has_section(const std::string& name) const;
  const std::map<std::string, std::string>& section(
      const std::string& name) const;  // throws ConfigError when absent

  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& sec, const std::string& key,
                    double fallback) const;
  std::int64_t get_int(const std::string& sec, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& sec, const std::string& key,
                bool fallback) const;
};

IniFile parse_ini(const std::string& text);
IniFile load_ini(const std::filesystem::path& path);

// --- datasets ------------------------------------------------------------

void write_schema_json(const std::filesystem::path& path,
                       const FeatureSchema& schema);
FeatureSchema read_schema_json(const std::filesystem::path& path);

// JSONL, one event per line, canonical field and feature order.
void write_events_jsonl(const std::filesystem::path& path,
                        std::span<const ClickEvent> events,
                        const FeatureSchema& schema);
std::vector<ClickEvent> read_events_jsonl(const std::filesystem::path& path,
                                          const FeatureSchema& schema,
                                          std::size_t* malformed_lines = nullptr);

void write_setups_csv(const std::filesystem::path& path,
                      std::span<const ConversionSetup> setups);
std::vector<ConversionSetup> read_setups_csv(const std::filesystem::path& path);

// --- assignments ---------------------------------------------------------

void write_assignments_csv(const std::filesystem::path& path,
                           const AssignmentSet& set);
void write_assignment_meta_json(const std::filesystem::path& path,
                                const AssignmentSet& set,
                                const AssignmentConfig& cfg);
AssignmentSet read_assignments_csv(const std::filesystem::path& csv_path,
                                   const std::filesystem::path& meta_path);

// --- model checkpoints ---------------------------------------------------

// One self-describing JSON container for both forms; the pruned file has no
// soft-tower block. Parameter values round-trip bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const MtlNetwork& net);
void save_checkpoint(const std::filesystem::path& path,
                     const InferenceModel& model);
MtlNetwork load_full_checkpoint(const std::filesystem::path& path);
InferenceModel load_inference_checkpoint(const std::filesystem::path& path);

// --- reports -------------------------------------------------------------

void write_metric_report_json(const std::filesystem::path& path,
                              const MetricReport& report,
                              const MetricReport* baseline,
                              const RelativeReport* relative);
std::string render_metric_table(const MetricReport& report,
                                const MetricReport* baseline,
                                const RelativeReport* relative);

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const SweepRow> rows);
std::string render_sweep_table(std::span<const SweepRow> rows);

void write_ab_report_json(const std::filesystem::path& path,
                          const AbReport& report);
void write_ab_advertisers_csv(const std::filesystem::path& path,
                              const AbReport& report);
std::string render_ab_table(const AbReport& report);
void write_ab_report_svg(const std::filesystem::path& path,
                         const AbReport& report);

// --- manifests -----------------------------------------------------------

struct Manifest {
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> input_hashes;  // path -> hex hash
  std::vector<std::string> outputs;
};

void write_manifest_json(const std::filesystem::path& path,
                         const Manifest& manifest);

// --- training history ----------------------------------------------------

void write_history_csv(const std::filesystem::path& path,
                       std::span<const LossBreakdown> history);

}  // namespace mtlcvr
