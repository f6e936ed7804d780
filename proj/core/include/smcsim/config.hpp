#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smcsim {

// ============================================================================
// Topology
// ============================================================================

/// Shape of the shared memory: how many master ports reach it and how the
/// capacity is carved into clusters, SRAM arrays, banks and sub-banks.
/// Defaults describe the 16-port, 32 MiB prototype configuration.
struct TopologyConfig {
  uint32_t masters = 16;            ///< master ports on the fabric
  uint32_t clusters = 4;            ///< first-level split fan-out
  uint32_t arrays_per_cluster = 4;  ///< second-level split fan-out
  uint32_t banks_per_array = 16;    ///< memory banks inside one SRAM array
  uint32_t subbanks_per_bank = 4;   ///< independently arbitrated slices per bank
  uint64_t beat_bytes = 32;         ///< data-channel width (256 bit)
  uint64_t total_bytes = 32ull << 20;

  uint64_t subbank_units() const {
    return uint64_t(clusters) * arrays_per_cluster * banks_per_array *
           subbanks_per_bank;
  }
  uint64_t rows_per_subbank() const {
    return total_bytes / (subbank_units() * beat_bytes);
  }
  uint64_t total_beats() const { return total_bytes / beat_bytes; }

  /// Throws ConfigError naming the violated invariant. All counts must be
  /// powers of two, capacity must factor exactly, and at least one row must
  /// exist per sub-bank.
  void validate() const;
};

// ============================================================================
// Timing
// ============================================================================

/// Clocking and pipeline depths. The request path, the memory access and the
/// response path add up to the zero-load read latency; the defaults give
/// 11 + 2*2 + 17 = 32 fabric cycles.
struct TimingConfig {
  uint32_t fabric_clock_per_mem_clock = 2;  ///< fabric runs this many times faster
  uint32_t request_path_stages = 11;        ///< ingress + two splits + dispatch
  uint32_t memory_access_mem_cycles = 2;    ///< SRAM access latency, memory clocks
  uint32_t response_path_stages = 17;       ///< egress + two merges + delivery
  uint32_t outstanding_per_port = 8;        ///< command credits per port, per direction
  uint32_t split_buffer_beats = 64;         ///< shared split/dispatch buffer per master

  uint32_t zero_load_read_latency() const {
    return request_path_stages +
           memory_access_mem_cycles * fabric_clock_per_mem_clock +
           response_path_stages;
  }
  uint32_t memory_access_fabric_cycles() const {
    return memory_access_mem_cycles * fabric_clock_per_mem_clock;
  }

  void validate() const;
};

// ============================================================================
// Address geometry and interleaving
// ============================================================================

/// One bit-field inside a byte address.
struct FieldSpec {
  uint32_t lo = 0;     ///< lowest bit position
  uint32_t width = 0;  ///< zero width means the selector is absent

  uint64_t extract(uint64_t address) const {
    return width == 0 ? 0 : (address >> lo) & ((1ull << width) - 1);
  }
  uint64_t insert(uint64_t value) const { return value << lo; }
  uint32_t hi() const { return width == 0 ? lo : lo + width - 1; }
};

/// Where each selector lives inside a byte address. Fields are packed
/// low to high as beat offset, cluster, array, bank, row, sub-bank, so that
/// consecutive beats walk clusters first and then arrays. Widths always
/// partition log2(total_bytes) exactly.
struct AddressGeometry {
  FieldSpec beat_offset;
  FieldSpec cluster;
  FieldSpec array;
  FieldSpec bank;
  FieldSpec row;
  FieldSpec subbank;
  uint32_t address_bits = 0;
};

/// Derives the bit-field layout from a validated topology.
AddressGeometry derive_geometry(const TopologyConfig& topo);

enum class SchemeKind : uint8_t {
  identity,  ///< array selector taken directly from the address field
  xor_fold,  ///< array selector XORed with the row bits folded to field width
};

const char* to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& text);

/// Address interleaving scheme. The hash source is the bit range XOR-folded
/// into the array selector under xor_fold; it defaults to the row field and
/// must sit above every bit that varies inside a maximally sized burst, so
/// the fold is constant across one burst and beat spreading is preserved.
struct InterleaveScheme {
  SchemeKind kind = SchemeKind::identity;
  /// User-specified hash range (lo, width); empty selects the row field.
  std::optional<FieldSpec> hash_source;

  /// Resolved hash range for a concrete geometry.
  FieldSpec hash_bits(const AddressGeometry& geom) const {
    return hash_source ? *hash_source : geom.row;
  }

  void validate(const TopologyConfig& topo, const AddressGeometry& geom) const;
};

// ============================================================================
// Workload selection
// ============================================================================

enum class WorkloadKind : uint8_t { idle, uniform, bulk, feature, roi, trace };

const char* to_string(WorkloadKind kind);

/// Burst-length mix: weights over {1, 4, 8, 16}, summing to one.
struct BurstMix {
  struct Entry {
    uint32_t beats = 16;
    double weight = 1.0;
  };
  std::vector<Entry> entries{{16, 1.0}};

  void validate() const;
};

/// Traffic selection and generator parameters. One kind is assigned per
/// master (`workload = feature@0-7,roi@8-15`); parameters are global and
/// each kind reads the ones it needs.
struct WorkloadConfig {
  std::string assignment = "uniform";  ///< kind, or kind@lo-hi list
  double rate = 1.0;                   ///< offer probability per fabric cycle
  BurstMix mix;
  uint64_t transactions_per_port = 10000;  ///< quota per active lane
  bool read_lane = true;
  bool write_lane = true;
  /// Confine master m to slice m of the address space and require traces to
  /// keep per-master footprints pairwise disjoint.
  bool isolation_mode = false;

  uint64_t payload_bytes = 4096;  ///< bulk: one payload; 0 means unbounded
  uint64_t line_bytes = 256;      ///< feature: full line
  uint64_t portion_bytes = 128;   ///< feature: portion read per line
  uint64_t line_stride_bytes = 1024;
  uint32_t roi_width = 1920;
  uint32_t roi_height = 1080;
  uint32_t roi_bytes_per_pixel = 2;
  uint64_t roi_clip_bytes = 2ull << 20;
  std::string trace_file;

  /// Kind assigned to each master, resolved against a topology.
  std::vector<WorkloadKind> resolve_assignment(uint32_t masters) const;

  void validate(const TopologyConfig& topo) const;
};

// ============================================================================
// Combined configuration
// ============================================================================

struct SimConfig {
  TopologyConfig topology;
  TimingConfig timing;
  InterleaveScheme scheme;
  WorkloadConfig workload;

  void validate() const;
};

/// Parses `key = value` text (UTF-8, '#' comments, KiB/MiB size suffixes).
/// Unknown and duplicate keys are errors. An empty document yields the
/// default prototype configuration.
SimConfig parse_config(const std::string& text);

/// Parses a config file from disk.
SimConfig load_config(const std::string& path);

/// Applies `key = value` overrides on top of an existing document. Used for
/// command line --set flags and sweep axes. The result is re-validated.
SimConfig parse_config_with_overrides(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides);

/// Renders a config back to its flat key = value form (every key explicit).
/// parse_config(render_config(c)) reproduces c exactly.
std::string render_config(const SimConfig& config);

/// Parses a single size value ("64", "4 KiB", "32MiB").
uint64_t parse_size_value(const std::string& text, const std::string& key);

}  // namespace smcsim
