#include "smcsim/config.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "smcsim/errors.hpp"

namespace smcsim {
namespace {

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

uint32_t log2_u64(uint64_t v) {
  return 63u - static_cast<uint32_t>(std::countl_zero(v));
}

[[noreturn]] void invariant_fail(const std::string& name,
                                 const std::string& detail) {
  throw ConfigError("config invariant violated: " + name + " (" + detail + ")");
}

void require_pow2(uint64_t v, const char* key) {
  if (!is_pow2(v)) {
    invariant_fail("power-of-two counts",
                   std::string(key) + " = " + std::to_string(v));
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

uint64_t parse_u64(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t.empty() || !std::all_of(t.begin(), t.end(),
                                [](unsigned char c) { return std::isdigit(c); })) {
    throw ConfigError("key '" + key + "': expected unsigned integer, got '" +
                      text + "'");
  }
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': integer out of range: '" + t + "'");
  }
}

double parse_f64(const std::string& text, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(trim(text), &pos);
    if (pos != trim(text).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "on") return true;
  if (t == "false" || t == "0" || t == "off") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + text +
                    "'");
}

BurstMix parse_mix(const std::string& text, const std::string& key) {
  BurstMix mix;
  mix.entries.clear();
  for (const std::string& part : split(text, ',')) {
    auto fields = split(trim(part), ':');
    if (fields.size() != 2) {
      throw ConfigError("key '" + key + "': expected beats:weight entries, got '" +
                        part + "'");
    }
    BurstMix::Entry e;
    e.beats = static_cast<uint32_t>(parse_u64(fields[0], key));
    e.weight = parse_f64(fields[1], key);
    mix.entries.push_back(e);
  }
  return mix;
}

FieldSpec parse_bit_range(const std::string& text, const std::string& key) {
  auto parts = split(trim(text), ':');
  if (parts.size() != 2) {
    throw ConfigError("key '" + key + "': expected hi:lo bit range, got '" +
                      text + "'");
  }
  uint64_t hi = parse_u64(parts[0], key);
  uint64_t lo = parse_u64(parts[1], key);
  if (hi < lo || hi >= 64) {
    throw ConfigError("key '" + key + "': bad bit range '" + text + "'");
  }
  FieldSpec f;
  f.lo = static_cast<uint32_t>(lo);
  f.width = static_cast<uint32_t>(hi - lo + 1);
  return f;
}

}  // namespace

// ============================================================================
// Validation
// ============================================================================

void TopologyConfig::validate() const {
  if (masters == 0 || masters > 1024) {
    invariant_fail("1 <= masters <= 1024", std::to_string(masters));
  }
  require_pow2(masters, "masters");
  require_pow2(clusters, "clusters");
  require_pow2(arrays_per_cluster, "arrays_per_cluster");
  require_pow2(banks_per_array, "banks_per_array");
  require_pow2(subbanks_per_bank, "subbanks_per_bank");
  require_pow2(beat_bytes, "beat_bytes");
  require_pow2(total_bytes, "total_bytes");
  if (clusters > 256 || arrays_per_cluster > 256 || banks_per_array > 65536 ||
      subbanks_per_bank > 65536) {
    invariant_fail("selector widths within sane bounds", "topology too wide");
  }
  const uint64_t unit = subbank_units() * beat_bytes;
  if (total_bytes % unit != 0) {
    invariant_fail("capacity factors exactly into sub-banks",
                   "total_bytes = " + std::to_string(total_bytes));
  }
  if (rows_per_subbank() < 1) {
    invariant_fail("at least one row per sub-bank",
                   "total_bytes too small for the topology");
  }
}

void TimingConfig::validate() const {
  if (fabric_clock_per_mem_clock < 1) {
    invariant_fail("fabric_clock_per_mem_clock >= 1",
                   std::to_string(fabric_clock_per_mem_clock));
  }
  // Each of the three request segments and three response segments needs at
  // least one cycle of pipeline depth.
  if (request_path_stages < 3) {
    invariant_fail("request_path_stages >= 3",
                   std::to_string(request_path_stages));
  }
  if (response_path_stages < 3) {
    invariant_fail("response_path_stages >= 3",
                   std::to_string(response_path_stages));
  }
  if (memory_access_mem_cycles < 1) {
    invariant_fail("memory_access_mem_cycles >= 1",
                   std::to_string(memory_access_mem_cycles));
  }
  if (outstanding_per_port < 1 || outstanding_per_port > 4096) {
    invariant_fail("1 <= outstanding_per_port <= 4096",
                   std::to_string(outstanding_per_port));
  }
  if (split_buffer_beats < 16) {
    invariant_fail("split_buffer_beats >= 16 (one maximal burst)",
                   std::to_string(split_buffer_beats));
  }
}

AddressGeometry derive_geometry(const TopologyConfig& topo) {
  AddressGeometry g;
  uint32_t cursor = 0;
  auto place = [&cursor](FieldSpec& f, uint64_t count) {
    f.lo = cursor;
    f.width = count <= 1 ? 0 : log2_u64(count);
    cursor += f.width;
  };
  place(g.beat_offset, topo.beat_bytes);
  place(g.cluster, topo.clusters);
  place(g.array, topo.arrays_per_cluster);
  place(g.bank, topo.banks_per_array);
  place(g.row, topo.rows_per_subbank());
  place(g.subbank, topo.subbanks_per_bank);
  g.address_bits = log2_u64(topo.total_bytes);
  if (cursor != g.address_bits) {
    invariant_fail("field widths partition the address exactly",
                   std::to_string(cursor) + " bits placed, " +
                       std::to_string(g.address_bits) + " expected");
  }
  return g;
}

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::identity: return "identity";
    case SchemeKind::xor_fold: return "xor-fold";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(const std::string& text) {
  if (text == "identity") return SchemeKind::identity;
  if (text == "xor-fold" || text == "xor_fold") return SchemeKind::xor_fold;
  throw ConfigError("key 'scheme_kind': unknown scheme '" + text +
                    "' (expected identity or xor-fold)");
}

void InterleaveScheme::validate(const TopologyConfig& topo,
                                const AddressGeometry& geom) const {
  const FieldSpec bits = hash_bits(geom);
  if (bits.width == 0) return;
  // The hash must be constant across any single burst: its source bits have
  // to sit above every bit a maximally sized (16-beat) burst can vary.
  const uint32_t burst_span_bits = geom.beat_offset.width + 4;
  if (bits.lo < burst_span_bits) {
    invariant_fail(
        "hash source above burst-varying bits",
        "hash_source_bits start at " + std::to_string(bits.lo) +
            ", maximal burst varies bits below " +
            std::to_string(burst_span_bits));
  }
  if (bits.hi() >= log2_u64(topo.total_bytes)) {
    invariant_fail("hash source inside the address",
                   "bit " + std::to_string(bits.hi()) + " out of range");
  }
}

const char* to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::idle: return "idle";
    case WorkloadKind::uniform: return "uniform";
    case WorkloadKind::bulk: return "bulk";
    case WorkloadKind::feature: return "feature";
    case WorkloadKind::roi: return "roi";
    case WorkloadKind::trace: return "trace";
  }
  return "?";
}

namespace {

WorkloadKind workload_kind_from_string(const std::string& text) {
  if (text == "idle") return WorkloadKind::idle;
  if (text == "uniform") return WorkloadKind::uniform;
  if (text == "bulk") return WorkloadKind::bulk;
  if (text == "feature") return WorkloadKind::feature;
  if (text == "roi") return WorkloadKind::roi;
  if (text == "trace") return WorkloadKind::trace;
  throw ConfigError("key 'workload': unknown kind '" + text + "'");
}

}  // namespace

void BurstMix::validate() const {
  if (entries.empty()) {
    invariant_fail("burst mix non-empty", "no entries");
  }
  double sum = 0.0;
  for (const Entry& e : entries) {
    if (e.beats != 1 && e.beats != 4 && e.beats != 8 && e.beats != 16) {
      invariant_fail("burst lengths in {1,4,8,16}", std::to_string(e.beats));
    }
    if (e.weight < 0.0) {
      invariant_fail("burst weights non-negative", std::to_string(e.weight));
    }
    sum += e.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    invariant_fail("burst weights sum to 1", std::to_string(sum));
  }
}

std::vector<WorkloadKind> WorkloadConfig::resolve_assignment(
    uint32_t masters) const {
  std::vector<WorkloadKind> kinds(masters, WorkloadKind::idle);
  bool scoped = assignment.find('@') != std::string::npos;
  if (!scoped) {
    WorkloadKind k = workload_kind_from_string(trim(assignment));
    std::fill(kinds.begin(), kinds.end(), k);
    return kinds;
  }
  for (const std::string& part : split(assignment, ',')) {
    auto at = split(trim(part), '@');
    if (at.size() != 2) {
      throw ConfigError("key 'workload': expected kind@lo-hi, got '" + part +
                        "'");
    }
    WorkloadKind k = workload_kind_from_string(trim(at[0]));
    auto range = split(trim(at[1]), '-');
    uint64_t lo = parse_u64(range[0], "workload");
    uint64_t hi = range.size() > 1 ? parse_u64(range[1], "workload") : lo;
    if (range.size() > 2 || hi < lo) {
      throw ConfigError("key 'workload': bad master range '" + at[1] + "'");
    }
    for (uint64_t m = lo; m <= hi && m < masters; ++m) {
      kinds[static_cast<size_t>(m)] = k;
    }
  }
  return kinds;
}

void WorkloadConfig::validate(const TopologyConfig& topo) const {
  if (rate <= 0.0 || rate > 1.0) {
    invariant_fail("0 < rate <= 1", std::to_string(rate));
  }
  mix.validate();
  resolve_assignment(topo.masters);  // grammar check
  const uint64_t burst16 = 16 * topo.beat_bytes;
  if (payload_bytes != 0 && payload_bytes % burst16 != 0) {
    invariant_fail("bulk payload covered exactly by 16-beat bursts",
                   "payload_bytes = " + std::to_string(payload_bytes));
  }
  if (portion_bytes == 0 || portion_bytes % topo.beat_bytes != 0 ||
      line_bytes % topo.beat_bytes != 0 || portion_bytes > line_bytes) {
    invariant_fail("feature portion beat-aligned and within the line",
                   "portion_bytes = " + std::to_string(portion_bytes) +
                       ", line_bytes = " + std::to_string(line_bytes));
  }
  if (line_stride_bytes < line_bytes) {
    invariant_fail("feature line stride covers the line",
                   std::to_string(line_stride_bytes));
  }
  if (roi_width == 0 || roi_height == 0 || roi_bytes_per_pixel == 0 ||
      roi_clip_bytes < burst16) {
    invariant_fail("roi dimensions non-zero and clip >= one burst", "roi");
  }
  auto kinds = resolve_assignment(topo.masters);
  bool any_trace =
      std::any_of(kinds.begin(), kinds.end(),
                  [](WorkloadKind k) { return k == WorkloadKind::trace; });
  if (any_trace && trace_file.empty()) {
    invariant_fail("trace workload names a trace_file", "trace_file empty");
  }
  if (isolation_mode) {
    const uint64_t slice = topo.total_bytes / topo.masters;
    if (slice < 16 * topo.beat_bytes) {
      invariant_fail("isolation slices hold at least one maximal burst",
                     "slice = " + std::to_string(slice));
    }
  }
}

void SimConfig::validate() const {
  topology.validate();
  timing.validate();
  const AddressGeometry geom = derive_geometry(topology);
  scheme.validate(topology, geom);
  workload.validate(topology);
}

// ============================================================================
// Parsing
// ============================================================================

uint64_t parse_size_value(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  uint64_t scale = 1;
  auto ends_with = [&t](const char* suffix) {
    size_t n = std::string(suffix).size();
    return t.size() >= n && t.compare(t.size() - n, n, suffix) == 0;
  };
  if (ends_with("KiB")) {
    scale = 1024;
    t = trim(t.substr(0, t.size() - 3));
  } else if (ends_with("MiB")) {
    scale = 1024 * 1024;
    t = trim(t.substr(0, t.size() - 3));
  }
  uint64_t base = parse_u64(t, key);
  if (scale != 1 && base > UINT64_MAX / scale) {
    throw ConfigError("key '" + key + "': size overflows");
  }
  return base * scale;
}

namespace {

using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    if (kv.count(key)) {
      throw ConfigError("duplicate key '" + key + "' at line " +
                        std::to_string(line_no));
    }
    kv[key] = value;
  }
  return kv;
}

SimConfig build_config(const KvMap& kv) {
  SimConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "masters") {
      c.topology.masters = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "clusters") {
      c.topology.clusters = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "arrays_per_cluster") {
      c.topology.arrays_per_cluster =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "banks_per_array") {
      c.topology.banks_per_array = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "subbanks_per_bank") {
      c.topology.subbanks_per_bank =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "beat_bytes") {
      c.topology.beat_bytes = parse_size_value(value, key);
    } else if (key == "total_bytes") {
      c.topology.total_bytes = parse_size_value(value, key);
    } else if (key == "fabric_clock_per_mem_clock") {
      c.timing.fabric_clock_per_mem_clock =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "request_path_stages") {
      c.timing.request_path_stages =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "memory_access_mem_cycles") {
      c.timing.memory_access_mem_cycles =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "response_path_stages") {
      c.timing.response_path_stages =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "outstanding_per_port") {
      c.timing.outstanding_per_port =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "split_buffer_beats") {
      c.timing.split_buffer_beats =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "scheme_kind") {
      c.scheme.kind = scheme_kind_from_string(trim(value));
    } else if (key == "hash_source_bits") {
      c.scheme.hash_source = parse_bit_range(value, key);
    } else if (key == "workload") {
      c.workload.assignment = trim(value);
    } else if (key == "rate") {
      c.workload.rate = parse_f64(value, key);
    } else if (key == "burst_mix") {
      c.workload.mix = parse_mix(value, key);
    } else if (key == "transactions_per_port") {
      c.workload.transactions_per_port = parse_u64(value, key);
    } else if (key == "read_lane") {
      c.workload.read_lane = parse_bool(value, key);
    } else if (key == "write_lane") {
      c.workload.write_lane = parse_bool(value, key);
    } else if (key == "isolation_mode") {
      c.workload.isolation_mode = parse_bool(value, key);
    } else if (key == "payload_bytes") {
      c.workload.payload_bytes = parse_size_value(value, key);
    } else if (key == "line_bytes") {
      c.workload.line_bytes = parse_size_value(value, key);
    } else if (key == "portion_bytes") {
      c.workload.portion_bytes = parse_size_value(value, key);
    } else if (key == "line_stride_bytes") {
      c.workload.line_stride_bytes = parse_size_value(value, key);
    } else if (key == "roi_width") {
      c.workload.roi_width = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "roi_height") {
      c.workload.roi_height = static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "roi_bytes_per_pixel") {
      c.workload.roi_bytes_per_pixel =
          static_cast<uint32_t>(parse_u64(value, key));
    } else if (key == "roi_clip_bytes") {
      c.workload.roi_clip_bytes = parse_size_value(value, key);
    } else if (key == "trace_file") {
      c.workload.trace_file = trim(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  return build_config(parse_kv(text));
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

SimConfig parse_config_with_overrides(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  KvMap kv = parse_kv(text);
  for (const auto& [key, value] : overrides) {
    kv[key] = value;  // overrides may replace file keys
  }
  return build_config(kv);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string render_config(const SimConfig& c) {
  std::ostringstream out;
  out << "masters = " << c.topology.masters << "\n";
  out << "clusters = " << c.topology.clusters << "\n";
  out << "arrays_per_cluster = " << c.topology.arrays_per_cluster << "\n";
  out << "banks_per_array = " << c.topology.banks_per_array << "\n";
  out << "subbanks_per_bank = " << c.topology.subbanks_per_bank << "\n";
  out << "beat_bytes = " << c.topology.beat_bytes << "\n";
  out << "total_bytes = " << c.topology.total_bytes << "\n";
  out << "fabric_clock_per_mem_clock = " << c.timing.fabric_clock_per_mem_clock
      << "\n";
  out << "request_path_stages = " << c.timing.request_path_stages << "\n";
  out << "memory_access_mem_cycles = " << c.timing.memory_access_mem_cycles
      << "\n";
  out << "response_path_stages = " << c.timing.response_path_stages << "\n";
  out << "outstanding_per_port = " << c.timing.outstanding_per_port << "\n";
  out << "split_buffer_beats = " << c.timing.split_buffer_beats << "\n";
  out << "scheme_kind = " << to_string(c.scheme.kind) << "\n";
  if (c.scheme.hash_source) {
    out << "hash_source_bits = " << c.scheme.hash_source->hi() << ":"
        << c.scheme.hash_source->lo << "\n";
  }
  out << "workload = " << c.workload.assignment << "\n";
  out << "rate = " << fmt_double(c.workload.rate) << "\n";
  out << "burst_mix = ";
  for (size_t i = 0; i < c.workload.mix.entries.size(); ++i) {
    const auto& e = c.workload.mix.entries[i];
    out << (i ? "," : "") << e.beats << ":" << fmt_double(e.weight);
  }
  out << "\n";
  out << "transactions_per_port = " << c.workload.transactions_per_port << "\n";
  out << "read_lane = " << (c.workload.read_lane ? "true" : "false") << "\n";
  out << "write_lane = " << (c.workload.write_lane ? "true" : "false") << "\n";
  out << "isolation_mode = " << (c.workload.isolation_mode ? "true" : "false")
      << "\n";
  out << "payload_bytes = " << c.workload.payload_bytes << "\n";
  out << "line_bytes = " << c.workload.line_bytes << "\n";
  out << "portion_bytes = " << c.workload.portion_bytes << "\n";
  out << "line_stride_bytes = " << c.workload.line_stride_bytes << "\n";
  out << "roi_width = " << c.workload.roi_width << "\n";
  out << "roi_height = " << c.workload.roi_height << "\n";
  out << "roi_bytes_per_pixel = " << c.workload.roi_bytes_per_pixel << "\n";
  out << "roi_clip_bytes = " << c.workload.roi_clip_bytes << "\n";
  if (!c.workload.trace_file.empty()) {
    out << "trace_file = " << c.workload.trace_file << "\n";
  }
  return out.str();
}

}  // namespace smcsim
