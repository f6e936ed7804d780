#include "smcsim/workload.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "smcsim/errors.hpp"
#include "smcsim/rng.hpp"

namespace smcsim {
namespace {

uint32_t sample_mix(const BurstMix& mix, Rng& rng) {
  if (mix.entries.size() == 1) return mix.entries.front().beats;
  double x = rng.next_double();
  for (const auto& entry : mix.entries) {
    if (x < entry.weight) return entry.beats;
    x -= entry.weight;
  }
  return mix.entries.back().beats;
}

// Uniformly random naturally aligned bursts over a span, burst lengths
// drawn from the mix.
class UniformLane final : public LaneGenerator {
 public:
  UniformLane(Region span, const BurstMix& mix, uint64_t beat_bytes,
              uint64_t quota, Op op, Rng rng)
      : span_(span), mix_(mix), beat_bytes_(beat_bytes), quota_(quota),
        op_(op), rng_(rng) {}

  std::optional<CommandTemplate> next() override {
    if (emitted_ == quota_) return std::nullopt;
    ++emitted_;
    const uint32_t beats = sample_mix(mix_, rng_);
    const uint64_t burst_bytes = beats * beat_bytes_;
    const uint64_t slot = rng_.next_below(span_.size / burst_bytes);
    CommandTemplate cmd;
    cmd.op = op_;
    cmd.base = span_.base + slot * burst_bytes;
    cmd.beats = beats;
    if (op_ == Op::write) cmd.payload_seed = rng_.next_u64();
    return cmd;
  }

 private:
  Region span_;
  BurstMix mix_;
  uint64_t beat_bytes_;
  uint64_t quota_;
  Op op_;
  Rng rng_;
  uint64_t emitted_ = 0;
};

// Sequential maximal bursts walking a payload from a start offset,
// wrapping inside the region.
class SequentialLane final : public LaneGenerator {
 public:
  SequentialLane(Region region, uint64_t span, uint64_t start_offset,
                 uint64_t burst_bytes, uint32_t beats, uint64_t quota, Op op,
                 Rng rng)
      : region_(region), span_(span), start_offset_(start_offset),
        burst_bytes_(burst_bytes), beats_(beats), quota_(quota), op_(op),
        rng_(rng) {}

  std::optional<CommandTemplate> next() override {
    if (emitted_ == quota_) return std::nullopt;
    CommandTemplate cmd;
    cmd.op = op_;
    cmd.base =
        region_.base + (start_offset_ + emitted_ * burst_bytes_) % span_;
    cmd.beats = beats_;
    if (op_ == Op::write) cmd.payload_seed = rng_.next_u64();
    ++emitted_;
    return cmd;
  }

 private:
  Region region_;
  uint64_t span_;
  uint64_t start_offset_;
  uint64_t burst_bytes_;
  uint32_t beats_;
  uint64_t quota_;
  Op op_;
  Rng rng_;
  uint64_t emitted_ = 0;
};

// Portion-of-line accesses: every command touches the current line at a
// random portion-aligned offset, then the line pointer jumps one stride.
// Burst lengths come from the mix, clipped to fit the line.
class FeatureLane final : public LaneGenerator {
 public:
  FeatureLane(Region region, const WorkloadConfig& wl, uint64_t beat_bytes,
              uint64_t start_line, Op op, Rng rng)
      : region_(region), mix_(wl.mix), beat_bytes_(beat_bytes),
        line_bytes_(wl.line_bytes), portion_bytes_(wl.portion_bytes),
        stride_(wl.line_stride_bytes), quota_(wl.transactions_per_port),
        op_(op), rng_(rng) {
    lines_ = region.size / stride_;
    if (lines_ == 0) lines_ = 1;
    line_ = start_line % lines_;
  }

  std::optional<CommandTemplate> next() override {
    if (emitted_ == quota_) return std::nullopt;
    ++emitted_;
    const uint32_t line_beats = static_cast<uint32_t>(line_bytes_ / beat_bytes_);
    const uint32_t beats = std::min(sample_mix(mix_, rng_), line_beats);
    const uint64_t burst_bytes = beats * beat_bytes_;
    const uint64_t offsets = (line_bytes_ - burst_bytes) / portion_bytes_ + 1;
    const uint64_t offset = rng_.next_below(offsets) * portion_bytes_;
    CommandTemplate cmd;
    cmd.op = op_;
    cmd.base = region_.base + line_ * stride_ + offset;
    cmd.beats = beats;
    if (op_ == Op::write) cmd.payload_seed = rng_.next_u64();
    line_ = (line_ + 1) % lines_;
    return cmd;
  }

 private:
  Region region_;
  BurstMix mix_;
  uint64_t beat_bytes_;
  uint64_t line_bytes_;
  uint64_t portion_bytes_;
  uint64_t stride_;
  uint64_t quota_;
  Op op_;
  Rng rng_;
  uint64_t lines_ = 1;
  uint64_t line_ = 0;
  uint64_t emitted_ = 0;
};

class TraceLane final : public LaneGenerator {
 public:
  TraceLane(std::vector<TraceEntry> entries, Rng rng)
      : entries_(std::move(entries)), rng_(rng) {}

  std::optional<CommandTemplate> next() override {
    if (index_ == entries_.size()) return std::nullopt;
    const TraceEntry& e = entries_[index_++];
    CommandTemplate cmd;
    cmd.op = e.op;
    cmd.base = e.address;
    cmd.beats = e.beats;
    cmd.min_cycle = e.min_cycle;
    if (e.op == Op::write) cmd.payload_seed = rng_.next_u64();
    return cmd;
  }

 private:
  std::vector<TraceEntry> entries_;
  Rng rng_;
  size_t index_ = 0;
};

Rng lane_rng(uint64_t seed, uint32_t master, uint32_t lane) {
  return Rng(derive_seed(seed, (uint64_t(master) << 8) | lane));
}

std::unique_ptr<LaneGenerator> make_lane(const SimConfig& config,
                                         WorkloadKind kind, uint32_t master,
                                         Op op, uint64_t seed) {
  const TopologyConfig& topo = config.topology;
  const WorkloadConfig& wl = config.workload;
  const Region region = master_region(topo, master);
  const uint64_t burst16 = 16 * topo.beat_bytes;
  // The write lane starts half a span ahead of the read lane so the two
  // never walk the same addresses in lockstep.
  const uint32_t lane = op == Op::write ? 1u : 0u;
  Rng rng = lane_rng(seed, master, lane);
  switch (kind) {
    case WorkloadKind::uniform: {
      const Region span =
          wl.isolation_mode ? region : Region{0, topo.total_bytes};
      return std::make_unique<UniformLane>(span, wl.mix, topo.beat_bytes,
                                           wl.transactions_per_port, op, rng);
    }
    case WorkloadKind::bulk: {
      const uint64_t quota = wl.payload_bytes != 0
                                 ? wl.payload_bytes / burst16
                                 : wl.transactions_per_port;
      const uint64_t start = lane == 1 ? region.size / 2 : 0;
      return std::make_unique<SequentialLane>(region, region.size, start,
                                              burst16, 16, quota, op, rng);
    }
    case WorkloadKind::feature: {
      const uint64_t lines = std::max<uint64_t>(
          region.size / wl.line_stride_bytes, 1);
      const uint64_t start_line = lane == 1 ? lines / 2 : 0;
      return std::make_unique<FeatureLane>(region, wl, topo.beat_bytes,
                                           start_line, op, rng);
    }
    case WorkloadKind::roi: {
      uint64_t span = uint64_t(wl.roi_width) * wl.roi_height *
                      wl.roi_bytes_per_pixel;
      span = std::min({span, wl.roi_clip_bytes, region.size});
      span = std::max(span / burst16, uint64_t(1)) * burst16;
      const uint64_t start = lane == 1 ? (span / burst16 / 2) * burst16 : 0;
      return std::make_unique<SequentialLane>(region, span, start, burst16, 16,
                                              wl.transactions_per_port, op,
                                              rng);
    }
    case WorkloadKind::idle:
    case WorkloadKind::trace:
      break;
  }
  return nullptr;
}

// Isolation mode promises interference-free slices, which only holds when
// no two masters ever touch the same bytes. Generated lanes are confined to
// their region by construction; replayed traces are user input and need the
// pairwise-disjointness check. Exact at burst granularity: a sweep over the
// sorted burst intervals, tracking the farthest end seen for the owning
// master and for everyone else.
void check_trace_isolation(const std::vector<std::vector<TraceEntry>>& trace,
                           const TopologyConfig& topo) {
  struct Span {
    uint64_t lo, hi;
    uint32_t master;
  };
  std::vector<Span> spans;
  for (uint32_t m = 0; m < trace.size(); ++m) {
    for (const TraceEntry& e : trace[m]) {
      spans.push_back(
          {e.address, e.address + uint64_t(e.beats) * topo.beat_bytes, m});
    }
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.lo < b.lo; });
  // Top two farthest interval ends with distinct owners. For any span, the
  // farthest end among the *other* masters is top1 unless top1 is its own.
  uint64_t hi1 = 0, hi2 = 0;
  uint32_t m1 = UINT32_MAX, m2 = UINT32_MAX;
  for (const Span& s : spans) {
    const uint64_t other_hi = s.master == m1 ? hi2 : hi1;
    const uint32_t other_m = s.master == m1 ? m2 : m1;
    if (other_hi > s.lo) {
      char addr[24];
      std::snprintf(addr, sizeof addr, "0x%llx",
                    static_cast<unsigned long long>(s.lo));
      throw TraceError("isolation mode: trace footprints of masters " +
                       std::to_string(other_m) + " and " +
                       std::to_string(s.master) + " overlap at " + addr);
    }
    if (s.master == m1) {
      hi1 = std::max(hi1, s.hi);
    } else if (s.hi > hi1 || m1 == UINT32_MAX) {
      hi2 = hi1;
      m2 = m1;
      hi1 = s.hi;
      m1 = s.master;
    } else if (s.hi > hi2) {
      hi2 = s.hi;
      m2 = s.master;
    }
  }
}

}  // namespace

Region master_region(const TopologyConfig& topo, uint32_t master) {
  const uint64_t size = topo.total_bytes / topo.masters;
  return Region{master * size, size};
}

std::vector<std::vector<TraceEntry>> load_trace(std::istream& in,
                                                const TopologyConfig& topo) {
  std::vector<std::vector<TraceEntry>> out(topo.masters);
  std::string line;
  uint64_t line_no = 0;
  auto fail = [&line_no](const std::string& reason) {
    throw TraceError("trace line " + std::to_string(line_no) + ": " + reason);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::vector<std::string> fields;
    std::string field;
    std::stringstream row(line);
    while (std::getline(row, field, ',')) {
      const auto first = field.find_first_not_of(" \t\r");
      if (first == std::string::npos) {
        field.clear();
      } else {
        field = field.substr(first, field.find_last_not_of(" \t\r") - first + 1);
      }
      fields.push_back(field);
    }
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (fields.size() < 4 || fields.size() > 5) {
      fail("expected master,op,address_hex,beats[,min_cycle]");
    }
    TraceEntry entry;
    uint64_t master = 0;
    try {
      size_t pos = 0;
      master = std::stoull(fields[0], &pos);
      if (pos != fields[0].size()) fail("malformed master index");
    } catch (const std::logic_error&) {
      fail("malformed master index");
    }
    if (master >= topo.masters) {
      fail("master " + fields[0] + " out of range");
    }
    std::string op = fields[1];
    std::transform(op.begin(), op.end(), op.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (op == "r" || op == "read") {
      entry.op = Op::read;
    } else if (op == "w" || op == "write") {
      entry.op = Op::write;
    } else {
      fail("op must be R or W");
    }
    std::string hex = fields[2];
    if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex = hex.substr(2);
    try {
      size_t pos = 0;
      entry.address = std::stoull(hex, &pos, 16);
      if (pos != hex.size() || hex.empty()) fail("malformed hex address");
    } catch (const std::logic_error&) {
      fail("malformed hex address");
    }
    try {
      size_t pos = 0;
      entry.beats = static_cast<uint32_t>(std::stoul(fields[3], &pos));
      if (pos != fields[3].size()) fail("malformed beat count");
    } catch (const std::logic_error&) {
      fail("malformed beat count");
    }
    if (entry.beats != 1 && entry.beats != 4 && entry.beats != 8 &&
        entry.beats != 16) {
      fail("beat count must be 1, 4, 8 or 16");
    }
    if (fields.size() == 5) {
      try {
        size_t pos = 0;
        entry.min_cycle = std::stoull(fields[4], &pos);
        if (pos != fields[4].size()) fail("malformed min_cycle");
      } catch (const std::logic_error&) {
        fail("malformed min_cycle");
      }
    }
    if (entry.address % topo.beat_bytes != 0) {
      fail("address not beat aligned");
    }
    if (entry.address + uint64_t(entry.beats) * topo.beat_bytes >
        topo.total_bytes) {
      fail("burst extends past the end of memory");
    }
    out[master].push_back(entry);
  }
  return out;
}

std::vector<MasterWorkload> build_workload(
    const SimConfig& config, uint64_t seed,
    const std::vector<std::vector<TraceEntry>>& trace) {
  const uint32_t masters = config.topology.masters;
  const auto kinds = config.workload.resolve_assignment(masters);
  if (config.workload.isolation_mode) {
    check_trace_isolation(trace, config.topology);
  }
  std::vector<MasterWorkload> out(masters);
  for (uint32_t m = 0; m < masters; ++m) {
    if (kinds[m] == WorkloadKind::idle) continue;
    if (kinds[m] == WorkloadKind::trace) {
      if (m < trace.size() && !trace[m].empty()) {
        out[m].lanes.push_back(
            std::make_unique<TraceLane>(trace[m], lane_rng(seed, m, 0)));
      }
      continue;
    }
    if (config.workload.read_lane) {
      out[m].lanes.push_back(make_lane(config, kinds[m], m, Op::read, seed));
    }
    if (config.workload.write_lane) {
      out[m].lanes.push_back(make_lane(config, kinds[m], m, Op::write, seed));
    }
  }
  return out;
}

std::vector<std::vector<TraceEntry>> load_trace_for(
    const WorkloadConfig& workload, const TopologyConfig& topo) {
  const auto kinds = workload.resolve_assignment(topo.masters);
  const bool any_trace =
      std::any_of(kinds.begin(), kinds.end(),
                  [](WorkloadKind k) { return k == WorkloadKind::trace; });
  if (!any_trace) return {};
  std::ifstream in(workload.trace_file);
  if (!in) {
    throw TraceError("cannot open trace file: " + workload.trace_file);
  }
  return load_trace(in, topo);
}

std::vector<MasterWorkload> build_workload(const SimConfig& config,
                                           uint64_t seed) {
  return build_workload(config, seed,
                        load_trace_for(config.workload, config.topology));
}

}  // namespace smcsim
