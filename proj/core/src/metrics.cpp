#include "smcsim/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "smcsim/errors.hpp"

namespace smcsim {

using ordered_json = nlohmann::ordered_json;

uint32_t histogram_bucket(uint64_t value) {
  if (value <= 1) return 0;
  const uint32_t msb = 63u - static_cast<uint32_t>(std::countl_zero(value));
  const uint32_t half = static_cast<uint32_t>((value >> (msb - 1)) & 1);
  return std::min(2 * msb + half, 31u);
}

MetricsRecorder::MetricsRecorder(uint32_t masters) : ports_(masters) {}

void MetricsRecorder::record_issue(uint32_t master, uint64_t cmd_id, Op op,
                                   uint32_t beats, uint64_t cycle) {
  PortSamples& port = ports_.at(master);
  if (cmd_id != port.commands.size()) {
    throw IntegrityError("command ids must be dense per master");
  }
  port.commands.push_back({cycle, kNotRetired, beats, op});
}

void MetricsRecorder::record_retire(uint32_t master, uint64_t cmd_id,
                                    uint64_t cycle) {
  CommandRecord& rec = ports_.at(master).commands.at(cmd_id);
  if (rec.retire_cycle != kNotRetired) {
    throw IntegrityError("command retired twice");
  }
  rec.retire_cycle = cycle;
}

void MetricsRecorder::record_read_delivery(uint32_t master, uint64_t cycle) {
  ports_.at(master).read_delivery_cycles.push_back(cycle);
}

void MetricsRecorder::record_write_inject(uint32_t master, uint64_t cycle) {
  ports_.at(master).write_inject_cycles.push_back(cycle);
}

namespace {

uint64_t count_in_window(const std::vector<uint64_t>& sorted, uint64_t lo,
                         uint64_t hi) {
  auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
  auto last = std::lower_bound(sorted.begin(), sorted.end(), hi);
  return static_cast<uint64_t>(last - first);
}

}  // namespace

RunReport MetricsRecorder::finalize(const SimConfig& config, uint64_t seed,
                                    uint64_t total_cycles, bool truncated,
                                    uint64_t conflict_cycles,
                                    uint64_t peak_split_occupancy) const {
  RunReport report;
  report.seed = seed;
  report.total_cycles = total_cycles;
  report.truncated = truncated;
  report.conflict_cycles = conflict_cycles;
  report.peak_split_occupancy = peak_split_occupancy;
  report.zero_load_read_latency = config.timing.zero_load_read_latency();
  report.config_text = render_config(config);
  report.ports.resize(ports_.size());

  for (uint32_t m = 0; m < ports_.size(); ++m) {
    const PortSamples& samples = ports_[m];
    PortReport& port = report.ports[m];
    port.master = m;
    if (samples.commands.empty()) continue;

    uint64_t last_issue = 0;
    uint64_t first_issue = ~0ull;
    uint64_t last_retire = 0;
    for (const CommandRecord& rec : samples.commands) {
      first_issue = std::min(first_issue, rec.issue_cycle);
      last_issue = std::max(last_issue, rec.issue_cycle);
      if (rec.retire_cycle != kNotRetired) {
        last_retire = std::max(last_retire, rec.retire_cycle);
      }
    }
    port.first_issue_cycle = first_issue;
    port.last_retire_cycle = last_retire;
    port.window_begin = 2ull * report.zero_load_read_latency;
    port.window_end = std::max(last_issue, port.window_begin);
    const uint64_t window_len = port.window_end - port.window_begin;

    LatencyStats* stats[2] = {&port.read_latency, &port.write_latency};
    double sum[2] = {0, 0};
    double sum_sq[2] = {0, 0};
    WindowFlow* flows[2] = {&port.read, &port.write};
    double flow_latency_sum[2] = {0, 0};
    uint64_t flow_overlap[2] = {0, 0};

    for (const CommandRecord& rec : samples.commands) {
      const size_t d = rec.op == Op::read ? 0 : 1;
      if (rec.op == Op::read) {
        ++port.reads_accepted;
      } else {
        ++port.writes_accepted;
      }
      if (rec.retire_cycle != kNotRetired) {
        const uint64_t latency = rec.retire_cycle - rec.issue_cycle;
        LatencyStats& s = *stats[d];
        if (s.count == 0) {
          s.min = latency;
          s.max = latency;
        } else {
          s.min = std::min(s.min, latency);
          s.max = std::max(s.max, latency);
        }
        ++s.count;
        sum[d] += double(latency);
        sum_sq[d] += double(latency) * double(latency);
        ++s.histogram[histogram_bucket(latency)];
        if (rec.op == Op::read) {
          ++port.reads_completed;
        } else {
          ++port.writes_completed;
        }
        if (rec.retire_cycle >= port.window_begin &&
            rec.retire_cycle < port.window_end) {
          ++flows[d]->completed;
          flow_latency_sum[d] += double(latency);
        }
      }
      const uint64_t end =
          rec.retire_cycle == kNotRetired ? total_cycles : rec.retire_cycle;
      const uint64_t lo = std::max(rec.issue_cycle, port.window_begin);
      const uint64_t hi = std::min(end, port.window_end);
      if (hi > lo) flow_overlap[d] += hi - lo;
    }
    for (size_t d = 0; d < 2; ++d) {
      LatencyStats& s = *stats[d];
      if (s.count > 0) {
        s.avg = sum[d] / double(s.count);
        s.stddev =
            std::sqrt(std::max(0.0, sum_sq[d] / double(s.count) - s.avg * s.avg));
      }
      WindowFlow& flow = *flows[d];
      if (flow.completed > 0) {
        flow.mean_latency = flow_latency_sum[d] / double(flow.completed);
      }
      if (window_len > 0) {
        flow.avg_in_flight = double(flow_overlap[d]) / double(window_len);
      }
    }
    port.read_beats_delivered = samples.read_delivery_cycles.size();
    port.write_beats_injected = samples.write_inject_cycles.size();
    port.read.beats = count_in_window(samples.read_delivery_cycles,
                                      port.window_begin, port.window_end);
    port.write.beats = count_in_window(samples.write_inject_cycles,
                                       port.window_begin, port.window_end);
    if (window_len > 0) {
      port.read.throughput = double(port.read.beats) / double(window_len);
      port.write.throughput = double(port.write.beats) / double(window_len);
    }

    if (!truncated) {
      uint64_t read_beats = 0;
      uint64_t write_beats = 0;
      for (const CommandRecord& rec : samples.commands) {
        if (rec.retire_cycle == kNotRetired) {
          throw IntegrityError("drained run left a command unretired at port " +
                               std::to_string(m));
        }
        (rec.op == Op::read ? read_beats : write_beats) += rec.beats;
      }
      if (read_beats != port.read_beats_delivered ||
          write_beats != port.write_beats_injected) {
        throw IntegrityError("beat conservation failed at port " +
                             std::to_string(m));
      }
    }

    if (!samples.commands.empty()) {
      report.aggregate_read_throughput += port.read.throughput;
      report.aggregate_write_throughput += port.write.throughput;
    }
  }
  return report;
}

// ============================================================================
// Serialization
// ============================================================================

namespace {

ordered_json stats_to_json(const LatencyStats& s) {
  ordered_json j;
  j["count"] = s.count;
  j["avg"] = s.avg;
  j["stddev"] = s.stddev;
  j["min"] = s.min;
  j["max"] = s.max;
  j["histogram"] = s.histogram;
  return j;
}

LatencyStats stats_from_json(const ordered_json& j) {
  LatencyStats s;
  s.count = j.at("count").get<uint64_t>();
  s.avg = j.at("avg").get<double>();
  s.stddev = j.at("stddev").get<double>();
  s.min = j.at("min").get<uint64_t>();
  s.max = j.at("max").get<uint64_t>();
  const auto& h = j.at("histogram");
  if (h.size() != s.histogram.size()) {
    throw ConfigError("report histogram must have 32 buckets");
  }
  for (size_t i = 0; i < s.histogram.size(); ++i) {
    s.histogram[i] = h.at(i).get<uint64_t>();
  }
  return s;
}

ordered_json flow_to_json(const WindowFlow& f) {
  ordered_json j;
  j["completed"] = f.completed;
  j["mean_latency"] = f.mean_latency;
  j["avg_in_flight"] = f.avg_in_flight;
  j["beats"] = f.beats;
  j["throughput"] = f.throughput;
  return j;
}

WindowFlow flow_from_json(const ordered_json& j) {
  WindowFlow f;
  f.completed = j.at("completed").get<uint64_t>();
  f.mean_latency = j.at("mean_latency").get<double>();
  f.avg_in_flight = j.at("avg_in_flight").get<double>();
  f.beats = j.at("beats").get<uint64_t>();
  f.throughput = j.at("throughput").get<double>();
  return f;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  ordered_json j;
  j["seed"] = report.seed;
  j["total_cycles"] = report.total_cycles;
  j["truncated"] = report.truncated;
  j["conflict_cycles"] = report.conflict_cycles;
  j["peak_split_occupancy"] = report.peak_split_occupancy;
  j["zero_load_read_latency"] = report.zero_load_read_latency;
  j["aggregate_read_throughput"] = report.aggregate_read_throughput;
  j["aggregate_write_throughput"] = report.aggregate_write_throughput;
  j["config"] = report.config_text;
  j["ports"] = ordered_json::array();
  for (const PortReport& port : report.ports) {
    ordered_json p;
    p["master"] = port.master;
    p["window_begin"] = port.window_begin;
    p["window_end"] = port.window_end;
    p["first_issue_cycle"] = port.first_issue_cycle;
    p["last_retire_cycle"] = port.last_retire_cycle;
    p["reads_accepted"] = port.reads_accepted;
    p["reads_completed"] = port.reads_completed;
    p["read_beats_delivered"] = port.read_beats_delivered;
    p["writes_accepted"] = port.writes_accepted;
    p["writes_completed"] = port.writes_completed;
    p["write_beats_injected"] = port.write_beats_injected;
    p["read"] = flow_to_json(port.read);
    p["write"] = flow_to_json(port.write);
    p["read_latency"] = stats_to_json(port.read_latency);
    p["write_latency"] = stats_to_json(port.write_latency);
    j["ports"].push_back(std::move(p));
  }
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  RunReport report;
  report.seed = j.at("seed").get<uint64_t>();
  report.total_cycles = j.at("total_cycles").get<uint64_t>();
  report.truncated = j.at("truncated").get<bool>();
  report.conflict_cycles = j.at("conflict_cycles").get<uint64_t>();
  report.peak_split_occupancy = j.at("peak_split_occupancy").get<uint64_t>();
  report.zero_load_read_latency =
      j.at("zero_load_read_latency").get<uint32_t>();
  report.aggregate_read_throughput =
      j.at("aggregate_read_throughput").get<double>();
  report.aggregate_write_throughput =
      j.at("aggregate_write_throughput").get<double>();
  report.config_text = j.at("config").get<std::string>();
  for (const auto& p : j.at("ports")) {
    PortReport port;
    port.master = p.at("master").get<uint32_t>();
    port.window_begin = p.at("window_begin").get<uint64_t>();
    port.window_end = p.at("window_end").get<uint64_t>();
    port.first_issue_cycle = p.at("first_issue_cycle").get<uint64_t>();
    port.last_retire_cycle = p.at("last_retire_cycle").get<uint64_t>();
    port.reads_accepted = p.at("reads_accepted").get<uint64_t>();
    port.reads_completed = p.at("reads_completed").get<uint64_t>();
    port.read_beats_delivered = p.at("read_beats_delivered").get<uint64_t>();
    port.writes_accepted = p.at("writes_accepted").get<uint64_t>();
    port.writes_completed = p.at("writes_completed").get<uint64_t>();
    port.write_beats_injected = p.at("write_beats_injected").get<uint64_t>();
    port.read = flow_from_json(p.at("read"));
    port.write = flow_from_json(p.at("write"));
    port.read_latency = stats_from_json(p.at("read_latency"));
    port.write_latency = stats_from_json(p.at("write_latency"));
    report.ports.push_back(std::move(port));
  }
  return report;
}

std::string report_to_csv(const RunReport& report) {
  std::string out =
      "master,window_begin,window_end,reads_completed,writes_completed,"
      "read_throughput,write_throughput,"
      "read_latency_avg,read_latency_stddev,read_latency_min,read_latency_max,"
      "write_latency_avg,write_latency_stddev,write_latency_min,"
      "write_latency_max,read_avg_in_flight,write_avg_in_flight\n";
  char buf[512];
  for (const PortReport& p : report.ports) {
    std::snprintf(
        buf, sizeof(buf),
        "%u,%llu,%llu,%llu,%llu,%.9g,%.9g,%.9g,%.9g,%llu,%llu,%.9g,%.9g,"
        "%llu,%llu,%.9g,%.9g\n",
        p.master, (unsigned long long)p.window_begin,
        (unsigned long long)p.window_end, (unsigned long long)p.reads_completed,
        (unsigned long long)p.writes_completed, p.read.throughput,
        p.write.throughput, p.read_latency.avg, p.read_latency.stddev,
        (unsigned long long)p.read_latency.min,
        (unsigned long long)p.read_latency.max, p.write_latency.avg,
        p.write_latency.stddev, (unsigned long long)p.write_latency.min,
        (unsigned long long)p.write_latency.max, p.read.avg_in_flight,
        p.write.avg_in_flight);
    out += buf;
  }
  return out;
}

// ============================================================================
// Isolation audit
// ============================================================================

namespace {

void diff_stats(uint32_t master, const char* prefix, const LatencyStats& a,
                const LatencyStats& b, std::vector<IsolationFinding>& out) {
  auto add = [&](const char* field) {
    out.push_back({master, std::string(prefix) + "." + field});
  };
  if (a.count != b.count) add("count");
  if (a.avg != b.avg) add("avg");
  if (a.stddev != b.stddev) add("stddev");
  if (a.min != b.min) add("min");
  if (a.max != b.max) add("max");
  if (a.histogram != b.histogram) add("histogram");
}

void diff_flow(uint32_t master, const char* prefix, const WindowFlow& a,
               const WindowFlow& b, std::vector<IsolationFinding>& out) {
  auto add = [&](const char* field) {
    out.push_back({master, std::string(prefix) + "." + field});
  };
  if (a.completed != b.completed) add("completed");
  if (a.mean_latency != b.mean_latency) add("mean_latency");
  if (a.avg_in_flight != b.avg_in_flight) add("avg_in_flight");
  if (a.beats != b.beats) add("beats");
  if (a.throughput != b.throughput) add("throughput");
}

}  // namespace

IsolationAudit audit_isolation(
    const RunReport& joint,
    const std::vector<std::pair<uint32_t, RunReport>>& solos) {
  IsolationAudit audit;
  for (const auto& [master, solo] : solos) {
    if (master >= joint.ports.size() || master >= solo.ports.size()) {
      throw AuditError("solo run for master " + std::to_string(master) +
                       " does not cover that port");
    }
    const PortReport& a = joint.ports[master];
    const PortReport& b = solo.ports[master];
    if (a == b) continue;
    auto add = [&](const char* field) {
      audit.findings.push_back({master, field});
    };
    if (a.window_begin != b.window_begin) add("window_begin");
    if (a.window_end != b.window_end) add("window_end");
    if (a.first_issue_cycle != b.first_issue_cycle) add("first_issue_cycle");
    if (a.last_retire_cycle != b.last_retire_cycle) add("last_retire_cycle");
    if (a.reads_accepted != b.reads_accepted) add("reads_accepted");
    if (a.reads_completed != b.reads_completed) add("reads_completed");
    if (a.read_beats_delivered != b.read_beats_delivered) {
      add("read_beats_delivered");
    }
    if (a.writes_accepted != b.writes_accepted) add("writes_accepted");
    if (a.writes_completed != b.writes_completed) add("writes_completed");
    if (a.write_beats_injected != b.write_beats_injected) {
      add("write_beats_injected");
    }
    diff_flow(master, "read", a.read, b.read, audit.findings);
    diff_flow(master, "write", a.write, b.write, audit.findings);
    diff_stats(master, "read_latency", a.read_latency, b.read_latency,
               audit.findings);
    diff_stats(master, "write_latency", a.write_latency, b.write_latency,
               audit.findings);
  }
  return audit;
}

}  // namespace smcsim
