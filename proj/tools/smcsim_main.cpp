// Command line front end: run simulations, sweep a config axis, decompose
// addresses and audit inter-master isolation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smcsim/addressing.hpp"
#include "smcsim/engine.hpp"
#include "smcsim/errors.hpp"
#include "smcsim/metrics.hpp"

namespace {

using namespace smcsim;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  uint64_t seed = 1;
  uint64_t max_cycles = Simulation::kDefaultMaxCycles;
};

std::vector<std::pair<std::string, std::string>> parse_sets(
    const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got: " + s);
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SimConfig make_config(const CommonArgs& args,
                      const std::vector<std::pair<std::string, std::string>>&
                          extra_overrides = {}) {
  std::string text;
  if (!args.config_path.empty()) text = read_file(args.config_path);
  auto overrides = parse_sets(args.sets);
  overrides.insert(overrides.end(), extra_overrides.begin(),
                   extra_overrides.end());
  return parse_config_with_overrides(text, overrides);
}

// Writes through a temporary file so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void emit_report(const RunReport& report, const std::string& out_path,
                 std::string format) {
  if (format.empty()) {
    format = out_path.size() > 4 &&
                     out_path.compare(out_path.size() - 4, 4, ".csv") == 0
                 ? "csv"
                 : "json";
  }
  const std::string text =
      format == "csv" ? report_to_csv(report) : report_to_json(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

void print_summary(const RunReport& report) {
  std::fprintf(stderr,
               "cycles=%llu truncated=%d aggregate_read=%.4f "
               "aggregate_write=%.4f conflict_cycles=%llu\n",
               (unsigned long long)report.total_cycles, report.truncated ? 1 : 0,
               report.aggregate_read_throughput,
               report.aggregate_write_throughput,
               (unsigned long long)report.conflict_cycles);
}

double weighted_latency(const RunReport& report, bool reads) {
  double sum = 0;
  uint64_t count = 0;
  for (const PortReport& p : report.ports) {
    const LatencyStats& s = reads ? p.read_latency : p.write_latency;
    sum += s.avg * double(s.count);
    count += s.count;
  }
  return count == 0 ? 0.0 : sum / double(count);
}

int cmd_run(const CommonArgs& args, const std::string& out_path,
            const std::string& format, const std::string& fabric_trace_path,
            const std::string& dump_memory_path) {
  const SimConfig config = make_config(args);
  Simulation sim(config, args.seed);
  std::ofstream trace_out;
  if (!fabric_trace_path.empty()) {
    trace_out.open(fabric_trace_path);
    if (!trace_out) {
      throw ConfigError("cannot write fabric trace: " + fabric_trace_path);
    }
    sim.set_fabric_trace(&trace_out);
  }
  const RunReport report = sim.run(args.max_cycles);
  if (!dump_memory_path.empty()) {
    std::ofstream img(dump_memory_path, std::ios::binary);
    if (!img) {
      throw ConfigError("cannot write memory image: " + dump_memory_path);
    }
    sim.memory().dump_image(img);
  }
  emit_report(report, out_path, format);
  print_summary(report);
  if (report.truncated) {
    std::fprintf(stderr, "warning: run truncated at max-cycles\n");
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis,
              const std::string& out_path) {
  const auto eq = axis.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--axis expects key=v1,v2,..., got: " + axis);
  }
  const std::string key = axis.substr(0, eq);
  std::vector<std::string> values;
  std::stringstream list(axis.substr(eq + 1));
  std::string value;
  while (std::getline(list, value, ',')) values.push_back(value);
  if (values.empty()) throw ConfigError("--axis needs at least one value");

  std::string csv = key +
                    ",total_cycles,aggregate_read_throughput,"
                    "aggregate_write_throughput,mean_read_latency,"
                    "mean_write_latency,conflict_cycles\n";
  for (const std::string& v : values) {
    const SimConfig config = make_config(args, {{key, v}});
    Simulation sim(config, args.seed);
    const RunReport report = sim.run(args.max_cycles);
    if (report.truncated) {
      std::fprintf(stderr, "warning: point %s=%s truncated\n", key.c_str(),
                   v.c_str());
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), ",%llu,%.9g,%.9g,%.9g,%.9g,%llu\n",
                  (unsigned long long)report.total_cycles,
                  report.aggregate_read_throughput,
                  report.aggregate_write_throughput,
                  weighted_latency(report, true),
                  weighted_latency(report, false),
                  (unsigned long long)report.conflict_cycles);
    csv += v + buf;
    std::fprintf(stderr, "%s=%s: ", key.c_str(), v.c_str());
    print_summary(report);
  }
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(out_path, csv);
  }
  return 0;
}

int cmd_map(const CommonArgs& args, const std::string& address_text,
            uint32_t beats) {
  const SimConfig config = make_config(args);
  const AddressGeometry geom = derive_geometry(config.topology);
  const uint64_t address = std::stoull(address_text, nullptr, 16);
  const auto located =
      expand_burst(address, beats, geom, config.scheme,
                   config.topology.total_bytes);
  std::printf("scheme=%s\n", to_string(config.scheme.kind));
  std::printf("beat address      cluster array bank subbank row\n");
  for (const LocatedBeat& lb : located) {
    std::printf("%4u 0x%08llx %7llu %5llu %4llu %7llu %llu\n", lb.beat_index,
                (unsigned long long)lb.address,
                (unsigned long long)lb.location.cluster,
                (unsigned long long)lb.location.array,
                (unsigned long long)lb.location.bank,
                (unsigned long long)lb.location.subbank,
                (unsigned long long)lb.location.row);
  }
  return 0;
}

int cmd_audit(const CommonArgs& args, const std::string& out_path) {
  const SimConfig config = make_config(args);
  const std::string base_text = render_config(config);
  const auto kinds =
      config.workload.resolve_assignment(config.topology.masters);

  Simulation joint_sim(config, args.seed);
  const RunReport joint = joint_sim.run(args.max_cycles);
  if (joint.truncated) {
    throw AuditError("joint run truncated; raise --max-cycles");
  }

  std::vector<std::pair<uint32_t, RunReport>> solos;
  for (uint32_t m = 0; m < joint.ports.size(); ++m) {
    const PortReport& port = joint.ports[m];
    if (port.reads_accepted + port.writes_accepted == 0) continue;
    const std::string solo_assignment = std::string(to_string(kinds[m])) +
                                        "@" + std::to_string(m) + "-" +
                                        std::to_string(m);
    const SimConfig solo_config = parse_config_with_overrides(
        base_text, {{"workload", solo_assignment}});
    Simulation solo_sim(solo_config, args.seed);
    RunReport solo = solo_sim.run(args.max_cycles);
    if (solo.truncated) {
      throw AuditError("solo run for master " + std::to_string(m) +
                       " truncated; raise --max-cycles");
    }
    solos.emplace_back(m, std::move(solo));
  }

  const IsolationAudit audit = audit_isolation(joint, solos);
  std::string out = "{\n  \"passed\": ";
  out += audit.passed() ? "true" : "false";
  out += ",\n  \"masters_audited\": [";
  for (size_t i = 0; i < solos.size(); ++i) {
    out += (i ? ", " : "") + std::to_string(solos[i].first);
  }
  out += "],\n  \"findings\": [";
  for (size_t i = 0; i < audit.findings.size(); ++i) {
    const IsolationFinding& f = audit.findings[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"master\": " + std::to_string(f.master) + ", \"field\": \"" +
           f.field + "\"}";
  }
  out += audit.findings.empty() ? "]\n}\n" : "\n  ]\n}\n";
  if (out_path.empty()) {
    std::cout << out;
  } else {
    write_file_atomic(out_path, out);
  }
  if (audit.passed()) {
    std::fprintf(stderr, "isolation audit: PASS (%zu masters)\n",
                 solos.size());
    return 0;
  }
  std::fprintf(stderr, "isolation audit: FAIL (%zu findings)\n",
               audit.findings.size());
  for (const IsolationFinding& f : audit.findings) {
    std::fprintf(stderr, "  master %u differs in %s\n", f.master,
                 f.field.c_str());
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-accurate simulator of a hierarchically split "
               "many-ported shared memory"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string out_path;
  std::string format;
  std::string fabric_trace_path;
  std::string dump_memory_path;
  std::string axis;
  std::string address_text;
  uint32_t map_beats = 1;
  uint64_t transactions = 0;
  std::string workload_kind;

  auto add_common = [&](CLI::App* cmd, bool with_run_flags) {
    cmd->add_option("--config", args.config_path,
                    "Configuration file (key = value lines)");
    cmd->add_option("--set", args.sets,
                    "Override a config key, e.g. --set masters=8")
        ->take_all();
    if (with_run_flags) {
      cmd->add_option("--seed", args.seed, "Workload seed");
      cmd->add_option("--max-cycles", args.max_cycles,
                      "Truncate the run after this many fabric cycles");
      cmd->add_option("--transactions", transactions,
                      "Shorthand for --set transactions_per_port=N");
      cmd->add_option("--workload", workload_kind,
                      "Shorthand for --set workload=KIND");
      cmd->add_option("--out", out_path, "Write the report here (atomic)");
    }
  };

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  add_common(run, true);
  run->add_option("--format", format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--trace-fabric", fabric_trace_path,
                  "Write one line per fabric beat movement");
  run->add_option("--dump-memory", dump_memory_path,
                  "Write the final memory image (binary)");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run once per value of one config axis, emit CSV");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "Axis as key=v1,v2,...")->required();

  CLI::App* map_cmd =
      app.add_subcommand("map", "Decompose an address into its location");
  add_common(map_cmd, false);
  map_cmd->add_option("address", address_text, "Byte address (hex)")
      ->required();
  map_cmd->add_option("--burst", map_beats, "Expand this many beats");

  CLI::App* audit = app.add_subcommand(
      "audit-isolation",
      "Compare every active master against its solo run, field by field");
  add_common(audit, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (transactions != 0) {
      args.sets.push_back("transactions_per_port=" +
                          std::to_string(transactions));
    }
    if (!workload_kind.empty()) {
      args.sets.push_back("workload=" + workload_kind);
    }
    if (run->parsed()) {
      return cmd_run(args, out_path, format, fabric_trace_path,
                     dump_memory_path);
    }
    if (sweep->parsed()) return cmd_sweep(args, axis, out_path);
    if (map_cmd->parsed()) return cmd_map(args, address_text, map_beats);
    if (audit->parsed()) return cmd_audit(args, out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
