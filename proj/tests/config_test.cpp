#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "smcsim/config.hpp"
#include "smcsim/errors.hpp"

using namespace smcsim;

namespace {

// True when fn throws ConfigError whose message contains needle.
template <typename Fn>
bool throws_mentioning(Fn&& fn, const std::string& needle) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("defaults describe the prototype shape") {
  SimConfig config;
  config.validate();
  CHECK(config.topology.masters == 16);
  CHECK(config.topology.clusters == 4);
  CHECK(config.topology.arrays_per_cluster == 4);
  CHECK(config.topology.banks_per_array == 16);
  CHECK(config.topology.subbanks_per_bank == 4);
  CHECK(config.topology.beat_bytes == 32);
  CHECK(config.topology.total_bytes == 32ull * 1024 * 1024);
  CHECK(config.topology.subbank_units() == 1024);
  CHECK(config.topology.rows_per_subbank() == 1024);
  CHECK(config.topology.total_beats() == 1048576);
  CHECK(config.timing.zero_load_read_latency() == 32);
  CHECK(config.timing.memory_access_fabric_cycles() == 4);
  CHECK(config.timing.outstanding_per_port == 8);
  CHECK(config.timing.split_buffer_beats == 64);
}

TEST_CASE("geometry places the selector fields low to high") {
  const AddressGeometry geom = derive_geometry(TopologyConfig{});
  CHECK(geom.beat_offset.lo == 0);
  CHECK(geom.beat_offset.width == 5);
  CHECK(geom.cluster.lo == 5);
  CHECK(geom.cluster.width == 2);
  CHECK(geom.array.lo == 7);
  CHECK(geom.array.width == 2);
  CHECK(geom.bank.lo == 9);
  CHECK(geom.bank.width == 4);
  CHECK(geom.row.lo == 13);
  CHECK(geom.row.width == 10);
  CHECK(geom.subbank.lo == 23);
  CHECK(geom.subbank.width == 2);
  CHECK(geom.address_bits == 25);
}

TEST_CASE("geometry widths partition the address bits for varied shapes") {
  struct Shape {
    uint32_t clusters, arrays, banks, subbanks;
    uint64_t total;
  };
  const Shape shapes[] = {
      {4, 4, 16, 4, 32ull << 20},
      {2, 2, 4, 2, 1ull << 20},
      {1, 4, 8, 1, 4ull << 20},
      {8, 2, 2, 2, 2ull << 20},
      {4, 1, 16, 4, 16ull << 20},
  };
  for (const Shape& s : shapes) {
    TopologyConfig topo;
    topo.clusters = s.clusters;
    topo.arrays_per_cluster = s.arrays;
    topo.banks_per_array = s.banks;
    topo.subbanks_per_bank = s.subbanks;
    topo.total_bytes = s.total;
    topo.validate();
    const AddressGeometry geom = derive_geometry(topo);
    // Non-empty fields tile the address space contiguously from bit 0.
    const FieldSpec* fields[] = {&geom.beat_offset, &geom.cluster, &geom.array,
                                 &geom.bank, &geom.row, &geom.subbank};
    uint32_t cursor = 0;
    uint32_t sum = 0;
    for (const FieldSpec* f : fields) {
      if (f->width == 0) continue;
      CHECK(f->lo == cursor);
      cursor = f->lo + f->width;
      sum += f->width;
    }
    CHECK(sum == geom.address_bits);
    CHECK((1ull << geom.address_bits) == s.total);
  }
}

TEST_CASE("zero-width selectors appear for count-one levels") {
  TopologyConfig topo;
  topo.clusters = 1;
  topo.arrays_per_cluster = 1;
  topo.total_bytes = 1ull << 20;
  topo.validate();
  const AddressGeometry geom = derive_geometry(topo);
  CHECK(geom.cluster.width == 0);
  CHECK(geom.array.width == 0);
  CHECK(geom.cluster.extract(0xffffffff) == 0);
}

TEST_CASE("invalid topologies are rejected by name") {
  TopologyConfig topo;
  topo.masters = 3;
  CHECK_THROWS_AS(topo.validate(), ConfigError);
  topo = TopologyConfig{};
  topo.total_bytes = 48ull << 20;  // not a power of two
  CHECK_THROWS_AS(topo.validate(), ConfigError);
  topo = TopologyConfig{};
  topo.banks_per_array = 0;
  CHECK_THROWS_AS(topo.validate(), ConfigError);
  // 16 KiB cannot be carved into 1024 sub-banks of 32-byte beats.
  topo = TopologyConfig{};
  topo.total_bytes = 1ull << 14;
  CHECK_THROWS_AS(topo.validate(), ConfigError);
}

TEST_CASE("timing invariants") {
  TimingConfig timing;
  timing.request_path_stages = 2;
  CHECK_THROWS_AS(timing.validate(), ConfigError);
  timing = TimingConfig{};
  timing.response_path_stages = 2;
  CHECK_THROWS_AS(timing.validate(), ConfigError);
  timing = TimingConfig{};
  timing.fabric_clock_per_mem_clock = 0;
  CHECK_THROWS_AS(timing.validate(), ConfigError);
  timing = TimingConfig{};
  timing.outstanding_per_port = 0;
  CHECK_THROWS_AS(timing.validate(), ConfigError);
  timing = TimingConfig{};
  timing.split_buffer_beats = 8;  // below one maximal burst
  CHECK_THROWS_AS(timing.validate(), ConfigError);
}

TEST_CASE("key = value parsing") {
  SUBCASE("empty text gives defaults") {
    const SimConfig config = parse_config("");
    CHECK(config.topology.masters == 16);
  }
  SUBCASE("comments, blank lines and suffixes") {
    const SimConfig config = parse_config(
        "# shape\n"
        "masters = 8\n"
        "\n"
        "total_bytes = 16 MiB  # capacity\n"
        "payload_bytes = 8KiB\n");
    CHECK(config.topology.masters == 8);
    CHECK(config.topology.total_bytes == 16ull * 1024 * 1024);
    CHECK(config.workload.payload_bytes == 8192);
  }
  SUBCASE("unknown keys are errors") {
    CHECK(throws_mentioning([] { parse_config("masterz = 8\n"); },
                            "unknown config key"));
  }
  SUBCASE("duplicate keys are errors") {
    CHECK(throws_mentioning(
        [] { parse_config("masters = 8\nmasters = 4\n"); }, "duplicate"));
  }
  SUBCASE("malformed lines carry their line number") {
    CHECK(throws_mentioning([] { parse_config("masters = 8\nnonsense\n"); },
                            "line 2"));
  }
  SUBCASE("bad numbers are errors") {
    CHECK_THROWS_AS(parse_config("masters = eight\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("rate = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("total_bytes = 4GiB\n"), ConfigError);
  }
}

TEST_CASE("size suffix parsing") {
  CHECK(parse_size_value("64", "k") == 64);
  CHECK(parse_size_value("4 KiB", "k") == 4096);
  CHECK(parse_size_value("32MiB", "k") == 32ull * 1024 * 1024);
  CHECK_THROWS_AS(parse_size_value("4 kb", "k"), ConfigError);
  CHECK_THROWS_AS(parse_size_value("", "k"), ConfigError);
}

TEST_CASE("burst mix parsing and validation") {
  const SimConfig config = parse_config("burst_mix = 4:0.25,16:0.75\n");
  REQUIRE(config.workload.mix.entries.size() == 2);
  CHECK(config.workload.mix.entries[0].beats == 4);
  CHECK(config.workload.mix.entries[0].weight == 0.25);
  CHECK(config.workload.mix.entries[1].beats == 16);
  CHECK_THROWS_AS(parse_config("burst_mix = 3:1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("burst_mix = 4:0.3,16:0.3\n"), ConfigError);
}

TEST_CASE("workload assignment grammar") {
  WorkloadConfig wl;
  SUBCASE("bare kind covers every master") {
    wl.assignment = "bulk";
    const auto kinds = wl.resolve_assignment(4);
    for (WorkloadKind k : kinds) CHECK(k == WorkloadKind::bulk);
  }
  SUBCASE("ranges assign kinds and leave the rest idle") {
    wl.assignment = "feature@0-1,roi@3-3";
    const auto kinds = wl.resolve_assignment(4);
    CHECK(kinds[0] == WorkloadKind::feature);
    CHECK(kinds[1] == WorkloadKind::feature);
    CHECK(kinds[2] == WorkloadKind::idle);
    CHECK(kinds[3] == WorkloadKind::roi);
  }
  SUBCASE("later ranges win overlaps, excess masters are clipped") {
    // Keeps one assignment string usable across a masters sweep.
    wl.assignment = "bulk@0-7,roi@1-2";
    const auto kinds = wl.resolve_assignment(4);
    CHECK(kinds[0] == WorkloadKind::bulk);
    CHECK(kinds[1] == WorkloadKind::roi);
    CHECK(kinds[2] == WorkloadKind::roi);
    CHECK(kinds[3] == WorkloadKind::bulk);
  }
  SUBCASE("single master shorthand") {
    wl.assignment = "trace@2";
    const auto kinds = wl.resolve_assignment(4);
    CHECK(kinds[2] == WorkloadKind::trace);
    CHECK(kinds[0] == WorkloadKind::idle);
  }
  SUBCASE("reversed ranges are errors") {
    wl.assignment = "bulk@3-1";
    CHECK_THROWS_AS(wl.resolve_assignment(4), ConfigError);
  }
  SUBCASE("unknown kinds are errors") {
    wl.assignment = "stream";
    CHECK_THROWS_AS(wl.resolve_assignment(4), ConfigError);
  }
}

TEST_CASE("workload parameter invariants") {
  TopologyConfig topo;
  WorkloadConfig wl;
  wl.payload_bytes = 100;  // not a multiple of one 16-beat burst
  CHECK_THROWS_AS(wl.validate(topo), ConfigError);
  wl = WorkloadConfig{};
  wl.portion_bytes = 48;  // not beat aligned
  CHECK_THROWS_AS(wl.validate(topo), ConfigError);
  wl = WorkloadConfig{};
  wl.portion_bytes = 512;
  wl.line_bytes = 256;  // portion exceeds the line
  CHECK_THROWS_AS(wl.validate(topo), ConfigError);
  wl = WorkloadConfig{};
  wl.line_stride_bytes = 128;  // stride below the line
  CHECK_THROWS_AS(wl.validate(topo), ConfigError);
  wl = WorkloadConfig{};
  wl.assignment = "trace";
  CHECK(throws_mentioning([&] { wl.validate(topo); }, "trace_file"));
  wl.trace_file = "t.csv";
  wl.validate(topo);
}

TEST_CASE("render and parse round-trips exactly") {
  SimConfig config;
  config.topology.masters = 8;
  config.scheme.kind = SchemeKind::xor_fold;
  config.workload.assignment = "feature@0-3,roi@4-7";
  config.workload.rate = 0.37081376953191;
  config.workload.mix.entries = {{4, 0.124999999999999},
                                 {16, 0.875000000000001}};
  config.workload.isolation_mode = true;
  config.workload.trace_file = "traces/a.csv";
  const std::string text = render_config(config);
  const SimConfig back = parse_config(text);
  CHECK(back.topology.masters == 8);
  CHECK(back.scheme.kind == SchemeKind::xor_fold);
  CHECK(back.workload.rate == config.workload.rate);
  CHECK(back.workload.mix.entries[0].weight ==
        config.workload.mix.entries[0].weight);
  CHECK(back.workload.trace_file == "traces/a.csv");
  CHECK(render_config(back) == text);
}

TEST_CASE("scheme names parse both spellings") {
  CHECK(scheme_kind_from_string("identity") == SchemeKind::identity);
  CHECK(scheme_kind_from_string("xor-fold") == SchemeKind::xor_fold);
  CHECK(scheme_kind_from_string("xor_fold") == SchemeKind::xor_fold);
  CHECK_THROWS_AS(scheme_kind_from_string("hash"), ConfigError);
}

TEST_CASE("overrides replace file values and are validated") {
  const SimConfig config = parse_config_with_overrides(
      "masters = 8\n", {{"masters", "4"}, {"rate", "0.5"}});
  CHECK(config.topology.masters == 4);
  CHECK(config.workload.rate == 0.5);
  CHECK_THROWS_AS(parse_config_with_overrides("", {{"masters", "3"}}),
                  ConfigError);
}

TEST_CASE("hash source must clear a maximal burst footprint") {
  SimConfig config;
  config.scheme.kind = SchemeKind::xor_fold;
  config.scheme.hash_source = FieldSpec{5, 4};  // overlaps burst-16 span
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.scheme.hash_source = FieldSpec{13, 10};
  config.validate();
  config.scheme.hash_source = FieldSpec{20, 10};  // runs past the address
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
