#include "smcsim/engine.hpp"

#include <span>

#include "smcsim/errors.hpp"
#include "smcsim/rng.hpp"

namespace smcsim {
namespace {

// Gate streams live beside the generator streams in the per-(master, lane)
// seed space; the high salt bit keeps the two apart.
Rng gate_rng(uint64_t seed, uint32_t master, uint32_t lane) {
  return Rng(derive_seed(seed, (uint64_t(master) << 8) | lane | (1ull << 16)));
}

SimConfig validated(SimConfig config) {
  config.validate();
  return config;
}

}  // namespace

Simulation::Simulation(const SimConfig& config, uint64_t seed,
                       const std::vector<std::vector<TraceEntry>>& trace)
    : config_(validated(config)),
      seed_(seed),
      geom_(derive_geometry(config_.topology)),
      fabric_(config_.topology, config_.timing),
      memory_(config_.topology, config_.timing, config_.scheme),
      recorder_(config_.topology.masters) {
  const uint32_t n = config_.topology.masters;
  ports_.reserve(n);
  for (uint32_t m = 0; m < n; ++m) {
    ports_.emplace_back(m, config_.timing, config_.topology.beat_bytes);
  }
  auto workload = build_workload(config_, seed, trace);
  masters_.resize(n);
  for (uint32_t m = 0; m < n; ++m) {
    for (uint32_t l = 0; l < workload[m].lanes.size(); ++l) {
      LaneRuntime lane{std::move(workload[m].lanes[l]), std::nullopt, {},
                       gate_rng(seed, m, l), false};
      masters_[m].lanes.push_back(std::move(lane));
    }
  }
}

Simulation::Simulation(const SimConfig& config, uint64_t seed)
    : Simulation(config, seed,
                 load_trace_for(config.workload, config.topology)) {}

void Simulation::set_memory_observer(MemoryObserver observer) {
  memory_.set_observer(std::move(observer));
}

void Simulation::set_fabric_trace(std::ostream* trace) {
  fabric_.set_trace(trace);
}

bool Simulation::drained() const {
  for (const MasterRuntime& master : masters_) {
    for (const LaneRuntime& lane : master.lanes) {
      if (!lane.done || lane.pending || !lane.inject.empty()) return false;
    }
  }
  for (const PortState& port : ports_) {
    if (port.in_flight() != 0) return false;
  }
  return fabric_.idle() && memory_.idle();
}

void Simulation::issue_phase(uint64_t cycle) {
  const double rate = config_.workload.rate;
  for (uint32_t m = 0; m < masters_.size(); ++m) {
    MasterRuntime& master = masters_[m];
    for (LaneRuntime& lane : master.lanes) {
      if (!lane.done && !lane.pending) {
        const bool offer = rate >= 1.0 || lane.gate.next_double() < rate;
        if (offer) {
          auto tmpl = lane.generator->next();
          if (tmpl) {
            lane.pending = *tmpl;
          } else {
            lane.done = true;
          }
        }
      }
      if (lane.pending && cycle >= lane.pending->min_cycle) {
        Command cmd;
        cmd.master = m;
        cmd.op = lane.pending->op;
        cmd.base = lane.pending->base;
        cmd.beats = lane.pending->beats;
        cmd.cmd_id = master.next_cmd_id;
        cmd.issue_cycle = cycle;
        cmd.payload_seed = lane.pending->payload_seed;
        if (ports_[m].try_accept(cmd, cycle) == AcceptResult::accepted) {
          ++master.next_cmd_id;
          recorder_.record_issue(m, cmd.cmd_id, cmd.op, cmd.beats, cycle);
          auto located = expand_burst(cmd.base, cmd.beats, geom_,
                                      config_.scheme,
                                      config_.topology.total_bytes);
          for (const LocatedBeat& lb : located) {
            Beat beat;
            beat.address = lb.address;
            // Per-beat stream: one command seed must not paint the same
            // 32 bytes on every beat of the burst.
            beat.payload_seed = cmd.op == Op::write
                                    ? derive_seed(cmd.payload_seed,
                                                  lb.beat_index)
                                    : 0;
            beat.cmd_id = cmd.cmd_id;
            beat.master = m;
            beat.beat_index = static_cast<uint16_t>(lb.beat_index);
            beat.op = cmd.op;
            beat.location = lb.location;
            lane.inject.push_back(beat);
          }
          lane.pending.reset();
        }
      }
      if (!lane.inject.empty()) {
        const Beat& front = lane.inject.front();
        if (fabric_.inject_beats(m, std::span<const Beat>(&front, 1), cycle) ==
            1) {
          if (front.op == Op::write) {
            recorder_.record_write_inject(m, cycle);
          }
          lane.inject.pop_front();
        }
      }
    }
  }
}

void Simulation::step(uint64_t cycle) {
  fabric_.tick_response(
      cycle,
      [this, cycle](uint32_t m, const ReadReturn& ret) {
        recorder_.record_read_delivery(m, cycle);
        if (ports_[m].record_return(ret, cycle)) {
          recorder_.record_retire(m, ret.cmd_id, cycle);
        }
      },
      [this, cycle](uint32_t m, uint64_t cmd_id, uint16_t beat_index) {
        if (ports_[m].record_commit(cmd_id, beat_index, cycle)) {
          recorder_.record_retire(m, cmd_id, cycle);
        }
      });
  fabric_.drain_request_arrivals(
      cycle, [this, cycle](Beat&& beat) { memory_.dispatch(std::move(beat),
                                                           cycle); });
  memory_.tick(
      cycle,
      [this](const Beat& beat, uint64_t completion) {
        fabric_.push_return(beat, completion);
      },
      [this](const Beat& beat, uint64_t completion) {
        fabric_.push_commit_notice(beat.master, beat.cmd_id, beat.beat_index,
                                   completion);
      });
  fabric_.tick_request(cycle, memory_);
  issue_phase(cycle);
}

RunReport Simulation::run(uint64_t max_cycles) {
  if (ran_) throw IntegrityError("a Simulation instance runs only once");
  ran_ = true;
  uint64_t cycle = 0;
  bool complete = false;
  for (; cycle < max_cycles; ++cycle) {
    if (drained()) {
      complete = true;
      break;
    }
    step(cycle);
  }
  if (!complete) complete = drained();
  cycles_ = cycle;
  return recorder_.finalize(config_, seed_, cycles_, !complete,
                            memory_.conflict_cycles(),
                            fabric_.peak_split_occupancy());
}

}  // namespace smcsim
