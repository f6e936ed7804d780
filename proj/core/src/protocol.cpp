#include "smcsim/protocol.hpp"

#include <algorithm>
#include <string>

#include "smcsim/errors.hpp"

namespace smcsim {

PortState::PortState(uint32_t master, const TimingConfig& timing,
                     uint64_t beat_bytes)
    : master_(master),
      credit_limit_(timing.outstanding_per_port),
      beat_bytes_(beat_bytes) {
  in_flight_.reserve(2 * credit_limit_);
}

AcceptResult PortState::try_accept(const Command& cmd, uint64_t cycle) {
  if (cmd.master != master_) {
    throw ProtocolError("command for master " + std::to_string(cmd.master) +
                        " offered to port " + std::to_string(master_));
  }
  if (cmd.beats != 1 && cmd.beats != 4 && cmd.beats != 8 && cmd.beats != 16) {
    throw ProtocolError("burst length " + std::to_string(cmd.beats) +
                        " not in {1,4,8,16}");
  }
  if (cmd.base % beat_bytes_ != 0) {
    throw ProtocolError("command base " + std::to_string(cmd.base) +
                        " not beat-aligned");
  }
  if (cmd.cmd_id < next_expected_cmd_id_) {
    throw ProtocolError("cmd_id not strictly increasing on port " +
                        std::to_string(master_));
  }

  const uint32_t outstanding =
      cmd.op == Op::read ? outstanding_reads_ : outstanding_writes_;
  if (outstanding >= credit_limit_) return AcceptResult::stalled_credit;

  // Same-address ordering: hold the command while its footprint overlaps an
  // in-flight command and either side writes.
  const uint64_t lo = cmd.base;
  const uint64_t hi = cmd.base + uint64_t(cmd.beats) * beat_bytes_;
  for (const InFlight& f : in_flight_) {
    if (cmd.op == Op::read && f.op == Op::read) continue;
    const uint64_t f_hi = f.base + uint64_t(f.beats) * beat_bytes_;
    if (lo < f_hi && f.base < hi) return AcceptResult::stalled_ordering;
  }

  InFlight f;
  f.cmd_id = cmd.cmd_id;
  f.base = cmd.base;
  f.issue_cycle = cycle;
  f.beats = cmd.beats;
  f.op = cmd.op;
  in_flight_.push_back(f);
  next_expected_cmd_id_ = cmd.cmd_id + 1;
  if (cmd.op == Op::read) {
    ++outstanding_reads_;
    ++accepted_reads_;
  } else {
    ++outstanding_writes_;
    ++accepted_writes_;
  }
  return AcceptResult::accepted;
}

PortState::InFlight* PortState::find(uint64_t cmd_id) {
  for (InFlight& f : in_flight_) {
    if (f.cmd_id == cmd_id) return &f;
  }
  return nullptr;
}

bool PortState::finish_beat(InFlight& cmd, uint16_t beat_index,
                            uint64_t cycle) {
  if (beat_index >= cmd.beats) {
    throw IntegrityError("beat index " + std::to_string(beat_index) +
                         " outside command of " + std::to_string(cmd.beats) +
                         " beats");
  }
  const uint32_t bit = 1u << beat_index;
  if (cmd.done_mask & bit) {
    throw IntegrityError("duplicate beat " + std::to_string(beat_index) +
                         " for command " + std::to_string(cmd.cmd_id));
  }
  cmd.done_mask |= bit;
  if (cmd.done_mask != (1u << cmd.beats) - 1) return false;
  last_latency_ = cycle - cmd.issue_cycle;
  if (cmd.op == Op::read) {
    --outstanding_reads_;
    ++retired_reads_;
  } else {
    --outstanding_writes_;
    ++retired_writes_;
  }
  const uint64_t id = cmd.cmd_id;
  in_flight_.erase(std::find_if(
      in_flight_.begin(), in_flight_.end(),
      [id](const InFlight& f) { return f.cmd_id == id; }));
  return true;
}

bool PortState::record_return(const ReadReturn& ret, uint64_t cycle) {
  InFlight* cmd = find(ret.cmd_id);
  if (cmd == nullptr || cmd->op != Op::read) {
    throw IntegrityError("read return for unknown command " +
                         std::to_string(ret.cmd_id) + " on port " +
                         std::to_string(master_));
  }
  ++read_beats_returned_;
  return finish_beat(*cmd, ret.beat_index, cycle);
}

bool PortState::record_commit(uint64_t cmd_id, uint16_t beat_index,
                              uint64_t cycle) {
  InFlight* cmd = find(cmd_id);
  if (cmd == nullptr || cmd->op != Op::write) {
    throw IntegrityError("write commit for unknown command " +
                         std::to_string(cmd_id) + " on port " +
                         std::to_string(master_));
  }
  ++write_beats_committed_;
  return finish_beat(*cmd, beat_index, cycle);
}

}  // namespace smcsim
