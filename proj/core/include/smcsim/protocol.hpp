#pragma once

#include <cstdint>
#include <vector>

#include "smcsim/addressing.hpp"
#include "smcsim/config.hpp"

namespace smcsim {

enum class Op : uint8_t { read, write };

inline const char* to_string(Op op) { return op == Op::read ? "R" : "W"; }

/// One burst command as issued at a master port.
struct Command {
  uint32_t master = 0;
  Op op = Op::read;
  uint64_t base = 0;
  uint32_t beats = 1;
  uint64_t cmd_id = 0;       ///< strictly increasing per master
  uint64_t issue_cycle = 0;  ///< stamped on acceptance
  uint64_t payload_seed = 0; ///< writes: deterministic data source
};

/// One beat in flight. Write beats materialize their payload bytes from
/// payload_seed at commit time; read beats carry no data on the request path.
struct Beat {
  uint64_t address = 0;
  uint64_t payload_seed = 0;
  uint64_t cmd_id = 0;
  uint32_t master = 0;
  uint16_t beat_index = 0;
  Op op = Op::read;
  Location location;
};

/// A read data beat arriving back at a port.
struct ReadReturn {
  uint32_t master = 0;
  uint64_t cmd_id = 0;
  uint16_t beat_index = 0;
};

enum class AcceptResult : uint8_t {
  accepted,
  stalled_credit,    ///< no outstanding slot free in this direction
  stalled_ordering,  ///< overlaps an in-flight command of the same master
};

/// Per-port protocol state: outstanding-credit tracking, same-address
/// ordering, and per-beat reassembly of read data and write commits.
///
/// Ordering rule: a command stalls while it overlaps the footprint of any
/// in-flight earlier command of the same master when either side writes.
/// Read-read overlap proceeds; reordering among pure reads is unobservable.
class PortState {
 public:
  PortState() = default;
  PortState(uint32_t master, const TimingConfig& timing, uint64_t beat_bytes);

  /// Validates the command shape and admits it when a credit is free and no
  /// ordering hazard exists. Throws ProtocolError on malformed commands.
  AcceptResult try_accept(const Command& cmd, uint64_t cycle);

  /// Records one read data beat. Returns true when the command is complete
  /// (retired this call). Throws IntegrityError on unmatched or duplicate
  /// beats.
  bool record_return(const ReadReturn& ret, uint64_t cycle);

  /// Records one committed write beat. Returns true when every beat of the
  /// write has committed (the ack point; the command retires this call).
  bool record_commit(uint64_t cmd_id, uint16_t beat_index, uint64_t cycle);

  /// Latency of the most recently retired command (issue to last beat).
  uint64_t last_latency() const { return last_latency_; }

  uint32_t outstanding_reads() const { return outstanding_reads_; }
  uint32_t outstanding_writes() const { return outstanding_writes_; }
  uint32_t in_flight() const {
    return outstanding_reads_ + outstanding_writes_;
  }

  // Conservation counters, whole run.
  uint64_t accepted_reads() const { return accepted_reads_; }
  uint64_t accepted_writes() const { return accepted_writes_; }
  uint64_t retired_reads() const { return retired_reads_; }
  uint64_t retired_writes() const { return retired_writes_; }
  uint64_t read_beats_returned() const { return read_beats_returned_; }
  uint64_t write_beats_committed() const { return write_beats_committed_; }

 private:
  struct InFlight {
    uint64_t cmd_id = 0;
    uint64_t base = 0;
    uint64_t issue_cycle = 0;
    uint32_t beats = 0;
    uint32_t done_mask = 0;  // bit per beat, reads and writes alike
    Op op = Op::read;
  };

  InFlight* find(uint64_t cmd_id);
  bool finish_beat(InFlight& cmd, uint16_t beat_index, uint64_t cycle);

  uint32_t master_ = 0;
  uint32_t credit_limit_ = 8;
  uint64_t beat_bytes_ = 32;
  uint64_t next_expected_cmd_id_ = 0;
  uint32_t outstanding_reads_ = 0;
  uint32_t outstanding_writes_ = 0;
  uint64_t last_latency_ = 0;
  std::vector<InFlight> in_flight_;

  uint64_t accepted_reads_ = 0;
  uint64_t accepted_writes_ = 0;
  uint64_t retired_reads_ = 0;
  uint64_t retired_writes_ = 0;
  uint64_t read_beats_returned_ = 0;
  uint64_t write_beats_committed_ = 0;
};

}  // namespace smcsim
