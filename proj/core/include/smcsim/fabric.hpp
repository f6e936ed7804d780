#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "smcsim/config.hpp"
#include "smcsim/protocol.hpp"

namespace smcsim {

/// Backpressure gate the fabric consults before launching a beat on the
/// final dispatch leg toward a sub-bank queue. A successful reservation is
/// consumed by the matching dispatch a fixed number of cycles later.
class MemoryGate {
 public:
  virtual ~MemoryGate() = default;
  virtual bool try_reserve(const Location& loc, uint32_t master) = 0;
};

/// The request split structure and response merge structure, all masters.
///
/// Request side, per master: an ingress pipeline into per-cluster queues
/// (first split), per-cluster pipelines into per-array queues (second
/// split), and a dispatch pipeline to the sub-bank queues. Each split
/// output forwards at most one beat per cycle; beats to different outputs
/// never block each other once enqueued. A shared credit pool of
/// split_buffer_beats spans the whole split path of one master: credits are
/// taken at injection and released when a beat reaches its sub-bank queue.
///
/// Response side, mirrored per master: per-(cluster, array) return queues
/// merge four-to-one per cluster, then four-to-one to the port, each merge
/// node granting one beat per cycle round-robin. Write-commit notices ride
/// a thin dedicated channel with the same pipeline depth but no data-beat
/// arbitration, mirroring a separate write-response channel.
///
/// An uncontended beat spends exactly request_path_stages cycles from
/// injection to sub-bank arrival and exactly response_path_stages cycles
/// from memory completion to port delivery.
class FabricState {
 public:
  FabricState(const TopologyConfig& topo, const TimingConfig& timing);

  // --- request side -------------------------------------------------------

  /// Accepts beats into the split path while the master's credit pool has
  /// room; returns how many were accepted. Beats must be offered in command
  /// order; rejected beats are the caller's to retry next cycle.
  uint32_t inject_beats(uint32_t master, std::span<const Beat> beats,
                        uint64_t cycle);

  /// Advances both split levels one cycle and launches dispatch legs for
  /// beats the memory gate accepts.
  void tick_request(uint64_t cycle, MemoryGate& gate);

  /// Hands over every dispatch leg arriving this cycle, releasing its
  /// credit. The sink enqueues the beat at its sub-bank.
  void drain_request_arrivals(uint64_t cycle,
                              const std::function<void(Beat&&)>& sink);

  // --- response side ------------------------------------------------------

  /// Enqueues a completed read beat into its master's merge tree.
  void push_return(const Beat& beat, uint64_t completion_cycle);

  /// Schedules a write-commit notice for delivery at the port.
  void push_commit_notice(uint32_t master, uint64_t cmd_id,
                          uint16_t beat_index, uint64_t completion_cycle);

  /// Delivers due returns and commit notices, then advances both merge
  /// levels one cycle. At most one data beat reaches each port per cycle.
  void tick_response(
      uint64_t cycle,
      const std::function<void(uint32_t master, const ReadReturn&)>& deliver,
      const std::function<void(uint32_t master, uint64_t cmd_id,
                               uint16_t beat_index)>& deliver_commit);

  // --- accounting ---------------------------------------------------------

  uint32_t split_occupancy(uint32_t master) const {
    return occupancy_[master];
  }
  uint32_t peak_split_occupancy() const { return peak_occupancy_; }
  uint64_t request_beats_in_flight() const { return request_in_flight_; }
  uint64_t response_beats_in_flight() const { return response_in_flight_; }
  uint64_t notices_in_flight() const { return notices_in_flight_; }
  bool idle() const {
    return request_in_flight_ == 0 && response_in_flight_ == 0 &&
           notices_in_flight_ == 0;
  }

  /// Streams one line per beat movement when set (debug aid).
  void set_trace(std::ostream* trace) { trace_ = trace; }

 private:
  struct TimedBeat {
    Beat beat;
    uint64_t ready = 0;
  };
  struct ReturnEntry {
    uint64_t cmd_id = 0;
    uint64_t ready = 0;
    uint16_t beat_index = 0;
  };
  struct NoticeEntry {
    uint64_t cmd_id = 0;
    uint64_t due = 0;
    uint16_t beat_index = 0;
  };
  struct MasterRequest {
    std::vector<std::deque<TimedBeat>> l1;        // [cluster]
    std::vector<std::deque<TimedBeat>> l2;        // [cluster*arrays + array]
    std::vector<std::deque<TimedBeat>> dispatch;  // same indexing, due legs
  };
  struct MasterResponse {
    std::vector<std::deque<ReturnEntry>> array_in;    // [cluster*arrays + array]
    std::vector<std::deque<ReturnEntry>> cluster_in;  // [cluster]
    std::deque<ReturnEntry> delivery;                 // due at the port
    std::deque<NoticeEntry> notices;
    std::vector<uint32_t> array_ptr;                  // round-robin per cluster
    uint32_t cluster_ptr = 0;
  };

  std::deque<TimedBeat>& l1_q(uint32_t m, uint32_t c);
  std::deque<TimedBeat>& l2_q(uint32_t m, uint32_t c, uint32_t a);
  std::deque<TimedBeat>& dispatch_q(uint32_t m, uint32_t c, uint32_t a);
  void log_move(uint64_t cycle, const Beat& beat, const char* what);

  uint32_t masters_;
  uint32_t clusters_;
  uint32_t arrays_;
  uint32_t buffer_limit_;
  // Segment depths: the request path splits into ingress/mid/dispatch legs
  // and the response path into egress/mid/delivery legs; each leg is at
  // least one cycle and the legs sum to the configured stage counts.
  uint32_t d_ingress_, d_mid_, d_dispatch_;
  uint32_t e_egress_, e_mid_, e_delivery_;

  std::vector<MasterRequest> request_;
  std::vector<MasterResponse> response_;
  std::vector<uint32_t> occupancy_;
  uint32_t peak_occupancy_ = 0;
  uint64_t request_in_flight_ = 0;
  uint64_t response_in_flight_ = 0;
  uint64_t notices_in_flight_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace smcsim
