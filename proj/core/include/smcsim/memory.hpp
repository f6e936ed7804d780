#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "smcsim/addressing.hpp"
#include "smcsim/config.hpp"
#include "smcsim/fabric.hpp"
#include "smcsim/protocol.hpp"

namespace smcsim {

/// Observer for committed write data and returned read data. Invoked in
/// service order; must not mutate simulator state.
struct MemoryObserver {
  std::function<void(const Beat&, const uint8_t* data, size_t size,
                     uint64_t cycle)>
      on_write_commit;
  std::function<void(const Beat&, const uint8_t* data, size_t size,
                     uint64_t cycle)>
      on_read_data;
};

/// All SRAM arrays with their dispatch queues, sub-bank arbiters and
/// backing byte store.
///
/// Every sub-bank owns one queue per master (fixed depth, backpressured via
/// reservations) and an independent round-robin arbiter over those queues.
/// The arbiter admits at most one beat per memory clock; an admitted beat
/// completes a fixed access latency later, at which point reads hand their
/// data to the response path and writes commit to the byte store. Admission
/// is evaluated every fabric cycle with a busy-until window so that an
/// uncontended beat always completes exactly
/// memory_access_mem_cycles * fabric_clock_per_mem_clock fabric cycles
/// after arrival, independent of arrival parity.
class MemoryState final : public MemoryGate {
 public:
  /// Beats one master may hold queued-or-reserved at a single sub-bank.
  static constexpr uint32_t kQueueDepth = 4;

  MemoryState(const TopologyConfig& topo, const TimingConfig& timing,
              const InterleaveScheme& scheme);

  /// Reservation check used by the fabric before launching a dispatch leg.
  bool try_reserve(const Location& loc, uint32_t master) override;

  /// Places an arriving beat in its sub-bank queue, consuming the matching
  /// reservation. Throws IntegrityError if the location was never reserved
  /// or the queue would overflow.
  void dispatch(Beat&& beat, uint64_t cycle);

  /// One fabric cycle: retire due accesses, then arbitrate. Completed reads
  /// go to on_read_complete (payload already captured for the observer);
  /// completed writes commit to the store and go to on_write_complete.
  void tick(uint64_t cycle,
            const std::function<void(const Beat&, uint64_t)>& on_read_complete,
            const std::function<void(const Beat&, uint64_t)>& on_write_complete);

  void set_observer(MemoryObserver observer) { observer_ = std::move(observer); }

  /// Beats queued or in access anywhere in the memory. Reserved-but-not-yet
  /// arrived beats are still in the fabric's dispatch leg and counted there.
  uint64_t beats_pending() const { return pending_; }
  bool idle() const { return pending_ == 0; }

  /// Fabric cycles during which some sub-bank held beats from more than one
  /// master, summed over sub-banks.
  uint64_t conflict_cycles() const { return conflict_cycles_; }

  /// Reads back one beat of the byte store (zero if never written).
  void peek(uint64_t address, uint8_t* out, size_t size) const;

  /// Writes the full linear memory image, little-endian, offset = address.
  void dump_image(std::ostream& out) const;

 private:
  struct MasterQueue {
    std::vector<Beat> slots;
    uint32_t head = 0;
    uint32_t count = 0;
    uint32_t reserved = 0;
  };
  struct SubBank {
    std::vector<MasterQueue> queues;
    std::unique_ptr<uint8_t[]> storage;  // rows * beat_bytes, lazily allocated
    uint64_t busy_until = 0;
    uint32_t rr_ptr = 0;
    uint32_t queued = 0;          // beats across all master queues
    uint32_t active_masters = 0;  // masters with a non-empty queue
  };
  struct PendingAccess {
    Beat beat;
    uint64_t due = 0;
  };
  struct Array {
    // deque moves lack noexcept in libstdc++; force it so vector growth
    // relocates by move instead of requiring a copy.
    Array() = default;
    Array(Array&&) noexcept = default;
    Array& operator=(Array&&) noexcept = default;

    std::vector<SubBank> subbanks;
    std::vector<uint64_t> nonempty_mask;  // bit per sub-bank with queued beats
    std::deque<PendingAccess> in_access;  // due cycles are non-decreasing
  };

  SubBank& subbank_at(const Location& loc);
  Array& array_at(const Location& loc);
  uint32_t subbank_slot(const Location& loc) const {
    return loc.bank * subbanks_per_bank_ + loc.subbank;
  }
  uint8_t* storage_for(SubBank& sb);
  void commit_write(SubBank& sb, const Beat& beat, uint64_t cycle);
  void retire_due(Array& array, uint64_t cycle,
                  const std::function<void(const Beat&, uint64_t)>& on_read,
                  const std::function<void(const Beat&, uint64_t)>& on_write);
  void arbitrate(Array& array, uint64_t cycle);

  uint32_t masters_;
  uint32_t clusters_;
  uint32_t arrays_per_cluster_;
  uint32_t banks_per_array_;
  uint32_t subbanks_per_bank_;
  uint64_t beat_bytes_;
  uint64_t rows_;
  uint64_t total_bytes_;
  AddressGeometry geom_;
  InterleaveScheme scheme_;
  uint32_t grant_interval_;  // fabric cycles between grants (one memory clock)
  uint32_t access_cycles_;   // fabric cycles from grant to completion
  std::vector<Array> arrays_;
  uint64_t pending_ = 0;
  uint64_t conflict_cycles_ = 0;
  MemoryObserver observer_;
  std::vector<uint8_t> scratch_;  // observer payload staging
};

}  // namespace smcsim
