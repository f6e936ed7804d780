#include "smcsim/memory.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "smcsim/errors.hpp"
#include "smcsim/rng.hpp"

namespace smcsim {
namespace {

// Expands a beat's payload seed into its bytes. Chunked splitmix keeps the
// expansion cheap and bit-stable across platforms.
void expand_payload(uint64_t seed, uint8_t* out, size_t size) {
  size_t chunk = 0;
  while (size >= 8) {
    Rng rng(seed + chunk);
    const uint64_t v = rng.next_u64();
    std::memcpy(out, &v, 8);
    out += 8;
    size -= 8;
    ++chunk;
  }
  if (size > 0) {
    Rng rng(seed + chunk);
    const uint64_t v = rng.next_u64();
    std::memcpy(out, &v, size);
  }
}

}  // namespace

MemoryState::MemoryState(const TopologyConfig& topo, const TimingConfig& timing,
                         const InterleaveScheme& scheme)
    : masters_(topo.masters),
      clusters_(topo.clusters),
      arrays_per_cluster_(topo.arrays_per_cluster),
      banks_per_array_(topo.banks_per_array),
      subbanks_per_bank_(topo.subbanks_per_bank),
      beat_bytes_(topo.beat_bytes),
      rows_(topo.rows_per_subbank()),
      total_bytes_(topo.total_bytes),
      geom_(derive_geometry(topo)),
      scheme_(scheme),
      grant_interval_(timing.fabric_clock_per_mem_clock),
      access_cycles_(timing.memory_access_fabric_cycles()) {
  const uint32_t slots = banks_per_array_ * subbanks_per_bank_;
  arrays_.resize(size_t(clusters_) * arrays_per_cluster_);
  for (Array& array : arrays_) {
    array.subbanks.resize(slots);
    array.nonempty_mask.assign((slots + 63) / 64, 0);
  }
  scratch_.resize(beat_bytes_);
}

MemoryState::Array& MemoryState::array_at(const Location& loc) {
  return arrays_[size_t(loc.cluster) * arrays_per_cluster_ + loc.array];
}

MemoryState::SubBank& MemoryState::subbank_at(const Location& loc) {
  return array_at(loc).subbanks[subbank_slot(loc)];
}

bool MemoryState::try_reserve(const Location& loc, uint32_t master) {
  SubBank& sb = subbank_at(loc);
  if (sb.queues.empty()) sb.queues.resize(masters_);
  MasterQueue& q = sb.queues[master];
  if (q.count + q.reserved >= kQueueDepth) return false;
  ++q.reserved;
  return true;
}

void MemoryState::dispatch(Beat&& beat, uint64_t cycle) {
  (void)cycle;
  const Location loc = beat.location;
  SubBank& sb = subbank_at(loc);
  if (sb.queues.empty() || sb.queues[beat.master].reserved == 0) {
    throw IntegrityError("dispatch without reservation at cluster " +
                         std::to_string(loc.cluster) + " array " +
                         std::to_string(loc.array));
  }
  MasterQueue& q = sb.queues[beat.master];
  if (q.slots.empty()) q.slots.resize(kQueueDepth);
  if (q.count >= kQueueDepth) {
    throw IntegrityError("sub-bank queue overflow for master " +
                         std::to_string(beat.master));
  }
  --q.reserved;
  if (q.count == 0) ++sb.active_masters;
  q.slots[(q.head + q.count) % kQueueDepth] = std::move(beat);
  ++q.count;
  ++sb.queued;
  ++pending_;
  const uint32_t slot = subbank_slot(loc);
  array_at(loc).nonempty_mask[slot / 64] |= 1ull << (slot % 64);
}

uint8_t* MemoryState::storage_for(SubBank& sb) {
  if (!sb.storage) {
    const size_t bytes = size_t(rows_) * beat_bytes_;
    sb.storage = std::make_unique<uint8_t[]>(bytes);
    std::memset(sb.storage.get(), 0, bytes);
  }
  return sb.storage.get();
}

void MemoryState::commit_write(SubBank& sb, const Beat& beat, uint64_t cycle) {
  uint8_t* row = storage_for(sb) + beat.location.row * beat_bytes_;
  expand_payload(beat.payload_seed, row, beat_bytes_);
  if (observer_.on_write_commit) {
    observer_.on_write_commit(beat, row, beat_bytes_, cycle);
  }
}

void MemoryState::retire_due(
    Array& array, uint64_t cycle,
    const std::function<void(const Beat&, uint64_t)>& on_read,
    const std::function<void(const Beat&, uint64_t)>& on_write) {
  while (!array.in_access.empty() && array.in_access.front().due <= cycle) {
    Beat beat = std::move(array.in_access.front().beat);
    array.in_access.pop_front();
    --pending_;
    SubBank& sb = array.subbanks[subbank_slot(beat.location)];
    if (beat.op == Op::write) {
      commit_write(sb, beat, cycle);
      on_write(beat, cycle);
    } else {
      if (observer_.on_read_data) {
        const uint8_t* row = storage_for(sb) + beat.location.row * beat_bytes_;
        std::memcpy(scratch_.data(), row, beat_bytes_);
        observer_.on_read_data(beat, scratch_.data(), beat_bytes_, cycle);
      }
      on_read(beat, cycle);
    }
  }
}

void MemoryState::arbitrate(Array& array, uint64_t cycle) {
  for (size_t word = 0; word < array.nonempty_mask.size(); ++word) {
    uint64_t mask = array.nonempty_mask[word];
    while (mask != 0) {
      const uint32_t bit = static_cast<uint32_t>(std::countr_zero(mask));
      mask &= mask - 1;
      const uint32_t slot = static_cast<uint32_t>(word * 64 + bit);
      SubBank& sb = array.subbanks[slot];
      if (sb.active_masters > 1) ++conflict_cycles_;
      if (sb.busy_until > cycle) continue;
      // Round-robin over master queues, lowest eligible index from the
      // pointer; the pointer moves past the granted master.
      for (uint32_t step = 0; step < masters_; ++step) {
        const uint32_t m = (sb.rr_ptr + step) % masters_;
        MasterQueue& q = sb.queues[m];
        if (q.count == 0) continue;
        Beat beat = std::move(q.slots[q.head]);
        q.head = (q.head + 1) % kQueueDepth;
        --q.count;
        --sb.queued;
        if (q.count == 0) --sb.active_masters;
        if (sb.queued == 0) {
          array.nonempty_mask[word] &= ~(1ull << bit);
        }
        sb.rr_ptr = (m + 1) % masters_;
        sb.busy_until = cycle + grant_interval_;
        array.in_access.push_back({std::move(beat), cycle + access_cycles_});
        break;
      }
    }
  }
}

void MemoryState::tick(
    uint64_t cycle,
    const std::function<void(const Beat&, uint64_t)>& on_read_complete,
    const std::function<void(const Beat&, uint64_t)>& on_write_complete) {
  for (Array& array : arrays_) {
    retire_due(array, cycle, on_read_complete, on_write_complete);
    arbitrate(array, cycle);
  }
}

void MemoryState::peek(uint64_t address, uint8_t* out, size_t size) const {
  const Location loc = decompose(address, geom_, scheme_);
  if (loc.beat_offset + size > beat_bytes_) {
    throw std::out_of_range("peek crosses a beat boundary");
  }
  const Array& array =
      arrays_[size_t(loc.cluster) * arrays_per_cluster_ + loc.array];
  const SubBank& sb =
      array.subbanks[loc.bank * subbanks_per_bank_ + loc.subbank];
  if (!sb.storage) {
    std::memset(out, 0, size);
    return;
  }
  std::memcpy(out, sb.storage.get() + loc.row * beat_bytes_ + loc.beat_offset,
              size);
}

void MemoryState::dump_image(std::ostream& out) const {
  std::vector<uint8_t> beat(beat_bytes_);
  for (uint64_t address = 0; address < total_bytes_; address += beat_bytes_) {
    peek(address, beat.data(), beat.size());
    out.write(reinterpret_cast<const char*>(beat.data()),
              static_cast<std::streamsize>(beat.size()));
  }
}

}  // namespace smcsim
