#pragma once

#include <cstdint>
#include <vector>

#include "smcsim/config.hpp"

namespace smcsim {

/// Physical placement of one byte address: which cluster, which SRAM array
/// inside it, which bank, which sub-bank slice, which row, and the byte
/// offset inside the row's beat.
struct Location {
  uint32_t cluster = 0;
  uint32_t array = 0;
  uint32_t bank = 0;
  uint32_t subbank = 0;
  uint64_t row = 0;
  uint32_t beat_offset = 0;

  bool operator==(const Location&) const = default;
};

/// XOR-folds the scheme's hash-source bits of an address down to the array
/// field width. Zero when the array selector is absent or the scheme is
/// identity; constant across every address of one burst by construction.
uint64_t array_hash(uint64_t address, const AddressGeometry& geom,
                    const InterleaveScheme& scheme);

/// Maps a byte address to its location. Throws std::out_of_range when the
/// address lies outside the configured capacity.
Location decompose(uint64_t address, const AddressGeometry& geom,
                   const InterleaveScheme& scheme);

/// Inverse of decompose: compose(decompose(a)) == a for every in-range
/// address under both schemes.
uint64_t compose(const Location& loc, const AddressGeometry& geom,
                 const InterleaveScheme& scheme);

/// One beat of an expanded burst.
struct LocatedBeat {
  uint32_t beat_index = 0;
  uint64_t address = 0;
  Location location;
};

/// Expands a burst into per-beat addresses and locations. The base must be
/// beat-aligned, the length one of {1, 4, 8, 16}, and the footprint must not
/// cross the end of the address space; violations throw ProtocolError.
/// Consecutive beats land on consecutive clusters, so a 4-beat burst touches
/// every cluster once and a 16-beat burst touches every (cluster, array)
/// pair once in the default topology.
std::vector<LocatedBeat> expand_burst(uint64_t base, uint32_t beats,
                                      const AddressGeometry& geom,
                                      const InterleaveScheme& scheme,
                                      uint64_t total_bytes);

}  // namespace smcsim
