#include "smcsim/addressing.hpp"

#include <stdexcept>
#include <string>

#include "smcsim/errors.hpp"

namespace smcsim {

uint64_t array_hash(uint64_t address, const AddressGeometry& geom,
                    const InterleaveScheme& scheme) {
  if (scheme.kind != SchemeKind::xor_fold || geom.array.width == 0) return 0;
  uint64_t v = scheme.hash_bits(geom).extract(address);
  const uint64_t mask = (1ull << geom.array.width) - 1;
  uint64_t fold = 0;
  while (v != 0) {
    fold ^= v & mask;
    v >>= geom.array.width;
  }
  return fold;
}

Location decompose(uint64_t address, const AddressGeometry& geom,
                   const InterleaveScheme& scheme) {
  if (address >> geom.address_bits) {
    throw std::out_of_range("address " + std::to_string(address) +
                            " outside the configured capacity");
  }
  Location loc;
  loc.beat_offset = static_cast<uint32_t>(geom.beat_offset.extract(address));
  loc.cluster = static_cast<uint32_t>(geom.cluster.extract(address));
  loc.array = static_cast<uint32_t>(geom.array.extract(address) ^
                                    array_hash(address, geom, scheme));
  loc.bank = static_cast<uint32_t>(geom.bank.extract(address));
  loc.row = geom.row.extract(address);
  loc.subbank = static_cast<uint32_t>(geom.subbank.extract(address));
  return loc;
}

uint64_t compose(const Location& loc, const AddressGeometry& geom,
                 const InterleaveScheme& scheme) {
  // Rebuild everything except the array selector first; the hash depends
  // only on those bits, so it can then be unapplied.
  uint64_t address = geom.beat_offset.insert(loc.beat_offset) |
                     geom.cluster.insert(loc.cluster) |
                     geom.bank.insert(loc.bank) | geom.row.insert(loc.row) |
                     geom.subbank.insert(loc.subbank);
  const uint64_t raw_array = loc.array ^ array_hash(address, geom, scheme);
  address |= geom.array.insert(raw_array);
  if (address >> geom.address_bits) {
    throw std::out_of_range("location fields exceed the configured geometry");
  }
  return address;
}

std::vector<LocatedBeat> expand_burst(uint64_t base, uint32_t beats,
                                      const AddressGeometry& geom,
                                      const InterleaveScheme& scheme,
                                      uint64_t total_bytes) {
  if (beats != 1 && beats != 4 && beats != 8 && beats != 16) {
    throw ProtocolError("burst length " + std::to_string(beats) +
                        " not in {1,4,8,16}");
  }
  const uint64_t beat_bytes = 1ull << geom.beat_offset.width;
  if (base % beat_bytes != 0) {
    throw ProtocolError("burst base " + std::to_string(base) +
                        " not beat-aligned");
  }
  const uint64_t span = uint64_t(beats) * beat_bytes;
  if (base >= total_bytes || total_bytes - base < span) {
    throw ProtocolError("burst footprint crosses the end of the address space");
  }
  std::vector<LocatedBeat> out;
  out.reserve(beats);
  for (uint32_t i = 0; i < beats; ++i) {
    LocatedBeat lb;
    lb.beat_index = i;
    lb.address = base + uint64_t(i) * beat_bytes;
    lb.location = decompose(lb.address, geom, scheme);
    out.push_back(lb);
  }
  return out;
}

}  // namespace smcsim
