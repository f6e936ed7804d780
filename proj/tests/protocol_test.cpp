#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "smcsim/errors.hpp"
#include "smcsim/protocol.hpp"

using namespace smcsim;

namespace {

Command make_cmd(uint64_t cmd_id, Op op, uint64_t base, uint32_t beats,
                 uint64_t cycle) {
  Command cmd;
  cmd.master = 0;
  cmd.op = op;
  cmd.base = base;
  cmd.beats = beats;
  cmd.cmd_id = cmd_id;
  cmd.issue_cycle = cycle;
  return cmd;
}

PortState make_port() { return PortState(0, TimingConfig{}, 32); }

}  // namespace

TEST_CASE("credits are tracked per direction") {
  PortState port = make_port();
  uint64_t id = 0;
  // Disjoint 16-beat footprints so only credits can stall.
  for (int i = 0; i < 8; ++i) {
    CHECK(port.try_accept(make_cmd(id++, Op::read, i * 512u, 16, 0), 0) ==
          AcceptResult::accepted);
  }
  CHECK(port.outstanding_reads() == 8);
  CHECK(port.try_accept(make_cmd(id, Op::read, 0x10000, 16, 0), 0) ==
        AcceptResult::stalled_credit);
  // The write direction still has all its credits.
  for (int i = 0; i < 8; ++i) {
    CHECK(port.try_accept(make_cmd(id++, Op::write, 0x20000 + i * 512u, 16, 0),
                          0) == AcceptResult::accepted);
  }
  CHECK(port.outstanding_writes() == 8);
  CHECK(port.try_accept(make_cmd(id, Op::write, 0x30000, 16, 0), 0) ==
        AcceptResult::stalled_credit);
  CHECK(port.in_flight() == 16);
}

TEST_CASE("reads reassemble out of order and retire on the last beat") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::read, 0, 4, 10), 10) ==
          AcceptResult::accepted);
  ReadReturn ret;
  ret.master = 0;
  ret.cmd_id = 0;
  for (uint16_t ix : {2, 0, 3}) {
    ret.beat_index = ix;
    CHECK_FALSE(port.record_return(ret, 20));
  }
  ret.beat_index = 1;
  CHECK(port.record_return(ret, 42));
  CHECK(port.last_latency() == 32);  // 42 - issue cycle 10
  CHECK(port.outstanding_reads() == 0);
  CHECK(port.retired_reads() == 1);
  CHECK(port.read_beats_returned() == 4);
}

TEST_CASE("write commits ack through the same reassembly path") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::write, 0x1000, 4, 5), 5) ==
          AcceptResult::accepted);
  CHECK_FALSE(port.record_commit(0, 0, 30));
  CHECK_FALSE(port.record_commit(0, 1, 30));
  CHECK_FALSE(port.record_commit(0, 3, 31));
  CHECK(port.record_commit(0, 2, 40));
  CHECK(port.last_latency() == 35);
  CHECK(port.retired_writes() == 1);
  CHECK(port.write_beats_committed() == 4);
}

TEST_CASE("unknown and duplicate beats are integrity errors") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::read, 0, 4, 0), 0) ==
          AcceptResult::accepted);
  ReadReturn ret;
  ret.cmd_id = 7;  // never issued
  ret.beat_index = 0;
  CHECK_THROWS_AS(port.record_return(ret, 1), IntegrityError);
  ret.cmd_id = 0;
  CHECK_FALSE(port.record_return(ret, 1));
  CHECK_THROWS_AS(port.record_return(ret, 2), IntegrityError);  // duplicate
  ret.beat_index = 4;  // beyond the burst
  CHECK_THROWS_AS(port.record_return(ret, 3), IntegrityError);
}

TEST_CASE("mismatched channel and op is an integrity error") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::write, 0, 4, 0), 0) ==
          AcceptResult::accepted);
  ReadReturn ret;
  ret.cmd_id = 0;
  ret.beat_index = 0;
  // Read data for a write command, and a commit for a read command.
  CHECK_THROWS_AS(port.record_return(ret, 1), IntegrityError);
  REQUIRE(port.try_accept(make_cmd(1, Op::read, 0x1000, 4, 0), 0) ==
          AcceptResult::accepted);
  CHECK_THROWS_AS(port.record_commit(1, 0, 1), IntegrityError);
}

TEST_CASE("overlap ordering stalls when either side writes") {
  struct Case {
    Op first, second;
    bool stalls;
  };
  const Case cases[] = {
      {Op::write, Op::read, true},
      {Op::read, Op::write, true},
      {Op::write, Op::write, true},
      {Op::read, Op::read, false},
  };
  for (const Case& c : cases) {
    PortState port = make_port();
    REQUIRE(port.try_accept(make_cmd(0, c.first, 0x100, 4, 0), 0) ==
            AcceptResult::accepted);
    // Overlaps the tail beat of the first command's footprint.
    const AcceptResult got =
        port.try_accept(make_cmd(1, c.second, 0x160, 4, 1), 1);
    if (c.stalls) {
      CHECK(got == AcceptResult::stalled_ordering);
    } else {
      CHECK(got == AcceptResult::accepted);
    }
  }
}

TEST_CASE("disjoint footprints never stall on ordering") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::write, 0x100, 4, 0), 0) ==
          AcceptResult::accepted);
  // Adjacent but non-overlapping: [0x100, 0x180) then [0x180, 0x200).
  CHECK(port.try_accept(make_cmd(1, Op::write, 0x180, 4, 0), 0) ==
        AcceptResult::accepted);
}

TEST_CASE("a stalled command can retry after the blocker retires") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::write, 0x100, 1, 0), 0) ==
          AcceptResult::accepted);
  CHECK(port.try_accept(make_cmd(1, Op::read, 0x100, 1, 1), 1) ==
        AcceptResult::stalled_ordering);
  CHECK(port.record_commit(0, 0, 8));
  CHECK(port.try_accept(make_cmd(1, Op::read, 0x100, 1, 9), 9) ==
        AcceptResult::accepted);
}

TEST_CASE("command ids must increase per master") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::read, 0, 1, 0), 0) ==
          AcceptResult::accepted);
  CHECK_THROWS_AS(port.try_accept(make_cmd(0, Op::read, 0x1000, 1, 1), 1),
                  ProtocolError);
}

TEST_CASE("malformed command shapes are protocol errors") {
  PortState port = make_port();
  CHECK_THROWS_AS(port.try_accept(make_cmd(0, Op::read, 0x10, 4, 0), 0),
                  ProtocolError);  // base not beat aligned
  CHECK_THROWS_AS(port.try_accept(make_cmd(0, Op::read, 0, 5, 0), 0),
                  ProtocolError);  // burst length outside {1,4,8,16}
}

TEST_CASE("a rejected command does not consume its id or a credit") {
  PortState port = make_port();
  REQUIRE(port.try_accept(make_cmd(0, Op::write, 0x100, 1, 0), 0) ==
          AcceptResult::accepted);
  CHECK(port.try_accept(make_cmd(1, Op::write, 0x100, 1, 1), 1) ==
        AcceptResult::stalled_ordering);
  CHECK(port.in_flight() == 1);
  CHECK(port.accepted_writes() == 1);
  // The same id is still valid on retry; a later id is also fine.
  CHECK(port.record_commit(0, 0, 5));
  CHECK(port.try_accept(make_cmd(1, Op::write, 0x100, 1, 6), 6) ==
        AcceptResult::accepted);
}
