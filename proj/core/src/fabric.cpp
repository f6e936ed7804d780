#include "smcsim/fabric.hpp"

namespace smcsim {

FabricState::FabricState(const TopologyConfig& topo, const TimingConfig& timing)
    : masters_(topo.masters),
      clusters_(topo.clusters),
      arrays_(topo.arrays_per_cluster),
      buffer_limit_(timing.split_buffer_beats) {
  // Distribute the configured depth over the three legs of each path. The
  // exact split is internal; only the sum is architectural.
  const uint32_t r = timing.request_path_stages;
  d_dispatch_ = r / 3;
  d_mid_ = (r - d_dispatch_) / 2;
  d_ingress_ = r - d_mid_ - d_dispatch_;
  const uint32_t p = timing.response_path_stages;
  e_delivery_ = p / 3;
  e_mid_ = (p - e_delivery_) / 2;
  e_egress_ = p - e_mid_ - e_delivery_;

  request_.resize(masters_);
  response_.resize(masters_);
  occupancy_.assign(masters_, 0);
  for (uint32_t m = 0; m < masters_; ++m) {
    request_[m].l1.resize(clusters_);
    request_[m].l2.resize(size_t(clusters_) * arrays_);
    request_[m].dispatch.resize(size_t(clusters_) * arrays_);
    response_[m].array_in.resize(size_t(clusters_) * arrays_);
    response_[m].cluster_in.resize(clusters_);
    response_[m].array_ptr.assign(clusters_, 0);
  }
}

std::deque<FabricState::TimedBeat>& FabricState::l1_q(uint32_t m, uint32_t c) {
  return request_[m].l1[c];
}
std::deque<FabricState::TimedBeat>& FabricState::l2_q(uint32_t m, uint32_t c,
                                                      uint32_t a) {
  return request_[m].l2[size_t(c) * arrays_ + a];
}
std::deque<FabricState::TimedBeat>& FabricState::dispatch_q(uint32_t m,
                                                            uint32_t c,
                                                            uint32_t a) {
  return request_[m].dispatch[size_t(c) * arrays_ + a];
}

void FabricState::log_move(uint64_t cycle, const Beat& beat, const char* what) {
  if (trace_ == nullptr) return;
  *trace_ << "C" << cycle << " m" << beat.master << " " << to_string(beat.op)
          << beat.cmd_id << "." << beat.beat_index << " " << what << " cl"
          << beat.location.cluster << " ar" << beat.location.array << " bk"
          << beat.location.bank << "." << beat.location.subbank << "\n";
}

uint32_t FabricState::inject_beats(uint32_t master, std::span<const Beat> beats,
                                   uint64_t cycle) {
  uint32_t accepted = 0;
  MasterRequest& req = request_[master];
  for (const Beat& beat : beats) {
    if (occupancy_[master] >= buffer_limit_) break;
    ++occupancy_[master];
    if (occupancy_[master] > peak_occupancy_) {
      peak_occupancy_ = occupancy_[master];
    }
    ++request_in_flight_;
    req.l1[beat.location.cluster].push_back({beat, cycle + d_ingress_});
    log_move(cycle, beat, "inject");
    ++accepted;
  }
  return accepted;
}

void FabricState::tick_request(uint64_t cycle, MemoryGate& gate) {
  for (uint32_t m = 0; m < masters_; ++m) {
    MasterRequest& req = request_[m];
    // Second split level: one beat per (cluster, array) output per cycle,
    // gated by sub-bank queue reservations.
    for (uint32_t c = 0; c < clusters_; ++c) {
      for (uint32_t a = 0; a < arrays_; ++a) {
        std::deque<TimedBeat>& q = req.l2[size_t(c) * arrays_ + a];
        if (q.empty() || q.front().ready > cycle) continue;
        if (!gate.try_reserve(q.front().beat.location, m)) continue;
        TimedBeat tb = q.front();
        q.pop_front();
        tb.ready = cycle + d_dispatch_;
        log_move(cycle, tb.beat, "dispatch");
        req.dispatch[size_t(c) * arrays_ + a].push_back(tb);
      }
    }
    // First split level: one beat per cluster output per cycle.
    for (uint32_t c = 0; c < clusters_; ++c) {
      std::deque<TimedBeat>& q = req.l1[c];
      if (q.empty() || q.front().ready > cycle) continue;
      TimedBeat tb = q.front();
      q.pop_front();
      tb.ready = cycle + d_mid_;
      log_move(cycle, tb.beat, "split");
      req.l2[size_t(c) * arrays_ + tb.beat.location.array].push_back(tb);
    }
  }
}

void FabricState::drain_request_arrivals(
    uint64_t cycle, const std::function<void(Beat&&)>& sink) {
  for (uint32_t m = 0; m < masters_; ++m) {
    MasterRequest& req = request_[m];
    for (auto& q : req.dispatch) {
      while (!q.empty() && q.front().ready <= cycle) {
        Beat beat = std::move(q.front().beat);
        q.pop_front();
        --occupancy_[m];
        --request_in_flight_;
        log_move(cycle, beat, "arrive");
        sink(std::move(beat));
      }
    }
  }
}

void FabricState::push_return(const Beat& beat, uint64_t completion_cycle) {
  MasterResponse& resp = response_[beat.master];
  ReturnEntry entry;
  entry.cmd_id = beat.cmd_id;
  entry.beat_index = beat.beat_index;
  entry.ready = completion_cycle + e_egress_;
  resp.array_in[size_t(beat.location.cluster) * arrays_ + beat.location.array]
      .push_back(entry);
  ++response_in_flight_;
  log_move(completion_cycle, beat, "return");
}

void FabricState::push_commit_notice(uint32_t master, uint64_t cmd_id,
                                     uint16_t beat_index,
                                     uint64_t completion_cycle) {
  NoticeEntry n;
  n.cmd_id = cmd_id;
  n.beat_index = beat_index;
  // Fixed-depth channel, no arbitration: commit notices carry no data beats.
  n.due = completion_cycle + e_egress_ + e_mid_ + e_delivery_;
  response_[master].notices.push_back(n);
  ++notices_in_flight_;
}

void FabricState::tick_response(
    uint64_t cycle,
    const std::function<void(uint32_t, const ReadReturn&)>& deliver,
    const std::function<void(uint32_t, uint64_t, uint16_t)>& deliver_commit) {
  for (uint32_t m = 0; m < masters_; ++m) {
    MasterResponse& resp = response_[m];
    // Due port deliveries first: read data, then commit notices.
    while (!resp.delivery.empty() && resp.delivery.front().ready <= cycle) {
      const ReturnEntry e = resp.delivery.front();
      resp.delivery.pop_front();
      --response_in_flight_;
      ReadReturn ret;
      ret.master = m;
      ret.cmd_id = e.cmd_id;
      ret.beat_index = e.beat_index;
      deliver(m, ret);
    }
    while (!resp.notices.empty() && resp.notices.front().due <= cycle) {
      const NoticeEntry n = resp.notices.front();
      resp.notices.pop_front();
      --notices_in_flight_;
      deliver_commit(m, n.cmd_id, n.beat_index);
    }
    // Port-level merge: one grant per cycle, round-robin over clusters.
    for (uint32_t step = 0; step < clusters_; ++step) {
      const uint32_t c = (resp.cluster_ptr + step) % clusters_;
      std::deque<ReturnEntry>& q = resp.cluster_in[c];
      if (q.empty() || q.front().ready > cycle) continue;
      ReturnEntry e = q.front();
      q.pop_front();
      e.ready = cycle + e_delivery_;
      resp.delivery.push_back(e);
      resp.cluster_ptr = (c + 1) % clusters_;
      break;
    }
    // Cluster-level merges: one grant per cluster per cycle, round-robin
    // over that cluster's arrays.
    for (uint32_t c = 0; c < clusters_; ++c) {
      uint32_t& ptr = resp.array_ptr[c];
      for (uint32_t step = 0; step < arrays_; ++step) {
        const uint32_t a = (ptr + step) % arrays_;
        std::deque<ReturnEntry>& q =
            resp.array_in[size_t(c) * arrays_ + a];
        if (q.empty() || q.front().ready > cycle) continue;
        ReturnEntry e = q.front();
        q.pop_front();
        e.ready = cycle + e_mid_;
        resp.cluster_in[c].push_back(e);
        ptr = (a + 1) % arrays_;
        break;
      }
    }
  }
}

}  // namespace smcsim
