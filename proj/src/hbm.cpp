#include "memsim/hbm.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace memsim {

HbmChannel::HbmChannel(std::uint32_t index, const MemoryConfig& config, std::uint32_t line_size)
    : index_(index), config_(config), line_size_(line_size) {}

bool HbmChannel::try_enqueue(const MemRequest& req, Cycle now) {
  if (channel_index(req.address, line_size_, config_.num_channels) != index_)
    throw ProtocolError(ProtocolErrc::ChannelMismatch,
                        fmt::format("request {} for {:#x} routed to channel {}", req.id,
                                    req.address, index_));
  if (!can_accept()) {
    ++counters_.rejected;
    return false;
  }
  queue_.push_back({req, now});
  ++counters_.enqueued;
  counters_.peak_queue = std::max(counters_.peak_queue, queue_.size());
  return true;
}

std::vector<MemResponse> HbmChannel::tick(Cycle now) {
  std::uint32_t served = 0;
  while (served < config_.requests_per_channel_per_cycle && !queue_.empty()) {
    in_flight_.push_back({queue_.front().request, now + config_.channel_latency});
    queue_.pop_front();
    ++served;
  }
  counters_.serviced += served;
  if (served > 0) ++counters_.busy_cycles;

  std::vector<MemResponse> out;
  while (!in_flight_.empty() && in_flight_.front().ready_cycle <= now) {
    const auto& f = in_flight_.front();
    out.push_back({f.request.id, f.request.line_address, now});
    in_flight_.pop_front();
  }
  return out;
}

HbmDevice::HbmDevice(const MemoryConfig& config, std::uint32_t line_size) : line_size_(line_size) {
  channels_.reserve(config.num_channels);
  for (std::uint32_t c = 0; c < config.num_channels; ++c) channels_.emplace_back(c, config, line_size);
}

HbmChannel& HbmDevice::channel_for(Address address) {
  return channels_[channel_index(address, line_size_, num_channels())];
}

std::vector<MemResponse> HbmDevice::tick(Cycle now) {
  std::vector<MemResponse> out;
  for (auto& ch : channels_) {
    auto r = ch.tick(now);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

bool HbmDevice::idle() const {
  return std::all_of(channels_.begin(), channels_.end(),
                     [](const HbmChannel& c) { return c.idle(); });
}

}  // namespace memsim
