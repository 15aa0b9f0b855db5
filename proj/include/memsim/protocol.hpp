#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memsim/config.hpp"

namespace memsim {

using RequestId = std::uint64_t;

/// Violations of the routing protocol. These indicate a wiring bug in the
/// simulator, never a bad user input.
enum class ProtocolErrc { BankMismatch, OrphanFill, ChannelMismatch, ICacheWrite, BankConflict };

class ProtocolError : public std::logic_error {
 public:
  ProtocolError(ProtocolErrc code, const std::string& what)
      : std::logic_error(what), code_(code) {}
  ProtocolErrc code() const noexcept { return code_; }

 private:
  ProtocolErrc code_;
};

/// Hands out run-unique request ids, starting at 1.
class RequestIdAllocator {
 public:
  RequestId allocate() { return next_++; }
  RequestId issued() const { return next_ - 1; }

 private:
  RequestId next_ = 1;
};

/// Which component created a request. Responses are routed back to it.
enum class Origin : std::uint8_t { Core, L1I, L1D, L2, L3 };

std::string_view to_string(Origin origin);

/// Position of the requester in the hierarchy. Fields that do not apply to
/// the originating component (e.g. `warp` for an L2 line fetch) are -1.
struct SourcePath {
  std::int32_t cluster = -1;
  std::int32_t socket = -1;
  std::int32_t core = -1;
  std::int32_t warp = -1;

  bool operator==(const SourcePath&) const = default;
};

/// One cache-line transaction after coalescing.
struct MemRequest {
  RequestId id = 0;
  Address address = 0;
  Address line_address = 0;  // address with the line offset bits cleared
  bool is_write = false;
  Origin origin = Origin::Core;
  SourcePath source;
  Cycle issue_cycle = 0;

  bool operator==(const MemRequest&) const = default;
};

struct MemResponse {
  RequestId request_id = 0;
  Address line_address = 0;
  Cycle fill_cycle = 0;

  bool operator==(const MemResponse&) const = default;
};

inline Address line_address_of(Address address, std::uint32_t line_size) {
  return address & ~static_cast<Address>(line_size - 1);
}

MemRequest make_request(RequestId id, Address address, bool is_write, Origin origin,
                        const SourcePath& source, std::uint32_t line_size, Cycle now);

// Line-interleaved mapping. This is the single place where the bank and
// channel hash is defined; both use the line number modulo the target count.
std::uint32_t bank_index(Address address, std::uint32_t line_size, std::uint32_t num_banks);
std::uint32_t channel_index(Address address, std::uint32_t line_size, std::uint32_t num_channels);

/// One row of the request trace CSV:
///   cycle,id,address,is_write,origin,cluster,socket,core,warp
/// `address` is written as 0x-prefixed hex, `is_write` as 0/1, `origin` as
/// core/l1i/l1d/l2/l3 and absent path fields as -1.
struct TraceRecord {
  Cycle cycle = 0;
  RequestId id = 0;
  Address address = 0;
  bool is_write = false;
  Origin origin = Origin::Core;
  SourcePath source;

  bool operator==(const TraceRecord&) const = default;
};

inline constexpr std::string_view kTraceHeader =
    "cycle,id,address,is_write,origin,cluster,socket,core,warp";

void write_trace_header(std::ostream& out);
void write_trace_record(std::ostream& out, const TraceRecord& record);
/// Throws ConfigError(ParseError) naming the offending line.
std::vector<TraceRecord> read_trace(std::istream& in);
std::vector<TraceRecord> read_trace(const std::filesystem::path& path);

}  // namespace memsim
