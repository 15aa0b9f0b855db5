#include "memsim/protocol.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace memsim {

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::Core: return "core";
    case Origin::L1I: return "l1i";
    case Origin::L1D: return "l1d";
    case Origin::L2: return "l2";
    case Origin::L3: return "l3";
  }
  return "?";
}

MemRequest make_request(RequestId id, Address address, bool is_write, Origin origin,
                        const SourcePath& source, std::uint32_t line_size, Cycle now) {
  MemRequest r;
  r.id = id;
  r.address = address;
  r.line_address = line_address_of(address, line_size);
  r.is_write = is_write;
  r.origin = origin;
  r.source = source;
  r.issue_cycle = now;
  return r;
}

std::uint32_t bank_index(Address address, std::uint32_t line_size, std::uint32_t num_banks) {
  return static_cast<std::uint32_t>((address / line_size) % num_banks);
}

std::uint32_t channel_index(Address address, std::uint32_t line_size,
                            std::uint32_t num_channels) {
  return bank_index(address, line_size, num_channels);
}

void write_trace_header(std::ostream& out) { out << kTraceHeader << '\n'; }

void write_trace_record(std::ostream& out, const TraceRecord& r) {
  fmt::print(out, "{},{},{:#x},{},{},{},{},{},{}\n", r.cycle, r.id, r.address, r.is_write ? 1 : 0,
             to_string(r.origin), r.source.cluster, r.source.socket, r.source.core, r.source.warp);
}

namespace {

[[noreturn]] void bad_line(std::size_t line_no, std::string_view why) {
  throw ConfigError(ConfigErrc::ParseError, fmt::format("trace line {}: {}", line_no, why));
}

template <typename T>
T parse_field(std::string_view text, std::size_t line_no, std::string_view name, int base = 10) {
  T value{};
  if (base == 16) {
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
      text.remove_prefix(2);
    } else {
      base = 10;
    }
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    bad_line(line_no, fmt::format("bad {} field '{}'", name, text));
  return value;
}

Origin parse_origin(std::string_view text, std::size_t line_no) {
  for (auto o : {Origin::Core, Origin::L1I, Origin::L1D, Origin::L2, Origin::L3}) {
    if (text == to_string(o)) return o;
  }
  bad_line(line_no, fmt::format("unknown origin '{}'", text));
}

}  // namespace

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line == kTraceHeader) continue;

    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 9) bad_line(line_no, fmt::format("expected 9 columns, got {}", cols.size()));

    TraceRecord r;
    r.cycle = parse_field<Cycle>(cols[0], line_no, "cycle");
    r.id = parse_field<RequestId>(cols[1], line_no, "id");
    r.address = parse_field<Address>(cols[2], line_no, "address", 16);
    const auto w = parse_field<int>(cols[3], line_no, "is_write");
    if (w != 0 && w != 1) bad_line(line_no, "is_write must be 0 or 1");
    r.is_write = w == 1;
    r.origin = parse_origin(cols[4], line_no);
    r.source.cluster = parse_field<std::int32_t>(cols[5], line_no, "cluster");
    r.source.socket = parse_field<std::int32_t>(cols[6], line_no, "socket");
    r.source.core = parse_field<std::int32_t>(cols[7], line_no, "core");
    r.source.warp = parse_field<std::int32_t>(cols[8], line_no, "warp");
    records.push_back(r);
  }
  return records;
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(ConfigErrc::ParseError, fmt::format("cannot open trace '{}'", path.string()));
  return read_trace(in);
}

}  // namespace memsim
