#include "arax/bench/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "arax/common/error.hpp"

namespace arax::bench {

const char* const kCsvHeader =
    "row_type,name,priority,arrival_ns,start_ns,end_ns,turnaround_ns,tasks,output_hash,device,busy_ns,launches,"
    "bytes,staged_ns,direct_ns,ratio,latency_ns,workload,mode,clock,seed,makespan_ns,migrations,bytes_moved";

namespace {

constexpr std::size_t kColumns = 24;

std::string num(std::uint64_t v) { return std::to_string(v); }

std::string ratio_text(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", r);
  return buf;
}

// Names never contain commas or quotes; reject them rather than quote.
const std::string& field(const std::string& s) {
  if (s.find_first_of(",\"\n") != std::string::npos) throw Error(Errc::kInvalidArgument, "csv field contains a separator: " + s);
  return s;
}

std::string row(std::vector<std::string> cells) {
  cells.resize(kColumns);
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + "\n";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::uint64_t u64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::kSyntaxError, "csv: expected an integer, got '" + s + "'");
  }
}

}  // namespace

const InstanceMetrics* Metrics::instance(std::string_view name) const {
  for (const auto& i : instances)
    if (i.name == name) return &i;
  return nullptr;
}

std::uint64_t Metrics::issue_latency_median_ns() const {
  if (issue_latency_ns.empty()) return 0;
  auto v = issue_latency_ns;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::string to_csv(const Metrics& m) {
  std::string out = std::string(kCsvHeader) + "\n";
  if (m.empty()) return out;
  for (const auto& i : m.instances) {
    out += row({"instance", field(i.name), field(i.priority), num(i.arrival_ns), num(i.start_ns), num(i.end_ns),
                num(i.turnaround_ns), num(i.tasks), num(i.output_hash)});
  }
  for (const auto& d : m.devices) {
    out += row({"device", field(d.name), "", "", "", "", "", "", "", num(d.id), num(d.busy_ns), num(d.launches)});
  }
  for (const auto& t : m.transfers) {
    out += row({"transfer", "", "", "", "", "", "", "", "", "", "", "", num(t.bytes), num(t.staged_ns), num(t.direct_ns),
                ratio_text(t.ratio)});
  }
  for (auto l : m.issue_latency_ns) {
    std::vector<std::string> cells(17);
    cells[0] = "latency";
    cells[16] = num(l);
    out += row(cells);
  }
  std::vector<std::string> s(kColumns);
  s[0] = "summary";
  s[7] = num(m.tasks);
  s[17] = field(m.workload);
  s[18] = field(m.mode);
  s[19] = field(m.clock);
  s[20] = num(m.seed);
  s[21] = num(m.makespan_ns);
  s[22] = num(m.migrations);
  s[23] = num(m.bytes_moved);
  out += row(s);
  return out;
}

Metrics parse_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(Errc::kSyntaxError, "csv: missing or unexpected header");
  Metrics m;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != kColumns) {
      throw Error(Errc::kSyntaxError, "csv line " + std::to_string(n) + ": expected " + std::to_string(kColumns) + " cells");
    }
    const auto& kind = c[0];
    if (kind == "instance") {
      m.instances.push_back({c[1], c[2], u64(c[3]), u64(c[4]), u64(c[5]), u64(c[6]), u64(c[7]), u64(c[8])});
    } else if (kind == "device") {
      m.devices.push_back({static_cast<std::uint32_t>(u64(c[9])), c[1], u64(c[10]), u64(c[11])});
    } else if (kind == "transfer") {
      m.transfers.push_back({u64(c[12]), u64(c[13]), u64(c[14]), std::stod(c[15])});
    } else if (kind == "latency") {
      m.issue_latency_ns.push_back(u64(c[16]));
    } else if (kind == "summary") {
      m.tasks = u64(c[7]);
      m.workload = c[17];
      m.mode = c[18];
      m.clock = c[19];
      m.seed = u64(c[20]);
      m.makespan_ns = u64(c[21]);
      m.migrations = u64(c[22]);
      m.bytes_moved = u64(c[23]);
    } else {
      throw Error(Errc::kSyntaxError, "csv line " + std::to_string(n) + ": unknown row type '" + kind + "'");
    }
  }
  return m;
}

void report(const Metrics& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out << to_csv(m);
  if (!out) throw Error(Errc::kIo, "write failed: " + path);
}

}  // namespace arax::bench
