#include "streammark/resource.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

namespace streammark {

namespace {

bool read_cpu_counters(uint64_t& busy, uint64_t& total) {
  std::ifstream f("/proc/stat");
  if (!f) return false;
  std::string label;
  f >> label;
  if (label != "cpu") return false;
  uint64_t v = 0, sum = 0, idle_all = 0;
  // user nice system idle iowait irq softirq steal
  for (int i = 0; i < 8 && (f >> v); ++i) {
    sum += v;
    if (i == 3 || i == 4) idle_all += v;  // idle + iowait
  }
  busy = sum - idle_all;
  total = sum;
  return total > 0;
}

bool read_mem_percent(double& out) {
  std::ifstream f("/proc/meminfo");
  if (!f) return false;
  uint64_t total_kb = 0, avail_kb = 0;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ls(line);
    std::string key;
    uint64_t value = 0;
    ls >> key >> value;
    if (key == "MemTotal:") total_kb = value;
    if (key == "MemAvailable:") avail_kb = value;
  }
  if (total_kb == 0) return false;
  out = 100.0 * (1.0 - static_cast<double>(avail_kb) / static_cast<double>(total_kb));
  return true;
}

}  // namespace

CpuMemReading ResourceProbe::sample() {
  CpuMemReading r;
  uint64_t busy = 0, total = 0;
  if (!read_cpu_counters(busy, total)) return r;
  if (primed_ && total > prev_total_) {
    r.cpu_percent = 100.0 * static_cast<double>(busy - prev_busy_) /
                    static_cast<double>(total - prev_total_);
    if (r.cpu_percent < 0) r.cpu_percent = 0;
    if (r.cpu_percent > 100) r.cpu_percent = 100;
    r.ok = read_mem_percent(r.mem_percent);
  }
  prev_busy_ = busy;
  prev_total_ = total;
  primed_ = true;
  return r;
}

std::string host_name() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof buf - 1) != 0) return "localhost";
  return buf;
}

}  // namespace streammark
