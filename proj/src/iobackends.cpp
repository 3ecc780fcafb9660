#include "streammark/iobackends.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace streammark {

using nlohmann::json;

// ---------------------------------------------------------- MemObjectStore

void MemObjectStore::put(const ObjectRef& ref, const std::vector<uint8_t>& bytes) {
  std::lock_guard<std::mutex> lock(mutex_);
  data_[ref.container][ref.key] = bytes;
}

std::optional<std::vector<uint8_t>> MemObjectStore::get(const ObjectRef& ref) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto c = data_.find(ref.container);
  if (c == data_.end()) return std::nullopt;
  auto k = c->second.find(ref.key);
  if (k == c->second.end()) return std::nullopt;
  return k->second;
}

std::vector<std::string> MemObjectStore::list(const std::string& container) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::string> keys;
  auto c = data_.find(container);
  if (c != data_.end())
    for (const auto& [k, v] : c->second) keys.push_back(k);
  return keys;
}

// ---------------------------------------------------------- DirObjectStore

DirObjectStore::DirObjectStore(std::filesystem::path root)
    : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw BackendUnavailable("cannot create object store root: " + root_.string());
}

void DirObjectStore::put(const ObjectRef& ref, const std::vector<uint8_t>& bytes) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::error_code ec;
  std::filesystem::create_directories(root_ / ref.container, ec);
  if (ec) throw BackendUnavailable("object store unreachable");
  std::filesystem::path tmp = root_ / ref.container / (ref.key + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw BackendUnavailable("object store write failed");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, root_ / ref.container / ref.key, ec);
  if (ec) throw BackendUnavailable("object store rename failed");
}

std::optional<std::vector<uint8_t>> DirObjectStore::get(const ObjectRef& ref) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::filesystem::path p = root_ / ref.container / ref.key;
  std::ifstream f(p, std::ios::binary);
  if (!f) return std::nullopt;
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::string> DirObjectStore::list(const std::string& container) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::string> keys;
  std::error_code ec;
  for (const auto& entry :
       std::filesystem::directory_iterator(root_ / container, ec))
    if (entry.is_regular_file()) keys.push_back(entry.path().filename().string());
  std::sort(keys.begin(), keys.end());
  return keys;
}

// ------------------------------------------------------------- TableStore

void MemTableStore::insert(const std::string& table, const std::string& pk,
                           const std::string& rk, TableRow row) {
  std::lock_guard<std::mutex> lock(mutex_);
  data_[table][pk][rk] = std::move(row);
}

std::optional<TableRow> MemTableStore::query(const TableQuery& q) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto t = data_.find(q.table);
  if (t == data_.end()) return std::nullopt;
  auto p = t->second.find(q.partition_key);
  if (p == t->second.end()) return std::nullopt;
  if (q.row_key) {
    auto r = p->second.find(*q.row_key);
    if (r == p->second.end()) return std::nullopt;
    return r->second;
  }
  if (p->second.empty()) return std::nullopt;
  return p->second.begin()->second;
}

namespace {

json value_to_json(const Value& v) {
  if (const auto* i = std::get_if<int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

Value value_from_json(const json& j) {
  if (j.is_number_integer()) return j.get<int64_t>();
  if (j.is_number_float()) return j.get<double>();
  return j.get<std::string>();
}

}  // namespace

FileTableStore::FileTableStore(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream f(file_);
  std::string line;
  while (f && std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TableRow row;
    for (const auto& [k, v] : j.at("fields").items())
      row[k] = value_from_json(v);
    MemTableStore::insert(j.at("table").get<std::string>(),
                          j.at("pk").get<std::string>(),
                          j.at("rk").get<std::string>(), std::move(row));
  }
}

void FileTableStore::insert(const std::string& table, const std::string& pk,
                            const std::string& rk, TableRow row) {
  {
    json fields;
    for (const auto& [k, v] : row) fields[k] = value_to_json(v);
    json j{{"table", table}, {"pk", pk}, {"rk", rk}, {"fields", fields}};
    std::lock_guard<std::mutex> lock(mutex_);  // serialize appends
    std::ofstream f(file_, std::ios::app);
    if (!f) throw BackendUnavailable("table store file unwritable");
    f << j.dump() << "\n";
  }
  MemTableStore::insert(table, pk, rk, std::move(row));
}

// ----------------------------------------------------------------- PubSub

uint64_t PubSubBroker::subscribe(const std::string& topic, Handler handler) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto& t = topics_[topic];
  if (!t) t = std::make_unique<Topic>();
  uint64_t id = next_id_++;
  t->subs.emplace_back(id, std::move(handler));
  return id;
}

void PubSubBroker::unsubscribe(uint64_t id) {
  std::lock_guard<std::mutex> lock(mutex_);
  for (auto& [name, t] : topics_) {
    auto& subs = t->subs;
    for (size_t i = 0; i < subs.size(); ++i)
      if (subs[i].first == id) {
        subs.erase(subs.begin() + static_cast<ptrdiff_t>(i));
        return;
      }
  }
}

void PubSubBroker::publish(const std::string& topic,
                           const std::vector<uint8_t>& payload) {
  Topic* t = nullptr;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = topics_.find(topic);
    if (it == topics_.end()) return;  // at_most_once: no subscriber, no delivery
    t = it->second.get();
  }
  std::lock_guard<std::mutex> order(t->order);
  for (auto& [id, handler] : t->subs) {
    handler(payload);
    delivered_.fetch_add(1, std::memory_order_relaxed);
  }
}

uint64_t PubSubBroker::delivered() const {
  return delivered_.load(std::memory_order_relaxed);
}

// ------------------------------------------------------------------ Retry

bool with_retries(const RetryPolicy& policy, const std::function<void()>& op,
                  uint64_t* retries) {
  int backoff = policy.base_backoff_ms;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      op();
      return true;
    } catch (const BackendUnavailable&) {
      if (retries) ++*retries;
      if (attempt == policy.attempts) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
  return false;
}

}  // namespace streammark
