#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streammark/message.hpp"

namespace streammark {

// Transient backend failure; the retrying wrappers absorb a bounded number of
// these before surfacing the error to the task.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectRef {
  std::string container;
  std::string key;
};

class ObjectStore {
 public:
  virtual ~ObjectStore() = default;
  virtual void put(const ObjectRef& ref, const std::vector<uint8_t>& bytes) = 0;
  // nullopt = typed not-found.
  virtual std::optional<std::vector<uint8_t>> get(const ObjectRef& ref) = 0;
  virtual std::vector<std::string> list(const std::string& container) = 0;
};

// In-process store; read-after-write within the run by construction.
class MemObjectStore : public ObjectStore {
 public:
  void put(const ObjectRef& ref, const std::vector<uint8_t>& bytes) override;
  std::optional<std::vector<uint8_t>> get(const ObjectRef& ref) override;
  std::vector<std::string> list(const std::string& container) override;

 private:
  std::mutex mutex_;
  std::map<std::string, std::map<std::string, std::vector<uint8_t>>> data_;
};

// Directory-tree store: <root>/<container>/<key>.
class DirObjectStore : public ObjectStore {
 public:
  explicit DirObjectStore(std::filesystem::path root);
  void put(const ObjectRef& ref, const std::vector<uint8_t>& bytes) override;
  std::optional<std::vector<uint8_t>> get(const ObjectRef& ref) override;
  std::vector<std::string> list(const std::string& container) override;

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
};

struct TableQuery {
  std::string table;
  std::string partition_key;
  std::optional<std::string> row_key;  // absent: lowest row key in partition
};

using TableRow = std::map<std::string, Value>;

class TableStore {
 public:
  virtual ~TableStore() = default;
  virtual void insert(const std::string& table, const std::string& pk,
                      const std::string& rk, TableRow row) = 0;
  virtual std::optional<TableRow> query(const TableQuery& q) = 0;
};

class MemTableStore : public TableStore {
 public:
  void insert(const std::string& table, const std::string& pk,
              const std::string& rk, TableRow row) override;
  std::optional<TableRow> query(const TableQuery& q) override;

 protected:
  std::mutex mutex_;
  // table -> pk -> rk -> row
  std::map<std::string, std::map<std::string, std::map<std::string, TableRow>>> data_;
};

// Embedded single-file store: JSON-lines, one row per line with
// {"table","pk","rk","fields"}; loaded on open, appended on insert.
class FileTableStore : public MemTableStore {
 public:
  explicit FileTableStore(std::filesystem::path file);
  void insert(const std::string& table, const std::string& pk,
              const std::string& rk, TableRow row) override;

 private:
  std::filesystem::path file_;
};

// At-most-once in-process pub-sub broker; per-topic delivery is serialized
// and preserves publish order.
class PubSubBroker {
 public:
  using Handler = std::function<void(const std::vector<uint8_t>&)>;

  uint64_t subscribe(const std::string& topic, Handler handler);
  void unsubscribe(uint64_t id);
  void publish(const std::string& topic, const std::vector<uint8_t>& payload);
  uint64_t delivered() const;

 private:
  struct Topic {
    std::mutex order;  // serializes delivery per topic
    std::vector<std::pair<uint64_t, Handler>> subs;
  };
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Topic>> topics_;
  uint64_t next_id_ = 1;
  std::atomic<uint64_t> delivered_{0};
};

// Bounded retry with exponential backoff around transient backend errors.
struct RetryPolicy {
  int attempts = 3;
  int base_backoff_ms = 10;
};

// Runs `op`, retrying on BackendUnavailable. Returns true on success; false
// after the final attempt failed (the caller counts the task-level failure).
bool with_retries(const RetryPolicy& policy, const std::function<void()>& op,
                  uint64_t* retries = nullptr);

}  // namespace streammark
