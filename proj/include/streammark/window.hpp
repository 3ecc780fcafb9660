#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "streammark/dataflow.hpp"
#include "streammark/message.hpp"

namespace streammark {

// Incremental windowing over a message stream, arrival order preserved.
//
// count mode: a batch of the last `width` messages is emitted every `slide`
// arrivals, starting once `width` messages have arrived.
// time mode: windows are [t0 + k*slide, t0 + k*slide + width) over
// event_time, anchored at the first message's event_time; a window is
// emitted when a message at or past its end arrives.
class Windower {
 public:
  explicit Windower(WindowSpec spec) : spec_(spec) {}

  using EmitFn = std::function<void(std::span<const Message>)>;

  void push(Message&& m, const EmitFn& emit);

 private:
  void push_count(Message&& m, const EmitFn& emit);
  void push_time(Message&& m, const EmitFn& emit);
  void evict_before(int64_t t);

  WindowSpec spec_;
  // Count mode: sliding block over a vector, compacted in amortized O(1),
  // so emission hands out a span without copying messages.
  std::vector<Message> block_;
  size_t start_ = 0;
  // Time mode.
  std::deque<Message> buffer_;
  uint64_t arrivals_ = 0;
  bool anchored_ = false;
  int64_t window_start_ = 0;
  std::vector<Message> scratch_;
};

// Batch form of the same semantics, for tests and offline use.
std::vector<std::vector<Message>> apply_window(const WindowSpec& spec,
                                               std::vector<Message> stream);

}  // namespace streammark
