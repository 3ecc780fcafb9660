#include "streammark/window.hpp"

namespace streammark {

void Windower::push(Message&& m, const EmitFn& emit) {
  if (spec_.mode == WindowMode::count)
    push_count(std::move(m), emit);
  else
    push_time(std::move(m), emit);
}

void Windower::push_count(Message&& m, const EmitFn& emit) {
  const size_t width = static_cast<size_t>(spec_.width);
  block_.push_back(std::move(m));
  ++arrivals_;
  if (block_.size() - start_ > width) ++start_;
  if (start_ >= width && start_ >= 1024) {
    block_.erase(block_.begin(), block_.begin() + static_cast<ptrdiff_t>(start_));
    start_ = 0;
  }
  if (arrivals_ < static_cast<uint64_t>(spec_.width)) return;
  if ((arrivals_ - static_cast<uint64_t>(spec_.width)) %
          static_cast<uint64_t>(spec_.slide) !=
      0)
    return;
  emit(std::span<const Message>(block_.data() + start_, width));
}

void Windower::evict_before(int64_t t) {
  while (!buffer_.empty() && buffer_.front().event_time_ms < t)
    buffer_.pop_front();
}

void Windower::push_time(Message&& m, const EmitFn& emit) {
  if (!anchored_) {
    anchored_ = true;
    window_start_ = m.event_time_ms;
  }
  // Close every window that ends at or before this event time.
  while (m.event_time_ms >= window_start_ + spec_.width) {
    scratch_.clear();
    for (const Message& b : buffer_)
      if (b.event_time_ms >= window_start_ &&
          b.event_time_ms < window_start_ + spec_.width)
        scratch_.push_back(b);
    if (!scratch_.empty())
      emit(std::span<const Message>(scratch_.data(), scratch_.size()));
    window_start_ += spec_.slide;
    evict_before(window_start_);
  }
  buffer_.push_back(std::move(m));
}

std::vector<std::vector<Message>> apply_window(const WindowSpec& spec,
                                               std::vector<Message> stream) {
  Windower w(spec);
  std::vector<std::vector<Message>> batches;
  for (auto& m : stream) {
    w.push(std::move(m), [&](std::span<const Message> batch) {
      batches.emplace_back(batch.begin(), batch.end());
    });
  }
  return batches;
}

}  // namespace streammark
