#include "decom/replay.hpp"

#include <stdexcept>
#include <unordered_set>

namespace decom {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  store_.reserve(capacity < 65536 ? capacity : 65536);
}

void ReplayBuffer::push(Transition tr) {
  if (!full_ && store_.size() < capacity_) {
    store_.push_back(std::move(tr));
    next_ = store_.size() % capacity_;
    if (store_.size() == capacity_) full_ = true;
    return;
  }
  store_[next_] = std::move(tr);
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(int batch_size, Rng& rng) const {
  const std::size_t n = size();
  if (batch_size <= 0) throw std::invalid_argument("ReplayBuffer::sample: batch must be positive");
  if (static_cast<std::size_t>(batch_size) > n) {
    throw std::invalid_argument("ReplayBuffer::sample: batch larger than buffer contents");
  }
  // Floyd's algorithm draws distinct indices without a full shuffle.
  std::unordered_set<std::size_t> chosen;
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  for (std::size_t j = n - batch_size; j < n; ++j) {
    std::size_t idx = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(j + 1)));
    if (!chosen.insert(idx).second) {
      chosen.insert(j);
      idx = j;
    }
    out.push_back(&store_[idx]);
  }
  return out;
}

}  // namespace decom
