#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fluidrl/common/rng.hpp"

namespace fluidrl {

// One environment transition with every agent slot stacked. Observations
// are stored as f32; rewards are zero wherever the pre-step alive mask is
// false.
struct ReplayItem {
  std::vector<float> obs;       // n_agents * obs_size
  std::vector<float> obs_next;  // n_agents * obs_size
  std::vector<int> actions;     // n_agents
  std::vector<double> rewards;  // n_agents
  std::vector<std::uint8_t> alive;       // pre step
  std::vector<std::uint8_t> alive_next;  // post step
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::runtime_error("replay: capacity must be positive");
  }

  void push(ReplayItem item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[write_] = std::move(item);
    }
    write_ = (write_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  const ReplayItem& sample(Rng& rng) const {
    if (items_.empty()) throw std::runtime_error("replay: empty buffer");
    return items_[rng.uniform_int(0, static_cast<int>(items_.size()) - 1)];
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<ReplayItem> items_;
};

}  // namespace fluidrl
