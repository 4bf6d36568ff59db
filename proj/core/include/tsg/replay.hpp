#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace tsg {

struct Transition {
  Eigen::VectorXd s;   // state encoding
  int c = 0;           // category at s
  Eigen::VectorXd a;   // executed (post-projection) action
  double r = 0.0;
  Eigen::VectorXd s2;  // next encoding (unused when done)
  int c2 = 0;
  bool done = false;
};

// Fixed-capacity ring: once full, the oldest transition is overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    data_.reserve(capacity);
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  const Transition& operator[](std::size_t i) const { return data_[i]; }
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

}  // namespace tsg
