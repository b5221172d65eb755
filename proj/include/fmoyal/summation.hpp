#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace fmoyal {

// Pairwise summation with a fixed split rule, so the rounding pattern
// depends only on the length of the input.
template <class T>
T pairwise_sum(std::span<const T> values) {
  if (values.empty()) return T{};
  if (values.size() <= 8) {
    T acc = values[0];
    for (std::size_t i = 1; i < values.size(); ++i) acc += values[i];
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& values) {
  return pairwise_sum(std::span<const T>(values));
}

// Streaming variant of pairwise_sum for terms too large to buffer (whole
// matrices). Partial sums are merged like a binary counter; the merge tree
// depends only on the number of terms added.
template <class T>
class PairwiseAccumulator {
 public:
  void add(T term) {
    std::size_t level = 0;
    while (level < filled_.size() && filled_[level]) {
      term = std::move(slots_[level]) + term;
      filled_[level] = false;
      ++level;
    }
    if (level == slots_.size()) {
      slots_.push_back(std::move(term));
      filled_.push_back(true);
    } else {
      slots_[level] = std::move(term);
      filled_[level] = true;
    }
    ++count_;
  }

  std::size_t count() const { return count_; }

  // Combines the pending partial sums from the highest level down.
  // Returns `zero` when nothing was added.
  T total(T zero) const {
    bool any = false;
    T acc = std::move(zero);
    for (std::size_t level = slots_.size(); level-- > 0;) {
      if (!filled_[level]) continue;
      if (!any) {
        acc = slots_[level];
        any = true;
      } else {
        acc = acc + slots_[level];
      }
    }
    return acc;
  }

 private:
  std::vector<T> slots_;
  std::vector<bool> filled_;
  std::size_t count_ = 0;
};

}  // namespace fmoyal
