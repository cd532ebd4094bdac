// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_SRC_UNION_FIND_HPP_
#define GRIDMEND_SRC_UNION_FIND_HPP_

#include <cstddef>
#include <numeric>
#include <vector>

namespace gridmend::detail {

class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n), rank_(n, 0), components_(n) {
    std::iota(parent_.begin(), parent_.end(), size_t{0});
  }

  size_t find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns false when a and b were already joined (the edge closes a cycle).
  bool unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    --components_;
    return true;
  }

  size_t components() const { return components_; }

 private:
  std::vector<size_t> parent_;
  std::vector<int> rank_;
  size_t components_;
};

}  // namespace gridmend::detail

#endif  // GRIDMEND_SRC_UNION_FIND_HPP_
