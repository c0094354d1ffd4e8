// Copyright 2026 The hodep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "hodep/common.hpp"

namespace hodep {

// Score of every candidate arc head -> dep of one sentence. Heads range over
// 0..n (0 is the root), dependents over 1..n. Self-arcs hold -infinity.
class ArcScoreTable {
 public:
  static constexpr double kMasked = -std::numeric_limits<double>::infinity();

  ArcScoreTable() = default;
  explicit ArcScoreTable(int n) : values_(Matrix::Zero(n + 1, n)) { mask(); }

  // Takes an (n+1) x n matrix whose column j-1 holds dependent j.
  explicit ArcScoreTable(Matrix values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols() + 1)
      throw ValidationError("arc score table must be (n+1) x n, got " +
                            std::to_string(values_.rows()) + " x " + std::to_string(values_.cols()));
    mask();
  }

  int size() const { return static_cast<int>(values_.cols()); }

  double operator()(int head, int dep) const { return values_(head, dep - 1); }
  double& operator()(int head, int dep) { return values_(head, dep - 1); }

  bool is_masked(int head, int dep) const { return head == dep; }

  const Matrix& matrix() const { return values_; }

 private:
  void mask() {
    for (int j = 1; j <= size(); ++j) values_(j, j - 1) = kMasked;
  }

  Matrix values_;
};

}  // namespace hodep
