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

#include <span>
#include <vector>

namespace hodep {

// heads[j-1] is the head of token j; 0 is the synthetic root. Returns true iff
// the heads form an arborescence rooted at 0: every head in range, no self
// loops, every token reaches the root.
inline bool is_tree(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  for (int j = 1; j <= n; ++j) {
    const int h = heads[j - 1];
    if (h < 0 || h > n || h == j) return false;
  }
  // 0 = unvisited, 1 = on current path, 2 = known to reach root.
  std::vector<char> state(n + 1, 0);
  state[0] = 2;
  std::vector<int> path;
  for (int start = 1; start <= n; ++start) {
    int v = start;
    path.clear();
    while (state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = heads[v - 1];
    }
    if (state[v] == 1) return false;
    for (int p : path) state[p] = 2;
  }
  return true;
}

}  // namespace hodep
