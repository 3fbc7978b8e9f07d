#pragma once

#include <queue>
#include <vector>

namespace gqc {

// Hopcroft–Karp maximum bipartite matching (left size L, right size R).
class BipartiteMatcher {
 public:
  BipartiteMatcher(int left, int right)
      : left_(left), right_(right), adj_(static_cast<size_t>(left)) {}

  void add_edge(int l, int r) { adj_[static_cast<size_t>(l)].push_back(r); }

  int max_matching() {
    match_l_.assign(static_cast<size_t>(left_), -1);
    match_r_.assign(static_cast<size_t>(right_), -1);
    int result = 0;
    while (bfs()) {
      for (int l = 0; l < left_; ++l)
        if (match_l_[static_cast<size_t>(l)] < 0 && dfs(l)) ++result;
    }
    return result;
  }

  const std::vector<int>& left_match() const { return match_l_; }

 private:
  static constexpr int kInf = 1 << 30;

  bool bfs() {
    std::queue<int> q;
    dist_.assign(static_cast<size_t>(left_), kInf);
    for (int l = 0; l < left_; ++l)
      if (match_l_[static_cast<size_t>(l)] < 0) {
        dist_[static_cast<size_t>(l)] = 0;
        q.push(l);
      }
    bool found = false;
    while (!q.empty()) {
      int l = q.front();
      q.pop();
      for (int r : adj_[static_cast<size_t>(l)]) {
        int l2 = match_r_[static_cast<size_t>(r)];
        if (l2 < 0) {
          found = true;
        } else if (dist_[static_cast<size_t>(l2)] == kInf) {
          dist_[static_cast<size_t>(l2)] = dist_[static_cast<size_t>(l)] + 1;
          q.push(l2);
        }
      }
    }
    return found;
  }

  bool dfs(int l) {
    for (int r : adj_[static_cast<size_t>(l)]) {
      int l2 = match_r_[static_cast<size_t>(r)];
      if (l2 < 0 || (dist_[static_cast<size_t>(l2)] ==
                         dist_[static_cast<size_t>(l)] + 1 &&
                     dfs(l2))) {
        match_l_[static_cast<size_t>(l)] = r;
        match_r_[static_cast<size_t>(r)] = l;
        return true;
      }
    }
    dist_[static_cast<size_t>(l)] = kInf;
    return false;
  }

  int left_, right_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_l_, match_r_, dist_;
};

}  // namespace gqc
