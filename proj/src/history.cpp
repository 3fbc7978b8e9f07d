#include "gqc/history.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace gqc {

bool is_basic(const BasicBlock& b, int n) {
  if (static_cast<int>(b.size()) > n) return false;
  for (size_t i = 0; i < b.size(); ++i)
    for (size_t j = i + 1; j < b.size(); ++j)
      if (b[i].peb == b[j].peb) return false;
  return true;
}

KHistory flatten(const NKHistory& t) {
  KHistory s;
  for (const auto& b : t) s.insert(s.end(), b.begin(), b.end());
  return s;
}

NKHistory structure_n(const KHistory& s, int n) {
  NKHistory t;
  BasicBlock cur;
  auto has_peb = [&](int p) {
    for (const auto& m : cur)
      if (m.peb == p) return true;
    return false;
  };
  for (const auto& m : s) {
    if (static_cast<int>(cur.size()) == n || has_peb(m.peb)) {
      t.push_back(cur);
      cur.clear();
    }
    cur.push_back(m);
  }
  if (!cur.empty()) t.push_back(cur);
  return t;
}

bool is_structured(const NKHistory& t, int n, int k) {
  for (const auto& b : t) {
    if (b.empty() || !is_basic(b, n)) return false;
    for (const auto& m : b)
      if (m.peb < 1 || m.peb > k) return false;
  }
  for (size_t i = 0; i + 1 < t.size(); ++i) {
    if (static_cast<int>(t[i].size()) == n) continue;
    int first = t[i + 1].front().peb;
    bool occurs = false;
    for (const auto& m : t[i])
      if (m.peb == first) { occurs = true; break; }
    if (!occurs) return false;
  }
  return true;
}

NKHistory alpha_n(const KHistory& s, int p, int n) {
  NKHistory t = structure_n(s, n);
  if (t.empty()) return t;
  const BasicBlock& last = t.back();
  bool keep = static_cast<int>(last.size()) == n;
  if (!keep)
    for (const auto& m : last)
      if (m.peb == p) { keep = true; break; }
  if (!keep) t.pop_back();
  return t;
}

NKHistory structured_companion(const NKHistory& t_in, int n, int k) {
  NKHistory t;
  for (const auto& b : t_in)
    if (!b.empty()) t.push_back(b);
  if (n == 1) return t;
  for (;;) {
    size_t bad = t.size();
    for (size_t i = 0; i + 1 < t.size(); ++i) {
      if (static_cast<int>(t[i].size()) == n) continue;
      int first = t[i + 1].front().peb;
      bool occurs = false;
      for (const auto& m : t[i])
        if (m.peb == first) { occurs = true; break; }
      if (!occurs) { bad = i; break; }
    }
    if (bad == t.size()) break;
    Move last = t[bad].back();
    Move head = t[bad + 1].front();
    // p' = p would have made the pair good; cannot happen for a bad pair.
    assert(head.peb != last.peb);
    // kappa: last element pebbled with head.peb in the flattened prefix up to
    // and including the bad block.
    int kappa = last.elem;
    for (size_t i = 0; i <= bad; ++i)
      for (const auto& m : t[i])
        if (m.peb == head.peb) kappa = m.elem;
    BasicBlock link{last, Move{kappa, head.peb}};
    t.insert(t.begin() + static_cast<long>(bad) + 1, link);
  }
  return t;
}

std::string khistory_key(const KHistory& s) {
  std::string out = "[";
  for (const auto& m : s) {
    out += "(" + std::to_string(m.elem) + "," + std::to_string(m.peb) + ")";
  }
  return out + "]";
}

std::string nkhistory_key(const NKHistory& t) {
  std::string out = "[";
  for (const auto& b : t) out += khistory_key(b);
  return out + "]";
}

std::vector<KHistory> all_khistories(int universe, int k, int max_len) {
  std::vector<KHistory> out{{}};
  size_t begin = 0;
  for (int len = 1; len <= max_len; ++len) {
    size_t end = out.size();
    for (size_t i = begin; i < end; ++i) {
      for (int e = 0; e < universe; ++e)
        for (int p = 1; p <= k; ++p) {
          KHistory s = out[i];
          s.push_back({e, p});
          out.push_back(std::move(s));
        }
    }
    begin = end;
  }
  return out;
}

namespace {

std::vector<BasicBlock> all_basic_blocks(int universe, int n, int k) {
  std::vector<BasicBlock> out;
  std::vector<BasicBlock> frontier{{}};
  for (int len = 1; len <= n; ++len) {
    std::vector<BasicBlock> next;
    for (const auto& b : frontier) {
      for (int e = 0; e < universe; ++e)
        for (int p = 1; p <= k; ++p) {
          bool used = false;
          for (const auto& m : b)
            if (m.peb == p) { used = true; break; }
          if (used) continue;
          BasicBlock nb = b;
          nb.push_back({e, p});
          next.push_back(nb);
        }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

std::vector<NKHistory> all_nkhistories(int universe, int n, int k,
                                       int max_blocks) {
  auto blocks = all_basic_blocks(universe, n, k);
  std::vector<NKHistory> out{{}};
  size_t begin = 0;
  for (int d = 1; d <= max_blocks; ++d) {
    size_t end = out.size();
    for (size_t i = begin; i < end; ++i)
      for (const auto& b : blocks) {
        NKHistory t = out[i];
        t.push_back(b);
        out.push_back(std::move(t));
      }
    begin = end;
  }
  return out;
}

std::vector<NKHistory> all_structured_histories(int universe, int n, int k,
                                                int max_blocks) {
  auto blocks = all_basic_blocks(universe, n, k);
  std::vector<NKHistory> out{{}};
  size_t begin = 0;
  for (int d = 1; d <= max_blocks; ++d) {
    size_t end = out.size();
    for (size_t i = begin; i < end; ++i)
      for (const auto& b : blocks) {
        const NKHistory& t = out[i];
        if (!t.empty()) {
          // Successive-pair condition against the previous block.
          const BasicBlock& prev = t.back();
          if (static_cast<int>(prev.size()) != n) {
            bool occurs = false;
            for (const auto& m : prev)
              if (m.peb == b.front().peb) { occurs = true; break; }
            if (!occurs) continue;
          }
        }
        NKHistory nt = t;
        nt.push_back(b);
        out.push_back(std::move(nt));
      }
    begin = end;
  }
  return out;
}

std::vector<std::pair<int, int>> position_of(const KHistory& s) {
  std::map<int, int> pos;
  for (const auto& m : s) pos[m.peb] = m.elem;
  return {pos.begin(), pos.end()};
}

KStrategy project_strategy(const NKStrategy& psi, int source_size, int depth) {
  KStrategy out;
  out.n = psi.n;
  out.k = psi.k;
  out.depth = depth;
  for (const auto& s : all_khistories(source_size, psi.k, depth)) {
    for (int p = 1; p <= psi.k; ++p) {
      NKHistory a = alpha_n(s, p, psi.n);
      auto it = psi.respond.find(a);
      if (it == psi.respond.end())
        throw PreconditionError(
            "project_strategy: source strategy not total on required "
            "truncation at " + nkhistory_key(a));
      out.respond[{s, p}] = it->second;
    }
  }
  return out;
}

bool is_n_consistent(const KStrategy& psi) {
  std::map<NKHistory, std::vector<int>> seen;
  for (const auto& [key, resp] : psi.respond) {
    NKHistory a = alpha_n(key.first, key.second, psi.n);
    auto [it, fresh] = seen.emplace(a, resp);
    if (!fresh && it->second != resp) return false;
  }
  return true;
}

NKStrategy lift_strategy(const KStrategy& psi, int source_size, int depth) {
  if (!is_n_consistent(psi))
    throw PreconditionError("lift_strategy: source strategy is not n-consistent");
  NKStrategy out;
  out.n = psi.n;
  out.k = psi.k;
  out.depth = depth;
  for (const auto& t : all_nkhistories(source_size, psi.n, psi.k, depth)) {
    NKHistory comp = structured_companion(t, psi.n, psi.k);
    KHistory f = flatten(comp);
    KHistory orig = flatten(t);
    int p = orig.empty() ? 1 : orig.back().peb;
    auto it = psi.respond.find({f, p});
    if (it == psi.respond.end())
      throw PreconditionError(
          "lift_strategy: source strategy not total on required truncation at " +
          khistory_key(f));
    out.respond[t] = it->second;
  }
  return out;
}

}  // namespace gqc
