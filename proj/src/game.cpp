#include "gqc/game.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>

#include "gqc/matching.hpp"

namespace gqc {

void GameVariant::validate() const {
  if (n < 1 || k < 1) throw ValidationError("variant: n and k must be >= 1");
  if (n > k) throw ValidationError("variant: n <= k required");
}

MapCode encode_map(const std::vector<int>& map, int bsize) {
  MapCode code = 0;
  const MapCode base = static_cast<MapCode>(bsize) + 1;
  for (size_t i = map.size(); i-- > 0;) {
    int digit = map[i] < 0 ? bsize : map[i];
    code = code * base + static_cast<MapCode>(digit);
  }
  return code;
}

std::vector<int> decode_map(MapCode code, int asize, int bsize) {
  std::vector<int> map(asize, -1);
  const MapCode base = static_cast<MapCode>(bsize) + 1;
  for (int i = 0; i < asize; ++i) {
    int digit = static_cast<int>(code % base);
    map[i] = digit == bsize ? -1 : digit;
    code /= base;
  }
  return map;
}

bool BackAndForthSystem::contains(MapCode code) const {
  int i = index_of(code);
  return i >= 0 && alive[static_cast<size_t>(i)];
}

int BackAndForthSystem::index_of(MapCode code) const {
  auto it = std::lower_bound(part.begin(), part.end(), code);
  if (it == part.end() || *it != code) return -1;
  return static_cast<int>(it - part.begin());
}

std::vector<MapCode> BackAndForthSystem::members() const {
  std::vector<MapCode> out;
  for (size_t i = 0; i < part.size(); ++i)
    if (alive[i]) out.push_back(part[i]);
  return out;
}

size_t BackAndForthSystem::member_count() const {
  size_t c = 0;
  for (bool b : alive) c += b;
  return c;
}

BackAndForthSystem initial_system(const RelStructure& a, const RelStructure& b,
                                  const GameVariant& v) {
  v.validate();
  BackAndForthSystem s;
  s.grade = v;
  s.stage = 0;
  s.source = &a;
  s.target = &b;
  for (const auto& m : enumerate_partial_maps(a, b, v.k, v.xn))
    s.part.push_back(encode_map(m.map, b.size()));
  std::sort(s.part.begin(), s.part.end());
  s.alive.assign(s.part.size(), true);
  return s;
}

namespace {

int popcount(std::uint32_t x) { return __builtin_popcount(x); }

// Union map (f restricted to X) ∪ (phi restricted to D), as a fresh map.
std::vector<int> union_map(const std::vector<int>& f,
                           const std::vector<int>& phi, std::uint32_t x_mask,
                           std::uint32_t d_mask) {
  std::vector<int> g(f.size(), -1);
  for (size_t e = 0; e < f.size(); ++e) {
    if (x_mask & (1u << e)) g[e] = f[e];
    if (d_mask & (1u << e)) g[e] = phi[e];
  }
  return g;
}

// Checks the forth condition for a fully assigned phi against S, restricted
// to D-sets within `d_limit_mask` that contain `require_elem` (or all D when
// require_elem < 0). Returns the first failing (C=x_mask, D=d_mask) pair.
// Relies on S being restriction-closed: only maximal C per D is tested.
std::optional<std::pair<std::uint32_t, std::uint32_t>> forth_violation(
    const std::vector<int>& f, std::uint32_t dom_mask,
    const std::vector<int>& phi, const BackAndForthSystem& s,
    const GameVariant& v, std::uint32_t d_limit_mask, int require_elem) {
  const int asize = static_cast<int>(f.size());
  const int bsize = s.target->size();
  // Enumerate nonempty D subsets of d_limit_mask with |D| <= n.
  for (std::uint32_t d = d_limit_mask; d; d = (d - 1) & d_limit_mask) {
    if (popcount(d) > v.n) continue;
    if (require_elem >= 0 && !(d & (1u << require_elem))) continue;
    std::uint32_t rest = dom_mask & ~d;  // candidates for C beyond D
    int cap = v.k - popcount(d);
    int take = std::min(popcount(rest), cap);
    // All maximal X subsets of rest of size `take`.
    std::vector<int> rest_elems;
    for (int e = 0; e < asize; ++e)
      if (rest & (1u << e)) rest_elems.push_back(e);
    std::vector<int> idx(static_cast<size_t>(take));
    std::function<std::optional<std::pair<std::uint32_t, std::uint32_t>>(int, int)>
        rec = [&](int pos, int start)
        -> std::optional<std::pair<std::uint32_t, std::uint32_t>> {
      if (pos == take) {
        std::uint32_t x_mask = 0;
        for (int i = 0; i < take; ++i)
          x_mask |= 1u << rest_elems[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        MapCode code = encode_map(union_map(f, phi, x_mask, d), bsize);
        if (!s.contains(code)) return std::make_pair(x_mask | (dom_mask & d), d);
        return std::nullopt;
      }
      for (int i = start; i <= static_cast<int>(rest_elems.size()) - (take - pos);
           ++i) {
        idx[static_cast<size_t>(pos)] = i;
        if (auto bad = rec(pos + 1, i + 1)) return bad;
      }
      return std::nullopt;
    };
    if (auto bad = rec(0, 0)) return bad;
  }
  return std::nullopt;
}

// Per-element allowed target sets from the singleton-D constraints: b is
// allowed for e iff (f restricted to C) ∪ {e ↦ b} ∈ S for every maximal
// C ⊆ dom(f)\{e} with |C| + 1 ≤ k. With |f| < k there is a single such C
// (all of dom(f)), so one superset lookup suffices; with |f| = k the k
// maximal restrictions are checked. Exhausts the n = 1 forth constraints.
std::vector<std::vector<int>> allowed_sets_n1(const std::vector<int>& f,
                                              const BackAndForthSystem& s,
                                              int k) {
  const int asize = static_cast<int>(f.size());
  const int bsize = s.target->size();
  std::vector<int> dom_elems;
  for (int e = 0; e < asize; ++e)
    if (f[static_cast<size_t>(e)] >= 0) dom_elems.push_back(e);
  const int take = std::min(static_cast<int>(dom_elems.size()), k - 1);
  std::vector<std::vector<int>> allowed(static_cast<size_t>(asize));
  for (int e = 0; e < asize; ++e) {
    if (f[static_cast<size_t>(e)] >= 0) {
      // phi must agree with f; all restrictions are in S by closure.
      allowed[static_cast<size_t>(e)].push_back(f[static_cast<size_t>(e)]);
      continue;
    }
    for (int b = 0; b < bsize; ++b) {
      std::vector<int> idx(static_cast<size_t>(take));
      std::function<bool(int, int)> all_ok = [&](int pos, int start) {
        if (pos == take) {
          std::vector<int> g(static_cast<size_t>(asize), -1);
          for (int i = 0; i < take; ++i) {
            int c = dom_elems[static_cast<size_t>(idx[static_cast<size_t>(i)])];
            g[static_cast<size_t>(c)] = f[static_cast<size_t>(c)];
          }
          g[static_cast<size_t>(e)] = b;
          return s.contains(encode_map(g, bsize));
        }
        for (int i = start;
             i <= static_cast<int>(dom_elems.size()) - (take - pos); ++i) {
          idx[static_cast<size_t>(pos)] = i;
          if (!all_ok(pos + 1, i + 1)) return false;
        }
        return true;
      };
      if (all_ok(0, 0)) allowed[static_cast<size_t>(e)].push_back(b);
    }
  }
  return allowed;
}

// Feasibility of completing a partial assignment under the variant's flags.
bool completion_feasible(const std::vector<std::vector<int>>& allowed,
                         const std::vector<int>& assigned,
                         const std::vector<bool>& used_target, int bsize,
                         const GameVariant& v) {
  const int asize = static_cast<int>(allowed.size());
  std::vector<int> free_elems;
  for (int e = 0; e < asize; ++e)
    if (assigned[static_cast<size_t>(e)] < 0) free_elems.push_back(e);
  if (v.xi) {
    // Remaining elements need distinct unused targets.
    BipartiteMatcher m(static_cast<int>(free_elems.size()), bsize);
    for (size_t i = 0; i < free_elems.size(); ++i)
      for (int b : allowed[static_cast<size_t>(free_elems[i])])
        if (!used_target[static_cast<size_t>(b)]) m.add_edge(static_cast<int>(i), b);
    if (m.max_matching() < static_cast<int>(free_elems.size())) return false;
  } else {
    for (int e : free_elems)
      if (allowed[static_cast<size_t>(e)].empty()) return false;
  }
  if (v.xs) {
    // Every uncovered target needs its own remaining element.
    std::vector<int> uncovered;
    for (int b = 0; b < bsize; ++b)
      if (!used_target[static_cast<size_t>(b)]) uncovered.push_back(b);
    if (static_cast<int>(uncovered.size()) > static_cast<int>(free_elems.size()))
      return false;
    BipartiteMatcher m(static_cast<int>(uncovered.size()),
                       static_cast<int>(free_elems.size()));
    for (size_t i = 0; i < uncovered.size(); ++i)
      for (size_t j = 0; j < free_elems.size(); ++j) {
        const auto& al = allowed[static_cast<size_t>(free_elems[j])];
        if (std::find(al.begin(), al.end(), uncovered[i]) != al.end())
          m.add_edge(static_cast<int>(i), static_cast<int>(j));
      }
    if (m.max_matching() < static_cast<int>(uncovered.size())) return false;
  }
  return true;
}

std::optional<std::vector<int>> forth_search_n1(const std::vector<int>& f,
                                                const BackAndForthSystem& s,
                                                const GameVariant& v) {
  const int asize = static_cast<int>(f.size());
  const int bsize = s.target->size();
  auto allowed = allowed_sets_n1(f, s, v.k);
  if (v.xi && v.xs && asize != bsize) return std::nullopt;
  std::vector<int> phi(static_cast<size_t>(asize), -1);
  std::vector<bool> used(static_cast<size_t>(bsize), false);
  if (!completion_feasible(allowed, phi, used, bsize, v)) return std::nullopt;
  for (int e = 0; e < asize; ++e) {
    bool placed = false;
    for (int b : allowed[static_cast<size_t>(e)]) {
      if (v.xi && used[static_cast<size_t>(b)]) continue;
      phi[static_cast<size_t>(e)] = b;
      bool prev = used[static_cast<size_t>(b)];
      used[static_cast<size_t>(b)] = true;
      if (completion_feasible(allowed, phi, used, bsize, v)) {
        placed = true;
        break;
      }
      used[static_cast<size_t>(b)] = prev;
      phi[static_cast<size_t>(e)] = -1;
    }
    if (!placed) return std::nullopt;  // unreachable after feasibility check
  }
  return phi;
}

std::uint32_t dom_mask_of(const std::vector<int>& f) {
  std::uint32_t m = 0;
  for (size_t e = 0; e < f.size(); ++e)
    if (f[e] >= 0) m |= 1u << e;
  return m;
}

std::optional<std::vector<int>> forth_search_general(
    const std::vector<int>& f, const BackAndForthSystem& s,
    const GameVariant& v) {
  const int asize = static_cast<int>(f.size());
  const int bsize = s.target->size();
  const std::uint32_t dom = dom_mask_of(f);
  auto allowed = allowed_sets_n1(f, s, v.k);  // singleton-D constraints
  if (v.xi && v.xs && asize != bsize) return std::nullopt;

  std::vector<int> phi(static_cast<size_t>(asize), -1);
  std::vector<bool> used(static_cast<size_t>(bsize), false);

  // Constraint check for all D containing element e within assigned prefix.
  auto prefix_ok = [&](int e) {
    std::uint32_t assigned_mask = 0;
    for (int i = 0; i <= e; ++i) assigned_mask |= 1u << i;
    return !forth_violation(f, dom, phi, s, v, assigned_mask, e).has_value();
  };

  std::function<bool(int)> rec = [&](int e) {
    if (e == asize) return true;
    for (int b : allowed[static_cast<size_t>(e)]) {
      if (v.xi && used[static_cast<size_t>(b)]) continue;
      phi[static_cast<size_t>(e)] = b;
      const bool prev = used[static_cast<size_t>(b)];
      used[static_cast<size_t>(b)] = true;
      // Unmatched-target pruning for surjectivity.
      bool ok = true;
      if (v.xs) {
        int uncovered = 0;
        for (int t = 0; t < bsize; ++t) uncovered += !used[static_cast<size_t>(t)];
        if (uncovered > asize - e - 1) ok = false;
      }
      if (ok && prefix_ok(e) && rec(e + 1)) return true;
      used[static_cast<size_t>(b)] = prev;
      phi[static_cast<size_t>(e)] = -1;
    }
    return false;
  };
  if (rec(0)) return phi;
  return std::nullopt;
}

// Witness search for members of any size, including |f| = k: at a full
// position Duplicator must still commit to one admissible total map before
// Spoiler moves, so full members are subject to the same condition (the
// |C ∪ D| ≤ k cap on the checked pairs keeps it meaningful).
std::optional<std::vector<int>> forth_search(const std::vector<int>& f,
                                             const BackAndForthSystem& s,
                                             const GameVariant& v) {
  if (v.n == 1) return forth_search_n1(f, s, v);
  return forth_search_general(f, s, v);
}

}  // namespace

std::optional<std::vector<int>> forth_check(const std::vector<int>& f,
                                            const BackAndForthSystem& s,
                                            const GameVariant& v) {
  int dom_size = 0;
  for (int x : f) dom_size += (x >= 0);
  if (dom_size >= v.k)
    throw PreconditionError("forth_check: defined only for |f| < k");
  return forth_search(f, s, v);
}

namespace {

// All total maps extending f and satisfying the variant's flags, in
// lexicographic order. Used for trace/verification (exact semantics path).
std::vector<std::vector<int>> admissible_candidates(const std::vector<int>& f,
                                                    int bsize,
                                                    const GameVariant& v) {
  const int asize = static_cast<int>(f.size());
  std::vector<std::vector<int>> out;
  std::vector<int> phi(static_cast<size_t>(asize), -1);
  std::vector<bool> used(static_cast<size_t>(bsize), false);
  std::function<void(int)> rec = [&](int e) {
    if (e == asize) {
      if (v.xs) {
        for (int b = 0; b < bsize; ++b)
          if (!used[static_cast<size_t>(b)] &&
              std::find(phi.begin(), phi.end(), b) == phi.end())
            return;
      }
      out.push_back(phi);
      return;
    }
    for (int b = 0; b < bsize; ++b) {
      if (f[static_cast<size_t>(e)] >= 0 && f[static_cast<size_t>(e)] != b) continue;
      if (v.xi && used[static_cast<size_t>(b)]) continue;
      bool prev = used[static_cast<size_t>(b)];
      phi[static_cast<size_t>(e)] = b;
      used[static_cast<size_t>(b)] = true;
      rec(e + 1);
      used[static_cast<size_t>(b)] = prev;
      phi[static_cast<size_t>(e)] = -1;
    }
  };
  rec(0);
  return out;
}

}  // namespace

BackAndForthSystem refine(const BackAndForthSystem& s, const GameVariant& v,
                          std::vector<EliminationRecord>* trace,
                          bool committed) {
  BackAndForthSystem next = s;
  next.stage = s.stage + 1;
  const int asize = s.source->size();
  const int bsize = s.target->size();
  for (size_t i = 0; i < s.part.size(); ++i) {
    if (!s.alive[i]) continue;
    std::vector<int> f = decode_map(s.part[i], asize, bsize);
    int dom_size = 0;
    for (int x : f) dom_size += (x >= 0);
    // Standard order: size-k members survive vacuously, since a full position
    // only changes after Spoiler lifts a pebble and the resulting restriction
    // is interrogated through closure. Committed order: Duplicator must hold
    // an admissible function at every member, full ones included.
    if (!committed && dom_size == v.k) continue;
    if (!forth_search(f, s, v)) {
      next.alive[i] = false;
      if (trace) {
        EliminationRecord rec;
        rec.stage = next.stage;
        rec.map = s.part[i];
        std::uint32_t dom = dom_mask_of(f);
        for (const auto& phi : admissible_candidates(f, bsize, v)) {
          auto bad = forth_violation(f, dom, phi, s, v,
                                     (1u << asize) - 1, -1);
          assert(bad.has_value());
          rec.certificates.push_back({phi, bad->first, bad->second});
        }
        trace->push_back(std::move(rec));
      }
    }
  }
  // Re-enforce restriction-closure.
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < next.part.size(); ++i) {
      if (!next.alive[i]) continue;
      std::vector<int> f = decode_map(next.part[i], asize, bsize);
      for (int e = 0; e < asize; ++e) {
        if (f[static_cast<size_t>(e)] < 0) continue;
        int keep = f[static_cast<size_t>(e)];
        f[static_cast<size_t>(e)] = -1;
        bool sub_alive = next.contains(encode_map(f, bsize));
        f[static_cast<size_t>(e)] = keep;
        if (!sub_alive) {
          next.alive[i] = false;
          changed = true;
          if (trace) {
            EliminationRecord rec;
            rec.stage = next.stage;
            rec.map = next.part[i];
            rec.closure_victim = true;
            trace->push_back(std::move(rec));
          }
          break;
        }
      }
    }
  }
  return next;
}

BackAndForthSystem canonical_system(const RelStructure& a,
                                    const RelStructure& b,
                                    const GameVariant& v,
                                    std::vector<EliminationRecord>* trace,
                                    bool committed) {
  BackAndForthSystem s = initial_system(a, b, v);
  for (;;) {
    BackAndForthSystem next = refine(s, v, trace, committed);
    if (next.alive == s.alive) {
      next.stage = s.stage;  // fixpoint reached; keep the stage count stable
      return next;
    }
    s = std::move(next);
  }
}

bool duplicator_wins(const RelStructure& a, const RelStructure& b,
                     const GameVariant& v) {
  BackAndForthSystem s = canonical_system(a, b, v);
  std::vector<int> empty(static_cast<size_t>(a.size()), -1);
  return s.contains(encode_map(empty, b.size()));
}

bool duplicator_wins_committed(const RelStructure& a, const RelStructure& b,
                               const GameVariant& v) {
  BackAndForthSystem s = canonical_system(a, b, v, nullptr, true);
  std::vector<int> empty(static_cast<size_t>(a.size()), -1);
  return s.contains(encode_map(empty, b.size()));
}

CubeVerdict verdict_cube(const RelStructure& a, const RelStructure& b, int n,
                         int k) {
  CubeVerdict out;
  for (int xi = 0; xi <= 1; ++xi)
    for (int xs = 0; xs <= 1; ++xs)
      for (int xn = 0; xn <= 1; ++xn)
        out.verdict[xi][xs][xn] =
            duplicator_wins(a, b, GameVariant{n, k, xi != 0, xs != 0, xn != 0});
  for (int xi = 0; xi <= 1; ++xi)
    for (int xs = 0; xs <= 1; ++xs)
      for (int xn = 0; xn <= 1; ++xn)
        for (int yi = 0; yi <= xi; ++yi)
          for (int ys = 0; ys <= xs; ++ys)
            for (int yn = 0; yn <= xn; ++yn)
              if (out.verdict[xi][xs][xn] && !out.verdict[yi][ys][yn])
                out.monotone = false;
  return out;
}

PositionalStrategy synthesize_strategy(const BackAndForthSystem& s,
                                       const GameVariant& v, bool committed) {
  const int asize = s.source->size();
  const int bsize = s.target->size();
  std::vector<int> empty(static_cast<size_t>(asize), -1);
  if (!s.contains(encode_map(empty, bsize)))
    throw PreconditionError("synthesize_strategy: empty map not in system");
  BackAndForthSystem fixed = refine(s, v, nullptr, committed);
  if (fixed.alive != s.alive)
    throw PreconditionError("synthesize_strategy: system is not a fixpoint");
  PositionalStrategy strat;
  strat.grade = v;
  for (size_t i = 0; i < s.part.size(); ++i) {
    if (!s.alive[i]) continue;
    std::vector<int> f = decode_map(s.part[i], asize, bsize);
    int dom_size = 0;
    for (int x : f) dom_size += (x >= 0);
    if (!committed && dom_size == v.k) continue;
    auto w = forth_search(f, s, v);
    assert(w.has_value());
    strat.choice[s.part[i]] = *w;
  }
  return strat;
}

StrategyReport verify_strategy(const BackAndForthSystem& s,
                               const PositionalStrategy& strat,
                               const GameVariant& v, bool committed) {
  StrategyReport rep;
  const int asize = s.source->size();
  const int bsize = s.target->size();
  for (size_t i = 0; i < s.part.size(); ++i) {
    if (!s.alive[i]) continue;
    std::vector<int> f = decode_map(s.part[i], asize, bsize);
    int dom_size = 0;
    for (int x : f) dom_size += (x >= 0);
    if (!committed && dom_size == v.k) continue;
    auto it = strat.choice.find(s.part[i]);
    if (it == strat.choice.end()) {
      rep.ok = false;
      rep.bad_key = s.part[i];
      rep.reason = "missing choice";
      return rep;
    }
    const auto& phi = it->second;
    // Flags and agreement.
    for (int e = 0; e < asize; ++e)
      if (f[static_cast<size_t>(e)] >= 0 &&
          phi[static_cast<size_t>(e)] != f[static_cast<size_t>(e)]) {
        rep.ok = false;
        rep.bad_key = s.part[i];
        rep.reason = "witness disagrees with base";
        return rep;
      }
    if (v.xi) {
      std::vector<bool> used(static_cast<size_t>(bsize), false);
      for (int x : phi) {
        if (used[static_cast<size_t>(x)]) {
          rep.ok = false;
          rep.bad_key = s.part[i];
          rep.reason = "witness not injective";
          return rep;
        }
        used[static_cast<size_t>(x)] = true;
      }
    }
    if (v.xs) {
      std::vector<bool> hit(static_cast<size_t>(bsize), false);
      for (int x : phi) hit[static_cast<size_t>(x)] = true;
      for (bool h : hit)
        if (!h) {
          rep.ok = false;
          rep.bad_key = s.part[i];
          rep.reason = "witness not surjective";
          return rep;
        }
    }
    auto bad = forth_violation(f, dom_mask_of(f), phi, s, v,
                               (1u << asize) - 1, -1);
    if (bad) {
      rep.ok = false;
      rep.bad_key = s.part[i];
      rep.c_mask = bad->first;
      rep.d_mask = bad->second;
      rep.reason = "forth condition fails";
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Independent oracle over pebble positions.
// ---------------------------------------------------------------------------

namespace {

struct PositionSpace {
  // Each state is a sorted multiset of pair codes a*|B|+b whose distinct
  // pairs form a partial homomorphism.
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, int> index;
};

bool pairs_consistent(const std::vector<int>& pairs, const RelStructure& a,
                      const RelStructure& b, bool xn) {
  PartialHom m = PartialHom::empty(a, b, xn);
  for (int pc : pairs) {
    int ea = pc / b.size(), eb = pc % b.size();
    if (m.map[static_cast<size_t>(ea)] >= 0 &&
        m.map[static_cast<size_t>(ea)] != eb)
      return false;
    m.map[static_cast<size_t>(ea)] = eb;
  }
  return is_partial_hom(m);
}

}  // namespace

namespace {

bool solve_positions_impl(const RelStructure& a, const RelStructure& b,
                          const GameVariant& v, std::uint64_t guard,
                          bool committed) {
  v.validate();
  const int asize = a.size();
  const int bsize = b.size();
  {
    std::uint64_t total = 1;
    for (int i = 0; i < asize; ++i) {
      total *= static_cast<std::uint64_t>(bsize);
      if (total > guard)
        throw ResourceGuardError("solve_by_position_graph: |B|^|A| exceeds bound");
    }
  }

  // All total maps satisfying the variant's flags.
  std::vector<std::vector<int>> funcs;
  {
    std::vector<int> h(static_cast<size_t>(asize), -1);
    std::vector<bool> used(static_cast<size_t>(bsize), false);
    std::function<void(int)> rec = [&](int e) {
      if (e == asize) {
        if (v.xs)
          for (int t = 0; t < bsize; ++t)
            if (std::find(h.begin(), h.end(), t) == h.end()) return;
        funcs.push_back(h);
        return;
      }
      for (int t = 0; t < bsize; ++t) {
        if (v.xi && used[static_cast<size_t>(t)]) continue;
        h[static_cast<size_t>(e)] = t;
        used[static_cast<size_t>(t)] = true;
        rec(e + 1);
        used[static_cast<size_t>(t)] = false;
      }
      h[static_cast<size_t>(e)] = -1;
    };
    rec(0);
  }

  // Enumerate consistent states (sorted multisets of <= k pair codes).
  PositionSpace ps;
  {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int minpc) {
      if (pairs_consistent(cur, a, b, v.xn)) {
        ps.index[cur] = static_cast<int>(ps.states.size());
        ps.states.push_back(cur);
      } else {
        return;  // supersets of inconsistent multisets are inconsistent
      }
      if (static_cast<int>(cur.size()) == v.k) return;
      for (int pc = minpc; pc < asize * bsize; ++pc) {
        cur.push_back(pc);
        rec(pc);
        cur.pop_back();
      }
    };
    rec(0);
  }

  std::vector<bool> good(ps.states.size(), true);

  auto state_good_after_move = [&](std::vector<int> pairs) {
    std::sort(pairs.begin(), pairs.end());
    auto it = ps.index.find(pairs);
    if (it == ps.index.end()) return false;  // inconsistent: Spoiler wins
    return static_cast<bool>(good[static_cast<size_t>(it->second)]);
  };

  // All placements of the m moved pebbles (multisets of m elements of A,
  // nondecreasing) must land in good states under response h.
  auto placements_good = [&](const std::vector<int>& base,
                             const std::vector<int>& h, int m) {
    std::vector<int> elems(static_cast<size_t>(m), 0);
    std::function<bool(int, int)> rec = [&](int pos, int mn) {
      if (pos == m) {
        std::vector<int> pairs = base;
        for (int x : elems)
          pairs.push_back(x * bsize + h[static_cast<size_t>(x)]);
        return state_good_after_move(std::move(pairs));
      }
      for (int x = mn; x < asize; ++x) {
        elems[static_cast<size_t>(pos)] = x;
        if (!rec(pos + 1, x)) return false;
      }
      return true;
    };
    return rec(0, 0);
  };

  auto extends_pairs = [&](const std::vector<int>& h,
                           const std::vector<int>& pairs) {
    for (int pc : pairs)
      if (h[static_cast<size_t>(pc / bsize)] != pc % bsize) return false;
    return true;
  };

  // Standard round order: Spoiler first announces which pebbles he moves
  // (lifting them), then Duplicator provides an admissible function extending
  // the remaining pairs, then Spoiler places the lifted pebbles along it.
  auto announcement_safe = [&](const std::vector<int>& base, int m) {
    for (const auto& h : funcs) {
      if (!extends_pairs(h, base)) continue;
      if (placements_good(base, h, m)) return true;
    }
    return false;
  };

  // Every Spoiler announcement at `st`: lift a sub-multiset of placed pebbles
  // (rm) and commit u unplaced ones, 1 <= j + u <= n. `use_h` fixes
  // Duplicator's response up front (committed order); when null each
  // announcement may be answered by its own function.
  auto all_announcements_ok = [&](const std::vector<int>& st,
                                  const std::vector<int>* use_h) {
    int placed = static_cast<int>(st.size());
    int unplaced = v.k - placed;
    for (std::uint32_t rm = 0; rm < (1u << placed); ++rm) {
      int j = popcount(rm);
      if (j > v.n) continue;
      std::vector<int> base;
      for (int i = 0; i < placed; ++i)
        if (!(rm & (1u << i))) base.push_back(st[static_cast<size_t>(i)]);
      int umax = std::min(v.n - j, unplaced);
      for (int u = (j == 0 ? 1 : 0); u <= umax; ++u) {
        if (j + u < 1) continue;
        if (use_h) {
          if (!placements_good(base, *use_h, j + u)) return false;
        } else {
          if (!announcement_safe(base, j + u)) return false;
        }
      }
    }
    return true;
  };

  // Committed round order: Duplicator commits one function extending the full
  // pre-move position; it must survive every announcement and placement.
  auto committed_ok = [&](const std::vector<int>& st) {
    for (const auto& h : funcs) {
      if (!extends_pairs(h, st)) continue;
      if (all_announcements_ok(st, &h)) return true;
    }
    return false;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t si = 0; si < ps.states.size(); ++si) {
      if (!good[si]) continue;
      const auto& st = ps.states[si];
      bool ok = committed ? committed_ok(st) : all_announcements_ok(st, nullptr);
      if (!ok) {
        good[si] = false;
        changed = true;
      }
    }
  }

  auto it = ps.index.find({});
  return it != ps.index.end() && good[static_cast<size_t>(it->second)];
}

}  // namespace

bool solve_by_position_graph(const RelStructure& a, const RelStructure& b,
                             const GameVariant& v, std::uint64_t guard) {
  return solve_positions_impl(a, b, v, guard, false);
}

bool solve_by_position_graph_committed(const RelStructure& a,
                                       const RelStructure& b,
                                       const GameVariant& v,
                                       std::uint64_t guard) {
  return solve_positions_impl(a, b, v, guard, true);
}

std::vector<EliminationRecord> elimination_trace(const RelStructure& a,
                                                 const RelStructure& b,
                                                 const GameVariant& v) {
  std::vector<EliminationRecord> trace;
  // Stage 0: all <= k partial maps that are not members of Part^k_{x_n}.
  BackAndForthSystem init = initial_system(a, b, v);
  const int asize = a.size();
  const int bsize = b.size();
  std::vector<int> f(static_cast<size_t>(asize), -1);
  std::function<void(int, int)> rec = [&](int next, int used) {
    MapCode code = encode_map(f, bsize);
    if (init.index_of(code) < 0) {
      EliminationRecord r;
      r.stage = 0;
      r.map = code;
      trace.push_back(std::move(r));
    }
    if (used == v.k) return;
    for (int e = next; e < asize; ++e) {
      for (int t = 0; t < bsize; ++t) {
        f[static_cast<size_t>(e)] = t;
        rec(e + 1, used + 1);
      }
      f[static_cast<size_t>(e)] = -1;
    }
  };
  rec(0, 0);
  canonical_system(a, b, v, &trace);
  return trace;
}

bool replay_trace(const RelStructure& a, const RelStructure& b,
                  const GameVariant& v,
                  const std::vector<EliminationRecord>& trace,
                  const BackAndForthSystem& expected) {
  const int asize = a.size();
  const int bsize = b.size();
  // Start from every partial map with |dom| <= k.
  std::set<MapCode> live;
  std::vector<int> f(static_cast<size_t>(asize), -1);
  std::function<void(int, int)> gen = [&](int next, int used) {
    live.insert(encode_map(f, bsize));
    if (used == v.k) return;
    for (int e = next; e < asize; ++e) {
      for (int t = 0; t < bsize; ++t) {
        f[static_cast<size_t>(e)] = t;
        gen(e + 1, used + 1);
      }
      f[static_cast<size_t>(e)] = -1;
    }
  };
  gen(0, 0);

  for (const auto& rec : trace) {
    if (!live.count(rec.map)) return false;  // double elimination
    if (rec.stage == 0) {
      // Must genuinely fail the partial-hom test.
      PartialHom m{&a, &b, decode_map(rec.map, asize, bsize), v.xn};
      if (is_partial_hom(m)) return false;
    } else if (rec.closure_victim) {
      // Some restriction must already be gone.
      std::vector<int> g = decode_map(rec.map, asize, bsize);
      bool found = false;
      for (int e = 0; e < asize && !found; ++e) {
        if (g[static_cast<size_t>(e)] < 0) continue;
        int keep = g[static_cast<size_t>(e)];
        g[static_cast<size_t>(e)] = -1;
        if (!live.count(encode_map(g, bsize))) found = true;
        g[static_cast<size_t>(e)] = keep;
      }
      if (!found) return false;
    } else {
      // Certificates must cover all admissible candidates and each failing
      // union map must be outside the live set.
      std::vector<int> g = decode_map(rec.map, asize, bsize);
      auto cands = admissible_candidates(g, bsize, v);
      if (cands.size() != rec.certificates.size()) return false;
      for (size_t i = 0; i < cands.size(); ++i) {
        const auto& cert = rec.certificates[i];
        if (cert.extension != cands[i]) return false;
        MapCode code =
            encode_map(union_map(g, cert.extension, cert.c_mask & ~cert.d_mask,
                                 cert.d_mask),
                       bsize);
        if (live.count(code)) return false;
      }
    }
    live.erase(rec.map);
  }
  std::set<MapCode> want;
  for (MapCode c : expected.members()) want.insert(c);
  return live == want;
}

bool limited_game_value(const RelStructure& a, const RelStructure& b,
                        const GameVariant& v, int rounds) {
  v.validate();
  const int asize = a.size();
  const int bsize = b.size();
  std::vector<std::vector<int>> funcs;
  {
    std::vector<int> h(static_cast<size_t>(asize), -1);
    std::vector<bool> used(static_cast<size_t>(bsize), false);
    std::function<void(int)> rec = [&](int e) {
      if (e == asize) {
        if (v.xs)
          for (int t = 0; t < bsize; ++t)
            if (std::find(h.begin(), h.end(), t) == h.end()) return;
        funcs.push_back(h);
        return;
      }
      for (int t = 0; t < bsize; ++t) {
        if (v.xi && used[static_cast<size_t>(t)]) continue;
        h[static_cast<size_t>(e)] = t;
        used[static_cast<size_t>(t)] = true;
        rec(e + 1);
        used[static_cast<size_t>(t)] = false;
      }
      h[static_cast<size_t>(e)] = -1;
    };
    rec(0);
  }
  std::map<std::pair<std::vector<int>, int>, bool> memo;
  std::function<bool(std::vector<int>, int)> value = [&](std::vector<int> st,
                                                         int r) -> bool {
    std::sort(st.begin(), st.end());
    if (!pairs_consistent(st, a, b, v.xn)) return false;
    if (r == 0) return true;
    auto key = std::make_pair(st, r);
    auto mit = memo.find(key);
    if (mit != memo.end()) return mit->second;
    int placed = static_cast<int>(st.size());
    int unplaced = v.k - placed;
    // Spoiler-first rounds: every announcement (lifted pebbles + fresh
    // count) must admit a response h extending the remaining pairs that
    // survives every placement.
    bool result = true;
    for (std::uint32_t rm = 0; rm < (1u << placed) && result; ++rm) {
      int j = __builtin_popcount(rm);
      if (j > v.n) continue;
      std::vector<int> base;
      for (int i = 0; i < placed; ++i)
        if (!(rm & (1u << i))) base.push_back(st[static_cast<size_t>(i)]);
      int umax = std::min(v.n - j, unplaced);
      for (int u = (j == 0 ? 1 : 0); u <= umax && result; ++u) {
        int m = j + u;
        if (m < 1) continue;
        bool found = false;
        for (const auto& h : funcs) {
          bool extends = true;
          for (int pc : base)
            if (h[static_cast<size_t>(pc / bsize)] != pc % bsize) {
              extends = false;
              break;
            }
          if (!extends) continue;
          std::vector<int> elems(static_cast<size_t>(m), 0);
          std::function<bool(int, int)> rec2 = [&](int pos, int mn) {
            if (pos == m) {
              std::vector<int> pairs = base;
              for (int x : elems)
                pairs.push_back(x * bsize + h[static_cast<size_t>(x)]);
              return value(std::move(pairs), r - 1);
            }
            for (int x = mn; x < asize; ++x) {
              elems[static_cast<size_t>(pos)] = x;
              if (!rec2(pos + 1, x)) return false;
            }
            return true;
          };
          if (rec2(0, 0)) {
            found = true;
            break;
          }
        }
        if (!found) result = false;
      }
    }
    memo[key] = result;
    return result;
  };
  return value({}, rounds);
}

}  // namespace gqc
