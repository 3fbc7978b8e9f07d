#include "gqc/hella.hpp"

#include <algorithm>
#include <unordered_set>

namespace gqc {

namespace {

// Pebble indices used in a block.
bool peb_in(const BasicBlock& b, int p) {
  for (const auto& m : b)
    if (m.peb == p) return true;
  return false;
}

// No-overwrite between the prefixes of u ending at li < lj (1-based): the
// pebble resting at the end of the shorter prefix is never moved again
// before the end of the longer one.
bool no_overwrite(const KHistory& u, int li, int lj) {
  int p = u[static_cast<size_t>(li - 1)].peb;
  for (int t = li; t < lj; ++t)
    if (u[static_cast<size_t>(t)].peb == p) return false;
  return true;
}

std::uint64_t pow_count(std::uint64_t base, int len, std::uint64_t cap) {
  std::uint64_t total = 0, cur = 1;
  for (int l = 1; l <= len; ++l) {
    if (cur > cap / (base == 0 ? 1 : base)) return cap + 1;
    cur *= base;
    total += cur;
    if (total > cap) return cap + 1;
  }
  return total;
}

}  // namespace

int PebbleStructure::index_of(const KHistory& s) const {
  auto it = index.find(s);
  return it == index.end() ? -1 : it->second;
}

PebbleStructure build_Tk(const RelStructure& a, int k, int m,
                         std::uint64_t guard) {
  if (k < 1 || m < 1) throw ValidationError("build_Tk: k, m >= 1 required");
  PebbleStructure t;
  t.base = a;
  t.k = k;
  t.m = m;
  const int asize = a.size();
  if (pow_count(static_cast<std::uint64_t>(asize) * static_cast<std::uint64_t>(k),
                m, guard) > guard)
    throw ResourceGuardError("build_Tk: truncated universe exceeds bound");

  // Stratified by length, lexicographic within each length.
  std::vector<KHistory> prev{KHistory{}};
  for (int len = 1; len <= m; ++len) {
    std::vector<KHistory> cur;
    for (const auto& s : prev)
      for (int e = 0; e < asize; ++e)
        for (int p = 1; p <= k; ++p) {
          KHistory u = s;
          u.push_back(Move{e, p});
          t.universe.push_back(u);
          cur.push_back(std::move(u));
        }
    prev = std::move(cur);
  }
  for (size_t i = 0; i < t.universe.size(); ++i)
    t.index[t.universe[i]] = static_cast<int>(i);

  t.tuples.assign(a.sig.relations.size(), {});
  for (size_t r = 0; r < a.sig.relations.size(); ++r) {
    const int ar = a.sig.relations[r].arity;
    std::vector<std::vector<int>> out;
    for (const auto& u : t.universe) {
      const int len = static_cast<int>(u.size());
      // All component tuples are prefixes of u with the longest equal to u.
      std::vector<int> ls(static_cast<size_t>(ar), 1);
      std::function<void(int)> rec = [&](int pos) {
        if (pos == ar) {
          if (*std::max_element(ls.begin(), ls.end()) != len) return;
          std::vector<int> elems(static_cast<size_t>(ar));
          for (int i = 0; i < ar; ++i)
            elems[static_cast<size_t>(i)] =
                u[static_cast<size_t>(ls[static_cast<size_t>(i)] - 1)].elem;
          if (!a.has_tuple(static_cast<int>(r), elems)) return;
          for (int i = 0; i < ar; ++i)
            for (int j = 0; j < ar; ++j)
              if (ls[static_cast<size_t>(i)] < ls[static_cast<size_t>(j)] &&
                  !no_overwrite(u, ls[static_cast<size_t>(i)],
                                ls[static_cast<size_t>(j)]))
                return;
          std::vector<int> tup(static_cast<size_t>(ar));
          for (int i = 0; i < ar; ++i) {
            KHistory pref(u.begin(),
                          u.begin() + ls[static_cast<size_t>(i)]);
            tup[static_cast<size_t>(i)] = t.index.at(pref);
          }
          out.push_back(std::move(tup));
          return;
        }
        for (int l = 1; l <= len; ++l) {
          ls[static_cast<size_t>(pos)] = l;
          rec(pos + 1);
        }
      };
      rec(0);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    t.tuples[r] = std::move(out);
  }
  return t;
}

int counit(const KHistory& s) {
  if (s.empty()) throw PreconditionError("counit: empty history");
  return s.back().elem;
}

std::vector<std::pair<KHistory, int>> comult_prefixes(const KHistory& s) {
  if (s.empty()) throw PreconditionError("comult: empty history");
  std::vector<std::pair<KHistory, int>> out;
  for (size_t l = 1; l <= s.size(); ++l)
    out.push_back({KHistory(s.begin(), s.begin() + static_cast<long>(l)),
                   s[l - 1].peb});
  return out;
}

bool tk_tuple_related(const RelStructure& base, int rel,
                      const std::vector<KHistory>& tup) {
  if (tup.empty()) return false;
  std::vector<int> elems;
  for (const auto& s : tup) {
    if (s.empty()) return false;
    elems.push_back(s.back().elem);
  }
  if (!base.has_tuple(rel, elems)) return false;
  for (const auto& si : tup)
    for (const auto& sj : tup) {
      if (si.size() > sj.size()) continue;
      // si must be a prefix of sj with no overwrite of its final pebble.
      if (!std::equal(si.begin(), si.end(), sj.begin())) return false;
      int p = si.back().peb;
      for (size_t t = si.size(); t < sj.size(); ++t)
        if (sj[t].peb == p) return false;
    }
  return true;
}

bool verify_counit_hom_tk(const PebbleStructure& t) {
  for (size_t r = 0; r < t.tuples.size(); ++r)
    for (const auto& tup : t.tuples[r]) {
      std::vector<int> elems;
      for (int i : tup) elems.push_back(counit(t.universe[static_cast<size_t>(i)]));
      if (!t.base.has_tuple(static_cast<int>(r), elems)) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Classes.
// ---------------------------------------------------------------------------

bool approx_eq(const KHistory& u, const KHistory& v, int n) {
  if (u.empty() || v.empty())
    throw PreconditionError("approx_eq: empty history");
  return class_of(u, n) == class_of(v, n);
}

ClassId class_of(const KHistory& u, int n) {
  if (u.empty()) throw PreconditionError("class_of: empty history");
  KHistory prefix(u.begin(), u.end() - 1);
  return ClassId{alpha_n(prefix, u.back().peb, n), u.back().elem};
}

KHistory representative(const ClassId& c) {
  KHistory u = flatten(c.history);
  int p = c.history.empty() ? 1 : c.history.back().back().peb;
  u.push_back(Move{c.element, p});
  return u;
}

int ClassPool::intern(const ClassId& c) {
  auto it = ids.find(c);
  if (it != ids.end()) return it->second;
  int id = static_cast<int>(items.size());
  ids.emplace(c, id);
  items.push_back(c);
  return id;
}

ClassId hcomult(const ClassId& c, int n, int k, ClassPool& pool) {
  (void)k;
  KHistory u = representative(c);
  KHistory w;
  for (size_t l = 1; l <= u.size(); ++l) {
    KHistory pref(u.begin(), u.begin() + static_cast<long>(l));
    w.push_back(Move{pool.intern(class_of(pref, n)), u[l - 1].peb});
  }
  return class_of(w, n);
}

// ---------------------------------------------------------------------------
// H_{n,k}.
// ---------------------------------------------------------------------------

int HellaStructure::index_of(const ClassId& c) const {
  auto it = index.find(c);
  return it == index.end() ? -1 : it->second;
}

QuotientResult build_Hnk(const RelStructure& a, int n, int k, int m,
                         std::uint64_t guard) {
  if (n < 1 || n > k) throw ValidationError("build_Hnk: 1 <= n <= k required");
  QuotientResult q;
  const int big_m = n * m + n;
  q.rep = build_Tk(a, k, big_m, guard);
  q.h.base = a;
  q.h.n = n;
  q.h.k = k;
  q.h.m = m;
  std::vector<ClassId> all;
  all.reserve(q.rep.universe.size());
  for (const auto& u : q.rep.universe) all.push_back(class_of(u, n));
  q.h.universe = all;
  std::sort(q.h.universe.begin(), q.h.universe.end());
  q.h.universe.erase(std::unique(q.h.universe.begin(), q.h.universe.end()),
                     q.h.universe.end());
  for (size_t i = 0; i < q.h.universe.size(); ++i)
    q.h.index[q.h.universe[i]] = static_cast<int>(i);
  q.qn.reserve(all.size());
  for (const auto& c : all) q.qn.push_back(q.h.index.at(c));

  q.h.tuples.assign(q.rep.tuples.size(), {});
  for (size_t r = 0; r < q.rep.tuples.size(); ++r) {
    std::vector<std::vector<int>> out;
    for (const auto& tup : q.rep.tuples[r]) {
      std::vector<int> img;
      for (int i : tup) img.push_back(q.qn[static_cast<size_t>(i)]);
      out.push_back(std::move(img));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    q.h.tuples[r] = std::move(out);
  }
  return q;
}

bool verify_qn_homomorphism(const QuotientResult& q) {
  for (size_t r = 0; r < q.rep.tuples.size(); ++r)
    for (const auto& tup : q.rep.tuples[r]) {
      std::vector<int> img;
      for (int i : tup) img.push_back(q.qn[static_cast<size_t>(i)]);
      const auto& set = q.h.tuples[r];
      if (!std::binary_search(set.begin(), set.end(), img)) return false;
    }
  return true;
}

namespace {

// All T_k representatives of the class [t|a]: histories F(t);w;(a,p) with w a
// basic block of fewer than n moves not using p, subject to the block
// junction condition against the last block of t.
void for_each_representative(const ClassId& c, int n, int k, int universe_size,
                             const std::function<void(const KHistory&)>& fn) {
  const NKHistory& t = c.history;
  KHistory stem = flatten(t);
  const bool last_full =
      t.empty() || static_cast<int>(t.back().size()) == n;

  // w empty: p must keep the final block of t under alpha_n.
  for (int p = 1; p <= k; ++p) {
    if (!t.empty() && !last_full && !peb_in(t.back(), p)) continue;
    KHistory u = stem;
    u.push_back(Move{c.element, p});
    fn(u);
  }

  // w nonempty (only possible when n >= 2).
  std::vector<Move> w;
  std::function<void()> rec = [&]() {
    if (!w.empty()) {
      for (int p = 1; p <= k; ++p) {
        bool used = peb_in(w, p);
        if (used) continue;  // alpha_n must drop the pending block
        KHistory u = stem;
        u.insert(u.end(), w.begin(), w.end());
        u.push_back(Move{c.element, p});
        fn(u);
      }
    }
    if (static_cast<int>(w.size()) >= n - 1) return;
    for (int p = 1; p <= k; ++p) {
      if (peb_in(w, p)) continue;
      // Junction: the first move of w must continue from the last block of t.
      if (w.empty() && !t.empty() && !last_full && !peb_in(t.back(), p))
        continue;
      for (int e = 0; e < universe_size; ++e) {
        w.push_back(Move{e, p});
        rec();
        w.pop_back();
      }
    }
  };
  rec();
}

}  // namespace

bool class_tuple_related(const RelStructure& a, int n, int k, int rel,
                         const std::vector<ClassId>& tup) {
  std::map<ClassId, std::vector<KHistory>> cache;
  std::vector<const std::vector<KHistory>*> reps(tup.size());
  for (size_t i = 0; i < tup.size(); ++i) {
    auto [it, fresh] = cache.try_emplace(tup[i]);
    if (fresh)
      for_each_representative(tup[i], n, k, a.size(),
                              [&](const KHistory& u) { it->second.push_back(u); });
    reps[i] = &it->second;
  }
  // Two representatives can coexist in a related tuple only when one is a
  // prefix of the other and the shorter one's resting pebble is untouched.
  auto compatible = [](const KHistory& u, const KHistory& v) {
    const KHistory& s = u.size() <= v.size() ? u : v;
    const KHistory& l = u.size() <= v.size() ? v : u;
    if (!std::equal(s.begin(), s.end(), l.begin())) return false;
    if (s.size() == l.size()) return true;
    return no_overwrite(l, static_cast<int>(s.size()),
                        static_cast<int>(l.size()));
  };
  std::vector<const KHistory*> chosen;
  std::function<bool(size_t)> rec = [&](size_t pos) -> bool {
    if (pos == tup.size()) {
      std::vector<KHistory> full;
      for (const KHistory* u : chosen) full.push_back(*u);
      return tk_tuple_related(a, rel, full);
    }
    for (const KHistory& u : *reps[pos]) {
      bool ok = true;
      for (const KHistory* prev : chosen)
        if (!compatible(*prev, u)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      chosen.push_back(&u);
      if (rec(pos + 1)) return true;
      chosen.pop_back();
    }
    return false;
  };
  return rec(0);
}

RelStructure hella_to_rel(const HellaStructure& h) {
  RelStructure a;
  a.sig = h.base.sig;
  for (const auto& c : h.universe)
    a.universe.push_back(nkhistory_key(c.history) + "|" +
                         h.base.universe[static_cast<size_t>(c.element)]);
  a.tuples = h.tuples;
  a.sort_tuples();
  a.validate();
  return a;
}

void hnk_relation_tuples(
    const RelStructure& a, int n, int k, int m,
    const std::vector<ClassId>& universe,
    const std::function<void(int, const std::vector<int>&)>& emit,
    std::uint64_t guard) {
  std::map<ClassId, int> index;
  for (size_t i = 0; i < universe.size(); ++i)
    index[universe[i]] = static_cast<int>(i);
  const std::uint64_t usize = universe.size();
  if (usize == 0) return;
  if (usize > 2'000'000)
    throw ResourceGuardError("hnk_relation_tuples: universe exceeds bound");

  std::vector<std::unordered_set<std::uint64_t>> seen(a.sig.relations.size());
  std::uint64_t work = 0;

  for (const auto& top : universe) {
    if (static_cast<int>(top.history.size()) > m) continue;
    for_each_representative(top, n, k, a.size(), [&](const KHistory& u) {
      const int len = static_cast<int>(u.size());
      work += static_cast<std::uint64_t>(len);
      if (work > guard)
        throw ResourceGuardError("hnk_relation_tuples: work exceeds bound");
      // Class of every prefix (or -1 when outside the block-depth universe).
      std::vector<int> cls(static_cast<size_t>(len), -1);
      for (int l = 1; l <= len; ++l) {
        KHistory pref(u.begin(), u.begin() + l);
        auto it = index.find(class_of(pref, n));
        if (it != index.end()) cls[static_cast<size_t>(l - 1)] = it->second;
      }
      for (size_t r = 0; r < a.sig.relations.size(); ++r) {
        const int ar = a.sig.relations[r].arity;
        std::vector<int> ls(static_cast<size_t>(ar), 1);
        std::function<void(int)> rec = [&](int pos) {
          if (pos == ar) {
            if (*std::max_element(ls.begin(), ls.end()) != len) return;
            std::vector<int> elems(static_cast<size_t>(ar));
            std::vector<int> tup(static_cast<size_t>(ar));
            for (int i = 0; i < ar; ++i) {
              int l = ls[static_cast<size_t>(i)];
              int ci = cls[static_cast<size_t>(l - 1)];
              if (ci < 0) return;
              tup[static_cast<size_t>(i)] = ci;
              elems[static_cast<size_t>(i)] = u[static_cast<size_t>(l - 1)].elem;
            }
            if (!a.has_tuple(static_cast<int>(r), elems)) return;
            for (int i = 0; i < ar; ++i)
              for (int j = 0; j < ar; ++j)
                if (ls[static_cast<size_t>(i)] < ls[static_cast<size_t>(j)] &&
                    !no_overwrite(u, ls[static_cast<size_t>(i)],
                                  ls[static_cast<size_t>(j)]))
                  return;
            std::uint64_t key = 0;
            for (int i = 0; i < ar; ++i)
              key = key * usize + static_cast<std::uint64_t>(tup[static_cast<size_t>(i)]);
            if (seen[r].insert(key).second) emit(static_cast<int>(r), tup);
            return;
          }
          for (int l = 1; l <= len; ++l) {
            ls[static_cast<size_t>(pos)] = l;
            rec(pos + 1);
          }
        };
        rec(0);
      }
    });
  }
}

HellaStructure build_Pm(const RelStructure& a, int n, int k, int m,
                        std::uint64_t guard) {
  if (n < 1 || n > k) throw ValidationError("build_Pm: 1 <= n <= k required");
  HellaStructure h;
  h.base = a;
  h.n = n;
  h.k = k;
  h.m = m;
  for (const auto& t : all_structured_histories(a.size(), n, k, m))
    for (int e = 0; e < a.size(); ++e) h.universe.push_back(ClassId{t, e});
  std::sort(h.universe.begin(), h.universe.end());
  for (size_t i = 0; i < h.universe.size(); ++i)
    h.index[h.universe[i]] = static_cast<int>(i);
  h.tuples.assign(a.sig.relations.size(), {});
  hnk_relation_tuples(
      a, n, k, m, h.universe,
      [&](int r, const std::vector<int>& tup) {
        h.tuples[static_cast<size_t>(r)].push_back(tup);
      },
      guard);
  for (auto& set : h.tuples) std::sort(set.begin(), set.end());
  return h;
}

// ---------------------------------------------------------------------------
// Laws.
// ---------------------------------------------------------------------------

namespace {

struct HistoryPool {
  std::map<KHistory, int> ids;
  std::vector<KHistory> items;
  int intern(const KHistory& h) {
    auto it = ids.find(h);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(items.size());
    ids.emplace(h, id);
    items.push_back(h);
    return id;
  }
};

KHistory tk_delta(const KHistory& u, HistoryPool& pool) {
  KHistory w;
  for (size_t l = 1; l <= u.size(); ++l)
    w.push_back(Move{pool.intern(KHistory(u.begin(), u.begin() + static_cast<long>(l))),
                     u[l - 1].peb});
  return w;
}

}  // namespace

LawReport check_tk_laws(int universe_size, int k, int m, std::uint64_t guard) {
  LawReport rep;
  if (pow_count(static_cast<std::uint64_t>(universe_size) *
                    static_cast<std::uint64_t>(k),
                m, guard) > guard)
    throw ResourceGuardError("check_tk_laws: domain exceeds bound");
  std::function<void(const KHistory&)> visit = [&](const KHistory& u) {
    if (!rep.ok || u.empty()) return;
    HistoryPool pool;
    KHistory w = tk_delta(u, pool);
    // counit o comult = id.
    if (pool.items[static_cast<size_t>(w.back().elem)] != u) {
      rep.ok = false;
      rep.violation = "counit o comult != id at " + khistory_key(u);
      return;
    }
    // T(counit) o comult = id.
    KHistory back;
    for (const auto& mv : w)
      back.push_back(Move{counit(pool.items[static_cast<size_t>(mv.elem)]), mv.peb});
    if (back != u) {
      rep.ok = false;
      rep.violation = "T(counit) o comult != id at " + khistory_key(u);
      return;
    }
    // Coassociativity.
    HistoryPool pool2;
    KHistory lhs = tk_delta(w, pool2);
    KHistory rhs;
    for (const auto& mv : w)
      rhs.push_back(Move{
          pool2.intern(tk_delta(pool.items[static_cast<size_t>(mv.elem)], pool)),
          mv.peb});
    if (lhs != rhs) {
      rep.ok = false;
      rep.violation = "comult not coassociative at " + khistory_key(u);
    }
  };
  // Depth-first enumeration of histories of length <= m.
  std::function<void(KHistory&)> rec = [&](KHistory& u) {
    if (!rep.ok) return;
    visit(u);
    if (static_cast<int>(u.size()) == m) return;
    for (int e = 0; e < universe_size; ++e)
      for (int p = 1; p <= k; ++p) {
        u.push_back(Move{e, p});
        rec(u);
        u.pop_back();
      }
  };
  KHistory u;
  rec(u);
  return rep;
}

LawReport check_hnk_laws(int universe_size, int n, int k, int m,
                         const HComultFn* delta_override,
                         std::uint64_t guard) {
  LawReport rep;
  auto delta = [&](const ClassId& c, ClassPool& pool) {
    if (delta_override) return (*delta_override)(c, n, k, pool);
    return hcomult(c, n, k, pool);
  };
  std::uint64_t work = 0;
  for (const auto& t : all_structured_histories(universe_size, n, k, m)) {
    if (!rep.ok) break;
    for (int e = 0; e < universe_size && rep.ok; ++e) {
      if (++work > guard)
        throw ResourceGuardError("check_hnk_laws: domain exceeds bound");
      ClassId c{t, e};
      ClassPool pool;
      ClassId d = delta(c, pool);
      // counit o comult = id.
      if (pool.items[static_cast<size_t>(d.element)] != c) {
        rep.ok = false;
        rep.violation = "counit o comult != id at " + nkhistory_key(t);
        break;
      }
      // H(counit) o comult = id.
      ClassId back;
      back.element = pool.items[static_cast<size_t>(d.element)].element;
      for (const auto& blk : d.history) {
        BasicBlock nb;
        for (const auto& mv : blk)
          nb.push_back(
              Move{pool.items[static_cast<size_t>(mv.elem)].element, mv.peb});
        back.history.push_back(std::move(nb));
      }
      if (back != c) {
        rep.ok = false;
        rep.violation = "H(counit) o comult != id at " + nkhistory_key(t);
        break;
      }
      // Coassociativity.
      ClassPool pool2;
      ClassId lhs = delta(d, pool2);
      ClassId rhs;
      rhs.element = pool2.intern(
          delta(pool.items[static_cast<size_t>(d.element)], pool));
      for (const auto& blk : d.history) {
        BasicBlock nb;
        for (const auto& mv : blk)
          nb.push_back(Move{
              pool2.intern(delta(pool.items[static_cast<size_t>(mv.elem)], pool)),
              mv.peb});
        rhs.history.push_back(std::move(nb));
      }
      if (lhs != rhs) {
        rep.ok = false;
        rep.violation = "comult not coassociative at " + nkhistory_key(t);
      }
    }
  }
  return rep;
}

ComonadReport check_comonad_laws(const RelStructure& a, int n, int k, int m,
                                 std::uint64_t guard) {
  ComonadReport out;
  out.tk = check_tk_laws(a.size(), k, m, guard);
  out.hnk = check_hnk_laws(a.size(), n, k, m);
  out.counit_hom = verify_counit_hom_tk(build_Tk(a, k, m, guard));
  try {
    out.qn_hom = verify_qn_homomorphism(build_Hnk(a, n, k, m, guard));
  } catch (const ResourceGuardError&) {
    out.skipped_quotient = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kleisli morphisms.
// ---------------------------------------------------------------------------

std::map<ClassId, ClassId> map_morphism(const std::vector<int>& f,
                                        const RelStructure& a,
                                        const RelStructure& b, int n, int k,
                                        int m) {
  if (static_cast<int>(f.size()) != a.size())
    throw PreconditionError("map_morphism: map size mismatch");
  PartialHom ph{&a, &b, f, false};
  for (int x : f)
    if (x < 0 || x >= b.size())
      throw PreconditionError("map_morphism: map must be total");
  if (!is_partial_hom(ph))
    throw PreconditionError("map_morphism: not a homomorphism");
  std::map<ClassId, ClassId> out;
  for (const auto& t : all_structured_histories(a.size(), n, k, m)) {
    NKHistory ft;
    for (const auto& blk : t) {
      BasicBlock nb;
      for (const auto& mv : blk)
        nb.push_back(Move{f[static_cast<size_t>(mv.elem)], mv.peb});
      ft.push_back(std::move(nb));
    }
    for (int e = 0; e < a.size(); ++e)
      out[ClassId{t, e}] = ClassId{ft, f[static_cast<size_t>(e)]};
  }
  return out;
}

KleisliMorphism kleisli_identity(const RelStructure& a, int n, int k, int m) {
  KleisliMorphism f;
  f.n = n;
  f.k = k;
  f.m = m;
  f.source = a;
  f.target = a;
  for (const auto& t : all_structured_histories(a.size(), n, k, m))
    for (int e = 0; e < a.size(); ++e) f.table[ClassId{t, e}] = e;
  return f;
}

KleisliMorphism kleisli_compose(const KleisliMorphism& g,
                                const KleisliMorphism& f) {
  if (f.n != g.n || f.k != g.k)
    throw PreconditionError("kleisli_compose: grade mismatch");
  if (!(f.target == g.source))
    throw PreconditionError("kleisli_compose: middle structure mismatch");
  KleisliMorphism out;
  out.n = f.n;
  out.k = f.k;
  out.m = std::min(f.m, g.m);
  out.source = f.source;
  out.target = g.target;
  for (const auto& [c, unused] : f.table) {
    if (static_cast<int>(c.history.size()) > out.m) continue;
    // g o H(f) o comult at c, through the canonical representative.
    KHistory u = representative(c);
    KHistory w;
    for (size_t l = 1; l <= u.size(); ++l) {
      KHistory pref(u.begin(), u.begin() + static_cast<long>(l));
      ClassId inner = class_of(pref, f.n);
      w.push_back(Move{f.table.at(inner), u[l - 1].peb});
    }
    out.table[c] = g.table.at(class_of(w, f.n));
  }
  return out;
}

KleisliMorphism morphism_from_strategy(const NKStrategy& psi,
                                       const RelStructure& a,
                                       const RelStructure& b, int m,
                                       bool augment_identity) {
  KleisliMorphism f;
  f.n = psi.n;
  f.k = psi.k;
  f.m = m;
  f.source = augment_identity ? with_identity(a) : a;
  f.target = augment_identity ? with_identity(b) : b;
  for (const auto& t : all_structured_histories(a.size(), psi.n, psi.k, m)) {
    auto it = psi.respond.find(t);
    if (it == psi.respond.end())
      throw PreconditionError("morphism_from_strategy: strategy lacks a response");
    for (int e = 0; e < a.size(); ++e)
      f.table[ClassId{t, e}] = it->second[static_cast<size_t>(e)];
  }
  return f;
}

NKStrategy strategy_from_morphism(const KleisliMorphism& f) {
  NKStrategy psi;
  psi.n = f.n;
  psi.k = f.k;
  psi.depth = f.m;
  for (const auto& [c, target] : f.table) {
    auto& resp = psi.respond[c.history];
    if (resp.empty()) resp.assign(static_cast<size_t>(f.source.size()), -1);
    resp[static_cast<size_t>(c.element)] = target;
  }
  return psi;
}

NKStrategy nkstrategy_from_positional(const PositionalStrategy& strat,
                                      const RelStructure& a,
                                      const RelStructure& b, int depth) {
  const GameVariant v = strat.grade;
  NKStrategy psi;
  psi.n = v.n;
  psi.k = v.k;
  psi.depth = depth;
  const int asize = a.size();
  const int bsize = b.size();
  auto choice_at = [&](const std::vector<int>& pos) -> const std::vector<int>& {
    auto it = strat.choice.find(encode_map(pos, bsize));
    if (it == strat.choice.end())
      throw PreconditionError(
          "nkstrategy_from_positional: no choice at a reached position");
    return it->second;
  };
  for (const auto& t : all_structured_histories(asize, v.n, v.k, depth)) {
    std::vector<std::pair<int, int>> peb(static_cast<size_t>(v.k), {-1, -1});
    auto position = [&]() {
      std::vector<int> pos(static_cast<size_t>(asize), -1);
      for (const auto& [ae, be] : peb) {
        if (ae < 0) continue;
        if (pos[static_cast<size_t>(ae)] >= 0 &&
            pos[static_cast<size_t>(ae)] != be)
          throw PreconditionError(
              "nkstrategy_from_positional: inconsistent replay");
        pos[static_cast<size_t>(ae)] = be;
      }
      return pos;
    };
    for (const auto& blk : t) {
      const std::vector<int>& phi = choice_at(position());
      for (const auto& mv : blk)
        peb[static_cast<size_t>(mv.peb - 1)] = {mv.elem,
                                                phi[static_cast<size_t>(mv.elem)]};
    }
    psi.respond[t] = choice_at(position());
  }
  return psi;
}

HomReport verify_kleisli_morphism(const KleisliMorphism& f,
                                  std::uint64_t guard) {
  HomReport rep;
  if (!(f.source.sig == f.target.sig))
    throw PreconditionError("verify_kleisli_morphism: signature mismatch");
  std::vector<ClassId> universe;
  universe.reserve(f.table.size());
  for (const auto& [c, unused] : f.table) universe.push_back(c);
  hnk_relation_tuples(
      f.source, f.n, f.k, f.m, universe,
      [&](int r, const std::vector<int>& tup) {
        if (!rep.ok) return;
        std::vector<int> img;
        for (int i : tup)
          img.push_back(f.table.at(universe[static_cast<size_t>(i)]));
        if (!f.target.has_tuple(r, img)) {
          rep.ok = false;
          rep.witness = "relation " + f.source.sig.relations[static_cast<size_t>(r)].name +
                        " not preserved at class " +
                        nkhistory_key(universe[static_cast<size_t>(tup[0])].history);
        }
      },
      guard);
  return rep;
}

MorphismClass classify_morphism(const KleisliMorphism& f) {
  MorphismClass out;
  out.depth = f.m;
  const int asize = f.source.size();
  const int bsize = f.target.size();

  // Branch maps, grouped by history.
  std::map<NKHistory, std::vector<int>> branches;
  for (const auto& [c, target] : f.table) {
    auto& br = branches[c.history];
    if (br.empty()) br.assign(static_cast<size_t>(asize), -1);
    br[static_cast<size_t>(c.element)] = target;
  }
  for (const auto& [t, br] : branches) {
    std::vector<int> hit(static_cast<size_t>(bsize), 0);
    bool inj = true;
    for (int x : br) {
      if (x < 0) throw PreconditionError("classify_morphism: partial table");
      if (hit[static_cast<size_t>(x)]++) inj = false;
    }
    bool surj = std::all_of(hit.begin(), hit.end(), [](int h) { return h > 0; });
    out.branch_injective = out.branch_injective && inj;
    out.branch_surjective = out.branch_surjective && surj;
    out.branch_bijective = out.branch_bijective && inj && surj;
  }

  // Strong: every play along the branch maps keeps a partial isomorphism.
  for (const auto& [t, unused] : branches) {
    if (!out.strong) break;
    std::vector<std::pair<int, int>> peb(static_cast<size_t>(f.k), {-1, -1});
    NKHistory sofar;
    for (const auto& blk : t) {
      const auto& phi = branches.at(sofar);
      for (const auto& mv : blk)
        peb[static_cast<size_t>(mv.peb - 1)] = {mv.elem,
                                                phi[static_cast<size_t>(mv.elem)]};
      sofar.push_back(blk);
      PartialHom pos = PartialHom::empty(f.source, f.target, true);
      bool consistent = true, injective = true;
      std::vector<int> preimage(static_cast<size_t>(bsize), -1);
      for (const auto& [ae, be] : peb) {
        if (ae < 0) continue;
        if (pos.map[static_cast<size_t>(ae)] >= 0 &&
            pos.map[static_cast<size_t>(ae)] != be)
          consistent = false;
        pos.map[static_cast<size_t>(ae)] = be;
        if (preimage[static_cast<size_t>(be)] >= 0 &&
            preimage[static_cast<size_t>(be)] != ae)
          injective = false;
        preimage[static_cast<size_t>(be)] = ae;
      }
      if (!consistent || !injective || !is_partial_hom(pos)) {
        out.strong = false;
        break;
      }
    }
  }
  return out;
}

bool kleisli_iso_check(const RelStructure& a, const RelStructure& b, int n,
                       int k) {
  return duplicator_wins_committed(a, b, GameVariant{n, k, true, true, true});
}

}  // namespace gqc
