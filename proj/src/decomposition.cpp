#include "gqc/decomposition.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace gqc {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Tree helpers.
// ---------------------------------------------------------------------------

namespace {

// Root index, or -1 with an error pushed when the parent links are broken.
int tree_root(const std::vector<int>& parent, std::vector<std::string>* errors) {
  const int sz = static_cast<int>(parent.size());
  int root = -1;
  for (int i = 0; i < sz; ++i) {
    if (parent[i] == -1) {
      if (root >= 0) {
        if (errors) errors->push_back("multiple roots");
        return -1;
      }
      root = i;
    } else if (parent[i] < 0 || parent[i] >= sz) {
      if (errors) errors->push_back("parent index out of range");
      return -1;
    }
  }
  if (root < 0) {
    if (errors) errors->push_back(sz == 0 ? "empty tree" : "no root (cycle)");
    return -1;
  }
  // Every node must reach the root.
  for (int i = 0; i < sz; ++i) {
    int cur = i, steps = 0;
    while (cur != root) {
      cur = parent[cur];
      if (++steps > sz) {
        if (errors) errors->push_back("cycle in parent links");
        return -1;
      }
    }
  }
  return root;
}

bool is_ancestor(const std::vector<int>& parent, int anc, int node) {
  for (int cur = node; cur != -1; cur = parent[cur])
    if (cur == anc) return true;
  return false;
}

std::vector<std::vector<int>> children_of(const std::vector<int>& parent) {
  std::vector<std::vector<int>> ch(parent.size());
  for (size_t i = 0; i < parent.size(); ++i)
    if (parent[i] >= 0) ch[static_cast<size_t>(parent[i])].push_back(static_cast<int>(i));
  return ch;
}

// Nodes ordered root-first (every node after its parent).
std::vector<int> topo_order(const std::vector<int>& parent, int root) {
  std::vector<int> order{root};
  auto ch = children_of(parent);
  for (size_t i = 0; i < order.size(); ++i)
    for (int c : ch[static_cast<size_t>(order[i])]) order.push_back(c);
  return order;
}

void check_bag_ids(const RelStructure& a,
                   const std::vector<std::set<int>>& bags,
                   std::vector<std::string>& errors) {
  for (const auto& bag : bags)
    for (int e : bag)
      if (e < 0 || e >= a.size()) {
        errors.push_back("bag element out of range");
        return;
      }
}

// Shared tree-decomposition conditions over arbitrary bags B.
void check_td_conditions(const RelStructure& a, const std::vector<int>& parent,
                         const std::vector<std::set<int>>& bags,
                         std::vector<std::string>& errors) {
  const int sz = static_cast<int>(parent.size());
  // Coverage.
  for (int e = 0; e < a.size(); ++e) {
    bool found = false;
    for (const auto& bag : bags)
      if (bag.count(e)) found = true;
    if (!found)
      errors.push_back("element " + a.universe[static_cast<size_t>(e)] +
                       " not covered");
  }
  // Every relation tuple inside some bag.
  for (size_t r = 0; r < a.sig.relations.size(); ++r)
    for (const auto& tup : a.tuples[r]) {
      bool found = false;
      for (const auto& bag : bags) {
        bool inside = true;
        for (int e : tup)
          if (!bag.count(e)) inside = false;
        if (inside) found = true;
      }
      if (!found)
        errors.push_back("tuple of " + a.sig.relations[r].name +
                         " not inside any bag");
    }
  // Connectivity: exactly one node per occurring element whose parent does
  // not contain it.
  for (int e = 0; e < a.size(); ++e) {
    int tops = 0, occ = 0;
    for (int i = 0; i < sz; ++i) {
      if (!bags[static_cast<size_t>(i)].count(e)) continue;
      ++occ;
      if (parent[i] == -1 || !bags[static_cast<size_t>(parent[i])].count(e))
        ++tops;
    }
    if (occ > 0 && tops != 1)
      errors.push_back("element " + a.universe[static_cast<size_t>(e)] +
                       " occupies a disconnected set of nodes");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Validators.
// ---------------------------------------------------------------------------

TdReport validate_td(const RelStructure& a, const TreeDecomposition& t) {
  TdReport rep;
  if (t.bags.size() != t.parent.size()) {
    rep.valid = false;
    rep.errors.push_back("bag count differs from node count");
    return rep;
  }
  int root = tree_root(t.parent, &rep.errors);
  check_bag_ids(a, t.bags, rep.errors);
  if (root >= 0 && rep.errors.empty())
    check_td_conditions(a, t.parent, t.bags, rep.errors);
  rep.valid = rep.errors.empty();
  if (rep.valid) {
    size_t mx = 0;
    for (const auto& bag : t.bags) mx = std::max(mx, bag.size());
    rep.width = static_cast<int>(mx) - 1;
  }
  return rep;
}

namespace {

std::vector<std::set<int>> etd_B(const ExtendedTreeDecomposition& d) {
  std::vector<std::set<int>> b(d.beta.size());
  for (size_t i = 0; i < d.beta.size(); ++i) {
    b[i] = d.beta[i];
    b[i].insert(d.gamma[i].begin(), d.gamma[i].end());
  }
  return b;
}

}  // namespace

EtdReport validate_etd(const RelStructure& a,
                       const ExtendedTreeDecomposition& d) {
  EtdReport rep;
  if (d.beta.size() != d.parent.size() || d.gamma.size() != d.parent.size()) {
    rep.valid = false;
    rep.errors.push_back("bag count differs from node count");
    return rep;
  }
  int root = tree_root(d.parent, &rep.errors);
  check_bag_ids(a, d.beta, rep.errors);
  check_bag_ids(a, d.gamma, rep.errors);
  auto b = etd_B(d);
  if (root >= 0 && rep.errors.empty()) {
    check_td_conditions(a, d.parent, b, rep.errors);
    // Floating condition: gamma(t) elements only reappear below t.
    const int sz = d.size();
    for (int t = 0; t < sz && rep.errors.empty(); ++t)
      for (int e : d.gamma[static_cast<size_t>(t)])
        for (int t2 = 0; t2 < sz; ++t2)
          if (b[static_cast<size_t>(t2)].count(e) &&
              !is_ancestor(d.parent, t, t2)) {
            rep.errors.push_back(
                "floating element " + a.universe[static_cast<size_t>(e)] +
                " reappears outside the subtree of its node");
            t2 = sz;
            break;
          }
  }
  rep.valid = rep.errors.empty();
  if (!rep.valid) return rep;

  for (const auto& bag : d.beta)
    rep.width = std::max(rep.width, static_cast<int>(bag.size()));
  // Arity clause 1: fixed/floating overlaps along strict ancestries.
  const int sz = d.size();
  for (int t = 0; t < sz; ++t)
    for (int t2 = 0; t2 < sz; ++t2) {
      if (t == t2 || !is_ancestor(d.parent, t, t2)) continue;
      int ov = 0;
      for (int e : d.beta[static_cast<size_t>(t2)])
        if (d.gamma[static_cast<size_t>(t)].count(e)) ++ov;
      rep.arity = std::max(rep.arity, ov);
    }
  // Arity clause 2: per tuple, the best witnessing node.
  for (size_t r = 0; r < a.sig.relations.size(); ++r)
    for (const auto& tup : a.tuples[r]) {
      std::set<int> elems(tup.begin(), tup.end());
      int best = a.size() + 1;
      for (int t = 0; t < sz; ++t) {
        bool inside = true;
        for (int e : elems)
          if (!b[static_cast<size_t>(t)].count(e)) inside = false;
        if (!inside) continue;
        int ov = 0;
        for (int e : elems)
          if (d.gamma[static_cast<size_t>(t)].count(e)) ++ov;
        best = std::min(best, ov);
      }
      rep.arity = std::max(rep.arity, best);
    }
  return rep;
}

bool etd_structured(const RelStructure& a, const ExtendedTreeDecomposition& d,
                    int n, int k, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int sz = d.size();
  for (int e = 0; e < a.size(); ++e) {
    bool found = false;
    for (const auto& g : d.gamma)
      if (g.count(e)) found = true;
    if (!found)
      return fail("element " + a.universe[static_cast<size_t>(e)] +
                  " floats nowhere");
  }
  for (int t = 0; t < sz; ++t)
    if (d.gamma[static_cast<size_t>(t)].empty())
      return fail("empty floating bag at node " + std::to_string(t));
  auto ch = children_of(d.parent);
  for (int t = 0; t < sz; ++t)
    for (int c : ch[static_cast<size_t>(t)]) {
      int ov = 0;
      for (int e : d.beta[static_cast<size_t>(c)])
        if (d.gamma[static_cast<size_t>(t)].count(e)) ++ov;
      if (ov == 0)
        return fail("child " + std::to_string(c) +
                    " has no fixed element floated by its parent");
      for (int cc : ch[static_cast<size_t>(c)]) {
        if (ov == n) continue;
        if (static_cast<int>(d.beta[static_cast<size_t>(c)].size()) < k)
          continue;
        bool dropped = false;
        for (int e : d.beta[static_cast<size_t>(c)])
          if (d.gamma[static_cast<size_t>(t)].count(e) &&
              !d.beta[static_cast<size_t>(cc)].count(e))
            dropped = true;
        if (!dropped)
          return fail("chain " + std::to_string(t) + " < " +
                      std::to_string(c) + " < " + std::to_string(cc) +
                      " violates the structured disjunction");
      }
    }
  return true;
}

// ---------------------------------------------------------------------------
// TD <-> ETD.
// ---------------------------------------------------------------------------

ExtendedTreeDecomposition td_to_etd(const RelStructure& a,
                                    const TreeDecomposition& t, int k) {
  TdReport check = validate_td(a, t);
  if (!check.valid)
    throw ValidationError("td_to_etd: invalid input decomposition: " +
                          check.errors.front());
  if (check.width > k)
    throw ValidationError("td_to_etd: width exceeds k");
  if (k < 1) throw ValidationError("td_to_etd: k >= 1 required");

  // Small structures collapse to a single node.
  if (a.size() <= k) {
    ExtendedTreeDecomposition out;
    out.parent = {-1};
    std::set<int> all;
    for (int e = 0; e < a.size(); ++e) all.insert(e);
    if (all.empty()) throw ValidationError("td_to_etd: empty structure");
    int cr = *all.begin();
    all.erase(cr);
    out.beta = {all};
    out.gamma = {{cr}};
    return out;
  }

  std::vector<int> parent = t.parent;
  std::vector<std::set<int>> bag = t.bags;
  const size_t K = static_cast<size_t>(k) + 1;

  // Normalize: contract comparable bags, pad small bags from a neighbour,
  // then split low-overlap edges into single-swap chains.
  auto contract = [&]() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < parent.size(); ++i) {
        int p = parent[i];
        if (p < 0) continue;
        const auto& bi = bag[i];
        const auto& bp = bag[static_cast<size_t>(p)];
        bool i_in_p = std::includes(bp.begin(), bp.end(), bi.begin(), bi.end());
        bool p_in_i = std::includes(bi.begin(), bi.end(), bp.begin(), bp.end());
        if (!i_in_p && !p_in_i) continue;
        // Merge node i into its parent.
        if (p_in_i) bag[static_cast<size_t>(p)] = bi;
        for (size_t j = 0; j < parent.size(); ++j)
          if (parent[j] == static_cast<int>(i)) parent[j] = p;
        parent.erase(parent.begin() + static_cast<long>(i));
        bag.erase(bag.begin() + static_cast<long>(i));
        for (auto& pp : parent)
          if (pp > static_cast<int>(i)) --pp;
        changed = true;
        break;
      }
    }
  };

  contract();
  // Pad every bag to exactly K elements, borrowing from the parent (or, at
  // the root, from a child). Borrowing keeps occupation subtrees connected.
  bool padded = true;
  while (padded) {
    padded = false;
    for (size_t i = 0; i < parent.size(); ++i) {
      if (bag[i].size() >= K) continue;
      int donor = parent[i];
      if (donor < 0)
        for (size_t j = 0; j < parent.size(); ++j)
          if (parent[j] == static_cast<int>(i)) donor = static_cast<int>(j);
      if (donor < 0) {
        // Lone node: take arbitrary fresh elements (subtree trivially
        // connected with a single node).
        for (int e = 0; e < a.size() && bag[i].size() < K; ++e) bag[i].insert(e);
      } else {
        for (int e : bag[static_cast<size_t>(donor)]) {
          if (bag[i].size() >= K) break;
          bag[i].insert(e);
        }
      }
      padded = true;
      contract();
      break;
    }
  }

  // Split parent-child edges until every overlap is exactly k.
  for (size_t i = 0; i < parent.size(); ++i) {
    int p = parent[i];
    if (p < 0) continue;
    std::vector<int> only_child, only_parent;
    for (int e : bag[i])
      if (!bag[static_cast<size_t>(p)].count(e)) only_child.push_back(e);
    for (int e : bag[static_cast<size_t>(p)])
      if (!bag[i].count(e)) only_parent.push_back(e);
    while (only_child.size() > 1) {
      // Intermediate node: parent's bag with one swap toward the child.
      std::set<int> mid = bag[static_cast<size_t>(p)];
      mid.erase(only_parent.back());
      only_parent.pop_back();
      mid.insert(only_child.back());
      only_child.pop_back();
      parent.push_back(p);
      bag.push_back(std::move(mid));
      p = static_cast<int>(parent.size()) - 1;
      parent[i] = p;
    }
  }

  // Sibling-class quotient.
  int root = tree_root(parent, nullptr);
  if (root < 0) throw PreconditionError("td_to_etd: normalization broke tree");
  std::vector<int> node_class(parent.size(), -1);
  ExtendedTreeDecomposition out;
  std::vector<int> class_rep;  // representative original node per class

  // Root class.
  node_class[static_cast<size_t>(root)] = 0;
  out.parent.push_back(-1);
  {
    std::set<int> beta = bag[static_cast<size_t>(root)];
    int cr = *beta.begin();
    beta.erase(cr);
    out.beta.push_back(std::move(beta));
    out.gamma.push_back({cr});
    class_rep.push_back(root);
  }

  for (int v : topo_order(parent, root)) {
    if (v == root) continue;
    int p = parent[static_cast<size_t>(v)];
    std::set<int> overlap;
    for (int e : bag[static_cast<size_t>(v)])
      if (bag[static_cast<size_t>(p)].count(e)) overlap.insert(e);
    // Find an existing sibling class with the same parent and overlap.
    int cls = -1;
    for (size_t j = 0; j < parent.size(); ++j)
      if (node_class[j] >= 0 && parent[j] == p &&
          out.beta[static_cast<size_t>(node_class[j])] == overlap &&
          out.parent[static_cast<size_t>(node_class[j])] ==
              node_class[static_cast<size_t>(p)])
        cls = node_class[j];
    if (cls < 0) {
      cls = static_cast<int>(out.parent.size());
      out.parent.push_back(node_class[static_cast<size_t>(p)]);
      out.beta.push_back(overlap);
      out.gamma.push_back({});
      class_rep.push_back(v);
    }
    node_class[static_cast<size_t>(v)] = cls;
    for (int e : bag[static_cast<size_t>(v)])
      if (!overlap.count(e)) out.gamma[static_cast<size_t>(cls)].insert(e);
  }
  return out;
}

TreeDecomposition etd_to_td(const RelStructure& a,
                            const ExtendedTreeDecomposition& d) {
  EtdReport check = validate_etd(a, d);
  if (!check.valid)
    throw ValidationError("etd_to_td: invalid input decomposition: " +
                          check.errors.front());
  if (check.arity > 1) throw ValidationError("etd_to_td: arity exceeds 1");

  TreeDecomposition out;
  const int sz = d.size();
  std::vector<int> hub(static_cast<size_t>(sz), -1);
  std::vector<std::map<int, int>> leaf(static_cast<size_t>(sz));
  int root = tree_root(d.parent, nullptr);
  for (int v : topo_order(d.parent, root)) {
    // Hub attaches under the parent leaf sharing beta(v) ∩ gamma(parent),
    // or under the parent hub when that overlap is empty.
    int attach = -1;
    int p = d.parent[static_cast<size_t>(v)];
    if (p >= 0) {
      int g = -1;
      for (int e : d.beta[static_cast<size_t>(v)])
        if (d.gamma[static_cast<size_t>(p)].count(e)) g = e;
      attach = g < 0 ? hub[static_cast<size_t>(p)]
                     : leaf[static_cast<size_t>(p)].at(g);
    }
    hub[static_cast<size_t>(v)] = static_cast<int>(out.parent.size());
    out.parent.push_back(attach);
    out.bags.push_back(d.beta[static_cast<size_t>(v)]);
    for (int g : d.gamma[static_cast<size_t>(v)]) {
      std::set<int> bag = d.beta[static_cast<size_t>(v)];
      bag.insert(g);
      leaf[static_cast<size_t>(v)][g] = static_cast<int>(out.parent.size());
      out.parent.push_back(hub[static_cast<size_t>(v)]);
      out.bags.push_back(std::move(bag));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coalgebra laws.
// ---------------------------------------------------------------------------

CoalgebraReport check_coalgebra_laws(const Coalgebra& alpha,
                                     std::uint64_t guard) {
  CoalgebraReport rep;
  const RelStructure& a = alpha.base;
  const int n = alpha.n, k = alpha.k;
  if (n < 1 || n > k) {
    rep.comult = false;
    rep.violation = "grade requires 1 <= n <= k";
    return rep;
  }
  if (static_cast<int>(alpha.assignment.size()) != a.size()) {
    rep.counit = false;
    rep.violation = "assignment size differs from universe";
    return rep;
  }
  for (int e = 0; e < a.size(); ++e) {
    const NKHistory& s = alpha.assignment[static_cast<size_t>(e)];
    if (!is_structured(s, n, k)) {
      rep.comult = false;
      rep.violation =
          "history of " + a.universe[static_cast<size_t>(e)] + " not structured";
      return rep;
    }
    for (const auto& blk : s) {
      if (!is_basic(blk, n)) {
        rep.comult = false;
        rep.violation =
            "history of " + a.universe[static_cast<size_t>(e)] + " has a non-basic block";
        return rep;
      }
      for (const auto& mv : blk)
        if (mv.elem < 0 || mv.elem >= a.size() || mv.peb < 1 || mv.peb > k) {
          rep.comult = false;
          rep.violation = "history of " + a.universe[static_cast<size_t>(e)] +
                          " references an invalid move";
          return rep;
        }
    }
  }

  // Comultiplication, elementwise over a shared pool.
  ClassPool pool;
  auto cls = [&](int e) {
    return ClassId{alpha.assignment[static_cast<size_t>(e)], e};
  };
  for (int e = 0; e < a.size() && rep.comult; ++e) {
    ClassId rhs = hcomult(cls(e), n, k, pool);
    ClassId lhs;
    for (const auto& blk : alpha.assignment[static_cast<size_t>(e)]) {
      BasicBlock nb;
      for (const auto& mv : blk)
        nb.push_back(Move{pool.intern(cls(mv.elem)), mv.peb});
      lhs.history.push_back(std::move(nb));
    }
    lhs.element = pool.intern(cls(e));
    if (!(lhs == rhs)) {
      rep.comult = false;
      rep.violation = "comultiplication law fails at " +
                      a.universe[static_cast<size_t>(e)];
    }
  }
  if (!rep.comult) return rep;

  // Homomorphism into the lifted relations (exact per-tuple test).
  std::uint64_t work = 0;
  for (size_t r = 0; r < a.sig.relations.size() && rep.hom; ++r)
    for (const auto& tup : a.tuples[r]) {
      if (++work > guard)
        throw ResourceGuardError("check_coalgebra_laws: work exceeds bound");
      std::vector<ClassId> img;
      for (int e : tup) img.push_back(cls(e));
      if (!class_tuple_related(a, n, k, static_cast<int>(r), img)) {
        rep.hom = false;
        std::string names;
        for (int e : tup) names += " " + a.universe[static_cast<size_t>(e)];
        rep.violation = "image of " + a.sig.relations[r].name + " tuple" +
                        names + " not related";
        break;
      }
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Coalgebra -> ETD.
// ---------------------------------------------------------------------------

ExtendedTreeDecomposition coalgebra_to_etd(const Coalgebra& alpha) {
  CoalgebraReport rep = check_coalgebra_laws(alpha);
  if (!rep.ok())
    throw ValidationError("coalgebra_to_etd: laws fail: " + rep.violation);
  const RelStructure& a = alpha.base;

  // Prefix closure of the assigned histories.
  std::set<NKHistory> nodes;
  for (const auto& s : alpha.assignment) {
    NKHistory pref;
    nodes.insert(pref);
    for (const auto& blk : s) {
      pref.push_back(blk);
      nodes.insert(pref);
    }
  }
  std::vector<NKHistory> order(nodes.begin(), nodes.end());
  std::sort(order.begin(), order.end(),
            [](const NKHistory& x, const NKHistory& y) {
              if (x.size() != y.size()) return x.size() < y.size();
              return x < y;
            });
  std::map<NKHistory, int> index;
  for (size_t i = 0; i < order.size(); ++i)
    index[order[i]] = static_cast<int>(i);

  ExtendedTreeDecomposition out;
  for (const auto& s : order) {
    if (s.empty()) {
      out.parent.push_back(-1);
    } else {
      NKHistory pref(s.begin(), s.end() - 1);
      out.parent.push_back(index.at(pref));
    }
    // Fixed bag: elements whose class is a per-pebble maximal prefix class.
    std::set<ClassId> beta_classes;
    KHistory flat = flatten(s);
    for (int p = 1; p <= alpha.k; ++p) {
      int last = -1;
      for (size_t i = 0; i < flat.size(); ++i)
        if (flat[i].peb == p) last = static_cast<int>(i);
      if (last < 0) continue;
      KHistory pref(flat.begin(), flat.begin() + last + 1);
      beta_classes.insert(class_of(pref, alpha.n));
    }
    std::set<int> beta, gamma;
    for (int e = 0; e < a.size(); ++e) {
      ClassId ce{alpha.assignment[static_cast<size_t>(e)], e};
      if (beta_classes.count(ce)) beta.insert(e);
      if (alpha.assignment[static_cast<size_t>(e)] == s) gamma.insert(e);
    }
    out.beta.push_back(std::move(beta));
    out.gamma.push_back(std::move(gamma));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ETD -> coalgebra.
// ---------------------------------------------------------------------------

Coalgebra etd_to_coalgebra(const RelStructure& a,
                           const ExtendedTreeDecomposition& d, int n, int k) {
  EtdReport check = validate_etd(a, d);
  if (!check.valid)
    throw ValidationError("etd_to_coalgebra: invalid decomposition: " +
                          check.errors.front());
  if (check.width > k)
    throw ValidationError("etd_to_coalgebra: width exceeds k");
  if (check.arity > n)
    throw ValidationError("etd_to_coalgebra: arity exceeds n");
  std::string why;
  if (!etd_structured(a, d, n, k, &why))
    throw ValidationError("etd_to_coalgebra: not structured: " + why);
  const int sz = d.size();
  for (int t = 0; t < sz; ++t)
    for (int e : d.beta[static_cast<size_t>(t)])
      if (d.gamma[static_cast<size_t>(t)].count(e))
        throw ValidationError(
            "etd_to_coalgebra: fixed and floating bags overlap at node " +
            std::to_string(t));
  int root = tree_root(d.parent, nullptr);
  if (!d.beta[static_cast<size_t>(root)].empty())
    throw ValidationError("etd_to_coalgebra: root fixed bag must be empty");

  // First pass, root-first: the block and index table per node. New elements
  // take free indices; the first one reuses a parent-block index when the
  // parent block is short of n. Blocks are then padded to length n by
  // repeating their last element on spare indices, which keeps every other
  // index live in longer realizations (short blocks force any continuation
  // of the same class to reuse the block's own indices).
  std::vector<BasicBlock> block(static_cast<size_t>(sz));
  std::vector<std::map<int, int>> iota(static_cast<size_t>(sz));

  for (int c : topo_order(d.parent, root)) {
    if (c == root) continue;
    const int cp = d.parent[static_cast<size_t>(c)];
    std::set<int> N, R;
    for (int e : d.beta[static_cast<size_t>(c)]) {
      if (d.gamma[static_cast<size_t>(cp)].count(e))
        N.insert(e);
      else if (d.beta[static_cast<size_t>(cp)].count(e))
        R.insert(e);
      else
        throw ValidationError(
            "etd_to_coalgebra: fixed element not drawn from the parent bag");
    }
    auto& ic = iota[static_cast<size_t>(c)];
    for (int e : R) ic[e] = iota[static_cast<size_t>(cp)].at(e);
    std::set<int> used;
    for (auto& [e, i] : ic) used.insert(i);

    // When the parent block is short, this block must start with one of its
    // indices. Padding makes that rare: it only happens when the parent had
    // no spare index left, in which case a dropped element donates its index.
    int forced = 0;
    if (cp != root) {
      const auto& pb = block[static_cast<size_t>(cp)];
      if (static_cast<int>(pb.size()) < n) {
        for (const auto& mv : pb)
          if (!used.count(mv.peb) && (forced == 0 || mv.peb < forced))
            forced = mv.peb;
        if (forced == 0)
          throw PreconditionError(
              "etd_to_coalgebra: structured conditions left no index");
      }
    }

    auto& bc = block[static_cast<size_t>(c)];
    bool first = true;
    for (int e : N) {
      int idx;
      if (first && forced != 0) {
        idx = forced;
      } else {
        idx = 0;
        for (int i = 1; i <= k; ++i)
          if (!used.count(i)) {
            idx = i;
            break;
          }
        if (idx == 0)
          throw PreconditionError("etd_to_coalgebra: ran out of indices");
      }
      used.insert(idx);
      ic[e] = idx;
      bc.push_back(Move{e, idx});
      first = false;
    }
    // Pad to a full block on spare indices.
    std::set<int> taken = used;
    for (const auto& mv : bc) taken.insert(mv.peb);
    while (static_cast<int>(bc.size()) < n) {
      int spare = 0;
      for (int i = 1; i <= k; ++i)
        if (!taken.count(i)) {
          spare = i;
          break;
        }
      if (spare == 0) break;
      taken.insert(spare);
      bc.push_back(Move{bc.back().elem, spare});
    }
  }

  // Second pass: histories along root paths, and the assignment through the
  // (unique) floating node of each element.
  std::vector<NKHistory> history(static_cast<size_t>(sz));
  for (int c : topo_order(d.parent, root)) {
    if (c == root) continue;
    history[static_cast<size_t>(c)] =
        history[static_cast<size_t>(d.parent[static_cast<size_t>(c)])];
    history[static_cast<size_t>(c)].push_back(block[static_cast<size_t>(c)]);
  }
  Coalgebra alpha;
  alpha.n = n;
  alpha.k = k;
  alpha.base = a;
  alpha.assignment.assign(static_cast<size_t>(a.size()), {});
  for (int t = 0; t < sz; ++t)
    for (int e : d.gamma[static_cast<size_t>(t)])
      alpha.assignment[static_cast<size_t>(e)] = history[static_cast<size_t>(t)];
  return alpha;
}

// ---------------------------------------------------------------------------
// Coalgebra search.
// ---------------------------------------------------------------------------

namespace {

struct SearchNode {
  int parent = -1;
  BasicBlock block;        // empty at the root
  NKHistory history;       // root path of blocks
  std::set<int> path_pebs;
  std::vector<int> gamma;  // elements floated here
  BasicBlock last_child;   // canonical lower bound for the next child block
  bool has_child = false;
};

}  // namespace

std::optional<Coalgebra> coalgebra_search(const RelStructure& a, int n, int k,
                                          std::uint64_t guard) {
  if (n < 1 || n > k)
    throw ValidationError("coalgebra_search: 1 <= n <= k required");
  if (a.size() == 0) throw ValidationError("coalgebra_search: empty structure");

  std::vector<SearchNode> nodes;
  std::vector<int> node_of(static_cast<size_t>(a.size()), -1);
  int unassigned = a.size();
  std::uint64_t work = 0;
  std::optional<Coalgebra> found;

  // Relation tuples that become fully assigned once the given elements are
  // placed must already be related in the lifted structure.
  auto tuples_ok = [&](const std::vector<int>& fresh) {
    std::set<int> touched(fresh.begin(), fresh.end());
    for (size_t r = 0; r < a.sig.relations.size(); ++r)
      for (const auto& tup : a.tuples[r]) {
        bool touches = false, total = true;
        for (int e : tup) {
          if (touched.count(e)) touches = true;
          if (node_of[static_cast<size_t>(e)] < 0) total = false;
        }
        if (!touches || !total) continue;
        std::vector<ClassId> img;
        for (int e : tup)
          img.push_back(ClassId{
              nodes[static_cast<size_t>(node_of[static_cast<size_t>(e)])].history,
              e});
        if (!class_tuple_related(a, n, k, static_cast<int>(r), img))
          return false;
      }
    return true;
  };

  auto finalize = [&]() {
    Coalgebra alpha;
    alpha.n = n;
    alpha.k = k;
    alpha.base = a;
    alpha.assignment.assign(static_cast<size_t>(a.size()), {});
    for (int e = 0; e < a.size(); ++e)
      alpha.assignment[static_cast<size_t>(e)] =
          nodes[static_cast<size_t>(node_of[static_cast<size_t>(e)])].history;
    if (!check_coalgebra_laws(alpha).ok()) return false;
    found = std::move(alpha);
    return true;
  };

  // Candidate child blocks of node v: basic blocks over its floating
  // elements, pebble labels canonical along the root path, junction against
  // the node's own block.
  auto candidate_blocks = [&](int v) {
    const SearchNode& node = nodes[static_cast<size_t>(v)];
    std::vector<BasicBlock> out;
    BasicBlock cur;
    std::set<int> pebs = node.path_pebs;
    std::function<void()> rec = [&]() {
      if (!cur.empty()) out.push_back(cur);
      if (static_cast<int>(cur.size()) >= n) return;
      int mx = 0;
      for (int p : pebs) mx = std::max(mx, p);
      for (int p = 1; p <= std::min(k, mx + 1); ++p) {
        bool in_block = false;
        for (const auto& mv : cur)
          if (mv.peb == p) in_block = true;
        if (in_block) continue;
        if (cur.empty() && node.parent != -1 &&
            static_cast<int>(node.block.size()) < n) {
          bool in_parent = false;
          for (const auto& mv : node.block)
            if (mv.peb == p) in_parent = true;
          if (!in_parent) continue;  // junction condition
        }
        bool fresh = !pebs.count(p);
        if (fresh) pebs.insert(p);
        for (int e : node.gamma) {
          cur.push_back(Move{e, p});
          rec();
          cur.pop_back();
        }
        if (fresh) pebs.erase(p);
      }
    };
    rec();
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  std::vector<int> open;  // rightmost path of nodes still accepting children

  std::function<bool()> step = [&]() -> bool {
    if (++work > guard)
      throw ResourceGuardError("coalgebra_search: work exceeds bound");
    if (unassigned == 0) {
      if (finalize()) return true;
      return false;
    }
    if (open.empty()) return false;
    const int v = open.back();

    // Close v for further children.
    open.pop_back();
    if (step()) return true;
    open.push_back(v);

    // Or attach one more child, with a block above the previous one.
    std::vector<int> remaining;
    for (int e = 0; e < a.size(); ++e)
      if (node_of[static_cast<size_t>(e)] < 0) remaining.push_back(e);
    for (const BasicBlock& blk : candidate_blocks(v)) {
      if (nodes[static_cast<size_t>(v)].has_child &&
          !(nodes[static_cast<size_t>(v)].last_child < blk))
        continue;
      for (std::uint64_t mask = 1; mask < (1ull << remaining.size()); ++mask) {
        SearchNode child;
        child.parent = v;
        child.block = blk;
        child.history = nodes[static_cast<size_t>(v)].history;
        child.history.push_back(blk);
        child.path_pebs = nodes[static_cast<size_t>(v)].path_pebs;
        for (const auto& mv : blk) child.path_pebs.insert(mv.peb);
        std::vector<int> fresh;
        for (size_t i = 0; i < remaining.size(); ++i)
          if (mask & (1ull << i)) fresh.push_back(remaining[i]);
        const int w = static_cast<int>(nodes.size());
        child.gamma = fresh;
        bool saved_has = nodes[static_cast<size_t>(v)].has_child;
        BasicBlock saved_last = nodes[static_cast<size_t>(v)].last_child;
        nodes[static_cast<size_t>(v)].has_child = true;
        nodes[static_cast<size_t>(v)].last_child = blk;
        nodes.push_back(std::move(child));
        for (int e : fresh) node_of[static_cast<size_t>(e)] = w;
        unassigned -= static_cast<int>(fresh.size());
        open.push_back(w);
        bool hit = tuples_ok(fresh) && step();
        open.pop_back();
        unassigned += static_cast<int>(fresh.size());
        for (int e : fresh) node_of[static_cast<size_t>(e)] = -1;
        nodes.pop_back();
        nodes[static_cast<size_t>(v)].has_child = saved_has;
        nodes[static_cast<size_t>(v)].last_child = saved_last;
        if (hit) return true;
      }
    }
    return false;
  };

  // Root with every choice of floated elements.
  std::vector<int> all;
  for (int e = 0; e < a.size(); ++e) all.push_back(e);
  for (std::uint64_t mask = 1; mask < (1ull << all.size()); ++mask) {
    SearchNode rootnode;
    rootnode.parent = -1;
    for (size_t i = 0; i < all.size(); ++i)
      if (mask & (1ull << i)) rootnode.gamma.push_back(all[i]);
    nodes.clear();
    nodes.push_back(rootnode);
    std::fill(node_of.begin(), node_of.end(), -1);
    for (int e : rootnode.gamma) node_of[static_cast<size_t>(e)] = 0;
    unassigned = a.size() - static_cast<int>(rootnode.gamma.size());
    open.assign(1, 0);
    if (tuples_ok(rootnode.gamma) && step()) return found;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Treewidth.
// ---------------------------------------------------------------------------

int treewidth_oracle(const RelStructure& a, std::uint64_t guard) {
  const int sz = a.size();
  if (sz == 0) return -1;
  if ((1ull << sz) > guard)
    throw ResourceGuardError("treewidth_oracle: structure too large");
  auto adj = gaifman_graph(a);

  // q(W, v): neighbours of v outside W reachable from v through W.
  auto q = [&](std::uint32_t w, int v) {
    std::vector<bool> seen(static_cast<size_t>(sz), false);
    std::vector<int> stack{v};
    seen[static_cast<size_t>(v)] = true;
    int count = 0;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (int y = 0; y < sz; ++y) {
        if (!adj[static_cast<size_t>(x)][static_cast<size_t>(y)] ||
            seen[static_cast<size_t>(y)])
          continue;
        seen[static_cast<size_t>(y)] = true;
        if (w & (1u << y))
          stack.push_back(y);
        else if (y != v)
          ++count;
      }
    }
    return count;
  };

  std::vector<int> f(1u << sz, 0);
  for (std::uint32_t s = 1; s < (1u << sz); ++s) {
    int best = sz;
    for (int v = 0; v < sz; ++v) {
      if (!(s & (1u << v))) continue;
      std::uint32_t rest = s & ~(1u << v);
      best = std::min(best, std::max(f[rest], q(rest, v)));
    }
    f[s] = best;
  }
  return f[(1u << sz) - 1];
}

// ---------------------------------------------------------------------------
// The canonical decomposition of the truncated H_{n,k}.
// ---------------------------------------------------------------------------

HnkDecomposition etd_of_Hnk(const RelStructure& a, int n, int k, int m,
                            std::uint64_t guard) {
  HnkDecomposition out;
  out.h = build_Pm(a, n, k, m, guard);

  std::vector<NKHistory> order = all_structured_histories(a.size(), n, k, m);
  std::sort(order.begin(), order.end(),
            [](const NKHistory& x, const NKHistory& y) {
              if (x.size() != y.size()) return x.size() < y.size();
              return x < y;
            });
  std::map<NKHistory, int> index;
  for (size_t i = 0; i < order.size(); ++i)
    index[order[i]] = static_cast<int>(i);

  for (const auto& s : order) {
    if (s.empty()) {
      out.etd.parent.push_back(-1);
    } else {
      NKHistory pref(s.begin(), s.end() - 1);
      out.etd.parent.push_back(index.at(pref));
    }
    std::set<int> beta, gamma;
    KHistory flat = flatten(s);
    for (int p = 1; p <= k; ++p) {
      int last = -1;
      for (size_t i = 0; i < flat.size(); ++i)
        if (flat[i].peb == p) last = static_cast<int>(i);
      if (last < 0) continue;
      KHistory pref(flat.begin(), flat.begin() + last + 1);
      int idx = out.h.index_of(class_of(pref, n));
      if (idx < 0)
        throw PreconditionError("etd_of_Hnk: prefix class escaped truncation");
      beta.insert(idx);
    }
    for (int e = 0; e < a.size(); ++e) {
      int idx = out.h.index_of(ClassId{s, e});
      if (idx < 0)
        throw PreconditionError("etd_of_Hnk: floating class escaped truncation");
      gamma.insert(idx);
    }
    out.etd.beta.push_back(std::move(beta));
    out.etd.gamma.push_back(std::move(gamma));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

namespace {

json parse_doc(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

std::set<int> bag_from_json(const RelStructure& a, const json& arr,
                            const char* what) {
  if (!arr.is_array()) throw ValidationError(std::string(what) + ": bag must be an array");
  std::set<int> out;
  for (const auto& v : arr) out.insert(a.element_index(v.get<std::string>()));
  return out;
}

json bag_to_json(const RelStructure& a, const std::set<int>& bag) {
  json arr = json::array();
  for (int e : bag) arr.push_back(a.universe[static_cast<size_t>(e)]);
  return arr;
}

// Shared node-list layout: objects with id/parent plus per-kind bags.
template <typename Fn>
void nodes_from_json(const json& doc, const char* what, const Fn& fn) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
    throw ValidationError(std::string(what) + ": expected a nodes array");
  std::map<int, int> pos;  // external id -> position
  for (const auto& node : doc["nodes"]) {
    int id = node.at("id").get<int>();
    if (!pos.emplace(id, static_cast<int>(pos.size())).second)
      throw ValidationError(std::string(what) + ": duplicate node id");
  }
  for (const auto& node : doc["nodes"]) {
    int p = node.at("parent").get<int>();
    int pp = -1;
    if (p != -1) {
      auto it = pos.find(p);
      if (it == pos.end())
        throw ValidationError(std::string(what) + ": unknown parent id");
      pp = it->second;
    }
    fn(node, pp);
  }
}

}  // namespace

TreeDecomposition td_from_json(const RelStructure& a, const std::string& text) {
  json doc = parse_doc(text, "tree decomposition");
  TreeDecomposition t;
  nodes_from_json(doc, "tree decomposition", [&](const json& node, int parent) {
    t.parent.push_back(parent);
    t.bags.push_back(bag_from_json(a, node.at("bag"), "tree decomposition"));
  });
  return t;
}

std::string td_to_json(const RelStructure& a, const TreeDecomposition& t) {
  json nodes = json::array();
  for (int i = 0; i < t.size(); ++i)
    nodes.push_back({{"id", i},
                     {"parent", t.parent[static_cast<size_t>(i)]},
                     {"bag", bag_to_json(a, t.bags[static_cast<size_t>(i)])}});
  return json{{"nodes", nodes}}.dump(2);
}

ExtendedTreeDecomposition etd_from_json(const RelStructure& a,
                                        const std::string& text) {
  json doc = parse_doc(text, "extended tree decomposition");
  ExtendedTreeDecomposition d;
  nodes_from_json(doc, "extended tree decomposition",
                  [&](const json& node, int parent) {
                    d.parent.push_back(parent);
                    d.beta.push_back(bag_from_json(
                        a, node.at("beta"), "extended tree decomposition"));
                    d.gamma.push_back(bag_from_json(
                        a, node.at("gamma"), "extended tree decomposition"));
                  });
  return d;
}

std::string etd_to_json(const RelStructure& a,
                        const ExtendedTreeDecomposition& d) {
  json nodes = json::array();
  for (int i = 0; i < d.size(); ++i)
    nodes.push_back({{"id", i},
                     {"parent", d.parent[static_cast<size_t>(i)]},
                     {"beta", bag_to_json(a, d.beta[static_cast<size_t>(i)])},
                     {"gamma", bag_to_json(a, d.gamma[static_cast<size_t>(i)])}});
  return json{{"nodes", nodes}}.dump(2);
}

std::string etd_to_dot(const RelStructure& a,
                       const ExtendedTreeDecomposition& d) {
  std::ostringstream out;
  out << "digraph etd {\n  node [shape=record];\n";
  auto names = [&](const std::set<int>& bag) {
    std::string s;
    for (int e : bag) {
      if (!s.empty()) s += ",";
      s += a.universe[static_cast<size_t>(e)];
    }
    return s.empty() ? std::string("&empty;") : s;
  };
  for (int i = 0; i < d.size(); ++i)
    out << "  n" << i << " [label=\"{" << names(d.beta[static_cast<size_t>(i)])
        << "|" << names(d.gamma[static_cast<size_t>(i)]) << "}\"];\n";
  for (int i = 0; i < d.size(); ++i)
    if (d.parent[static_cast<size_t>(i)] != -1)
      out << "  n" << d.parent[static_cast<size_t>(i)] << " -> n" << i << ";\n";
  out << "}\n";
  return out.str();
}

Coalgebra coalgebra_from_json(const RelStructure& a, const std::string& text) {
  json doc = parse_doc(text, "coalgebra");
  Coalgebra alpha;
  alpha.base = a;
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("k") ||
      !doc.contains("assignment") || !doc["assignment"].is_object())
    throw ValidationError("coalgebra: expected n, k and an assignment object");
  alpha.n = doc["n"].get<int>();
  alpha.k = doc["k"].get<int>();
  alpha.assignment.assign(static_cast<size_t>(a.size()), {});
  std::set<int> seen;
  for (const auto& [name, hist] : doc["assignment"].items()) {
    int e = a.element_index(name);
    seen.insert(e);
    NKHistory s;
    for (const auto& blk : hist) {
      BasicBlock b;
      for (const auto& mv : blk) {
        if (!mv.is_array() || mv.size() != 2)
          throw ValidationError("coalgebra: move must be [element, pebble]");
        b.push_back(
            Move{a.element_index(mv[0].get<std::string>()), mv[1].get<int>()});
      }
      s.push_back(std::move(b));
    }
    alpha.assignment[static_cast<size_t>(e)] = std::move(s);
  }
  if (static_cast<int>(seen.size()) != a.size())
    throw ValidationError("coalgebra: assignment must cover every element");
  return alpha;
}

std::string coalgebra_to_json(const Coalgebra& alpha) {
  json asg = json::object();
  for (int e = 0; e < alpha.base.size(); ++e) {
    json hist = json::array();
    for (const auto& blk : alpha.assignment[static_cast<size_t>(e)]) {
      json b = json::array();
      for (const auto& mv : blk)
        b.push_back(json::array(
            {alpha.base.universe[static_cast<size_t>(mv.elem)], mv.peb}));
      hist.push_back(std::move(b));
    }
    asg[alpha.base.universe[static_cast<size_t>(e)]] = std::move(hist);
  }
  return json{{"n", alpha.n}, {"k", alpha.k}, {"assignment", asg}}.dump(2);
}

}  // namespace gqc
