#include "gqc/logic.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "json.hpp"

namespace gqc {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Construction helpers.
// ---------------------------------------------------------------------------

FormulaPtr make_atom(std::string rel, std::vector<std::string> vars,
                     bool negated) {
  auto f = std::make_shared<Formula>();
  f->kind = negated ? Formula::Kind::NegAtom : Formula::Kind::Atom;
  f->rel = std::move(rel);
  f->vars = std::move(vars);
  return f;
}

FormulaPtr make_and(std::vector<FormulaPtr> args) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::And;
  f->args = std::move(args);
  return f;
}

FormulaPtr make_or(std::vector<FormulaPtr> args) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Or;
  f->args = std::move(args);
  return f;
}

FormulaPtr make_quant(std::string oracle, std::vector<std::string> bound,
                      std::vector<QuantInterp> interps) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Quant;
  f->oracle = std::move(oracle);
  f->bound = std::move(bound);
  f->interps = std::move(interps);
  return f;
}

namespace {

void collect_vars(const FormulaPtr& f, std::set<std::string>& bound_here,
                  std::set<std::string>& free, std::set<std::string>* all) {
  if (!f) throw PreconditionError("formula: null node");
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      for (const auto& v : f->vars) {
        if (all) all->insert(v);
        if (!bound_here.count(v)) free.insert(v);
      }
      break;
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (const auto& g : f->args) collect_vars(g, bound_here, free, all);
      break;
    case Formula::Kind::Quant: {
      for (const auto& in : f->interps) {
        std::set<std::string> inner = bound_here;
        for (const auto& v : in.vars) {
          if (all) all->insert(v);
          inner.insert(v);
        }
        collect_vars(in.body, inner, free, all);
      }
      if (all)
        for (const auto& v : f->bound) all->insert(v);
      break;
    }
  }
}

}  // namespace

std::set<std::string> free_variables(const FormulaPtr& f) {
  std::set<std::string> bound, free;
  collect_vars(f, bound, free, nullptr);
  return free;
}

std::set<std::string> all_variables(const FormulaPtr& f) {
  std::set<std::string> bound, free, all;
  collect_vars(f, bound, free, &all);
  return all;
}

// ---------------------------------------------------------------------------
// Oracles.
// ---------------------------------------------------------------------------

std::string closure_name(ClosureClass c) {
  switch (c) {
    case ClosureClass::Hom: return "hom";
    case ClosureClass::Inj: return "inj";
    case ClosureClass::Surj: return "surj";
    case ClosureClass::Bij: return "bij";
    case ClosureClass::Iso: return "iso";
  }
  return "?";
}

void OracleRegistry::add(QuantifierOracle q) {
  oracles[q.name] = std::move(q);
}

bool OracleRegistry::contains(const std::string& name) const {
  return oracles.count(name) > 0;
}

const QuantifierOracle& OracleRegistry::at(const std::string& name) const {
  auto it = oracles.find(name);
  if (it == oracles.end())
    throw ValidationError("oracle." + name + ": not registered");
  return it->second;
}

CardinalityOracles cardinality_quantifiers(int m) {
  if (m < 0) throw PreconditionError("cardinality_quantifiers: m >= 0");
  CardinalityOracles out;
  out.card = {"card_" + std::to_string(m), Signature{}, 1, 1 << 20,
              ClosureClass::Bij,
              [m](const RelStructure& a) { return a.size() == m; }};
  out.geq = {"geq_" + std::to_string(m), Signature{}, 1, 1 << 20,
             ClosureClass::Inj,
             [m](const RelStructure& a) { return a.size() >= m; }};
  out.leq = {"leq_" + std::to_string(m), Signature{}, 1, 1 << 20,
             ClosureClass::Surj,
             [m](const RelStructure& a) { return a.size() <= m; }};
  return out;
}

OracleRegistry builtin_oracles(int max_m) {
  OracleRegistry reg;
  Signature unary;
  unary.relations = {{"U", 1}};
  reg.add({"exists", unary, 1, 1 << 20, ClosureClass::Hom,
           [](const RelStructure& a) { return !a.tuples[0].empty(); }});
  reg.add({"forall", unary, 1, 1 << 20, ClosureClass::Surj,
           [](const RelStructure& a) {
             return static_cast<int>(a.tuples[0].size()) == a.size();
           }});
  for (int m = 0; m <= max_m; ++m) {
    CardinalityOracles c = cardinality_quantifiers(m);
    reg.add(c.card);
    reg.add(c.geq);
    reg.add(c.leq);
  }
  return reg;
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

namespace {

int lookup_var(const Assignment& asg, const std::string& v) {
  auto it = asg.find(v);
  if (it == asg.end())
    throw PreconditionError("eval_formula: unassigned variable " + v);
  return it->second;
}

}  // namespace

bool eval_formula(const RelStructure& a, const FormulaPtr& f,
                  const Assignment& asg, const OracleRegistry& reg) {
  if (!f) throw PreconditionError("eval_formula: null node");
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom: {
      int r = a.sig.index_of(f->rel);
      if (r < 0)
        throw ValidationError("eval_formula: unknown relation " + f->rel);
      if (static_cast<int>(f->vars.size()) != a.sig.relations[static_cast<size_t>(r)].arity)
        throw ValidationError("eval_formula: arity mismatch on " + f->rel);
      std::vector<int> tup;
      for (const auto& v : f->vars) tup.push_back(lookup_var(asg, v));
      bool in = a.has_tuple(r, tup);
      return f->kind == Formula::Kind::Atom ? in : !in;
    }
    case Formula::Kind::And:
      for (const auto& g : f->args)
        if (!eval_formula(a, g, asg, reg)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& g : f->args)
        if (eval_formula(a, g, asg, reg)) return true;
      return false;
    case Formula::Kind::Quant: {
      const QuantifierOracle& q = reg.at(f->oracle);
      if (a.size() > q.size_bound)
        throw ResourceGuardError("eval_formula: oracle " + q.name +
                                 " bound exceeded");
      RelStructure b;
      b.sig = q.sig;
      b.universe = a.universe;
      b.tuples.assign(q.sig.relations.size(), {});
      for (size_t r = 0; r < q.sig.relations.size(); ++r) {
        const auto& rel = q.sig.relations[r];
        const QuantInterp* interp = nullptr;
        for (const auto& in : f->interps)
          if (in.rel == rel.name) interp = &in;
        if (!interp)
          throw ValidationError("eval_formula: quantifier node lacks an "
                                "interpretation for " + rel.name);
        if (static_cast<int>(interp->vars.size()) != rel.arity)
          throw ValidationError("eval_formula: interpretation arity mismatch "
                                "on " + rel.name);
        std::vector<int> tup(static_cast<size_t>(rel.arity), 0);
        std::function<void(int, Assignment&)> rec = [&](int pos,
                                                        Assignment& inner) {
          if (pos == rel.arity) {
            if (eval_formula(a, interp->body, inner, reg)) b.add_tuple(static_cast<int>(r), tup);
            return;
          }
          for (int e = 0; e < a.size(); ++e) {
            tup[static_cast<size_t>(pos)] = e;
            int saved = -1;
            auto it = inner.find(interp->vars[static_cast<size_t>(pos)]);
            bool had = it != inner.end();
            if (had) saved = it->second;
            inner[interp->vars[static_cast<size_t>(pos)]] = e;
            rec(pos + 1, inner);
            if (had)
              inner[interp->vars[static_cast<size_t>(pos)]] = saved;
            else
              inner.erase(interp->vars[static_cast<size_t>(pos)]);
          }
        };
        Assignment inner = asg;
        rec(0, inner);
      }
      return q.membership(b);
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Structure enumeration and closure checks.
// ---------------------------------------------------------------------------

namespace {

void enumerate_structures_cb(
    const Signature& sig, int bound,
    const std::function<void(const RelStructure&)>& sink, std::uint64_t guard) {
  std::uint64_t produced = 0;
  // Size 0 included: the empty structure is the arrow-least structure and
  // matters for q-types (its u-type is the empty set).
  for (int s = 0; s <= bound; ++s) {
    RelStructure base;
    base.sig = sig;
    for (int i = 0; i < s; ++i) base.universe.push_back("e" + std::to_string(i));
    base.tuples.assign(sig.relations.size(), {});
    // Tuple spaces per relation.
    std::vector<std::vector<std::vector<int>>> space(sig.relations.size());
    for (size_t r = 0; r < sig.relations.size(); ++r) {
      const int ar = sig.relations[r].arity;
      std::vector<int> tup(static_cast<size_t>(ar), 0);
      std::function<void(int)> rec = [&](int pos) {
        if (pos == ar) {
          space[r].push_back(tup);
          return;
        }
        for (int e = 0; e < s; ++e) {
          tup[static_cast<size_t>(pos)] = e;
          rec(pos + 1);
        }
      };
      rec(0);
      if (space[r].size() > 62)
        throw ResourceGuardError("enumerate_structures: tuple space too large");
    }
    std::function<void(size_t, RelStructure&)> pick = [&](size_t r,
                                                          RelStructure& cur) {
      if (r == sig.relations.size()) {
        if (++produced > guard)
          throw ResourceGuardError("enumerate_structures: count exceeds bound");
        sink(cur);
        return;
      }
      const std::uint64_t total = 1ull << space[r].size();
      for (std::uint64_t mask = 0; mask < total; ++mask) {
        cur.tuples[r].clear();
        for (size_t i = 0; i < space[r].size(); ++i)
          if (mask & (1ull << i)) cur.tuples[r].push_back(space[r][i]);
        pick(r + 1, cur);
      }
    };
    RelStructure cur = base;
    pick(0, cur);
  }
}

}  // namespace

std::vector<RelStructure> enumerate_structures(const Signature& sig, int bound,
                                               std::uint64_t guard) {
  std::vector<RelStructure> out;
  enumerate_structures_cb(
      sig, bound, [&](const RelStructure& a) { out.push_back(a); }, guard);
  return out;
}

namespace {

bool total_map_in_class(const RelStructure& a, const RelStructure& b,
                        const std::vector<int>& f, ClosureClass cls) {
  PartialHom ph{&a, &b, f, false};
  if (!is_partial_hom(ph)) return false;
  if (cls == ClosureClass::Hom) return true;
  bool need_inj = cls == ClosureClass::Inj || cls == ClosureClass::Bij ||
                  cls == ClosureClass::Iso;
  bool need_surj = cls == ClosureClass::Surj || cls == ClosureClass::Bij ||
                   cls == ClosureClass::Iso;
  if (need_inj) {
    std::vector<int> hit(static_cast<size_t>(b.size()), 0);
    for (int x : f)
      if (hit[static_cast<size_t>(x)]++) return false;
  }
  if (need_surj) {
    std::vector<bool> hit(static_cast<size_t>(b.size()), false);
    for (int x : f) hit[static_cast<size_t>(x)] = true;
    for (bool h : hit)
      if (!h) return false;
  }
  if (cls == ClosureClass::Iso) {
    // The inverse must also be a homomorphism.
    std::vector<int> inv(static_cast<size_t>(b.size()), -1);
    for (size_t i = 0; i < f.size(); ++i) inv[static_cast<size_t>(f[i])] = static_cast<int>(i);
    PartialHom back{&b, &a, inv, false};
    if (!is_partial_hom(back)) return false;
  }
  return true;
}

}  // namespace

ClosureReport check_closure(const QuantifierOracle& q, ClosureClass cls,
                            int bound, std::uint64_t guard) {
  ClosureReport rep;
  std::vector<RelStructure> all;
  enumerate_structures_cb(
      q.sig, bound,
      [&](const RelStructure& s) {
        if (s.size() > q.size_bound) return;
        if (q.domain && !q.domain(s)) return;
        all.push_back(s);
      },
      guard);
  std::uint64_t work = 0;
  for (const auto& a : all) {
    if (!q.membership(a)) continue;
    for (const auto& b : all) {
      // All total maps a -> b.
      std::vector<int> f(static_cast<size_t>(a.size()), 0);
      std::function<bool(int)> rec = [&](int pos) -> bool {
        if (pos == a.size()) {
          if (++work > guard)
            throw ResourceGuardError("check_closure: work exceeds bound");
          if (!total_map_in_class(a, b, f, cls)) return true;
          if (q.membership(b)) return true;
          rep.pass = false;
          rep.a = a;
          rep.b = b;
          rep.witness = f;
          return false;
        }
        for (int e = 0; e < b.size(); ++e) {
          f[static_cast<size_t>(pos)] = e;
          if (!rec(pos + 1)) return false;
        }
        return true;
      };
      if (!rec(0)) return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Unary types.
// ---------------------------------------------------------------------------

std::set<std::set<int>> u_type_of(const RelStructure& a) {
  std::set<std::set<int>> types;
  for (int e = 0; e < a.size(); ++e) {
    std::set<int> t;
    for (size_t r = 0; r < a.sig.relations.size(); ++r) {
      if (a.sig.relations[r].arity != 1)
        throw PreconditionError("u_type_of: non-unary signature");
      if (a.has_tuple(static_cast<int>(r), {e})) t.insert(static_cast<int>(r));
    }
    types.insert(std::move(t));
  }
  // Keep the inclusion-maximal ones.
  std::set<std::set<int>> out;
  for (const auto& t : types) {
    bool maximal = true;
    for (const auto& u : types)
      if (t != u && std::includes(u.begin(), u.end(), t.begin(), t.end()))
        maximal = false;
    if (maximal) out.insert(t);
  }
  return out;
}

UnaryTypeData qtype_unary(const QuantifierOracle& q, int bound) {
  for (const auto& r : q.sig.relations)
    if (r.arity != 1)
      throw PreconditionError("qtype_unary: non-unary signature");
  if (q.declared_closure != ClosureClass::Hom)
    throw PreconditionError("qtype_unary: oracle not declared hom-closed");
  ClosureReport cr = check_closure(q, ClosureClass::Hom, bound);
  if (!cr.pass)
    throw ValidationError("qtype_unary: closure verification failed");

  UnaryTypeData out;
  out.m = static_cast<int>(q.sig.relations.size());
  auto all = enumerate_structures(q.sig, bound);
  std::vector<const RelStructure*> members;
  for (const auto& a : all)
    if (a.size() <= q.size_bound && q.membership(a)) members.push_back(&a);
  // Arrow-minimal modulo homomorphic equivalence: no member maps in without
  // a map back. (Minimality up to isomorphism never holds in the presence
  // of duplicated elements; hom-equivalence classes carry the same u-type.)
  for (const RelStructure* b : members) {
    bool minimal = true;
    for (const RelStructure* c : members) {
      if (hom_exists(*c, *b).has_value() && !hom_exists(*b, *c).has_value()) {
        minimal = false;
        break;
      }
    }
    if (minimal) out.q_type.insert(u_type_of(*b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unary quantifier elimination.
// ---------------------------------------------------------------------------

namespace {

struct FreshNames {
  std::set<std::string> taken;
  int next = 0;
  std::string make() {
    while (true) {
      std::string v = "$" + std::to_string(next++);
      if (!taken.count(v)) {
        taken.insert(v);
        return v;
      }
    }
  }
};

// Rename a free variable, skipping scopes that rebind `from` and
// alpha-renaming scopes that would capture `to`.
FormulaPtr rename_free(const FormulaPtr& f, const std::string& from,
                       const std::string& to, FreshNames& fresh) {
  auto g = std::make_shared<Formula>(*f);
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      for (auto& v : g->vars)
        if (v == from) v = to;
      break;
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (auto& sub : g->args) sub = rename_free(sub, from, to, fresh);
      break;
    case Formula::Kind::Quant:
      for (auto& in : g->interps) {
        if (std::find(in.vars.begin(), in.vars.end(), from) != in.vars.end())
          continue;  // `from` rebound here
        for (auto& v : in.vars)
          if (v == to) {
            std::string nv = fresh.make();
            in.body = rename_free(in.body, to, nv, fresh);
            v = nv;
          }
        in.body = rename_free(in.body, from, to, fresh);
      }
      break;
  }
  return g;
}

}  // namespace

FormulaPtr unary_to_existential(const FormulaPtr& f, const OracleRegistry& reg,
                                int bound) {
  if (!f) throw PreconditionError("unary_to_existential: null node");
  auto g = std::make_shared<Formula>(*f);
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      return g;
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (auto& sub : g->args) sub = unary_to_existential(sub, reg, bound);
      return g;
    case Formula::Kind::Quant:
      break;
  }
  for (auto& in : g->interps)
    in.body = unary_to_existential(in.body, reg, bound);

  const QuantifierOracle& q = reg.at(g->oracle);
  if (q.arity != 1 || q.sig.relations.empty() ||
      q.declared_closure != ClosureClass::Hom)
    return g;  // leave non-unary or non-hom-closed quantifiers in place
  if (g->bound.size() != 1)
    throw PreconditionError("unary_to_existential: unary node needs one "
                            "bound variable");
  const std::string& x = g->bound[0];

  std::vector<FormulaPtr> raw(q.sig.relations.size());
  std::vector<std::string> holder(q.sig.relations.size());
  for (size_t r = 0; r < q.sig.relations.size(); ++r) {
    for (const auto& in : g->interps)
      if (in.rel == q.sig.relations[r].name) {
        if (in.vars.size() != 1)
          throw PreconditionError("unary_to_existential: interpretation "
                                  "arity mismatch");
        raw[r] = in.body;
        holder[r] = in.vars[0];
      }
    if (!raw[r])
      throw PreconditionError("unary_to_existential: missing interpretation "
                              "for " + q.sig.relations[r].name);
  }

  // Common quantified variable: x, unless some body mentions x freely for
  // another purpose (then a fresh variable avoids capture).
  FreshNames fresh;
  fresh.taken = all_variables(g);
  bool x_safe = true;
  for (size_t r = 0; r < raw.size(); ++r)
    if (holder[r] != x && free_variables(raw[r]).count(x)) x_safe = false;
  const std::string v = x_safe ? x : fresh.make();

  // Bodies with the interpreted variable renamed to v.
  std::vector<FormulaPtr> body(raw.size());
  for (size_t r = 0; r < raw.size(); ++r)
    body[r] = holder[r] == v ? raw[r] : rename_free(raw[r], holder[r], v, fresh);

  UnaryTypeData data = qtype_unary(q, bound);
  std::vector<FormulaPtr> disjuncts;
  for (const auto& u : data.q_type) {
    std::vector<FormulaPtr> conjuncts;
    for (const auto& t : u) {
      std::vector<FormulaPtr> inner;
      for (int r : t) inner.push_back(body[static_cast<size_t>(r)]);
      QuantInterp in{"U", {v}, make_and(std::move(inner))};
      conjuncts.push_back(make_quant("exists", {v}, {std::move(in)}));
    }
    disjuncts.push_back(make_and(std::move(conjuncts)));
  }
  return make_or(std::move(disjuncts));
}

// ---------------------------------------------------------------------------
// Signature transformations.
// ---------------------------------------------------------------------------

QuantifierOracle negation_closure_lift(const QuantifierOracle& q) {
  QuantifierOracle out;
  out.name = q.name + "_lift";
  out.sig = q.sig;
  for (const auto& r : q.sig.relations)
    out.sig.relations.push_back({r.name + "_bar", r.arity});
  out.arity = q.arity;
  out.size_bound = q.size_bound;
  out.declared_closure = ClosureClass::Bij;
  const size_t base = q.sig.relations.size();
  // Every bar relation must be the exact complement. Structures violating
  // this never arise as a quantifier node's interpreted structure (the bar
  // interpretations are pointwise negations), and within this fragment a
  // bijective homomorphism is a reduct isomorphism.
  auto exact = [base](const RelStructure& a) {
    if (a.sig.relations.size() != 2 * base)
      throw PreconditionError("negation_closure_lift: signature mismatch");
    for (size_t r = 0; r < base; ++r) {
      const int ar = a.sig.relations[r].arity;
      std::uint64_t space = 1;
      for (int i = 0; i < ar; ++i) space *= static_cast<std::uint64_t>(a.size());
      if (a.tuples[r].size() + a.tuples[base + r].size() != space) return false;
      for (const auto& tup : a.tuples[base + r])
        if (a.has_tuple(static_cast<int>(r), tup)) return false;
    }
    return true;
  };
  out.domain = exact;
  QuantifierOracle inner = q;
  out.membership = [inner, base, exact](const RelStructure& a) {
    if (!exact(a)) return false;
    RelStructure reduct;
    reduct.sig.relations.assign(a.sig.relations.begin(),
                                a.sig.relations.begin() + static_cast<long>(base));
    reduct.universe = a.universe;
    reduct.tuples.assign(a.tuples.begin(), a.tuples.begin() + static_cast<long>(base));
    return inner.membership(reduct);
  };
  return out;
}

QuantifierOracle complement_query(const QuantifierOracle& q) {
  QuantifierOracle out = q;
  out.name = q.name + "_c";
  out.declared_closure = ClosureClass::Iso;
  QuantifierOracle inner = q;
  out.membership = [inner](const RelStructure& a) {
    return !inner.membership(a);
  };
  return out;
}

// ---------------------------------------------------------------------------
// Weisfeiler-Leman.
// ---------------------------------------------------------------------------

namespace {

// Atomic code between two elements under all (arity <= 2) relations.
std::string pair_code(const RelStructure& a, int u, int v) {
  std::string code = u == v ? "=" : ".";
  for (size_t r = 0; r < a.sig.relations.size(); ++r) {
    if (a.sig.relations[r].arity == 1) {
      code += a.has_tuple(static_cast<int>(r), {u}) ? '1' : '0';
      code += a.has_tuple(static_cast<int>(r), {v}) ? '1' : '0';
    } else {
      code += a.has_tuple(static_cast<int>(r), {u, v}) ? '1' : '0';
      code += a.has_tuple(static_cast<int>(r), {v, u}) ? '1' : '0';
    }
  }
  return code;
}

struct WlState {
  std::vector<std::vector<int>> tuples;  // d-tuples over the structure
  std::map<std::vector<int>, int> index;
  std::vector<int> color;
};

WlState wl_init(const RelStructure& a, int d) {
  WlState st;
  std::vector<int> t(static_cast<size_t>(d), 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == d) {
      st.index[t] = static_cast<int>(st.tuples.size());
      st.tuples.push_back(t);
      return;
    }
    for (int e = 0; e < a.size(); ++e) {
      t[static_cast<size_t>(pos)] = e;
      rec(pos + 1);
    }
  };
  rec(0);
  st.color.assign(st.tuples.size(), 0);
  return st;
}

std::string atomic_code(const RelStructure& a, const std::vector<int>& t) {
  std::string code;
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = 0; j < t.size(); ++j)
      code += pair_code(a, t[i], t[j]) + ";";
  return code;
}

}  // namespace

bool counting_equiv_oracle(const RelStructure& a, const RelStructure& b,
                           int k) {
  if (k < 2) throw PreconditionError("counting_equiv_oracle: k >= 2 required");
  for (const auto& r : a.sig.relations)
    if (r.arity > 2)
      throw ValidationError("counting_equiv_oracle: arity > 2 unsupported");
  if (!(a.sig == b.sig))
    throw ValidationError("counting_equiv_oracle: signature mismatch");
  if (a.size() == 0 || b.size() == 0) return a.size() == b.size();
  const int d = k - 1;

  WlState sa = wl_init(a, d), sb = wl_init(b, d);
  // Joint initial coloring by atomic type.
  {
    std::map<std::string, int> codes;
    auto assign = [&](const RelStructure& s, WlState& st) {
      for (size_t i = 0; i < st.tuples.size(); ++i) {
        std::string c = atomic_code(s, st.tuples[i]);
        auto [it, unused] = codes.emplace(c, static_cast<int>(codes.size()));
        st.color[i] = it->second;
      }
    };
    assign(a, sa);
    assign(b, sb);
  }

  while (true) {
    std::map<std::string, int> codes;
    auto refine_one = [&](const RelStructure& s, const WlState& st,
                          std::vector<int>& next) {
      next.assign(st.tuples.size(), 0);
      for (size_t i = 0; i < st.tuples.size(); ++i) {
        std::vector<std::string> parts;
        for (int w = 0; w < s.size(); ++w) {
          std::ostringstream part;
          for (int pos = 0; pos < d; ++pos) {
            std::vector<int> sub = st.tuples[i];
            sub[static_cast<size_t>(pos)] = w;
            part << st.color[static_cast<size_t>(st.index.at(sub))] << ",";
          }
          for (int x : st.tuples[i]) part << pair_code(s, x, w) << "|";
          parts.push_back(part.str());
        }
        std::sort(parts.begin(), parts.end());
        std::string code = std::to_string(st.color[i]) + "#";
        for (const auto& p : parts) code += p + "§";
        auto [it, unused] = codes.emplace(code, static_cast<int>(codes.size()));
        next[i] = it->second;
      }
    };
    std::vector<int> na, nb;
    refine_one(a, sa, na);
    refine_one(b, sb, nb);
    bool stable = true;
    auto changed = [](const std::vector<int>& oldc, const std::vector<int>& newc) {
      std::map<int, int> seen;
      for (size_t i = 0; i < oldc.size(); ++i) {
        auto [it, fresh] = seen.emplace(oldc[i], newc[i]);
        if (!fresh && it->second != newc[i]) return true;
      }
      return false;
    };
    if (changed(sa.color, na) || changed(sb.color, nb)) stable = false;
    sa.color = na;
    sb.color = nb;
    if (stable) break;
  }

  std::map<int, int> ha, hb;
  for (int c : sa.color) ++ha[c];
  for (int c : sb.color) ++hb[c];
  return ha == hb;
}

// ---------------------------------------------------------------------------
// Validity preservation.
// ---------------------------------------------------------------------------

bool preserves_validity(const PartialHom& rho, const FormulaPtr& f,
                        const OracleRegistry& reg) {
  if (!rho.source || !rho.target)
    throw PreconditionError("preserves_validity: unbound partial map");
  std::vector<std::string> fv;
  for (const auto& v : free_variables(f)) fv.push_back(v);
  std::vector<int> dom;
  for (size_t i = 0; i < rho.map.size(); ++i)
    if (rho.map[i] >= 0) dom.push_back(static_cast<int>(i));

  std::vector<int> pick(fv.size(), 0);
  std::function<bool(size_t)> rec = [&](size_t pos) -> bool {
    if (pos == fv.size()) {
      Assignment asg_a, asg_b;
      for (size_t i = 0; i < fv.size(); ++i) {
        int e = dom[static_cast<size_t>(pick[i])];
        asg_a[fv[i]] = e;
        asg_b[fv[i]] = rho.map[static_cast<size_t>(e)];
      }
      if (eval_formula(*rho.source, f, asg_a, reg) &&
          !eval_formula(*rho.target, f, asg_b, reg))
        return false;
      return true;
    }
    for (size_t c = 0; c < dom.size(); ++c) {
      pick[pos] = static_cast<int>(c);
      if (!rec(pos + 1)) return false;
    }
    return true;
  };
  if (!fv.empty() && dom.empty()) return true;  // no assignments exist
  return rec(0);
}

// ---------------------------------------------------------------------------
// JSON.
// ---------------------------------------------------------------------------

namespace {

json formula_to_json_node(const FormulaPtr& f) {
  json node;
  switch (f->kind) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      node["tag"] = f->kind == Formula::Kind::Atom ? "atom" : "natom";
      node["rel"] = f->rel;
      node["vars"] = f->vars;
      break;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      node["tag"] = f->kind == Formula::Kind::And ? "and" : "or";
      json args = json::array();
      for (const auto& g : f->args) args.push_back(formula_to_json_node(g));
      node["args"] = std::move(args);
      break;
    }
    case Formula::Kind::Quant: {
      node["tag"] = "quant";
      node["oracle"] = f->oracle;
      node["vars"] = f->bound;
      json ins = json::array();
      for (const auto& in : f->interps)
        ins.push_back({{"rel", in.rel},
                       {"vars", in.vars},
                       {"formula", formula_to_json_node(in.body)}});
      node["interps"] = std::move(ins);
      break;
    }
  }
  return node;
}

FormulaPtr formula_from_json_node(const json& node) {
  if (!node.is_object() || !node.contains("tag"))
    throw ValidationError("formula: node needs a tag");
  const std::string tag = node["tag"].get<std::string>();
  if (tag == "atom" || tag == "natom") {
    std::vector<std::string> vars;
    for (const auto& v : node.at("vars")) vars.push_back(v.get<std::string>());
    return make_atom(node.at("rel").get<std::string>(), std::move(vars),
                     tag == "natom");
  }
  if (tag == "and" || tag == "or") {
    std::vector<FormulaPtr> args;
    for (const auto& g : node.at("args")) args.push_back(formula_from_json_node(g));
    return tag == "and" ? make_and(std::move(args)) : make_or(std::move(args));
  }
  if (tag == "quant") {
    std::vector<std::string> bound;
    for (const auto& v : node.at("vars")) bound.push_back(v.get<std::string>());
    std::vector<QuantInterp> interps;
    if (node.contains("interps"))
      for (const auto& in : node["interps"]) {
        QuantInterp qi;
        qi.rel = in.at("rel").get<std::string>();
        for (const auto& v : in.at("vars")) qi.vars.push_back(v.get<std::string>());
        qi.body = formula_from_json_node(in.at("formula"));
        interps.push_back(std::move(qi));
      }
    return make_quant(node.at("oracle").get<std::string>(), std::move(bound),
                      std::move(interps));
  }
  throw ValidationError("formula: unknown tag " + tag);
}

}  // namespace

FormulaPtr formula_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("formula: ") + e.what());
  }
  return formula_from_json_node(doc);
}

std::string formula_to_json(const FormulaPtr& f) {
  return formula_to_json_node(f).dump(2);
}

// ---------------------------------------------------------------------------
// Generator.
// ---------------------------------------------------------------------------

std::vector<FormulaPtr> generate_formulas(const Signature& sig, int count,
                                          int max_depth, int num_vars,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool;
  for (int i = 0; i < num_vars; ++i) pool.push_back("x" + std::to_string(i));
  auto var = [&]() { return pool[rng() % pool.size()]; };

  std::function<FormulaPtr(int)> gen = [&](int depth) -> FormulaPtr {
    int kind = static_cast<int>(rng() % (depth > 0 ? 5 : 2));
    switch (kind) {
      case 0:
      case 1: {
        const auto& r = sig.relations[rng() % sig.relations.size()];
        std::vector<std::string> vs;
        for (int i = 0; i < r.arity; ++i) vs.push_back(var());
        return make_atom(r.name, std::move(vs), kind == 1);
      }
      case 2:
      case 3: {
        int width = 1 + static_cast<int>(rng() % 3);
        std::vector<FormulaPtr> args;
        for (int i = 0; i < width; ++i) args.push_back(gen(depth - 1));
        return kind == 2 ? make_and(std::move(args)) : make_or(std::move(args));
      }
      default: {
        // Quantifier node: exists / forall / geq_m / card_m.
        int pick = static_cast<int>(rng() % 4);
        std::string x = var();
        if (pick >= 2) {
          int m = static_cast<int>(rng() % 4);
          std::string name = (pick == 2 ? "geq_" : "card_") + std::to_string(m);
          return make_quant(name, {x}, {});
        }
        QuantInterp in{"U", {x}, gen(depth - 1)};
        return make_quant(pick == 0 ? "exists" : "forall", {x},
                          {std::move(in)});
      }
    }
  };

  std::vector<FormulaPtr> out;
  for (int i = 0; i < count; ++i) out.push_back(gen(max_depth));
  return out;
}

}  // namespace gqc
