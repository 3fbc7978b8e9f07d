#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "gqc/structure.hpp"

namespace gqc {

// ---------------------------------------------------------------------------
// Finitary formulas with generalized-quantifier nodes.
// ---------------------------------------------------------------------------

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// One interpreted relation of a quantifier node: the relation name in the
// oracle's signature, the ordered list of bound variables it consumes (one
// per argument position), and the defining subformula.
struct QuantInterp {
  std::string rel;
  std::vector<std::string> vars;
  FormulaPtr body;
};

struct Formula {
  enum class Kind { Atom, NegAtom, And, Or, Quant };
  Kind kind = Kind::Atom;
  // Atom / NegAtom.
  std::string rel;
  std::vector<std::string> vars;
  // And / Or (empty And = true, empty Or = false).
  std::vector<FormulaPtr> args;
  // Quant.
  std::string oracle;
  std::vector<std::string> bound;
  std::vector<QuantInterp> interps;
};

FormulaPtr make_atom(std::string rel, std::vector<std::string> vars,
                     bool negated = false);
FormulaPtr make_and(std::vector<FormulaPtr> args);
FormulaPtr make_or(std::vector<FormulaPtr> args);
FormulaPtr make_quant(std::string oracle, std::vector<std::string> bound,
                      std::vector<QuantInterp> interps);

std::set<std::string> free_variables(const FormulaPtr& f);
// All variable names occurring anywhere (free or bound).
std::set<std::string> all_variables(const FormulaPtr& f);

// ---------------------------------------------------------------------------
// Quantifier oracles.
// ---------------------------------------------------------------------------

enum class ClosureClass { Hom, Inj, Surj, Bij, Iso };
std::string closure_name(ClosureClass c);

// A Lindstrom quantifier Q_K: membership in the class K of sig-structures,
// decidable up to the declared size bound.
struct QuantifierOracle {
  std::string name;
  Signature sig;
  int arity = 1;        // max relation arity of sig
  int size_bound = 64;  // largest universe membership accepts
  ClosureClass declared_closure = ClosureClass::Iso;
  std::function<bool(const RelStructure&)> membership;
  // Optional domain restriction: structures outside it never arise as the
  // interpreted structure of a quantifier node, and closure is only claimed
  // within it. Null = all structures.
  std::function<bool(const RelStructure&)> domain;
};

struct OracleRegistry {
  std::map<std::string, QuantifierOracle> oracles;
  void add(QuantifierOracle q);
  bool contains(const std::string& name) const;
  const QuantifierOracle& at(const std::string& name) const;
};

// B_m (|A| = m, bijection-closed), I_m (|A| >= m, injection-closed),
// S_m (|A| <= m, surjection-closed), all over the empty signature.
struct CardinalityOracles {
  QuantifierOracle card;  // B_m
  QuantifierOracle geq;   // I_m
  QuantifierOracle leq;   // S_m
};
CardinalityOracles cardinality_quantifiers(int m);

// exists, forall, and geq_m/leq_m/card_m for 0 <= m <= max_m.
OracleRegistry builtin_oracles(int max_m = 5);

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

using Assignment = std::map<std::string, int>;

// Standard semantics; a quantifier node materializes the interpreted
// structure over A's universe and calls the oracle. Throws
// ResourceGuardError when |A| exceeds the oracle's size bound.
bool eval_formula(const RelStructure& a, const FormulaPtr& f,
                  const Assignment& asg, const OracleRegistry& reg);

// ---------------------------------------------------------------------------
// Closure checking and unary types.
// ---------------------------------------------------------------------------

// All structures over sig with 0..bound elements (canonical element names),
// every combination of relation tuples.
std::vector<RelStructure> enumerate_structures(const Signature& sig, int bound,
                                               std::uint64_t guard = 1u << 22);

struct ClosureReport {
  bool pass = true;
  // On failure: a in K, morphism f of the checked class, b not in K.
  RelStructure a, b;
  std::vector<int> witness;
};
ClosureReport check_closure(const QuantifierOracle& q, ClosureClass cls,
                            int bound, std::uint64_t guard = 1u << 26);

// at(a): the set of unary relations satisfied by a. u-type: the
// inclusion-maximal atomic types. q-type: the u-types of the arrow-minimal
// members (minimality modulo homomorphic equivalence).
std::set<std::set<int>> u_type_of(const RelStructure& a);

struct UnaryTypeData {
  int m = 0;  // number of unary relation symbols
  std::set<std::set<std::set<int>>> q_type;
};
// Requires a unary signature and a hom-closed oracle; verifies the closure
// up to the bound first (bound >= 2^m recommended: every structure is
// hom-equivalent to one of size <= 2^m).
UnaryTypeData qtype_unary(const QuantifierOracle& q, int bound);

// Replaces every unary hom-closed quantifier node with the equivalent
// existential form: OR over q-type members u of AND over t in u of
// exists x . AND_{U in t} psi_U. Variable count unchanged.
FormulaPtr unary_to_existential(const FormulaPtr& f, const OracleRegistry& reg,
                                int bound);

// K' over sig + complement relations (name + "_bar"): membership = K on the
// reduct and every bar relation is the exact complement. Declared bij.
QuantifierOracle negation_closure_lift(const QuantifierOracle& q);

// Pointwise negation of membership; sound for iso-closed K (declared iso).
QuantifierOracle complement_query(const QuantifierOracle& q);

// (k-1)-dimensional Weisfeiler-Leman equivalence for signatures of arity
// <= 2; independent oracle for the n = 1 bijection game.
bool counting_equiv_oracle(const RelStructure& a, const RelStructure& b, int k);

// rho preserves the validity of f: for every assignment of the free
// variables into dom(rho), satisfaction in the source implies satisfaction
// of the rho-image in the target.
bool preserves_validity(const PartialHom& rho, const FormulaPtr& f,
                        const OracleRegistry& reg);

// ---------------------------------------------------------------------------
// Serialization and generation.
// ---------------------------------------------------------------------------

FormulaPtr formula_from_json(const std::string& text);
std::string formula_to_json(const FormulaPtr& f);

// Seeded corpus of formulas of depth <= max_depth over sig using a pool of
// num_vars variables; quantifiers drawn from the built-in registry.
std::vector<FormulaPtr> generate_formulas(const Signature& sig, int count,
                                          int max_depth, int num_vars,
                                          std::uint64_t seed);

}  // namespace gqc
