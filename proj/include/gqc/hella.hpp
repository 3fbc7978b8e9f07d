#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gqc/game.hpp"
#include "gqc/history.hpp"
#include "gqc/structure.hpp"

namespace gqc {

// ---------------------------------------------------------------------------
// The depth-truncated pebbling comonad T_k and its block quotient H_{n,k}.
// ---------------------------------------------------------------------------

// T_k A truncated to histories of length <= m. The universe lists every
// nonempty k-history over the base universe, stratified by length and then
// lexicographically. A tuple of histories is related iff the histories are
// pairwise prefix-comparable, the tuple of their last elements is related in
// the base, and no pebble resting at the end of a shorter component is moved
// again inside a longer one (the no-overwrite condition).
struct PebbleStructure {
  RelStructure base;
  int k = 0;
  int m = 0;
  std::vector<KHistory> universe;
  std::map<KHistory, int> index;
  std::vector<std::vector<std::vector<int>>> tuples;  // per base relation
  int index_of(const KHistory& s) const;              // -1 when absent
};

PebbleStructure build_Tk(const RelStructure& a, int k, int m,
                         std::uint64_t guard = 4'000'000);

// Counit: the element under the most recent move. Throws on the empty
// history (not a T_k element).
int counit(const KHistory& s);

// Comultiplication: the history of nonempty prefixes, each tagged with the
// pebble index of its final move.
std::vector<std::pair<KHistory, int>> comult_prefixes(const KHistory& s);

// Direct relation test (no materialized universe needed).
bool tk_tuple_related(const RelStructure& base, int rel,
                      const std::vector<KHistory>& tup);

// Every T_k relation tuple maps under the counit to a base relation tuple.
bool verify_counit_hom_tk(const PebbleStructure& t);

// --- The block equivalence and its classes --------------------------------

// [s;(a,i)] ~_n [t;(b,j)] iff a = b and alpha_n(s,i) = alpha_n(t,j).
bool approx_eq(const KHistory& u, const KHistory& v, int n);

// Canonical class key [t | a]: the structured history alpha_n(prefix, p) of
// the history with its last move removed, plus the last element.
struct ClassId {
  NKHistory history;
  int element = 0;
  auto operator<=>(const ClassId&) const = default;
};

ClassId class_of(const KHistory& u, int n);  // throws on the empty history

// Canonical T_k representative of a class: F(t);(a,p) with p the final
// pebble index of t (or 1 when t is empty).
KHistory representative(const ClassId& c);

// Interning pool for class keys; used to treat classes as elements one
// comonad level up.
struct ClassPool {
  std::map<ClassId, int> ids;
  std::vector<ClassId> items;
  int intern(const ClassId& c);
};

// delta^{n,k} on a class, computed through the canonical representative
// (well-defined on classes). Inner prefix classes are interned in `pool`;
// the returned key's history elements and element field hold pool ids.
ClassId hcomult(const ClassId& c, int n, int k, ClassPool& pool);

// --- H_{n,k} ----------------------------------------------------------------

// A truncation of H_{n,k} A. Relations are the existential lift: a tuple of
// classes is related iff some tuple of T_k representatives is related.
struct HellaStructure {
  RelStructure base;
  int n = 0, k = 0, m = 0;  // m = block depth of the universe
  std::vector<ClassId> universe;  // sorted
  std::map<ClassId, int> index;
  std::vector<std::vector<std::vector<int>>> tuples;
  int index_of(const ClassId& c) const;
};

// Full quotient of the length-M truncation of T_k, M = n*m + n: every class
// with at most m blocks has all of its representatives inside length M, so
// the lifted relations are exact on those classes.
struct QuotientResult {
  HellaStructure h;
  PebbleStructure rep;
  std::vector<int> qn;  // quotient map: rep universe index -> class index
};

QuotientResult build_Hnk(const RelStructure& a, int n, int k, int m,
                         std::uint64_t guard = 4'000'000);

// The quotient map is a homomorphism rep -> h (checked tuple by tuple).
bool verify_qn_homomorphism(const QuotientResult& q);

// Block-depth truncation: universe = all classes [t|a] with at most m blocks,
// relations streamed from representative chains without materializing T_k.
// Agrees with build_Hnk restricted to <= m-block classes.
HellaStructure build_Pm(const RelStructure& a, int n, int k, int m,
                        std::uint64_t guard = 200'000'000);

// Exact single-tuple test of the lifted relation: some choice of T_k
// representatives of the classes is related. No universe materialization.
bool class_tuple_related(const RelStructure& a, int n, int k, int rel,
                         const std::vector<ClassId>& tup);

// The truncation as a plain relational structure; elements are named by
// their class keys.
RelStructure hella_to_rel(const HellaStructure& h);

// Streams every lifted relation tuple of the block-depth truncation to the
// callback as (relation index, class indices into `universe`).
void hnk_relation_tuples(
    const RelStructure& a, int n, int k, int m,
    const std::vector<ClassId>& universe,
    const std::function<void(int, const std::vector<int>&)>& emit,
    std::uint64_t guard = 200'000'000);

// --- Comonad laws -----------------------------------------------------------

struct LawReport {
  bool ok = true;
  std::string violation;
};

// Equational laws of (T_k, counit, comult) checked pointwise on all histories
// of length <= m over a `universe_size`-element base. The maps involved are
// independent of the base relations.
LawReport check_tk_laws(int universe_size, int k, int m,
                        std::uint64_t guard = 4'000'000);

using HComultFn = std::function<ClassId(const ClassId&, int, int, ClassPool&)>;

// Equational laws of (H_{n,k}, counit, hcomult) checked pointwise on all
// classes of block depth <= m. `delta_override` substitutes a (possibly
// corrupted) comultiplication; the default uses hcomult.
LawReport check_hnk_laws(int universe_size, int n, int k, int m,
                         const HComultFn* delta_override = nullptr,
                         std::uint64_t guard = 200'000'000);

// Combined report for one structure: T_k laws, H_{n,k} laws, the counit
// homomorphism property on the materialized T_k, and the quotient-map
// homomorphism property whenever the length-(n*m+n) truncation fits the
// guard (skipped_quotient reports when it does not).
struct ComonadReport {
  LawReport tk;
  LawReport hnk;
  bool counit_hom = true;
  bool qn_hom = true;
  bool skipped_quotient = false;
  bool ok() const { return tk.ok && hnk.ok && counit_hom && qn_hom; }
};

ComonadReport check_comonad_laws(const RelStructure& a, int n, int k, int m,
                                 std::uint64_t guard = 4'000'000);

// --- Kleisli morphisms -------------------------------------------------------

// A morphism H_{n,k} A -> B tabulated on classes of block depth <= m.
// Source and target are stored by value (conventionally I-augmented).
struct KleisliMorphism {
  int n = 0, k = 0, m = 0;
  RelStructure source, target;
  std::map<ClassId, int> table;
};

// Functor action on a homomorphism f : A -> B (given as target index per
// source index): [t|a] -> [f(t)|f(a)] on classes of block depth <= m.
std::map<ClassId, ClassId> map_morphism(const std::vector<int>& f,
                                        const RelStructure& a,
                                        const RelStructure& b, int n, int k,
                                        int m);

// The identity Kleisli morphism (the counit as a table).
KleisliMorphism kleisli_identity(const RelStructure& a, int n, int k, int m);

// Kleisli composition g after f: g o H(f) o delta, tabulated on the common
// block depth.
KleisliMorphism kleisli_compose(const KleisliMorphism& g,
                                const KleisliMorphism& f);

// Table of the morphism induced by a block strategy: f([t|a]) = Psi(t)(a).
// Source and target are I-augmented first unless augment_identity is false.
KleisliMorphism morphism_from_strategy(const NKStrategy& psi,
                                       const RelStructure& a,
                                       const RelStructure& b, int m,
                                       bool augment_identity = true);

NKStrategy strategy_from_morphism(const KleisliMorphism& f);

// Block strategy read off a positional strategy: the response after history
// t is the positional choice at the replayed pebbled position.
NKStrategy nkstrategy_from_positional(const PositionalStrategy& strat,
                                      const RelStructure& a,
                                      const RelStructure& b, int depth);

// Exhaustive homomorphism check of the table against the streamed relations
// of the block-depth truncation of H_{n,k}(source).
struct HomReport {
  bool ok = true;
  std::string witness;
};
HomReport verify_kleisli_morphism(const KleisliMorphism& f,
                                  std::uint64_t guard = 200'000'000);

// Branch-map classification. Branch maps are x -> f([t|x]) per structured
// history t of block depth < m; `strong` additionally requires that the
// induced play reflects atoms (and stays injective) along every structured
// history, i.e. the strategy also wins the two-sided game to the table's
// depth.
struct MorphismClass {
  bool branch_injective = true;
  bool branch_surjective = true;
  bool branch_bijective = true;
  bool strong = true;
  int depth = 0;
};
MorphismClass classify_morphism(const KleisliMorphism& f);

// A ~=_K B at grade (n,k): decided through the committed bijection game,
// whose winning strategies are exactly the strong branch-bijective Kleisli
// morphisms.
bool kleisli_iso_check(const RelStructure& a, const RelStructure& b, int n,
                       int k);

}  // namespace gqc
