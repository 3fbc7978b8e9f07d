#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gqc/hella.hpp"
#include "gqc/history.hpp"
#include "gqc/structure.hpp"

namespace gqc {

// ---------------------------------------------------------------------------
// Ordinary and extended tree decompositions.
// ---------------------------------------------------------------------------

// Rooted tree with one bag of element indices per node. parent[i] = -1 marks
// the root; any node order is accepted (validated structurally).
struct TreeDecomposition {
  std::vector<int> parent;
  std::vector<std::set<int>> bags;
  int size() const { return static_cast<int>(parent.size()); }
};

struct TdReport {
  bool valid = true;
  int width = -1;  // max bag size - 1
  std::vector<std::string> errors;
};

TdReport validate_td(const RelStructure& a, const TreeDecomposition& t);

// Each node carries a fixed bag beta and a floating bag gamma; with
// B = beta ∪ gamma, (T, B) must be a tree decomposition, and an element of
// gamma(t) may only reappear at descendants of t.
struct ExtendedTreeDecomposition {
  std::vector<int> parent;
  std::vector<std::set<int>> beta, gamma;
  int size() const { return static_cast<int>(parent.size()); }
};

struct EtdReport {
  bool valid = true;
  int width = 0;  // max |beta(t)|
  int arity = 0;  // least n satisfying both arity clauses
  std::vector<std::string> errors;
};

EtdReport validate_etd(const RelStructure& a,
                       const ExtendedTreeDecomposition& d);

// The structured conditions at grade (n, k): every element floats somewhere,
// every gamma is nonempty, every child's beta meets the parent's gamma, and
// every parent/child/grandchild chain satisfies the three-way disjunction.
bool etd_structured(const RelStructure& a, const ExtendedTreeDecomposition& d,
                    int n, int k, std::string* why = nullptr);

// Width-k tree decomposition -> width-k arity-1 ETD, via normalization (all
// bags k+1, parent overlap k) and the sibling-class quotient.
ExtendedTreeDecomposition td_to_etd(const RelStructure& a,
                                    const TreeDecomposition& t, int k);

// Arity-1 ETD -> tree decomposition of width <= w(D), via spider expansion.
TreeDecomposition etd_to_td(const RelStructure& a,
                            const ExtendedTreeDecomposition& d);

// ---------------------------------------------------------------------------
// H_{n,k}-coalgebras.
// ---------------------------------------------------------------------------

// alpha(a) = [assignment[a] | a]; the counit law is forced by the shape.
struct Coalgebra {
  int n = 0, k = 0;
  RelStructure base;
  std::vector<NKHistory> assignment;  // one structured history per element
};

struct CoalgebraReport {
  bool counit = true;
  bool comult = true;
  bool hom = true;
  std::string violation;
  bool ok() const { return counit && comult && hom; }
};

CoalgebraReport check_coalgebra_laws(const Coalgebra& alpha,
                                     std::uint64_t guard = 200'000'000);

// The decomposition T_alpha: prefix closure of {s_a}, beta/gamma pulled back
// along alpha. Throws on law violations.
ExtendedTreeDecomposition coalgebra_to_etd(const Coalgebra& alpha);

// The bookkeeping construction: histories s_c per node, pebble indices via
// iota_c, with block extension / index recycling where structuredness needs
// it. Requires a valid structured ETD of width <= k and arity <= n with an
// empty root beta.
Coalgebra etd_to_coalgebra(const RelStructure& a,
                           const ExtendedTreeDecomposition& d, int n, int k);

// Exhaustive search for a law-passing coalgebra; NONE certifies that no
// structured ETD of width <= k and arity <= n exists.
std::optional<Coalgebra> coalgebra_search(const RelStructure& a, int n, int k,
                                          std::uint64_t guard = 50'000'000);

// Exact treewidth of the Gaifman graph (exponential subset dynamic program).
int treewidth_oracle(const RelStructure& a, std::uint64_t guard = 1u << 22);

// The canonical structured ETD of the block-depth truncation of H_{n,k}A:
// nodes are structured histories, beta(s) the classes of the per-pebble
// maximal prefixes, gamma(s) = {[s|a] : a in A}. Element indices of the ETD
// refer to hella_to_rel(h).
struct HnkDecomposition {
  HellaStructure h;
  ExtendedTreeDecomposition etd;
};

HnkDecomposition etd_of_Hnk(const RelStructure& a, int n, int k, int m,
                            std::uint64_t guard = 200'000'000);

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

TreeDecomposition td_from_json(const RelStructure& a, const std::string& text);
std::string td_to_json(const RelStructure& a, const TreeDecomposition& t);

ExtendedTreeDecomposition etd_from_json(const RelStructure& a,
                                        const std::string& text);
std::string etd_to_json(const RelStructure& a,
                        const ExtendedTreeDecomposition& d);
std::string etd_to_dot(const RelStructure& a,
                       const ExtendedTreeDecomposition& d);

Coalgebra coalgebra_from_json(const RelStructure& a, const std::string& text);
std::string coalgebra_to_json(const Coalgebra& alpha);

}  // namespace gqc
