#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gqc/errors.hpp"

namespace gqc {

struct Signature {
  struct Rel {
    std::string name;
    int arity = 1;
    bool operator==(const Rel&) const = default;
  };
  std::vector<Rel> relations;

  void validate() const;
  int index_of(const std::string& name) const;  // -1 if absent
  bool operator==(const Signature&) const = default;
};

// Finite relational structure. Elements are referred to by index into
// `universe` in all internal tuple storage; public ids are strings.
struct RelStructure {
  Signature sig;
  std::vector<std::string> universe;
  // tuples[r] is the sorted set of index-tuples of relation sig.relations[r].
  std::vector<std::vector<std::vector<int>>> tuples;

  int size() const { return static_cast<int>(universe.size()); }
  int element_index(const std::string& id) const;  // throws ValidationError
  void validate() const;
  bool has_tuple(int rel, const std::vector<int>& tup) const;
  void add_tuple(int rel, std::vector<int> tup);
  void sort_tuples();

  bool operator==(const RelStructure&) const = default;
};

// Partial map between two structures, stored as target index per source
// index (-1 = undefined).
struct PartialHom {
  const RelStructure* source = nullptr;
  const RelStructure* target = nullptr;
  std::vector<int> map;  // size |source|, entries in [-1, |target|)
  bool preserve_negations = false;

  int domain_size() const;
  static PartialHom empty(const RelStructure& a, const RelStructure& b, bool xn = false);
};

RelStructure load_structure(const std::string& json_text);
std::string dump_structure(const RelStructure& a);

RelStructure with_identity(const RelStructure& a);

bool is_partial_hom(const PartialHom& m);

// All partial homomorphisms with |domain| <= k (negation-preserving iff xn).
std::vector<PartialHom> enumerate_partial_maps(const RelStructure& a,
                                               const RelStructure& b, int k,
                                               bool xn);

// Brute-force oracles. Witnesses are target indices per source index.
std::optional<std::vector<int>> hom_exists(const RelStructure& a,
                                           const RelStructure& b);
std::optional<std::vector<int>> iso_exists(const RelStructure& a,
                                           const RelStructure& b);

// Gaifman graph as an adjacency matrix (indices into the universe).
std::vector<std::vector<bool>> gaifman_graph(const RelStructure& a);

}  // namespace gqc
