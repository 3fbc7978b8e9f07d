#pragma once

#include <map>
#include <string>
#include <vector>

#include "gqc/errors.hpp"

namespace gqc {

// A k-history is a sequence of (element index, pebble index) moves.
// Pebble indices are 1-based (in [1, k]); element indices refer to a
// structure universe.
struct Move {
  int elem = -1;
  int peb = 0;
  auto operator<=>(const Move&) const = default;
};

using KHistory = std::vector<Move>;
using BasicBlock = std::vector<Move>;   // <= n moves, distinct pebble indices
using NKHistory = std::vector<BasicBlock>;

bool is_basic(const BasicBlock& b, int n);

// F: concatenate blocks.
KHistory flatten(const NKHistory& t);

// S_n: greedy maximal-basic-prefix decomposition.
NKHistory structure_n(const KHistory& s, int n);

// Structured n,k-histories: every successive block pair (s, s') has |s| = n
// or s' begins with a pebble index occurring in s.
bool is_structured(const NKHistory& t, int n, int k);

// alpha_n(s, p): with S_n(s) = t;[s'], keep the pending block s' iff
// |s'| = n or p occurs in s'.
NKHistory alpha_n(const KHistory& s, int p, int n);

// Lifting-strategy link insertion; identity for n = 1 and structured input.
NKHistory structured_companion(const NKHistory& t, int n, int k);

// Serialization helpers (element indices resolved against a universe).
std::string khistory_key(const KHistory& s);
std::string nkhistory_key(const NKHistory& t);

// --- Strategies ------------------------------------------------------------
// Extensional strategies over a depth-truncated domain. Responses are total
// maps source-index -> target-index.

struct KStrategy {
  int n = 1, k = 1;
  int depth = 0;  // histories of length <= depth
  std::map<std::pair<KHistory, int>, std::vector<int>> respond;
};

struct NKStrategy {
  int n = 1, k = 1;
  int depth = 0;  // histories of <= depth blocks
  std::map<NKHistory, std::vector<int>> respond;
};

// Ψ'(s, p) = Ψ(alpha_n(s, p)); output is n-consistent by construction.
KStrategy project_strategy(const NKStrategy& psi, int source_size, int depth);

bool is_n_consistent(const KStrategy& psi);

// Ψ'(t) = Ψ(F(t~), p) with t~ the structured companion of t and p the last
// pebble index of t (1 for the empty history). Requires n-consistency.
NKStrategy lift_strategy(const KStrategy& psi, int source_size, int depth);

// Enumeration helpers for truncated strategy domains.
std::vector<KHistory> all_khistories(int universe, int k, int max_len);
std::vector<NKHistory> all_nkhistories(int universe, int n, int k, int max_blocks);
std::vector<NKHistory> all_structured_histories(int universe, int n, int k,
                                                int max_blocks);

// Pebbled position after a history: last element per pebble index, as a list
// of (pebble, element) with pebbles in increasing order.
std::vector<std::pair<int, int>> position_of(const KHistory& s);

}  // namespace gqc
