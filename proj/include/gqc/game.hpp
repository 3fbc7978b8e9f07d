#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gqc/structure.hpp"

namespace gqc {

// The (n, k, x_i, x_s, x_n) parameter cube selecting one of the eight games
// at grade (n, k).
struct GameVariant {
  int n = 1;
  int k = 1;
  bool xi = false;  // Duplicator's functions must be injective
  bool xs = false;  // ... surjective
  bool xn = false;  // atoms reflected as well as preserved
  void validate() const;
  auto operator<=>(const GameVariant&) const = default;
};

// Compact code for a partial map |A| -> |B| (digit |B| means undefined).
using MapCode = std::uint64_t;

MapCode encode_map(const std::vector<int>& map, int bsize);
std::vector<int> decode_map(MapCode code, int asize, int bsize);

// A set of partial homomorphisms closed under the refinement process.
// Members are stored as map codes; `universe` is the full Part^k_{x_n} set.
struct BackAndForthSystem {
  GameVariant grade;
  int stage = 0;
  const RelStructure* source = nullptr;
  const RelStructure* target = nullptr;
  std::vector<MapCode> part;        // Part^k_{x_n}, sorted
  std::vector<bool> alive;          // parallel to part
  bool contains(MapCode code) const;
  int index_of(MapCode code) const;  // -1 if not in part
  std::vector<MapCode> members() const;
  size_t member_count() const;
};

struct ForthWitness {
  MapCode base;
  std::vector<int> extension;  // total map
};

struct PositionalStrategy {
  GameVariant grade;
  std::map<MapCode, std::vector<int>> choice;
};

struct EliminationRecord {
  int stage;
  MapCode map;
  // One failing (C, D) pair per admissible candidate extension; empty when the
  // candidate pool itself is empty (cardinality obstruction) or the map was
  // removed by restriction-closure (closure_victim).
  struct Certificate {
    std::vector<int> extension;
    std::uint32_t c_mask;
    std::uint32_t d_mask;
  };
  std::vector<Certificate> certificates;
  bool closure_victim = false;
};

BackAndForthSystem initial_system(const RelStructure& a, const RelStructure& b,
                                  const GameVariant& v);

// Forth witness search (lexicographically least witness, or nullopt).
std::optional<std::vector<int>> forth_check(const std::vector<int>& f,
                                            const BackAndForthSystem& s,
                                            const GameVariant& v);

// Two round orders are supported. In the standard order Spoiler first
// announces which pebbles he lifts, then Duplicator commits a function
// extending the remaining pairs, then Spoiler places. In the *committed*
// order Duplicator commits the function before the announcement, extending
// the full pre-move position; this is the order under which winning
// strategies correspond exactly to Kleisli morphisms of the game comonad.
// The committed fixpoint subjects members of every size (including |f| = k)
// to the forth condition; the standard one lets size-k members survive
// vacuously, since full positions are interrogated through their
// restrictions after Spoiler lifts a pebble.
BackAndForthSystem refine(const BackAndForthSystem& s, const GameVariant& v,
                          std::vector<EliminationRecord>* trace = nullptr,
                          bool committed = false);

BackAndForthSystem canonical_system(const RelStructure& a,
                                    const RelStructure& b,
                                    const GameVariant& v,
                                    std::vector<EliminationRecord>* trace = nullptr,
                                    bool committed = false);

bool duplicator_wins(const RelStructure& a, const RelStructure& b,
                     const GameVariant& v);

bool duplicator_wins_committed(const RelStructure& a, const RelStructure& b,
                               const GameVariant& v);

struct CubeVerdict {
  // verdict[xi][xs][xn]
  bool verdict[2][2][2] = {};
  bool monotone = true;
};

CubeVerdict verdict_cube(const RelStructure& a, const RelStructure& b, int n,
                         int k);

PositionalStrategy synthesize_strategy(const BackAndForthSystem& s,
                                       const GameVariant& v,
                                       bool committed = false);

// Exact certificate: every chosen map is a valid forth witness; reports the
// first violation if any.
struct StrategyReport {
  bool ok = true;
  MapCode bad_key = 0;
  std::uint32_t c_mask = 0, d_mask = 0;
  std::string reason;
};
StrategyReport verify_strategy(const BackAndForthSystem& s,
                               const PositionalStrategy& strat,
                               const GameVariant& v, bool committed = false);

// Independent oracle: greatest fixpoint over pebble positions, modelling the
// game rules directly.
bool solve_by_position_graph(const RelStructure& a, const RelStructure& b,
                             const GameVariant& v,
                             std::uint64_t guard = 1u << 22);

// Same oracle for the committed round order (Duplicator commits the function
// before Spoiler's announcement).
bool solve_by_position_graph_committed(const RelStructure& a,
                                       const RelStructure& b,
                                       const GameVariant& v,
                                       std::uint64_t guard = 1u << 22);

std::vector<EliminationRecord> elimination_trace(const RelStructure& a,
                                                 const RelStructure& b,
                                                 const GameVariant& v);

// Re-derives the canonical system from a trace; returns true when the replay
// verifies every certificate and reproduces the fixpoint member set.
bool replay_trace(const RelStructure& a, const RelStructure& b,
                  const GameVariant& v,
                  const std::vector<EliminationRecord>& trace,
                  const BackAndForthSystem& expected);

// Finite-horizon game value by direct recursion on rounds (used for
// simulation-style tests; independent of the fixpoint engine).
bool limited_game_value(const RelStructure& a, const RelStructure& b,
                        const GameVariant& v, int rounds);

}  // namespace gqc
