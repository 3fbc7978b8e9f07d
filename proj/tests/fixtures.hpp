#pragma once

// Shared structure builders for tests.

#include <string>
#include <vector>

#include "gqc/structure.hpp"

namespace gqc::testing {

inline RelStructure graph(std::vector<std::string> verts,
                          std::vector<std::pair<std::string, std::string>> edges,
                          bool symmetric = true) {
  RelStructure a;
  a.sig.relations = {{"E", 2}};
  a.universe = std::move(verts);
  a.tuples.assign(1, {});
  for (const auto& [u, v] : edges) {
    a.add_tuple(0, {a.element_index(u), a.element_index(v)});
    if (symmetric) a.add_tuple(0, {a.element_index(v), a.element_index(u)});
  }
  a.validate();
  return a;
}

inline RelStructure clique(int m) {
  std::vector<std::string> vs;
  for (int i = 0; i < m; ++i) vs.push_back(std::string(1, static_cast<char>('a' + i)));
  std::vector<std::pair<std::string, std::string>> es;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) es.push_back({vs[static_cast<size_t>(i)], vs[static_cast<size_t>(j)]});
  return graph(vs, es);
}

inline RelStructure cycle(int m, const std::string& prefix = "v") {
  std::vector<std::string> vs;
  for (int i = 0; i < m; ++i) vs.push_back(prefix + std::to_string(i));
  std::vector<std::pair<std::string, std::string>> es;
  for (int i = 0; i < m; ++i) es.push_back({vs[static_cast<size_t>(i)], vs[static_cast<size_t>((i + 1) % m)]});
  return graph(vs, es);
}

inline RelStructure path(int m) {
  std::vector<std::string> vs;
  for (int i = 0; i < m; ++i) vs.push_back("p" + std::to_string(i));
  std::vector<std::pair<std::string, std::string>> es;
  for (int i = 0; i + 1 < m; ++i) es.push_back({vs[static_cast<size_t>(i)], vs[static_cast<size_t>(i + 1)]});
  return graph(vs, es);
}

inline RelStructure two_triangles() {
  return graph({"u0", "u1", "u2", "w0", "w1", "w2"},
               {{"u0", "u1"}, {"u1", "u2"}, {"u2", "u0"},
                {"w0", "w1"}, {"w1", "w2"}, {"w2", "w0"}});
}

// The 7-node tree T: root t0 with children t1, t2, t3; t1 has t4, t5; t3 has t6.
inline RelStructure tree_t() {
  return graph({"t0", "t1", "t2", "t3", "t4", "t5", "t6"},
               {{"t0", "t1"}, {"t0", "t2"}, {"t0", "t3"},
                {"t1", "t4"}, {"t1", "t5"}, {"t3", "t6"}});
}

// T' = T plus ternary hyperedges {t0,t1,t2}, {t0,t1,t3}, {t0,t2,t3}, {t1,t4,t5}.
inline RelStructure hypergraph_tprime() {
  RelStructure a = tree_t();
  a.sig.relations.push_back({"H", 3});
  a.tuples.push_back({});
  auto idx = [&](const char* s) { return a.element_index(s); };
  a.add_tuple(1, {idx("t0"), idx("t1"), idx("t2")});
  a.add_tuple(1, {idx("t0"), idx("t1"), idx("t3")});
  a.add_tuple(1, {idx("t0"), idx("t2"), idx("t3")});
  a.add_tuple(1, {idx("t1"), idx("t4"), idx("t5")});
  a.validate();
  return a;
}

inline RelStructure single_vertex() { return graph({"a"}, {}); }

}  // namespace gqc::testing
