#include "gqc/structure.hpp"

#include <algorithm>
#include <functional>

#include "json.hpp"

namespace gqc {

using nlohmann::json;

void Signature::validate() const {
  std::set<std::string> seen;
  for (const auto& r : relations) {
    if (r.name.empty()) throw ValidationError("signature: empty relation name");
    if (r.arity < 1)
      throw ValidationError("signature." + r.name + ": arity must be >= 1");
    if (!seen.insert(r.name).second)
      throw ValidationError("signature." + r.name + ": duplicate relation name");
  }
}

int Signature::index_of(const std::string& name) const {
  for (size_t i = 0; i < relations.size(); ++i)
    if (relations[i].name == name) return static_cast<int>(i);
  return -1;
}

int RelStructure::element_index(const std::string& id) const {
  for (size_t i = 0; i < universe.size(); ++i)
    if (universe[i] == id) return static_cast<int>(i);
  throw ValidationError("universe: unknown element id '" + id + "'");
}

void RelStructure::validate() const {
  sig.validate();
  if (universe.empty()) throw ValidationError("universe: must be nonempty");
  std::set<std::string> seen;
  for (const auto& id : universe)
    if (!seen.insert(id).second)
      throw ValidationError("universe: duplicate element id '" + id + "'");
  if (tuples.size() != sig.relations.size())
    throw ValidationError("relations: wrong relation count");
  for (size_t r = 0; r < tuples.size(); ++r) {
    for (const auto& t : tuples[r]) {
      if (static_cast<int>(t.size()) != sig.relations[r].arity)
        throw ValidationError("relations." + sig.relations[r].name +
                              ": tuple length != arity");
      for (int e : t)
        if (e < 0 || e >= size())
          throw ValidationError("relations." + sig.relations[r].name +
                                ": element index out of range");
    }
  }
}

bool RelStructure::has_tuple(int rel, const std::vector<int>& tup) const {
  const auto& v = tuples[rel];
  return std::binary_search(v.begin(), v.end(), tup);
}

void RelStructure::add_tuple(int rel, std::vector<int> tup) {
  auto& v = tuples[rel];
  auto it = std::lower_bound(v.begin(), v.end(), tup);
  if (it == v.end() || *it != tup) v.insert(it, std::move(tup));
}

void RelStructure::sort_tuples() {
  for (auto& v : tuples) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

int PartialHom::domain_size() const {
  int c = 0;
  for (int x : map) c += (x >= 0);
  return c;
}

PartialHom PartialHom::empty(const RelStructure& a, const RelStructure& b, bool xn) {
  PartialHom m;
  m.source = &a;
  m.target = &b;
  m.map.assign(a.universe.size(), -1);
  m.preserve_negations = xn;
  return m;
}

RelStructure load_structure(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("structure: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("structure: expected object");
  RelStructure a;
  if (!doc.contains("signature") || !doc["signature"].is_array())
    throw ValidationError("signature: missing or not an array");
  for (const auto& r : doc["signature"]) {
    if (!r.contains("name") || !r.contains("arity"))
      throw ValidationError("signature: entries need name and arity");
    a.sig.relations.push_back({r["name"].get<std::string>(), r["arity"].get<int>()});
  }
  if (!doc.contains("universe") || !doc["universe"].is_array())
    throw ValidationError("universe: missing or not an array");
  for (const auto& e : doc["universe"]) a.universe.push_back(e.get<std::string>());
  a.tuples.assign(a.sig.relations.size(), {});
  if (doc.contains("relations")) {
    if (!doc["relations"].is_object())
      throw ValidationError("relations: expected object");
    for (auto it = doc["relations"].begin(); it != doc["relations"].end(); ++it) {
      int r = a.sig.index_of(it.key());
      if (r < 0)
        throw ValidationError("relations." + it.key() + ": unknown relation");
      for (const auto& tup : it.value()) {
        std::vector<int> t;
        for (const auto& id : tup) t.push_back(a.element_index(id.get<std::string>()));
        if (static_cast<int>(t.size()) != a.sig.relations[r].arity)
          throw ValidationError("relations." + it.key() + ": tuple length != arity");
        a.tuples[r].push_back(std::move(t));
      }
    }
  }
  a.sort_tuples();
  a.validate();
  return a;
}

std::string dump_structure(const RelStructure& a) {
  json doc;
  doc["signature"] = json::array();
  for (const auto& r : a.sig.relations)
    doc["signature"].push_back({{"name", r.name}, {"arity", r.arity}});
  doc["universe"] = a.universe;
  doc["relations"] = json::object();
  for (size_t r = 0; r < a.tuples.size(); ++r) {
    json lst = json::array();
    for (const auto& t : a.tuples[r]) {
      json tup = json::array();
      for (int e : t) tup.push_back(a.universe[e]);
      lst.push_back(tup);
    }
    doc["relations"][a.sig.relations[r].name] = lst;
  }
  return doc.dump(2);
}

RelStructure with_identity(const RelStructure& a) {
  if (a.sig.index_of("I") >= 0)
    throw ValidationError("signature.I: name already present");
  RelStructure b = a;
  b.sig.relations.push_back({"I", 2});
  std::vector<std::vector<int>> loops;
  for (int i = 0; i < a.size(); ++i) loops.push_back({i, i});
  b.tuples.push_back(std::move(loops));
  return b;
}

bool is_partial_hom(const PartialHom& m) {
  const RelStructure& a = *m.source;
  const RelStructure& b = *m.target;
  for (size_t r = 0; r < a.tuples.size(); ++r) {
    int br = b.sig.index_of(a.sig.relations[r].name);
    for (const auto& t : a.tuples[r]) {
      bool inside = true;
      for (int e : t)
        if (m.map[e] < 0) { inside = false; break; }
      if (!inside) continue;
      std::vector<int> img(t.size());
      for (size_t i = 0; i < t.size(); ++i) img[i] = m.map[t[i]];
      if (br < 0 || !b.has_tuple(br, img)) return false;
    }
  }
  if (m.preserve_negations) {
    // Reflect atoms: any domain tuple whose image is related must be related.
    std::vector<int> dom;
    for (int e = 0; e < a.size(); ++e)
      if (m.map[e] >= 0) dom.push_back(e);
    for (size_t r = 0; r < a.tuples.size(); ++r) {
      int br = b.sig.index_of(a.sig.relations[r].name);
      if (br < 0) continue;
      int ar = a.sig.relations[r].arity;
      std::vector<int> t(ar, 0), img(ar, 0);
      std::function<bool(int)> rec = [&](int pos) {
        if (pos == ar) {
          for (int i = 0; i < ar; ++i) img[i] = m.map[t[i]];
          if (b.has_tuple(br, img) && !a.has_tuple(static_cast<int>(r), t))
            return false;
          return true;
        }
        for (int e : dom) {
          t[pos] = e;
          if (!rec(pos + 1)) return false;
        }
        return true;
      };
      if (!rec(0)) return false;
    }
  }
  return true;
}

std::vector<PartialHom> enumerate_partial_maps(const RelStructure& a,
                                               const RelStructure& b, int k,
                                               bool xn) {
  if (k < 0) throw PreconditionError("enumerate_partial_maps: k must be >= 0");
  std::vector<PartialHom> out;
  PartialHom m = PartialHom::empty(a, b, xn);
  std::function<void(int, int)> rec = [&](int next, int used) {
    if (is_partial_hom(m)) out.push_back(m);
    if (used == k) return;
    for (int e = next; e < a.size(); ++e) {
      for (int t = 0; t < b.size(); ++t) {
        m.map[e] = t;
        rec(e + 1, used + 1);
      }
      m.map[e] = -1;
    }
  };
  rec(0, 0);
  return out;
}

namespace {

// Backtracking over total assignments; `bij` additionally forces a bijection
// and atom reflection.
std::optional<std::vector<int>> search_total(const RelStructure& a,
                                             const RelStructure& b, bool bij) {
  if (bij && a.size() != b.size()) return std::nullopt;
  std::vector<int> map(a.size(), -1);
  std::vector<bool> used(b.size(), false);

  auto partial_ok = [&](int placed) {
    // Check all tuples fully inside the assigned prefix [0, placed].
    for (size_t r = 0; r < a.tuples.size(); ++r) {
      int br = b.sig.index_of(a.sig.relations[r].name);
      for (const auto& t : a.tuples[r]) {
        bool inside = true;
        bool touches = false;
        for (int e : t) {
          if (e > placed) { inside = false; break; }
          if (e == placed) touches = true;
        }
        if (!inside || !touches) continue;
        std::vector<int> img(t.size());
        for (size_t i = 0; i < t.size(); ++i) img[i] = map[t[i]];
        if (br < 0 || !b.has_tuple(br, img)) return false;
      }
    }
    return true;
  };

  std::function<bool(int)> rec = [&](int e) {
    if (e == a.size()) {
      if (bij) {
        PartialHom m{&a, &b, map, true};
        if (!is_partial_hom(m)) return false;
      }
      return true;
    }
    for (int t = 0; t < b.size(); ++t) {
      if (bij && used[t]) continue;
      map[e] = t;
      if (partial_ok(e)) {
        used[t] = true;
        if (rec(e + 1)) return true;
        used[t] = false;
      }
    }
    map[e] = -1;
    return false;
  };
  if (rec(0)) return map;
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<int>> hom_exists(const RelStructure& a,
                                           const RelStructure& b) {
  return search_total(a, b, /*bij=*/false);
}

std::optional<std::vector<int>> iso_exists(const RelStructure& a,
                                           const RelStructure& b) {
  return search_total(a, b, /*bij=*/true);
}

std::vector<std::vector<bool>> gaifman_graph(const RelStructure& a) {
  std::vector<std::vector<bool>> adj(a.size(), std::vector<bool>(a.size(), false));
  for (const auto& rel : a.tuples)
    for (const auto& t : rel)
      for (int x : t)
        for (int y : t)
          if (x != y) adj[x][y] = true;
  return adj;
}

}  // namespace gqc
