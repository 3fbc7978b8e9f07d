#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "fixtures.hpp"
#include "gqc/logic.hpp"

using namespace gqc;
using namespace gqc::testing;

namespace {

FormulaPtr exists_x(std::string x, FormulaPtr body) {
  QuantInterp in{"U", {x}, std::move(body)};
  return make_quant("exists", {x}, {std::move(in)});
}

FormulaPtr forall_x(std::string x, FormulaPtr body) {
  QuantInterp in{"U", {x}, std::move(body)};
  return make_quant("forall", {x}, {std::move(in)});
}

// K = "has an edge" over a single binary relation.
QuantifierOracle has_edge_oracle() {
  QuantifierOracle q;
  q.name = "has_edge";
  q.sig.relations = {{"E", 2}};
  q.arity = 2;
  q.size_bound = 16;
  q.declared_closure = ClosureClass::Hom;
  q.membership = [](const RelStructure& a) { return !a.tuples[0].empty(); };
  return q;
}

bool same_semantics(const FormulaPtr& f, const FormulaPtr& g,
                    const std::vector<RelStructure>& structures,
                    const OracleRegistry& reg) {
  auto fv = free_variables(f);
  if (fv != free_variables(g)) return false;
  std::vector<std::string> vars(fv.begin(), fv.end());
  for (const auto& a : structures) {
    std::vector<int> pick(vars.size(), 0);
    while (true) {
      Assignment asg;
      for (size_t i = 0; i < vars.size(); ++i) asg[vars[i]] = pick[i];
      if (eval_formula(a, f, asg, reg) != eval_formula(a, g, asg, reg))
        return false;
      size_t i = 0;
      for (; i < pick.size(); ++i) {
        if (++pick[i] < a.size()) break;
        pick[i] = 0;
      }
      if (i == pick.size()) break;
    }
    if (vars.empty()) continue;
    if (a.size() == 0) continue;
  }
  return true;
}

}  // namespace

TEST_CASE("eval_formula: existential and universal basics") {
  OracleRegistry reg = builtin_oracles();
  RelStructure k2 = clique(2);

  // No loops: Ex.E(x,x) is false, Ex.Ey.E(x,y) is true.
  CHECK_FALSE(eval_formula(k2, exists_x("x", make_atom("E", {"x", "x"})), {}, reg));
  CHECK(eval_formula(
      k2, exists_x("x", exists_x("y", make_atom("E", {"x", "y"}))), {}, reg));
  // Ax.E(x,y) with y fixed fails (no loop at y).
  CHECK_FALSE(eval_formula(k2, forall_x("x", make_atom("E", {"x", "y"})),
                           {{"y", 0}}, reg));
  // Ax.Ey.E(x,y) holds on K2.
  CHECK(eval_formula(
      k2, forall_x("x", exists_x("y", make_atom("E", {"x", "y"}))), {}, reg));
  // Negated atom.
  CHECK(eval_formula(k2, make_atom("E", {"x", "x"}, true), {{"x", 0}}, reg));
}

TEST_CASE("eval_formula: cardinality quantifiers") {
  OracleRegistry reg = builtin_oracles();
  RelStructure k2 = clique(2), k3 = clique(3);
  FormulaPtr card2 = make_quant("card_2", {"x"}, {});
  FormulaPtr geq3 = make_quant("geq_3", {"x"}, {});
  FormulaPtr leq2 = make_quant("leq_2", {"x"}, {});
  CHECK(eval_formula(k2, card2, {}, reg));
  CHECK_FALSE(eval_formula(k3, card2, {}, reg));
  CHECK(eval_formula(k3, geq3, {}, reg));
  CHECK_FALSE(eval_formula(k2, geq3, {}, reg));
  CHECK(eval_formula(k2, leq2, {}, reg));
  CHECK_FALSE(eval_formula(k3, leq2, {}, reg));
}

TEST_CASE("eval_formula: guards and errors") {
  OracleRegistry reg = builtin_oracles();
  QuantifierOracle tiny = reg.at("exists");
  tiny.name = "tiny";
  tiny.size_bound = 1;
  reg.add(tiny);
  RelStructure k2 = clique(2);
  QuantInterp in{"U", {"x"}, make_atom("E", {"x", "x"})};
  CHECK_THROWS_AS(
      eval_formula(k2, make_quant("tiny", {"x"}, {in}), {}, reg),
      ResourceGuardError);
  CHECK_THROWS_AS(eval_formula(k2, make_atom("E", {"x", "y"}), {{"x", 0}}, reg),
                  PreconditionError);
  CHECK_THROWS_AS(eval_formula(k2, make_atom("Z", {"x"}), {{"x", 0}}, reg),
                  ValidationError);
  CHECK_THROWS_AS(eval_formula(k2, make_quant("nope", {"x"}, {}), {}, reg),
                  ValidationError);
}

TEST_CASE("free and bound variables") {
  FormulaPtr f = exists_x("x", make_and({make_atom("E", {"x", "y"}),
                                         make_atom("E", {"y", "z"})}));
  CHECK(free_variables(f) == std::set<std::string>{"y", "z"});
  CHECK(all_variables(f) == std::set<std::string>{"x", "y", "z"});
}

TEST_CASE("check_closure: builtin oracles") {
  OracleRegistry reg = builtin_oracles();
  CHECK(check_closure(reg.at("exists"), ClosureClass::Hom, 2).pass);
  CHECK(check_closure(reg.at("forall"), ClosureClass::Surj, 2).pass);
  // forall is not hom-closed: adding an element outside U breaks it.
  ClosureReport bad = check_closure(reg.at("forall"), ClosureClass::Hom, 2);
  CHECK_FALSE(bad.pass);
  CHECK(reg.at("forall").membership(bad.a));
  CHECK_FALSE(reg.at("forall").membership(bad.b));
  CHECK(check_closure(reg.at("geq_2"), ClosureClass::Inj, 3).pass);
  CHECK_FALSE(check_closure(reg.at("geq_2"), ClosureClass::Surj, 3).pass);
  CHECK(check_closure(reg.at("leq_2"), ClosureClass::Surj, 3).pass);
  CHECK_FALSE(check_closure(reg.at("leq_2"), ClosureClass::Inj, 3).pass);
  CHECK(check_closure(reg.at("card_2"), ClosureClass::Bij, 3).pass);
  CHECK_FALSE(check_closure(reg.at("card_2"), ClosureClass::Inj, 3).pass);
}

TEST_CASE("q-types of unary hom-closed classes") {
  OracleRegistry reg = builtin_oracles();
  // U != 0: the q-type is {{ {U} }}.
  UnaryTypeData ex = qtype_unary(reg.at("exists"), 2);
  CHECK(ex.m == 1);
  CHECK(ex.q_type ==
        std::set<std::set<std::set<int>>>{{std::set<int>{0}}});

  // K = all structures: the empty structure is arrow-least, so the q-type is
  // the singleton containing the empty u-type.
  QuantifierOracle triv;
  triv.name = "triv";
  triv.sig.relations = {{"U", 1}};
  triv.declared_closure = ClosureClass::Hom;
  triv.membership = [](const RelStructure&) { return true; };
  UnaryTypeData all = qtype_unary(triv, 2);
  CHECK(all.q_type == std::set<std::set<std::set<int>>>{{}});
}

TEST_CASE("unary_to_existential preserves semantics") {
  OracleRegistry reg = builtin_oracles();
  std::vector<RelStructure> structures = {clique(2), clique(3), path(3),
                                          cycle(5), single_vertex()};

  SUBCASE("existential quantifier translates to itself semantically") {
    FormulaPtr f = exists_x("x", make_atom("E", {"x", "y"}));
    FormulaPtr g = unary_to_existential(f, reg, 2);
    CHECK(same_semantics(f, g, structures, reg));
  }

  SUBCASE("nested unary quantifiers") {
    FormulaPtr f = exists_x(
        "x", make_and({make_atom("E", {"x", "y"}),
                       exists_x("z", make_atom("E", {"x", "z"}))}));
    FormulaPtr g = unary_to_existential(f, reg, 2);
    CHECK(same_semantics(f, g, structures, reg));
  }

  SUBCASE("interpreted variable differing from the bound variable") {
    QuantInterp in{"U", {"z"}, make_atom("E", {"z", "y"})};
    FormulaPtr f = make_quant("exists", {"x"}, {in});
    FormulaPtr g = unary_to_existential(f, reg, 2);
    CHECK(same_semantics(f, g, structures, reg));
  }

  SUBCASE("capture risk: x free in the body under another placeholder") {
    QuantInterp in{"U", {"z"}, make_atom("E", {"z", "x"})};
    FormulaPtr f = make_quant("exists", {"x"}, {in});  // x is outer-free here
    FormulaPtr g = unary_to_existential(f, reg, 2);
    CHECK(same_semantics(f, g, structures, reg));
  }

  SUBCASE("two-relation hom-closed oracle") {
    QuantifierOracle both;
    both.name = "both";
    both.sig.relations = {{"U0", 1}, {"U1", 1}};
    both.declared_closure = ClosureClass::Hom;
    both.membership = [](const RelStructure& a) {
      return !a.tuples[0].empty() && !a.tuples[1].empty();
    };
    reg.add(both);
    std::vector<QuantInterp> ins = {
        {"U0", {"x"}, make_atom("E", {"x", "y"})},
        {"U1", {"x"}, make_atom("E", {"x", "x"}, true)}};
    FormulaPtr f = make_quant("both", {"x"}, std::move(ins));
    FormulaPtr g = unary_to_existential(f, reg, 4);
    CHECK(g->kind == Formula::Kind::Or);
    CHECK(same_semantics(f, g, structures, reg));
  }

  SUBCASE("K = all structures becomes a vacuous truth") {
    QuantifierOracle triv;
    triv.name = "triv";
    triv.sig.relations = {{"U", 1}};
    triv.declared_closure = ClosureClass::Hom;
    triv.membership = [](const RelStructure&) { return true; };
    reg.add(triv);
    QuantInterp in{"U", {"x"}, make_atom("E", {"x", "x"})};
    FormulaPtr f = make_quant("triv", {"x"}, {in});
    FormulaPtr g = unary_to_existential(f, reg, 2);
    // Single disjunct, empty conjunction.
    REQUIRE(g->kind == Formula::Kind::Or);
    REQUIRE(g->args.size() == 1);
    CHECK(g->args[0]->kind == Formula::Kind::And);
    CHECK(g->args[0]->args.empty());
    CHECK(same_semantics(f, g, structures, reg));
  }
}

TEST_CASE("negation_closure_lift is bijection-closed on its domain") {
  QuantifierOracle k = has_edge_oracle();
  QuantifierOracle lift = negation_closure_lift(k);
  CHECK(lift.sig.relations.size() == 2);
  CHECK(lift.sig.relations[1].name == "E_bar");
  CHECK(lift.declared_closure == ClosureClass::Bij);
  CHECK(check_closure(lift, ClosureClass::Bij, 3).pass);

  // A structure whose bar relation is not the complement is rejected.
  RelStructure bad;
  bad.sig = lift.sig;
  bad.universe = {"a"};
  bad.tuples = {{{0, 0}}, {{0, 0}}};
  CHECK_FALSE(lift.membership(bad));

  RelStructure good;
  good.sig = lift.sig;
  good.universe = {"a"};
  good.tuples = {{{0, 0}}, {}};
  CHECK(lift.membership(good));
}

TEST_CASE("complement_query flips membership and keeps iso closure") {
  QuantifierOracle k = has_edge_oracle();
  QuantifierOracle c = complement_query(k);
  CHECK(c.declared_closure == ClosureClass::Iso);
  RelStructure k2 = clique(2);
  RelStructure lone = single_vertex();
  CHECK(k.membership(k2));
  CHECK_FALSE(c.membership(k2));
  CHECK(c.membership(lone));
  CHECK(check_closure(c, ClosureClass::Iso, 2).pass);
  // The complement of a hom-closed class need not be hom-closed.
  CHECK_FALSE(check_closure(c, ClosureClass::Hom, 2).pass);
}

TEST_CASE("counting equivalence oracle (Weisfeiler-Leman)") {
  RelStructure c6 = cycle(6);
  RelStructure c3a = cycle(3, "u"), c3b = cycle(3, "w");
  RelStructure cc = two_triangles();
  CHECK(counting_equiv_oracle(c6, c6, 2));
  CHECK(counting_equiv_oracle(c6, cc, 2));   // 1-WL cannot split them
  CHECK_FALSE(counting_equiv_oracle(c6, cc, 3));  // 2-WL does
  CHECK_FALSE(counting_equiv_oracle(c6, cycle(5), 2));
  CHECK_FALSE(counting_equiv_oracle(clique(2), clique(3), 2));
  CHECK(counting_equiv_oracle(path(3), path(3), 3));
}

TEST_CASE("preserves_validity") {
  OracleRegistry reg = builtin_oracles();
  RelStructure k2 = clique(2);
  PartialHom id{&k2, &k2, {0, 1}, false};
  CHECK(preserves_validity(id, make_atom("E", {"x", "y"}), reg));
  CHECK(preserves_validity(id, exists_x("z", make_atom("E", {"x", "z"})), reg));

  // Collapsing both endpoints of the edge kills E(x,y).
  PartialHom collapse{&k2, &k2, {0, 0}, false};
  CHECK_FALSE(preserves_validity(collapse, make_atom("E", {"x", "y"}), reg));
  // But it preserves the negated loop atom.
  CHECK(preserves_validity(collapse, make_atom("E", {"x", "x"}, true), reg));
}

TEST_CASE("formula JSON round trip") {
  FormulaPtr f = make_or(
      {make_and({make_atom("E", {"x", "y"}), make_atom("E", {"x", "x"}, true)}),
       exists_x("z", make_atom("E", {"y", "z"})),
       make_quant("card_2", {"w"}, {})});
  std::string text = formula_to_json(f);
  FormulaPtr g = formula_from_json(text);
  CHECK(formula_to_json(g) == text);
  OracleRegistry reg = builtin_oracles();
  RelStructure p3 = path(3);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      Assignment asg{{"x", x}, {"y", y}};
      CHECK(eval_formula(p3, f, asg, reg) == eval_formula(p3, g, asg, reg));
    }
  CHECK_THROWS_AS(formula_from_json("{nope"), ParseError);
  CHECK_THROWS_AS(formula_from_json(R"({"tag":"zap"})"), ValidationError);
}

TEST_CASE("generate_formulas is deterministic and evaluable") {
  Signature sig;
  sig.relations = {{"E", 2}};
  auto fs1 = generate_formulas(sig, 25, 2, 2, 7);
  auto fs2 = generate_formulas(sig, 25, 2, 2, 7);
  REQUIRE(fs1.size() == 25);
  for (size_t i = 0; i < fs1.size(); ++i)
    CHECK(formula_to_json(fs1[i]) == formula_to_json(fs2[i]));
  auto fs3 = generate_formulas(sig, 25, 2, 2, 8);
  bool any_diff = false;
  for (size_t i = 0; i < fs1.size(); ++i)
    if (formula_to_json(fs1[i]) != formula_to_json(fs3[i])) any_diff = true;
  CHECK(any_diff);

  OracleRegistry reg = builtin_oracles();
  RelStructure k2 = clique(2);
  Assignment asg{{"x0", 0}, {"x1", 1}};
  for (const auto& f : fs1) eval_formula(k2, f, asg, reg);  // must not throw
}
