// Python bindings for the gqc library.
//
// Structures, decompositions, coalgebras and formulas cross the boundary as
// JSON strings (the same formats the CLI uses); game verdicts and reports
// cross as plain Python types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "gqc/decomposition.hpp"
#include "gqc/game.hpp"
#include "gqc/hella.hpp"
#include "gqc/logic.hpp"
#include "gqc/structure.hpp"

namespace py = pybind11;
using namespace gqc;

namespace {

GameVariant variant(int n, int k, bool xi, bool xs, bool xn) {
  GameVariant v{n, k, xi, xs, xn};
  v.validate();
  return v;
}

py::dict etd_report_dict(const EtdReport& r) {
  py::dict d;
  d["valid"] = r.valid;
  d["width"] = r.width;
  d["arity"] = r.arity;
  d["errors"] = r.errors;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gqc, m) {
  m.doc() =
      "Spoiler-Duplicator game solvers, depth-graded game comonads, "
      "tree-decomposition conversions and quantifier-logic evaluation.";

  // --- structures -----------------------------------------------------------
  py::class_<RelStructure>(m, "Structure")
      .def_static("from_json",
                  [](const std::string& text) { return load_structure(text); },
                  py::arg("text"))
      .def("to_json", [](const RelStructure& a) { return dump_structure(a); })
      .def_property_readonly("size", &RelStructure::size)
      .def_property_readonly(
          "universe", [](const RelStructure& a) { return a.universe; })
      .def("__repr__", [](const RelStructure& a) {
        return "<Structure with " + std::to_string(a.size()) + " elements>";
      });

  m.def("load_structure", &load_structure, py::arg("text"),
        "Parse a structure from its JSON encoding.");
  m.def("hom_exists", &hom_exists, py::arg("a"), py::arg("b"),
        "Total homomorphism A -> B as an index list, or None.");
  m.def("iso_exists", &iso_exists, py::arg("a"), py::arg("b"),
        "Isomorphism A -> B as an index list, or None.");

  // --- games ----------------------------------------------------------------
  m.def(
      "duplicator_wins",
      [](const RelStructure& a, const RelStructure& b, int n, int k, bool xi,
         bool xs, bool xn) {
        return duplicator_wins(a, b, variant(n, k, xi, xs, xn));
      },
      py::arg("a"), py::arg("b"), py::arg("n"), py::arg("k"),
      py::arg("xi") = false, py::arg("xs") = false, py::arg("xn") = false,
      "Whether Duplicator wins the (n, k, xi, xs, xn) game from A to B.");
  m.def(
      "duplicator_wins_committed",
      [](const RelStructure& a, const RelStructure& b, int n, int k, bool xi,
         bool xs, bool xn) {
        return duplicator_wins_committed(a, b, variant(n, k, xi, xs, xn));
      },
      py::arg("a"), py::arg("b"), py::arg("n"), py::arg("k"),
      py::arg("xi") = false, py::arg("xs") = false, py::arg("xn") = false,
      "Same game with Duplicator committing her function first each round.");
  m.def(
      "solve_by_position_graph",
      [](const RelStructure& a, const RelStructure& b, int n, int k, bool xi,
         bool xs, bool xn, bool committed) {
        GameVariant v = variant(n, k, xi, xs, xn);
        return committed ? solve_by_position_graph_committed(a, b, v)
                         : solve_by_position_graph(a, b, v);
      },
      py::arg("a"), py::arg("b"), py::arg("n"), py::arg("k"),
      py::arg("xi") = false, py::arg("xs") = false, py::arg("xn") = false,
      py::arg("committed") = false,
      "Independent fixpoint oracle over explicit game positions.");
  m.def(
      "verdict_cube",
      [](const RelStructure& a, const RelStructure& b, int n, int k) {
        CubeVerdict c = verdict_cube(a, b, n, k);
        py::dict d;
        for (int xi = 0; xi < 2; ++xi)
          for (int xs = 0; xs < 2; ++xs)
            for (int xn = 0; xn < 2; ++xn)
              d[py::make_tuple(bool(xi), bool(xs), bool(xn))] =
                  c.verdict[xi][xs][xn];
        py::dict out;
        out["verdict"] = d;
        out["monotone"] = c.monotone;
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("n"), py::arg("k"),
      "All eight verdicts at grade (n, k), keyed by (xi, xs, xn).");
  m.def("kleisli_iso_check", &kleisli_iso_check, py::arg("a"), py::arg("b"),
        py::arg("n"), py::arg("k"),
        "A and B isomorphic in the grade-(n, k) Kleisli category.");
  m.def("counting_equiv", &counting_equiv_oracle, py::arg("a"), py::arg("b"),
        py::arg("k"),
        "(k-1)-dimensional Weisfeiler-Leman equivalence (arity <= 2).");

  // --- comonads ---------------------------------------------------------------
  m.def(
      "check_comonad_laws",
      [](const RelStructure& a, int n, int k, int m_depth) {
        ComonadReport r = check_comonad_laws(a, n, k, m_depth);
        py::dict d;
        d["tk_ok"] = r.tk.ok;
        d["tk_violation"] = r.tk.violation;
        d["hnk_ok"] = r.hnk.ok;
        d["hnk_violation"] = r.hnk.violation;
        d["counit_hom"] = r.counit_hom;
        d["qn_hom"] = r.qn_hom;
        d["skipped_quotient"] = r.skipped_quotient;
        d["ok"] = r.ok();
        return d;
      },
      py::arg("a"), py::arg("n"), py::arg("k"), py::arg("m"),
      "Comonad law report for T_k and H_{n,k} on A up to depth m.");

  // --- decompositions ---------------------------------------------------------
  m.def("treewidth", [](const RelStructure& a) { return treewidth_oracle(a); },
        py::arg("a"), "Exact treewidth of the Gaifman graph.");
  m.def(
      "validate_td",
      [](const RelStructure& a, const std::string& td_json) {
        TdReport r = validate_td(a, td_from_json(a, td_json));
        py::dict d;
        d["valid"] = r.valid;
        d["width"] = r.width;
        d["errors"] = r.errors;
        return d;
      },
      py::arg("a"), py::arg("td_json"));
  m.def(
      "validate_etd",
      [](const RelStructure& a, const std::string& etd_json) {
        return etd_report_dict(validate_etd(a, etd_from_json(a, etd_json)));
      },
      py::arg("a"), py::arg("etd_json"));
  m.def(
      "etd_structured",
      [](const RelStructure& a, const std::string& etd_json, int n, int k) {
        return etd_structured(a, etd_from_json(a, etd_json), n, k);
      },
      py::arg("a"), py::arg("etd_json"), py::arg("n"), py::arg("k"),
      "The structured conditions at grade (n, k).");
  m.def(
      "td_to_etd",
      [](const RelStructure& a, const std::string& td_json, int k) {
        return etd_to_json(a, td_to_etd(a, td_from_json(a, td_json), k));
      },
      py::arg("a"), py::arg("td_json"), py::arg("k"));
  m.def(
      "etd_to_td",
      [](const RelStructure& a, const std::string& etd_json) {
        return td_to_json(a, etd_to_td(a, etd_from_json(a, etd_json)));
      },
      py::arg("a"), py::arg("etd_json"));

  // --- coalgebras ---------------------------------------------------------------
  m.def(
      "coalgebra_search",
      [](const RelStructure& a, int n, int k) -> std::optional<std::string> {
        auto alpha = coalgebra_search(a, n, k);
        if (!alpha) return std::nullopt;
        return coalgebra_to_json(*alpha);
      },
      py::arg("a"), py::arg("n"), py::arg("k"),
      "A law-passing H_{n,k}-coalgebra on A as JSON, or None.");
  m.def(
      "coalgebra_to_etd",
      [](const RelStructure& a, const std::string& coalg_json) {
        return etd_to_json(a, coalgebra_to_etd(coalgebra_from_json(a, coalg_json)));
      },
      py::arg("a"), py::arg("coalgebra_json"));
  m.def(
      "etd_to_coalgebra",
      [](const RelStructure& a, const std::string& etd_json, int n, int k) {
        return coalgebra_to_json(
            etd_to_coalgebra(a, etd_from_json(a, etd_json), n, k));
      },
      py::arg("a"), py::arg("etd_json"), py::arg("n"), py::arg("k"));
  m.def(
      "etd_of_hnk",
      [](const RelStructure& a, int n, int k, int m_depth) {
        HnkDecomposition d = etd_of_Hnk(a, n, k, m_depth);
        RelStructure hrel = hella_to_rel(d.h);
        py::dict out;
        out["h"] = dump_structure(hrel);
        out["etd"] = etd_to_json(hrel, d.etd);
        out["report"] = etd_report_dict(validate_etd(hrel, d.etd));
        return out;
      },
      py::arg("a"), py::arg("n"), py::arg("k"), py::arg("m"),
      "Canonical structured ETD of the depth-m truncation of H_{n,k} A.");

  // --- logic -------------------------------------------------------------------
  m.def(
      "eval_formula",
      [](const RelStructure& a, const std::string& formula_json,
         const std::map<std::string, int>& asg) {
        return eval_formula(a, formula_from_json(formula_json), asg,
                            builtin_oracles());
      },
      py::arg("a"), py::arg("formula_json"),
      py::arg("assignment") = std::map<std::string, int>{},
      "Evaluate a formula (built-in quantifier oracles) under an assignment.");
  m.def(
      "unary_to_existential",
      [](const std::string& formula_json, int bound) {
        return formula_to_json(unary_to_existential(
            formula_from_json(formula_json), builtin_oracles(), bound));
      },
      py::arg("formula_json"), py::arg("bound") = 3,
      "Rewrite unary hom-closed quantifiers into existential form.");
}
