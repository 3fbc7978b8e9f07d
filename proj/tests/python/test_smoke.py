"""Smoke tests for the python module: load fixtures, run each operation
family once, check a handful of known verdicts."""

import json
import os
import sys

try:
    import gqc as m
except ImportError:
    import _gqc as m

FIXTURES = os.environ.get("GQC_FIXTURES", "fixtures")


def fixture(name):
    with open(os.path.join(FIXTURES, name), "r", encoding="utf-8") as fh:
        return fh.read()


def struct(name):
    return m.load_structure(fixture(name))


failures = []


def check(cond, label):
    print(("ok   " if cond else "FAIL ") + label)
    if not cond:
        failures.append(label)


k2 = struct("K2.json")
k3 = struct("K3.json")
p3 = struct("P3.json")
c6 = struct("C6.json")
two_c3 = struct("2C3.json")

# Structures round-trip through JSON.
check(m.load_structure(k3.to_json()).size == 3, "structure json round trip")
check(list(k2.universe) == ["a", "b"], "universe exposed")

# Homomorphism / isomorphism oracles.
check(m.hom_exists(k2, k3) is not None, "hom K2 -> K3 exists")
check(m.hom_exists(k3, k2) is None, "no hom K3 -> K2")
check(m.iso_exists(c6, two_c3) is None, "C6 not isomorphic to 2C3")

# Game verdicts: C6 and 2C3 agree under 1-WL (bijection game, k = 2) but
# are separated by 2-WL (k = 3).
check(m.duplicator_wins(c6, two_c3, 1, 2, xi=True, xs=True, xn=True),
      "bijection game k=2 on C6 vs 2C3")
check(not m.duplicator_wins(c6, two_c3, 1, 3, xi=True, xs=True, xn=True),
      "bijection game k=3 separates C6 from 2C3")
check(m.counting_equiv(c6, two_c3, 2) and not m.counting_equiv(c6, two_c3, 3),
      "WL oracle matches")

# The independent position-graph oracle agrees on a sample.
for (xi, xs, xn) in [(0, 0, 0), (1, 1, 1), (1, 0, 0)]:
    a = m.duplicator_wins(p3, k3, 2, 2, xi=bool(xi), xs=bool(xs), xn=bool(xn))
    b = m.solve_by_position_graph(p3, k3, 2, 2, xi=bool(xi), xs=bool(xs),
                                  xn=bool(xn))
    check(a == b, f"oracles agree on P3 vs K3 at x=({xi},{xs},{xn})")

cube = m.verdict_cube(k2, k3, 1, 2)
check(cube["monotone"], "verdict cube monotone")
check(cube["verdict"][(False, False, False)], "existential-positive verdict")

check(m.kleisli_iso_check(k3, k3, 2, 2), "K3 Kleisli-isomorphic to itself")
check(not m.kleisli_iso_check(k2, k3, 2, 2), "K2 not Kleisli-iso to K3")

# Comonad laws.
rep = m.check_comonad_laws(k2, 1, 2, 2)
check(rep["ok"], "comonad laws on K2 at (1, 2), depth 2")

# Decompositions and coalgebras.
check(m.treewidth(k3) == 2 and m.treewidth(p3) == 1, "treewidth oracle")
td = fixture("td_t_per_edge.json")
tree_t = struct("treeT.json")
check(m.validate_td(tree_t, td)["valid"], "fixture TD validates")
etd = m.td_to_etd(tree_t, td, 1)
r = m.validate_etd(tree_t, etd)
check(r["valid"] and r["width"] <= 1 and r["arity"] <= 1, "td_to_etd bounds")
check(m.validate_td(tree_t, m.etd_to_td(tree_t, etd))["valid"],
      "etd_to_td validates")

coalg = m.coalgebra_search(p3, 1, 2)
check(coalg is not None, "coalgebra found for P3 at (1, 2)")
etd2 = m.coalgebra_to_etd(p3, coalg)
r2 = m.validate_etd(p3, etd2)
check(r2["valid"] and m.etd_structured(p3, etd2, 1, 2),
      "coalgebra ETD structured")
check(m.coalgebra_search(k2, 1, 1) is None, "no (1, 1)-coalgebra on K2")

hd = m.etd_of_hnk(k2, 1, 2, 1)
check(hd["report"]["valid"] and hd["report"]["width"] <= 2
      and hd["report"]["arity"] <= 1, "etd_of_hnk bounds")

# Logic: exists x . E(x, x) fails on loop-free K2.
phi = fixture("formula_exists_loop.json")
check(not m.eval_formula(k2, phi), "no loop in K2")
psi = m.unary_to_existential(phi, 3)
check(json.loads(psi) is not None
      and m.eval_formula(k2, psi) == m.eval_formula(k2, phi),
      "unary_to_existential preserves semantics")

print(f"{len(failures)} failures")
sys.exit(0 if not failures else 1)
