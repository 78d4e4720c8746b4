"""Reference evaluators written independently of the library.

They work on plain tuples rather than library objects:

* terms: ``("atom", name)`` or ``(op, [args])`` with op in or/and/seq
* LTL: ``("var", name)``, ``("not", f)``, ``("G", f)``, ``("F", f)``,
  ``(binop, l, r)`` with binop in and/or/xor/->

Run ``python tests/oracles.py`` to recompute tests/oracle_values.json.
"""

import itertools
import json
from functools import lru_cache
from pathlib import Path

FROZEN = Path(__file__).with_name("oracle_values.json")


# boolean terms


def term_atoms(t):
    if t[0] == "atom":
        return {t[1]}
    return set().union(*(term_atoms(a) for a in t[1]))


def term_eval(t, true_set):
    if t[0] == "atom":
        return t[1] in true_set
    values = [term_eval(a, true_set) for a in t[1]]
    return any(values) if t[0] == "or" else all(values)


def truth_table(t):
    """Yield (true_set, value) over every assignment of the term's atoms."""
    atoms = sorted(term_atoms(t))
    for bits in itertools.product((False, True), repeat=len(atoms)):
        true_set = frozenset(a for a, b in zip(atoms, bits) if b)
        yield true_set, term_eval(t, true_set)


def minimal_models(t):
    models = [s for s, v in truth_table(t) if v]
    return {m for m in models if not any(o < m for o in models)}


def dnf_clauses(t):
    """Ordered clauses by plain distribution, as tuples of atoms (document order)."""
    if t[0] == "atom":
        return [(t[1],)]
    parts = [dnf_clauses(a) for a in t[1]]
    if t[0] == "or":
        out = [c for p in parts for c in p]
    else:
        out = [sum(combo, ()) for combo in itertools.product(*parts)]
    seen, unique = set(), []
    for c in out:
        if c not in seen:
            seen.add(c)
            unique.append(c)
    return unique


def security_verdicts(t, verdicts):
    """Literal reading of the verdict definitions; verdicts map atom -> Pass/Fail/Inconclusive."""
    scenarios = dnf_clauses(t)
    sigma = {a for a, v in verdicts.items() if v == "Pass"}
    vulnerable = any(term_eval(_clause_term(s), sigma) for s in scenarios)
    inconclusive = any(any(verdicts[a] == "Inconclusive" for a in s) for s in scenarios)
    return vulnerable, inconclusive


def _clause_term(clause):
    return ("and", [("atom", a) for a in clause])


# finite-trace LTL


def ltl_holds(f, trace, i=0):
    trace = tuple(trace)

    @lru_cache(maxsize=None)
    def at(g, j):
        kind = g[0]
        if kind == "var":
            return j < len(trace) and trace[j] == g[1]
        if kind == "not":
            return not at(g[1], j)
        if kind == "G":
            return all(at(g[1], k) for k in range(j, len(trace)))
        if kind == "F":
            return any(at(g[1], k) for k in range(j, len(trace)))
        left, right = at(g[1], j), at(g[2], j)
        if kind == "and":
            return left and right
        if kind == "or":
            return left or right
        if kind == "xor":
            return left != right
        if kind == "->":
            return (not left) or right
        raise ValueError(kind)

    return at(f, i)


def ltl_check(f, trace):
    """(holds, witness) with witness the first failing position of a top-level G, else 1."""
    if ltl_holds(f, trace):
        return True, None
    if f[0] == "G":
        for j in range(len(trace)):
            if not ltl_holds(f[1], trace, j):
                return False, j + 1
    return False, 1


def G(f):
    return ("G", f)


def F(f):
    return ("F", f)


def v(name):
    return ("var", name)


def imp(a, b):
    return ("->", a, b)


# the six transformation shapes over placeholders a, b, c
def shapes(a="a", b="b", c="c"):
    return {
        "R1": G(imp(v(a), F(v(b)))),
        "R2": G(("xor", imp(v(a), F(v(b))), imp(("not", v(a)), F(v(c))))),
        "R3": G(imp(v(a), ("and", F(v(b)), F(v(c))))),
        "R4": G(imp(("xor", v(a), v(c)), F(v(b)))),
        "R5": G(imp(("and", v(a), v(c)), F(v(b)))),
        "R6": G(imp(v(a), F(v(b)))),
    }


IV = {
    "p1": G(imp(v("SecureBaseAction.invokes"), F(v("InterceptingValidator.validate")))),
    "p2": G(imp(v("InterceptingValidator.validate"), F(v("ValidatorURL.create")))),
    "p3": G(imp(v("ValidatorURL.create"), F(v("ValidatorURL.validate")))),
    "p4": G(("xor", imp(v("ValidatorURL.validate"), F(v("Controller.call"))),
             imp(("not", v("ValidatorURL.validate")), F(v("SecureBaseAction.error"))))),
}
IV_TRACE = ["SecureBaseAction.invokes", "InterceptingValidator.validate", "ValidatorURL.create",
            "ValidatorURL.validate", "Controller.call"]


def compute():
    out = {"iv_trace": {}, "iv_trace_truncated": {}, "iv_single_validate": {}}
    for name, f in IV.items():
        out["iv_trace"][name] = list(ltl_check(f, IV_TRACE))
        out["iv_trace_truncated"][name] = list(ltl_check(f, IV_TRACE[:-1]))
        out["iv_single_validate"][name] = list(ltl_check(f, ["ValidatorURL.validate"]))
    out["empty_trace_r1"] = list(ltl_check(shapes()["R1"], []))
    # seq(b1, or(b2, b3)): clause set and minimal models
    t = ("seq", [("atom", "b1"), ("or", [("atom", "b2"), ("atom", "b3")])])
    out["dnf_seq_or"] = [list(c) for c in dnf_clauses(t)]
    out["dnf_seq_or_minimal"] = sorted(sorted(m) for m in minimal_models(t))
    t = ("or", [("seq", [("atom", "b1"), ("atom", "b2")]), ("atom", "b3")])
    out["eval_or_seq"] = term_eval(t, {"b1", "b2"})
    return out


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(compute(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {FROZEN}")
