"""Brute-force fixpoint used as an independent check of the forward chase.

Every theorem is tried under every assignment of its variables to the
points of the state (pruned as soon as a fully bound premise is missing);
premise literals are checked by canonical text only, algebraic premises by
direct evaluation.  Values come from running the equation solver to its
own fixpoint on all equations known so far.
"""

from itertools import permutations

from geogen.deduction.solver import solve_equations
from geogen.errors import GeoError
from geogen.formal.entities import Literal
from geogen.formal.expr import Equation, evaluate, value_equation


def _var_order(thm):
    order = []
    for p in thm.premises:
        for arg in p.args:
            for v in arg:
                if v.startswith("?") and v not in order:
                    order.append(v)
    return order


def _assignments(thm, points, literals, registry):
    order = _var_order(thm)
    # premise i can be checked once the variables up to ready[i] are bound
    ready = {}
    for i, p in enumerate(thm.premises):
        last = max(order.index(v) for arg in p.args for v in arg if v.startswith("?"))
        ready.setdefault(last, []).append(p)

    def rec(i, b):
        if i == len(order):
            yield dict(b)
            return
        for pt in points:
            if thm.injective and pt in b.values():
                continue
            b[order[i]] = pt
            ok = True
            for p in ready.get(i, []):
                try:
                    if registry.instantiate(p, b).text not in literals:
                        ok = False
                except GeoError:
                    ok = False
                if not ok:
                    break
            if ok:
                yield from rec(i + 1, b)
            del b[order[i]]

    yield from rec(0, {})


def _holds(eq, equations, values):
    if eq.text in equations:
        return True
    syms = eq.symbols()
    if not syms <= values.keys():
        return False
    try:
        return (evaluate(eq.lhs, values) - evaluate(eq.rhs, values)).is_zero()
    except Exception:
        return False


def naive_closure(facts, registry, max_rounds=60):
    literals, equations, values = {}, {}, {}

    def add(f):
        if isinstance(f, Literal):
            if f.text in literals:
                return False
            literals[f.text] = f
        else:
            if f.text in equations:
                return False
            equations[f.text] = f
            v = f.value()
            if v is not None:
                values.setdefault(v[0], v[1])
        return True

    for f in facts:
        add(f)
    for _ in range(max_rounds):
        points = sorted({p for l in literals.values() for p in l.points()})
        new = []
        for thm in registry.sorted_theorems():
            for b in list(_assignments(thm, points, literals, registry)):
                try:
                    if not all(_holds(ap.instantiate(b), equations, values) for ap in thm.algebraic):
                        continue
                    lits = registry.closure([registry.instantiate(c, b) for c in thm.conclusions])
                    eqs = [ep.instantiate(b) for ep in thm.equations]
                except (GeoError, ValueError):
                    continue
                new.extend(lits)
                new.extend(eqs)
        res = solve_equations(list(equations.values()), {})
        new.extend(value_equation(s, v) for s, v in sorted(res.new_known.items(), key=lambda kv: kv[0].text))
        changed = False
        for f in new:
            changed |= add(f)
        if not changed:
            return set(literals) | set(equations)
    raise RuntimeError("oracle did not converge")
