"""Classical propositional validity of elementary formulas, by exhaustive truth tables."""

from __future__ import annotations

from itertools import product

from .formula import (
    And,
    Chand,
    Chor,
    Elementary,
    EnvAnn,
    Formula,
    FormulaError,
    General,
    Hybrid,
    Implies,
    Not,
    Or,
    Truth,
    is_elementary,
)

Valuation = dict[str, bool]


def evaluate(f: Formula, valuation: Valuation) -> bool:
    """Truth value of an elementary formula under a total valuation of its atoms."""
    match f:
        case Truth(v):
            return v
        case Elementary(name):
            return valuation[name]
        case EnvAnn(c, _):
            return evaluate(c, valuation)
        case Not(c):
            return not evaluate(c, valuation)
        case And(l, r):
            return evaluate(l, valuation) and evaluate(r, valuation)
        case Or(l, r):
            return evaluate(l, valuation) or evaluate(r, valuation)
        case Implies(l, r):
            return (not evaluate(l, valuation)) or evaluate(r, valuation)
        case General(_, _) | Hybrid(_, _, _) | Chand(_) | Chor(_):
            raise FormulaError("not an elementary formula")
    raise FormulaError(f"cannot evaluate {f!r}")


def _atoms(f: Formula) -> list[str]:
    out: list[str] = []

    def walk(node):
        match node:
            case Elementary(name):
                if name not in out:
                    out.append(name)
            case _:
                pass
        for c in _children(node):
            walk(c)

    walk(f)
    return out


def _children(f: Formula):
    match f:
        case Not(c) | EnvAnn(c, _):
            return (c,)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return (l, r)
        case _:
            return ()


def is_valid(f: Formula) -> bool:
    """True iff f holds under every valuation of its atoms; rejects non-elementary input."""
    if not is_elementary(f):
        raise FormulaError("validity is defined for elementary formulas only")
    names = _atoms(f)
    return all(evaluate(f, dict(zip(names, bits))) for bits in product((False, True), repeat=len(names)))


def satisfiable(f: Formula) -> bool:
    if not is_elementary(f):
        raise FormulaError("satisfiability is defined for elementary formulas only")
    names = _atoms(f)
    return any(evaluate(f, dict(zip(names, bits))) for bits in product((False, True), repeat=len(names)))
