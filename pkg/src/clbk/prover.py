"""Three-rule proof system: search, checking, and conversion to the paired-atom (hybrid) form."""

from __future__ import annotations

from dataclasses import dataclass

from .classical import is_valid
from .formula import (
    Chand,
    Chor,
    Elementary,
    EnvAnn,
    Formula,
    FormulaError,
    General,
    Hybrid,
    Implies,
    NEGATIVE,
    Not,
    And,
    Or,
    POSITIVE,
    Truth,
    child_at,
    children,
    elementary_names,
    print_formula,
    resolve_spec,
    skeleton,
    substitute_at,
    surface_occurrences,
)


@dataclass(frozen=True)
class RuleA:
    """Closure rule: stable conclusion, one premise per branch of every environment-choice occurrence."""


@dataclass(frozen=True)
class RuleB:
    """Machine-choice rule: the premise commits occurrence ``spec`` to ``branch``."""

    spec: str
    branch: int
    env: str | None


@dataclass(frozen=True)
class RuleC:
    """Atom-pairing rule: one positive and one negative occurrence of the same general atom
    are replaced by the fresh elementary atom ``name`` (rendered as a hybrid after conversion)."""

    pos_spec: str
    neg_spec: str
    name: str


RuleTag = RuleA | RuleB | RuleC


@dataclass
class ProofTree:
    conclusion: Formula
    rule: RuleTag
    premises: tuple["ProofTree", ...] = ()
    premise_index: dict[tuple[str, int], int] | None = None

    def node_count(self) -> int:
        return 1 + sum(p.node_count() for p in self.premises)

    def rules_preorder(self) -> list[RuleTag]:
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules_preorder())
        return out


@dataclass(frozen=True)
class BranchPremise:
    spec: str
    branch: int
    env: str | None
    formula: Formula


@dataclass(frozen=True)
class PairPremise:
    pos_spec: str
    neg_spec: str
    name: str
    formula: Formula


def measure(f: Formula) -> int:
    """Choice operators plus general-atom occurrences; strictly decreases along every rule."""
    match f:
        case Chand(parts) | Chor(parts):
            return 1 + sum(measure(p) for p in parts)
        case General(_, _):
            return 1
        case _:
            return sum(measure(c) for c in children(f))


def _elementarize_capable(f: Formula, winnable: frozenset[str]) -> Formula:
    """Elementarization that treats a positive general atom as already won when the machine
    holds a strategy for it (an inline 'h' annotation or membership in ``winnable``)."""

    def go(node, sign):
        match node:
            case Chand(_):
                return Truth(True)
            case Chor(_):
                return Truth(False)
            case General(name, note):
                if sign == NEGATIVE:
                    return Truth(True)
                backed = name in winnable or (note is not None and note.kind == "h")
                return Truth(backed)
            case Hybrid(_, elem, _):
                return Elementary(elem)
            case Not(c):
                return Not(go(c, -sign))
            case EnvAnn(c, agent):
                return EnvAnn(go(c, sign), agent)
            case And(l, r):
                return And(go(l, sign), go(r, sign))
            case Or(l, r):
                return Or(go(l, sign), go(r, sign))
            case Implies(l, r):
                return Implies(go(l, -sign), go(r, sign))
            case _:
                return node

    return go(f, POSITIVE)


def is_stable(f: Formula, winnable: frozenset[str] = frozenset()) -> bool:
    return is_valid(_elementarize_capable(f, winnable))


def premises_A(f: Formula) -> list[BranchPremise]:
    """One premise per branch of each positive choice-conjunction / negative choice-disjunction."""
    out = []
    for occ in surface_occurrences(f, "choice"):
        wanted = Chand if occ.polarity == POSITIVE else Chor
        if not isinstance(occ.node, wanted):
            continue
        for i, part in enumerate(occ.node.parts, start=1):
            out.append(BranchPremise(occ.spec, i, occ.env, substitute_at(f, occ.path, part)))
    return out


def premises_B(f: Formula) -> list[BranchPremise]:
    """One premise per branch of each negative choice-conjunction / positive choice-disjunction."""
    out = []
    for occ in surface_occurrences(f, "choice"):
        wanted = Chand if occ.polarity == NEGATIVE else Chor
        if not isinstance(occ.node, wanted):
            continue
        for i, part in enumerate(occ.node.parts, start=1):
            out.append(BranchPremise(occ.spec, i, occ.env, substitute_at(f, occ.path, part)))
    return out


_FRESH_BASE = "pqrstuvwxyz"


def fresh_elementary(f: Formula, avoid: frozenset[str] = frozenset()) -> str:
    taken = elementary_names(f) | avoid

    def candidates():
        yield from _FRESH_BASE
        n = 1
        while True:
            for ch in _FRESH_BASE:
                yield f"{ch}{n}"
            n += 1

    for name in candidates():
        if name not in taken:
            return name
    raise AssertionError("unreachable")


def premises_C(f: Formula, avoid: frozenset[str] = frozenset()) -> list[PairPremise]:
    """One premise per (negative, positive) surface pair of the same general atom, both
    replaced by a fresh elementary atom not occurring in the conclusion."""
    occs = surface_occurrences(f, "general")
    names: list[str] = []
    for occ in occs:
        if occ.node.name not in names:
            names.append(occ.node.name)
    fresh = fresh_elementary(f, avoid)
    out = []
    for name in names:
        negs = [o for o in occs if o.node.name == name and o.polarity == NEGATIVE]
        poss = [o for o in occs if o.node.name == name and o.polarity == POSITIVE]
        for nu in negs:
            for pi in poss:
                g = substitute_at(f, pi.path, Elementary(fresh))
                g = substitute_at(g, nu.path, Elementary(fresh))
                out.append(PairPremise(pi.spec, nu.spec, fresh, g))
    return out


def prove(f: Formula, winnable: frozenset[str] = frozenset()) -> ProofTree | None:
    """Proof search with a fixed rule order: atom pairings first, then closure, then machine choices.

    Pairings are exhausted before closing so that fully general conclusions reproduce the
    canonical pairing-chain proofs; verdicts are memoized on the annotation-erased formula.
    """
    root_avoid = frozenset(elementary_names(f))
    trees: dict[Formula, ProofTree | None] = {}
    verdicts: dict[Formula, bool] = {}

    def search(g: Formula) -> ProofTree | None:
        if g in trees:
            return trees[g]
        sk = skeleton(g)
        if verdicts.get(sk) is False:
            trees[g] = None
            return None
        m = measure(g)
        result = None
        for pair in premises_C(g, root_avoid):
            assert measure(pair.formula) < m, "termination measure must decrease"
            sub = search(pair.formula)
            if sub is not None:
                result = ProofTree(g, RuleC(pair.pos_spec, pair.neg_spec, pair.name), (sub,))
                break
        if result is None and is_stable(g, winnable):
            entries = premises_A(g)
            subs = []
            index: dict[tuple[str, int], int] = {}
            for k, entry in enumerate(entries):
                assert measure(entry.formula) < m, "termination measure must decrease"
                sub = search(entry.formula)
                if sub is None:
                    break
                subs.append(sub)
                index[(entry.spec, entry.branch)] = k
            else:
                result = ProofTree(g, RuleA(), tuple(subs), index)
        if result is None:
            for entry in premises_B(g):
                assert measure(entry.formula) < m, "termination measure must decrease"
                sub = search(entry.formula)
                if sub is not None:
                    result = ProofTree(g, RuleB(entry.spec, entry.branch, entry.env), (sub,))
                    break
        trees[g] = result
        verdicts[sk] = result is not None
        return result

    return search(f)


def provable(f: Formula, winnable: frozenset[str] = frozenset()) -> bool:
    return prove(f, winnable) is not None


def _replace_elementary(f: Formula, name: str, general: str) -> Formula:
    match f:
        case Elementary(n) if n == name:
            return Hybrid(general, name)
        case Not(c):
            return Not(_replace_elementary(c, name, general))
        case EnvAnn(c, agent):
            return EnvAnn(_replace_elementary(c, name, general), agent)
        case And(l, r):
            return And(_replace_elementary(l, name, general), _replace_elementary(r, name, general))
        case Or(l, r):
            return Or(_replace_elementary(l, name, general), _replace_elementary(r, name, general))
        case Implies(l, r):
            return Implies(_replace_elementary(l, name, general), _replace_elementary(r, name, general))
        case Chand(parts):
            return Chand(tuple(_replace_elementary(p, name, general) for p in parts))
        case Chor(parts):
            return Chor(tuple(_replace_elementary(p, name, general) for p in parts))
        case _:
            return f


def _map_formulas(t: ProofTree, fn) -> ProofTree:
    return ProofTree(fn(t.conclusion), t.rule, tuple(_map_formulas(p, fn) for p in t.premises), t.premise_index)


def hybridize(t: ProofTree) -> ProofTree:
    """Replace each pairing rule's fresh atom by the matching hybrid atom in its premise subtree."""
    rule = t.rule
    premises = t.premises
    if isinstance(rule, RuleC):
        pos = child_at(t.conclusion, resolve_spec(t.conclusion, rule.pos_spec))
        if not isinstance(pos, General):
            raise FormulaError("pairing rule must address a general atom")
        premises = (_map_formulas(premises[0], lambda g: _replace_elementary(g, rule.name, pos.name)),)
    return ProofTree(t.conclusion, rule, tuple(hybridize(p) for p in premises), t.premise_index)


def _find_choice(f: Formula, spec: str):
    for occ in surface_occurrences(f, "choice"):
        if occ.spec == spec:
            return occ
    return None


def verify_proof(t: ProofTree, winnable: frozenset[str] = frozenset()) -> bool:
    """Check every node against its rule's side conditions, including stability and the
    completeness of closure premises. Accepts both the fresh-atom and hybrid forms."""
    g = t.conclusion
    match t.rule:
        case RuleA():
            if not is_stable(g, winnable):
                return False
            entries = premises_A(g)
            if len(entries) != len(t.premises):
                return False
            for k, entry in enumerate(entries):
                if t.premises[k].conclusion != entry.formula:
                    return False
            index = t.premise_index or {}
            if index != {(e.spec, e.branch): k for k, e in enumerate(entries)}:
                return False
        case RuleB(spec, branch, env):
            occ = _find_choice(g, spec)
            if occ is None or occ.env != env:
                return False
            wanted = Chand if occ.polarity == NEGATIVE else Chor
            if not isinstance(occ.node, wanted) or not 1 <= branch <= len(occ.node.parts):
                return False
            if len(t.premises) != 1:
                return False
            if t.premises[0].conclusion != substitute_at(g, occ.path, occ.node.parts[branch - 1]):
                return False
        case RuleC(pos_spec, neg_spec, name):
            poss = [o for o in surface_occurrences(g, "general") if o.spec == pos_spec and o.polarity == POSITIVE]
            negs = [o for o in surface_occurrences(g, "general") if o.spec == neg_spec and o.polarity == NEGATIVE]
            if len(poss) != 1 or len(negs) != 1:
                return False
            pi, nu = poss[0], negs[0]
            if pi.node.name != nu.node.name:
                return False
            if name in elementary_names(g):
                return False
            if len(t.premises) != 1:
                return False
            candidates = []
            for replacement in (Elementary(name), Hybrid(pi.node.name, name)):
                h = substitute_at(g, pi.path, replacement)
                h = substitute_at(h, nu.path, replacement)
                candidates.append(h)
            if t.premises[0].conclusion not in candidates:
                return False
        case _:
            return False
    return all(verify_proof(p, winnable) for p in t.premises)


_RULE_LETTER = {RuleA: "A", RuleB: "B", RuleC: "C"}


def format_proof(t: ProofTree) -> str:
    """Numbered listing, premises before conclusions: ``<id>. <formula>, rule <A|B|C>, <premise ids>``."""
    lines: list[str] = []

    def walk(node: ProofTree) -> int:
        ids = [walk(p) for p in node.premises]
        refs = ", ".join(str(i) for i in ids) if ids else "0"
        lines.append(f"{len(lines) + 1}. {print_formula(node.conclusion)}, rule {_RULE_LETTER[type(node.rule)]}, {refs}")
        return len(lines)

    walk(t)
    return "\n".join(lines)
