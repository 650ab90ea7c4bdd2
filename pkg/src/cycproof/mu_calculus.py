"""Modal fixpoint logic instance: formulas, sequents and two trace readings.

Sequents are finite sets of well-named formulas.  The first reading tracks
pairs (formula, greatest-fixpoint variable) over the failure algebra:
unfolding the tracked variable's binder is progress, unfolding an outer
least-fixpoint binder that subsumes it is failure.  The second tracks
greatest-fixpoint binder occurrences by their subformula address over the
booleans, transporting addresses through every rule.  Both induce the same
notion of proof, which the test corpus exercises.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .algebra import BOOLEANS, FAILURE
from .gtc import TraceInterpretation
from .proofs import DerivationSystem, Rule
from .trace import TraceMorphism, TraceObject, morphism


class MuError(Exception):
    pass


class NotWellNamed(MuError):
    pass


class SubstitutionUndefined(MuError):
    pass


# --- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Prop(Formula):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NegProp(Formula):
    name: str

    def __str__(self) -> str:
        return f"~{self.name}"


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def __str__(self) -> str:
        return self.name


def _wrap(phi: "Formula") -> str:
    # binders extend maximally right, so they need parentheses as operands
    if isinstance(phi, (Mu, Nu)):
        return f"({phi})"
    return str(phi)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({_wrap(self.left)} & {_wrap(self.right)})"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({_wrap(self.left)} | {_wrap(self.right)})"


@dataclass(frozen=True)
class Box(Formula):
    sub: Formula

    def __str__(self) -> str:
        return f"[]{_wrap(self.sub)}"


@dataclass(frozen=True)
class Dia(Formula):
    sub: Formula

    def __str__(self) -> str:
        return f"<>{_wrap(self.sub)}"


@dataclass(frozen=True)
class Mu(Formula):
    var: str
    body: Formula

    def __str__(self) -> str:
        return f"mu {self.var}.{self.body}"


@dataclass(frozen=True)
class Nu(Formula):
    var: str
    body: Formula

    def __str__(self) -> str:
        return f"nu {self.var}.{self.body}"


_TOKEN = re.compile(r"\s*(\(|\)|&|\||~|\[\]|<>|mu\b|nu\b|\.|[a-zA-Z_][a-zA-Z_0-9]*)")


def _tokenize(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise MuError(f"cannot tokenize {text[pos:]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_formula(text: str) -> Formula:
    """Parser with unary strongest, & over |, binders weakest."""
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise MuError("unexpected end of formula")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise MuError(f"expected {expected!r}, found {tok!r}")
        pos += 1
        return tok

    def formula(bound: frozenset[str]) -> Formula:
        if peek() in ("mu", "nu"):
            head = take()
            var = take()
            take(".")
            body = formula(bound | {var})
            return Mu(var, body) if head == "mu" else Nu(var, body)
        return disj(bound)

    def disj(bound: frozenset[str]) -> Formula:
        lhs = conj(bound)
        while peek() == "|":
            take()
            lhs = Or(lhs, conj(bound))
        return lhs

    def conj(bound: frozenset[str]) -> Formula:
        lhs = unary(bound)
        while peek() == "&":
            take()
            lhs = And(lhs, unary(bound))
        return lhs

    def unary(bound: frozenset[str]) -> Formula:
        tok = peek()
        if tok in ("mu", "nu"):
            # a binder in operand position extends maximally to the right
            return formula(bound)
        if tok == "~":
            take()
            name = take()
            if name in bound:
                raise MuError(f"negation applies to propositions, not variable {name!r}")
            return NegProp(name)
        if tok == "[]":
            take()
            return Box(unary(bound))
        if tok == "<>":
            take()
            return Dia(unary(bound))
        if tok == "(":
            take()
            out = formula(bound)
            take(")")
            return out
        name = take()
        if name in ("&", "|", ")", ".", "mu", "nu"):
            raise MuError(f"unexpected token {name!r}")
        return Var(name) if name in bound else Prop(name)

    out = formula(frozenset())
    if pos != len(tokens):
        raise MuError(f"trailing tokens {tokens[pos:]!r}")
    return out


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, (And, Or)):
        yield from subformulas(phi.left)
        yield from subformulas(phi.right)
    elif isinstance(phi, (Box, Dia)):
        yield from subformulas(phi.sub)
    elif isinstance(phi, (Mu, Nu)):
        yield from subformulas(phi.body)


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Var):
        return frozenset({phi.name})
    if isinstance(phi, (And, Or)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Box, Dia)):
        return free_vars(phi.sub)
    if isinstance(phi, (Mu, Nu)):
        return free_vars(phi.body) - {phi.var}
    return frozenset()


def subsumption(phi: Formula) -> set[tuple[str, str]]:
    """Pairs (x, y) with some binder of y containing x free."""
    out = set()
    for sub in subformulas(phi):
        if isinstance(sub, (Mu, Nu)):
            for x in free_vars(sub):
                out.add((x, sub.var))
    return out


def subsumes(phi: Formula, x: str, y: str) -> bool:
    return (x, y) in subsumption(phi)


def is_well_named(phi: Formula) -> bool:
    """The subsumption relation must be a strict preorder."""
    rel = subsumption(phi)
    if any(x == y for x, y in rel):
        return False
    return all(
        (x, z) in rel
        for (x, y) in rel
        for (y2, z) in rel
        if y == y2
    )


def nu_vars(phi: Formula) -> frozenset[str]:
    """Variables bound by a greatest-fixpoint binder somewhere in the formula."""
    return frozenset(sub.var for sub in subformulas(phi) if isinstance(sub, Nu))


def substitute(phi: Formula, x: str, repl: Formula) -> Formula:
    """Replace the free occurrences of x by repl.

    Partial: raises instead of renaming when a replacement site sits under
    a binder for one of repl's free variables (capture).
    """
    repl_free = free_vars(repl)

    def go(f: Formula, shadowed: frozenset[str]) -> Formula:
        if isinstance(f, Var):
            if f.name != x or x in shadowed:
                return f
            captured = shadowed & repl_free
            if captured:
                raise SubstitutionUndefined(
                    f"substituting under a binder of {sorted(captured)} captures"
                )
            return repl
        if isinstance(f, And):
            return And(go(f.left, shadowed), go(f.right, shadowed))
        if isinstance(f, Or):
            return Or(go(f.left, shadowed), go(f.right, shadowed))
        if isinstance(f, Box):
            return Box(go(f.sub, shadowed))
        if isinstance(f, Dia):
            return Dia(go(f.sub, shadowed))
        if isinstance(f, Mu):
            return Mu(f.var, go(f.body, shadowed | {f.var}))
        if isinstance(f, Nu):
            return Nu(f.var, go(f.body, shadowed | {f.var}))
        return f

    return go(phi, frozenset())


def unfold(phi: Formula) -> Formula:
    if isinstance(phi, Mu):
        return substitute(phi.body, phi.var, phi)
    if isinstance(phi, Nu):
        return substitute(phi.body, phi.var, phi)
    raise MuError(f"not a fixpoint formula: {phi}")


# --- subformula addresses --------------------------------------------------------

Addr = str  # string over {'0', '1'}; '' is the root


def at_address(phi: Formula, addr: Addr) -> Formula | None:
    cur = phi
    for bit in addr:
        if isinstance(cur, (And, Or)):
            cur = cur.left if bit == "0" else cur.right
        elif isinstance(cur, (Box, Dia)) and bit == "0":
            cur = cur.sub
        elif isinstance(cur, (Mu, Nu)) and bit == "0":
            cur = cur.body
        else:
            return None
    return cur


def _walk(phi: Formula, addr: Addr) -> Iterator[tuple[Addr, Formula]]:
    yield addr, phi
    if isinstance(phi, (And, Or)):
        yield from _walk(phi.left, addr + "0")
        yield from _walk(phi.right, addr + "1")
    elif isinstance(phi, (Box, Dia)):
        yield from _walk(phi.sub, addr + "0")
    elif isinstance(phi, (Mu, Nu)):
        yield from _walk(phi.body, addr + "0")


def nu_addresses(phi: Formula) -> list[Addr]:
    """Addresses of greatest-fixpoint binders, in address order."""
    return sorted(a for a, sub in _walk(phi, "") if isinstance(sub, Nu))


def open_addresses(phi: Formula, x: str) -> list[Addr]:
    """Addresses of x-occurrences with no x-binder strictly above them."""
    out = []

    def go(f: Formula, addr: Addr) -> None:
        if isinstance(f, Var):
            if f.name == x:
                out.append(addr)
            return
        if isinstance(f, (Mu, Nu)):
            if f.var == x:
                return
            go(f.body, addr + "0")
        elif isinstance(f, (And, Or)):
            go(f.left, addr + "0")
            go(f.right, addr + "1")
        elif isinstance(f, (Box, Dia)):
            go(f.sub, addr + "0")

    go(phi, "")
    return sorted(out)


# --- sequents and rule instances ---------------------------------------------------

Sequent = frozenset[Formula]


def sequent(formulas: Iterable[Formula]) -> Sequent:
    return frozenset(formulas)


def show_sequent(gamma: Sequent) -> str:
    return ", ".join(sorted(str(f) for f in gamma))


def parse_mu_sequent(text: str) -> Sequent:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        cur += ch
    if cur.strip():
        parts.append(cur)
    return frozenset(parse_formula(p) for p in parts if p.strip())


@dataclass(frozen=True)
class MuInstance:
    rule_id: str
    kind: str  # 'ax' | 'wk' | 'or' | 'and' | 'mod' | 'mu' | 'nu'
    conclusion: Sequent
    premises: tuple[Sequent, ...]
    principal: Formula | None = None

    def precursors(self, premise_index: int, phi: Formula) -> frozenset[Formula]:
        """Premise formulas a conclusion formula turns into.

        Principal formulas yield their results; context formulas persist.
        With set sequents a premise formula can arise both ways.
        """
        if self.kind == "mod":
            return frozenset({phi.sub})  # type: ignore[union-attr]
        if phi != self.principal:
            return frozenset({phi})
        if self.kind == "wk":
            return frozenset()
        if self.kind == "or":
            return frozenset({self.principal.left, self.principal.right})  # type: ignore[union-attr]
        if self.kind == "and":
            pick = self.principal.left if premise_index == 0 else self.principal.right  # type: ignore[union-attr]
            return frozenset({pick})
        if self.kind in ("mu", "nu"):
            return frozenset({unfold(self.principal)})
        raise MuError(f"no precursors for rule kind {self.kind}")


def _check_well_named(gamma: Sequent) -> None:
    for phi in gamma:
        if not is_well_named(phi):
            raise NotWellNamed(str(phi))


def _instances_for(gamma: Sequent, corpus: set[Sequent]) -> list[MuInstance]:
    out = []

    def add(kind: str, premises: tuple[Sequent, ...], principal: Formula | None):
        if not all(p in corpus for p in premises):
            return
        tag = f"[{principal}]" if principal is not None else ""
        out.append(
            MuInstance(
                rule_id=f"{kind}{tag}@{show_sequent(gamma)}",
                kind=kind,
                conclusion=gamma,
                premises=premises,
                principal=principal,
            )
        )

    props = {f.name for f in gamma if isinstance(f, Prop)}
    negs = {f.name for f in gamma if isinstance(f, NegProp)}
    if len(gamma) == 2 and len(props & negs) == 1 and props == negs:
        add("ax", (), None)
    for phi in sorted(gamma, key=str):
        rest = gamma - {phi}
        add("wk", (rest,), phi)
        if isinstance(phi, Or):
            add("or", (rest | {phi.left, phi.right},), phi)
        if isinstance(phi, And):
            add("and", (rest | {phi.left}, rest | {phi.right}), phi)
        if isinstance(phi, (Mu, Nu)):
            add("mu" if isinstance(phi, Mu) else "nu", (rest | {unfold(phi)},), phi)
    boxes = [f for f in gamma if isinstance(f, Box)]
    if len(boxes) == 1 and all(isinstance(f, (Box, Dia)) for f in gamma):
        box = boxes[0]
        stripped = frozenset(f.sub for f in gamma if isinstance(f, Dia))
        add("mod", (stripped | {box.sub},), box)
    return out


def mu_system(corpus: Iterable[Sequent]) -> DerivationSystem:
    """Rule instances whose conclusion and premises lie in the corpus."""
    pool = set(corpus)
    for gamma in pool:
        _check_well_named(gamma)
    sequents = {show_sequent(g): show_sequent(g) for g in pool}
    rules = {}
    for gamma in sorted(pool, key=show_sequent):
        for inst in _instances_for(gamma, pool):
            rules[inst.rule_id] = Rule(
                name=inst.rule_id,
                conclusion=show_sequent(inst.conclusion),
                premises=tuple(show_sequent(p) for p in inst.premises),
            )
    return DerivationSystem(sequents=sequents, rules=rules)


_MU_RULE_ID = re.compile(r"^(?P<kind>ax|wk|or|and|mod|mu|nu)(\[(?P<principal>.*)\])?@(?P<seq>.*)$")


def _instance_from_rule(rule: Rule) -> MuInstance:
    m = _MU_RULE_ID.match(rule.name)
    if m is None:
        raise MuError(f"not a recognised rule id: {rule.name!r}")
    principal = m.group("principal")
    return MuInstance(
        rule_id=rule.name,
        kind=m.group("kind"),
        conclusion=parse_mu_sequent(rule.conclusion),
        premises=tuple(parse_mu_sequent(p) for p in rule.premises),
        principal=parse_formula(principal) if principal is not None else None,
    )


# --- interpretation over the failure algebra ----------------------------------------


def _failure_object(gamma: Sequent) -> TraceObject:
    elements = sorted(f"{phi}|{x}" for phi in gamma for x in nu_vars(phi))
    return TraceObject(f"F({show_sequent(gamma)})", tuple(elements))


def _failure_maps(inst: MuInstance) -> tuple[TraceMorphism, ...]:
    dom = _failure_object(inst.conclusion)
    dom_index = {name: i for i, name in enumerate(dom.elements)}
    maps = []
    for i, prem in enumerate(inst.premises):
        cod = _failure_object(prem)
        cod_index = {name: j for j, name in enumerate(cod.elements)}
        triples = []
        for phi in inst.conclusion:
            for x in nu_vars(phi):
                for succ in inst.precursors(i, phi):
                    if x not in nu_vars(succ):
                        continue
                    label = 0
                    if inst.kind in ("mu", "nu") and phi == inst.principal and succ == unfold(phi):
                        if isinstance(phi, Nu) and phi.var == x:
                            label = 1
                        elif isinstance(phi, Mu) and subsumes(phi, phi.var, x):
                            label = 2
                    triples.append((dom_index[f"{phi}|{x}"], label, cod_index[f"{succ}|{x}"]))
        maps.append(morphism(dom, cod, triples, alg=FAILURE))
    return tuple(maps)


def mu_interpretation_F(system: DerivationSystem) -> TraceInterpretation:
    """Track (formula, greatest-fixpoint variable) pairs over the failure algebra.

    Unfolding the binder of the tracked variable is progress; unfolding a
    least-fixpoint binder under which the tracked variable lives is failure,
    since that erases the variable's regeneration history.
    """
    object_of = {sid: _failure_object(parse_mu_sequent(sid)) for sid in system.sequents}
    maps_of = {r: _failure_maps(_instance_from_rule(rule)) for r, rule in system.rules.items()}
    return TraceInterpretation(algebra=FAILURE, object_of=object_of, maps_of=maps_of)


# --- interpretation over the booleans ------------------------------------------------


def _boolean_object(gamma: Sequent) -> TraceObject:
    elements = sorted(f"{phi}|{a or 'e'}" for phi in gamma for a in nu_addresses(phi))
    return TraceObject(f"B({show_sequent(gamma)})", tuple(elements))


def _relocations(inst: MuInstance, premise_index: int, phi: Formula) -> Iterator[tuple[Addr, int, Formula, Addr]]:
    """Transport of tracked binder addresses through one rule application.

    Yields (conclusion address, label, premise formula, premise address).
    Context formulas keep their addresses.  A principal connective strips
    the leading direction bit.  Unfolding a fixpoint relocates the binder's
    own address to every fresh copy (with progress exactly for greatest
    fixpoints) and inner addresses both to the unchanged body position and
    into every substituted copy.
    """
    addresses = nu_addresses(phi)
    if inst.kind == "mod":
        for a in addresses:
            yield a, 0, phi.sub, a[1:]  # type: ignore[union-attr]
        return
    if phi != inst.principal:
        for a in addresses:
            yield a, 0, phi, a
        return
    if inst.kind == "wk":
        return
    if inst.kind == "or":
        for a in addresses:
            part = inst.principal.left if a[0] == "0" else inst.principal.right  # type: ignore[union-attr]
            yield a, 0, part, a[1:]
        return
    if inst.kind == "and":
        keep = "0" if premise_index == 0 else "1"
        part = inst.principal.left if premise_index == 0 else inst.principal.right  # type: ignore[union-attr]
        for a in addresses:
            if a[0] == keep:
                yield a, 0, part, a[1:]
        return
    if inst.kind in ("mu", "nu"):
        body = inst.principal.body  # type: ignore[union-attr]
        var = inst.principal.var  # type: ignore[union-attr]
        result = unfold(inst.principal)
        opens = open_addresses(body, var)
        for a in addresses:
            if a == "":
                for copy in opens:
                    yield a, 1 if inst.kind == "nu" else 0, result, copy
            else:
                inner = a[1:]  # strip the binder's leading 0
                yield a, 0, result, inner
                for copy in opens:
                    yield a, 0, result, copy + "0" + inner
        return
    raise MuError(f"no relocation for rule kind {inst.kind}")


def _boolean_maps(inst: MuInstance) -> tuple[TraceMorphism, ...]:
    dom = _boolean_object(inst.conclusion)
    dom_index = {name: i for i, name in enumerate(dom.elements)}
    maps = []
    for i, prem in enumerate(inst.premises):
        cod = _boolean_object(prem)
        cod_index = {name: j for j, name in enumerate(cod.elements)}
        triples = []
        for phi in inst.conclusion:
            for a, label, succ, b in _relocations(inst, i, phi):
                triples.append(
                    (dom_index[f"{phi}|{a or 'e'}"], label, cod_index[f"{succ}|{b or 'e'}"])
                )
        maps.append(morphism(dom, cod, triples, alg=BOOLEANS))
    return tuple(maps)


def mu_interpretation_B(system: DerivationSystem) -> TraceInterpretation:
    """Track greatest-fixpoint binder occurrences by subformula address."""
    object_of = {sid: _boolean_object(parse_mu_sequent(sid)) for sid in system.sequents}
    maps_of = {r: _boolean_maps(_instance_from_rule(rule)) for r, rule in system.rules.items()}
    return TraceInterpretation(algebra=BOOLEANS, object_of=object_of, maps_of=maps_of)
