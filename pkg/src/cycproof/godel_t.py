"""Cyclic typing calculus for a simply typed language with a ground
numeral type and primitive-recursion-by-cycles.

Types are N | (A->B); sequents are a typed context plus a goal type.  The
soundness condition tracks the N positions of the context over the
booleans: only the branching rule on a trailing N marks progress on that
position, so well-defined coterms are those whose every infinite branch
cases on some numeral infinitely often.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .algebra import BOOLEANS
from .gtc import TraceInterpretation
from .proofs import DerivationSystem, Rule
from .trace import TraceMorphism, TraceObject, morphism


class MalformedSequent(Exception):
    pass


# --- types and sequents ---------------------------------------------------------


@dataclass(frozen=True)
class GTType:
    pass


@dataclass(frozen=True)
class Nat(GTType):
    def __str__(self) -> str:
        return "N"


@dataclass(frozen=True)
class Arrow(GTType):
    dom: GTType
    cod: GTType

    def __str__(self) -> str:
        return f"({self.dom}->{self.cod})"


N = Nat()


def parse_type(text: str) -> GTType:
    text = text.strip()
    if text == "N":
        return N
    if text.startswith("(") and text.endswith(")"):
        inner = text[1:-1]
        depth = 0
        for i in range(len(inner) - 1):
            if inner[i] == "(":
                depth += 1
            elif inner[i] == ")":
                depth -= 1
            elif depth == 0 and inner[i : i + 2] == "->":
                return Arrow(parse_type(inner[:i]), parse_type(inner[i + 2 :]))
    raise MalformedSequent(f"cannot parse type {text!r}")


@dataclass(frozen=True)
class GTSequent:
    context: tuple[GTType, ...]
    goal: GTType

    def __str__(self) -> str:
        ctx = ",".join(str(t) for t in self.context)
        return f"{ctx} => {self.goal}" if ctx else f"=> {self.goal}"

    @property
    def nat_count(self) -> int:
        return sum(1 for t in self.context if t == N)


def sequent(context: Iterable[GTType], goal: GTType) -> GTSequent:
    return GTSequent(tuple(context), goal)


def parse_sequent(text: str) -> GTSequent:
    if "=>" not in text:
        raise MalformedSequent(f"missing => in {text!r}")
    ctx_text, goal_text = text.split("=>", 1)
    ctx_text = ctx_text.strip()
    parts: list[str] = []
    depth = 0
    cur = ""
    for ch in ctx_text:
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
    return GTSequent(tuple(parse_type(p) for p in parts if p.strip()), parse_type(goal_text))


# --- rule instances ---------------------------------------------------------------


@dataclass(frozen=True)
class CgtInstance:
    rule_id: str
    kind: str
    conclusion: GTSequent
    premises: tuple[GTSequent, ...]
    position: int | None = None  # context index of the first swapped entry (exchange only)


def _instances_for(concl: GTSequent, corpus: set[GTSequent]) -> list[CgtInstance]:
    out = []
    ctx, goal = concl.context, concl.goal

    def add(kind: str, premises: tuple[GTSequent, ...], tag: str = "", position: int | None = None):
        if all(p in corpus for p in premises):
            out.append(
                CgtInstance(f"{kind}{tag}@{concl}", kind, concl, premises, position=position)
            )

    if ctx == (goal,):
        add("Id", ())
    if ctx == () and goal == N:
        add("Zero", ())
    if ctx == (N,) and goal == N:
        add("S", ())
    if ctx and isinstance(ctx[-1], Arrow):
        arr = ctx[-1]
        add("L", (sequent(ctx[:-1], arr.dom), sequent(ctx[:-1] + (arr.cod,), goal)))
    if isinstance(goal, Arrow):
        add("R", (sequent(ctx + (goal.dom,), goal.cod),))
    if ctx and ctx[-1] == N:
        add("Cond", (sequent(ctx[:-1], goal), concl))
    for k in range(len(ctx) - 1):
        swapped = ctx[:k] + (ctx[k + 1], ctx[k]) + ctx[k + 2 :]
        add("Ex", (sequent(swapped, goal),), tag=str(k), position=k)
    if ctx:
        add("Wk", (sequent(ctx[:-1], goal),))
        add("Ctr", (sequent(ctx + (ctx[-1],), goal),))
    for other in corpus:
        if other.context == ctx:
            cut = other.goal
            add("Cut", (sequent(ctx, cut), sequent(ctx + (cut,), goal)), tag=f"[{cut}]")
    return out


def cgt_instances(corpus: Iterable[GTSequent]) -> list[CgtInstance]:
    pool = set(corpus)
    out = []
    for concl in sorted(pool, key=str):
        out.extend(_instances_for(concl, pool))
    return out


def cgt_system(corpus: Iterable[GTSequent]) -> DerivationSystem:
    """All rule instances whose conclusion and premises lie in the corpus."""
    pool = set(corpus)
    sequents = {str(s): str(s) for s in pool}
    rules = {}
    for inst in cgt_instances(pool):
        rules[inst.rule_id] = Rule(
            name=inst.rule_id,
            conclusion=str(inst.conclusion),
            premises=tuple(str(p) for p in inst.premises),
        )
    return DerivationSystem(sequents=sequents, rules=rules)


# --- trace interpretation ----------------------------------------------------------


def nat_object(count: int) -> TraceObject:
    return TraceObject(f"nats:{count}", tuple(str(i + 1) for i in range(count)))


_RULE_ID = re.compile(r"^(Id|Zero|S|L|R|Cond|Ex(?P<pos>\d+)|Wk|Ctr|Cut\[[^@]*\])@(?P<seq>.*)$")


def _identity_triples(k: int) -> list[tuple[int, int, int]]:
    return [(j, 0, j) for j in range(k)]


def cgt_maps(inst: CgtInstance) -> tuple[TraceMorphism, ...]:
    """Per-premise trace maps over the booleans.

    Untouched N positions map identically.  Exchanging two N's swaps their
    positions; weakening a trailing N or taking the base branch of the
    numeral case drops the last position; the step branch marks progress on
    it; contracting a trailing N relates the contracted position to both
    premise copies.  Everything else embeds positions identically.
    """
    k = inst.conclusion.nat_count
    dom = nat_object(k)
    maps = []
    for i, prem in enumerate(inst.premises):
        cod = nat_object(prem.nat_count)
        if inst.kind == "Ex" and inst.conclusion.context[inst.position] == N and inst.conclusion.context[inst.position + 1] == N:
            before = sum(1 for t in inst.conclusion.context[: inst.position] if t == N)
            triples = [(j, 0, j) for j in range(k) if j not in (before, before + 1)]
            triples += [(before, 0, before + 1), (before + 1, 0, before)]
        elif inst.kind == "Wk" and inst.conclusion.context[-1] == N:
            triples = _identity_triples(k - 1)
        elif inst.kind == "Cond" and i == 0:
            triples = _identity_triples(k - 1)
        elif inst.kind == "Cond" and i == 1:
            triples = _identity_triples(k - 1) + [(k - 1, 1, k - 1)]
        elif inst.kind == "Ctr" and inst.conclusion.context[-1] == N:
            triples = _identity_triples(k - 1) + [(k - 1, 0, k - 1), (k - 1, 0, k)]
        else:
            triples = _identity_triples(min(k, prem.nat_count))
        maps.append(morphism(dom, cod, triples, alg=BOOLEANS))
    return tuple(maps)


def _instance_from_rule(rule: Rule) -> CgtInstance:
    m = _RULE_ID.match(rule.name)
    if m is None:
        raise MalformedSequent(f"not a recognised rule id: {rule.name!r}")
    head = rule.name.split("@", 1)[0]
    kind = "Ex" if head.startswith("Ex") else head.split("[", 1)[0]
    position = int(m.group("pos")) if m.group("pos") is not None else None
    return CgtInstance(
        rule_id=rule.name,
        kind=kind,
        conclusion=parse_sequent(rule.conclusion),
        premises=tuple(parse_sequent(p) for p in rule.premises),
        position=position,
    )


def cgt_interpretation(system: DerivationSystem) -> TraceInterpretation:
    object_of = {sid: nat_object(parse_sequent(sid).nat_count) for sid in system.sequents}
    maps_of = {}
    for rule_id, rule in system.rules.items():
        maps_of[rule_id] = cgt_maps(_instance_from_rule(rule))
    return TraceInterpretation(algebra=BOOLEANS, object_of=object_of, maps_of=maps_of)
