"""Self-describing JSON proof bundles.

One file carries everything a command needs: the algebra, trace objects and
morphisms, the derivation-rule table with per-premise morphism references,
the preproof, and optionally per-node boards plus step kinds for reset
proofs.  Output is UTF-8 JSON with sorted keys and sorted map entries so
that serialisation is stable; an instance tag selects the concrete syntax
layer that sequent displays are written in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .algebra import ActivationAlgebra, validate as validate_algebra
from .boards import SafraBoard, validate_board
from .gtc import TraceInterpretation
from .proofs import Addr, CyclicTree, DerivationSystem, Preproof, Rule
from .reset import AnnotatedSequent, ResetPreproof, ResetStep
from .trace import TraceMorphism, TraceObject, morphism


class BundleError(Exception):
    pass


@dataclass
class Bundle:
    algebra: ActivationAlgebra
    objects: dict[str, TraceObject]
    morphisms: dict[str, TraceMorphism]
    system: DerivationSystem
    iota: TraceInterpretation
    preproof: Preproof | None = None
    reset: ResetPreproof | None = None
    instance: str = "generic"
    morphism_names: dict[TraceMorphism, str] = field(default_factory=dict)

    def object_name(self, obj: TraceObject) -> str:
        for name, known in self.objects.items():
            if known == obj:
                return name
        raise BundleError(f"object {obj.name!r} not in the bundle table")


def _addr_to_json(addr: Addr) -> list[int]:
    return list(addr)


def _addr_from_json(raw: Any) -> Addr:
    if not isinstance(raw, list) or not all(isinstance(i, int) for i in raw):
        raise BundleError(f"bad address {raw!r}")
    return tuple(raw)


def _board_to_json(bundle: Bundle, board: SafraBoard) -> dict:
    cells = {}
    for (x, a), stack in board.cells():
        cells.setdefault((x, a), []).append(sorted(stack))
    return {
        "object": bundle.object_name(board.obj),
        "control": list(board.control),
        "sigma": [
            {"x": x, "a": a, "stacks": sorted(stacks)}
            for (x, a), stacks in sorted(cells.items())
        ],
    }


def _board_from_json(bundle: Bundle, raw: dict) -> SafraBoard:
    try:
        obj = bundle.objects[raw["object"]]
        placements = set()
        for cell in raw["sigma"]:
            for stack in cell["stacks"]:
                placements.add((cell["x"], cell["a"], frozenset(stack)))
        board = SafraBoard(obj=obj, control=tuple(raw["control"]), placements=frozenset(placements))
    except (KeyError, TypeError) as err:
        raise BundleError(f"bad board: {err}") from None
    problems = validate_board(board)
    if problems:
        raise BundleError("; ".join(problems))
    return board


def _step_to_json(step: ResetStep) -> dict:
    out: dict[str, Any] = {"kind": step.kind}
    if step.rule is not None:
        out["rule"] = step.rule
    if step.chip is not None:
        out["chip"] = step.chip
    return out


def _step_from_json(raw: dict) -> ResetStep:
    return ResetStep(kind=raw["kind"], rule=raw.get("rule"), chip=raw.get("chip"))


def to_json(bundle: Bundle) -> dict:
    morphism_ids = dict(bundle.morphism_names)
    for name, m in bundle.morphisms.items():
        morphism_ids.setdefault(m, name)
    data: dict[str, Any] = {
        "instance": bundle.instance,
        "algebra": {
            "elements": list(bundle.algebra.names),
            "join": [list(row) for row in bundle.algebra.table],
            "alpha": bundle.algebra.alpha,
        },
        "objects": [
            {"id": name, "elements": list(obj.elements)}
            for name, obj in sorted(bundle.objects.items())
        ],
        "morphisms": [
            {
                "id": name,
                "dom": bundle.object_name(m.dom),
                "cod": bundle.object_name(m.cod),
                "triples": [list(t) for t in m.triples],
            }
            for name, m in sorted(bundle.morphisms.items())
        ],
        "sequents": [
            {"id": sid, "display": disp} for sid, disp in sorted(bundle.system.sequents.items())
        ],
        "rules": [
            {
                "id": rid,
                "conclusion": rule.conclusion,
                "premises": list(rule.premises),
                "maps": [morphism_ids[m] for m in bundle.iota.maps_of[rid]],
            }
            for rid, rule in sorted(bundle.system.rules.items())
        ],
        "objects_of": [
            [sid, bundle.object_name(obj)] for sid, obj in sorted(bundle.iota.object_of.items())
        ],
    }
    proof = bundle.preproof
    if bundle.reset is not None:
        rp = bundle.reset
        data["preproof"] = {
            "nodes": sorted(_addr_to_json(t) for t in rp.nodes),
            "lambda": [[_addr_to_json(t), ann.base] for t, ann in sorted(rp.lam.items())],
            "delta": [],
            "beta": [[_addr_to_json(b), _addr_to_json(c)] for b, c in sorted(rp.tree.beta.items())],
        }
        data["reset"] = {
            "boards": [
                [_addr_to_json(t), _board_to_json(bundle, ann.board)]
                for t, ann in sorted(rp.lam.items())
            ],
            "steps": [
                [_addr_to_json(t), _step_to_json(step)] for t, step in sorted(rp.steps.items())
            ],
        }
    elif proof is not None:
        data["preproof"] = {
            "nodes": sorted(_addr_to_json(t) for t in proof.nodes),
            "lambda": [[_addr_to_json(t), s] for t, s in sorted(proof.lam.items())],
            "delta": [[_addr_to_json(t), r] for t, r in sorted(proof.delta.items())],
            "beta": [
                [_addr_to_json(b), _addr_to_json(c)] for b, c in sorted(proof.tree.beta.items())
            ],
        }
    return data


def dumps(bundle: Bundle) -> str:
    return json.dumps(to_json(bundle), sort_keys=True, indent=2) + "\n"


def from_json(data: dict) -> Bundle:
    try:
        alg_raw = data["algebra"]
        alg = ActivationAlgebra(
            names=tuple(alg_raw["elements"]),
            table=tuple(tuple(row) for row in alg_raw["join"]),
            alpha=alg_raw["alpha"],
        )
    except (KeyError, TypeError) as err:
        raise BundleError(f"bad algebra section: {err}") from None
    bad = validate_algebra(alg)
    if bad is not None:
        raise BundleError(f"invalid algebra: {bad}")

    objects: dict[str, TraceObject] = {}
    for raw in data.get("objects", []):
        try:
            objects[raw["id"]] = TraceObject(raw["id"], tuple(raw["elements"]))
        except (KeyError, TypeError, ValueError) as err:
            raise BundleError(f"bad object: {err}") from None

    morphisms: dict[str, TraceMorphism] = {}
    for raw in data.get("morphisms", []):
        try:
            dom, cod = objects[raw["dom"]], objects[raw["cod"]]
            morphisms[raw["id"]] = morphism(
                dom, cod, [tuple(t) for t in raw["triples"]], alg=alg
            )
        except (KeyError, TypeError, ValueError) as err:
            raise BundleError(f"bad morphism: {err}") from None

    sequents = {}
    for raw in data.get("sequents", []):
        try:
            sequents[raw["id"]] = raw["display"]
        except (KeyError, TypeError) as err:
            raise BundleError(f"bad sequent: {err}") from None

    rules: dict[str, Rule] = {}
    maps_of: dict[str, tuple[TraceMorphism, ...]] = {}
    for raw in data.get("rules", []):
        try:
            rid = raw["id"]
            rules[rid] = Rule(
                name=rid, conclusion=raw["conclusion"], premises=tuple(raw["premises"])
            )
            maps_of[rid] = tuple(morphisms[mid] for mid in raw["maps"])
        except (KeyError, TypeError) as err:
            raise BundleError(f"bad rule: {err}") from None
        if rules[rid].conclusion not in sequents or any(
            p not in sequents for p in rules[rid].premises
        ):
            raise BundleError(f"rule {rid}: sequent reference missing")
        if len(maps_of[rid]) != rules[rid].arity:
            raise BundleError(f"rule {rid}: one morphism per premise required")

    object_of: dict[str, TraceObject] = {}
    for pair in data.get("objects_of", []):
        try:
            sid, oid = pair
            object_of[sid] = objects[oid]
        except (KeyError, TypeError, ValueError) as err:
            raise BundleError(f"bad objects_of entry: {err}") from None
    if set(object_of) != set(sequents):
        raise BundleError("objects_of must cover exactly the sequent table")

    system = DerivationSystem(sequents=sequents, rules=rules)
    iota = TraceInterpretation(algebra=alg, object_of=object_of, maps_of=maps_of)
    bundle = Bundle(
        algebra=alg,
        objects=objects,
        morphisms=morphisms,
        system=system,
        iota=iota,
        instance=data.get("instance", "generic"),
    )

    if "preproof" in data:
        raw = data["preproof"]
        try:
            nodes = frozenset(_addr_from_json(t) for t in raw["nodes"])
            beta = {_addr_from_json(b): _addr_from_json(c) for b, c in raw.get("beta", [])}
            lam = {_addr_from_json(t): s for t, s in raw.get("lambda", [])}
            delta = {_addr_from_json(t): r for t, r in raw.get("delta", [])}
        except (KeyError, TypeError) as err:
            raise BundleError(f"bad preproof section: {err}") from None
        for sid in lam.values():
            if sid not in sequents:
                raise BundleError(f"preproof labels unknown sequent {sid!r}")
        for rid in delta.values():
            if rid not in rules:
                raise BundleError(f"preproof uses unknown rule {rid!r}")
        tree = CyclicTree(nodes, beta)
        if "reset" in data:
            reset_raw = data["reset"]
            boards = {
                _addr_from_json(t): _board_from_json(bundle, b)
                for t, b in reset_raw.get("boards", [])
            }
            steps = {
                _addr_from_json(t): _step_from_json(s) for t, s in reset_raw.get("steps", [])
            }
            if set(boards) != set(lam):
                raise BundleError("reset boards must cover exactly the labelled nodes")
            ann = {t: AnnotatedSequent(lam[t], boards[t]) for t in lam}
            for step in steps.values():
                if step.kind == "rule" and step.rule not in rules:
                    raise BundleError(f"reset step uses unknown rule {step.rule!r}")
            bundle.reset = ResetPreproof(tree=tree, lam=ann, steps=steps)
        else:
            bundle.preproof = Preproof(tree=tree, lam=lam, delta=delta)
    return bundle


def loads(text: str) -> Bundle:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise BundleError(f"not JSON: {err}") from None
    if not isinstance(data, dict):
        raise BundleError("bundle must be a JSON object")
    return from_json(data)


def load_path(path: str) -> Bundle:
    with open(path, encoding="utf-8") as handle:
        return loads(handle.read())


def make_bundle(
    alg: ActivationAlgebra,
    system: DerivationSystem,
    iota: TraceInterpretation,
    preproof: Preproof | None = None,
    reset: ResetPreproof | None = None,
    instance: str = "generic",
) -> Bundle:
    """Assemble a bundle, naming objects and morphisms deterministically."""
    objects: dict[str, TraceObject] = {}
    names: dict[TraceObject, str] = {}

    def intern(obj: TraceObject) -> str:
        if obj not in names:
            name = obj.name
            while name in objects:
                name = f"{name}#{len(names)}"
            names[obj] = name
            objects[name] = obj
        return names[obj]

    for _, obj in sorted(iota.object_of.items()):
        intern(obj)
    morphisms: dict[str, TraceMorphism] = {}
    morphism_names: dict[TraceMorphism, str] = {}
    for rid in sorted(system.rules):
        for m in iota.maps_of[rid]:
            intern(m.dom)
            intern(m.cod)
            if m not in morphism_names:
                name = f"m{len(morphism_names)}"
                morphism_names[m] = name
                morphisms[name] = m
    if reset is not None:
        for ann in reset.lam.values():
            intern(ann.board.obj)
    return Bundle(
        algebra=alg,
        objects=objects,
        morphisms=morphisms,
        system=system,
        iota=iota,
        preproof=preproof,
        reset=reset,
        instance=instance,
        morphism_names=morphism_names,
    )


# --- DOT export ------------------------------------------------------------------


def export_dot(bundle: Bundle) -> str:
    """Graphviz rendering: solid child edges labelled rule and premise
    index, dashed back edges, node labels showing the sequent display and,
    for reset proofs, a compact board rendering."""
    from .proofs import format_addr

    lines = ["digraph proof {", '  node [shape=box, fontname="monospace"];']
    if bundle.reset is not None:
        rp = bundle.reset
        tree = rp.tree
        for t in sorted(rp.nodes):
            ann = rp.lam[t]
            label = f"{bundle.system.display(ann.base)}\\n{ann.board.render()}"
            lines.append(f'  "{format_addr(t)}" [label="{_dot_escape(label)}"];')
        for t, step in sorted(rp.steps.items()):
            for i, kid in enumerate(tree.children(t), start=1):
                lines.append(
                    f'  "{format_addr(t)}" -> "{format_addr(kid)}" '
                    f'[label="{_dot_escape(step.describe())}.{i}"];'
                )
    elif bundle.preproof is not None:
        proof = bundle.preproof
        tree = proof.tree
        for t in sorted(proof.nodes):
            label = bundle.system.display(proof.lam[t])
            lines.append(f'  "{format_addr(t)}" [label="{_dot_escape(label)}"];')
        for t, rid in sorted(proof.delta.items()):
            for i, kid in enumerate(tree.children(t), start=1):
                lines.append(
                    f'  "{format_addr(t)}" -> "{format_addr(kid)}" [label="{_dot_escape(rid)}.{i}"];'
                )
    else:
        raise BundleError("nothing to export")
    for bud, comp in sorted(tree.beta.items()):
        lines.append(f'  "{format_addr(bud)}" -> "{format_addr(comp)}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace('"', '\\"')
