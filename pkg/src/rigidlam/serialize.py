"""Versioned JSON encodings for derivations, terms, paths, and auxiliary
inputs (biposition lists, type assignments).

All writers produce deterministic text (sorted keys, two-space indent,
trailing newline) so that regenerated files are byte-identical.  All loaders
validate against the schema tag and re-check the decoded object, so a file
that parses is already known to be well formed.
"""

from __future__ import annotations

import json

from .positions import Position, format_position, parse_position
from .terms import Term, reduce_at
from .syntax import parse_term, print_term
from .reduction import ReductionSequence, Step
from .r0 import (
    R0Derivation,
    R0Type,
    RAbs,
    RApp,
    RAx,
    check_r0,
)
from .stypes import (
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SHyp,
    SType,
    check_s,
    freeze_sctx,
    seq,
    seq_entries,
    seq_tail,
)

DERIVATION_SCHEMA = "rigidlam-derivation/1"
PATH_SCHEMA = "rigidlam-path/1"
BIPOSITIONS_SCHEMA = "rigidlam-bipositions/1"
ASSIGNMENT_SCHEMA = "rigidlam-assignment/1"


class SchemaError(ValueError):
    """The input is not a valid instance of the expected schema."""


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _loads(text: str):
    if not text.strip():
        raise SchemaError("empty input")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc


def _expect_schema(data, tag: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    if data.get("schema") != tag:
        raise SchemaError(f"expected schema {tag!r}, got {data.get('schema')!r}")


# -- multiset types ------------------------------------------------------------


def r0_type_to_json(ty: R0Type):
    if ty[0] == "v":
        return {"var": ty[1]}
    if ty[0] == "ar":
        return {
            "arrow": {
                "domain": [r0_type_to_json(t) for t in ty[1]],
                "target": r0_type_to_json(ty[2]),
            }
        }
    raise SchemaError(f"not a multiset type: {ty!r}")


def r0_type_from_json(data) -> R0Type:
    if isinstance(data, dict) and set(data) == {"var"} and isinstance(data["var"], str):
        return ("v", data["var"])
    if isinstance(data, dict) and set(data) == {"arrow"}:
        body = data["arrow"]
        if not isinstance(body, dict) or set(body) != {"domain", "target"}:
            raise SchemaError("arrow must have 'domain' and 'target'")
        if not isinstance(body["domain"], list):
            raise SchemaError("multiset arrow domain must be a list")
        dom = tuple(sorted(r0_type_from_json(t) for t in body["domain"]))
        return ("ar", dom, r0_type_from_json(body["target"]))
    raise SchemaError(f"not a multiset type encoding: {data!r}")


# -- sequence types ------------------------------------------------------------


def seq_to_json(s):
    tail = seq_tail(s)
    return {
        "entries": [[k, s_type_to_json(ty)] for k, ty in seq_entries(s)],
        "tail": None if tail is None else [tail[0], s_type_to_json(tail[1])],
    }


def seq_from_json(data):
    if not isinstance(data, dict) or set(data) != {"entries", "tail"}:
        raise SchemaError("sequence must have 'entries' and 'tail'")
    if not isinstance(data["entries"], list):
        raise SchemaError("sequence entries must be a list")
    pairs = []
    for item in data["entries"]:
        if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], int):
            raise SchemaError(f"bad sequence entry: {item!r}")
        pairs.append((item[0], s_type_from_json(item[1])))
    tail = data["tail"]
    if tail is not None:
        if not isinstance(tail, list) or len(tail) != 2 or not isinstance(tail[0], int):
            raise SchemaError(f"bad sequence tail: {tail!r}")
        tail = (tail[0], s_type_from_json(tail[1]))
    try:
        return seq(pairs, tail)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"invalid sequence: {exc}") from exc


def s_type_to_json(ty: SType):
    if ty[0] == "v":
        return {"var": ty[1]}
    if ty[0] == "ar":
        return {"arrow": {"domain": seq_to_json(ty[1]), "target": s_type_to_json(ty[2])}}
    raise SchemaError(f"not a rigid type: {ty!r}")


def s_type_from_json(data) -> SType:
    if isinstance(data, dict) and set(data) == {"var"} and isinstance(data["var"], str):
        return ("v", data["var"])
    if isinstance(data, dict) and set(data) == {"arrow"}:
        body = data["arrow"]
        if not isinstance(body, dict) or set(body) != {"domain", "target"}:
            raise SchemaError("arrow must have 'domain' and 'target'")
        return ("ar", seq_from_json(body["domain"]), s_type_from_json(body["target"]))
    raise SchemaError(f"not a rigid type encoding: {data!r}")


# -- contexts (hypothesis leaves) ----------------------------------------------


def _key_to_json(key):
    if isinstance(key, str):
        return ["free", key]
    if isinstance(key, int):
        return ["bound", key]
    raise SchemaError(f"bad context key: {key!r}")


def _key_from_json(data):
    if (
        isinstance(data, list)
        and len(data) == 2
        and data[0] in ("free", "bound")
    ):
        if data[0] == "free" and isinstance(data[1], str):
            return data[1]
        if data[0] == "bound" and isinstance(data[1], int):
            return data[1]
    raise SchemaError(f"bad context key encoding: {data!r}")


def sctx_to_json(ctx):
    return [[*_key_to_json(key), seq_to_json(s)] for key, s in ctx]


def sctx_from_json(data):
    if not isinstance(data, list):
        raise SchemaError("context must be a list")
    out = {}
    for item in data:
        if not isinstance(item, list) or len(item) != 3:
            raise SchemaError(f"bad context item: {item!r}")
        key = _key_from_json(item[:2])
        if key in out:
            raise SchemaError(f"duplicate context key: {key!r}")
        out[key] = seq_from_json(item[2])
    return freeze_sctx(out)


# -- derivation nodes ----------------------------------------------------------


def _r0_node_to_json(node):
    if isinstance(node, RAx):
        return {"rule": "ax", "type": r0_type_to_json(node.ty)}
    if isinstance(node, RAbs):
        return {"rule": "abs", "child": _r0_node_to_json(node.child)}
    if isinstance(node, RApp):
        return {
            "rule": "app",
            "fun": _r0_node_to_json(node.fun),
            "args": [_r0_node_to_json(a) for a in node.args],
        }
    raise SchemaError(f"not a multiset derivation node: {node!r}")


def _r0_node_from_json(data):
    if not isinstance(data, dict):
        raise SchemaError("derivation node must be an object")
    rule = data.get("rule")
    if rule == "ax":
        if set(data) != {"rule", "type"}:
            raise SchemaError("ax node must have exactly 'rule' and 'type'")
        return RAx(r0_type_from_json(data["type"]))
    if rule == "abs":
        if set(data) != {"rule", "child"}:
            raise SchemaError("abs node must have exactly 'rule' and 'child'")
        return RAbs(_r0_node_from_json(data["child"]))
    if rule == "app":
        if set(data) != {"rule", "fun", "args"} or not isinstance(data["args"], list):
            raise SchemaError("app node must have 'rule', 'fun' and list 'args'")
        return RApp(
            _r0_node_from_json(data["fun"]),
            tuple(_r0_node_from_json(a) for a in data["args"]),
        )
    raise SchemaError(f"unknown multiset rule: {rule!r}")


def _s_node_to_json(node):
    if isinstance(node, SAx):
        return {"rule": "ax", "track": node.track, "type": s_type_to_json(node.ty)}
    if isinstance(node, SAbs):
        return {"rule": "abs", "child": _s_node_to_json(node.child)}
    if isinstance(node, SApp):
        return {
            "rule": "app",
            "fun": _s_node_to_json(node.fun),
            "args": [[k, _s_node_to_json(a)] for k, a in node.args],
        }
    if isinstance(node, SHyp):
        return {
            "rule": "hyp",
            "type": s_type_to_json(node.ty),
            "context": sctx_to_json(node.ctx),
        }
    raise SchemaError(f"not a rigid derivation node: {node!r}")


def _s_node_from_json(data):
    if not isinstance(data, dict):
        raise SchemaError("derivation node must be an object")
    rule = data.get("rule")
    if rule == "ax":
        if set(data) != {"rule", "track", "type"} or not isinstance(data["track"], int):
            raise SchemaError("ax node must have 'rule', integer 'track' and 'type'")
        return SAx(data["track"], s_type_from_json(data["type"]))
    if rule == "abs":
        if set(data) != {"rule", "child"}:
            raise SchemaError("abs node must have exactly 'rule' and 'child'")
        return SAbs(_s_node_from_json(data["child"]))
    if rule == "app":
        if set(data) != {"rule", "fun", "args"} or not isinstance(data["args"], list):
            raise SchemaError("app node must have 'rule', 'fun' and list 'args'")
        args = []
        for item in data["args"]:
            if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], int):
                raise SchemaError(f"bad app argument entry: {item!r}")
            args.append((item[0], _s_node_from_json(item[1])))
        try:
            return SApp(_s_node_from_json(data["fun"]), tuple(args))
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"invalid application node: {exc}") from exc
    if rule == "hyp":
        if set(data) != {"rule", "type", "context"}:
            raise SchemaError("hyp node must have 'rule', 'type' and 'context'")
        return SHyp(s_type_from_json(data["type"]), sctx_from_json(data["context"]))
    raise SchemaError(f"unknown rigid rule: {rule!r}")


# -- whole derivations ---------------------------------------------------------


def dumps_derivation(deriv) -> str:
    """Serialize a checked derivation (either system) to stable JSON text."""
    if isinstance(deriv, R0Derivation):
        payload = {
            "schema": DERIVATION_SCHEMA,
            "system": "r0",
            "subject": print_term(deriv.subject),
            "root": _r0_node_to_json(deriv.root),
        }
    elif isinstance(deriv, SDerivation):
        payload = {
            "schema": DERIVATION_SCHEMA,
            "system": "s",
            "subject": print_term(deriv.subject),
            "root": _s_node_to_json(deriv.root),
        }
    else:
        raise SchemaError(f"not a derivation: {deriv!r}")
    return _dumps(payload)


def loads_derivation(text: str):
    """Decode and re-check a derivation.  Hypothesis leaves are permitted;
    the caller can reject them with `has_hypotheses` if need be."""
    data = _loads(text)
    _expect_schema(data, DERIVATION_SCHEMA)
    system = data.get("system")
    if system not in ("r0", "s"):
        raise SchemaError(f"unknown system: {system!r}")
    if not isinstance(data.get("subject"), str):
        raise SchemaError("missing or non-text 'subject'")
    if set(data) != {"schema", "system", "subject", "root"}:
        raise SchemaError("derivation must have exactly schema/system/subject/root")
    subject = parse_term(data["subject"])
    if system == "r0":
        deriv = R0Derivation(subject, _r0_node_from_json(data["root"]))
        check_r0(deriv)
        return deriv
    deriv = SDerivation(subject, _s_node_from_json(data["root"]))
    check_s(deriv, allow_hypotheses=True)
    return deriv


def parse_derivation(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_derivation(fh.read())


def write_derivation(deriv, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_derivation(deriv))


# -- terms ---------------------------------------------------------------------


def read_term(path) -> Term:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise SchemaError("empty term file")
    return parse_term(text)


def write_term(t: Term, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(print_term(t) + "\n")


# -- recorded reductions -------------------------------------------------------


def dumps_path(sequence: ReductionSequence) -> str:
    return _dumps(
        {
            "schema": PATH_SCHEMA,
            "initial": print_term(sequence.initial),
            "steps": [
                [format_position(p) for p in step.positions]
                for step in sequence.steps
            ],
        }
    )


def loads_path(text: str) -> ReductionSequence:
    """Decode a recorded reduction, replaying every multistep to rebuild the
    intermediate terms (and thereby validating each position)."""
    data = _loads(text)
    _expect_schema(data, PATH_SCHEMA)
    if set(data) != {"schema", "initial", "steps"}:
        raise SchemaError("path must have exactly schema/initial/steps")
    if not isinstance(data.get("initial"), str) or not isinstance(data.get("steps"), list):
        raise SchemaError("path needs text 'initial' and list 'steps'")
    current = parse_term(data["initial"])
    initial = current
    steps = []
    for step in data["steps"]:
        if not isinstance(step, list) or not step:
            raise SchemaError(f"bad multistep: {step!r}")
        positions = tuple(parse_position(p) for p in step)
        for p in positions:
            current = reduce_at(current, p)
        steps.append(Step(positions=positions, result=current))
    return ReductionSequence(initial=initial, steps=tuple(steps))


def read_path(path) -> ReductionSequence:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_path(fh.read())


def write_path(sequence: ReductionSequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_path(sequence))


# -- biposition lists ----------------------------------------------------------


def _bip_to_json(bip):
    if bip[0] == "r" and len(bip) == 3:
        return ["r", format_position(bip[1]), format_position(bip[2])]
    if bip[0] == "l" and len(bip) == 4:
        return [
            "l",
            format_position(bip[1]),
            _key_to_json(bip[2]),
            format_position(bip[3]),
        ]
    raise SchemaError(f"not a tagged biposition: {bip!r}")


def _bip_from_json(data):
    if isinstance(data, list) and len(data) == 3 and data[0] == "r":
        return ("r", parse_position(data[1]), parse_position(data[2]))
    if isinstance(data, list) and len(data) == 4 and data[0] == "l":
        return (
            "l",
            parse_position(data[1]),
            _key_from_json(data[2]),
            parse_position(data[3]),
        )
    raise SchemaError(f"bad biposition encoding: {data!r}")


def dumps_bipositions(bips) -> str:
    return _dumps(
        {
            "schema": BIPOSITIONS_SCHEMA,
            "bipositions": [_bip_to_json(b) for b in bips],
        }
    )


def loads_bipositions(text: str):
    data = _loads(text)
    _expect_schema(data, BIPOSITIONS_SCHEMA)
    if set(data) != {"schema", "bipositions"} or not isinstance(data["bipositions"], list):
        raise SchemaError("biposition file must have exactly schema/bipositions")
    return tuple(_bip_from_json(b) for b in data["bipositions"])


def read_bipositions(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_bipositions(fh.read())


# -- normal-form type assignments ----------------------------------------------


def dumps_assignment(assignment) -> str:
    return _dumps(
        {
            "schema": ASSIGNMENT_SCHEMA,
            "assign": [
                [format_position(a), s_type_to_json(ty)]
                for a, ty in sorted(assignment.items())
            ],
        }
    )


def loads_assignment(text: str) -> dict[Position, SType]:
    data = _loads(text)
    _expect_schema(data, ASSIGNMENT_SCHEMA)
    if set(data) != {"schema", "assign"} or not isinstance(data["assign"], list):
        raise SchemaError("assignment file must have exactly schema/assign")
    out = {}
    for item in data["assign"]:
        if not isinstance(item, list) or len(item) != 2:
            raise SchemaError(f"bad assignment entry: {item!r}")
        a = parse_position(item[0])
        if a in out:
            raise SchemaError(f"duplicate assignment position: {item[0]!r}")
        out[a] = s_type_from_json(item[1])
    return out


def read_assignment(path) -> dict[Position, SType]:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_assignment(fh.read())
