"""JSON schemas for probability data, algebra elements, states, and channels.

Complex numbers are ``[re, im]`` pairs and transfer blocks are keyed by
``"y,x"`` strings. Documents::

    {"stoch": [[...], ...]}                       column-stochastic matrix
    {"prob": [...]}                               probability vector
    {"algebra": {"blocks": [2, 1]}}
    {"element": {"algebra": {...}, "blocks": [...]}, "state": true}
    {"channel": {"domain": {...}, "codomain": {...}, "transfer": {"y,x": ...}}}
    {"kraus": {"y,x": [...]}, "domain": {...}, "codomain": {...}}
    {"dilation": {"base": <element doc>, "environment": {...}, "joint": <element doc>}}

Tensor-product algebras may carry ``"factors": [alg, alg]`` so that joint
states keep their factorization.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from . import finstoch
from .channel import Channel, LinearBlockMap, from_blocks, from_kraus
from .cstar import Algebra, Element, State, tensor_algebra
from .dilation import Dilation
from .errors import ValidationError


def complex_matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_matrix_from_json(data: Any, what: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError(f"{what}: expected rows of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def algebra_to_json(a: Algebra) -> dict:
    out: dict[str, Any] = {"blocks": list(a.block_dims)}
    if a.factors is not None:
        out["factors"] = [algebra_to_json(f) for f in a.factors]
    return out


def algebra_from_json(data: Any) -> Algebra:
    if not isinstance(data, dict) or "blocks" not in data:
        raise ValidationError('algebra must be an object with a "blocks" list')
    if "factors" in data:
        fa, fb = (algebra_from_json(f) for f in data["factors"])
        alg = tensor_algebra(fa, fb)
        if list(alg.block_dims) != list(data["blocks"]):
            raise ValidationError("algebra blocks do not match the product of its factors")
        return alg
    try:
        return Algebra(tuple(int(m) for m in data["blocks"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad algebra blocks: {data['blocks']!r}") from exc


def element_to_json(e: Element) -> dict:
    doc: dict[str, Any] = {
        "element": {
            "algebra": algebra_to_json(e.algebra),
            "blocks": [complex_matrix_to_json(b) for b in e.blocks],
        }
    }
    if isinstance(e, State):
        doc["state"] = True
    return doc


def element_from_json(doc: Any) -> Element:
    if not isinstance(doc, dict) or "element" not in doc:
        raise ValidationError('expected an object with an "element" key')
    body = doc["element"]
    alg = algebra_from_json(body.get("algebra"))
    raw = body.get("blocks")
    if not isinstance(raw, list):
        raise ValidationError('element needs a "blocks" list')
    blocks = [complex_matrix_from_json(b, f"block {k}") for k, b in enumerate(raw)]
    if doc.get("state"):
        return State(alg, blocks)
    return Element(alg, blocks)


def state_from_json(doc: Any) -> State:
    e = element_from_json(doc)
    return e if isinstance(e, State) else State.of(e)


def _key(y: int, x: int) -> str:
    return f"{y},{x}"


def _parse_key(k: str) -> tuple[int, int]:
    try:
        y, x = (int(s) for s in k.split(","))
    except ValueError as exc:
        raise ValidationError(f'block key {k!r} is not of the form "y,x"') from exc
    return y, x


def channel_to_json(e: LinearBlockMap) -> dict:
    transfer = {
        _key(y, x): complex_matrix_to_json(e.block(y, x))
        for y in range(e.codomain.n_blocks)
        for x in range(e.domain.n_blocks)
    }
    return {
        "channel": {
            "domain": algebra_to_json(e.domain),
            "codomain": algebra_to_json(e.codomain),
            "transfer": transfer,
        }
    }


def channel_from_json(doc: Any, check: bool = True) -> LinearBlockMap:
    """Load a channel from transfer blocks or Kraus operators; CPTP-verified unless ``check=False``."""
    if not isinstance(doc, dict):
        raise ValidationError("channel document must be an object")
    if "channel" in doc:
        body = doc["channel"]
        dom = algebra_from_json(body.get("domain"))
        cod = algebra_from_json(body.get("codomain"))
        blocks = {}
        for k, v in body.get("transfer", {}).items():
            y, x = _parse_key(k)
            if not (0 <= y < cod.n_blocks and 0 <= x < dom.n_blocks):
                raise ValidationError(f"block key {k} out of range")
            b = complex_matrix_from_json(v, f"transfer block {k}")
            want = (cod.block_dims[y] ** 2, dom.block_dims[x] ** 2)
            if b.shape != want:
                raise ValidationError(f"transfer block {k} has shape {b.shape}, expected {want}")
            blocks[(y, x)] = b
        t = from_blocks(dom, cod, blocks)
        return Channel(dom, cod, t) if check else LinearBlockMap(dom, cod, t)
    if "kraus" in doc:
        ops = {}
        for k, mats in doc["kraus"].items():
            ops[_parse_key(k)] = [complex_matrix_from_json(m, f"Kraus operator {k}") for m in mats]
        if "domain" in doc and "codomain" in doc:
            dom = algebra_from_json(doc["domain"])
            cod = algebra_from_json(doc["codomain"])
        else:
            dom, cod = _infer_kraus_algebras(ops)
        return from_kraus(dom, cod, ops, channel=check)
    raise ValidationError('expected a "channel" or "kraus" document')


def _infer_kraus_algebras(ops: dict) -> tuple[Algebra, Algebra]:
    rows: dict[int, int] = {}
    cols: dict[int, int] = {}
    for (y, x), mats in ops.items():
        for m in mats:
            for store, idx, dim in ((rows, y, m.shape[0]), (cols, x, m.shape[1])):
                if store.setdefault(idx, dim) != dim:
                    raise ValidationError(f"inconsistent Kraus shapes for block index {idx}")
    for store, name in ((rows, "codomain"), (cols, "domain")):
        if sorted(store) != list(range(len(store))):
            raise ValidationError(f"cannot infer {name}: pass it explicitly")
    return (
        Algebra(tuple(cols[i] for i in range(len(cols)))),
        Algebra(tuple(rows[i] for i in range(len(rows)))),
    )


def stoch_to_json(f: np.ndarray) -> dict:
    return {"stoch": [[float(v) for v in row] for row in np.asarray(f)]}


def stoch_from_json(doc: Any) -> np.ndarray:
    if not isinstance(doc, dict) or "stoch" not in doc:
        raise ValidationError('expected an object with a "stoch" key')
    return finstoch.as_stochastic(doc["stoch"])


def prob_to_json(p: np.ndarray) -> dict:
    return {"prob": [float(v) for v in np.asarray(p)]}


def prob_from_json(doc: Any) -> np.ndarray:
    if not isinstance(doc, dict) or "prob" not in doc:
        raise ValidationError('expected an object with a "prob" key')
    return finstoch.as_prob(doc["prob"])


def dilation_to_json(d: Dilation) -> dict:
    return {
        "dilation": {
            "base": element_to_json(d.base_state),
            "environment": algebra_to_json(d.environment),
            "joint": element_to_json(d.joint),
        }
    }


def dilation_from_json(doc: Any) -> Dilation:
    if not isinstance(doc, dict) or "dilation" not in doc:
        raise ValidationError('expected an object with a "dilation" key')
    body = doc["dilation"]
    base = state_from_json(body.get("base"))
    env = algebra_from_json(body.get("environment"))
    joint_el = element_from_json(body.get("joint"))
    joint_alg = tensor_algebra(base.algebra, env)
    if joint_el.algebra != joint_alg:
        raise ValidationError(f"joint state lives in {joint_el.algebra}, expected {joint_alg}")
    return Dilation(base, env, State(joint_alg, joint_el.blocks))


def load_any(doc: Any) -> tuple[str, Any]:
    """Validate a document of any known kind; returns ``(kind, object)``."""
    if not isinstance(doc, dict):
        raise ValidationError("document must be a JSON object")
    if "stoch" in doc:
        return "stoch", stoch_from_json(doc)
    if "prob" in doc:
        return "prob", prob_from_json(doc)
    if "element" in doc:
        e = element_from_json(doc)
        return ("state" if isinstance(e, State) else "element"), e
    if "channel" in doc or "kraus" in doc:
        return "channel", channel_from_json(doc)
    if "dilation" in doc:
        return "dilation", dilation_from_json(doc)
    if "algebra" in doc:
        return "algebra", algebra_from_json(doc["algebra"])
    raise ValidationError(f"unrecognized document with keys {sorted(doc)}")


def read_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)
