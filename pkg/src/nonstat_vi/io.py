"""JSON file formats for MDPs and value-iteration traces.

Floats are written with 17 significant digits so that a write/read round
trip reproduces every value bit for bit. Field order and layout are fixed,
which makes ``write(read(f))`` byte-identical to a file written here.
"""

from __future__ import annotations

import json
import numbers
from pathlib import Path

import numpy as np

from .avi import AviTrace, _freeze_trace
from .mdp import Mdp
from .validation import check_mdp


class FormatError(ValueError):
    """A file does not follow the expected schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _num(x) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    return "%.17g" % x


def _array(a, depth: int = 0, indent: int = 2) -> str:
    a = np.asarray(a)
    if a.ndim == 1:
        if np.issubdtype(a.dtype, np.integer):
            return "[" + ", ".join(str(int(x)) for x in a) + "]"
        return "[" + ", ".join(_num(x) for x in a) + "]"
    pad = " " * (indent * (depth + 1))
    inner = (",\n" + pad).join(_array(row, depth + 1, indent) for row in a)
    return "[\n" + pad + inner + "\n" + " " * (indent * depth) + "]"


def _document(fields) -> str:
    lines = [f'  "{name}": {text}' for name, text in fields]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def dumps_mdp(mdp: Mdp) -> str:
    return _document(
        [
            ("gamma", _num(mdp.gamma)),
            ("n_states", str(mdp.n_states)),
            ("n_actions", str(mdp.n_actions)),
            ("rewards", _array(mdp.rewards, 1)),
            ("transitions", _array(mdp.transitions, 1)),
        ]
    )


def _require(doc, key, where=""):
    if not isinstance(doc, dict):
        raise FormatError(where or "$", "expected an object")
    if key not in doc:
        raise FormatError(f"{where}{key}" if where else key, "missing field")
    return doc[key]


def _number(x, path):
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise FormatError(path, f"expected a number, got {x!r}")
    return float(x)


def _int(x, path, minimum=None):
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(path, f"expected an integer, got {x!r}")
    if minimum is not None and x < minimum:
        raise FormatError(path, f"must be >= {minimum}, got {x}")
    return x


def _nested(x, shape, path, convert=_number):
    """Convert nested lists to an array of ``shape``, reporting the bad path."""
    if not shape:
        return convert(x, path)
    if not isinstance(x, list):
        raise FormatError(path, "expected an array")
    if len(x) != shape[0]:
        raise FormatError(path, f"expected {shape[0]} entries, got {len(x)}")
    return [_nested(item, shape[1:], f"{path}[{i}]", convert) for i, item in enumerate(x)]


def loads_mdp(text: str) -> Mdp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("$", f"not valid JSON ({exc})") from None
    gamma = _number(_require(doc, "gamma"), "gamma")
    n = _int(_require(doc, "n_states"), "n_states", 1)
    na = _int(_require(doc, "n_actions"), "n_actions", 1)
    rewards = _nested(_require(doc, "rewards"), (n, na), "rewards")
    transitions = _nested(_require(doc, "transitions"), (n, na, n), "transitions")
    return check_mdp(Mdp(np.array(transitions), np.array(rewards), gamma))


def write_mdp(mdp: Mdp, path) -> None:
    Path(path).write_text(dumps_mdp(mdp))


def read_mdp(path) -> Mdp:
    return loads_mdp(Path(path).read_text())


def dumps_trace(trace: AviTrace) -> str:
    return _document(
        [
            ("gamma", _num(trace.gamma)),
            ("k", str(trace.k)),
            ("v0", _array(trace.v0, 1)),
            ("policies", _array(trace.policies, 1)),
            ("values", _array(trace.values, 1)),
            ("errors", _array(trace.errors, 1)),
        ]
    )


def loads_trace(text: str) -> AviTrace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("$", f"not valid JSON ({exc})") from None
    gamma = _number(_require(doc, "gamma"), "gamma")
    k = _int(_require(doc, "k"), "k", 1)
    v0 = _require(doc, "v0")
    if not isinstance(v0, list) or not v0:
        raise FormatError("v0", "expected a non-empty array")
    n = len(v0)
    v0 = _nested(v0, (n,), "v0")
    policies = _nested(
        _require(doc, "policies"), (k, n), "policies", lambda x, p: _int(x, p, 0)
    )
    values = _nested(_require(doc, "values"), (k, n), "values")
    errors = _nested(_require(doc, "errors"), (k, n), "errors")
    return _freeze_trace(v0, policies, values, errors, gamma)


def write_trace(trace: AviTrace, path) -> None:
    Path(path).write_text(dumps_trace(trace))


def read_trace(path) -> AviTrace:
    return loads_trace(Path(path).read_text())
