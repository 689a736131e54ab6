"""JSON round-trips for states and Hamiltonians.

Files hold ``n1``, ``n2`` and parallel real arrays ``re``/``im`` in
factor-1-major (row-major) order.  Hamiltonians add an optional ``split``
with ``h0``, ``h1`` and ``h2`` stored the same way.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .connection import HamiltonianSpec
from .hilbert import StateVector, ValidationError

SCHEMA_VERSION = 1


def encode_complex(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}


def decode_complex(data, shape=None) -> np.ndarray:
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"complex data needs 're' and 'im' arrays: {exc}") from exc
    if re.shape != im.shape:
        raise ValidationError("'re' and 'im' must have the same length")
    out = re + 1j * im
    if shape is not None:
        if out.size != int(np.prod(shape)):
            raise ValidationError(f"expected {int(np.prod(shape))} entries, got {out.size}")
        out = out.reshape(shape)
    return out


def _dims(data: dict) -> tuple[int, int]:
    try:
        return int(data["n1"]), int(data["n2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"record needs integer n1 and n2: {exc}") from exc


def state_to_dict(state: StateVector) -> dict:
    return {"version": SCHEMA_VERSION, "n1": state.space.n1, "n2": state.space.n2, **encode_complex(state.amplitudes)}


def state_from_dict(data: dict, normalize: bool = False) -> StateVector:
    n1, n2 = _dims(data)
    return StateVector.from_array(decode_complex(data, (n1 * n2,)), n1, n2, normalize=normalize)


def hamiltonian_to_dict(spec: HamiltonianSpec) -> dict:
    if spec.time_dependent:
        raise ValidationError("only time-independent Hamiltonians can be serialized")
    n1, n2 = spec.dims
    out = {"version": SCHEMA_VERSION, "n1": n1, "n2": n2, **encode_complex(spec.value_at(0.0))}
    if spec.split is not None:
        out["split"] = {name: encode_complex(x) for name, x in zip(("h0", "h1", "h2"), spec.split)}
    return out


def hamiltonian_from_dict(data: dict) -> HamiltonianSpec:
    n1, n2 = _dims(data)
    d = n1 * n2
    h = decode_complex(data, (d, d))
    split = None
    if "split" in data:
        parts = data["split"]
        try:
            split = (
                decode_complex(parts["h0"], (d, d)),
                decode_complex(parts["h1"], (n1, n1)),
                decode_complex(parts["h2"], (n2, n2)),
            )
        except KeyError as exc:
            raise ValidationError(f"split needs h0, h1 and h2: {exc}") from exc
    return HamiltonianSpec.constant(h, (n1, n2), split=split)


def save_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"file not found: {p}")
    return json.loads(p.read_text())


def load_state(path) -> StateVector:
    return state_from_dict(load_json(path))


def load_hamiltonian(path) -> HamiltonianSpec:
    return hamiltonian_from_dict(load_json(path))
