import json

import numpy as np
import pytest

from artifact.connection import HamiltonianSpec
from artifact.hilbert import ValidationError, random_hermitian, random_state
from artifact.io import (
    decode_complex,
    encode_complex,
    hamiltonian_from_dict,
    hamiltonian_to_dict,
    load_hamiltonian,
    load_state,
    save_json,
    state_from_dict,
    state_to_dict,
)


def test_complex_round_trip(rng):
    a = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    assert np.array_equal(decode_complex(json.loads(json.dumps(encode_complex(a))), (3, 4)), a)


def test_state_file_layout(rng):
    g = random_state(2, 3, rng)
    rec = state_to_dict(g)
    assert (rec["n1"], rec["n2"]) == (2, 3)
    # factor-1-major: entry i*n2 + j is the (i, j) amplitude
    assert rec["re"][1 * 3 + 2] == g.matrix[1, 2].real
    assert rec["im"][1 * 3 + 2] == g.matrix[1, 2].imag


def test_state_round_trip(tmp_path, rng):
    g = random_state(2, 3, rng)
    save_json(state_to_dict(g), tmp_path / "s.json")
    back = load_state(tmp_path / "s.json")
    assert np.array_equal(back.amplitudes, g.amplitudes)
    assert (back.space.n1, back.space.n2) == (2, 3)


def test_hamiltonian_round_trip(tmp_path, rng):
    spec = HamiltonianSpec.from_split(random_hermitian(4, rng), random_hermitian(2, rng), random_hermitian(2, rng))
    save_json(hamiltonian_to_dict(spec), tmp_path / "h.json")
    back = load_hamiltonian(tmp_path / "h.json")
    assert np.allclose(back.value_at(0.0), spec.value_at(0.0))
    for x, y in zip(back.split, spec.split):
        assert np.allclose(x, y)


def test_malformed_records(tmp_path):
    with pytest.raises(ValidationError):
        state_from_dict({"n1": 2, "n2": 2})
    with pytest.raises(ValidationError):
        state_from_dict({"n1": 2, "n2": 2, "re": [1.0, 0.0, 0.0], "im": [0.0, 0.0, 0.0]})
    with pytest.raises(ValidationError):
        decode_complex({"re": [1.0, 2.0], "im": [0.0]})
    with pytest.raises(ValidationError):
        hamiltonian_from_dict({"re": []})
    with pytest.raises(ValidationError):
        load_state(tmp_path / "missing.json")
