import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls import fixtures, io
from dnls.errors import InputError
from dnls.grid import SpectralGrid
from dnls.lattice import PotentialPair
from dnls.scattering import scatter

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
values = st.lists(st.tuples(finite, finite), min_size=1, max_size=12)


@given(values, st.integers(-50, 50))
@settings(max_examples=50, deadline=None)
def test_pair_round_trip_is_bit_exact(vals, n_min):
    a = np.array([complex(x, y) for x, y in vals])
    pair = PotentialPair("uv", n_min, a, a[::-1].copy())
    back = io.from_dict(json.loads(io.dumps(pair)))
    assert back.kind == "uv" and back.n_min == n_min
    assert np.array_equal(back.first, pair.first) and np.array_equal(back.second, pair.second)
    csv_back = io.pair_from_csv(io.to_csv(pair), kind="uv")
    assert np.array_equal(csv_back.first, pair.first) and np.array_equal(csv_back.second, pair.second)


def test_scattering_round_trip():
    inside, outside = fixtures.one_soliton()
    d = scatter("qr", fixtures.p3(), SpectralGrid(256), bound_states=(inside, outside))
    back = io.from_dict(json.loads(io.dumps(d)))
    for name, vals in d.coefficients().items():
        assert np.array_equal(getattr(back, name), vals), name
    assert back.D_inf == d.D_inf and back.E_inf == d.E_inf and back.grid.M == d.grid.M
    assert np.array_equal(back.inside.C, inside.C) and back.outside.blocks[0].z == outside.blocks[0].z


def test_scattering_csv_columns():
    d = scatter("qr", fixtures.zero_pair(), SpectralGrid(64))
    lines = io.to_csv(d).splitlines()
    assert lines[0].startswith("m,theta,re_") and len(lines) == 65


def test_triplets_round_trip():
    inside, outside = fixtures.jordan_soliton()
    kind, i2, o2 = io.from_dict(json.loads(json.dumps(io.triplets_to_dict(inside, outside))))
    assert kind == "qr" and np.array_equal(i2.C, inside.C) and np.array_equal(o2.C, outside.C)
    kind, only, none = io.from_dict(io.triplet_to_dict(inside))
    assert only is not None and none is None


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"nothing": 1},
        {"kind": "qr", "n_min": 0, "first": [[1, 0]]},
        {"kind": "qr", "n_min": 0, "n_max": 3, "first": [[1, 0]], "second": [[0, 0]]},
        {"kind": "qr", "n_min": 0, "first": [[1, 0, 2]], "second": [[0, 0]]},
        {"blocks": [{"z": [0.5, 0], "C": [[1, 0]]}]},
        {"inside": {"blocks": [{"z": [0.5, 0], "m": 2, "C": [[1, 0]]}]}},
    ],
)
def test_malformed_documents(doc):
    with pytest.raises(InputError):
        io.from_dict(doc)


def test_malformed_csv():
    with pytest.raises(InputError):
        io.pair_from_csv("")
    with pytest.raises(InputError):
        io.pair_from_csv("n,re_first,im_first,re_second,im_second\n0,1,0,0,0\n2,1,0,0,0\n")
