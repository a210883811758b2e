import json
import math

import numpy as np
import pytest

try:
    import vnsplit as vn
except ImportError:
    import _core as vn


def test_tensor_and_partial_trace():
    a = np.eye(2, dtype=complex)
    b = np.eye(3, dtype=complex)
    assert np.allclose(vn.tensor(a, b), np.eye(6))
    rho = np.kron(np.diag([0.7, 0.3]).astype(complex), np.eye(2, dtype=complex) / 2)
    left = vn.partial_trace(rho, 2, 2, vn.Side.Right)
    assert np.allclose(left, np.diag([0.7, 0.3]))


def test_algebra_pipeline():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1, -1]).astype(complex)
    a = vn.generate_algebra([np.kron(x, np.eye(2)), np.kron(z, np.eye(2))], 4)
    assert a.dim == 4
    c = vn.commutant(a)
    assert c.dim == 4
    assert vn.center(a).dim == 1
    aw = vn.aw_decomposition(a)
    assert [(b.d_left, b.d_right) for b in aw.blocks] == [(2, 2)]
    u = aw.unitary
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-9)


def test_fixture_splitting_maps():
    chi = vn.fixture_split("chi-oplus")
    assert (chi.d_H, chi.d_L, chi.d_R) == (4, 3, 3)
    assert vn.is_balanced(chi)
    assert vn.is_lean(chi)
    stloc = vn.strictly_local_algebra(chi, vn.Side.Left)
    assert stloc.dim == 5

    ub = vn.fixture_split("unbalanced-00-10")
    assert not vn.is_balanced(ub)
    assert vn.strictly_local_algebra(ub, vn.Side.Right).dim == 1


def test_comprehension():
    ent = vn.fixture_split("entangled-balanced")
    bc = vn.comprehension_balanced_canonical(ent)
    assert vn.verify_comprehension(bc.zeta, ent, bc.forward)
    assert vn.verify_comprehension(ent, bc.zeta, bc.backward)


def test_channel_roundtrip():
    e = vn.fixture_channel("product-channel")
    sd = vn.stinespring(e, True)
    assert sd.d_env == 8
    rho = np.eye(4, dtype=complex) / 4
    out = vn.apply_channel(e, rho)
    assert abs(np.trace(out) - 1.0) < 1e-10

    a = vn.fixture_algebra("algebra-otimes")
    a_c = vn.commutant(a)
    chi_ap = vn.canonical_splitting_map(a_c)
    chi_b = vn.canonical_splitting_map(a)
    witness = vn.schroedinger_semicausal(e, chi_ap, chi_b)
    assert witness is not None
    sl = vn.semi_localise(e, chi_ap, chi_b)
    assert vn.verify_semi_localisation(e, sl, chi_ap)


def test_cli_entry_point():
    code, out, err = vn.run_cli(["fixture", "chi-oplus"], "")
    assert code == 0
    doc = json.loads(out)
    assert doc["d_L"] == 3
    code2, out2, _ = vn.run_cli(["split", "balanced"], out)
    assert code2 == 0


def test_errors_are_typed():
    with pytest.raises(Exception):
        vn.make_splitting_map(np.ones((4, 2), dtype=complex), 2, 2)
