import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from swallowtail.classifier import (
    DEGENERATE, DIRAC, MORSE_OTHER, classify, diagonal_spectrum, fiber_stratum, gyroid_diagonal_closed_forms,
    hessian_at, is_dirac_signature, jacobi_eigh, signature, tilt_free,
)
from swallowtail.singularity import Stratum

from conftest import family, locus

S3 = np.sqrt(3.0)
GYROID_DIRAC_HESSIAN = np.array([[-4, -2, -2, 0], [-2, -4, -2, 0], [-2, -2, -4, 0], [0, 0, 0, 24]], float)


def test_gyroid_dirac_hessian():
    H = hessian_at(family("gyroid"), [np.pi / 2] * 3, S3)
    np.testing.assert_allclose(H, GYROID_DIRAC_HESSIAN, atol=1e-8)
    assert signature(H) == (3, 0, 1)


def test_triangle_hessian():
    H = hessian_at(family("triangle"), [0.0], -1.0)
    np.testing.assert_allclose(H, np.diag([2.0, -6.0]), atol=1e-12)
    assert np.linalg.det(H) == pytest.approx(-12)
    assert signature(H) == (1, 0, 1)


def test_gyroid_cusp_hessian_vanishes():
    np.testing.assert_allclose(hessian_at(family("gyroid"), [0, 0, 0], -1.0), 0, atol=1e-8)
    np.testing.assert_allclose(hessian_at(family("gyroid"), [np.pi] * 3, 1.0), 0, atol=1e-8)


def test_signature_examples():
    H = hessian_at(family("honeycomb"), [2 * np.pi / 3, -2 * np.pi / 3], 0.0)
    assert signature(H) == (2, 0, 1)
    assert signature(np.zeros((4, 4))) == (0, 4, 0)


def test_dirac_signature_rule():
    assert is_dirac_signature((3, 0, 1), 3)
    assert is_dirac_signature((1, 0, 2), 2)
    assert not is_dirac_signature((2, 0, 2), 3)
    assert not is_dirac_signature((2, 1, 1), 3)


def test_classify_gyroid_points():
    pts = locus("gyroid").points
    by_b = {tuple(np.round(p.b, 6)): p for p in pts}
    cusp = by_b[(0.0, 0.0, 0.0)]
    assert cusp.classification == DEGENERATE and cusp.stratum == Stratum((2,))
    for p in pts:
        if abs(p.b[0] - np.pi / 2) < 1e-6 or abs(p.b[0] - 3 * np.pi / 2) < 1e-6:
            assert p.classification == DIRAC and p.tilt_free
            assert p.stratum == Stratum((1, 1))


def test_classify_recomputes_stratum():
    p = locus("gyroid").points[0]
    label, stratum = classify(p, family("gyroid"))
    assert label == p.classification and stratum == p.stratum


def test_triangle_ab_cones_are_tilted():
    pts = locus("triangle_ab").points
    assert len(pts) == 4
    sigs = set()
    for p in pts:
        assert p.classification == DIRAC
        assert not p.tilt_free
        sigs.add(p.signature)
    assert sigs == {(1, 0, 2), (2, 0, 1)}


def test_morse_other_label():
    class Fake:
        b = np.zeros(3)
        z = 0.0
        signature = (2, 0, 2)
        stratum = Stratum()

    assert classify(Fake())[0] == MORSE_OTHER


def test_tilt_free_flag():
    H = np.eye(3)
    assert tilt_free(H)
    H[2, 0] = H[0, 2] = 0.1
    assert not tilt_free(H)


def test_dirac_points_sit_on_a_simple_crossing(zoo_name):
    cp = family(zoo_name)
    for p in locus(zoo_name).dirac_points:
        stratum, clusters = fiber_stratum(cp, p.b)
        hits = [c for c in clusters if abs(c.value - p.z) <= 1e-6 * (1 + abs(p.z))]
        assert len(hits) == 1 and hits[0].multiplicity == 2


def test_hessians_match_finite_differences(zoo_name):
    cp = family(zoo_name)
    h = 1e-5
    for p in locus(zoo_name).points[:20]:
        x = p.x
        H = hessian_at(cp, p.b, p.z)
        fd = np.zeros_like(H)
        for j in range(len(x)):
            e = np.zeros(len(x))
            e[j] = h
            fd[:, j] = (cp.evaluator.gradient((x + e)[None])[0] - cp.evaluator.gradient((x - e)[None])[0]) / (2 * h)
        assert np.max(np.abs(fd - H)) <= 1e-5 * max(1.0, np.max(np.abs(H)))


def test_diagonal_closed_forms_examples():
    np.testing.assert_allclose(gyroid_diagonal_closed_forms(0.0), [-1, -1, -1, 3], atol=1e-12)
    np.testing.assert_allclose(gyroid_diagonal_closed_forms(np.pi / 2), [-S3, -S3, S3, S3], atol=1e-12)
    np.testing.assert_allclose(gyroid_diagonal_closed_forms(np.pi), [-3, 1, 1, 1], atol=1e-12)


def test_diagonal_spectrum_matches():
    out = diagonal_spectrum(family("gyroid"), 100)
    assert out["max_error"] <= 1e-9
    assert diagonal_spectrum(family("gyroid"), 1)["numeric"].shape == (1, 4)
    with pytest.raises(ValueError):
        diagonal_spectrum(family("honeycomb"))


# -- Jacobi eigensolver ---------------------------------------------------

sym5 = arrays(np.float64, (5, 5), elements=st.floats(-10, 10, allow_nan=False)).map(lambda A: (A + A.T) / 2)


@given(sym5)
def test_jacobi_reconstruction(A):
    w, Q = jacobi_eigh(A)
    scale = max(np.max(np.abs(A)), 1e-300)
    assert np.max(np.abs(Q @ np.diag(w) @ Q.T - A)) <= 1e-10 * scale + 1e-300
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10 * scale + 1e-300)


def test_jacobi_batched_shapes():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(2, 3, 4, 4))
    A = A + np.swapaxes(A, -1, -2)
    w, Q = jacobi_eigh(A)
    assert w.shape == (2, 3, 4) and Q.shape == (2, 3, 4, 4)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-12)


def test_sylvester_law_of_inertia():
    rng = np.random.default_rng(42)
    for _ in range(100):
        d = rng.choice([-1.0, 0.0, 1.0], size=5) * rng.uniform(0.5, 2.0, size=5)
        D = np.diag(d)
        while True:
            C = rng.normal(size=(5, 5))
            if np.linalg.cond(C) < 50:
                break
        expect = (int(np.sum(d < 0)), int(np.sum(d == 0)), int(np.sum(d > 0)))
        assert signature(C.T @ D @ C) == expect
