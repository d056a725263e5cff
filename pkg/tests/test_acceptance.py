"""End-to-end acceptance checks; one PASS/FAIL line per criterion is printed
in the pytest terminal summary (and by ``python3 tests/test_acceptance.py``)."""
import itertools

import numpy as np
import pytest

from swallowtail.charpoly import cycle_expansion
from swallowtail.classifier import DIRAC, diagonal_spectrum, hessian_at
from swallowtail.graph_model import MODEL_NAMES, builtin_model
from swallowtail.region import render_svg
from swallowtail.report import region_grid_for
from swallowtail.singularity import SLICE_NORMALIZATION, Stratum, a3_slice_closed_form, discriminant_batch
from swallowtail.trigpoly import TrigPoly

from conftest import ACCEPTANCE, family, hamiltonian_oracle, locus, random_base, region, torus_dist

PI = np.pi
S3 = np.sqrt(3.0)


def record(number, title, ok, detail=""):
    ACCEPTANCE[number] = (title, bool(ok), detail)
    assert ok, f"criterion {number} ({title}) failed: {detail}"


def near(points, b, z, tol=1e-8):
    return [p for p in points if torus_dist(p.b, b) <= tol and abs(p.z - z) <= tol]


def cos_sum(freqs, n=3):
    out = TrigPoly.zero(n)
    for m in freqs:
        out = out + TrigPoly({tuple(m): 1, tuple(-x for x in m): 1})
    return out


def test_01_gyroid_coefficients():
    cp = family("gyroid")
    a0 = TrigPoly.constant(3, 3) - cos_sum([(1, 1, 0), (0, 1, 1), (1, 0, 1)])
    a1 = -cos_sum([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)])
    ok = (cp.coeffs[3].is_zero() and cp.coeffs[2] == TrigPoly.constant(-6, 3)
          and cp.coeffs[1] == a1 and cp.coeffs[0] == a0
          and cycle_expansion(builtin_model("gyroid").graph).coeffs == cp.coeffs)
    record(1, "gyroid coefficients exact; cycle expansion agrees", ok)


def test_02_slice_discriminant():
    rng = np.random.default_rng(2024)
    P = rng.uniform(-10, 10, size=(10_000, 2))
    disc = discriminant_batch(np.column_stack([P, np.full(len(P), -6.0)]), 4)
    closed = SLICE_NORMALIZATION * a3_slice_closed_form(P[:, 0], P[:, 1])
    err = float(np.max(np.abs(disc - closed) / np.maximum(np.abs(closed), 1.0)))
    record(2, "slice discriminant matches closed form", err <= 1e-9, f"max rel err {err:.2e}")


EXPECTED_GYROID = [((0, 0, 0), -1.0, Stratum((2,))), ((PI,) * 3, 1.0, Stratum((2,))),
                   ((PI / 2,) * 3, S3, Stratum((1, 1))), ((PI / 2,) * 3, -S3, Stratum((1, 1))),
                   ((3 * PI / 2,) * 3, S3, Stratum((1, 1))), ((3 * PI / 2,) * 3, -S3, Stratum((1, 1)))]


def test_03_gyroid_singular_set():
    problems = []
    for grid in (8, 16):
        pts = locus("gyroid", grid).points
        if len(pts) != len(EXPECTED_GYROID):
            problems.append(f"G={grid}: {len(pts)} points")
        for b, z, s in EXPECTED_GYROID:
            hit = near(pts, b, z)
            if len(hit) != 1 or hit[0].stratum != s:
                problems.append(f"G={grid}: missing {np.round(b, 4)} z={z:.4f}")
        if len(locus("gyroid", grid).base_points()) != 4:
            problems.append(f"G={grid}: base points != 4")
    record(3, "gyroid singular set at G=8 and G=16", not problems, "; ".join(problems))


def test_04_gyroid_hessians():
    cp = family("gyroid")
    H = hessian_at(cp, [PI / 2] * 3, S3)
    expected = np.array([[-4, -2, -2, 0], [-2, -4, -2, 0], [-2, -2, -4, 0], [0, 0, 0, 24]], float)
    (p,) = near(locus("gyroid").points, (PI / 2,) * 3, S3)
    zero = max(np.max(np.abs(hessian_at(cp, b, z))) for b, z in [((0, 0, 0), -1.0), ((PI,) * 3, 1.0)])
    err = float(np.max(np.abs(H - expected)))
    ok = err <= 1e-8 and p.classification == DIRAC and p.tilt_free and zero <= 1e-8
    record(4, "gyroid Dirac Hessian, A_2 Hessians vanish", ok, f"Hessian err {err:.1e}, A_2 max {zero:.1e}")


def test_05_honeycomb():
    pts = locus("honeycomb").points
    ok = len(pts) == 2
    for b in [(2 * PI / 3, -2 * PI / 3), (-2 * PI / 3, 2 * PI / 3)]:
        hit = near(pts, b, 0.0)
        ok &= len(hit) == 1 and hit[0].classification == DIRAC and hit[0].signature == (2, 0, 1)
    record(5, "honeycomb: two Dirac points, signature (--+)", ok, f"{len(pts)} points")


def _diamond_gap(b):
    phi = np.mod(b, 2 * PI)
    best = np.inf
    for i, j, k in itertools.permutations(range(3)):
        t = abs(phi[j] - phi[k] - PI) % (2 * PI)
        best = min(best, max(abs(phi[i] - PI), min(t, 2 * PI - t)))
    return best


def test_06_diamond():
    loc = locus("diamond")
    gap = max((_diamond_gap(p.b) for p in loc.points), default=np.inf)
    ok = loc.dimension == 1 and gap <= 1e-6 and not loc.dirac_points and len(loc.points) > 0
    record(6, "diamond: 1-dimensional locus on the circles, no Dirac points", ok,
           f"dim {loc.dimension}, {len(loc.points)} samples, max gap {gap:.1e}")


def test_07_triangle():
    pts = locus("triangle").points
    ok = len(pts) == 2
    for b, z in [((0.0,), -1.0), ((PI,), 1.0)]:
        hit = near(pts, b, z)
        ok &= len(hit) == 1 and hit[0].classification == DIRAC and hit[0].signature == (1, 0, 1)
    det = np.linalg.det(hessian_at(family("triangle"), [0.0], -1.0))
    ok &= abs(det + 12) <= 1e-9
    record(7, "triangle: Dirac points, det Hess = -12", ok, f"det {det:.12f}")


def test_08_triangle_double_bond():
    # b -> -b maps each point to a second solution with the same image under Xi
    pts = locus("triangle_ab").points
    cmap = family("triangle_ab").characteristic_map
    ok = len(pts) == 4
    images = []
    for a, z, sig in [(PI / 3, -1.0, (1, 0, 2)), (2 * PI / 3, 1.0, (2, 0, 1))]:
        for b in [(a, -a), (-a, a)]:
            hit = near(pts, b, z)
            ok &= len(hit) == 1 and hit[0].classification == DIRAC
            ok &= bool(hit) and hit[0].signature == sig and not hit[0].tilt_free
        images.append(cmap(np.array([a, -a])))
        ok &= np.allclose(cmap(np.array([a, -a])), cmap(np.array([-a, a])), atol=1e-12)
    ok &= np.max(np.abs(images[0] - images[1])) > 1e-3
    record(8, "triangle with double bond: two tilted Dirac points (up to b -> -b)", ok, f"{len(pts)} torus points")


def test_09_p_lattice_and_vnw():
    p = locus("p_lattice")
    v3 = locus("vnw3")
    v4 = locus("vnw4")
    ok3 = (len(v3.points) == 1 and np.max(np.abs(v3.points[0].x)) <= 1e-8
           and v3.points[0].classification == DIRAC and v3.points[0].signature == (3, 0, 1))
    B4 = np.array([q.b for q in v4.points]) if v4.points else np.zeros((0, 4))
    ok4 = v4.dimension == 1 and B4.shape[0] > 0 and np.max(np.abs(B4[:, :3])) <= 1e-6
    record(9, "p_lattice empty; vnw3 one Dirac point; vnw4 line", p.is_empty and ok3 and ok4,
           f"p_lattice {len(p.points)}, vnw3 {len(v3.points)}, vnw4 dim {v4.dimension}")


def test_10_region():
    worst = np.inf
    for name in MODEL_NAMES:
        r = region(name, region_grid_for(family(name).n))
        worst = min(worst, r.min_disc() / (1 + np.max(np.abs(r.disc))))
    slice_ok = bool(np.all(region("gyroid", 40).xi[:, 2] == -6.0))
    (h_lo, h_hi), = region("honeycomb", 200).ranges()
    (d_lo, d_hi), = region("diamond", 200).ranges()
    ranges_ok = (abs(h_lo + 9) <= 1e-6 and abs(h_hi) <= 1e-6 and abs(d_lo + 16) <= 1e-6 and abs(d_hi) <= 1e-6)
    record(10, "region containment, slice and intervals", worst >= -1e-9 and slice_ok and ranges_ok,
           f"min scaled disc {worst:.1e}, honeycomb [{h_lo:.7g}, {h_hi:.2g}], diamond [{d_lo:.7g}, {d_hi:.2g}]")


def test_11_diagonal_spectrum():
    err = diagonal_spectrum(family("gyroid"), 100)["max_error"]
    record(11, "gyroid diagonal bands match closed forms", err <= 1e-9, f"max err {err:.1e}")


def test_12_oracles():
    worst_g = worst_h = worst_e = 0.0
    h = 1e-5
    for name in MODEL_NAMES:
        cp = family(name)
        ev = cp.evaluator
        B = random_base(name, 100, seed=12)
        Z = np.random.default_rng(12).uniform(-3, 3, size=(100, 1))
        X = np.hstack([B, Z])
        _, G, H = ev.derivatives(X, 2)
        for j in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[j] = h
            fd_g = (ev.value(X + e) - ev.value(X - e)) / (2 * h)
            fd_h = (ev.gradient(X + e) - ev.gradient(X - e)) / (2 * h)
            worst_g = max(worst_g, float(np.max(np.abs(fd_g - G[:, j]) / np.maximum(1.0, np.abs(G[:, j])))))
            worst_h = max(worst_h, float(np.max(np.abs(fd_h - H[:, :, j]) / np.maximum(1.0, np.abs(H[:, :, j])))))
        for b in random_base(name, 200, seed=13):
            ev_h = np.linalg.eigvalsh(hamiltonian_oracle(name, b))
            roots = np.sort(np.roots(np.concatenate([[1.0], [c.evaluate(b).real for c in cp.coeffs][::-1]])).real)
            worst_e = max(worst_e, float(np.max(np.abs(roots - ev_h))))
    ok = worst_g <= 1e-6 and worst_h <= 1e-5 and worst_e <= 1e-8
    record(12, "derivative and eigenvalue oracles", ok,
           f"grad {worst_g:.1e}, hess {worst_h:.1e}, eig {worst_e:.1e}")


def test_13_gyroid_svg_contacts():
    count = render_svg(region("gyroid", 40), "gyroid").count('class="contact"')
    record(13, "gyroid region SVG flags exactly 3 discriminant contacts", count == 3, f"{count} contacts")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
