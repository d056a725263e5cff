"""Hessian, signature and Dirac-point classification at critical points of P."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .charpoly import CharPolyFamily
from .singularity import RootCluster, Stratum, stratum_of

DIRAC = "dirac"
MORSE_OTHER = "morse-other"
DEGENERATE = "degenerate"

SIGNATURE_REL_TOL = 1e-7
SIGNATURE_ABS_FLOOR = 1e-10


def jacobi_eigh(A, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-decomposition of real symmetric matrices.

    ``A`` is one matrix or a stack ``(..., m, m)``.  Returns ``(eigenvalues, Q)``
    with ``A = Q diag(eigenvalues) Q^T`` and eigenvalues sorted ascending.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("jacobi_eigh needs square matrices")
    lead, size = A.shape[:-2], A.shape[-1]
    A = A.reshape((-1, size, size))
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    S = A.shape[0]
    # unit scale keeps squared entries clear of underflow and overflow
    mag = np.max(np.abs(A), axis=(1, 2))
    mag = np.where(mag > 0, mag, 1.0)
    A = A / mag[:, None, None]
    Q = np.repeat(np.eye(size)[None], S, axis=0)
    norm = np.linalg.norm(A, axis=(1, 2))
    low = np.tril_indices(size, -1)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, low[0], low[1]] ** 2, axis=1))
        live = off > tol * norm
        if not np.any(live):
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = A[:, p, q]
                rot = live & (apq != 0.0)
                if not np.any(rot):
                    continue
                safe = np.where(rot, apq, 1.0)
                with np.errstate(over="ignore"):
                    theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                    t = np.where(theta == 0.0, 1.0,
                                 np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)))
                c = np.where(rot, 1.0 / np.sqrt(t * t + 1.0), 1.0)
                s = np.where(rot, t * c, 0.0)
                cc, ss = c[:, None], s[:, None]
                Ap, Aq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = cc * Ap - ss * Aq
                A[:, :, q] = ss * Ap + cc * Aq
                Ap, Aq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = cc * Ap - ss * Aq
                A[:, q, :] = ss * Ap + cc * Aq
                A[rot, p, q] = 0.0
                A[rot, q, p] = 0.0
                Qp, Qq = Q[:, :, p].copy(), Q[:, :, q].copy()
                Q[:, :, p] = cc * Qp - ss * Qq
                Q[:, :, q] = ss * Qp + cc * Qq
    evals = np.diagonal(A, axis1=1, axis2=2) * mag[:, None]
    order = np.argsort(evals, axis=1)
    evals = np.take_along_axis(evals, order, axis=1)
    Q = np.take_along_axis(Q, order[:, None, :], axis=2)
    return evals.reshape(lead + (size,)), Q.reshape(lead + (size, size))


def signatures_from_eigenvalues(evals: np.ndarray, tol: float = 1e-7, floor: float = 1e-10) -> np.ndarray:
    """Rows ``(n_minus, n_zero, n_plus)`` for a stack of eigenvalue vectors."""
    evals = np.atleast_2d(evals)
    cut = np.maximum(tol * np.max(np.abs(evals), axis=1, initial=0.0), floor)[:, None]
    n_minus = np.sum(evals < -cut, axis=1)
    n_plus = np.sum(evals > cut, axis=1)
    return np.stack([n_minus, evals.shape[1] - n_minus - n_plus, n_plus], axis=1)


def signature(M, tol: float = SIGNATURE_REL_TOL, floor: float = SIGNATURE_ABS_FLOOR) -> tuple[int, int, int]:
    """Inertia ``(n_minus, n_zero, n_plus)`` of a symmetric matrix."""
    evals, _ = jacobi_eigh(M)
    if evals.size == 0:
        return 0, 0, 0
    return tuple(int(v) for v in signatures_from_eigenvalues(evals, tol, floor)[0])


def hessian_at(cp: CharPolyFamily, b: Sequence[float], z: float) -> np.ndarray:
    """Analytic Hessian of P in ``(b_1..b_n, z)``, symmetrized."""
    X = np.concatenate([np.asarray(b, dtype=float), [float(z)]])[None, :]
    H = cp.evaluator.hessian(X)[0]
    return 0.5 * (H + H.T)


def is_dirac_signature(sig: tuple[int, int, int], n: int) -> bool:
    n_minus, n_zero, n_plus = sig
    return n_zero == 0 and (n_minus, n_plus) in {(n, 1), (1, n)}


def fiber_stratum(cp: CharPolyFamily, b, tol: float = 1e-6):
    """Stratum of the fiber over ``b`` and its clustered (unshifted) roots."""
    b = np.asarray(b, dtype=float)
    if cp.k == 1:
        return Stratum(), []
    shift = cp.shift.evaluate(b) if cp.shift is not None else 0.0
    lam = cp.characteristic_map(b)
    if cp.hamiltonian is not None:
        roots = cp.evaluator.roots(b) + shift
        stratum, clusters = stratum_of(lam, cp.k, tol, roots=roots)
    else:
        stratum, clusters = stratum_of(lam, cp.k, tol)
    clusters = [RootCluster(c.value - shift, c.multiplicity) for c in clusters]
    return stratum, clusters


def classify(point, cp: CharPolyFamily | None = None, tilt_tol: float = 1e-8,
             root_tol: float = 1e-6) -> tuple[str, Stratum]:
    """Classification string and fiber stratum for a critical point.

    ``point`` needs ``hessian``, ``signature``, ``b`` and ``z``; when ``cp``
    is given the stratum is computed from the fiber, and ``tilt_free`` is
    refreshed from the mixed ``z``/``b`` second derivatives.
    """
    n = len(point.b)
    sig = point.signature
    if is_dirac_signature(sig, n):
        label = DIRAC
    elif sig[1] == 0:
        label = MORSE_OTHER
    else:
        label = DEGENERATE
    stratum = point.stratum
    if cp is not None:
        stratum, _ = fiber_stratum(cp, point.b, root_tol)
    return label, stratum


def tilt_free(hessian: np.ndarray, tol: float = 1e-8) -> bool:
    """True iff every mixed derivative ``d^2P/dz db_i`` vanishes."""
    return bool(np.all(np.abs(hessian[-1, :-1]) <= tol))


def gyroid_diagonal_closed_forms(a) -> np.ndarray:
    """Closed-form bands along ``a = b = c``; columns sorted ascending."""
    a = np.asarray(a, dtype=float)
    omega = np.exp(2j * np.pi / 3)
    lam1 = (omega * np.exp(1j * a) + np.conj(omega) * np.exp(-1j * a)).real
    lam2 = (np.conj(omega) * np.exp(1j * a) + omega * np.exp(-1j * a)).real
    root = np.sqrt(np.cos(a) ** 2 + 3)
    bands = np.stack([lam1, lam2, np.cos(a) + root, np.cos(a) - root], axis=-1)
    return np.sort(bands, axis=-1)


def diagonal_spectrum(cp: CharPolyFamily, samples: int = 100, tol: float = 1e-9) -> dict:
    """Numeric gyroid bands along the diagonal compared against the closed forms."""
    if cp.k != 4 or cp.n != 3:
        raise ValueError("the closed-form diagonal spectrum is specific to the gyroid family")
    a = np.linspace(0.0, 2 * np.pi, samples, endpoint=False) if samples > 1 else np.zeros(1)
    B = np.repeat(a[:, None], 3, axis=1)
    if cp.hamiltonian is not None:
        numeric = np.linalg.eigvalsh(cp.hamiltonian.matrices(B))
    else:
        numeric = np.array([cp.evaluator.roots(b) for b in B])
    closed = gyroid_diagonal_closed_forms(a)
    err = float(np.max(np.abs(numeric - closed)))
    if err > tol:
        raise ArithmeticError(f"diagonal spectrum deviates from the closed forms by {err:.3g}")
    return {"a": a, "numeric": numeric, "closed_form": closed, "max_error": err}
