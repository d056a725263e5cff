"""Discriminant and strata of the A_{k-1} unfolding ``F = z^k + a_{k-2} z^{k-2} + ... + a_0``."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

EPS = np.finfo(float).eps

# disc from the resultant equals the slice sextic times this constant; pinned
# once against the closed form and asserted in the test suite.
SLICE_NORMALIZATION = 1


def unfolding_coefficients(lam: Sequence, k: int) -> list:
    """Coefficients of ``F`` from highest to lowest power; ``lam = (a_0, ..., a_{k-2})``."""
    if len(lam) != k - 1:
        raise ValueError(f"expected {k - 1} unfolding parameters for k={k}, got {len(lam)}")
    return [1, 0] + list(reversed(list(lam))) if k >= 2 else [1]


def sylvester_matrix(f: Sequence, g: Sequence) -> list[list]:
    """Sylvester matrix of two coefficient lists given from the highest power down."""
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + list(f) + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + list(g) + [0] * (size - n - 1 - i))
    return rows


def _det_exact(M: list[list]) -> Fraction:
    A = [[Fraction(x) for x in row] for row in M]
    size = len(A)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if A[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            A[col], A[pivot] = A[pivot], A[col]
            det = -det
        det *= A[col][col]
        inv = 1 / A[col][col]
        for r in range(col + 1, size):
            factor = A[r][col] * inv
            if factor:
                for c in range(col, size):
                    A[r][c] -= factor * A[col][c]
    return det


def _derivative(f: Sequence) -> list:
    deg = len(f) - 1
    return [c * (deg - i) for i, c in enumerate(f[:-1])]


def discriminant(lam: Sequence, k: int):
    """``disc(F) = (-1)^{k(k-1)/2} Res(F, F')`` for monic ``F``.

    Exact (a Fraction) when every entry of ``lam`` is an int or Fraction,
    otherwise a float from an LU factorization of the Sylvester matrix.
    Nonnegative whenever all roots are real.
    """
    if k < 2:
        raise ValueError("the discriminant needs k >= 2")
    f = unfolding_coefficients(lam, k)
    S = sylvester_matrix(f, _derivative(f))
    sign = -1 if (k * (k - 1) // 2) % 2 else 1
    if all(isinstance(x, Rational) for x in lam):
        return sign * _det_exact(S)
    return sign * float(np.linalg.det(np.array(S, dtype=float)))


def discriminant_batch(L: np.ndarray, k: int) -> np.ndarray:
    """Float discriminant for every row of ``L`` (shape ``(S, k-1)``)."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if k < 2:
        raise ValueError("the discriminant needs k >= 2")
    # small k: the expanded resultant, much cheaper than a batched det
    if k == 2:
        return -4.0 * L[:, 0]
    if k == 3:
        return -4.0 * L[:, 1] ** 3 - 27.0 * L[:, 0] ** 2
    S = L.shape[0]
    f = np.zeros((S, k + 1))
    f[:, 0] = 1.0
    f[:, 2:] = L[:, ::-1]
    df = f[:, :-1] * np.arange(k, 0, -1)
    size = 2 * k - 1
    M = np.zeros((S, size, size))
    for i in range(k - 1):
        M[:, i, i:i + k + 1] = f
    for i in range(k):
        M[:, k - 1 + i, i:i + k] = df
    sign = -1.0 if (k * (k - 1) // 2) % 2 else 1.0
    return sign * np.linalg.det(M)


def root_bound(L: np.ndarray) -> np.ndarray:
    """Fujiwara-type bound ``max_j |a_j|^(1/(k-j))`` on the roots of each row's ``F``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    k = L.shape[1] + 1
    powers = 1.0 / (k - np.arange(k - 1))
    return np.max(np.abs(L) ** powers, axis=1, initial=0.0)


def normalized_discriminant_batch(L: np.ndarray, k: int, disc: np.ndarray | None = None) -> np.ndarray:
    """Signed ``disc`` divided by ``(1 + 2R)^(k(k-1))``, ``R`` a root bound.

    The discriminant is a product of squared root differences, so this ratio
    is bounded by one and comparable across families and scales.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    d = discriminant_batch(L, k) if disc is None else disc
    return d / (1.0 + 2.0 * root_bound(L)) ** (k * (k - 1))


def a3_slice_closed_form(a0, a1):
    """Quartic discriminant restricted to ``a_2 = -6`` (the gyroid slice)."""
    return (20736 * a0 - 4608 * a0 ** 2 + 256 * a0 ** 3 + 864 * a1 ** 2
            - 864 * a0 * a1 ** 2 - 27 * a1 ** 4)


@dataclass(frozen=True)
class Stratum:
    """Degeneracy type ``(A_{n_1}, ..., A_{n_l})``; empty parts means a nonsingular fiber."""

    parts: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(sorted(self.parts, reverse=True)))

    @property
    def is_singular(self) -> bool:
        return bool(self.parts)

    def label(self) -> str:
        if not self.parts:
            return "nonsingular"
        return "(" + ",".join(f"A_{p}" for p in self.parts) + ")"

    def __str__(self):
        return self.label()


@dataclass(frozen=True)
class RootCluster:
    value: float
    multiplicity: int


def _allowed_spread(m: int, base: float, scale: float, from_companion: bool) -> float:
    if not from_companion:
        return base
    # an m-fold root of a float polynomial is only resolved to ~eps^(1/m)
    return max(base, 16.0 * EPS ** (1.0 / m) * scale)


def cluster_roots(roots, tol: float = 1e-6, from_companion: bool = False) -> list[RootCluster]:
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        return []
    scale = 1.0 + float(np.max(np.abs(roots)))
    base = tol * scale
    remaining = list(roots)
    groups = []
    for m in range(len(remaining), 1, -1):
        limit = _allowed_spread(m, base, scale, from_companion)
        while len(remaining) >= m:
            best = None
            for combo in itertools.combinations(range(len(remaining)), m):
                diam = max(abs(remaining[i] - remaining[j]) for i, j in itertools.combinations(combo, 2))
                if diam <= limit and (best is None or diam < best[0]):
                    best = (diam, combo)
            if best is None:
                break
            groups.append([remaining[i] for i in best[1]])
            remaining = [r for i, r in enumerate(remaining) if i not in best[1]]
    groups.extend([r] for r in remaining)
    out = []
    for g in groups:
        c = complex(np.mean(g))
        if abs(c.imag) > _allowed_spread(len(g), base, scale, from_companion):
            raise ValueError(f"complex root {c:.6g}: point lies outside the characteristic region")
        out.append(RootCluster(c.real, len(g)))
    return sorted(out, key=lambda rc: rc.value)


def stratum_of(lam: Sequence, k: int, tol: float = 1e-6, roots=None) -> tuple[Stratum, list[RootCluster]]:
    """Stratum of the fiber over ``lam`` from clustered real roots of ``F``.

    ``roots`` may carry the spectrum of ``H(b)`` (after the traceless shift)
    when it is known; otherwise companion-matrix roots are used.
    """
    if roots is None:
        from_companion = True
        roots = np.roots(np.array(unfolding_coefficients([float(x) for x in lam], k), dtype=float)) \
            if k >= 2 else np.zeros(1)
    else:
        from_companion = False
    clusters = cluster_roots(roots, tol, from_companion)
    return Stratum(tuple(c.multiplicity - 1 for c in clusters if c.multiplicity >= 2)), clusters


def grothendieck_valid(s: Stratum, k: int) -> bool:
    """A fiber of the k-level unfolding carries ``sum n_i <= k - l``."""
    return sum(s.parts) <= k - len(s.parts) and all(p <= k - 1 for p in s.parts)
