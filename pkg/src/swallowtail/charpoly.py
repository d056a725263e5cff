"""Characteristic polynomial P(b, z) = det(z I - H(b)), computed exactly.

Two independent routes are provided: cofactor expansion of the matrix over
the TrigPoly ring (:func:`char_poly`) and the permutation-cycle expansion on
the simple graph (:func:`cycle_expansion`).  Both end in the traceless shift
``z -> z - a_{k-1}/k`` which yields the characteristic map.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .graph_model import HamiltonianFamily, ModelError, QuotientGraph, harper_hamiltonian, simple_laced_no_loops
from .trigpoly import TORUS, CompiledPolys, TrigPoly, DEFAULT_NAMES

MAX_EXACT_K = 8


class ZPoly:
    """Polynomial in ``z`` whose coefficients are TrigPolys; ``coeffs[j]`` multiplies ``z^j``."""

    __slots__ = ("n", "backend", "coeffs")

    def __init__(self, coeffs: Sequence[TrigPoly], n: int, backend: str = TORUS):
        coeffs = list(coeffs)
        while coeffs and coeffs[-1].is_zero():
            coeffs.pop()
        self.n = n
        self.backend = backend
        self.coeffs = tuple(coeffs)

    @classmethod
    def const(cls, p: TrigPoly) -> "ZPoly":
        return cls([p], p.n, p.backend)

    @classmethod
    def z(cls, n: int, backend: str = TORUS) -> "ZPoly":
        return cls([TrigPoly.zero(n, backend), TrigPoly.constant(1, n, backend)], n, backend)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> TrigPoly:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else TrigPoly.zero(self.n, self.backend)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "ZPoly") -> "ZPoly":
        size = max(len(self.coeffs), len(other.coeffs))
        return ZPoly([self.coeff(j) + other.coeff(j) for j in range(size)], self.n, self.backend)

    def __neg__(self) -> "ZPoly":
        return ZPoly([-c for c in self.coeffs], self.n, self.backend)

    def __sub__(self, other: "ZPoly") -> "ZPoly":
        return self + (-other)

    def __mul__(self, other) -> "ZPoly":
        if isinstance(other, TrigPoly):
            other = ZPoly.const(other)
        if not isinstance(other, ZPoly):
            return ZPoly([c * other for c in self.coeffs], self.n, self.backend)
        if self.is_zero() or other.is_zero():
            return ZPoly([], self.n, self.backend)
        out = [TrigPoly.zero(self.n, self.backend)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, p in enumerate(self.coeffs):
            if p.is_zero():
                continue
            for j, q in enumerate(other.coeffs):
                if not q.is_zero():
                    out[i + j] = out[i + j] + p * q
        return ZPoly(out, self.n, self.backend)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, ZPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def dz(self) -> "ZPoly":
        return ZPoly([c * j for j, c in enumerate(self.coeffs)][1:], self.n, self.backend)

    def db(self, axis: int) -> "ZPoly":
        return ZPoly([c.partial_derivative(axis) for c in self.coeffs], self.n, self.backend)

    def compose_shift(self, s: TrigPoly) -> "ZPoly":
        """Return ``Q(z) = self(z - s)`` by Horner's rule."""
        lin = ZPoly([-s, TrigPoly.constant(1, self.n, self.backend)], self.n, self.backend)
        out = ZPoly([], self.n, self.backend)
        for c in reversed(self.coeffs):
            out = out * lin + ZPoly.const(c)
        return out

    def evaluate(self, b, z: float) -> float | complex:
        return sum(c.evaluate(b) * z ** j for j, c in enumerate(self.coeffs))

    def render(self, names: Sequence[str] | None = None) -> str:
        parts = []
        for j in range(self.degree, -1, -1):
            c = self.coeffs[j]
            if c.is_zero():
                continue
            zpow = "" if j == 0 else ("z" if j == 1 else f"z^{j}")
            body = c.render(names)
            if c.is_constant():
                q = c.constant_term()
                if not q.im and zpow:
                    sign = "-" if q.re < 0 else "+"
                    mag = abs(q.re)
                    word = zpow if mag == 1 else f"{_q(mag)}{zpow}"
                    parts.append((sign, word))
                    continue
                if not q.im:
                    parts.append(("-" if q.re < 0 else "+", _q(abs(q.re))))
                    continue
            parts.append(("+", f"({body}){zpow}" if zpow else f"({body})"))
        if not parts:
            return "0"
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, word in parts[1:]:
            out += f" {sign} {word}"
        return out

    def __repr__(self):
        return f"ZPoly({self.render()})"


def _q(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class CharacteristicMap:
    """``b -> (a^_0(b), ..., a^_{k-2}(b))``, the coefficients of the shifted family."""

    components: tuple[TrigPoly, ...]
    n: int
    backend: str = TORUS

    @property
    def dim(self) -> int:
        return len(self.components)

    @cached_property
    def _compiled(self) -> CompiledPolys:
        return CompiledPolys(self.components, self.n, self.backend)

    def __call__(self, B) -> np.ndarray:
        """Values at a point (shape ``(k-1,)``) or a batch of points (``(S, k-1)``)."""
        B = np.asarray(B, dtype=float)
        single = B.ndim == 1
        B2 = np.atleast_2d(B)
        if self.dim == 0:
            out = np.zeros((B2.shape[0], 0))
        else:
            out = self._compiled.real_stack(B2, [()])[:, 0, :]
        return out[0] if single else out

    def value_and_jacobian(self, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batch values ``(S, k-1)`` and Jacobians ``(S, k-1, n)`` in one pass."""
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.dim == 0:
            return np.zeros((B.shape[0], 0)), np.zeros((B.shape[0], 0, self.n))
        vals = self._compiled.real_stack(B, [()] + [(i,) for i in range(self.n)])
        return vals[:, 0, :], np.swapaxes(vals[:, 1:, :], 1, 2)

    def jacobian(self, B) -> np.ndarray:
        """Jacobian ``(k-1, n)`` at a point, or ``(S, k-1, n)`` for a batch."""
        B = np.asarray(B, dtype=float)
        single = B.ndim == 1
        B2 = np.atleast_2d(B)
        if self.dim == 0:
            out = np.zeros((B2.shape[0], 0, self.n))
        else:
            out = np.swapaxes(self._compiled.real_stack(B2, [(i,) for i in range(self.n)]), 1, 2)
        return out[0] if single else out


@dataclass(frozen=True)
class CharPolyFamily:
    """Monic ``P(b, z) = z^k + a_{k-1} z^{k-1} + ... + a_0`` and its traceless shift.

    ``coeffs`` holds ``a_0 .. a_{k-1}``; ``shifted`` holds ``a^_0 .. a^_{k-2}``
    once :func:`traceless_shift` has run, together with the shift
    ``a_{k-1}/k``.
    """

    k: int
    n: int
    coeffs: tuple[TrigPoly, ...]
    backend: str = TORUS
    shifted: tuple[TrigPoly, ...] | None = None
    shift: TrigPoly | None = None
    hamiltonian: HamiltonianFamily | None = None
    name: str = ""
    variables: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.coeffs) != self.k:
            raise ValueError(f"expected {self.k} coefficients, got {len(self.coeffs)}")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[TrigPoly], name: str = "", variables=None) -> "CharPolyFamily":
        c0 = coeffs[0]
        return cls(len(coeffs), c0.n, tuple(coeffs), c0.backend, name=name,
                   variables=tuple(variables) if variables else None)

    @property
    def poly(self) -> ZPoly:
        one = TrigPoly.constant(1, self.n, self.backend)
        return ZPoly(list(self.coeffs) + [one], self.n, self.backend)

    @property
    def shifted_poly(self) -> ZPoly:
        if self.shifted is None:
            raise ValueError("family has not been shifted; call traceless_shift first")
        zero = TrigPoly.zero(self.n, self.backend)
        one = TrigPoly.constant(1, self.n, self.backend)
        tail = [zero, one] if self.k >= 1 else [one]
        return ZPoly(list(self.shifted) + tail, self.n, self.backend)

    @property
    def is_traceless(self) -> bool:
        return self.coeffs[-1].is_zero()

    @cached_property
    def characteristic_map(self) -> CharacteristicMap:
        if self.shifted is None:
            raise ValueError("family has not been shifted; call traceless_shift first")
        return CharacteristicMap(self.shifted, self.n, self.backend)

    @property
    def names(self) -> tuple[str, ...]:
        if self.variables:
            return self.variables
        return DEFAULT_NAMES[: self.n] if self.n <= len(DEFAULT_NAMES) else tuple(f"b{i}" for i in range(self.n))

    @cached_property
    def evaluator(self) -> "PEvaluator":
        return PEvaluator(self)

    def render(self) -> str:
        return self.poly.render(self.names)


def _check_hermitian_input(H: HamiltonianFamily):
    if H.k > MAX_EXACT_K:
        raise ModelError(f"k={H.k} exceeds the exact-expansion limit {MAX_EXACT_K}")


def char_poly(H: HamiltonianFamily) -> CharPolyFamily:
    """Exact ``det(z I - H)`` by memoized cofactor expansion along rows."""
    _check_hermitian_input(H)
    k, n, be = H.k, H.n, H.backend
    z = ZPoly.z(n, be)
    M = [[(z if i == j else ZPoly([], n, be)) - ZPoly.const(H.entries[i][j]) for j in range(k)]
         for i in range(k)]

    @lru_cache(maxsize=None)
    def minor(row: int, cols: frozenset) -> ZPoly:
        if row == k:
            return ZPoly.const(TrigPoly.constant(1, n, be))
        total = ZPoly([], n, be)
        for pos, c in enumerate(sorted(cols)):
            entry = M[row][c]
            if entry.is_zero():
                continue
            term = entry * minor(row + 1, cols - {c})
            total = total + term if pos % 2 == 0 else total - term
        return total

    P = minor(0, frozenset(range(k)))
    return _finish(P, H)


def _finish(P: ZPoly, H: HamiltonianFamily) -> CharPolyFamily:
    k = H.k
    if P.degree != k or P.coeff(k) != 1:
        raise ArithmeticError("characteristic polynomial is not monic of degree k")
    coeffs = tuple(P.coeff(j) for j in range(k))
    for j, c in enumerate(coeffs):
        if not c.is_real_valued():
            raise ArithmeticError(f"coefficient a_{j} is not real-valued; input not Hermitian?")
    fam = CharPolyFamily(k, H.n, coeffs, H.backend, hamiltonian=H, name=H.name, variables=H.variables)
    return traceless_shift(fam)


def _cycles(perm: Sequence[int]) -> list[list[int]]:
    seen = [False] * len(perm)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = perm[i]
        out.append(cyc)
    return out


def cycle_expansion(g: QuotientGraph) -> CharPolyFamily:
    """``P = (-1)^k sum_sigma sign(sigma) prod_j w+(c_j)`` over the cycles of each permutation.

    Cycles of length > 1 carry the product of ``w+`` along their directed
    edges in the simple graph; a fixed point carries ``-z`` plus the loop
    weights at that vertex.
    """
    if g.k > MAX_EXACT_K:
        raise ModelError(f"k={g.k} exceeds the exact-expansion limit {MAX_EXACT_K}")
    k, n = g.k, g.n
    w: dict[tuple[int, int], TrigPoly] = {}
    for e in g.edges:
        fwd = TrigPoly.monomial(e.m)
        bwd = TrigPoly.monomial(tuple(-x for x in e.m))
        for key, val in (((e.source, e.target), fwd), ((e.target, e.source), bwd)):
            w[key] = w[key] + val if key in w else val
    minus_z = ZPoly([TrigPoly.zero(n), TrigPoly.constant(-1, n)], n)

    def cycle_weight(cyc: list[int]) -> ZPoly | None:
        if len(cyc) == 1:
            loop = w.get((cyc[0], cyc[0]))
            return minus_z + ZPoly.const(loop) if loop is not None else minus_z
        out = TrigPoly.constant(1, n)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            if (a, b) not in w:
                return None
            out = out * w[a, b]
        return ZPoly.const(out)

    total = ZPoly([], n)
    for perm in itertools.permutations(range(k)):
        cycles = _cycles(perm)
        weights = []
        for cyc in cycles:
            cw = cycle_weight(cyc)
            if cw is None:
                break
            weights.append(cw)
        else:
            term = ZPoly.const(TrigPoly.constant(1, n))
            for cw in weights:
                term = term * cw
            if (k - len(cycles)) % 2:
                term = -term
            total = total + term
    if k % 2:
        total = -total
    return _finish(total, harper_hamiltonian(g))


def traceless_shift(cp: CharPolyFamily) -> CharPolyFamily:
    """Substitute ``z -> z - a_{k-1}/k`` so the ``z^{k-1}`` term vanishes."""
    s = cp.coeffs[-1] * Fraction(1, cp.k)
    Q = cp.poly.compose_shift(s)
    if not Q.coeff(cp.k - 1).is_zero():
        raise ArithmeticError("shifted family still has a z^(k-1) term")
    shifted = tuple(Q.coeff(j) for j in range(cp.k - 1))
    return replace(cp, shifted=shifted, shift=s)


def edge_count_identity(g: QuotientGraph, cp: CharPolyFamily) -> bool:
    """For simply laced graphs without loops: is ``a^_{k-2}`` the constant ``-|E|``?"""
    no_loops, simply_laced, n_edges = simple_laced_no_loops(g)
    if not (no_loops and simply_laced):
        raise ValueError(f"{g.name}: edge-count identity needs a simply laced graph without loops")
    if cp.k < 2:
        raise ValueError("edge-count identity needs k >= 2")
    return cp.shifted[cp.k - 2] == TrigPoly.constant(-n_edges, cp.n, cp.backend)


@dataclass(frozen=True)
class PDerivatives:
    """Exact first and second partials of P in the coordinates ``(b_1..b_n, z)``."""

    grad: tuple[ZPoly, ...]
    hess: tuple[tuple[ZPoly, ...], ...]

    def evaluate(self, b, z: float) -> tuple[np.ndarray, np.ndarray]:
        g = np.array([p.evaluate(b, z) for p in self.grad], dtype=float)
        h = np.array([[p.evaluate(b, z) for p in row] for row in self.hess], dtype=float)
        return g, h


def gradient_and_hessian_data(cp: CharPolyFamily) -> PDerivatives:
    P = cp.poly

    def d(p: ZPoly, axis: int) -> ZPoly:
        return p.dz() if axis == cp.n else p.db(axis)

    grad = tuple(d(P, i) for i in range(cp.n + 1))
    hess = tuple(tuple(d(grad[i], j) for j in range(cp.n + 1)) for i in range(cp.n + 1))
    return PDerivatives(grad, hess)


def _falling(j: int, r: int) -> int:
    out = 1
    for t in range(r):
        out *= j - t
    return out


class PEvaluator:
    """Vectorized value and derivatives (up to order three) of P at points ``(b, z)``.

    Points are rows of an ``(S, n+1)`` array whose last column is ``z``.
    """

    def __init__(self, cp: CharPolyFamily):
        self.cp = cp
        self.n = cp.n
        self.k = cp.k
        self.compiled = CompiledPolys(list(cp.coeffs), cp.n, cp.backend)

    @lru_cache(maxsize=None)
    def _plan(self, order: int):
        """Alphas in b, z-orders, and the (alpha, r) pair behind every derivative entry."""
        n, m = self.n, self.n + 1
        b_alphas = [()]
        for d in range(1, order + 1):
            b_alphas += list(itertools.combinations_with_replacement(range(n), d))
        where = {a: t for t, a in enumerate(b_alphas)}

        def pair(axes):
            return where[tuple(sorted(a for a in axes if a < n))], sum(1 for a in axes if a == n)

        tuples = [list(itertools.combinations_with_replacement(range(m), d)) for d in range(order + 1)]
        pairs = [np.array([pair(t) for t in ts], dtype=int).reshape(-1, 2) for ts in tuples]
        return b_alphas, tuples, pairs

    def derivatives(self, X, order: int = 2):
        """Return ``[P, grad, hess, (third)]`` up to ``order`` as real arrays."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, k = self.n, self.k
        S, m = X.shape[0], n + 1
        b_alphas, tuples, pairs = self._plan(order)
        C = np.zeros((S, len(b_alphas), k + 1))
        C[:, :, :k] = self.compiled.real_stack(X[:, :n], b_alphas)
        C[:, 0, k] = 1.0
        # W[:, r, j] = d^r/dz^r z^j
        z = X[:, -1]
        powers = z[:, None] ** np.arange(k + 1)
        W = np.zeros((S, order + 1, k + 1))
        for r in range(order + 1):
            for j in range(r, k + 1):
                W[:, r, j] = _falling(j, r) * powers[:, j - r]
        out = []
        for d in range(order + 1):
            ai, ri = pairs[d][:, 0], pairs[d][:, 1]
            vals = np.einsum("spj,spj->sp", C[:, ai, :], W[:, ri, :])
            if d == 0:
                out.append(vals[:, 0])
                continue
            full = np.empty((S,) + (m,) * d)
            for col, t in enumerate(tuples[d]):
                for p in set(itertools.permutations(t)):
                    full[(slice(None),) + p] = vals[:, col]
            out.append(full)
        return out

    def value(self, X) -> np.ndarray:
        return self.derivatives(X, 0)[0]

    def gradient(self, X) -> np.ndarray:
        return self.derivatives(X, 1)[1]

    def hessian(self, X) -> np.ndarray:
        return self.derivatives(X, 2)[2]

    def roots(self, b) -> np.ndarray:
        """Roots of ``P(b, .)``; eigenvalues of ``H(b)`` when the Hamiltonian is known."""
        H = self.cp.hamiltonian
        if H is not None:
            return np.linalg.eigvalsh(H.matrices(np.asarray(b, dtype=float)[None, :])[0])
        a = self.compiled.derivative(np.asarray(b, dtype=float)[None, :])[0].real
        return np.sort(np.roots(np.concatenate([[1.0], a[::-1]])).real)


def model_char_poly(model) -> CharPolyFamily:
    """Characteristic family of a zoo :class:`ModelSpec`."""
    return char_poly(model.hamiltonian)
