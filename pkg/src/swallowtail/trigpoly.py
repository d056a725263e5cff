"""Exact sparse trigonometric Laurent polynomials on the torus T^n.

A :class:`TrigPoly` is a finite sum ``sum_m c_m exp(i m.b)`` with integer
frequency vectors ``m`` and Gaussian-rational coefficients ``c_m``.  The same
class doubles as an ordinary polynomial ring on R^n (``backend="affine"``),
where a frequency vector is read as a monomial exponent ``b^m``.

Arithmetic is exact; floating point only enters at evaluation time.
"""
from __future__ import annotations

from fractions import Fraction
from math import prod
from typing import Iterable, Mapping, Sequence

import numpy as np

TORUS = "torus"
AFFINE = "affine"
BACKENDS = (TORUS, AFFINE)

DEFAULT_NAMES = ("a", "b", "c", "d", "e", "f", "g", "h")


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(Fraction(x))

    def __add__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


Coeff = GaussianRational
Freq = tuple


class TrigPoly:
    """Immutable sparse Laurent polynomial in ``n`` torus variables.

    ``terms`` maps integer frequency tuples to coefficients; zero
    coefficients are dropped and terms are kept in lexicographic order so
    that equality is structural.
    """

    __slots__ = ("n", "backend", "_terms", "_hash")

    def __init__(self, terms: Mapping[Sequence[int], object] | Iterable = (), n: int | None = None,
                 backend: str = TORUS):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple, GaussianRational] = {}
        for m, c in items:
            m = tuple(int(x) for x in m)
            if n is None:
                n = len(m)
            if len(m) != n:
                raise ValueError(f"frequency {m} does not have length {n}")
            if backend == AFFINE and min(m, default=0) < 0:
                raise ValueError(f"affine exponent {m} has a negative entry")
            acc[m] = acc.get(m, GaussianRational()) + GaussianRational.coerce(c)
        if n is None:
            raise ValueError("cannot infer the base dimension of an empty TrigPoly")
        self.n = n
        self.backend = backend
        self._terms = tuple(sorted((m, c) for m, c in acc.items() if c))
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, n: int, backend: str = TORUS) -> "TrigPoly":
        return cls({}, n, backend)

    @classmethod
    def constant(cls, c, n: int, backend: str = TORUS) -> "TrigPoly":
        return cls({(0,) * n: c}, n, backend)

    @classmethod
    def monomial(cls, m: Sequence[int], c=1, backend: str = TORUS) -> "TrigPoly":
        return cls({tuple(m): c}, len(m), backend)

    @classmethod
    def variable(cls, axis: int, n: int) -> "TrigPoly":
        """The coordinate function ``b_axis`` of the affine backend."""
        m = [0] * n
        m[axis] = 1
        return cls({tuple(m): 1}, n, AFFINE)

    # -- access -------------------------------------------------------
    @property
    def terms(self) -> dict[tuple, GaussianRational]:
        return dict(self._terms)

    def items(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(m) for m, _ in self._terms)

    def constant_term(self) -> GaussianRational:
        return dict(self._terms).get((0,) * self.n, GaussianRational())

    def _like(self, terms) -> "TrigPoly":
        return TrigPoly(terms, self.n, self.backend)

    def _check(self, other: "TrigPoly"):
        if self.n != other.n or self.backend != other.backend:
            raise ValueError(
                f"mismatched TrigPoly operands: n={self.n}/{other.n}, "
                f"backend={self.backend}/{other.backend}")

    def _lift(self, other) -> "TrigPoly":
        if isinstance(other, TrigPoly):
            self._check(other)
            return other
        return TrigPoly.constant(other, self.n, self.backend)

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = self._lift(other)
        acc = dict(self._terms)
        for m, c in other._terms:
            acc[m] = acc[m] + c if m in acc else c
        return self._like(acc)

    __radd__ = __add__

    def __neg__(self):
        return self._like((m, -c) for m, c in self._terms)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            c0 = GaussianRational.coerce(other)
            return self._like((m, c * c0) for m, c in self._terms)
        self._check(other)
        acc: dict[tuple, GaussianRational] = {}
        for m1, c1 in self._terms:
            for m2, c2 in other._terms:
                m = tuple(x + y for x, y in zip(m1, m2))
                c = c1 * c2
                acc[m] = acc[m] + c if m in acc else c
        return self._like(acc)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not supported")
        out = TrigPoly.constant(1, self.n, self.backend)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, TrigPoly):
            return (self.n, self.backend, self._terms) == (other.n, other.backend, other._terms)
        try:
            return self == TrigPoly.constant(other, self.n, self.backend)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.backend, self._terms))
        return self._hash

    # -- analysis -----------------------------------------------------
    def conjugate(self) -> "TrigPoly":
        """Pointwise complex conjugate for real ``b``."""
        if self.backend == TORUS:
            return self._like((tuple(-x for x in m), c.conjugate()) for m, c in self._terms)
        return self._like((m, c.conjugate()) for m, c in self._terms)

    def is_real_valued(self) -> bool:
        return self == self.conjugate()

    def partial_derivative(self, axis: int) -> "TrigPoly":
        if not 0 <= axis < self.n:
            raise IndexError(f"axis {axis} out of range for n={self.n}")
        if self.backend == TORUS:
            return self._like((m, c * GaussianRational(0, m[axis])) for m, c in self._terms)
        out = []
        for m, c in self._terms:
            if m[axis]:
                dm = list(m)
                dm[axis] -= 1
                out.append((tuple(dm), c * m[axis]))
        return self._like(out)

    def evaluate(self, b) -> complex | float:
        """Evaluate at a real point ``b``.

        Real-valued polynomials return a float; the discarded imaginary part
        is checked against ``1e-12 * (1 + |Re|)``.
        """
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise ValueError(f"expected a point of length {self.n}, got shape {b.shape}")
        if not self._terms:
            return 0.0 if self.is_real_valued() else 0j
        freqs, coeffs = self.arrays()
        if self.backend == TORUS:
            val = complex(np.sum(coeffs * np.exp(1j * (freqs @ b))))
        else:
            val = complex(np.sum(coeffs * np.prod(b[None, :] ** freqs, axis=1)))
        if self.is_real_valued():
            assert abs(val.imag) <= 1e-12 * (1 + abs(val.real)), "reality invariant broken"
            return val.real
        return val

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies as an int array ``(T, n)`` and coefficients as complex ``(T,)``."""
        freqs = np.array([m for m, _ in self._terms], dtype=np.int64).reshape(len(self._terms), self.n)
        coeffs = np.array([complex(c) for _, c in self._terms], dtype=complex)
        return freqs, coeffs

    # -- rendering ----------------------------------------------------
    def render(self, names: Sequence[str] | None = None) -> str:
        names = tuple(names) if names else DEFAULT_NAMES[: self.n]
        if self.n > len(names):
            names = tuple(f"b{i}" for i in range(self.n))
        if not self._terms:
            return "0"
        if self.backend == AFFINE:
            parts = [(_coef_word(c, bool(any(m))), _monomial(m, names)) for m, c in self._terms]
            parts.sort(key=lambda p: (p[1] != "", p[1]))
            return _join(parts)
        if self.is_real_valued():
            return _join(_cosine_parts(self._terms, names))
        return _join([(_coef_word(c, bool(any(m))), _exp_word(m, names)) for m, c in self._terms])

    def __repr__(self):
        return f"TrigPoly({self.render()!s}, n={self.n}, backend={self.backend})"

    __str__ = render

    # -- serialization ------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "backend": self.backend,
            "terms": [
                {"m": list(m), "re": [c.re.numerator, c.re.denominator],
                 "im": [c.im.numerator, c.im.denominator]}
                for m, c in self._terms
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrigPoly":
        terms = [
            (t["m"], GaussianRational(Fraction(*t["re"]), Fraction(*t.get("im", (0, 1)))))
            for t in data["terms"]
        ]
        return cls(terms, int(data["n"]), data.get("backend", TORUS))


# -- rendering helpers ----------------------------------------------------

def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _linear_form(m, names) -> str:
    out = ""
    for x, name in zip(m, names):
        if not x:
            continue
        sign = "-" if x < 0 else ("+" if out else "")
        mag = "" if abs(x) == 1 else str(abs(x))
        out += f"{sign}{mag}{name}"
    return out


def _monomial(m, names) -> str:
    return "*".join(name if e == 1 else f"{name}^{e}" for e, name in zip(m, names) if e)


def _exp_word(m, names) -> str:
    return f"e^(i({_linear_form(m, names)}))" if any(m) else ""


def _coef_word(c: GaussianRational, has_body: bool) -> tuple[int, str]:
    """Return (sign, magnitude text) for a coefficient in front of a body."""
    if c.im:
        return 1, f"({c!r})"
    q = c.re
    sign = -1 if q < 0 else 1
    mag = abs(q)
    if has_body and mag == 1:
        return sign, ""
    return sign, _frac_str(mag)


def _cosine_parts(terms, names):
    parts = []
    for m, c in sorted(terms, key=lambda t: (sum(map(abs, t[0])), tuple(-x for x in t[0]))):
        if not any(m):
            parts.append((_coef_word(GaussianRational(c.re), False), ""))
            continue
        first = next(x for x in m if x)
        if first < 0:
            continue  # rendered with its partner -m
        arg = _linear_form(m, names)
        if c.re:
            parts.append((_coef_word(GaussianRational(2 * c.re), True), f"cos({arg})"))
        if c.im:
            parts.append((_coef_word(GaussianRational(-2 * c.im), True), f"sin({arg})"))
    return parts


def _join(parts) -> str:
    out = ""
    for (sign, mag), body in parts:
        word = mag + body if mag and body else (mag or body)
        if not out:
            out = ("-" if sign < 0 else "") + word
        else:
            out += (" - " if sign < 0 else " + ") + word
    return out


# -- numeric compilation --------------------------------------------------

def _falling(m: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(m, dtype=float)
    for j in range(k):
        out = out * (m - j)
    return out


class CompiledPolys:
    """Vectorized evaluator for a stack of TrigPolys sharing one frequency set.

    ``derivative(X, alpha)`` returns the mixed partial ``d^alpha`` of every
    polynomial at every row of ``X`` as a complex array ``(S, J)``.
    """

    def __init__(self, polys: Sequence[TrigPoly], n: int, backend: str = TORUS):
        for p in polys:
            if p.n != n or p.backend != backend:
                raise ValueError("CompiledPolys needs polynomials of one dimension and backend")
        self.n = n
        self.backend = backend
        index: dict[tuple, int] = {}
        for p in polys:
            for m, _ in p.items():
                index.setdefault(m, len(index))
        self.freqs = np.array(list(index), dtype=np.int64).reshape(len(index), n)
        self.coeffs = np.zeros((len(polys), len(index)), dtype=complex)
        for j, p in enumerate(polys):
            for m, c in p.items():
                self.coeffs[j, index[m]] = complex(c)
        self.real = all(p.is_real_valued() for p in polys) if backend == TORUS else \
            all(not c.im for p in polys for _, c in p.items())

    def derivatives(self, X, alphas: Sequence[Sequence[int]]) -> list[np.ndarray]:
        """Mixed partials ``d^alpha`` of every polynomial at every row of ``X``.

        Each alpha is a sequence of axis indices (``()`` is the value, ``(0, 0)``
        the second derivative along axis 0).  Returns one complex ``(S, J)``
        array per alpha.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S, J = X.shape[0], self.coeffs.shape[0]
        if self.freqs.shape[0] == 0:
            return [np.zeros((S, J), dtype=complex) for _ in alphas]
        if self.backend == TORUS:
            phase = np.exp(1j * (X @ self.freqs.T))
        out = []
        for alpha in alphas:
            order = np.bincount(np.asarray(alpha, dtype=int), minlength=self.n)
            if self.backend == TORUS:
                basis = phase * np.prod((1j * self.freqs) ** order, axis=1)
            else:
                factor = np.ones(self.freqs.shape[0])
                for ax in range(self.n):
                    factor = factor * _falling(self.freqs[:, ax], order[ax])
                expo = np.maximum(self.freqs - order, 0)
                basis = np.prod(X[:, None, :] ** expo[None, :, :], axis=2) * factor
            out.append(basis @ self.coeffs.T)
        return out

    def derivative(self, X, alpha: Sequence[int] = ()) -> np.ndarray:
        return self.derivatives(X, [alpha])[0]

    def real_stack(self, X, alphas: Sequence[Sequence[int]]) -> np.ndarray:
        """Real parts of all requested partials as one ``(S, len(alphas), J)`` array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S, J, A = X.shape[0], self.coeffs.shape[0], len(alphas)
        if self.backend != TORUS or self.freqs.shape[0] == 0:
            return np.stack([v.real for v in self.derivatives(X, alphas)], axis=1) if A else np.zeros((S, 0, J))
        key = tuple(tuple(a) for a in alphas)
        cache = self.__dict__.setdefault("_stack_cache", {})
        if key not in cache:
            mult = np.stack([np.prod((1j * self.freqs) ** np.bincount(np.asarray(a, dtype=int), minlength=self.n),
                                     axis=1) for a in key])  # (A, T)
            Q = mult[:, :, None] * self.coeffs.T[None]  # (A, T, J)
            Q = np.ascontiguousarray(np.transpose(Q, (1, 0, 2)).reshape(len(self.freqs), A * J))
            cache[key] = (np.ascontiguousarray(Q.real), np.ascontiguousarray(Q.imag))
        Qr, Qi = cache[key]
        theta = X @ self.freqs.T
        out = np.cos(theta) @ Qr - np.sin(theta) @ Qi
        return out.reshape(S, A, J)

    def values(self, X) -> np.ndarray:
        out = self.derivative(X)
        return out.real if self.real else out


def degree_bound(p: TrigPoly) -> int:
    """Largest ``|m|_1`` among the terms; used to size finite-difference checks."""
    return max((sum(abs(x) for x in m) for m, _ in p.items()), default=0)


def evaluate_many(polys: Sequence[TrigPoly], b) -> np.ndarray:
    """Evaluate several polynomials of one family at a single point."""
    if not polys:
        return np.zeros(0)
    comp = CompiledPolys(polys, polys[0].n, polys[0].backend)
    vals = comp.derivative(np.asarray(b, dtype=float)[None, :])[0]
    return vals.real if comp.real else vals


def product(polys: Iterable[TrigPoly], n: int, backend: str = TORUS) -> TrigPoly:
    return prod(polys, start=TrigPoly.constant(1, n, backend))
