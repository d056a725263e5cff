"""Critical points of P with critical value zero: the singular locus of the spectrum.

The square system ``grad P = 0`` in ``(b, z)`` is solved by damped Newton from
a uniform grid of base seeds, each paired with the ``k`` roots of
``P(b_seed, .)`` as energy seeds.  Converged points are kept when ``|P|`` is
small and are then deduplicated on the torus.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .charpoly import CharacteristicMap, CharPolyFamily
from .classifier import DEGENERATE, DIRAC, classify, jacobi_eigh, signatures_from_eigenvalues, tilt_free
from .parallel import map_chunks, worker_count
from .singularity import Stratum, normalized_discriminant_batch
from .trigpoly import TORUS

TWO_PI = 2.0 * np.pi


@dataclass
class FinderOptions:
    grid: int = 8
    grad_tol: float = 1e-8
    val_tol: float = 1e-8
    dedup_radius: float = 1e-4
    max_iter: int = 100
    max_halvings: int = 30
    box: float = 2.0  # affine bases are seeded on [-box, box]^n
    root_tol: float = 1e-6
    null_rel_tol: float = 1e-6
    tilt_tol: float = 1e-8
    probe_radius: float = 0.05
    fiber_tol: float = 1e-9
    threads: int | None = None
    chunk: int = 4096
    seed: int = 0

    def worker_count(self) -> int:
        return worker_count(self.threads)


@dataclass(eq=False)
class CriticalPoint:
    b: np.ndarray
    z: float
    residual_grad: float
    residual_val: float
    hessian: np.ndarray
    signature: tuple[int, int, int]
    tilt_free: bool
    classification: str = DEGENERATE
    stratum: Stratum = field(default_factory=Stratum)
    locus_dim_estimate: int = 0
    hessian_nullity: int = 0
    pca_dim: int | None = None
    component: int = -1

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.b, [self.z]])

    def to_dict(self) -> dict:
        return {
            "b": [float(v) for v in self.b],
            "z": float(self.z),
            "residual_grad": float(self.residual_grad),
            "residual_val": float(self.residual_val),
            "hessian": [[float(v) for v in row] for row in self.hessian],
            "signature": list(self.signature),
            "tilt_free": bool(self.tilt_free),
            "classification": self.classification,
            "stratum": self.stratum.label(),
            "stratum_parts": list(self.stratum.parts),
            "locus_dim_estimate": int(self.locus_dim_estimate),
            "hessian_nullity": int(self.hessian_nullity),
            "pca_dim": None if self.pca_dim is None else int(self.pca_dim),
            "component": int(self.component),
        }


@dataclass
class LocusComponent:
    members: list[int]
    dimension: int
    representative: int

    def to_dict(self) -> dict:
        return {"members": list(self.members), "dimension": int(self.dimension),
                "representative": int(self.representative), "size": len(self.members)}


@dataclass
class SingularLocus:
    points: list[CriticalPoint]
    components: list[LocusComponent]
    diagnostics: dict
    torus: bool = True

    @property
    def is_empty(self) -> bool:
        return not self.points

    @property
    def isolated_points(self) -> list[CriticalPoint]:
        return [p for p in self.points
                if p.locus_dim_estimate == 0 and (p.component < 0 or self.components[p.component].dimension == 0)]

    @property
    def dirac_points(self) -> list[CriticalPoint]:
        return [p for p in self.points if p.classification == DIRAC]

    def base_points(self, radius: float = 1e-6) -> list[np.ndarray]:
        """Distinct base locations of the isolated points."""
        out: list[np.ndarray] = []
        for p in self.isolated_points:
            if not any(base_distance(p.b, q, self.torus) <= radius for q in out):
                out.append(p.b)
        return out

    @property
    def dimension(self) -> int:
        return max((c.dimension for c in self.components), default=-1)

    def summary(self) -> dict:
        strata: dict[str, int] = {}
        classes: dict[str, int] = {}
        for p in self.points:
            strata[p.stratum.label()] = strata.get(p.stratum.label(), 0) + 1
            classes[p.classification] = classes.get(p.classification, 0) + 1
        return {
            "points": len(self.points),
            "isolated_points": len(self.isolated_points),
            "base_points": len(self.base_points()),
            "dirac_points": len(self.dirac_points),
            "dirac_base_points": len({tuple(np.round(p.b, 6)) for p in self.dirac_points}),
            "tilt_free_dirac_points": sum(1 for p in self.dirac_points if p.tilt_free),
            "components": len(self.components),
            "locus_dimension": self.dimension,
            "by_stratum": strata,
            "by_classification": classes,
        }


# -- metrics --------------------------------------------------------------

def circle_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def base_distance(b1, b2, torus: bool = True) -> float:
    if torus:
        return float(np.max(circle_distance(b1, b2), initial=0.0))
    return float(np.max(np.abs(np.asarray(b1) - np.asarray(b2)), initial=0.0))


def _point_distances(X: np.ndarray, x: np.ndarray, torus: bool) -> np.ndarray:
    db = circle_distance(X[:, :-1], x[:-1]) if torus else np.abs(X[:, :-1] - x[:-1])
    dz = np.abs(X[:, -1] - x[-1])
    return np.maximum(np.max(db, axis=1, initial=0.0), dz)


def canonicalize(b: np.ndarray) -> np.ndarray:
    b = np.mod(b, TWO_PI)
    return np.where(TWO_PI - b < 1e-12, 0.0, b)


# -- seeding and Newton ---------------------------------------------------

def base_grid(n: int, grid: int, torus: bool, box: float = 2.0) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0))
    if torus:
        axis = np.arange(grid) * (TWO_PI / grid)
    else:
        axis = np.linspace(-box, box, grid)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def seeds_for(cp: CharPolyFamily, grid: int, torus: bool, box: float) -> np.ndarray:
    B = base_grid(cp.n, grid, torus, box)
    if cp.hamiltonian is not None:
        Z = np.linalg.eigvalsh(cp.hamiltonian.matrices(B))
    else:
        Z = np.array([cp.evaluator.roots(b) for b in B]).reshape(B.shape[0], cp.k)
    return np.concatenate([np.repeat(B, cp.k, axis=0), Z.reshape(-1, 1)], axis=1)


def _pinv_step(J: np.ndarray, r: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    if J.shape[1] == J.shape[2] and np.array_equal(J, np.swapaxes(J, 1, 2)):
        # symmetric Jacobians (Hessians of P): eigh is about twice as fast as SVD
        mu, V = np.linalg.eigh(J)
        cut = rcond * np.max(np.abs(mu), axis=1, keepdims=True)
        inv = np.divide(1.0, mu, out=np.zeros_like(mu), where=np.abs(mu) > cut)
        return -np.einsum("sij,sj->si", V, inv * np.einsum("sji,sj->si", V, r))
    return -np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=rcond), r)


def damped_newton(fun, X0: np.ndarray, max_iter: int = 100, max_halvings: int = 30,
                  stop_tol: float = 1e-14, rcond: float = 1e-12,
                  lookahead: int = 6) -> tuple[np.ndarray, np.ndarray, dict]:
    """Batched damped (Gauss-)Newton on ``r(x) = 0`` with backtracking on ``||r||_inf``.

    ``fun(X, jac, rows)`` returns ``(r, J)`` for the batch rows ``rows`` of
    ``X0`` (``J`` may be None when ``jac`` is false).  Steps are
    minimum-norm least-squares steps, so square systems with a singular
    Jacobian and underdetermined systems are both handled.  The line search
    tries ``lookahead`` successive halvings per call and keeps the longest
    step that decreases the residual.
    """
    X = np.array(X0, dtype=float, copy=True)
    S = X.shape[0]
    r, J = fun(X, True, np.arange(S))
    norm = np.max(np.abs(r), axis=1, initial=0.0)
    active = norm > stop_tol
    stats = {"iterations": 0, "stalled": 0}
    for it in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        stats["iterations"] = it + 1
        step = _pinv_step(J[idx], r[idx], rcond)
        pending = np.ones(idx.size, dtype=bool)
        tried = 0
        while tried <= max_halvings:
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            # first call tries the full step alone; most seeds accept it
            c = 1 if tried == 0 else min(lookahead, max_halvings + 1 - tried)
            t = 0.5 ** (tried + np.arange(c))
            trial = (X[idx[sub]][:, None, :] + t[None, :, None] * step[sub][:, None, :]).reshape(-1, X.shape[1])
            r_t, _ = fun(trial, False, np.repeat(idx[sub], c))
            r_t = r_t.reshape(sub.size, c, -1)
            n_t = np.max(np.abs(r_t), axis=2, initial=0.0)
            good = n_t < norm[idx[sub]][:, None]
            ok = np.any(good, axis=1)
            first = np.argmax(good, axis=1)[ok]
            acc = sub[ok]
            rows = np.flatnonzero(ok)
            X[idx[acc]] = trial.reshape(sub.size, c, -1)[rows, first]
            r[idx[acc]] = r_t[rows, first]
            norm[idx[acc]] = n_t[rows, first]
            pending[acc] = False
            tried += c
        moved = idx[~pending]
        if moved.size:
            J[moved] = fun(X[moved], True, moved)[1]
        # a failed line search or a negligible step freezes the seed
        stalled = idx[pending]
        stats["stalled"] += int(stalled.size)
        active[stalled] = False
        tiny = np.max(np.abs(step), axis=1) <= 1e-15 * (1.0 + np.max(np.abs(X[idx]), axis=1))
        active[idx[tiny]] = False
        active &= norm > stop_tol
    return X, norm, stats


def _gradient_system(cp: CharPolyFamily):
    ev = cp.evaluator

    def fun(X, jac=True, rows=None):
        if not jac:
            return ev.derivatives(X, 1)[1], None
        _, g, H = ev.derivatives(X, 2)
        return g, H

    return fun


def _run_chunks(fun, X0: np.ndarray, opts: FinderOptions, rcond: float = 1e-12):
    chunks = [X0[i:i + opts.chunk] for i in range(0, X0.shape[0], opts.chunk)] or [X0]

    def work(chunk):
        return damped_newton(fun, chunk, opts.max_iter, opts.max_halvings, rcond=rcond)

    results = map_chunks(work, chunks, opts.threads)
    X = np.concatenate([r[0] for r in results]) if results else X0
    norm = np.concatenate([r[1] for r in results]) if results else np.zeros(0)
    stalled = sum(r[2]["stalled"] for r in results)
    return X, norm, stalled


def _is_torus(cp: CharPolyFamily) -> bool:
    return cp.backend == TORUS


def _kdtree(X: np.ndarray, torus: bool) -> cKDTree:
    """Max-norm tree; base coordinates are periodic on the torus."""
    Y = np.array(X, dtype=float, copy=True)
    n = Y.shape[1] - 1
    free = np.arange(Y.shape[1]) >= (n if torus else 0)
    lo = Y.min(axis=0, initial=np.inf) if Y.shape[0] else np.zeros(Y.shape[1])
    span = np.ptp(Y, axis=0) if Y.shape[0] else np.zeros(Y.shape[1])
    Y[:, free] -= lo[free]
    box = np.where(free, 2.0 * span + 1.0, TWO_PI)
    if torus:
        Y[:, :n] = canonicalize(Y[:, :n])
    return cKDTree(Y, boxsize=box)


def dedup(X: np.ndarray, score: np.ndarray, radius: float, torus: bool) -> np.ndarray:
    """Indices of representatives, best score first, at pairwise distance > radius."""
    if X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    tree = _kdtree(X, torus)
    removed = np.zeros(X.shape[0], dtype=bool)
    keep: list[int] = []
    for i in np.argsort(score, kind="stable"):
        if removed[i]:
            continue
        keep.append(int(i))
        removed[tree.query_ball_point(tree.data[i], radius, p=np.inf)] = True
    return np.array(keep, dtype=int)


def _polish_degenerate(cp: CharPolyFamily, x: np.ndarray, opts: FinderOptions, torus: bool) -> np.ndarray:
    """Refine a critical point whose Hessian is singular.

    Newton on ``grad P`` converges only linearly there; adding ``Hess P . K``
    (``K`` the numerical kernel) to the system restores a regular root when
    the point is isolated.  The refinement is kept only when it lowers the
    augmented residual without moving far.
    """
    ev = cp.evaluator

    def residual(x, K):
        _, g, H, T = ev.derivatives(x[None, :], 3)
        r = np.concatenate([g[0], (H[0] @ K).T.ravel()])  # column by column, as in Jr
        Jr = np.vstack([H[0]] + [np.einsum("ijl,j->il", T[0], K[:, c]) for c in range(K.shape[1])])
        return r, Jr

    H = ev.hessian(x[None, :])[0]
    mu, V = np.linalg.eigh(H)
    K = V[:, np.abs(mu) <= 1e-3 * max(1.0, float(np.max(np.abs(mu))))]
    if K.shape[1] == 0:
        return x
    cur = x.copy()
    r, Jr = residual(cur, K)
    best = float(np.max(np.abs(r)))
    for _ in range(30):
        step = -np.linalg.lstsq(Jr, r, rcond=None)[0]
        cand = cur + step
        r_c, J_c = residual(cand, K)
        n_c = float(np.max(np.abs(r_c)))
        if not n_c < best:
            break
        cur, r, Jr, best = cand, r_c, J_c, n_c
    if np.max(np.abs(cur - x)) > 10 * opts.dedup_radius:
        return x
    g_new = np.max(np.abs(ev.gradient(cur[None, :])[0]))
    g_old = np.max(np.abs(ev.gradient(x[None, :])[0]))
    return cur if g_new <= max(g_old, 1e-15) else x


def find_critical_points(cp: CharPolyFamily, opts: FinderOptions | None = None) -> SingularLocus:
    """All solutions of ``grad P = 0`` with ``P = 0``, classified and grouped."""
    opts = opts or FinderOptions()
    torus = _is_torus(cp)
    m = cp.n + 1
    X0 = seeds_for(cp, opts.grid, torus, opts.box)
    _, _, H0 = cp.evaluator.derivatives(X0, 2)
    sv = np.linalg.svd(H0, compute_uv=False)
    singular_seeds = int(np.sum(sv[:, -1] <= 1e-12 * np.maximum(sv[:, 0], 1e-300)))
    X, gnorm, stalled = _run_chunks(_gradient_system(cp), X0, opts)
    converged = gnorm <= opts.grad_tol
    pvals = np.abs(cp.evaluator.value(X))
    keep = converged & (pvals <= opts.val_tol)
    Xk = X[keep]
    if torus:
        Xk[:, :-1] = canonicalize(Xk[:, :-1])
    reps = dedup(Xk, gnorm[keep] + pvals[keep], opts.dedup_radius, torus)
    Xr = Xk[reps] if reps.size else np.zeros((0, m))
    # near a highly degenerate point grad P and P are tiny while the roots
    # are still split; such points are not on the locus
    multiple = _on_multiple_root(cp, Xr, opts.root_tol)
    Xr = Xr[multiple]
    diagnostics = {
        "seeds": int(X0.shape[0]),
        "base_seeds": int(X0.shape[0] // max(cp.k, 1)),
        "singular_jacobian_seeds": singular_seeds,
        "stalled_line_searches": int(stalled),
        "converged": int(np.sum(converged)),
        "critical_value_zero": int(np.sum(keep)),
        "filtered_nonzero_value": int(np.sum(converged & ~keep)),
        "filtered_simple_root": int(np.sum(~multiple)),
        "deduplicated": int(Xr.shape[0]),
        "grid": opts.grid,
        "grad_tol": opts.grad_tol,
        "val_tol": opts.val_tol,
        "dedup_radius": opts.dedup_radius,
    }
    nullity = _nullities(cp, Xr, opts.null_rel_tol)
    dims, pca = _dimensions(cp, Xr, nullity, opts, torus)
    # Newton converges only linearly onto isolated degenerate points; a
    # Hessian that is small everywhere has no relative nullity but still
    # needs polishing
    for i in np.flatnonzero(dims == 0):
        Xr[i] = _polish_degenerate(cp, Xr[i], opts, torus)
    if torus:
        Xr[:, :-1] = canonicalize(Xr[:, :-1])
    points = _build_points(cp, Xr, opts)
    for p, d, q in zip(points, dims, pca):
        p.locus_dim_estimate = int(d)
        p.pca_dim = None if q < 0 else int(q)
    # polishing may move two representatives onto one point
    if points:
        score = np.array([p.residual_grad + p.residual_val for p in points])
        sel = dedup(Xr, score, opts.dedup_radius, torus)
        points = [points[i] for i in sorted(sel)]
    points = [p for p in points if p.residual_grad <= opts.grad_tol and p.residual_val <= opts.val_tol]
    points.sort(key=lambda p: (tuple(np.round(p.b, 9)), p.z))
    components = _group_components(points, opts, torus)
    diagnostics["reported"] = len(points)
    return SingularLocus(points, components, diagnostics, torus)


def _on_multiple_root(cp: CharPolyFamily, X: np.ndarray, tol: float) -> np.ndarray:
    """True where ``z`` lies on a root of multiplicity >= 2 of ``P(b, .)``."""
    if X.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if cp.hamiltonian is not None:
        R = np.linalg.eigvalsh(cp.hamiltonian.matrices(X[:, :-1]))
    else:
        R = np.array([cp.evaluator.roots(x[:-1]) for x in X]).reshape(X.shape[0], cp.k)
    R = np.sort(R, axis=1)
    lim = (tol * (1.0 + np.max(np.abs(R), axis=1)))[:, None]
    # an adjacent pair of roots merged into one cluster that contains z
    pair = (np.diff(R, axis=1) <= lim) & (np.abs(0.5 * (R[:, 1:] + R[:, :-1]) - X[:, -1:]) <= lim)
    return np.any(pair, axis=1)


def _nullities(cp: CharPolyFamily, X: np.ndarray, rel_tol: float) -> np.ndarray:
    if X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    mu = np.linalg.eigvalsh(cp.evaluator.hessian(X))
    cut = np.maximum(rel_tol * np.max(np.abs(mu), axis=1), 1e-10)
    return np.sum(np.abs(mu) <= cut[:, None], axis=1)


def _build_points(cp: CharPolyFamily, X: np.ndarray, opts: FinderOptions) -> list[CriticalPoint]:
    if X.shape[0] == 0:
        return []
    P, g, H = cp.evaluator.derivatives(X, 2)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    evals, _ = jacobi_eigh(H)
    sigs = signatures_from_eigenvalues(evals)
    cut = np.maximum(opts.null_rel_tol * np.max(np.abs(evals), axis=1), 1e-10)
    nullity = np.sum(np.abs(evals) <= cut[:, None], axis=1)
    points = []
    for i, x in enumerate(X):
        point = CriticalPoint(
            b=x[:-1].copy(), z=float(x[-1]),
            residual_grad=float(np.max(np.abs(g[i]))), residual_val=float(abs(P[i])),
            hessian=H[i], signature=tuple(int(v) for v in sigs[i]),
            tilt_free=tilt_free(H[i], opts.tilt_tol), hessian_nullity=int(nullity[i]),
        )
        point.classification, point.stratum = classify(point, cp, opts.tilt_tol, opts.root_tol)
        points.append(point)
    return points


def _pca_dimension(disp: np.ndarray, radius: float) -> int:
    if disp.shape[0] == 0:
        return 0
    s = np.linalg.svd(disp / np.sqrt(disp.shape[0]), compute_uv=False)
    return int(np.sum(s > 0.25 * radius))


def _kernel(H: np.ndarray, rel_tol: float) -> np.ndarray:
    mu, V = np.linalg.eigh(H)
    cut = max(rel_tol * float(np.max(np.abs(mu), initial=0.0)), 1e-10)
    return V[:, np.abs(mu) <= cut]


def _probe(cp: CharPolyFamily, centers: np.ndarray, opts: FinderOptions, torus: bool) -> list[int]:
    """Local dimension of the critical set at each center by slice continuation.

    For every kernel direction ``v`` of the Hessian, ``grad P = 0`` is solved
    by Gauss-Newton on the hyperplanes ``v.(x - c) = +-rho``.  Solutions exist
    only along directions in which the locus continues; the principal
    components of their displacements, capped by the Hessian nullity at the
    solutions themselves, give the dimension.
    """
    m = cp.n + 1
    rho = opts.probe_radius
    ev = cp.evaluator
    bases, frames, owner = [], [], []
    Hs = ev.hessian(centers)
    rng = np.random.default_rng(opts.seed)
    for ci, c in enumerate(centers):
        K = _kernel(Hs[ci], opts.null_rel_tol)
        for v in K.T:
            # orthonormal frame of the hyperplane normal to v
            W = np.linalg.svd(np.eye(m) - np.outer(v, v))[0][:, :m - 1]
            u = rng.normal(size=m - 1)
            u *= 0.25 * rho / np.linalg.norm(u)
            for sgn in (1.0, -1.0):
                # at a crossing each slice meets several branches and the
                # unshifted predictor can sit on a symmetric saddle of |grad P|
                for start in (np.zeros(m), W @ u):
                    bases.append(c + sgn * rho * v + start)
                    frames.append(W)
                    owner.append(ci)
    dims = [0] * centers.shape[0]
    if not bases:
        return dims
    base, W = np.array(bases), np.array(frames)

    def fun(Y, jac, rows):
        X = base[rows] + np.einsum("sij,sj->si", W[rows], Y)
        if not jac:
            return ev.derivatives(X, 1)[1], None
        _, g, H = ev.derivatives(X, 2)
        return g, np.einsum("sij,sjk->sik", H, W[rows])

    Y, gnorm, _ = damped_newton(fun, np.zeros((base.shape[0], m - 1)), opts.max_iter, opts.max_halvings)
    X = base + np.einsum("sij,sj->si", W, Y)
    ok = (gnorm <= opts.grad_tol) & (np.abs(ev.value(X)) <= opts.val_tol)
    # the corrector must stay close to its predictor
    ok &= np.max(np.abs(Y), axis=1, initial=0.0) <= 2 * rho
    owner = np.array(owner)
    # generic nearby points bound the dimension; this discounts crossings of curves
    near_null = np.zeros(len(owner), dtype=int)
    if np.any(ok):
        near_null[ok] = _nullities(cp, X[ok], opts.null_rel_tol)
    for ci, c in enumerate(centers):
        sel = (owner == ci) & ok
        disp = X[sel] - c
        if torus:
            disp[:, :-1] = (disp[:, :-1] + np.pi) % TWO_PI - np.pi
        dims[ci] = min(_pca_dimension(disp, rho), int(np.max(near_null[sel], initial=0)))
    return dims


def estimate_locus_dimension(cp: CharPolyFamily, points: Sequence[CriticalPoint],
                             opts: FinderOptions | None = None) -> list[int]:
    """Local dimension of the singular locus at each point.

    Combines the nullity of the Hessian (an upper bound) with the principal
    components of critical points continued along the Hessian kernel.  A Morse
    point is isolated without probing.
    """
    opts = opts or FinderOptions()
    if not points:
        return []
    X = np.array([p.x for p in points])
    dims, _ = _dimensions(cp, X, _nullities(cp, X, opts.null_rel_tol), opts, _is_torus(cp))
    return [int(d) for d in dims]


def _dimensions(cp, X, nullity, opts, torus) -> tuple[np.ndarray, np.ndarray]:
    """``(estimate, pca)`` per point; ``pca`` is -1 where no probe was needed."""
    dims = np.zeros(X.shape[0], dtype=int)
    pca = -np.ones(X.shape[0], dtype=int)
    todo = np.flatnonzero(nullity > 0)
    if todo.size:
        pca[todo] = _probe(cp, X[todo], opts, torus)
        dims[todo] = np.minimum(pca[todo], nullity[todo])
    return dims, pca


def _group_components(points: list[CriticalPoint], opts: FinderOptions, torus: bool) -> list[LocusComponent]:
    if not points:
        return []
    X = np.array([p.x for p in points])
    N = len(points)
    link = 1.5 * (TWO_PI / max(opts.grid, 1) if torus else 2 * opts.box / max(opts.grid - 1, 1))
    cont = np.array([i for i, p in enumerate(points) if p.locus_dim_estimate > 0], dtype=int)
    rows, cols = [], []
    if cont.size > 1:
        pairs = _kdtree(X[cont], torus).query_pairs(link, p=np.inf, output_type="ndarray")
        rows, cols = cont[pairs[:, 0]], cont[pairs[:, 1]]
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(N, N))
    _, labels = connected_components(adj, directed=False)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    comps = []
    for members in groups.values():
        dim = max(points[i].locus_dim_estimate for i in members)
        rep = min(members, key=lambda i: points[i].residual_grad + points[i].residual_val)
        comps.append(LocusComponent(members, dim, rep))
    comps.sort(key=lambda c: c.members[0])
    for ci, c in enumerate(comps):
        for i in c.members:
            points[i].component = ci
    return comps


# -- fibers of the characteristic map ------------------------------------

def singular_fiber_solve(cmap: CharacteristicMap, lam: Sequence[float], opts: FinderOptions | None = None,
                         dedup_radius: float = 1e-3) -> list[np.ndarray]:
    """All ``b`` with ``Xi(b) = lam`` (leading components only if ``lam`` is shorter)."""
    opts = opts or FinderOptions()
    lam = np.asarray(lam, dtype=float)
    m = lam.size
    torus = cmap.backend == TORUS
    if m == 0:
        return []

    def fun(B, jac=True, rows=None):
        r = cmap(B)[:, :m] - lam
        return r, (cmap.jacobian(B)[:, :m, :] if jac else None)

    B0 = base_grid(cmap.n, opts.grid, torus, opts.box)
    chunks = [B0[i:i + opts.chunk] for i in range(0, B0.shape[0], opts.chunk)]
    res = [damped_newton(fun, c, opts.max_iter, opts.max_halvings) for c in chunks]
    B = np.concatenate([r[0] for r in res])
    norm = np.concatenate([r[1] for r in res])
    scale = 1.0 + float(np.max(np.abs(lam)))
    ok = norm <= opts.fiber_tol * scale
    Bk = canonicalize(B[ok]) if torus else B[ok]
    if Bk.shape[0] == 0:
        return []
    Xk = np.concatenate([Bk, np.zeros((Bk.shape[0], 1))], axis=1)
    reps = dedup(Xk, norm[ok], dedup_radius, torus)
    return [Bk[i] for i in sorted(reps, key=lambda i: tuple(Bk[i]))]


@dataclass
class ConsistencyReport:
    disc_normalized: list[float]
    jacobian_ranks: list[int]
    generic_rank: int
    consistent: list[bool]

    @property
    def all_consistent(self) -> bool:
        return all(self.consistent)

    def to_dict(self) -> dict:
        return {
            "disc_normalized": [float(v) for v in self.disc_normalized],
            "jacobian_ranks": list(self.jacobian_ranks),
            "generic_rank": self.generic_rank,
            "consistent": list(self.consistent),
            "all_consistent": self.all_consistent,
        }


def normalized_discriminant(cp: CharPolyFamily, B: np.ndarray) -> np.ndarray:
    """``|disc(Xi(b))|`` made scale free; see ``normalized_discriminant_batch``."""
    B = np.atleast_2d(B)
    if cp.k < 2:
        return np.ones(B.shape[0])
    return np.abs(normalized_discriminant_batch(cp.characteristic_map(B), cp.k))


def generic_rank(cmap: CharacteristicMap, samples: int = 8, seed: int = 0) -> int:
    from .region import jacobian_rank

    rng = np.random.default_rng(seed)
    lo, hi = (0.0, TWO_PI) if cmap.backend == TORUS else (-2.0, 2.0)
    B = rng.uniform(lo, hi, size=(samples, cmap.n))
    return max((jacobian_rank(cmap, b) for b in B), default=0)


def verify_discriminant_consistency(locus: SingularLocus, cp: CharPolyFamily,
                                    tol: float = 1e-8) -> ConsistencyReport:
    """Each singular point must lie over the discriminant where ``J_Xi`` drops rank."""
    from .region import jacobian_rank

    cmap = cp.characteristic_map
    g_rank = generic_rank(cmap)
    if not locus.points:
        return ConsistencyReport([], [], g_rank, [])
    B = np.array([p.b for p in locus.points])
    disc = normalized_discriminant(cp, B)
    ranks = [jacobian_rank(cmap, b) for b in B]
    ok = [bool(d <= tol) and (r < g_rank or g_rank == 0) for d, r in zip(disc, ranks)]
    return ConsistencyReport(list(disc), ranks, g_rank, ok)
