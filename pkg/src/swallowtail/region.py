"""The characteristic region: samples of ``Xi`` over the base, discriminant contacts, export.

The region is kept as a sample cloud.  Points where ``Xi`` touches the
discriminant are located by refining the grid local minima of ``disc o Xi``
and are then clustered in the unfolding space.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .charpoly import CharacteristicMap, CharPolyFamily
from .critical_finder import dedup
from .parallel import map_chunks
from .singularity import a3_slice_closed_form, discriminant_batch, normalized_discriminant_batch
from .trigpoly import TORUS

TWO_PI = 2.0 * np.pi

GYROID_SLICE = -6.0


@dataclass
class RegionOptions:
    grid: int = 40
    box: float = 2.0
    disc_tol: float = 1e-8  # relative to 1 + max |disc| over the grid
    jac_tol: float = 1e-8
    refine_max: int = 64
    contact_radius: float = 1e-3  # in the unfolding space, relative to 1 + |xi|
    chunk: int = 65536
    threads: int | None = None


@dataclass
class RegionSample:
    b: np.ndarray
    xi: np.ndarray
    disc: float
    jac_rank: int
    near_disc: bool


@dataclass
class Contact:
    """A point of the region on the discriminant, with the base points over it."""

    xi: np.ndarray
    preimages: list[np.ndarray]
    disc: float

    def to_dict(self) -> dict:
        return {"xi": [float(v) for v in self.xi],
                "preimages": [[float(v) for v in b] for b in self.preimages],
                "disc": float(self.disc)}


@dataclass
class RegionSamples:
    """Struct-of-arrays sample set; one row per base point."""

    B: np.ndarray
    xi: np.ndarray
    disc: np.ndarray
    disc_normalized: np.ndarray
    jac_rank: np.ndarray
    near_disc: np.ndarray
    k: int
    torus: bool = True
    grid: int = 0
    spacing: float = 0.0
    variables: tuple[str, ...] = ()
    refined: "RegionSamples | None" = None
    contacts: list[Contact] = field(default_factory=list)

    def __len__(self) -> int:
        return self.B.shape[0]

    def __getitem__(self, i: int) -> RegionSample:
        return RegionSample(self.B[i], self.xi[i], float(self.disc[i]), int(self.jac_rank[i]),
                            bool(self.near_disc[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def all_xi(self) -> np.ndarray:
        if self.refined is None or len(self.refined) == 0:
            return self.xi
        return np.concatenate([self.xi, self.refined.xi])

    def ranges(self) -> list[tuple[float, float]]:
        """Per-component ``(min, max)`` of ``xi`` over grid and refined samples."""
        X = self.all_xi()
        if X.shape[0] == 0:
            return []
        return [(float(lo), float(hi)) for lo, hi in zip(X.min(axis=0), X.max(axis=0))]

    @property
    def scale(self) -> float:
        return 1.0 + float(np.max(np.abs(self.disc), initial=0.0))

    def min_disc(self) -> float:
        return float(np.min(self.disc)) if self.disc.size else 0.0

    def summary(self) -> dict:
        return {
            "samples": len(self),
            "grid": self.grid,
            "k": self.k,
            "ranges": [list(r) for r in self.ranges()],
            "min_disc": self.min_disc(),
            "max_abs_disc": float(np.max(np.abs(self.disc), initial=0.0)),
            "near_disc_samples": int(np.sum(self.near_disc)),
            "contacts": [c.to_dict() for c in self.contacts],
            "jac_rank_counts": {str(int(r)): int(c) for r, c in zip(*np.unique(self.jac_rank, return_counts=True))},
        }


# -- evaluation -----------------------------------------------------------

def jacobian_rank(cmap: CharacteristicMap, b, tol: float = 1e-8, floor: float = 1e-10) -> int:
    """Numerical rank of ``J_Xi(b)``: singular values above ``tol * sigma_max``."""
    return int(jacobian_ranks(cmap, np.atleast_2d(np.asarray(b, dtype=float)), tol, floor)[0])


def jacobian_ranks(cmap: CharacteristicMap, B: np.ndarray, tol: float = 1e-8, floor: float = 1e-10,
                   J: np.ndarray | None = None) -> np.ndarray:
    if J is None:
        J = cmap.jacobian(B)
    if J.shape[1] == 0 or J.shape[2] == 0:
        return np.zeros(B.shape[0], dtype=int)
    if J.shape[1] == 1:
        s = np.linalg.norm(J[:, 0, :], axis=1)[:, None]
    else:
        s = np.linalg.svd(J, compute_uv=False)
    top = s[:, :1]
    rank = np.sum(s > tol * top, axis=1)
    return np.where(top[:, 0] <= floor, 0, rank).astype(int)


def _discs(xi: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    if k < 2:
        # a single level never degenerates
        ones = np.ones(xi.shape[0])
        return ones, ones
    d = discriminant_batch(xi, k)
    return d, normalized_discriminant_batch(xi, k, d)


def evaluate_points(cp: CharPolyFamily, B: np.ndarray, opts: RegionOptions | None = None,
                    scale: float | None = None) -> RegionSamples:
    """Region samples at explicit base points.

    ``near_disc`` is ``|disc| <= disc_tol * scale``; ``scale`` defaults to
    ``1 + max |disc|`` over these points.
    """
    opts = opts or RegionOptions()
    B = np.atleast_2d(np.asarray(B, dtype=float))
    cmap = cp.characteristic_map

    def work(Bc):
        xi, J = cmap.value_and_jacobian(Bc)
        d, dn = _discs(xi, cp.k)
        return xi, d, dn, jacobian_ranks(cmap, Bc, opts.jac_tol, J=J)

    chunks = [B[i:i + opts.chunk] for i in range(0, B.shape[0], opts.chunk)] or [B]
    parts = map_chunks(work, chunks, opts.threads)
    xi = np.concatenate([p[0] for p in parts])
    d = np.concatenate([p[1] for p in parts])
    dn = np.concatenate([p[2] for p in parts])
    rank = np.concatenate([p[3] for p in parts])
    if scale is None:
        scale = 1.0 + float(np.max(np.abs(d), initial=0.0))
    return RegionSamples(B, xi, d, dn, rank, np.abs(d) <= opts.disc_tol * scale, cp.k,
                         torus=cp.backend == TORUS, variables=cp.names)


def region_grid(n: int, grid: int, torus: bool, box: float) -> np.ndarray:
    if grid < 2:
        raise ValueError("the region grid needs at least 2 points per axis")
    axis = np.arange(grid) * (TWO_PI / grid) if torus else np.linspace(-box, box, grid)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1) if n else np.zeros((1, 0))


def sample_region(cp: CharPolyFamily, grid: int = 40, opts: RegionOptions | None = None,
                  refine: bool = True) -> RegionSamples:
    """``grid^n`` samples of ``Xi``, with contacts found by local refinement."""
    opts = opts or RegionOptions(grid=grid)
    torus = cp.backend == TORUS
    B = region_grid(cp.n, grid, torus, opts.box)
    samples = evaluate_points(cp, B, opts)
    samples.grid = grid
    samples.spacing = spacing = (TWO_PI / grid) if torus else (2 * opts.box / (grid - 1))
    if refine and cp.k >= 2 and cp.n > 0:
        cand = _grid_local_minima(np.abs(samples.disc_normalized), cp.n, grid, torus)
        cand = cand[np.argsort(np.abs(samples.disc_normalized[cand]), kind="stable")][:opts.refine_max]
        Bref = np.array([refine_contact(cp, B[i], spacing) for i in cand]).reshape(-1, cp.n)
        if torus:
            Bref = np.mod(Bref, TWO_PI)
        samples.refined = evaluate_points(cp, Bref, opts, samples.scale)
    samples.contacts = find_contacts(samples, opts)
    return samples


def _grid_local_minima(values: np.ndarray, n: int, grid: int, torus: bool) -> np.ndarray:
    V = values.reshape((grid,) * n)
    is_min = np.ones(V.shape, dtype=bool)
    for ax in range(n):
        for shift in (1, -1):
            nb = np.roll(V, shift, axis=ax)
            if not torus:
                edge = [slice(None)] * n
                edge[ax] = 0 if shift == 1 else -1
                nb[tuple(edge)] = np.inf
            is_min &= V <= nb
    return np.flatnonzero(is_min.ravel())


def refine_contact(cp: CharPolyFamily, b0, spacing: float) -> np.ndarray:
    """Local minimizer of ``|disc o Xi|`` (normalized) started at ``b0``."""
    b0 = np.asarray(b0, dtype=float)
    cmap = cp.characteristic_map

    def f(b):
        return float(abs(normalized_discriminant_batch(cmap(b[None, :]), cp.k)[0]))

    f0 = f(b0)
    if f0 == 0.0:
        return b0
    res = minimize(f, b0, method="BFGS", options={"gtol": 1e-14, "maxiter": 400})
    # BFGS may walk off along a flat valley; never accept a worse point
    if res.fun <= f0 and np.max(np.abs(res.x - b0)) <= 4 * spacing:
        return res.x
    return b0


def refine_near(cp: CharPolyFamily, b, samples: RegionSamples, opts: RegionOptions | None = None) -> RegionSample:
    """Region sample at ``b`` itself (e.g. a critical point), judged on the scale of ``samples``."""
    return evaluate_points(cp, np.atleast_2d(b), opts, samples.scale)[0]


def find_contacts(samples: RegionSamples, opts: RegionOptions | None = None) -> list[Contact]:
    """Cluster near-discriminant samples (grid and refined) in the unfolding space."""
    opts = opts or RegionOptions()
    pools = [samples] + ([samples.refined] if samples.refined is not None else [])
    B = np.concatenate([p.B[p.near_disc] for p in pools])
    X = np.concatenate([p.xi[p.near_disc] for p in pools])
    D = np.concatenate([p.disc[p.near_disc] for p in pools])
    if X.shape[0] == 0:
        return []
    radius = opts.contact_radius * (1.0 + float(np.max(np.abs(X))))
    if X.shape[1] == 0:
        labels = np.zeros(X.shape[0], dtype=int)
    else:
        pairs = cKDTree(X).query_pairs(radius, output_type="ndarray")
        adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(X.shape[0],) * 2)
        labels = connected_components(adj, directed=False)[1]
    out = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        # flat contacts leave near-zero disc on a small neighbourhood; keep
        # the best point per half grid cell
        merge = max(0.5 * samples.spacing, 1e-3)
        Bi = B[idx]
        Xi_ = np.concatenate([Bi, np.zeros((idx.size, 1))], axis=1)
        pre = [Bi[j] for j in dedup(Xi_, np.abs(D[idx]), merge, samples.torus)]
        best = idx[np.argmin(np.abs(D[idx]))]
        out.append(Contact(X[best], sorted(pre, key=tuple), float(D[best])))
    out.sort(key=lambda c: tuple(np.round(c.xi, 6)))
    return out


# -- boundary traces ------------------------------------------------------

@dataclass
class BoundaryTrace:
    label: str
    t: np.ndarray
    xi: np.ndarray

    def to_dict(self) -> dict:
        return {"label": self.label, "t": self.t.tolist(), "xi": self.xi.tolist()}


def boundary_curves(model, cp: CharPolyFamily, samples: int = 200) -> list[BoundaryTrace]:
    """Images under ``Xi`` of the model's declared lines ``t -> t * direction``."""
    t = np.linspace(0.0, TWO_PI, samples, endpoint=False) if samples > 1 else np.zeros(1)
    out = []
    for curve in getattr(model, "boundary_curves", ()):
        B = t[:, None] * np.asarray(curve.direction, dtype=float)[None, :]
        out.append(BoundaryTrace(curve.label, t, cp.characteristic_map(B)))
    return out


# -- export ---------------------------------------------------------------

def csv_header(samples: RegionSamples) -> list[str]:
    names = list(samples.variables) or [f"b{i}" for i in range(samples.B.shape[1])]
    return ([f"b_{v}" for v in names] + [f"xi_{j}" for j in range(samples.xi.shape[1])]
            + ["disc", "jac_rank"])


def write_csv(samples: RegionSamples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(samples))
        for b, xi, d, r in zip(samples.B, samples.xi, samples.disc, samples.jac_rank):
            w.writerow([repr(float(v)) for v in b] + [repr(float(v)) for v in xi] + [repr(float(d)), int(r)])


def region_to_dict(samples: RegionSamples, name: str = "", traces: Sequence[BoundaryTrace] = ()) -> dict:
    return {
        "schema": "1",
        "model": name,
        "variables": list(samples.variables),
        "summary": samples.summary(),
        "samples": {
            "b": samples.B.tolist(),
            "xi": samples.xi.tolist(),
            "disc": samples.disc.tolist(),
            "jac_rank": samples.jac_rank.tolist(),
            "near_disc": samples.near_disc.tolist(),
        },
        "boundary_curves": [tr.to_dict() for tr in traces],
    }


def write_json(samples: RegionSamples, path, name: str = "", traces: Sequence[BoundaryTrace] = ()) -> None:
    with open(path, "w") as fh:
        json.dump(region_to_dict(samples, name, traces), fh)


def slice_contours(samples: RegionSamples, window, resolution: int = 400) -> list[np.ndarray]:
    """Zero set of the discriminant on the plane of the first two unfolding
    coordinates, for ``k = 4`` samples whose last coordinate is constant."""
    from skimage.measure import find_contours

    if samples.k != 4 or samples.xi.shape[0] == 0:
        return []
    a2 = samples.xi[:, 2]
    if np.ptp(a2) > 1e-12:
        return []
    (x0, x1), (y0, y1) = window
    xs, ys = np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution)
    A0, A1 = np.meshgrid(xs, ys, indexing="ij")
    if a2[0] == GYROID_SLICE:
        D = a3_slice_closed_form(A0, A1)
    else:
        L = np.stack([A0.ravel(), A1.ravel(), np.full(A0.size, a2[0])], axis=1)
        D = discriminant_batch(L, 4).reshape(A0.shape)
    out = []
    for c in find_contours(D, 0.0):
        out.append(np.stack([np.interp(c[:, 0], np.arange(resolution), xs),
                             np.interp(c[:, 1], np.arange(resolution), ys)], axis=1))
    return out


def _ticks(lo: float, hi: float, count: int = 6) -> np.ndarray:
    span = hi - lo
    raw = span / max(count - 1, 1)
    mag = 10 ** np.floor(np.log10(raw)) if raw > 0 else 1.0
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 1e-9 * span, step)


def render_svg(samples: RegionSamples, title: str = "") -> str:
    """Self-contained 800x600 scatter of the region with discriminant overlay."""
    W, H, L, R, T, Bm = 800, 600, 70, 20, 40, 50
    X = samples.all_xi()
    one_d = X.shape[1] == 1
    if X.shape[1] == 0:
        px, py = np.zeros(0), np.zeros(0)
        ylabel = ""
    elif one_d:
        px, py = samples.xi[:, 0], samples.disc
        ylabel = "disc"
    else:
        px, py = samples.xi[:, 0], samples.xi[:, 1]
        ylabel = "xi_1"

    def span(v, extra=()):
        vals = np.concatenate([v] + [np.asarray(e, dtype=float).ravel() for e in extra]) if v.size or extra else np.zeros(1)
        if vals.size == 0:
            vals = np.zeros(1)
        lo, hi = float(vals.min()), float(vals.max())
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        return lo - pad, hi + pad

    cx = [c.xi[0] for c in samples.contacts] if X.shape[1] else []
    cy = [(c.disc if one_d else c.xi[1]) for c in samples.contacts] if X.shape[1] else []
    xr, yr = span(px, [cx]), span(py, [cy])
    sx = lambda v: L + (np.asarray(v) - xr[0]) / (xr[1] - xr[0]) * (W - L - R)
    sy = lambda v: H - Bm - (np.asarray(v) - yr[0]) / (yr[1] - yr[0]) * (H - T - Bm)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">'
           f'{_esc(title)}</text>']
    # axes and ticks
    out.append(f'<g class="axes" stroke="black" stroke-width="1" font-family="sans-serif" font-size="11">')
    out.append(f'<line x1="{L}" y1="{H - Bm}" x2="{W - R}" y2="{H - Bm}"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - Bm}"/>')
    for v in _ticks(*xr):
        x = float(sx(v))
        out.append(f'<line x1="{x:.2f}" y1="{H - Bm}" x2="{x:.2f}" y2="{H - Bm + 5}"/>')
        out.append(f'<text x="{x:.2f}" y="{H - Bm + 18}" text-anchor="middle" stroke="none">{v:g}</text>')
    for v in _ticks(*yr):
        y = float(sy(v))
        out.append(f'<line x1="{L - 5}" y1="{y:.2f}" x2="{L}" y2="{y:.2f}"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.2f}" text-anchor="end" stroke="none">{v:g}</text>')
    out.append(f'<text x="{(L + W - R) / 2}" y="{H - 12}" text-anchor="middle" stroke="none">xi_0</text>')
    out.append(f'<text x="16" y="{(T + H - Bm) / 2}" text-anchor="middle" stroke="none" '
               f'transform="rotate(-90 16 {(T + H - Bm) / 2})">{ylabel}</text>')
    out.append('</g>')
    # samples, binned to 2px cells
    if px.size:
        cells = np.unique(np.stack([np.floor(sx(px) / 2), np.floor(sy(py) / 2)], axis=1), axis=0)
        out.append('<g class="samples" fill="#4a78b5" fill-opacity="0.6">')
        out.extend(f'<rect x="{2 * a:.0f}" y="{2 * b:.0f}" width="2" height="2"/>' for a, b in cells)
        out.append('</g>')
    for c in slice_contours(samples, (xr, yr)):
        pts = " ".join(f"{float(sx(x)):.2f},{float(sy(y)):.2f}" for x, y in c)
        out.append(f'<polyline class="discriminant" fill="none" stroke="#c0392b" stroke-width="1.2" points="{pts}"/>')
    for x, y, c in zip(cx, cy, samples.contacts):
        label = ", ".join(f"{v:.4g}" for v in c.xi)
        out.append(f'<circle class="contact" cx="{float(sx(x)):.2f}" cy="{float(sy(y)):.2f}" r="6" '
                   f'fill="none" stroke="#111" stroke-width="2"><title>({label})</title></circle>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(samples: RegionSamples, path, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(render_svg(samples, title))


FORMATS = ("csv", "svg", "json")


def export(samples: RegionSamples, fmt: str, path, name: str = "", traces: Sequence[BoundaryTrace] = ()) -> None:
    """Write ``samples`` as csv, svg or json; raises ``OSError`` on unwritable paths."""
    if fmt == "csv":
        write_csv(samples, path)
    elif fmt == "svg":
        write_svg(samples, path, name)
    elif fmt == "json":
        write_json(samples, path, name, traces)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
