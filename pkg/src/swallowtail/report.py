"""Analysis reports: assembly, JSON (de)serialization and schema validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Any, Mapping

from . import __version__
from .charpoly import CharPolyFamily, edge_count_identity, model_char_poly
from .critical_finder import FinderOptions, SingularLocus, find_critical_points
from .graph_model import ModelSpec
from .region import RegionOptions, sample_region

SCHEMA_VERSION = "1"
SCHEMA_RESOURCE = "report.schema.json"
# keys that vary between runs and are ignored when comparing reports
VOLATILE_KEYS = ("timestamp",)

# default region grids per base dimension; keeps 4-D bases tractable
REGION_GRIDS = {1: 400, 2: 120, 3: 40, 4: 14}


def region_grid_for(n: int) -> int:
    return REGION_GRIDS.get(n, 10)


@dataclass
class AnalysisReport:
    model: str
    k: int
    n: int
    backend: str
    variables: list[str]
    char_poly: dict
    traceless: bool
    edge_count_identity: bool | None
    points: list[dict]
    components: list[dict]
    summary: dict
    region: dict
    diagnostics: dict
    tolerances: dict
    version: str = __version__
    schema: str = SCHEMA_VERSION
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @property
    def verdict(self) -> str:
        if not self.points:
            return "no singularities"
        dirac = self.summary["dirac_base_points"]
        return (f"singular locus of dimension {self.summary['locus_dimension']}: "
                f"{self.summary['base_points']} isolated base point(s), {dirac} Dirac point(s)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "AnalysisReport":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})

    def to_json(self, indent: int | None = 2) -> str:
        _check_finite(self.to_dict())
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))

    def stable_dict(self) -> dict:
        """The report without volatile fields, for diffing runs."""
        return {k: v for k, v in self.to_dict().items() if k not in VOLATILE_KEYS}

    def render_text(self) -> str:
        lines = [
            f"model {self.model}: k={self.k}, n={self.n} ({self.backend})",
            f"P(b, z) = {self.char_poly['rendered']}",
            f"traceless: {self.traceless}",
        ]
        if self.edge_count_identity is not None:
            lines.append(f"edge-count identity: {self.edge_count_identity}")
        lines.append(self.verdict)
        for p in self.points:
            b = ", ".join(f"{v:.6f}" for v in p["b"])
            lines.append(f"  ({b}) z={p['z']:.6f} {p['stratum']} {p['classification']} "
                         f"sig={tuple(p['signature'])} dim={p['locus_dim_estimate']}")
        for i, c in enumerate(self.components):
            lines.append(f"  component {i}: {c['size']} point(s), dimension {c['dimension']}")
        if self.region.get("ranges"):
            rng = " x ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in self.region["ranges"])
            lines.append(f"region: {rng}; {len(self.region['contacts'])} discriminant contact(s)")
        return "\n".join(lines)


def _check_finite(obj: Any, path: str = "$") -> None:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError(f"non-finite number at {path}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def char_poly_dict(cp: CharPolyFamily) -> dict:
    return {
        "rendered": cp.render(),
        "coefficients": [c.to_dict() for c in cp.coeffs],
        "shifted": [c.to_dict() for c in cp.shifted] if cp.shifted is not None else [],
    }


def _edge_identity(model: ModelSpec, cp: CharPolyFamily) -> bool | None:
    if model.graph is None:
        return None
    try:
        return edge_count_identity(model.graph, cp)
    except ValueError:
        return None


def build_report(model: ModelSpec, finder: FinderOptions | None = None,
                 region: RegionOptions | None = None, region_grid: int | None = None,
                 locus: SingularLocus | None = None) -> AnalysisReport:
    finder = finder or FinderOptions()
    region = region or RegionOptions(box=model.box)
    cp = model_char_poly(model)
    locus = locus if locus is not None else find_critical_points(cp, finder)
    G = region_grid or region_grid_for(model.n)
    samples = sample_region(cp, G, region)
    tolerances = {
        "grad_tol": finder.grad_tol, "val_tol": finder.val_tol, "root_tol": finder.root_tol,
        "dedup_radius": finder.dedup_radius, "null_rel_tol": finder.null_rel_tol,
        "tilt_tol": finder.tilt_tol, "disc_tol": region.disc_tol, "jac_tol": region.jac_tol,
        "grid": finder.grid, "region_grid": G,
    }
    return AnalysisReport(
        model=model.name,
        k=cp.k,
        n=cp.n,
        backend=cp.backend,
        variables=list(cp.names),
        char_poly=char_poly_dict(cp),
        traceless=cp.is_traceless,
        edge_count_identity=_edge_identity(model, cp),
        points=[p.to_dict() for p in locus.points],
        components=[c.to_dict() for c in locus.components],
        summary=locus.summary(),
        region=samples.summary(),
        diagnostics=dict(locus.diagnostics),
        tolerances=tolerances,
    )


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath(SCHEMA_RESOURCE).read_text())


def validate_report(data: Mapping) -> None:
    """Raise ``jsonschema.ValidationError`` if ``data`` violates the report schema."""
    import jsonschema

    jsonschema.validate(instance=data, schema=load_schema())
