import csv
import json

import numpy as np
import pytest

from swallowtail.graph_model import builtin_model, simple_laced_no_loops
from swallowtail.region import (
    RegionOptions, boundary_curves, csv_header, evaluate_points, export, jacobian_rank, refine_near,
    region_grid, render_svg, sample_region,
)
from swallowtail.report import region_grid_for

from conftest import family, locus, region

PI = np.pi


def _zoo_region(name):
    return region(name, region_grid_for(family(name).n))


def test_gyroid_slice_and_ranges():
    r = region("gyroid", 40)
    assert np.all(r.xi[:, 2] == -6.0)
    (lo0, hi0), (lo1, hi1), _ = r.ranges()
    assert (lo0, hi0) == pytest.approx((-3.0, 9.0), abs=1e-9)
    assert (lo1, hi1) == pytest.approx((-8.0, 8.0), abs=1e-9)
    assert len(r) == 40 ** 3


def test_honeycomb_interval():
    (lo, hi), = region("honeycomb", 100).ranges()
    assert lo == pytest.approx(-9.0, abs=1e-6) and hi == pytest.approx(0.0, abs=1e-6)


def test_diamond_interval():
    (lo, hi), = region("diamond", 40).ranges()
    assert lo == pytest.approx(-16.0, abs=1e-6) and hi == pytest.approx(0.0, abs=1e-6)


def test_jacobian_rank_examples():
    assert jacobian_rank(family("gyroid").characteristic_map, [PI / 2] * 3) == 0
    assert jacobian_rank(family("gyroid").characteristic_map, [0.3, 1.1, 2.0]) == 2
    assert jacobian_rank(family("honeycomb").characteristic_map, [2 * PI / 3, -2 * PI / 3]) == 0
    assert jacobian_rank(family("honeycomb").characteristic_map, [0.3, 1.1]) == 1


def test_jacobian_rank_matches_svd_oracle():
    cmap = family("gyroid").characteristic_map
    rng = np.random.default_rng(3)
    for b in rng.uniform(0, 2 * PI, size=(20, 3)):
        h = 1e-6
        J = np.stack([(cmap(b + h * e) - cmap(b - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
        s = np.linalg.svd(J, compute_uv=False)
        assert jacobian_rank(cmap, b) == int(np.sum(s > 1e-4 * s[0]))


def test_gyroid_boundary_traces():
    traces = {t.label: t for t in boundary_curves(builtin_model("gyroid"), family("gyroid"), samples=4)}
    assert len(traces) == 2
    diag, anti = traces["a=b=c"], traces["a=b=-c"]
    np.testing.assert_allclose(diag.xi[0], [-3, -8, -6], atol=1e-12)
    np.testing.assert_allclose(anti.xi[0], diag.xi[0], atol=1e-12)
    np.testing.assert_allclose(diag.xi[1], [9, 0, -6], atol=1e-12)  # a = pi/2


def test_models_without_curves_have_no_traces():
    assert boundary_curves(builtin_model("honeycomb"), family("honeycomb")) == []


def test_gyroid_has_three_contacts():
    r = region("gyroid", 40)
    assert len(r.contacts) == 3
    got = sorted(tuple(np.round(c.xi[:2], 6)) for c in r.contacts)
    assert got == [(-3.0, -8.0), (-3.0, 8.0), (9.0, 0.0)]
    nine = [c for c in r.contacts if abs(c.xi[0] - 9) < 1e-6][0]
    assert len(nine.preimages) == 2


def test_grid_validation():
    with pytest.raises(ValueError):
        region_grid(2, 1, True, 2.0)


# -- invariants -----------------------------------------------------------

def test_discriminant_nonnegative_on_samples(zoo_name):
    r = _zoo_region(zoo_name)
    assert r.min_disc() >= -1e-9 * (1 + np.max(np.abs(r.disc)))


def test_critical_points_are_near_the_discriminant(zoo_name):
    r = _zoo_region(zoo_name)
    cp = family(zoo_name)
    for p in locus(zoo_name).points[:50]:
        assert refine_near(cp, p.b, r).near_disc


def test_edge_count_column_is_constant(zoo_name):
    m = builtin_model(zoo_name)
    cp = family(zoo_name)
    if m.graph is None or cp.k < 3:
        return
    no_loops, simply, edges = simple_laced_no_loops(m.graph)
    if not (no_loops and simply):
        return
    r = _zoo_region(zoo_name)
    assert np.all(r.xi[:, cp.k - 2] == -edges)


# -- export ---------------------------------------------------------------

def test_csv_columns(tmp_path):
    r = region("honeycomb", 100)
    path = tmp_path / "h.csv"
    export(r, "csv", path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == csv_header(r) == ["b_u", "b_v", "xi_0", "disc", "jac_rank"]
    assert len(rows) == len(r) + 1
    a0 = np.array([float(row[2]) for row in rows[1:]])
    assert a0.min() >= -9 - 1e-9 and a0.max() <= 1e-9


def test_empty_csv_has_header(tmp_path):
    empty = evaluate_points(family("gyroid"), np.zeros((0, 3)))
    path = tmp_path / "e.csv"
    export(empty, "csv", path)
    assert path.read_text().splitlines() == [",".join(csv_header(empty))]


def test_json_export(tmp_path):
    r = region("honeycomb", 100)
    path = tmp_path / "h.json"
    traces = boundary_curves(builtin_model("honeycomb"), family("honeycomb"))
    export(r, "json", path, name="honeycomb", traces=traces)
    data = json.loads(path.read_text())
    assert data["schema"] == "1" and data["model"] == "honeycomb"
    assert len(data["samples"]["xi"]) == len(r)
    assert data["summary"]["ranges"] == [list(x) for x in r.ranges()]


def test_svg_structure(tmp_path):
    svg = render_svg(region("gyroid", 40), "gyroid")
    assert svg.startswith("<svg") and 'width="800" height="600"' in svg
    assert svg.count('class="contact"') == 3
    assert 'class="discriminant"' in svg
    path = tmp_path / "g.svg"
    export(region("gyroid", 40), "svg", path, name="gyroid")
    assert path.read_text() == svg


def test_svg_for_one_dimensional_region():
    svg = render_svg(region("honeycomb", 100))
    assert svg.count('class="contact"') == 1 and 'class="discriminant"' not in svg


def test_export_errors(tmp_path):
    r = region("honeycomb", 100)
    with pytest.raises(ValueError):
        export(r, "png", tmp_path / "x.png")
    with pytest.raises(OSError):
        export(r, "csv", tmp_path / "missing" / "x.csv")


def test_options_threads_do_not_change_samples():
    cp = family("honeycomb")
    a = sample_region(cp, 30, RegionOptions(grid=30, threads=1, chunk=100))
    b = sample_region(cp, 30, RegionOptions(grid=30, threads=3, chunk=100))
    np.testing.assert_array_equal(a.xi, b.xi)
    np.testing.assert_array_equal(a.disc, b.disc)
    assert [c.to_dict() for c in a.contacts] == [c.to_dict() for c in b.contacts]
