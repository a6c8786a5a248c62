"""Scenario files: strict parsing and validation of experiment descriptions.

A scenario is a YAML mapping that names an experiment and supplies the
objects it needs (set family, vector field, polynomial, initial point, time
window, step sizes, region, seed, checks).  Parsing is strict: unknown keys
are rejected, and every error names the offending field.  The bundled
scenarios double as acceptance fixtures, so no silent defaults exist beyond
the documented ones (samples=64, region derived from family anchors).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import VectorField
from .errors import ScenarioError
from .geometry import (BallRegion, Box, Intersection, MovingBall,
                       MovingHalfspace, MovingPolytope, Polynomial, SetFamily,
                       Sublevel, Translate)
from .timefns import Curve, TimePoly

EXPERIMENTS = ("sweep", "length_study", "talweg", "desingularize", "bridge",
               "statedep", "monotone")

_COMMON_KEYS = {"name", "experiment", "seed", "output_dir", "samples",
                "region", "checks", "starts"}
_REQUIRED = {
    "sweep": {"family", "x0", "t0", "t_end", "h"},
    "length_study": {"family", "x0", "t0", "t_end", "h_list"},
    "talweg": {"family", "r_grid"},
    "desingularize": {"f", "r_grid"},
    "bridge": {"f", "x0", "t_end", "h"},
    "statedep": {"field", "x0", "t_end", "h"},
    "monotone": {"family", "field", "x0", "t0", "t_end", "h"},
}
_OPTIONAL = {
    "sweep": set(),
    "length_study": set(),
    "talweg": set(),
    "desingularize": {"a", "probes"},
    "bridge": set(),
    "statedep": set(),
    "monotone": set(),
}


def _fail(path: str, message: str):
    raise ScenarioError(f"{path}: {message}")


def _expect_map(node, path):
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _only_keys(node, path, allowed):
    for key in node:
        if key not in allowed:
            _fail(path, f"unknown key '{key}' (allowed: {sorted(allowed)})")


def _parse_timefn(node, path) -> TimePoly:
    if isinstance(node, (int, float)):
        return TimePoly.constant(float(node))
    node = _expect_map(node, path)
    if "poly" in node:
        _only_keys(node, path, {"poly", "origin"})
        return TimePoly.polynomial(node["poly"], origin=float(node.get("origin", 0.0)))
    if "pieces" in node:
        _only_keys(node, path, {"pieces"})
        starts, coeffs = [], []
        for i, piece in enumerate(node["pieces"]):
            piece = _expect_map(piece, f"{path}.pieces[{i}]")
            _only_keys(piece, f"{path}.pieces[{i}]", {"start", "poly"})
            starts.append(float(piece["start"]))
            coeffs.append(list(map(float, piece["poly"])))
        width = max(len(c) for c in coeffs)
        coeffs = [c + [0.0] * (width - len(c)) for c in coeffs]
        try:
            return TimePoly(starts, coeffs)
        except ValueError as exc:
            _fail(path, str(exc))
    _fail(path, "time function needs a number, {poly: [...]}, or {pieces: [...]}")


def _parse_curve(node, path) -> Curve:
    if not isinstance(node, list) or not node:
        _fail(path, "curve needs a non-empty list of per-coordinate time functions")
    return Curve([_parse_timefn(c, f"{path}[{i}]") for i, c in enumerate(node)])


def _parse_poly(node, path) -> Polynomial:
    node = _expect_map(node, path)
    _only_keys(node, path, {"dimension", "terms"})
    if "dimension" not in node:
        _fail(path, "polynomial needs 'dimension'")
    terms = []
    for i, term in enumerate(node.get("terms", [])):
        if not (isinstance(term, list) and len(term) == 2):
            _fail(f"{path}.terms[{i}]", "term must be [coefficient, [exponents]]")
        terms.append((float(term[0]), [int(e) for e in term[1]]))
    try:
        return Polynomial(int(node["dimension"]), terms)
    except Exception as exc:
        _fail(path, str(exc))


def _parse_family(node, path) -> SetFamily:
    node = _expect_map(node, path)
    kind = node.get("kind")
    if kind is None:
        _fail(path, "family needs a 'kind'")
    try:
        if kind == "ball":
            _only_keys(node, path, {"kind", "center", "radius"})
            return MovingBall(_parse_curve(node["center"], f"{path}.center"),
                              _parse_timefn(node["radius"], f"{path}.radius"))
        if kind == "halfspace":
            _only_keys(node, path, {"kind", "normal", "offset"})
            return MovingHalfspace(_parse_curve(node["normal"], f"{path}.normal"),
                                   _parse_timefn(node["offset"], f"{path}.offset"))
        if kind == "polytope":
            _only_keys(node, path, {"kind", "facets"})
            facets = [_parse_family({"kind": "halfspace", **_expect_map(f, f"{path}.facets[{i}]")},
                                    f"{path}.facets[{i}]")
                      for i, f in enumerate(node["facets"])]
            return MovingPolytope(facets)
        if kind == "sublevel":
            _only_keys(node, path, {"kind", "poly", "level"})
            return Sublevel(_parse_poly(node["poly"], f"{path}.poly"),
                            _parse_timefn(node["level"], f"{path}.level"))
        if kind == "intersection":
            _only_keys(node, path, {"kind", "members"})
            return Intersection([_parse_family(m, f"{path}.members[{i}]")
                                 for i, m in enumerate(node["members"])])
        if kind == "translate":
            _only_keys(node, path, {"kind", "base", "shift"})
            return Translate(_parse_family(node["base"], f"{path}.base"),
                             _parse_curve(node["shift"], f"{path}.shift"))
    except ScenarioError:
        raise
    except KeyError as exc:
        _fail(path, f"missing key {exc}")
    except Exception as exc:
        _fail(path, str(exc))
    _fail(path, f"unknown family kind '{kind}'")


def _parse_field(node, path) -> VectorField:
    node = _expect_map(node, path)
    _only_keys(node, path, {"components", "alpha"})
    comps = node.get("components")
    if not isinstance(comps, list) or not comps:
        _fail(path, "field needs a non-empty 'components' list of polynomials")
    polys = [_parse_poly(c, f"{path}.components[{i}]") for i, c in enumerate(comps)]
    alpha = node.get("alpha")
    try:
        return VectorField(polys, monotonicity_alpha=None if alpha is None
                           else float(alpha))
    except Exception as exc:
        _fail(path, str(exc))


def _parse_region(node, path):
    node = _expect_map(node, path)
    if "box" in node:
        _only_keys(node, path, {"box"})
        box = _expect_map(node["box"], f"{path}.box")
        _only_keys(box, f"{path}.box", {"lower", "upper"})
        try:
            return Box(box["lower"], box["upper"])
        except Exception as exc:
            _fail(f"{path}.box", str(exc))
    if "ball" in node:
        _only_keys(node, path, {"ball"})
        ball = _expect_map(node["ball"], f"{path}.ball")
        _only_keys(ball, f"{path}.ball", {"center", "radius"})
        try:
            return BallRegion(ball["center"], float(ball["radius"]))
        except Exception as exc:
            _fail(f"{path}.ball", str(exc))
    _fail(path, "region needs 'box' or 'ball'")


def _parse_grid(node, path) -> np.ndarray:
    if isinstance(node, list):
        grid = np.asarray([float(v) for v in node])
    else:
        node = _expect_map(node, path)
        _only_keys(node, path, {"start", "stop", "knots", "spacing"})
        try:
            start, stop = float(node["start"]), float(node["stop"])
            knots = int(node["knots"])
        except KeyError as exc:
            _fail(path, f"missing key {exc}")
        spacing = node.get("spacing", "geometric")
        if spacing == "geometric":
            if start <= 0:
                _fail(path, "geometric grid needs start > 0")
            grid = np.geomspace(start, stop, knots)
        elif spacing == "linear":
            grid = np.linspace(start, stop, knots)
        else:
            _fail(path, f"unknown spacing '{spacing}'")
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        _fail(path, "grid must be strictly increasing with at least 2 knots")
    return grid


def _parse_point(node, path) -> np.ndarray:
    if not isinstance(node, list) or not node:
        _fail(path, "point needs a non-empty list of coordinates")
    return np.asarray([float(v) for v in node])


@dataclass
class Scenario:
    """Validated experiment description."""

    name: str
    experiment: str
    seed: int
    raw: dict = field(repr=False)
    family: SetFamily | None = None
    ffield: VectorField | None = None
    f: Polynomial | None = None
    x0: np.ndarray | None = None
    t0: float = 0.0
    t_end: float = 0.0
    h: float | None = None
    h_list: np.ndarray | None = None
    r_grid: np.ndarray | None = None
    a: float = 0.0
    probes: int = 16
    region: object | None = None
    samples: int = 64
    starts: int = 8
    checks: dict = field(default_factory=dict)
    output_dir: str | None = None


def _default_region(scn: Scenario):
    """Box around time-sampled family anchors and the start point."""
    anchors = []
    t_samples = np.linspace(scn.t0, scn.t_end if scn.t_end > scn.t0 else scn.t0 + 1.0, 5)

    def collect(fam):
        for t in t_samples:
            if isinstance(fam, MovingBall):
                c = fam.center(float(t))
                r = abs(fam.radius(float(t)))
                anchors.append(c - r - 1.0)
                anchors.append(c + r + 1.0)
            elif isinstance(fam, MovingHalfspace):
                n = fam.normal(float(t))
                nn = float(np.dot(n, n))
                if nn > 0:
                    anchors.append(n * (fam.offset(float(t)) / nn))
            elif isinstance(fam, MovingPolytope):
                for f in fam.facets:
                    collect(f)
                return
            elif isinstance(fam, Intersection):
                for m in fam.members:
                    collect(m)
                return
            elif isinstance(fam, Translate):
                collect(fam.base)
                return

    if scn.family is not None:
        collect(scn.family)
    if scn.x0 is not None:
        anchors.append(scn.x0)
    dim = (scn.family.dimension if scn.family is not None
           else scn.x0.size if scn.x0 is not None
           else scn.f.dimension if scn.f is not None else 2)
    if not anchors:
        return Box(-2.0 * np.ones(dim), 2.0 * np.ones(dim))
    A = np.vstack([np.broadcast_to(a, (dim,)) for a in anchors])
    return Box(A.min(axis=0) - 1.0, A.max(axis=0) + 1.0)


def parse_scenario(data: dict, origin: str = "<scenario>") -> Scenario:
    data = _expect_map(data, origin)
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        _fail(f"{origin}.experiment", f"must be one of {EXPERIMENTS}, got {exp!r}")
    required = _REQUIRED[exp]
    allowed = _COMMON_KEYS | required | _OPTIONAL[exp]
    _only_keys(data, origin, allowed)
    for key in ("name", "seed"):
        if key not in data:
            _fail(f"{origin}.{key}", f"{key} required")
    for key in sorted(required):
        if key not in data:
            _fail(f"{origin}.{key}", f"{key} required for experiment={exp}")

    scn = Scenario(name=str(data["name"]), experiment=exp,
                   seed=int(data["seed"]), raw=data)
    if "family" in data:
        scn.family = _parse_family(data["family"], f"{origin}.family")
    if "field" in data:
        scn.ffield = _parse_field(data["field"], f"{origin}.field")
    if "f" in data:
        scn.f = _parse_poly(data["f"], f"{origin}.f")
    if "x0" in data:
        scn.x0 = _parse_point(data["x0"], f"{origin}.x0")
    scn.t0 = float(data.get("t0", 0.0))
    scn.t_end = float(data.get("t_end", 0.0))
    if "h" in data:
        scn.h = float(data["h"])
        if scn.h <= 0:
            _fail(f"{origin}.h", "h must be positive")
    if "h_list" in data:
        hs = np.asarray([float(v) for v in data["h_list"]])
        if hs.size < 3:
            _fail(f"{origin}.h_list", "length_study needs at least 3 step sizes")
        if np.any(np.abs(hs[1:] / hs[:-1] - 0.5) > 1e-9):
            _fail(f"{origin}.h_list", "each step size must halve the previous one")
        scn.h_list = hs
    if "r_grid" in data:
        scn.r_grid = _parse_grid(data["r_grid"], f"{origin}.r_grid")
    scn.a = float(data.get("a", 0.0))
    scn.probes = int(data.get("probes", 16))
    scn.samples = int(data.get("samples", 64))
    scn.starts = int(data.get("starts", 8))
    if scn.family is not None and scn.x0 is not None \
            and scn.x0.size != scn.family.dimension:
        _fail(f"{origin}.x0", "dimension does not match the family")
    if "region" in data:
        scn.region = _parse_region(data["region"], f"{origin}.region")
    else:
        scn.region = _default_region(scn)
    checks = data.get("checks", {})
    checks = _expect_map(checks, f"{origin}.checks") if checks else {}
    for name, params in checks.items():
        if params is None:
            checks[name] = {}
        elif not isinstance(params, dict):
            _fail(f"{origin}.checks.{name}", "check parameters must be a mapping")
    scn.checks = checks
    scn.output_dir = data.get("output_dir")

    if exp == "monotone" and scn.ffield is not None \
            and scn.ffield.monotonicity_alpha is None:
        _fail(f"{origin}.field.alpha", "monotone experiment needs a declared alpha")
    return scn


def load_scenario(path) -> Scenario:
    """Parse a scenario file; parse errors carry line/column, semantic ones the field."""
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: parse error{where}: {exc}") from exc
    if data is None:
        raise ScenarioError(f"{path}: empty scenario file")
    return parse_scenario(data, origin=os.path.basename(path))
