"""JSON metric and curve specifications.

Metric document (keys other than ``family`` depend on the family)::

    {"family": "randers", "m": 2, "b": [0.3, 0, 0]}
    {"family": "alpha-beta", "phi": [1, 2, 1], "b": [0.2, 0, 0]}
    {"family": "cui-shen", "h": [0.5], "b": [0.3, 0, 0]}
    {"family": "perturbed-quartic", "epsilon": 0.1, "b": [0, 0, 0.1]}
    {"family": "composite",
     "base": {"family": "euclidean"},
     "drift": {"type": "sinusoidal", "amplitude": [0.1, 0, 0], "wavevector": [0, 0, 1]}}

Families: euclidean, randers, two-order, matsumoto, alpha-beta, cui-shen,
perturbed-quartic, composite. ``m`` defaults to 2 (metrics on R^3).
A drift is either a constant vector or the sinusoidal field
``b(x) = amplitude * sin(wavevector . x + phase)``.

Curve document::

    {"name": "ellipse", "params": {"a": 1.0, "b": 0.6}}
    {"points": [[x, y, z], ...]}
"""
import json
from pathlib import Path

import numpy as np

from . import curves as C
from . import metric as M
from .errors import ConfigurationError

FAMILIES = ("euclidean", "randers", "two-order", "matsumoto", "alpha-beta", "cui-shen",
            "perturbed-quartic", "composite")


def _vector(value, dim, key):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{key} must be a list of numbers") from exc
    if v.shape != (dim,) or not np.all(np.isfinite(v)):
        raise ConfigurationError(f"{key} must be a finite vector of length {dim}")
    return v


def sinusoidal_drift(amplitude, wavevector, phase=0.0):
    """b(x) = amplitude * sin(wavevector . x + phase), vectorised over x."""
    a = np.asarray(amplitude, dtype=float)
    k = np.asarray(wavevector, dtype=float)

    def b(x):
        x = np.zeros_like(a) if x is None else np.asarray(x, dtype=float)
        return a * np.sin(x @ k + phase)[..., None]

    return b


def _drift(doc, dim):
    d = doc.get("drift", doc.get("b"))
    if d is None:
        return np.zeros(dim)
    if isinstance(d, dict):
        kind = d.get("type", "constant")
        if kind == "constant":
            return _vector(d.get("value"), dim, "drift.value")
        if kind == "sinusoidal":
            return sinusoidal_drift(_vector(d.get("amplitude"), dim, "drift.amplitude"),
                                    _vector(d.get("wavevector"), dim, "drift.wavevector"),
                                    float(d.get("phase", 0.0)))
        raise ConfigurationError(f"unknown drift type {kind!r}")
    return _vector(d, dim, "b")


def metric_from_dict(doc):
    """Build a :class:`MetricSpec` from a parsed metric document."""
    if not isinstance(doc, dict):
        raise ConfigurationError("metric document must be an object")
    family = doc.get("family")
    if family not in FAMILIES:
        raise ConfigurationError(f"family must be one of {', '.join(FAMILIES)}; got {family!r}")
    m = doc.get("m", 2)
    if not isinstance(m, int) or m < 1:
        raise ConfigurationError("m must be a positive integer")
    dim = m + 1
    b = _drift(doc, dim)
    if family == "euclidean":
        return M.euclidean(dim)
    if family == "randers":
        return M.randers(b, dim)
    if family == "two-order":
        return M.two_order(b, dim)
    if family == "matsumoto":
        return M.matsumoto(b, dim)
    if family == "alpha-beta":
        phi = doc.get("phi")
        if not isinstance(phi, list) or not phi:
            raise ConfigurationError("alpha-beta needs a non-empty list 'phi' of coefficients")
        return M.alpha_beta([float(c) for c in phi], b, dim)
    if family == "cui-shen":
        h = doc.get("h")
        if not isinstance(h, list) or not h:
            raise ConfigurationError("cui-shen needs a non-empty list 'h' of odd coefficients")
        return M.cui_shen([float(c) for c in h], b, m, dim)
    if family == "perturbed-quartic":
        eps = doc.get("epsilon")
        if not isinstance(eps, (int, float)) or not eps > 0:
            raise ConfigurationError("perturbed-quartic needs epsilon > 0")
        return M.perturbed_quartic(float(eps), b, dim)
    base_doc = doc.get("base")
    if not isinstance(base_doc, dict):
        raise ConfigurationError("composite needs a 'base' metric object")
    base = metric_from_dict({**base_doc, "m": m})
    if not base.reversible:
        raise ConfigurationError("composite base must be reversible")
    return M.composite(base, b, dim)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc


def load_metric(path):
    return metric_from_dict(_read_json(path))


def curve_from_dict(doc):
    if "points" in doc:
        curve = C.from_points(doc["points"])
    else:
        name = doc.get("name")
        if name not in C.CURVES:
            raise ConfigurationError(f"curve name must be one of {', '.join(C.CURVES)}; got {name!r}")
        try:
            curve = C.CURVES[name](**doc.get("params", {}))
        except TypeError as exc:
            raise ConfigurationError(f"bad parameters for curve {name!r}: {exc}") from exc
    if "anchors" in doc:
        curve.anchors = doc["anchors"]
        curve.__post_init__()
    return curve


def load_curve(spec):
    """A built-in curve name, a JSON curve document, or a text file of points."""
    if spec in C.CURVES:
        return C.CURVES[spec]()
    p = Path(spec)
    if not p.exists():
        raise ConfigurationError(f"unknown curve {spec!r} (not a built-in name or a file)")
    if p.suffix == ".json":
        return curve_from_dict(_read_json(p))
    try:
        pts = np.loadtxt(p, delimiter="," if p.suffix == ".csv" else None, ndmin=2)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse points from {p}: {exc}") from exc
    return C.from_points(pts, p.stem)
