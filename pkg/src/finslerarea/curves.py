"""Closed boundary curves gamma: [0, 1) -> R^3 for the Plateau solver."""
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from .errors import ConfigurationError, MetricDomainError

TWO_PI = 2.0 * np.pi


@dataclass
class BoundaryCurve:
    """Closed curve with derivative and three anchor parameters.

    ``gamma`` and ``dgamma`` map an array of parameters t (period 1) to
    points / tangents of shape (..., 3).
    """

    gamma: Callable
    dgamma: Callable
    name: str = "curve"
    anchors: Sequence[float] = (0.0, 1.0 / 3.0, 2.0 / 3.0)
    resolution: int = 256
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.anchors, dtype=float)
        if len(a) != 3 or np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] >= 1:
            raise ConfigurationError(f"anchors must be 3 increasing values in [0, 1), got {list(a)}")
        self.anchors = tuple(float(v) for v in a)

    def __call__(self, t):
        return np.asarray(self.gamma(np.asarray(t, dtype=float) % 1.0), dtype=float)

    def derivative(self, t):
        return np.asarray(self.dgamma(np.asarray(t, dtype=float) % 1.0), dtype=float)

    def sample(self, n=None):
        n = self.resolution if n is None else n
        return self(np.arange(n) / n)

    def closure_gap(self):
        return float(np.linalg.norm(self.gamma(np.array(0.0)) - self.gamma(np.array(1.0 - 1e-15))))

    def describe(self):
        return {"name": self.name, "anchors": list(self.anchors), **self.params}


def circle(radius=1.0, center=(0.0, 0.0, 0.0)):
    """Circle in the plane z = center[2]."""
    c = np.asarray(center, dtype=float)

    def g(t):
        th = TWO_PI * t
        return c + radius * np.stack((np.cos(th), np.sin(th), np.zeros_like(th)), axis=-1)

    def dg(t):
        th = TWO_PI * t
        return TWO_PI * radius * np.stack((-np.sin(th), np.cos(th), np.zeros_like(th)), axis=-1)

    return BoundaryCurve(g, dg, "circle", params={"radius": radius, "center": c.tolist()})


def ellipse(a=1.0, b=0.6):
    """Axis-aligned ellipse in the xy-plane."""
    def g(t):
        th = TWO_PI * t
        return np.stack((a * np.cos(th), b * np.sin(th), np.zeros_like(th)), axis=-1)

    def dg(t):
        th = TWO_PI * t
        return TWO_PI * np.stack((-a * np.sin(th), b * np.cos(th), np.zeros_like(th)), axis=-1)

    return BoundaryCurve(g, dg, "ellipse", params={"a": a, "b": b})


def helical_arc_closure(radius=1.0, height=0.3, waves=2):
    """Circle lifted by z = height * sin(waves * theta); a closed saddle-type curve."""
    def g(t):
        th = TWO_PI * t
        return np.stack((radius * np.cos(th), radius * np.sin(th), height * np.sin(waves * th)), axis=-1)

    def dg(t):
        th = TWO_PI * t
        return TWO_PI * np.stack((-radius * np.sin(th), radius * np.cos(th),
                                  waves * height * np.cos(waves * th)), axis=-1)

    return BoundaryCurve(g, dg, "helical-arc-closure",
                         params={"radius": radius, "height": height, "waves": waves})


def from_points(points, name="sampled"):
    """Periodic cubic spline through ``points`` (K, 3), chord-length parametrised."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] not in (2, 3) or len(P) < 4:
        raise ConfigurationError("need at least 4 points of dimension 2 or 3")
    if P.shape[1] == 2:
        P = np.column_stack((P, np.zeros(len(P))))
    if np.linalg.norm(P[0] - P[-1]) < 1e-12:
        P = P[:-1]
    closed = np.vstack((P, P[:1]))
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    if np.any(seg <= 0):
        raise ConfigurationError("consecutive points must be distinct")
    t = np.concatenate(([0.0], np.cumsum(seg))) / seg.sum()
    sp = CubicSpline(t, closed, bc_type="periodic")
    dsp = sp.derivative()
    return BoundaryCurve(sp, dsp, name, params={"points": len(P)})


def planar_polygon_smoothed(vertices=None, samples_per_edge=32, smoothing=0.02):
    """Polygon in the xy-plane with corners rounded by periodic Gaussian smoothing.

    ``smoothing`` is the kernel width as a fraction of the perimeter.
    Defaults to the unit square centred at the origin.
    """
    if vertices is None:
        vertices = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    V = np.asarray(vertices, dtype=float)
    if V.shape[1] == 2:
        V = np.column_stack((V, np.zeros(len(V))))
    W = np.vstack((V, V[:1]))
    s = np.linspace(0.0, 1.0, samples_per_edge, endpoint=False)
    dense = np.concatenate([a + s[:, None] * (b - a) for a, b in zip(W[:-1], W[1:])])
    sigma = smoothing * len(dense)
    if sigma > 0:
        dense = gaussian_filter1d(dense, sigma, axis=0, mode="wrap")
    c = from_points(dense, "planar-polygon-smoothed")
    c.params = {"vertices": V.tolist(), "smoothing": smoothing}
    return c


CURVES = {
    "circle": circle,
    "ellipse": ellipse,
    "helical-arc-closure": helical_arc_closure,
    "planar-polygon-smoothed": planar_polygon_smoothed,
}


def finsler_length(metric, curve, n=256):
    """int_0^1 F(gamma(t), gamma'(t)) dt by the periodic trapezoid rule."""
    if n < 64:
        raise ValueError("need at least 64 samples")
    t = np.arange(n) / n
    P, dP = curve(t), curve.derivative(t)
    if np.any(np.linalg.norm(dP, axis=-1) <= 1e-14):
        raise MetricDomainError("curve derivative vanishes at a sample")
    x = P if metric.x_dependent else None
    return float(np.mean(metric.value(dP, x)))
