"""Discrete weighted domains, nodal fields and weighted integration.

Every domain is a vertex grid. Node ``i`` owns a dual cell (the part of
the domain closer to ``x_i`` than to its neighbours); ``cell_volumes``
are the exact dual-cell volumes, so they sum to the geometric volume.
Weights are sampled at dual-cell midpoints, never at a vertex, which
keeps power weights finite at the origin node of a ball.
"""

import csv
import io
from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np

__all__ = [
    "WeightedDomain",
    "ScalarField",
    "DomainMismatch",
    "interval",
    "radial_ball",
    "box",
    "power_weight",
    "unit_ball_volume",
    "sphere_area",
    "integrate",
    "lp_norm",
    "level_set_measure",
    "a2_constant_estimate",
    "field_to_csv",
    "field_from_csv",
]


class DomainMismatch(ValueError):
    """A field was used with a domain it does not live on."""


def unit_ball_volume(n):
    return pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_area(n):
    """Surface area of the unit sphere in ``R^n``."""
    return n * unit_ball_volume(n)


def power_weight(alpha):
    """Weight ``|x|**alpha`` usable with any geometry."""
    def w(x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if x.ndim == 1 else np.linalg.norm(x, axis=-1)
        return r ** alpha
    w.__name__ = "abs_x_pow_%g" % alpha
    return w


@dataclass(frozen=True, eq=False)
class WeightedDomain:
    geometry: str                 # "interval" | "radial-ball" | "box"
    nodes: np.ndarray             # (N,) or (N, d)
    cell_volumes: np.ndarray
    weight: np.ndarray
    samples: np.ndarray           # where the weight was sampled
    axes: tuple                   # vertex coordinates per axis
    boundary: np.ndarray          # Dirichlet nodes
    dimension: int = 1
    radius: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.cell_volumes <= 0):
            raise ValueError("cell volumes must be positive")
        if np.any(self.weight < 0) or not np.all(np.isfinite(self.weight)):
            raise ValueError("weight must be finite and nonnegative")
        if not self.total_mass > 0:
            raise ValueError("weight has zero total mass")

    @property
    def size(self):
        return len(self.cell_volumes)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def mass(self):
        """Per-node weighted measure ``v_i * vol_i``."""
        return self.weight * self.cell_volumes

    @property
    def total_mass(self):
        return float(np.sum(self.weight * self.cell_volumes))

    @property
    def volume(self):
        return float(np.sum(self.cell_volumes))

    @property
    def radii(self):
        """``|x|`` at each node."""
        if self.nodes.ndim == 1:
            return np.abs(self.nodes)
        return np.linalg.norm(self.nodes, axis=1)

    @property
    def interior(self):
        return ~self.boundary

    def field(self, values):
        """Wrap ``values`` (array or callable of node coordinates) as a field."""
        if callable(values):
            values = values(self.nodes)
        return ScalarField(self, np.broadcast_to(
            np.asarray(values, dtype=float), (self.size,)).copy())

    def with_weight(self, weight):
        return _build(self.geometry, self.axes, weight, self.dimension,
                      self.radius, self.meta)

    def __repr__(self):
        return "WeightedDomain(%s, dim=%d, nodes=%d, v(Omega)=%.6g)" % (
            self.geometry, self.dimension, self.size, self.total_mass)


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: WeightedDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.size,):
            raise DomainMismatch("field has %s values, domain has %d nodes"
                                 % (v.shape, self.domain.size))
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def _wrap(self, values):
        return ScalarField(self.domain, values)

    def __add__(self, other):
        return self._wrap(self.values + _vals(other, self.domain))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - _vals(other, self.domain))

    def __mul__(self, other):
        return self._wrap(self.values * _vals(other, self.domain))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / _vals(other, self.domain))

    def __neg__(self):
        return self._wrap(-self.values)

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def max(self):
        return float(self.values.max())


def _vals(g, dom):
    """Nodal values of ``g`` on ``dom`` (field, array or scalar)."""
    if isinstance(g, ScalarField):
        if g.domain is not dom:
            raise DomainMismatch("field lives on a different domain")
        return g.values
    g = np.asarray(g, dtype=float)
    if g.ndim == 0:
        return np.full(dom.size, float(g))
    if g.shape != (dom.size,):
        raise DomainMismatch("expected %d nodal values, got %s"
                             % (dom.size, g.shape))
    return g


# -- construction -----------------------------------------------------------

def _dual_edges(x):
    """Dual-cell boundaries around each vertex of the sorted grid ``x``."""
    mid = 0.5 * (x[1:] + x[:-1])
    return np.concatenate(([x[0]], mid)), np.concatenate((mid, [x[-1]]))


def _sample_weight(weight, pts, n):
    if weight is None:
        return np.ones(n)
    if callable(weight):
        w = np.asarray(weight(pts), dtype=float)
    else:
        w = np.asarray(weight, dtype=float)
    return np.broadcast_to(w, (n,)).astype(float)


def _build(geometry, axes, weight, dimension, radius, meta):
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    for a in axes:
        if len(a) < 2 or np.any(np.diff(a) <= 0):
            raise ValueError("axis vertices must be strictly increasing")
    if geometry == "radial-ball":
        r = axes[0]
        lo, hi = _dual_edges(r)
        n = dimension
        vol = unit_ball_volume(n) * (hi ** n - lo ** n)
        samples = 0.5 * (lo + hi)
        nodes = r
        boundary = np.zeros(len(r), bool)
        boundary[-1] = True
    else:
        lows, highs = zip(*(_dual_edges(a) for a in axes))
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        widths = [h - l for l, h in zip(lows, highs)]
        vol = np.ones(1)
        for w in widths:
            vol = np.multiply.outer(vol, w)
        vol = vol.ravel()
        centers = np.meshgrid(*[0.5 * (l + h) for l, h in zip(lows, highs)],
                              indexing="ij")
        samples = np.stack([c.ravel() for c in centers], axis=1)
        edge = np.zeros([len(a) for a in axes], bool)
        for k in range(len(axes)):
            sl = [slice(None)] * len(axes)
            sl[k] = 0
            edge[tuple(sl)] = True
            sl[k] = -1
            edge[tuple(sl)] = True
        boundary = edge.ravel()
        if geometry == "interval":
            nodes = nodes[:, 0]
            samples = samples[:, 0]
    w = _sample_weight(weight, samples, len(vol))
    return WeightedDomain(geometry, nodes, vol, w, samples, axes, boundary,
                          dimension, radius, dict(meta or {}))


def interval(a=0.0, b=1.0, cells=100, weight=None):
    """``[a, b]`` with ``cells`` uniform elements (``cells + 1`` vertices)."""
    if cells < 1:
        raise ValueError("need at least one cell")
    x = np.linspace(a, b, cells + 1)
    return _build("interval", (x,), weight, 1, None, {"cells": cells})


def radial_ball(n=3, radius=1.0, cells=100, weight=None, edges=None):
    """Ball ``B(0, radius)`` in ``R^n`` reduced to its radial coordinate.

    ``edges`` overrides the uniform vertex radii (must start at 0 and end
    at ``radius``), e.g. for geometrically graded grids.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    if edges is None:
        r = np.linspace(0.0, radius, cells + 1)
    else:
        r = np.asarray(edges, dtype=float)
        if r[0] != 0 or not np.isclose(r[-1], radius):
            raise ValueError("radial vertices must span [0, radius]")
    return _build("radial-ball", (r,), weight, n, float(radius),
                  {"cells": len(r) - 1})


def box(axes, weight=None):
    """Tensor-product box; ``axes`` is a list of ``(a, b, cells)`` triples."""
    coords = [np.linspace(a, b, c + 1) for a, b, c in axes]
    return _build("box", coords, weight, len(coords), None,
                  {"cells": tuple(c for _, _, c in axes)})


# -- integration ------------------------------------------------------------

def integrate(g, dom):
    """Weighted integral ``sum_i g_i v_i vol_i``."""
    return float(np.dot(_vals(g, dom), dom.mass))


def lp_norm(g, p, dom):
    """``(int |g|^p v dx)^(1/p)``; ``p = inf`` gives the max over nodes of positive mass."""
    if p < 1:
        raise ValueError("lp_norm needs p >= 1, got %r" % (p,))
    g = np.abs(_vals(g, dom))
    if np.isinf(p):
        live = dom.mass > 0
        return float(g[live].max()) if live.any() else 0.0
    m = g.max()
    if m == 0:
        return 0.0
    # scale out the max so large p cannot overflow
    return float(m * np.dot((g / m) ** p, dom.mass) ** (1.0 / p))


def level_set_measure(u, r, dom):
    """``v({u > r})``, counting whole dual cells."""
    return float(dom.mass[_vals(u, dom) > r].sum())


def a2_constant_estimate(weight, dom, balls, quad_cells=400):
    """Lower bound for the Muckenhoupt ``A_2`` constant of ``weight``.

    Each ball ``(center, radius)`` is integrated by radial quadrature in
    ``dom.dimension`` dimensions; only balls centred at the origin are
    supported for radial domains. Returns ``inf`` if the weight vanishes
    on a whole ball.
    """
    if not balls:
        raise ValueError("need at least one ball")
    n = dom.dimension
    best = 0.0
    for center, rad in balls:
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if dom.geometry == "radial-ball" and np.any(center != 0):
            raise ValueError("radial domains only admit balls centred at 0")
        radial = dom.geometry in ("radial-ball", "interval")
        avg_v, avg_inv = _ball_averages(weight, center, rad, n, quad_cells,
                                        radial)
        if avg_v == 0 or not np.isfinite(avg_inv):
            return float("inf")
        best = max(best, avg_v * avg_inv)
    return best


def _ball_averages(weight, center, rad, n, cells, radial):
    # midpoint rule in r for centred balls, otherwise a uniform tensor grid
    # restricted to the ball
    if np.all(center == 0):
        e = np.linspace(0.0, rad, cells + 1)
        rm = 0.5 * (e[1:] + e[:-1])
        shell = e[1:] ** n - e[:-1] ** n
        if radial:
            wv = np.asarray(weight(rm), dtype=float)
        else:
            pts = np.zeros((cells, n))
            pts[:, 0] = rm
            wv = np.asarray(weight(pts), dtype=float)
        total = rad ** n
        avg_v = float(np.dot(wv, shell) / total)
        if np.any(wv <= 0):
            return avg_v, np.inf
        return avg_v, float(np.dot(1.0 / wv, shell) / total)
    m = 64 if n <= 2 else 24
    g = [np.linspace(c - rad, c + rad, m + 1) for c in center]
    mids = [0.5 * (a[1:] + a[:-1]) for a in g]
    mesh = np.meshgrid(*mids, indexing="ij")
    pts = np.stack([x.ravel() for x in mesh], axis=1)
    inside = np.linalg.norm(pts - center, axis=1) < rad
    wv = np.asarray(weight(pts[inside, 0] if radial else pts[inside]), float)
    if np.any(wv == 0):
        return float(wv.mean()), np.inf
    return float(wv.mean()), float((1.0 / wv).mean())


# -- serialization ----------------------------------------------------------

def field_to_csv(g, path=None, name="value"):
    """CSV with one coordinate column per axis and one value column."""
    dom = g.domain
    coords = dom.nodes.reshape(dom.size, -1)
    header = (["r"] if dom.geometry == "radial-ball"
              else ["x%d" % k for k in range(coords.shape[1])])
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header + [name])
    for xs, val in zip(coords, g.values):
        w.writerow([repr(float(c)) for c in xs] + [repr(float(val))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def field_from_csv(path_or_text, dom=None):
    """Read a field CSV; without ``dom`` a unit-weight domain is rebuilt
    from the coordinate column (interval or radial grids only)."""
    text = path_or_text
    if "\n" not in text:
        with open(text) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    values = body[:, -1]
    if dom is None:
        coords = body[:, 0]
        if header[0] == "r":
            dom = radial_ball(radius=coords[-1], edges=coords)
        elif body.shape[1] == 2:
            dom = _build("interval", (coords,), None, 1, None, {})
        else:
            raise ValueError("cannot rebuild a box domain from CSV")
    return ScalarField(dom, values)
