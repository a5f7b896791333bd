"""Error norms, per-level reports and observed convergence rates."""

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import tri_rule

NORM_DEGREE = 8


def _values(obj, mesh, bary, kind):
    """Per-element values (T, nq, ...) of a discrete, piecewise or analytic object."""
    if obj is None:
        return 0.0
    if kind == "H1":
        if hasattr(obj, "grads"):
            return obj.grads(bary)
        if getattr(obj, "grad", None) is None:
            raise ValueError("analytic field has no gradient for an H1 norm")
        return obj.grad(mesh.geo.points(bary))
    if hasattr(obj, "values"):
        return obj.values(bary)
    return np.asarray(obj(mesh.geo.points(bary)))


def broken_norm(kind, a, b, mesh, degree=NORM_DEGREE):
    """Elementwise-quadrature norm of ``a - b``.

    ``kind`` is "L2" (values) or "H1" (piecewise gradients).  Either argument
    may be a DiscreteField, a piecewise/lifted field, an AnalyticField or None.
    """
    kind = kind.upper()
    if kind not in ("L2", "H1"):
        raise ValueError(f"unknown norm {kind!r}")
    r = tri_rule(degree)
    va = _values(a, mesh, r.points, kind)
    vb = _values(b, mesh, r.points, kind)
    if np.ndim(va) and np.ndim(vb) and np.shape(va) != np.shape(vb):
        raise ValueError(f"shape mismatch {np.shape(va)} vs {np.shape(vb)}")
    d = np.asarray(va - vb, dtype=float)
    sq = d.reshape(d.shape[0], d.shape[1], -1) ** 2
    w = r.weights[None, :] * mesh.geo.area[:, None]
    return float(np.sqrt(np.einsum("tq,tqc->", w, sq)))


def relative_error(ref, value):
    return abs(ref - value) / abs(ref)


def rate(coarse, fine):
    """log2(e_2h / e_h); None when undefined."""
    if coarse is None or fine is None or coarse <= 0.0 or fine <= 0.0:
        return None
    return math.log2(coarse / fine)


@dataclass
class ErrorReport:
    """Nonnegative error ``metrics`` plus signed ``values`` (eigenvalues, functionals)."""

    level: int
    h: float
    metrics: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.metrics.items():
            if v is not None and not v >= 0.0:
                raise ValueError(f"metric {k} must be nonnegative, got {v}")


@dataclass
class ConvergenceTable:
    reports: list
    rates: dict  # metric -> list aligned with reports (None at the first level)

    def records(self):
        out = []
        for i, rep in enumerate(self.reports):
            for name, value in rep.metrics.items():
                out.append(
                    {"level": rep.level, "h": rep.h, "metric": name,
                     "value": value, "rate": self.rates[name][i]}
                )
            for name, value in rep.values.items():
                out.append({"level": rep.level, "h": rep.h, "metric": name, "value": value, "rate": None})
        return out

    def column(self, name):
        return [rep.metrics.get(name, rep.values.get(name)) for rep in self.reports]


def rate_table(reports):
    """Per-metric rates against the next coarser level (absent across a level gap)."""
    if len(reports) < 2:
        raise ValueError("need at least two levels for rates")
    reports = sorted(reports, key=lambda r: r.level)
    names = []
    for rep in reports:
        names += [n for n in rep.metrics if n not in names]
    rates = {}
    for n in names:
        col = [rep.metrics.get(n) for rep in reports]
        rates[n] = [None] + [
            rate(col[i - 1], col[i]) if reports[i].level == reports[i - 1].level + 1 else None
            for i in range(1, len(col))
        ]
    return ConvergenceTable(reports, rates)
