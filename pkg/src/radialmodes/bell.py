"""Displaced-parity correlations and the three-party Bell-Klyshko combination."""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import StateError
from .gaussian import HBAR, GaussianState
from .units import AMU

__all__ = [
    "BellSettings",
    "ScanResult",
    "displaced_parity",
    "klyshko_b3",
    "b3_scan",
    "nm_conversion",
    "SETTING_FIELDS",
]

SETTING_FIELDS = ("x1", "x2", "x3", "p1", "p2", "p3", "x1p", "x2p", "x3p", "p1p", "p2p", "p3p")


@dataclass(frozen=True)
class BellSettings:
    """Two displacement points per observer, dimensionless quadratures.

    ``x[j], p[j]`` is the unprimed setting of observer ``j`` and
    ``xp[j], pp[j]`` the primed one.
    """

    x: tuple = (0.0, 0.0, 0.0)
    p: tuple = (0.0, 0.0, 0.0)
    xp: tuple = (0.0, 0.0, 0.0)
    pp: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("x", "p", "xp", "pp"):
            v = tuple(float(a) for a in getattr(self, name))
            if len(v) != 3 or not all(np.isfinite(v)):
                raise ValueError(f"setting {name} needs three finite values")
            object.__setattr__(self, name, v)

    def point(self, primed):
        """Phase-space point ``(x1, x2, x3, p1, p2, p3)`` with observer ``j``
        using the primed setting when ``primed[j]`` is true."""
        xs = [self.xp[j] if primed[j] else self.x[j] for j in range(3)]
        ps = [self.pp[j] if primed[j] else self.p[j] for j in range(3)]
        return np.array(xs + ps)

    def as_row(self):
        """Values in the order of :data:`SETTING_FIELDS`."""
        return list(self.x) + list(self.p) + list(self.xp) + list(self.pp)

    @classmethod
    def from_row(cls, row):
        row = [float(a) for a in row]
        return cls(tuple(row[0:3]), tuple(row[3:6]), tuple(row[6:9]), tuple(row[9:12]))

    def replace(self, **fields):
        """Copy with some of :data:`SETTING_FIELDS` changed."""
        row = dict(zip(SETTING_FIELDS, self.as_row()))
        for k, v in fields.items():
            if k not in row:
                raise KeyError(f"unknown setting {k!r}")
            row[k] = v
        return BellSettings.from_row([row[k] for k in SETTING_FIELDS])

    def swapped(self):
        """All observers exchange primed and unprimed settings."""
        return BellSettings(self.xp, self.pp, self.x, self.p)


def displaced_parity(state, point):
    """Expectation of the product of local parities displaced to ``point``.

    Equals ``pi**n`` times the unit-normalised Wigner function, i.e.
    ``exp(-r^T sigma^-1 r / 2) / (2**n sqrt(det sigma))`` with ``r`` measured
    from the mean.
    """
    r = np.asarray(point, dtype=float)
    if r.shape != state.mean.shape:
        raise StateError(f"point must have length {state.mean.size}")
    r = r - state.mean
    sign, logdet = np.linalg.slogdet(state.cm)
    if sign <= 0:
        raise StateError("singular covariance matrix")
    q = r @ np.linalg.solve(state.cm, r)
    return float(np.exp(-0.5 * q - 0.5 * logdet - state.n * np.log(2.0)))


_TERMS = (((0, 0, 1), 1.0), ((0, 1, 0), 1.0), ((1, 0, 0), 1.0), ((1, 1, 1), -1.0))


def klyshko_b3(state, settings):
    """``|P(a,b,c') + P(a,b',c) + P(a',b,c) - P(a',b',c')|`` with ``P`` the
    displaced parity of the three modes."""
    if state.n != 3:
        raise StateError(f"the Klyshko combination needs 3 modes, got {state.n}")
    return abs(sum(sign * displaced_parity(state, settings.point(pr)) for pr, sign in _TERMS))


@dataclass(frozen=True)
class ScanResult:
    """Rows of settings (ordered as :data:`SETTING_FIELDS`) and ``B3`` values."""

    settings: np.ndarray
    values: np.ndarray
    axes: tuple

    @property
    def argmax(self):
        return int(np.argmax(self.values))

    @property
    def best(self):
        return BellSettings.from_row(self.settings[self.argmax]), float(self.values[self.argmax])

    def violation_width(self, axis):
        """Extent along one scanned ``axis`` of the region ``B3 > 2`` through the maximum.

        Only rows that share the other scanned coordinates with the maximum
        are used; the width is the span of the contiguous run containing it.
        """
        i = SETTING_FIELDS.index(axis)
        best = self.settings[self.argmax]
        others = [SETTING_FIELDS.index(a) for a in self.axes if a != axis]
        mask = np.all(self.settings[:, others] == best[others], axis=1) if others else np.ones(len(self.values), bool)
        xs, vs = self.settings[mask, i], self.values[mask]
        order = np.argsort(xs)
        xs, vs = xs[order], vs[order]
        k = int(np.searchsorted(xs, best[i]))
        lo = hi = k
        while lo > 0 and vs[lo - 1] > 2:
            lo -= 1
        while hi < len(xs) - 1 and vs[hi + 1] > 2:
            hi += 1
        if vs[k] <= 2:
            return 0.0
        return float(xs[hi] - xs[lo])


def b3_scan(state, base, axes, ties=None):
    """Evaluate ``B3`` on the Cartesian grid of ``axes``.

    Parameters
    ----------
    base : BellSettings
        Values of the settings that are not scanned.
    axes : dict
        Maps setting names (see :data:`SETTING_FIELDS`) to 1-D arrays.
    ties : dict, optional
        Maps a setting name to a scanned one whose value it copies, e.g.
        ``{"x3": "x1"}``.

    Returns
    -------
    ScanResult
    """
    ties = dict(ties or {})
    names = list(axes)
    grids = [np.atleast_1d(np.asarray(axes[a], dtype=float)) for a in names]
    if not names or any(g.size == 0 for g in grids):
        raise ValueError("scan grid is empty")
    for a in names + list(ties):
        if a not in SETTING_FIELDS:
            raise ValueError(f"unknown setting {a!r}")
    for a, b in ties.items():
        if b not in axes:
            raise ValueError(f"tied setting {a!r} must follow a scanned axis, not {b!r}")
    rows, vals = [], []
    for combo in itertools.product(*grids):
        fields = dict(zip(names, combo))
        fields.update({a: fields[b] for a, b in ties.items()})
        s = base.replace(**fields)
        rows.append(s.as_row())
        vals.append(klyshko_b3(state, s))
    return ScanResult(np.array(rows), np.array(vals), tuple(names))


def nm_conversion(x_nm, ion_mass_amu, omega):
    """Dimensionless quadrature of a displacement of ``x_nm`` nanometres.

    ``x = x_phys * sqrt(m omega / hbar)`` (vacuum variance 1/2), with
    ``omega`` the physical angular frequency in rad/s.
    """
    if not ion_mass_amu > 0 or not np.all(np.asarray(omega) > 0):
        raise ValueError("mass and frequency must be positive")
    return np.asarray(x_nm, dtype=float) * 1e-9 * np.sqrt(ion_mass_amu * AMU * omega / HBAR)
