"""Static model of a linear ion chain: geometry, effective radial frequencies
and the quadratic form governing the radial modes.

Everything here is dimensionless: frequencies are in units of the
longitudinal trap frequency, lengths in units of the natural length scale
fixed by the Coulomb and longitudinal forces, and hbar = 1.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import RadialInstabilityError, SolverError

__all__ = [
    "ChainConfig",
    "ChainModel",
    "equilibrium_positions",
    "coulomb_matrix",
    "effective_frequencies",
    "coupling_matrix",
    "bare_for_effective",
    "build_model",
    "model_from_positions",
    "hamiltonian",
    "quadratic_form",
    "generator",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChainConfig:
    """Ion count and bare radial frequencies (units of the longitudinal frequency).

    Parameters
    ----------
    n : int
        Number of ions.
    bare_frequencies : sequence of float
        Radial trap frequency of each ion.
    longitudinal_frequency_hz : float, optional
        Physical longitudinal angular frequency in rad/s, used only when
        reporting in physical units.
    """

    n: int
    bare_frequencies: tuple
    longitudinal_frequency_hz: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"ion count must be a positive integer, got {self.n}")
        w = tuple(float(x) for x in self.bare_frequencies)
        if len(w) != self.n:
            raise ValueError(f"expected {self.n} bare frequencies, got {len(w)}")
        if not all(np.isfinite(x) and x > 0 for x in w):
            raise ValueError("bare frequencies must be finite and positive")
        object.__setattr__(self, "bare_frequencies", w)

    @classmethod
    def uniform(cls, n, frequency, longitudinal_frequency_hz=None):
        return cls(n, (float(frequency),) * n, longitudinal_frequency_hz)

    def with_frequencies(self, bare_frequencies):
        return ChainConfig(self.n, tuple(bare_frequencies), self.longitudinal_frequency_hz)


@dataclass(frozen=True)
class ChainModel:
    """Chain geometry together with the Coulomb-corrected radial couplings."""

    config: ChainConfig
    positions: np.ndarray
    effective_frequencies: np.ndarray
    coupling: np.ndarray
    coulomb: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.config.n

    @property
    def bare_frequencies(self):
        return np.array(self.config.bare_frequencies)


def _forces(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1), d


def equilibrium_positions(n, tol=1e-13, max_iter=200):
    """Equilibrium positions of ``n`` ions in a harmonic longitudinal well.

    Solves the force balance of the potential
    ``sum_j u_j**2 / 2 + sum_{j<k} 1 / |u_j - u_k|`` with a damped Newton
    iteration started from an even spacing of ``2 n**-0.56``.

    Returns
    -------
    numpy.ndarray
        Sorted positions, mirror symmetric about the origin.

    Raises
    ------
    SolverError
        If the residual does not fall below ``tol`` within ``max_iter`` steps.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"ion count must be a positive integer, got {n}")
    n = int(n)
    if n == 1:
        return _frozen([0.0])
    u = 2.0 * n**-0.56 * (np.arange(n) - (n - 1) / 2)
    f, d = _forces(u)
    res = np.max(np.abs(f))
    for _ in range(max_iter):
        if res < tol:
            break
        c = 2.0 / np.abs(d) ** 3
        jac = -c
        np.fill_diagonal(jac, 1.0 + c.sum(axis=1))
        step = np.linalg.solve(jac, -f)
        lam = 1.0
        while lam > 1e-6:
            trial = u + lam * step
            if np.all(np.diff(trial) > 0):
                ft, dt = _forces(trial)
                rt = np.max(np.abs(ft))
                if rt < res:
                    break
            lam *= 0.5
        else:
            raise SolverError("equilibrium solver stalled", res)
        u, f, d, res = trial, ft, dt, rt
    if res >= tol:
        raise SolverError("equilibrium solver did not converge", res)
    # the exact solution is mirror symmetric; remove rounding asymmetry
    u = 0.5 * (u - u[::-1])
    return _frozen(u)


def coulomb_matrix(positions):
    """Matrix of ``1/|u_j - u_k|**3`` with a zero diagonal."""
    u = np.asarray(positions, dtype=float)
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    return 1.0 / d**3


def effective_frequencies(config, positions):
    """Coulomb-corrected radial frequencies.

    ``w_eff_j = sqrt(w_j**2 - sum_{l != j} 1/|u_j - u_l|**3)``.

    Raises
    ------
    RadialInstabilityError
        If any radicand is not positive.
    """
    w = np.asarray(config.bare_frequencies, dtype=float)
    rad = w**2 - coulomb_matrix(positions).sum(axis=1)
    for j, r in enumerate(rad):
        if not r > 0:
            raise RadialInstabilityError(j + 1, float(r))
    return np.sqrt(rad)


def coupling_matrix(effective, positions):
    """Coupling matrix with diagonal ``w_eff`` and off-diagonal
    ``1/(sqrt(w_eff_j w_eff_k) |u_j - u_k|**3)``."""
    we = np.asarray(effective, dtype=float)
    c = coulomb_matrix(positions)
    if c.shape[0] != we.size:
        raise ValueError("frequency and position lengths differ")
    k = c / np.sqrt(np.outer(we, we))
    k[np.diag_indices_from(k)] = we
    return k


def bare_for_effective(effective, positions):
    """Bare frequencies that produce the requested effective frequencies."""
    we = np.asarray(effective, dtype=float)
    return np.sqrt(we**2 + coulomb_matrix(positions).sum(axis=1))


def model_from_positions(config, positions):
    """Build a model for arbitrary (possibly synthetic) ion positions."""
    u = np.asarray(positions, dtype=float)
    if u.size != config.n:
        raise ValueError("position count differs from ion count")
    we = effective_frequencies(config, u)
    return ChainModel(
        config=config,
        positions=_frozen(u),
        effective_frequencies=_frozen(we),
        coupling=_frozen(coupling_matrix(we, u)),
        coulomb=_frozen(coulomb_matrix(u)),
    )


def build_model(config):
    """Model of ``config`` at its equilibrium geometry."""
    return model_from_positions(config, equilibrium_positions(config.n))


def hamiltonian(model):
    """The matrix ``kappa (+) diag(w_eff)`` in xxpp ordering."""
    n = model.n
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = model.coupling
    h[n:, n:] = np.diag(model.effective_frequencies)
    return h


def quadratic_form(model, frame=None):
    """Quadratic form of the radial energy in rescaled quadratures.

    Quadratures of ion ``j`` are measured in units set by the reference
    frequency ``frame[j]`` (default: the model's own effective frequencies,
    in which case the result equals :func:`hamiltonian`). A fixed frame lets
    a sequence of different trap settings act on a common set of variables.
    """
    n = model.n
    f = model.effective_frequencies if frame is None else np.asarray(frame, dtype=float)
    if f.shape != (n,) or np.any(f <= 0):
        raise ValueError("frame must hold n positive frequencies")
    v = model.coulomb + np.diag(model.effective_frequencies**2)
    s = 1.0 / np.sqrt(f)
    k = np.zeros((2 * n, 2 * n))
    k[:n, :n] = s[:, None] * v * s[None, :]
    k[n:, n:] = np.diag(f)
    return k


def generator(model, frame=None):
    """Matrix ``H`` whose propagator ``exp(Omega H t)`` gives the chain dynamics.

    This is half of :func:`quadratic_form`, i.e. the radial Hamiltonian is
    written as ``R^T H R``. All simulations use this generator.
    """
    return 0.5 * quadratic_form(model, frame)
