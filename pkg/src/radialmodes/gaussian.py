"""Gaussian states and symplectic dynamics in xxpp ordering.

Covariance matrices follow the convention in which the vacuum is ``I/2``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import StateError

__all__ = [
    "NormalModes",
    "HBAR",
    "KB",
    "symplectic_form",
    "symplectic_defect",
    "GaussianState",
    "SymplecticMatrix",
    "NoiseModel",
    "vacuum",
    "thermal_state",
    "ground_state",
    "propagator",
    "evolve_closed",
    "evolve_open",
    "thermal_occupation",
    "displace",
    "apply_symplectic",
    "symplectic_eigenvalues",
    "wigner",
    "frequency_jump",
    "rotation",
    "squeezer",
    "random_symplectic",
    "random_passive",
]

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J / K


def symplectic_form(n):
    """Symplectic form ``[[0, I], [-I, 0]]`` for ``n`` modes."""
    om = np.zeros((2 * n, 2 * n))
    om[:n, n:] = np.eye(n)
    om[n:, :n] = -np.eye(n)
    return om


def _as_square(m, name):
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise StateError(f"{name} must be a square matrix of even size, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix ``cm`` and first moments ``mean`` of an n-mode state."""

    cm: np.ndarray
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        cm = _as_square(self.cm, "covariance matrix")
        if not np.allclose(cm, cm.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cm).max())):
            raise StateError("covariance matrix is not symmetric")
        cm = 0.5 * (cm + cm.T)
        mean = np.zeros(cm.shape[0]) if self.mean is None else np.array(self.mean, dtype=float)
        if mean.shape != (cm.shape[0],):
            raise StateError(f"mean vector must have length {cm.shape[0]}")
        cm.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "cm", cm)
        object.__setattr__(self, "mean", mean)

    @property
    def n(self):
        return self.cm.shape[0] // 2

    def uncertainty_min_eigenvalue(self):
        """Smallest eigenvalue of ``cm + i Omega / 2`` (non-negative when physical)."""
        return float(np.linalg.eigvalsh(self.cm + 0.5j * symplectic_form(self.n)).min())

    def is_physical(self, tol=1e-10):
        return self.uncertainty_min_eigenvalue() >= -tol

    def reduced(self, modes):
        """State of the listed modes (zero-based), tracing out the rest."""
        modes = list(modes)
        idx = modes + [m + self.n for m in modes]
        return GaussianState(self.cm[np.ix_(idx, idx)], self.mean[idx])


@dataclass(frozen=True)
class SymplecticMatrix:
    """A validated symplectic matrix ``s`` with ``s.T @ Omega @ s == Omega``."""

    s: np.ndarray
    tol: float = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        s = _as_square(self.s, "symplectic matrix")
        d = symplectic_defect(s)
        if d > self.tol:
            raise StateError(f"matrix is not symplectic: defect {d:.3e} exceeds {self.tol:.1e}")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def n(self):
        return self.s.shape[0] // 2

    def __matmul__(self, other):
        other = other.s if isinstance(other, SymplecticMatrix) else other
        return SymplecticMatrix(self.s @ other, tol=max(self.tol, 1e-8))

    def inverse(self):
        om = symplectic_form(self.n)
        return SymplecticMatrix(-om @ self.s.T @ om, tol=self.tol)


def symplectic_defect(s):
    """Frobenius norm of ``s.T Omega s - Omega``."""
    om = symplectic_form(s.shape[0] // 2)
    return float(np.linalg.norm(s.T @ om @ s - om))


@dataclass(frozen=True)
class NoiseModel:
    """Thermal bath coupling: loss rate ``gamma`` and per-mode occupations."""

    gamma: float
    occupations: tuple

    def __post_init__(self):
        occ = tuple(float(x) for x in self.occupations)
        if not self.gamma >= 0:
            raise StateError(f"loss rate must be non-negative, got {self.gamma}")
        if any(not x >= 0 for x in occ):
            raise StateError("thermal occupations must be non-negative")
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def from_heating_rate(cls, epsilon, occupations):
        """Noise with loss rate fixed so that the mean heating rate is ``epsilon``."""
        occ = np.asarray(occupations, dtype=float)
        return cls(float(epsilon) / float(occ.mean()), tuple(occ))

    @property
    def heating_rates(self):
        return tuple(self.gamma * x for x in self.occupations)

    def steady_cm(self):
        """Bath covariance matrix ``diag(N + 1/2) (+) diag(N + 1/2)``."""
        v = np.asarray(self.occupations) + 0.5
        return np.diag(np.concatenate([v, v]))


def vacuum(n):
    return GaussianState(0.5 * np.eye(2 * n))


def thermal_state(occupations):
    v = np.asarray(occupations, dtype=float) + 0.5
    return GaussianState(np.diag(np.concatenate([v, v])))


def _sym_sqrt_inv(m):
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w.min() <= 1e-14 * w.max():
        raise StateError(
            f"matrix is not safely positive definite (eigenvalue {w.min():.3e}); the chain is unstable"
        )
    return (v / np.sqrt(w)) @ v.T


def ground_state(model, frame=None):
    """Ground state of a chain model.

    With ``frame`` given, quadratures are expressed in the units of that
    reference (see :func:`radialmodes.chain.quadratic_form`).
    """
    from .chain import quadratic_form

    n = model.n
    k = quadratic_form(model, frame)
    a = np.sqrt(np.diag(k[n:, n:]))
    sx = a[:, None] * _sym_sqrt_inv(a[:, None] * k[:n, :n] * a[None, :]) * a[None, :]
    cm = np.zeros((2 * n, 2 * n))
    cm[:n, :n] = sx
    cm[n:, n:] = np.linalg.inv(sx)
    # symmetrise, then apply the vacuum-1/2 normalisation
    return GaussianState(0.25 * (cm + cm.T))


class NormalModes:
    """Exact ``exp(Omega H t)`` for ``H = hx (+) hp`` with both blocks positive definite.

    With ``x = hp^(1/2) y`` and ``q = hp^(1/2) p`` the motion is
    ``y'' = -M y``, ``M = hp^(1/2) hx hp^(1/2)``, solved mode by mode. The
    decomposition is done once, so the map at many times is cheap and stays
    symplectic to rounding even for very long times.

    Raises
    ------
    StateError
        If either block is not positive definite.
    """

    def __init__(self, hx, hp):
        w, v = np.linalg.eigh(hp)
        if w.min() <= 0:
            raise StateError("momentum block is not positive definite")
        r = (v * np.sqrt(w)) @ v.T
        lam2, vm = np.linalg.eigh(r @ hx @ r)
        if lam2.min() <= 0:
            raise StateError("position block is not positive definite")
        self.frequencies = np.sqrt(lam2)
        self._a = vm.T @ np.linalg.solve(r, np.eye(len(w)))  # x -> z
        self._b = vm.T @ r  # p -> z'
        self._ai = np.linalg.inv(self._a)
        self._bi = np.linalg.inv(self._b)

    def at(self, t):
        lam = self.frequencies
        c, s = np.cos(lam * t), np.sin(lam * t)
        a, b = self._a, self._b
        xx = self._ai @ (c[:, None] * a)
        xp = self._ai @ ((s / lam)[:, None] * b)
        px = self._bi @ ((-lam * s)[:, None] * a)
        pp = self._bi @ (c[:, None] * b)
        return np.block([[xx, xp], [px, pp]])

    def column(self, k, times):
        """Column ``k`` (an x quadrature) and column ``n + k`` of the map at each time.

        Returns
        -------
        ndarray, shape (len(times), 2n, 2)
        """
        lam = self.frequencies
        t = np.asarray(times, dtype=float)
        c, s = np.cos(np.outer(t, lam)), np.sin(np.outer(t, lam))
        ax, bp = self._a[:, k], self._b[:, k]
        colx = np.concatenate([(c * ax) @ self._ai.T, (-lam * s * ax) @ self._bi.T], axis=1)
        colp = np.concatenate([(s / lam * bp) @ self._ai.T, (c * bp) @ self._bi.T], axis=1)
        return np.stack([colx, colp], axis=2)


def propagator(h, t):
    """Symplectic propagator ``exp(Omega H t)`` of the quadratic Hamiltonian ``R^T H R``.

    Stable block-diagonal ``H`` (the radial-mode case) is exponentiated through
    its normal modes; anything else falls back to scaling and squaring.
    """
    h = _as_square(h, "Hamiltonian")
    if not np.allclose(h, h.T, atol=1e-12 * max(1.0, np.abs(h).max())):
        raise StateError("Hamiltonian matrix is not symmetric")
    n = h.shape[0] // 2
    t = float(t)
    s = None
    if not np.any(h[:n, n:]) and not np.any(h[n:, :n]):
        try:
            s = NormalModes(h[:n, :n], h[n:, n:]).at(t)
        except StateError:
            s = None
    if s is None:
        s = expm(symplectic_form(n) @ h * t)
    return SymplecticMatrix(s, tol=max(1e-10, 1e-13 * np.linalg.norm(s) ** 2))


def apply_symplectic(state, s):
    s = s.s if isinstance(s, SymplecticMatrix) else np.asarray(s, dtype=float)
    return GaussianState(s @ state.cm @ s.T, s @ state.mean)


def evolve_closed(state, h, t):
    """Evolve ``state`` for time ``t`` under the Hamiltonian matrix ``h``."""
    return apply_symplectic(state, propagator(h, t))


def evolve_open(state, h, noise, t, steady_cm=None):
    """Evolution with a thermal bath.

    Solves ``d sigma/dt = A sigma + sigma A^T + gamma sigma_inf`` with
    ``A = Omega H - gamma/2``, exactly over the interval, using the
    augmented-matrix exponential of Van Loan.

    Parameters
    ----------
    steady_cm : array_like, optional
        Bath covariance matrix; defaults to ``noise.steady_cm()``.
    """
    n = state.n
    g = float(noise.gamma)
    if g == 0.0:
        return evolve_closed(state, h, t)
    a = symplectic_form(n) @ np.asarray(h, dtype=float) - 0.5 * g * np.eye(2 * n)
    sinf = noise.steady_cm() if steady_cm is None else np.asarray(steady_cm, dtype=float)
    m = np.zeros((4 * n, 4 * n))
    m[: 2 * n, : 2 * n] = a
    m[: 2 * n, 2 * n :] = g * sinf
    m[2 * n :, 2 * n :] = -a.T
    e = expm(m * float(t))
    f = e[: 2 * n, : 2 * n]
    q = e[: 2 * n, 2 * n :] @ f.T
    cm = f @ state.cm @ f.T + 0.5 * (q + q.T)
    return GaussianState(0.5 * (cm + cm.T), f @ state.mean)


def thermal_occupation(omega, temperature):
    """Bose occupation ``1/(exp(hbar omega / kB T) - 1)``.

    ``omega`` is a physical angular frequency in rad/s, ``temperature`` in K.
    """
    if not omega > 0 or temperature < 0:
        raise ValueError("need omega > 0 and temperature >= 0")
    if temperature == 0:
        return 0.0
    return float(1.0 / np.expm1(HBAR * omega / (KB * temperature)))


def displace(state, shift):
    shift = np.asarray(shift, dtype=float)
    if shift.shape != state.mean.shape:
        raise StateError(f"shift must have length {state.mean.size}")
    return GaussianState(state.cm, state.mean + shift)


def symplectic_eigenvalues(cm):
    """Williamson spectrum of a covariance matrix, sorted ascending."""
    cm = _as_square(cm, "covariance matrix")
    if not np.allclose(cm, cm.T, atol=1e-10 * max(1.0, np.abs(cm).max())):
        raise StateError("covariance matrix is not symmetric")
    n = cm.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cm)))
    return ev[::2]


def wigner(state, point):
    """Wigner function at ``point``, normalised to unit integral."""
    r = np.asarray(point, dtype=float) - state.mean
    det = np.linalg.det(state.cm)
    if not det > 0:
        raise StateError("singular covariance matrix")
    q = r @ np.linalg.solve(state.cm, r)
    return float(np.exp(-0.5 * q) / ((2 * np.pi) ** state.n * np.sqrt(det)))


def rotation(theta):
    """Single-mode phase-space rotation ``exp(Omega theta)``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def squeezer(alpha):
    """``diag(alpha, 1/alpha)``."""
    return np.diag([alpha, 1.0 / alpha])


def frequency_jump(alpha, omega, t):
    """Single-mode map for a sudden change of frequency ``omega -> alpha omega``.

    Quadratures are measured in units of the original frequency, and the
    angle ``omega alpha t`` is accumulated before switching back. This is the
    map produced by ``propagator`` of the quadratic form ``diag(alpha**2 omega, omega)``.
    """
    d = np.diag([np.sqrt(alpha), 1.0 / np.sqrt(alpha)])
    return np.linalg.inv(d) @ rotation(omega * alpha * t) @ d


def random_passive(n, rng):
    """Haar-random orthogonal symplectic matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def random_symplectic(n, rng, max_squeeze=1.0):
    """Random symplectic ``O1 Z O2`` with log-squeezings up to ``max_squeeze``."""
    r = rng.uniform(-max_squeeze, max_squeeze, n)
    z = np.diag(np.concatenate([np.exp(r), np.exp(-r)]))
    return random_passive(n, rng) @ z @ random_passive(n, rng)
