"""Euler (Bloch-Messiah) and Reck decompositions of symplectic matrices."""

from dataclasses import dataclass

import numpy as np

from ..gaussian import rotation, symplectic_form

__all__ = [
    "Phase",
    "TwoModeRotation",
    "euler_decompose",
    "euler_recompose",
    "single_mode_euler",
    "passive_to_unitary",
    "unitary_to_passive",
    "reck_decompose",
    "reck_recompose",
    "primitive_matrix",
    "is_orthogonal_symplectic",
]


@dataclass(frozen=True)
class Phase:
    """Rotation of mode ``k`` (zero-based) by ``phi`` in phase space."""

    k: int
    phi: float


@dataclass(frozen=True)
class TwoModeRotation:
    """Passive mixing of modes ``j`` and ``k``.

    On the annihilation operators ``(a_j, a_k)`` it acts as
    ``[[e^{i phi} cos(theta), -sin(theta)], [e^{i phi} sin(theta), cos(theta)]]``.
    """

    j: int
    k: int
    theta: float
    phi: float = 0.0


def is_orthogonal_symplectic(o, tol=1e-9):
    o = np.asarray(o)
    om = symplectic_form(o.shape[0] // 2)
    return (
        np.linalg.norm(o.T @ o - np.eye(o.shape[0])) < tol
        and np.linalg.norm(o.T @ om @ o - om) < tol
    )


def passive_to_unitary(o):
    """Unitary ``X + iY`` of an orthogonal symplectic ``[[X, -Y], [Y, X]]``."""
    n = o.shape[0] // 2
    return o[:n, :n] + 1j * o[n:, :n]


def unitary_to_passive(u):
    u = np.asarray(u)
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def _symplectic_basis(vecs, n, om):
    """Complete the columns ``vecs`` (eigenvectors with eigenvalue above 1)
    to an orthogonal symplectic matrix using the remaining unit-eigenvalue space."""
    cols = list(vecs)
    basis = cols + [-om @ v for v in cols]
    # orthonormal complement, filled pairwise with (v, -Omega v)
    proj = np.eye(2 * n)
    if basis:
        q, _ = np.linalg.qr(np.column_stack(basis))
        proj -= q @ q.T
    while len(cols) < n:
        w, v = np.linalg.eigh(proj)
        cand = v[:, np.argmax(w)]
        cols.append(cand)
        pair = np.column_stack([cand, -om @ cand])
        proj = proj - pair @ pair.T
    return np.column_stack(cols + [-om @ v for v in cols])


def euler_decompose(s, tol=1e-10):
    """Euler decomposition ``S = O1 Z O2`` with ``Z = diag(e^r, e^-r)``.

    Parameters
    ----------
    s : (2n, 2n) array_like
        Symplectic matrix in xxpp ordering.

    Returns
    -------
    o1 : ndarray
        Orthogonal symplectic matrix.
    r : ndarray
        Non-negative log-squeezings, one per mode.
    o2 : ndarray
        Orthogonal symplectic matrix.
    """
    s = np.asarray(s.s if hasattr(s, "s") else s, dtype=float)
    n = s.shape[0] // 2
    om = symplectic_form(n)
    m = s.T @ s
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    big = [i for i in range(2 * n) if w[i] > 1.0 + tol][:n]
    vecs = [v[:, i] for i in big]
    wmat = _symplectic_basis(vecs, n, om)
    r = np.zeros(n)
    r[: len(big)] = 0.5 * np.log(w[big])
    z = np.concatenate([np.exp(r), np.exp(-r)])
    o2 = wmat.T
    o1 = (s @ wmat) / z[None, :]
    return o1, r, o2


def euler_recompose(o1, r, o2):
    r = np.asarray(r, dtype=float)
    return o1 @ np.diag(np.concatenate([np.exp(r), np.exp(-r)])) @ o2


def single_mode_euler(s):
    """Write a 2x2 symplectic as ``rotation(a) @ diag(g, 1/g) @ rotation(b)``, g >= 1.

    Returns
    -------
    tuple of float
        ``(a, g, b)``.
    """
    s = np.asarray(s, dtype=float)
    u, sv, vt = np.linalg.svd(s)
    if np.linalg.det(u) < 0:
        # s has unit determinant, so u and vt share the reflection
        u = u @ np.diag([1.0, -1.0])
        vt = np.diag([1.0, -1.0]) @ vt
    g = float(sv[0])
    a = float(np.arctan2(u[0, 1], u[0, 0]))
    b = float(np.arctan2(vt[0, 1], vt[0, 0]))
    return a, g, b


def primitive_matrix(p, n):
    """Orthogonal symplectic matrix of a single Reck primitive on ``n`` modes."""
    u = np.eye(n, dtype=complex)
    if isinstance(p, Phase):
        u[p.k, p.k] = np.exp(-1j * p.phi)
    else:
        c, s, e = np.cos(p.theta), np.sin(p.theta), np.exp(1j * p.phi)
        u[p.j, p.j], u[p.j, p.k] = e * c, -s
        u[p.k, p.j], u[p.k, p.k] = e * s, c
    return unitary_to_passive(u)


def reck_decompose(o, tol=1e-12):
    """Decompose an orthogonal symplectic matrix into nearest-neighbour mixers and phases.

    The returned list is in application order: the first entry acts first.
    Mixers between modes ``(c, c+1)`` null the unitary row by row; at most
    ``n(n-1)/2`` mixers and ``n`` phases are produced, and trivial entries
    are dropped.
    """
    o = np.asarray(o.s if hasattr(o, "s") else o, dtype=float)
    n = o.shape[0] // 2
    u = passive_to_unitary(o).copy()
    ops = []
    for row in range(n - 1, 0, -1):
        for col in range(row):
            x, y = u[row, col], u[row, col + 1]
            if abs(x) < tol:
                continue
            theta = float(np.arctan2(abs(x), abs(y)))
            phi = float(np.angle(x) - np.angle(y)) if abs(y) > tol else 0.0
            t = TwoModeRotation(col, col + 1, theta, phi)
            tu = passive_to_unitary(primitive_matrix(t, n))
            u = u @ tu.conj().T
            u[row, col] = 0.0
            ops.append(t)
    for k in range(n):
        psi = float(np.angle(u[k, k]))
        if abs(psi) > tol:
            # unitary phase e^{i psi} is a phase-space rotation by -psi
            ops.append(Phase(k, float(np.mod(-psi, 2 * np.pi))))
    return ops


def reck_recompose(ops, n):
    o = np.eye(2 * n)
    for p in ops:
        o = primitive_matrix(p, n) @ o
    return o
