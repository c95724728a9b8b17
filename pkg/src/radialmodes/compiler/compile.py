"""Lowering of target symplectic operations to frequency schedules, and their verification."""

from dataclasses import dataclass

import numpy as np

from ..chain import ChainConfig
from ..errors import SynthesisError
from ..gaussian import SymplecticMatrix, rotation, symplectic_defect
from .decompose import Phase, TwoModeRotation, euler_decompose, reck_decompose
from .schedule import Schedule, simulate_schedule
from .synth import FrequencyPlan, Program, add_beam_splitter

__all__ = [
    "TargetOp",
    "VerificationReport",
    "VerificationError",
    "compile_target",
    "verify_schedule",
    "lower_program",
]


@dataclass(frozen=True)
class TargetOp:
    """Symplectic ``s`` acting on the listed ions (zero-based, in this order)."""

    modes: tuple
    s: np.ndarray

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        s = np.array(self.s.s if isinstance(self.s, SymplecticMatrix) else self.s, dtype=float)
        if len(set(modes)) != len(modes) or not modes:
            raise ValueError("target modes must be distinct and non-empty")
        if s.shape != (2 * len(modes), 2 * len(modes)):
            raise ValueError(f"target matrix must be {2 * len(modes)}x{2 * len(modes)}")
        d = symplectic_defect(s)
        if d > 1e-10:
            raise ValueError(f"target is not symplectic: defect {d:.3e}")
        s.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "s", s)

    def embed(self, n):
        """The target as a ``2n x 2n`` matrix, identity on the other ions."""
        m = len(self.modes)
        out = np.eye(2 * n)
        idx = list(self.modes) + [k + n for k in self.modes]
        out[np.ix_(idx, idx)] = self.s
        return out


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of simulating a schedule against a target.

    Attributes
    ----------
    achieved : SymplecticMatrix
        Exact map of the schedule on all ions.
    deviation : float
        Spectral-norm error on the target ions.
    spectator_leakage : float
        Largest spectral-norm deviation from the identity on the other ions,
        including the blocks coupling them to the target ions.
    rwa_residual : float
        Spectral norm of the change in the number-non-conserving (active)
        ladder block on the target ions.
    """

    achieved: SymplecticMatrix
    deviation: float
    spectator_leakage: float
    rwa_residual: float
    tolerance: float

    @property
    def passed(self):
        return self.deviation < self.tolerance

    def as_dict(self):
        return {
            "deviation": self.deviation,
            "spectator_leakage": self.spectator_leakage,
            "rwa_residual": self.rwa_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


class VerificationError(SynthesisError):
    def __init__(self, report):
        super().__init__(
            f"compiled schedule misses the target: deviation {report.deviation:.3e} "
            f"exceeds tolerance {report.tolerance:.1e}"
        )
        self.report = report


def _active_block(s):
    n = s.shape[0] // 2
    xx, xp, px, pp = s[:n, :n], s[:n, n:], s[n:, :n], s[n:, n:]
    return 0.5 * ((xx - pp) + 1j * (px + xp))


def verify_schedule(schedule, target, tol=1e-3):
    """Simulate ``schedule`` exactly and compare with ``target``."""
    n = schedule.base_config.n
    a = simulate_schedule(schedule)
    s = a.s
    t = list(target.modes)
    rest = [k for k in range(n) if k not in t]
    ti = t + [k + n for k in t]
    ri = rest + [k + n for k in rest]
    att = s[np.ix_(ti, ti)]
    dev = float(np.linalg.norm(att - target.s, 2))
    leak = 0.0
    if rest:
        leak = max(
            np.linalg.norm(s[np.ix_(ri, ri)] - np.eye(len(ri)), 2),
            np.linalg.norm(s[np.ix_(ti, ri)], 2),
            np.linalg.norm(s[np.ix_(ri, ti)], 2),
        )
    rwa = float(np.linalg.norm(_active_block(att) - _active_block(target.s), 2))
    return VerificationReport(a, dev, float(leak), rwa, tol)


def _as_plan(chain, **kw):
    if isinstance(chain, FrequencyPlan):
        return chain
    if isinstance(chain, ChainConfig):
        return FrequencyPlan.from_config(chain, **kw)
    raise TypeError("chain must be a ChainConfig or FrequencyPlan")


def lower_program(ops, plan):
    """Lower a list of :class:`Phase`, :class:`TwoModeRotation` and
    ``("local", k, matrix)`` items (application order) to a schedule."""
    prog = Program(plan)
    for op in ops:
        if isinstance(op, Phase):
            prog.local(op.k, rotation(op.phi))
        elif isinstance(op, TwoModeRotation):
            add_beam_splitter(prog, op.j, op.k, op.theta, op.phi)
        else:
            _, k, m = op
            prog.local(k, m)
    return prog.schedule()


def compile_target(target, chain, tol=1e-3, check=True):
    """Compile ``target`` into a schedule for ``chain``.

    Pipeline: Euler decomposition ``O1 Z O2``, Reck decomposition of each
    passive factor into nearest-neighbour mixers (between consecutive target
    ions) and phases, then lowering of every primitive to frequency switches.
    The result is verified by exact simulation.

    Parameters
    ----------
    chain : ChainConfig or FrequencyPlan
        A chain resting on a commensurate ladder.
    check : bool
        Raise :class:`VerificationError` if the deviation exceeds ``tol``.

    Returns
    -------
    Schedule
        With ``notes["verification"]`` holding the :class:`VerificationReport`.
    """
    plan = _as_plan(chain)
    if max(target.modes) >= plan.n:
        raise SynthesisError(f"target ion {max(target.modes) + 1} outside a chain of {plan.n}")
    modes = target.modes
    m = len(modes)
    o1, r, o2 = euler_decompose(target.s)
    ops = []

    def remap(p):
        if isinstance(p, Phase):
            return Phase(modes[p.k], p.phi)
        return TwoModeRotation(modes[p.j], modes[p.k], p.theta, p.phi)

    if m == 1:
        ops.append(("local", modes[0], target.s))
    else:
        ops.extend(remap(p) for p in reck_decompose(o2))
        for i in range(m):
            if abs(r[i]) > 1e-12:
                ops.append(("local", modes[i], np.diag([np.exp(r[i]), np.exp(-r[i])])))
        ops.extend(remap(p) for p in reck_decompose(o1))
    sched = lower_program(ops, plan)
    report = verify_schedule(sched, target, tol)
    sched.notes["verification"] = report
    if check and not report.passed:
        raise VerificationError(report)
    return sched
