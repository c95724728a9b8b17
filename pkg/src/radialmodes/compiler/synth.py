"""Frequency-switching primitives: phase shifts, squeezers and beam splitters.

All primitives act on a chain resting on a commensurate frequency plan
(effective frequencies ``unit * m_j`` with integer ``m_j``). Every
instruction lasts an integer number of periods for each ion that does not
take part in the operation, so those ions return to their initial state.
Quadratures are measured in units of the resting effective frequencies.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..chain import ChainConfig, bare_for_effective, coulomb_matrix, equilibrium_positions
from ..errors import SynthesisError
from ..gaussian import frequency_jump, rotation
from .decompose import single_mode_euler, unitary_to_passive
from .schedule import Instruction, Schedule

__all__ = [
    "FrequencyPlan",
    "Program",
    "synth_phase",
    "synth_squeeze",
    "synth_local",
    "synth_beam_splitter",
    "add_beam_splitter",
    "beam_splitter_instruction",
    "squeeze_jump",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FrequencyPlan:
    """Resting effective frequencies ``unit * multiples`` of a chain.

    Parameters
    ----------
    unit : float
        Frequency step in units of the longitudinal frequency.
    multiples : tuple of int
        Integer multiple assigned to each ion.
    alpha_cap : float
        Largest frequency ratio used by the phase primitive.
    margin : float
        Smallest allowed detuning between ions, in units of ``unit``.
    squeeze_cap : float
        Largest allowed ``sqrt(alpha)`` for a squeezing jump.
    """

    unit: float
    multiples: tuple
    alpha_cap: float = 4.0
    margin: float = 0.2
    squeeze_cap: float = 500.0
    longitudinal_frequency_hz: float = None

    def __post_init__(self):
        m = tuple(int(x) for x in self.multiples)
        if any(x < 1 for x in m) or not self.unit > 0:
            raise ValueError("plan needs a positive unit and positive integer multiples")
        object.__setattr__(self, "multiples", m)

    @classmethod
    def ladder(cls, n, ratio=20.0, **kw):
        """Ladder ``w_j = j * ratio`` (one-based ``j``)."""
        return cls(float(ratio), tuple(range(1, n + 1)), **kw)

    @classmethod
    def from_config(cls, config, tol=1e-6, **kw):
        """Recover the plan of a chain whose effective frequencies form a ladder."""
        from ..chain import build_model

        we = build_model(config).effective_frequencies
        unit = float(we.min())
        mult = we / unit
        if np.max(np.abs(mult - np.round(mult))) > tol:
            raise SynthesisError(
                "resting effective frequencies are not integer multiples of a common unit; "
                "build the chain with FrequencyPlan.ladder(...).config()"
            )
        return cls(unit, tuple(int(round(x)) for x in mult),
                   longitudinal_frequency_hz=config.longitudinal_frequency_hz, **kw)

    @property
    def n(self):
        return len(self.multiples)

    @property
    def effective(self):
        return self.unit * np.asarray(self.multiples, dtype=float)

    def positions(self):
        return equilibrium_positions(self.n)

    def config(self):
        bare = bare_for_effective(self.effective, self.positions())
        return ChainConfig(self.n, tuple(bare), self.longitudinal_frequency_hz)


class Program:
    """Accumulates local single-mode operations and beam-splitter instructions,
    merging consecutive local operations on the same ion before lowering."""

    def __init__(self, plan):
        self.plan = plan
        self.u = plan.positions()
        self.items = []
        self.pending = {}
        self.notes = {"bs_residual": 0.0}

    def local(self, k, m):
        m = np.asarray(m, dtype=float)
        self.pending[k] = m @ self.pending.get(k, np.eye(2))

    def _flush(self, modes):
        for k in sorted(modes):
            if k in self.pending:
                self.items.extend(_lower_local(self.plan, k, self.pending.pop(k)))

    def raw(self, instructions, modes):
        """Append raw instructions that act non-trivially on ``modes`` only."""
        self._flush(modes)
        self.items.extend(instructions)

    def schedule(self):
        self._flush(list(self.pending))
        return Schedule(self.plan.config(), tuple(self.items), dict(self.notes))


def _instruction(plan, effective, duration, label):
    bare = bare_for_effective(effective, plan.positions())
    return Instruction(tuple(bare), duration, label)


def _phase_candidates(plan, k, phi, max_segments=3):
    """Admissible (alpha, segments) for a phase ``phi`` on ion ``k`` with up
    to ``max_segments`` equal segments."""
    mk = plan.multiples[k]
    others = [m for i, m in enumerate(plan.multiples) if i != k]
    out = []
    for segments in range(1, max_segments + 1):
        for extra in range(segments):
            psi = (phi + TWO_PI * extra) / segments
            if psi <= 0:
                continue
            # alpha = 2 pi mk / (psi + 2 pi q)
            q = 0
            while True:
                alpha = TWO_PI * mk / (psi + TWO_PI * q)
                if alpha < 1.0 / plan.alpha_cap:
                    break
                q += 1
                if abs(alpha - 1.0) < plan.margin or alpha > plan.alpha_cap:
                    continue
                if all(abs(alpha * m - mk) >= plan.margin for m in others):
                    out.append((alpha, segments))
    return out


def _local_error(plan, instructions, k, local):
    """Spectral-norm error of ``instructions`` against ``local`` on ion ``k``
    and the identity elsewhere."""
    from .schedule import simulate_schedule

    n = plan.n
    s = simulate_schedule(Schedule(plan.config(), tuple(instructions)), frame=plan.effective).s
    want = np.eye(2 * n)
    want[np.ix_([k, k + n], [k, k + n])] = local
    return float(np.linalg.norm(s - want, 2))


def _phase_instruction(plan, k, alpha):
    eff = plan.effective * alpha
    eff[k] = plan.effective[k]
    t = 2.0 * TWO_PI / (plan.unit * alpha)
    return _instruction(plan, eff, t, f"phase {k}")


def synth_phase(k, phi, plan):
    """Rotate ion ``k`` by ``phi`` in phase space.

    Ion ``k`` keeps its resting frequency while all other ions are raised by
    a common factor ``alpha`` for ``4 pi / (unit alpha)``; they complete whole
    periods and ion ``k`` accumulates ``2 pi m_k / alpha``. Among the ratios
    in ``[1/alpha_cap, alpha_cap]`` that keep every ion detuned by at least
    ``margin * unit``, the one with the smallest simulated error is used. The
    rotation is split into up to three equal segments if no single ratio fits.

    Raises
    ------
    SynthesisError
        If no split into at most three segments fits the limits.
    """
    phi = float(np.mod(phi, TWO_PI))
    cfg = plan.config()
    if phi < 1e-12 or TWO_PI - phi < 1e-12:
        return Schedule(cfg, ())
    if plan.n == 1:
        # nothing to hold still: just wait
        t = 2.0 * phi / plan.unit / plan.multiples[0]
        return Schedule(cfg, (_instruction(plan, plan.effective, t, f"phase {k}"),))
    cands = _phase_candidates(plan, k, phi)
    if not cands:
        raise SynthesisError(
            f"phase {phi:.6g} on ion {k + 1} needs a frequency ratio outside "
            f"[1/{plan.alpha_cap}, {plan.alpha_cap}]; raise alpha_cap"
        )
    best = None
    for alpha, segments in cands:
        ins = (_phase_instruction(plan, k, alpha),) * segments
        err = _local_error(plan, ins, k, rotation(phi))
        if best is None or err < best[0]:
            best = (err, ins)
    return Schedule(cfg, best[1])


def squeeze_jump(plan, k, alpha, cycles):
    """Map (on ion ``k``) and instruction of raising ion ``k`` by ``alpha``
    for ``cycles`` periods of the plan unit."""
    t = 2.0 * TWO_PI * cycles / plan.unit
    fk = plan.effective[k]
    m = frequency_jump(alpha, fk, 0.5 * t)
    eff = plan.effective.copy()
    eff[k] = alpha * fk
    return m, _instruction(plan, eff, t, f"squeeze {k}")


def _jump_roots(plan, k, target, cycles, alpha_max):
    """Ratios ``alpha > 1`` for which the jump has largest singular value ``target``."""
    mk = plan.multiples[k]
    big = target - 1.0 / target

    def f(a):
        return abs(np.sin(TWO_PI * cycles * mk * a)) * (a - 1.0 / a) - big

    # |sin| has zeros at a = p / (2 cycles mk); search each lobe
    step = 1.0 / (2.0 * cycles * mk)
    roots = []
    p = int(np.floor(1.0 / step))
    while p * step < alpha_max:
        lo, hi = max(p * step, 1.0), (p + 1) * step
        if hi > lo:
            grid = np.linspace(lo, hi, 65)
            vals = np.array([f(a) for a in grid])
            for i in range(len(grid) - 1):
                if vals[i] == 0:
                    roots.append(grid[i])
                elif vals[i] * vals[i + 1] < 0:
                    roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
        p += 1
    return roots


def _squeeze_parameters(plan, k, target, h=None):
    if h is not None:
        mk = plan.multiples[k]
        return (0.25 + h) / mk, 1
    if target > plan.squeeze_cap**2:
        raise SynthesisError(
            f"squeezing {target:.6g} exceeds the cap sqrt(alpha) <= {plan.squeeze_cap}"
        )
    others = [m for i, m in enumerate(plan.multiples) if i != k]
    mk = plan.multiples[k]
    best = None
    for cycles in (1, 2, 3):
        roots = [a for a in _jump_roots(plan, k, target, cycles, 1.5 * target + 2.0)
                 if all(abs(a * mk - m) >= plan.margin for m in others)]
        # score the first few admissible ratios of each period count by simulation
        for a in roots[:3]:
            jm, ins = squeeze_jump(plan, k, a, cycles)
            err = _local_error(plan, [ins], k, jm) if plan.n > 1 else 0.0
            if best is None or err < best[0]:
                best = (err, a, cycles)
    if best is None:
        raise SynthesisError(f"no resonance-free jump reaches squeezing {target:.6g} on ion {k + 1}")
    return best[1], best[2]


def _lower_local(plan, k, m, tol=1e-12):
    """Instructions realising the 2x2 symplectic ``m`` on ion ``k``."""
    a, g, b = single_mode_euler(m)
    if g - 1.0 < tol:
        return list(synth_phase(k, a + b, plan).instructions)
    alpha, cycles = _squeeze_parameters(plan, k, g)
    jm, ins = squeeze_jump(plan, k, alpha, cycles)
    ja, jg, jb = single_mode_euler(jm)
    # m = R(a) Z R(b) and Z = R(-ja) J R(-jb)
    out = list(synth_phase(k, b - jb, plan).instructions)
    out.append(ins)
    out.extend(synth_phase(k, a - ja, plan).instructions)
    return out


def synth_local(k, m, plan):
    """Realise an arbitrary single-mode symplectic ``m`` on ion ``k`` as
    phase, squeezing jump, phase."""
    return Schedule(plan.config(), tuple(_lower_local(plan, k, m)))


def synth_squeeze(k, alpha, plan, h=None):
    """Squeeze ion ``k`` by ``diag(alpha, 1/alpha)``.

    A sudden jump of ion ``k`` by a ratio ``alpha_k`` over whole periods of
    the unit gives a map with singular values ``(g, 1/g)``. ``alpha_k`` is
    found by root search so that ``g`` equals the requested squeezing (or is
    set to ``(1/4 + h) / m_k`` when ``h`` is given), and phase shifts before
    and after align the squeezing axes.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise SynthesisError("squeezing factor must be positive")
    target = np.diag([alpha, 1.0 / alpha])
    if h is None:
        return synth_local(k, target, plan)
    ak, cycles = _squeeze_parameters(plan, k, max(alpha, 1 / alpha), h=h)
    jm, ins = squeeze_jump(plan, k, ak, cycles)
    ja, jg, jb = single_mode_euler(jm)
    if abs(jg - max(alpha, 1 / alpha)) > 1e-9 * jg:
        raise SynthesisError(f"h={h} gives squeezing {jg:.6g}, not {alpha:.6g}")
    a, g, b = single_mode_euler(target)
    out = list(synth_phase(k, b - jb, plan).instructions) + [ins]
    out += list(synth_phase(k, a - ja, plan).instructions)
    return Schedule(plan.config(), tuple(out))


def _local_blocks(m4):
    """Split a two-mode block-local 4x4 matrix (xxpp) into two 2x2 blocks."""
    return m4[np.ix_([0, 2], [0, 2])], m4[np.ix_([1, 3], [1, 3])]


def _pair_passive(u):
    return unitary_to_passive(np.asarray(u, dtype=complex))


def _spectator_frequencies(plan, j, k, wr, t, gap=2.0):
    """Frequencies for the ions not taking part in a beam splitter.

    Each stays at its resting value unless that lies within half a unit of
    the resonance or of another spectator, in which case it is shifted by
    half-unit steps; finally it is rounded to a whole number of periods.
    """
    eff = plan.effective.copy()
    clock = 2.0 * TWO_PI / t
    taken = [wr]
    for i in range(plan.n):
        if i in (j, k):
            continue
        f = eff[i]
        for step in (0, 1, -1, 2, -2, 3, -3, 4, 4):
            cand = f + 0.5 * step * gap * plan.unit
            if cand > 0.5 * plan.unit and all(abs(cand - w) >= gap * plan.unit for w in taken):
                break
        cand = max(1, int(round(cand / clock))) * clock
        eff[i] = cand
        taken.append(cand)
    return eff


def beam_splitter_instruction(plan, j, k, theta, resonance=None, duration=None, coupling=None,
                              half_periods=None):
    """Bring ions ``j`` and ``k`` into resonance for a mixing angle ``|theta|``.

    By default the resonance is placed next to the geometric mean of the two
    resting frequencies, on the discrete family where the pair completes a
    whole number of half periods. There the exchange is passive in resting
    units up to a phase of ``pi/2`` on ion ``k``.

    Returns
    -------
    dict
        ``instruction``, ``resonance``, ``duration``, ``psi`` (the free
        phase of the pair), ``u`` (the rotating-wave exchange in units of
        the resonance) and ``ideal`` (its 4x4 map on the pair in resting
        units, xxpp order).
    """
    c0 = coulomb_matrix(plan.positions())[j, k]
    c = c0 if coupling is None else float(coupling)
    th = abs(float(theta))
    m = half_periods
    if resonance is None:
        # w_r t / 2 = pi m with t = 4 th w_r / c, closest to sqrt(f_j f_k)
        if m is None:
            g2 = plan.effective[j] * plan.effective[k]
            # even m: spectators on the clock then also complete whole
            # periods relative to the pair, cancelling their leakage
            m = max(2, 2 * int(round(th * g2 / (np.pi * c0))))
        wr = np.sqrt(np.pi * m * c / (2.0 * th))
    else:
        wr = float(resonance)
    t = 4.0 * th * wr / c if duration is None else float(duration)
    eff = _spectator_frequencies(plan, j, k, wr, t) if t > 0 else plan.effective.copy()
    eff[j] = eff[k] = wr
    ins = _instruction(plan, eff, t, f"bs {j} {k}")
    psi = 0.5 * wr * t
    cth, sth = np.cos(th), np.sin(th)
    u = np.exp(-1j * psi) * np.array([[cth, -1j * sth], [-1j * sth, cth]])
    d = _resonance_scaling(plan, j, k, wr)
    ideal = np.linalg.inv(d) @ _pair_passive(u) @ d
    return {"instruction": ins, "resonance": wr, "duration": t, "ideal": ideal, "psi": psi, "u": u,
            "coupling": c, "half_periods": m}


def _resonance_scaling(plan, j, k, wr):
    # quadratures in units of w_r are a times those in resting units
    a = np.sqrt(wr / plan.effective[[j, k]])
    return np.diag(np.concatenate([a, 1.0 / a]))


def _pair_map(plan, spec, j, k):
    """Exact 4x4 map of a beam-splitter instruction on the pair."""
    from .schedule import simulate_schedule

    s = simulate_schedule(Schedule(plan.config(), (spec["instruction"],)), frame=plan.effective).s
    n = plan.n
    idx = [j, k, j + n, k + n]
    return s[np.ix_(idx, idx)]


def _nearest_unitary(o):
    x = 0.5 * (o[:2, :2] + o[2:, 2:])
    y = 0.5 * (o[2:, :2] - o[:2, 2:])
    w, _, vh = np.linalg.svd(x + 1j * y)
    return w @ vh


def _split_u2(u):
    """``u = diag(e^{i a1}, e^{i a2}) R(theta) diag(e^{i b1}, 1)`` with R real.

    Phases multiplying a vanishing entry are arbitrary; they are chosen so
    that every sizeable entry of ``u`` is reproduced.
    """
    c, s = abs(u[0, 0]), abs(u[1, 0])
    theta = float(np.arctan2(s, c))
    a1 = float(np.angle(-u[0, 1]))
    b1 = float(np.angle(u[0, 0])) - a1
    a2 = float(np.angle(u[1, 1])) if c >= s else float(np.angle(u[1, 0])) - b1
    return a1, a2, theta, b1


def _bs_corrections(u, d, theta, phi, flip):
    """Local pre/post maps turning the exchange ``u`` (measured in the frame
    scaled by ``d`` from resting units) into ``TwoModeRotation(j, k, theta, phi)``."""
    a1, a2, _, b1 = _split_u2(u)
    di = np.linalg.inv(d)
    outer = di @ _pair_passive(np.diag([np.exp(1j * a1), np.exp(1j * a2)])) @ d
    inner = di @ _pair_passive(np.diag([np.exp(1j * b1), 1.0])) @ d
    ratio = d[1, 1] / d[0, 0]
    e = np.diag([1.0, ratio, 1.0, 1.0 / ratio])
    sigma = _pair_passive(np.diag([1.0, 1.0 if theta >= 0 else -1.0]))
    pre_phase = _pair_passive(np.diag([np.exp(1j * phi), 1.0]))
    post = sigma @ e @ np.linalg.inv(outer)
    if flip:
        post = -post
    pre = np.linalg.inv(inner) @ np.linalg.inv(e) @ sigma @ pre_phase
    return post, pre


def add_beam_splitter(program, j, k, theta, phi=0.0, resonance=None, calibrate=True):
    """Append a mixer ``TwoModeRotation(j, k, theta, phi)`` to ``program``.

    With ``calibrate`` the instruction is simulated exactly; its duration is
    retuned until the mixing angle is met and the measured phases are folded
    into the local corrections. The remaining non-passive part of the pair
    map is recorded in ``program.notes["bs_residual"]``.
    """
    theta = float(theta)
    wrapped = np.mod(theta + np.pi / 2, np.pi) - np.pi / 2
    if resonance is None and abs(wrapped) > np.pi / 4 + 1e-12:
        # the switching error grows with the angle: mix in two halves
        add_beam_splitter(program, j, k, 0.5 * theta, phi, None, calibrate)
        add_beam_splitter(program, j, k, 0.5 * theta, 0.0, None, calibrate)
        return
    flip = False
    # R(theta + pi) = -R(theta): keep |theta| <= pi/2
    while theta > np.pi / 2:
        theta -= np.pi
        flip = not flip
    while theta <= -np.pi / 2:
        theta += np.pi
        flip = not flip
    if abs(theta) < 1e-12:
        m = rotation(-phi)
        program.local(j, -m if flip else m)
        if flip:
            program.local(k, -np.eye(2))
        return
    plan = program.plan
    th = abs(theta)
    spec = beam_splitter_instruction(plan, j, k, th, resonance)
    u = spec["u"]
    # at the geometric-mean resonance the exchange is passive in resting units
    d = _resonance_scaling(plan, j, k, spec["resonance"]) if resonance is not None else np.eye(4)
    if resonance is None:
        u = _nearest_unitary(spec["ideal"])
    if calibrate:
        for _ in range(6):
            exact = _pair_map(plan, spec, j, k)
            u = _nearest_unitary(d @ exact @ np.linalg.inv(d))
            # signed cosine relative to the free phase, so angles past pi/2 are seen
            got = float(np.arctan2(abs(u[1, 0]), np.real(u[0, 0] * np.exp(1j * spec["psi"]))))
            if abs(got - th) < 1e-11:
                break
            if resonance is None:
                spec = beam_splitter_instruction(
                    plan, j, k, th, coupling=spec["coupling"] * got / th,
                    half_periods=spec["half_periods"],
                )
            else:
                spec = beam_splitter_instruction(
                    plan, j, k, th, spec["resonance"], duration=spec["duration"] * th / got
                )
        resid = np.linalg.norm(exact - np.linalg.inv(d) @ _pair_passive(u) @ d, 2)
        program.notes["bs_residual"] = max(program.notes.get("bs_residual", 0.0), float(resid))
    post, pre = _bs_corrections(u, d, theta, phi, flip)
    pj, pk = _local_blocks(pre)
    program.local(j, pj)
    program.local(k, pk)
    program.raw([spec["instruction"]], (j, k))
    qj, qk = _local_blocks(post)
    program.local(j, qj)
    program.local(k, qk)


def synth_beam_splitter(j, k, theta, plan, phi=0.0, resonance=None, calibrate=True):
    """Mix ions ``j`` and ``k`` by angle ``theta``.

    Both ions are moved to a common effective frequency ``w_r`` above the
    plan; under the rotating-wave approximation they exchange at rate
    ``kappa / 4`` so the mixing takes ``4 |theta| w_r |u_j - u_k|**3``. By
    default ``w_r`` is chosen so that the pair completes whole periods.
    Spectators are moved to the nearest multiple of the instruction clock.
    Single-mode corrections before and after remove the squeezing caused by
    measuring the pair in resting units, and fix the sign of ``theta``.
    """
    if j == k:
        raise SynthesisError("beam splitter needs two distinct ions")
    prog = Program(plan)
    add_beam_splitter(prog, j, k, theta, phi, resonance, calibrate)
    return prog.schedule()
