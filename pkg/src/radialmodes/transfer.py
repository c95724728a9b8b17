"""Transfer of excitations and of entanglement along the chain."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .chain import (
    ChainConfig,
    bare_for_effective,
    build_model,
    equilibrium_positions,
    generator,
    model_from_positions,
)
from .compiler.schedule import Instruction, Schedule
from .dynamics import evolve_schedule
from .entanglement import log_negativity
from .errors import StateError
from .gaussian import NormalModes, ground_state, propagator

__all__ = [
    "LadderTransform",
    "ladder_transform",
    "ExcitationProfile",
    "excitation_profile",
    "TransferTime",
    "transfer_time",
    "endpoint_bs_transfer",
    "bs_time_scaling",
    "power_law_r2",
    "avg_qubit_fidelity",
    "heating_fidelity",
    "Jitter",
    "SwapResult",
    "entanglement_swap_scenario",
    "swap_time_scaling",
    "uniform_positions",
]


@dataclass(frozen=True)
class LadderTransform:
    """Action of a symplectic map on the ladder operators:
    ``a -> E a + F a^dagger``."""

    passive: np.ndarray
    active: np.ndarray

    @property
    def leakage(self):
        """Spectral norm of the number-non-conserving block ``F``."""
        return float(np.linalg.norm(self.active, 2))

    def identity_defect(self):
        """Norm of ``E E^dagger - F F^dagger - I``."""
        e, f = self.passive, self.active
        return float(np.linalg.norm(e @ e.conj().T - f @ f.conj().T - np.eye(len(e))))


def ladder_transform(s):
    s = np.asarray(s.s if hasattr(s, "s") else s, dtype=float)
    n = s.shape[0] // 2
    xx, xp, px, pp = s[:n, :n], s[:n, n:], s[n:, :n], s[n:, n:]
    e = 0.5 * ((xx + pp) + 1j * (px - xp))
    f = 0.5 * ((xx - pp) + 1j * (px + xp))
    return LadderTransform(e, f)


@dataclass(frozen=True)
class ExcitationProfile:
    """Single-phonon probabilities ``P[t, j] = |E_{j, source}(t)|**2``."""

    times: np.ndarray
    probabilities: np.ndarray
    leakage: np.ndarray
    threshold: float

    @property
    def warning(self):
        """True if the active block is too large for the probabilities to be meaningful."""
        return bool(np.max(self.leakage, initial=0.0) > self.threshold)


def _maps_along(schedule, times, frame):
    """Symplectic maps of ``schedule`` truncated at each sample time."""
    cfg = schedule.base_config
    u = equilibrium_positions(cfg.n)
    out = []
    s = np.eye(2 * cfg.n)
    now = start = 0.0
    i = 0
    times = np.asarray(times, dtype=float)
    for ins in schedule.instructions:
        end = start + ins.duration
        h = generator(model_from_positions(cfg.with_frequencies(ins.frequencies), u), frame)
        while i < times.size and times[i] <= end:
            s = propagator(h, times[i] - now).s @ s
            now = times[i]
            out.append(s)
            i += 1
        s = propagator(h, end - now).s @ s
        now = start = end
    out.extend([s] * (times.size - i))
    return out


def excitation_profile(chain, evolution, times, source=0, frame=None, threshold=1e-2):
    """Probability of finding at each ion a phonon created at ion ``source``.

    Parameters
    ----------
    chain : ChainConfig
        Initial trap setting; its effective frequencies are the default frame.
    evolution : Schedule or sequence of float
        A schedule, or constant bare frequencies applied from ``t = 0``.
    times : array_like
        Sample times (non-decreasing for schedules).
    frame : array_like or "initial", optional
        Reference frequencies of the phonons. For a schedule the default is
        its base effective frequencies; for constant frequencies it is the
        effective frequencies of that setting, and ``"initial"`` selects
        those of ``chain`` instead.
    """
    times = np.asarray(times, dtype=float)
    if isinstance(evolution, Schedule):
        f = build_model(evolution.base_config).effective_frequencies if frame is None else frame
        maps = _maps_along(evolution, times, f)
    else:
        model = build_model(chain.with_frequencies(evolution))
        if frame is None:
            f = model.effective_frequencies
        elif isinstance(frame, str) and frame == "initial":
            f = build_model(chain).effective_frequencies
        else:
            f = frame
        h = generator(model, f)
        maps = [propagator(h, t).s for t in times]
    probs, leak = [], []
    for s in maps:
        lt = ladder_transform(s)
        probs.append(np.abs(lt.passive[:, source]) ** 2)
        leak.append(lt.leakage)
    prof = ExcitationProfile(times, np.array(probs), np.array(leak), threshold)
    if prof.warning:
        warnings.warn(
            f"counter-rotating leakage {prof.leakage.max():.3g} exceeds {threshold:g}; "
            "single-phonon probabilities are approximate",
            stacklevel=2,
        )
    return prof


@dataclass(frozen=True)
class TransferTime:
    time: float
    probability: float


def _amplitude_fn(modes, source, target, n):
    def prob(times):
        c = modes.column(source, np.atleast_1d(times))
        colx, colp = c[:, :, 0], c[:, :, 1]
        e = 0.5 * ((colx[:, target] + colp[:, n + target]) + 1j * (colx[:, n + target] - colp[:, target]))
        return np.abs(e) ** 2

    return prob


def _first_peak(prob, dt, p_min, t_limit, chunk=4096):
    """Maximum of ``prob`` over its first excursion above ``p_min``: coarse
    scan, then bounded refinement around the best grid point."""
    t0 = 0.0
    best_i = None
    while t0 < t_limit:
        grid = t0 + dt * np.arange(chunk)
        p = prob(grid)
        for i, v in enumerate(p):
            if best_i is None:
                if v >= p_min:
                    best_i, best_v, best_t = i, v, grid[i]
            elif v > best_v:
                best_v, best_t = v, grid[i]
            elif v < 0.75 * p_min:
                # hysteresis: small ripples near the threshold do not end the lobe
                res = minimize_scalar(
                    lambda t: -prob(t)[0],
                    bounds=(max(0.0, best_t - dt), best_t + dt),
                    method="bounded",
                    options={"xatol": 1e-10 * max(1.0, best_t)},
                )
                return TransferTime(float(res.x), float(-res.fun))
        t0 = grid[-1] + dt
    raise StateError(f"no transfer above {p_min} found before t = {t_limit:g}")


def transfer_time(model, source, target, frame=None, p_min=0.5, dt=None, t_limit=1e6):
    """Earliest time at which a phonon moves from ``source`` to ``target`` with
    probability at least ``p_min``, refined to the peak.

    ``frame`` defaults to the model's own effective frequencies; the coarse
    step defaults to the inverse of the largest of them.
    """
    h = generator(model, frame)
    n = model.n
    modes = NormalModes(h[:n, :n], h[n:, n:])
    if dt is None:
        dt = 1.0 / float(np.max(model.effective_frequencies))
    return _first_peak(_amplitude_fn(modes, source, target, n), dt, p_min, t_limit)


def endpoint_bs_transfer(n, omega_f, spectator=50.0, p_min=0.5):
    """Swap a phonon between the end ions by tuning both to bare ``omega_f``
    while the others stay at bare ``spectator``.

    Returns
    -------
    TransferTime
    """
    if n < 2:
        raise ValueError("need at least two ions")
    w = [spectator] * n
    w[0] = w[-1] = omega_f
    model = build_model(ChainConfig(n, tuple(w)))
    return transfer_time(model, 0, n - 1, p_min=p_min, dt=1.0 / omega_f)


def power_law_r2(x, y, power):
    """Coefficient of determination of the one-parameter fit ``y = a x**power``."""
    x = np.asarray(x, dtype=float) ** power
    y = np.asarray(y, dtype=float)
    a = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - a * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def bs_time_scaling(ns, omega_f=5.0, spectator=50.0):
    """End-to-end swap times for each chain length in ``ns``."""
    return np.array([endpoint_bs_transfer(n, omega_f, spectator).time for n in ns])


def avg_qubit_fidelity(p):
    """Haar-averaged fidelity of sending a qubit encoded in {|0>, |1>} when
    the single excitation arrives with probability ``p``.

    The channel is amplitude damping with real amplitude ``sqrt(p)``, whose
    average fidelity is ``1/2 + sqrt(p)/3 + p/6``.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probability must lie in [0, 1]")
    eta = np.sqrt(p)
    out = 0.5 + eta / 3.0 + p / 6.0
    return float(out) if out.ndim == 0 else out


def heating_fidelity(epsilon, t):
    """Mean fidelity ``1 - 3 epsilon t / 2`` under heating rate ``epsilon`` (Hz) for time ``t`` (s)."""
    x = float(epsilon) * float(t)
    if x > 0.2:
        warnings.warn(f"epsilon t = {x:.3g} is not small; the linear estimate is poor", stacklevel=2)
    return 1.0 - 1.5 * x


@dataclass(frozen=True)
class Jitter:
    """Uniform random errors per ion and per instruction.

    Attributes
    ----------
    frequency : float
        Half-width of the error on each trap setting.
    duration : float
        Half-width of the error on each duration.
    quantity : {"omega2", "omega"}
        Whether the frequency error applies to ``omega**2`` (the trap
        curvature) or to ``omega``.
    """

    frequency: float = 0.1
    duration: float = 0.1
    quantity: str = "omega2"

    def __post_init__(self):
        if self.quantity not in ("omega2", "omega"):
            raise ValueError("quantity must be 'omega2' or 'omega'")

    def apply(self, ins, rng):
        w = np.asarray(ins.frequencies)
        dw = rng.uniform(-self.frequency, self.frequency, w.size)
        w = np.sqrt(w**2 + dw) if self.quantity == "omega2" else w + dw
        t = max(0.0, ins.duration + rng.uniform(-self.duration, self.duration))
        return Instruction(tuple(w), t, ins.label)


@dataclass(frozen=True)
class SwapResult:
    """Entanglement of ion 1 with each other ion along a swapping protocol."""

    strategy: str
    times: np.ndarray
    negativity: dict
    segment_times: tuple
    schedule: Schedule
    frame_mismatch: float
    notes: dict = field(default_factory=dict)

    @property
    def final(self):
        """``E_N`` between ion 1 and the last ion at the end."""
        return float(self.negativity[max(self.negativity)][-1])


def uniform_positions(n, spacing=1.0):
    return spacing * (np.arange(n) - 0.5 * (n - 1))


def _swap_layout(strategy, n):
    if strategy == "relay":
        return [(k, k + 1) for k in range(1, n - 1)]
    if strategy == "direct":
        return [(1, n - 1)]
    raise ValueError(f"unknown strategy {strategy!r}; use 'relay' or 'direct'")


def _segment_effective(n, pair, resonance, park):
    """Pair on resonance, ion 1 parked at ``park * resonance``, the rest
    spread above it in steps of half the resonance."""
    eff = np.empty(n)
    eff[0] = park * resonance
    r = 1
    for i in range(1, n):
        if i in pair:
            eff[i] = resonance
        else:
            eff[i] = (park + 0.5 * r) * resonance
            r += 1
    return eff


def entanglement_swap_scenario(
    strategy,
    n=4,
    resonance=np.sqrt(98.8),
    entangle_frequency=2.0,
    entangle_time=2.0,
    park=2.0,
    segment_times=None,
    samples=40,
    jitter=None,
    rng=None,
    positions=None,
):
    """Create entanglement between ions 1 and 2, then move ion 2's share to the last ion.

    The chain starts in the ground state with every effective frequency equal
    to ``resonance``, which is also the frame of the quadratures. Ions 1 and 2
    are first set to bare ``entangle_frequency`` for ``entangle_time``. Ion 1
    is then parked off resonance and the entanglement is swapped either by
    neighbouring beam splitters (``"relay"``) or by one beam splitter between
    ion 2 and the last ion (``"direct"``). Participating ions sit exactly at
    the frame frequency, so the switches cause no local squeezing.

    Parameters
    ----------
    segment_times : sequence of float, optional
        Duration of each swap; by default each is set to the first maximum
        of the entanglement between ion 1 and the receiving ion.
    jitter : Jitter, optional
        Random errors applied to the swap instructions, drawn from ``rng``.
    """
    if n < 3:
        raise ValueError("entanglement swapping needs at least three ions")
    u = equilibrium_positions(n) if positions is None else np.asarray(positions, dtype=float)
    frame = np.full(n, float(resonance))
    base = ChainConfig(n, tuple(bare_for_effective(frame, u)))
    state = ground_state(model_from_positions(base, u), frame)
    first = list(base.bare_frequencies)
    first[0] = first[1] = entangle_frequency
    ins = [Instruction(tuple(first), entangle_time, "entangle")]
    layout = _swap_layout(strategy, n)
    if segment_times is not None and len(segment_times) != len(layout):
        raise ValueError(f"{strategy} needs {len(layout)} segment times")
    state = evolve_schedule(state, Schedule(base, tuple(ins)), frame=frame, positions=u)[-1]
    chosen, mismatch = [], 0.0
    for idx, pair in enumerate(layout):
        eff = _segment_effective(n, pair, resonance, park)
        seg = Instruction(tuple(bare_for_effective(eff, u)), 0.0, f"swap {pair[0]} {pair[1]}")
        m = model_from_positions(base.with_frequencies(seg.frequencies), u)
        mismatch = max(mismatch, float(np.max(np.abs(m.effective_frequencies[list(pair)] / resonance - 1))))
        if segment_times is None:
            t = _best_swap_time(state, m, frame, pair[0], pair[1])
        else:
            t = float(segment_times[idx])
        chosen.append(t)
        seg = Instruction(seg.frequencies, t, seg.label)
        ins.append(seg)
        state = evolve_schedule(state, Schedule(base, (seg,)), frame=frame, positions=u)[-1]
    nominal = Schedule(base, tuple(ins))
    run = nominal
    if jitter is not None:
        rng = np.random.default_rng() if rng is None else rng
        run = Schedule(base, (ins[0],) + tuple(jitter.apply(i, rng) for i in ins[1:]))
    grid = np.linspace(0.0, run.total_duration, max(2, samples * len(run)))
    init = ground_state(model_from_positions(base, u), frame)
    states = evolve_schedule(init, run, grid, frame=frame, positions=u)
    neg = {k: np.array([log_negativity(s.reduced([0, k]), [0]) for s in states]) for k in range(1, n)}
    return SwapResult(strategy, grid, neg, tuple(chosen), run, mismatch)


def _best_swap_time(state, model, frame, holder, target, p_min=0.5):
    """First maximum of ``E_N`` between ion 1 and ``target`` under a fixed setting,
    starting from the entanglement held by ``holder``."""
    h = generator(model, frame)
    n = model.n
    modes = NormalModes(h[:n, :n], h[n:, n:])

    def en(t):
        s = modes.at(t)
        cm = s @ state.cm @ s.T
        idx = [0, target, n, n + target]
        return log_negativity(cm[np.ix_(idx, idx)], [0])

    start = log_negativity(state.reduced([0, holder]), [0])
    if start == 0:
        raise StateError("no entanglement to swap")
    dt = 2.0 / float(np.max(model.effective_frequencies))
    return _first_peak(lambda ts: np.array([en(t) for t in np.atleast_1d(ts)]),
                       dt, p_min * start, 1e5, chunk=256).time


def swap_time_scaling(ns, resonance=10.0, detuning=10.0, spacing=1.0):
    """Phonon transfer times from the first to the last ion on uniformly spaced chains.

    The relay swaps between neighbours one hop at a time; the direct scheme
    brings the end ions into resonance at once. In both, ions not taking part
    sit at ``detuning`` times the resonance (slightly staggered).

    Returns
    -------
    dict
        ``{"relay": array, "direct": array}`` of total times per ``n``.
    """
    out = {"relay": [], "direct": []}
    for n in ns:
        u = uniform_positions(n, spacing)
        for strategy, pairs in (("relay", [(k, k + 1) for k in range(n - 1)]), ("direct", [(0, n - 1)])):
            total = 0.0
            for a, b in pairs:
                eff = np.array([detuning * resonance * (1 + 0.05 * i) for i in range(n)])
                eff[[a, b]] = resonance
                cfg = ChainConfig(n, tuple(bare_for_effective(eff, u)))
                total += transfer_time(model_from_positions(cfg, u), a, b, dt=0.5 / resonance).time
            out[strategy].append(total)
    return {k: np.array(v) for k, v in out.items()}
