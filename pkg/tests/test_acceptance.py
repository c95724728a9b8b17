"""Acceptance criteria 1 to 8, each at its stated tolerance.

Every test prints one ``criterion N: PASS`` or ``criterion N: FAIL`` line with
the measured values, then asserts. Criteria that the implementation cannot
reach are left failing on purpose.
"""

import numpy as np
import pytest
from scipy.optimize import minimize, root
from scipy.stats import unitary_group

from radialmodes.bell import BellSettings, displaced_parity, klyshko_b3
from radialmodes.chain import ChainConfig, build_model, equilibrium_positions, generator
from radialmodes.compiler import (
    FrequencyPlan,
    TargetOp,
    euler_decompose,
    euler_recompose,
    reck_decompose,
    reck_recompose,
    synth_beam_splitter,
    synth_phase,
    synth_squeeze,
    unitary_to_passive,
    verify_schedule,
)
from radialmodes.entanglement import log_negativity
from radialmodes.gaussian import (
    GaussianState,
    NoiseModel,
    evolve_closed,
    evolve_open,
    ground_state,
    propagator,
    random_symplectic,
    rotation,
    squeezer,
    symplectic_defect,
    symplectic_form,
    thermal_occupation,
    thermal_state,
    vacuum,
)
from radialmodes.scenario import load_scenario, run_scenario
from radialmodes.transfer import (
    bs_time_scaling,
    endpoint_bs_transfer,
    excitation_profile,
    power_law_r2,
    swap_time_scaling,
)


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, checks):
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name} {'ok' if good else 'MISS'} ({info})" for name, good, info in checks)
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        print(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        assert ok, line

    return emit


def _summaries(name):
    return {t.name: t.summary for t in run_scenario(load_scenario(name))}


def _bs(theta):
    c, s = np.cos(theta), np.sin(theta)
    return unitary_to_passive(np.array([[c, -s], [s, c]]))


def _min_uncertainty_eig(cm):
    n = cm.shape[0] // 2
    return np.linalg.eigvalsh(cm + 0.5j * symplectic_form(n)).min()


def test_criterion_1_transfer_probabilities(report):
    with pytest.warns(UserWarning):
        p50 = excitation_profile(ChainConfig.uniform(10, 50.0), (50.0,) * 10, [375.0]).probabilities[0, 9]
        p10 = excitation_profile(ChainConfig.uniform(10, 10.0), (10.0,) * 10, [625.0]).probabilities[0, 9]
    bs = endpoint_bs_transfer(10, 5.0)
    report(1, [
        ("P10(50 wL, t=375) = 0.76 +- 0.02", abs(p50 - 0.76) <= 0.02, f"{p50:.4f}"),
        ("P10(10 wL, t=625) = 0.85 +- 0.02", abs(p10 - 0.85) <= 0.02, f"{p10:.4f}"),
        ("endpoint BS time 5600 +- 5%", abs(bs.time / 5600 - 1) <= 0.05, f"{bs.time:.1f}"),
        ("endpoint BS P > 0.99", bs.probability > 0.99, f"{bs.probability:.5f}"),
    ])


def test_criterion_2_bell_maxima(report):
    pure = _summaries("fig8-pure")["fig8-pure-noiseless"]["max B3"]
    noisy = _summaries("fig8-noisy")["fig8-noisy-eps200Hz"]["max B3"]
    vac = klyshko_b3(vacuum(3), BellSettings())
    report(2, [
        ("pure max B3 = 2.45 +- 0.05", abs(pure - 2.45) <= 0.05, f"{pure:.4f}"),
        ("200 Hz max B3 = 2.28 +- 0.05", abs(noisy - 2.28) <= 0.05, f"{noisy:.4f}"),
        ("vacuum zero settings B3 = 2", abs(vac - 2) <= 1e-9, f"{vac:.12f}"),
    ])


def test_criterion_3_heating_rate(report):
    eps = 1e-4 * thermal_occupation(2e6, 294.0)
    report(3, [("epsilon = 2 kHz +- 5%", abs(eps / 2000 - 1) <= 0.05, f"{eps:.1f} Hz")])


def test_criterion_4_entanglement_figures(report):
    fig4b = _summaries("fig4b")["fig4b-noiseless"]["max E_N[1-2]"]
    fig2 = _summaries("fig2")["fig2-noiseless"]
    frac = fig2["completely inseparable fraction"]
    t12, t13, t14 = (fig2[f"first peak time[1-{k}]"] for k in (2, 3, 4))
    report(4, [
        ("fig4b noiseless max E_N = 10 +- 2", abs(fig4b - 10) <= 2, f"{fig4b:.2f}"),
        ("fig2 completely inseparable over most of the window", frac > 0.5, f"fraction {frac:.3f}"),
        ("pair peaks ordered 1-2, 1-3, 1-4", t12 < t13 < t14, f"{t12:.2f} < {t13:.2f} < {t14:.2f}"),
    ])


def test_criterion_5_compiler(report):
    rng = np.random.default_rng(50)
    euler_err = reck_err = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        s = random_symplectic(n, rng, 1.5)
        euler_err = max(euler_err, np.linalg.norm(euler_recompose(*euler_decompose(s)) - s))
        m = int(rng.integers(2, 7))
        o = unitary_to_passive(unitary_group.rvs(m, random_state=rng))
        reck_err = max(reck_err, np.linalg.norm(reck_recompose(reck_decompose(o), m) - o))

    def primitives(plan):
        return {
            "phase": verify_schedule(synth_phase(1, 0.7, plan), TargetOp((1,), rotation(0.7))),
            "squeeze": verify_schedule(synth_squeeze(0, 2.0, plan), TargetOp((0,), squeezer(2.0))),
            "bs": verify_schedule(synth_beam_splitter(0, 2, np.pi / 4, plan), TargetOp((0, 2), _bs(np.pi / 4))),
        }

    by_ratio = {r: primitives(FrequencyPlan.ladder(3, r)) for r in (10.0, 20.0, 40.0)}
    dev20 = max(v.deviation for v in by_ratio[20.0].values())
    leak = {k: [by_ratio[r][k].spectator_leakage for r in (10.0, 20.0, 40.0)] for k in by_ratio[20.0]}
    falling = all(a > b > c for a, b, c in leak.values())
    report(5, [
        ("Euler round trip < 1e-9", euler_err < 1e-9, f"{euler_err:.1e}"),
        ("Reck round trip < 1e-9", reck_err < 1e-9, f"{reck_err:.1e}"),
        ("primitives at ratio 20 < 1e-3", dev20 < 1e-3, f"worst {dev20:.1e}"),
        ("leakage falls over 10/20/40", falling,
         ", ".join(f"{k} " + "/".join(f"{x:.1e}" for x in v) for k, v in leak.items())),
    ])


def test_criterion_6_core_invariants(report):
    rng = np.random.default_rng(60)

    def rand_h(n):
        a = rng.standard_normal((2 * n, 2 * n))
        return 3.0 * (a @ a.T / (2 * n) + 0.1 * np.eye(2 * n))

    def rand_state(n):
        s = random_symplectic(n, rng, 0.8)
        occ = rng.uniform(0, 2, n)
        return GaussianState(s @ np.diag(np.concatenate([occ, occ]) + 0.5) @ s.T)

    defect = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 6))
        defect = max(defect, symplectic_defect(propagator(rand_h(n), rng.uniform(0, 20)).s))
    m10 = build_model(ChainConfig.uniform(10, 10.0))
    defect = max(defect, symplectic_defect(propagator(generator(m10), 1000.0).s))

    worst_closed = worst_open = np.inf
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        st, h = rand_state(n), rand_h(n)
        worst_closed = min(worst_closed, _min_uncertainty_eig(evolve_closed(st, h, rng.uniform(0, 10)).cm))
        noise = NoiseModel(rng.uniform(0, 0.5), tuple(rng.uniform(0, 3, n)))
        worst_open = min(worst_open, _min_uncertainty_eig(evolve_open(st, h, noise, rng.uniform(0, 10)).cm))

    st = rand_state(2)
    noise = NoiseModel(0.1, (0.7, 2.0))
    relax_err = 0.0
    for t in (0.5, 5.0, 30.0):
        out = evolve_open(st, np.zeros((4, 4)), noise, t)
        expected = np.exp(-0.1 * t) * st.cm + (1 - np.exp(-0.1 * t)) * noise.steady_cm()
        relax_err = max(relax_err, np.abs(out.cm - expected).max())

    purity = max(abs(np.linalg.det(2 * ground_state(build_model(ChainConfig.uniform(n, w))).cm) - 1)
                 for n, w in ((2, 5.0), (4, 10.0), (10, 50.0)))
    gs = np.abs(ground_state(build_model(ChainConfig.uniform(10, 50.0))).cm - 0.5 * np.eye(20)).max()
    report(6, [
        ("symplectic defect < 1e-10", defect < 1e-10, f"{defect:.1e}"),
        ("uncertainty kept, closed, 1000 trials", worst_closed >= -1e-9, f"min eig {worst_closed:.1e}"),
        ("uncertainty kept, open, 1000 trials", worst_open >= -1e-9, f"min eig {worst_open:.1e}"),
        ("H=0 relaxation closed form", relax_err < 1e-12, f"{relax_err:.1e}"),
        ("ground state det(2 sigma) = 1 +- 1e-9", purity < 1e-9, f"{purity:.1e}"),
        ("n=10 at 50 wL within 1e-3 of vacuum", gs < 1e-3, f"max entry {gs:.1e}"),
    ])


def test_criterion_7_scaling(report):
    ns = np.arange(4, 11)
    r2 = power_law_r2(ns, bs_time_scaling(ns), 2)
    sn = np.arange(5, 9)
    t = swap_time_scaling(sn)
    relay = [t["relay"][i + 1] / t["relay"][i] / ((n + 1) / n) for i, n in enumerate(sn[:-1])]
    direct = [t["direct"][i + 1] / t["direct"][i] / ((n + 1) / n) ** 3 for i, n in enumerate(sn[:-1])]
    report(7, [
        ("endpoint BS n^2 fit R^2 > 0.99", r2 > 0.99, f"{r2:.5f}"),
        ("relay ratios within 15% of (n+1)/n", all(abs(x - 1) <= 0.15 for x in relay),
         "/".join(f"{x:.3f}" for x in relay)),
        ("direct ratios within 15% of ((n+1)/n)^3", all(abs(x - 1) <= 0.15 for x in direct),
         "/".join(f"{x:.3f}" for x in direct)),
        ("direct slower than relay", bool(np.all(t["direct"] > t["relay"])), ""),
    ])


def _potential(u):
    d = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), 1)
    return 0.5 * np.sum(u**2) + np.sum(1.0 / d[iu])


def _gradient(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def test_criterion_8_oracles(report):
    grid = np.linspace(-2, 2, 21)
    coh = max(abs(displaced_parity(vacuum(1), [x, p]) - np.exp(-(x**2 + p**2))) for x in grid for p in grid)
    occ = 0.8
    th = max(abs(displaced_parity(thermal_state([occ]), [x, p]) - np.exp(-(x**2 + p**2) / (2 * occ + 1))
                 / (2 * occ + 1)) for x in grid for p in grid)

    tmsv = 0.0
    for r in (0.1, 0.5, 1.0, 1.7):
        ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
        cm = np.array([[ch, -sh, 0, 0], [-sh, ch, 0, 0], [0, 0, ch, sh], [0, 0, sh, ch]])
        tmsv = max(tmsv, abs(log_negativity(GaussianState(cm), [0]) - 2 * r / np.log(2)))

    pos = 0.0
    for n in range(2, 6):
        rng = np.random.default_rng(n)
        best = min((minimize(_potential, np.sort(rng.uniform(-n, n, n)), method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 40000, "maxfev": 80000})
                    for _ in range(20)), key=lambda r: r.fun)
        brute = np.sort(root(_gradient, np.sort(best.x), tol=1e-15).x)
        pos = max(pos, np.abs(equilibrium_positions(n) - brute).max())
    report(8, [
        ("coherent parity grid < 1e-9", coh < 1e-9, f"{coh:.1e}"),
        ("thermal parity grid < 1e-9", th < 1e-9, f"{th:.1e}"),
        ("TMSV E_N vs 2r/ln2 < 1e-9", tmsv < 1e-9, f"{tmsv:.1e}"),
        ("positions vs brute force n<=5 < 1e-8", pos < 1e-8, f"{pos:.1e}"),
    ])
