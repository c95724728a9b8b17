import warnings

import numpy as np
import pytest

from radialmodes.chain import ChainConfig, build_model, equilibrium_positions, generator, model_from_positions
from radialmodes.compiler import Instruction, Schedule
from radialmodes.gaussian import propagator, random_symplectic, rotation, squeezer
from radialmodes.transfer import (
    Jitter,
    avg_qubit_fidelity,
    bs_time_scaling,
    endpoint_bs_transfer,
    entanglement_swap_scenario,
    excitation_profile,
    heating_fidelity,
    ladder_transform,
    power_law_r2,
    swap_time_scaling,
    transfer_time,
)

# 1/2 + sqrt(0.76)/3 + 0.76/6, evaluated once and frozen
FIDELITY_AT_076 = 0.9172599296


class TestLadderTransform:
    def test_identity(self):
        lt = ladder_transform(np.eye(6))
        np.testing.assert_array_equal(lt.passive, np.eye(3))
        np.testing.assert_array_equal(lt.active, np.zeros((3, 3)))

    @pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
    def test_rotation_is_phase(self, theta):
        lt = ladder_transform(rotation(theta))
        assert lt.passive[0, 0] == pytest.approx(np.exp(-1j * theta), abs=1e-14)
        assert abs(lt.active[0, 0]) < 1e-14

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 3.7])
    def test_squeeze_active_part(self, alpha):
        lt = ladder_transform(squeezer(alpha))
        assert abs(lt.active[0, 0]) == pytest.approx(abs(alpha - 1 / alpha) / 2, abs=1e-14)

    def test_symplectic_identity_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            assert ladder_transform(random_symplectic(n, rng, 1.2)).identity_defect() < 1e-9


class TestExcitationProfile:
    def test_initial_time(self):
        cfg = ChainConfig.uniform(5, 10.0)
        prof = excitation_profile(cfg, cfg.bare_frequencies, [0.0])
        np.testing.assert_allclose(prof.probabilities[0], [1, 0, 0, 0, 0], atol=1e-15)

    def test_number_conserving_total(self):
        cfg = ChainConfig.uniform(6, 20.0)
        prof = excitation_profile(cfg, cfg.bare_frequencies, np.linspace(0, 300, 31))
        total = prof.probabilities.sum(axis=1)
        assert np.all(np.abs(total - 1) <= 2 * prof.leakage + 1e-12)
        assert not prof.warning

    def test_n10_at_10(self):
        cfg = ChainConfig.uniform(10, 10.0)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            prof = excitation_profile(cfg, cfg.bare_frequencies, [625.0])
        assert prof.probabilities[0, 9] == pytest.approx(0.85, abs=0.02)
        assert prof.warning and rec

    def test_schedule_matches_constant(self):
        cfg = ChainConfig.uniform(4, 10.0)
        sched = Schedule(cfg, (Instruction(cfg.bare_frequencies, 100.0),))
        a = excitation_profile(cfg, sched, [30.0, 100.0])
        b = excitation_profile(cfg, cfg.bare_frequencies, [30.0, 100.0])
        np.testing.assert_allclose(a.probabilities, b.probabilities, atol=1e-12)


class TestTransferTime:
    @pytest.mark.parametrize("w,rel", [(5.0, 1e-3), (10.0, 1e-4), (20.0, 1e-5)])
    def test_two_ion_resonant_swap(self, w, rel):
        m = build_model(ChainConfig.uniform(2, w))
        wt, k = m.effective_frequencies[0], m.coupling[0, 1]
        # normal-mode frequencies of the pair; the dynamics run at half of them
        lp, lm = np.sqrt(wt**2 + wt * k), np.sqrt(wt**2 - wt * k)
        r = transfer_time(m, 0, 1)
        assert r.time == pytest.approx(2 * np.pi / (lp - lm), rel=rel)
        assert r.probability == pytest.approx(1.0, abs=2e-4)

    def test_brute_force_peak(self):
        m = build_model(ChainConfig(3, (12.0, 30.0, 12.0)))
        r = transfer_time(m, 0, 2)
        h = generator(m)
        ts = np.linspace(r.time - 2, r.time + 2, 801)
        p = [abs(0.5 * (s[2, 0] + s[5, 3] + 1j * (s[5, 0] - s[2, 3]))) ** 2
             for s in (propagator(h, t).s for t in ts)]
        assert ts[int(np.argmax(p))] == pytest.approx(r.time, abs=5e-3)

    def test_endpoint_n10(self):
        r = endpoint_bs_transfer(10, 5.0)
        assert r.time == pytest.approx(5600.0, rel=0.05)
        assert r.probability > 0.99

    def test_n_squared_scaling(self):
        ns = np.arange(4, 11)
        assert power_law_r2(ns, bs_time_scaling(ns), 2) > 0.99

    def test_power_law_r2_exact(self):
        x = np.arange(1, 6)
        assert power_law_r2(x, 3 * x**2, 2) == pytest.approx(1.0)
        assert power_law_r2(x, 3 * x**2, 1) < 1.0


class TestFidelity:
    def test_endpoints(self):
        assert avg_qubit_fidelity(1.0) == pytest.approx(1.0, abs=1e-15)
        assert avg_qubit_fidelity(0.0) == 0.5

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((200000, 2)) + 1j * rng.standard_normal((200000, 2))
        z /= np.linalg.norm(z, axis=1)[:, None]
        a2, b2 = np.abs(z[:, 0]) ** 2, np.abs(z[:, 1]) ** 2
        for p in (0.2, 0.76, 0.95):
            # amplitude damping with real transmitted amplitude sqrt(p)
            f = a2**2 + (1 - p) * a2 * b2 + 2 * np.sqrt(p) * a2 * b2 + p * b2**2
            assert avg_qubit_fidelity(p) == pytest.approx(f.mean(), abs=2e-3)

    def test_monotone(self):
        f = avg_qubit_fidelity(np.linspace(0, 1, 10001))
        assert np.all(np.diff(f) >= 0)
        assert f.min() >= 0.5 and f.max() <= 1.0

    def test_regression_value(self):
        assert avg_qubit_fidelity(0.76) == pytest.approx(FIDELITY_AT_076, abs=1e-9)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            avg_qubit_fidelity(1.2)

    def test_heating(self):
        assert heating_fidelity(0.0, 1.0) == 1.0
        assert heating_fidelity(100.0, 1.4e-3) == pytest.approx(0.8, abs=0.02)
        assert heating_fidelity(200.0, 0.7e-3) == pytest.approx(heating_fidelity(100.0, 1.4e-3))

    def test_heating_warns(self):
        with pytest.warns(UserWarning):
            heating_fidelity(1000.0, 1e-3)


@pytest.fixture(scope="module")
def relay():
    return entanglement_swap_scenario("relay")


@pytest.fixture(scope="module")
def direct():
    return entanglement_swap_scenario("direct")


def _entangled_pair_value():
    held = entanglement_swap_scenario("relay", segment_times=(0.0, 0.0), samples=2)
    return held.negativity[1][-1]


class TestSwap:
    def test_relay_transfers_entanglement(self, relay):
        start = _entangled_pair_value()
        assert start > 2.0
        assert relay.final == pytest.approx(start, rel=0.05)
        assert len(relay.segment_times) == 2

    def test_direct_transfers_entanglement(self, direct, relay):
        assert direct.final == pytest.approx(_entangled_pair_value(), rel=0.05)
        assert direct.segment_times[0] > 4 * sum(relay.segment_times)

    def test_participants_on_resonance(self, relay):
        assert relay.frame_mismatch < 1e-9

    def test_segments_nearly_passive(self, relay):
        u = equilibrium_positions(4)
        for ins in relay.schedule.instructions[1:]:
            m = model_from_positions(relay.schedule.base_config.with_frequencies(ins.frequencies), u)
            s = propagator(generator(m, m.effective_frequencies), ins.duration).s
            assert ladder_transform(s).leakage < 1e-2

    @pytest.mark.xfail(strict=True, reason="counter-rotating coupling gives an active part near 5e-3; see notes")
    def test_segments_pure_rotations_1e6(self, relay):
        u = equilibrium_positions(4)
        for ins in relay.schedule.instructions[1:]:
            m = model_from_positions(relay.schedule.base_config.with_frequencies(ins.frequencies), u)
            s = propagator(generator(m, m.effective_frequencies), ins.duration).s
            assert ladder_transform(s).leakage < 1e-6

    def test_degenerate_relay_creates_nothing(self):
        r = entanglement_swap_scenario("relay", n=3, entangle_time=0.0, segment_times=(50.0,))
        start = {k: v[0] for k, v in r.negativity.items()}
        for k, v in r.negativity.items():
            # only the weak ground-state correlations of the coupled chain are present
            assert v.max() < 1e-2
            assert v.max() <= start[k] + 5e-3

    @pytest.mark.xfail(strict=True, reason="the coupled ground state already holds about 6e-3 ebits; see notes")
    def test_degenerate_relay_exactly_zero(self):
        r = entanglement_swap_scenario("relay", n=3, entangle_time=0.0, segment_times=(50.0,))
        assert max(v.max() for v in r.negativity.values()) < 1e-9

    def test_needs_three_ions(self):
        with pytest.raises(ValueError):
            entanglement_swap_scenario("relay", n=2)

    def test_jitter_deterministic(self, relay):
        kw = dict(segment_times=relay.segment_times, samples=2, jitter=Jitter())
        a = entanglement_swap_scenario("relay", rng=np.random.default_rng(7), **kw)
        b = entanglement_swap_scenario("relay", rng=np.random.default_rng(7), **kw)
        c = entanglement_swap_scenario("relay", rng=np.random.default_rng(8), **kw)
        assert a.final == b.final
        assert a.final != c.final

    def test_jitter_study(self, relay, direct):
        rng = np.random.default_rng(2024)
        runs = {"relay": [], "direct": []}
        for name, nominal in (("relay", relay), ("direct", direct)):
            for _ in range(100):
                r = entanglement_swap_scenario(name, segment_times=nominal.segment_times, samples=2,
                                               jitter=Jitter(), rng=rng)
                runs[name].append(r.final)
        assert np.mean(runs["relay"]) >= 0.9 * relay.final
        assert np.mean(runs["direct"]) == pytest.approx(1.2, abs=0.3)
        assert direct.final == pytest.approx(2.2, abs=0.1)

    def test_time_scaling(self):
        ns = np.arange(5, 9)
        t = swap_time_scaling(ns)
        for a in range(len(ns) - 1):
            n = ns[a]
            assert t["relay"][a + 1] / t["relay"][a] == pytest.approx((n + 1) / n, rel=0.15)
            assert t["direct"][a + 1] / t["direct"][a] == pytest.approx(((n + 1) / n) ** 3, rel=0.15)
        assert np.all(t["direct"] > t["relay"])
