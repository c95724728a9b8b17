import numpy as np
import pytest

from radialmodes.chain import ChainConfig, build_model
from radialmodes.compiler import Instruction, Schedule
from radialmodes.dynamics import evolve_schedule
from radialmodes.entanglement import (
    Bipartition,
    all_bipartitions,
    all_bipartitions_negativity,
    first_lobe_peak,
    log_negativity,
    pairwise_negativity,
    partial_transpose,
)
from radialmodes.errors import PartitionError
from radialmodes.gaussian import GaussianState, ground_state, random_symplectic, symplectic_form, vacuum


def _tmsv_by_beam_splitter(r):
    local = 0.5 * np.diag([np.exp(2 * r), np.exp(-2 * r), np.exp(-2 * r), np.exp(2 * r)])
    c = 1 / np.sqrt(2)
    bs = np.kron(np.eye(2), np.array([[c, c], [-c, c]]))
    return bs @ local @ bs.T


def _tmsv_closed_form(r):
    ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    return np.array([[ch, -sh, 0, 0], [-sh, ch, 0, 0], [0, 0, ch, sh], [0, 0, sh, ch]])


def _pt_spectrum(cm, flip):
    n = cm.shape[0] // 2
    d = np.ones(2 * n)
    for j in flip:
        d[n + j] = -1
    pt = d[:, None] * cm * d[None, :]
    return np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ pt)))[::2]


def _random_mixed(n, rng):
    s = random_symplectic(n, rng, 0.9)
    occ = rng.uniform(0, 0.5, n)
    return GaussianState(s @ np.diag(np.concatenate([occ, occ]) + 0.5) @ s.T)


class TestPartialTranspose:
    def test_involution(self):
        cm = _random_mixed(3, np.random.default_rng(0)).cm
        np.testing.assert_array_equal(partial_transpose(partial_transpose(cm, [0]), [0]), cm)

    def test_vacuum_unchanged(self):
        np.testing.assert_array_equal(partial_transpose(vacuum(3).cm, [0, 2]), vacuum(3).cm)

    def test_either_side_same_spectrum(self):
        cm = _random_mixed(4, np.random.default_rng(1)).cm
        a = partial_transpose(cm, [0, 1])
        b = partial_transpose(cm, [2, 3])
        om = symplectic_form(4)
        sa = np.sort(np.abs(np.linalg.eigvals(1j * om @ a)))
        sb = np.sort(np.abs(np.linalg.eigvals(1j * om @ b)))
        np.testing.assert_allclose(sa, sb, atol=1e-10)

    @pytest.mark.parametrize("party", [[], [0, 1, 2]])
    def test_bad_partition(self, party):
        with pytest.raises(PartitionError):
            partial_transpose(vacuum(3).cm, party)


class TestLogNegativity:
    def test_vacuum(self):
        for p in all_bipartitions(4):
            assert log_negativity(vacuum(4), p) == 0.0

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 1.7])
    def test_two_mode_squeezed(self, r):
        cm = _tmsv_by_beam_splitter(r)
        np.testing.assert_allclose(cm, _tmsv_closed_form(r), atol=1e-12)
        oracle = -np.sum(np.log2(2 * np.minimum(_pt_spectrum(_tmsv_closed_form(r), [1]), 0.5)))
        e = log_negativity(GaussianState(cm), [0])
        assert e == pytest.approx(2 * r / np.log(2), abs=1e-9)
        assert e == pytest.approx(oracle, abs=1e-9)
        assert np.sum(_pt_spectrum(cm, [1]) < 0.5) == 1

    def test_r_one_value(self):
        assert log_negativity(GaussianState(_tmsv_by_beam_splitter(1.0)), [0]) == pytest.approx(2.885, abs=1e-3)

    def test_local_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            st = _random_mixed(3, rng)
            sa = random_symplectic(1, rng)
            sb = random_symplectic(2, rng)
            local = np.zeros((6, 6))
            ia, ib = [0, 3], [1, 2, 4, 5]
            local[np.ix_(ia, ia)] = sa
            local[np.ix_(ib, ib)] = sb
            moved = GaussianState(local @ st.cm @ local.T)
            assert abs(log_negativity(moved, [0]) - log_negativity(st, [0])) < 1e-8

    def test_continuity(self):
        rng = np.random.default_rng(3)
        st = GaussianState(_tmsv_by_beam_splitter(0.8))
        e0 = log_negativity(st, [0])
        eta = 1e-6
        for _ in range(20):
            d = rng.standard_normal((4, 4))
            d = (d + d.T) / np.linalg.norm(d + d.T)
            cm = st.cm + eta * np.linalg.norm(st.cm) * d
            assert abs(log_negativity(cm, [0]) - e0) < 1e-3

    def test_product_mode_appended(self):
        st = _random_mixed(2, np.random.default_rng(4))
        big = np.zeros((6, 6))
        idx = [0, 1, 3, 4]
        big[np.ix_(idx, idx)] = st.cm
        big[2, 2] = big[5, 5] = 0.9
        pair = GaussianState(big).reduced([0, 1])
        assert log_negativity(pair, [0]) == pytest.approx(log_negativity(st, [0]), abs=1e-14)


class TestPartitions:
    def test_counts_and_labels(self):
        parts = all_bipartitions(4)
        assert len(parts) == 7
        labels = {p.label() for p in parts}
        assert {"1|234", "12|34", "14|23"} <= labels
        assert Bipartition(frozenset({3}), 4).canonical().label() == "123|4"

    def test_vacuum_not_inseparable(self):
        pm = all_bipartitions_negativity(vacuum(3))
        assert not pm.completely_inseparable
        assert all(v == 0 for v in pm.values.values())

    def test_too_many_modes(self):
        with pytest.raises(PartitionError, match="explicit"):
            all_bipartitions_negativity(vacuum(13))

    def test_pairwise_vacuum(self):
        np.testing.assert_array_equal(pairwise_negativity(vacuum(4)), np.zeros((4, 4)))

    def test_symmetric_chain_end_partitions_agree(self):
        cfg = ChainConfig.uniform(4, 5.0)
        sched = Schedule(cfg, (Instruction((2.0,) * 4, 20.0),))
        states = evolve_schedule(ground_state(build_model(cfg)), sched, np.linspace(0, 20, 41))
        for st in states[1:]:
            pm = all_bipartitions_negativity(st).by_label()
            assert abs(pm["1|234"] - pm["123|4"]) < 1e-8
            w = pairwise_negativity(st)
            np.testing.assert_allclose(w, w.T, atol=0)


class TestFirstLobePeak:
    def test_picks_first_lobe(self):
        t = np.linspace(0, 10, 1001)
        v = np.where(t < 4, np.sin(np.pi * t / 4), 0) + np.where(t > 6, 3 * np.sin(np.pi * (t - 6) / 4), 0)
        assert first_lobe_peak(t, v) == pytest.approx(2.0, abs=1e-9)

    def test_never_above_threshold(self):
        assert np.isnan(first_lobe_peak(np.arange(5.0), np.full(5, 0.01)))
