import numpy as np
import pytest

from conftest import random_instance
from relayneut.baselines import (assign_spectrum, assignment_precoders, baseline_report,
                                 ic_relay, os_blocks, repeater_relay, subcarrier_secrecy)
from relayneut.channel import ChannelSet, Scenario, equivalent_channel
from relayneut.rates import amplified_noise, relay_tx_power


class TestRelays:
    def test_repeater_identity(self):
        r = repeater_relay(Scenario(2, 8, 2, 1.0, 16.0))
        np.testing.assert_allclose(r.matrix, np.eye(16), atol=1e-15)
        assert r.structure == "scaled-identity"

    @pytest.mark.parametrize("budget", [0.3, 7.0, 1234.5])
    def test_repeater_trace(self, budget):
        r = repeater_relay(Scenario(3, 4, 3, 1.0, budget))
        assert np.real(np.trace(r.matrix @ r.matrix.conj().T)) == pytest.approx(budget)

    def test_repeater_noise_grows(self):
        sc, ch = random_instance(2, 4, 2, 0)
        lo = amplified_noise(ch, repeater_relay(sc.with_powers(relay_power=1.0)), 0)
        hi = amplified_noise(ch, repeater_relay(sc.with_powers(relay_power=10.0)), 0)
        assert np.linalg.eigvalsh(hi - lo).min() >= -1e-12

    def test_ic_is_direct(self, table1):
        sc = table1.scenario
        r = ic_relay(sc)
        ch = table1.channels
        np.testing.assert_array_equal(equivalent_channel(ch, r, 0, 1), ch.H(1, 0))
        assert relay_tx_power(ch, r, table1.precoders) == 0.0


class TestAssignment:
    def test_os_blocks(self):
        assert os_blocks(2, 8) == [(0, 1, 2, 3), (4, 5, 6, 7)]
        blocks = os_blocks(3, 8)
        flat = [m for b in blocks for m in b]
        assert sorted(flat) == list(range(8)) and len(set(flat)) == 8

    @pytest.mark.parametrize("seed", range(10))
    def test_disjoint_and_budgets(self, seed):
        sc, ch = random_instance(3, 8, 2, seed, dist="complex_gaussian")
        for which in ("repeater", "ic"):
            r = repeater_relay(sc) if which == "repeater" else ic_relay(sc)
            for mode in ("FS", "OS"):
                a = assign_spectrum(ch, r, sc, mode)
                flat = [m for act in a.active for m in act]
                assert len(flat) == len(set(flat))
                p = assignment_precoders(a, 8)
                for i, act in enumerate(a.active):
                    if act:
                        assert p.power(i) == pytest.approx(sc.tx_power[i], abs=1e-9)
                    else:
                        assert p.power(i) == 0.0

    def test_os_respects_blocks(self):
        sc, ch = random_instance(2, 8, 2, 3, dist="complex_gaussian")
        a = assign_spectrum(ch, ic_relay(sc), sc, "OS")
        assert set(a.active[0]) <= {0, 1, 2, 3} and set(a.active[1]) <= {4, 5, 6, 7}

    def test_fs_picks_larger_proxy(self):
        sc, ch = random_instance(2, 8, 2, 4, dist="complex_gaussian")
        r = ic_relay(sc)
        s = subcarrier_secrecy(ch, r, sc)
        a = assign_spectrum(ch, r, sc, "FS")
        for m in range(8):
            owners = [i for i in range(2) if m in a.active[i]]
            if np.any(s[:, m] > 0):
                assert owners == [int(np.argmax(s[:, m]))]
            else:
                assert owners == []

    def test_tie_break_lowest_index(self):
        M = 2
        h = np.zeros((2, 2, M), complex)
        h[0, 0] = h[1, 1] = 1.0
        f = g = np.zeros((2, M, 2), complex)
        ch = ChannelSet(h, f, g)
        sc = Scenario(2, M, 2, 1.0, 1.0)
        a = assign_spectrum(ch, ic_relay(sc), sc, "FS")
        assert a.active == ((0, 1), ())

    def test_degraded_channel_zero(self):
        M = 4
        h = np.full((2, 2, M), 1.0 + 0j)
        h[0, 0] = h[1, 1] = 0.5
        f = g = np.zeros((2, M, 2), complex)
        ch = ChannelSet(h, f, g)
        sc = Scenario(2, M, 2, 10.0, 10.0)
        for mode in ("FS", "OS"):
            a = assign_spectrum(ch, ic_relay(sc), sc, mode)
            assert a.active == ((), ())
            assert baseline_report(ch, sc, "ic", mode).sum_secrecy == 0.0

    def test_bad_mode(self, table1):
        with pytest.raises(ValueError):
            assign_spectrum(table1.channels, ic_relay(table1.scenario), table1.scenario, "XS")
        with pytest.raises(ValueError):
            baseline_report(table1.channels, table1.scenario, "amplify", "FS")


class TestReports:
    def test_ic_invariant_to_relay_budget(self):
        sc, ch = random_instance(2, 8, 2, 0)
        vals = {baseline_report(ch, sc.with_powers(relay_power=v), "ic", "FS").sum_secrecy
                for v in (1.0, 10.0, 1000.0)}
        assert len(vals) == 1

    def test_fs_beats_os_on_average(self):
        fs, os_ = [], []
        for seed in range(100):
            sc, ch = random_instance(2, 8, 2, seed)
            fs.append(baseline_report(ch, sc, "ic", "FS").sum_secrecy)
            os_.append(baseline_report(ch, sc, "ic", "OS").sum_secrecy)
        assert np.mean(fs) > np.mean(os_)

    def test_repeater_declines_with_budget(self):
        lo, hi = [], []
        for seed in range(100):
            sc, ch = random_instance(2, 8, 2, seed)
            lo.append(baseline_report(ch, sc.with_powers(relay_power=10.0), "repeater",
                                      "FS").sum_secrecy)
            hi.append(baseline_report(ch, sc.with_powers(relay_power=1000.0), "repeater",
                                      "FS").sum_secrecy)
        assert np.mean(hi) < np.mean(lo)

    def test_report_is_exact(self):
        sc, ch = random_instance(2, 8, 2, 2)
        rep = baseline_report(ch, sc, "repeater", "FS")
        assert not rep.simplified
        assert rep.relay_power_used > 0
