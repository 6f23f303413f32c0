import numpy as np
import pytest

from conftest import random_instance, random_precoders
from relayneut.channel import ChannelSet, Precoders
from relayneut.effin import effin_relay
from relayneut.neutralize import (InfeasibleError, UnreachableTargetError, build_system,
                                  family_coordinates, min_antennas, min_neutralization_power,
                                  neutralized_family, relay_from_target, solve_min_norm,
                                  weighted_min_power)
from relayneut.rates import leakage_rate, neutralization_residual, relay_tx_power


def off_block_norm(R, M, N):
    mask = np.kron(np.eye(M), np.ones((N, N))) == 0
    return float(np.max(np.abs(R[mask]))) if mask.any() else 0.0


class TestMinAntennas:
    @pytest.mark.parametrize("K, M, S, expected", [(3, 16, (8, 8, 8), 2),
                                                  (3, 16, (16, 16, 16), 3),
                                                  (2, 8, (8, 8), 2),
                                                  (2, 2, (2, 2), 2)])
    def test_values(self, K, M, S, expected):
        assert min_antennas(K, M, S) == expected

    def test_exact_boundary(self):
        # (K-1) sum S = 4 M exactly: N = 2 suffices
        assert min_antennas(2, 4, (4, 4)) == 2
        assert min_antennas(2, 4, (4, 1)) == 2
        assert min_antennas(2, 5, (1, 1)) == 1

    def test_rejects_bad_streams(self):
        with pytest.raises(ValueError):
            min_antennas(2, 4, (5, 1))


class TestSystem:
    def test_table1_dimensions(self, table1):
        sys = build_system(table1.channels, table1.precoders)
        # P1 has one stream, P2 two: (1 + 2) * M(K-1) = 6 rows, (MN)^2 = 16 unknowns
        assert sys.A.shape == (6, 16) and sys.consistent
        assert sys.null_dim == 10

    def test_all_zero_precoders(self, table1):
        sys = build_system(table1.channels, Precoders.zeros(2, 2))
        assert sys.A.shape == (0, 16) and sys.null_dim == 16
        np.testing.assert_array_equal(solve_min_norm(sys).matrix, 0)

    def test_table1_min_norm_matches_printed(self, table1):
        R = solve_min_norm(build_system(table1.channels, table1.precoders)).matrix
        assert np.max(np.abs(R - table1.relays["min_norm"])) <= 1e-3

    def test_table1_residual(self, table1):
        R = solve_min_norm(build_system(table1.channels, table1.precoders))
        assert neutralization_residual(table1.channels, R, table1.precoders) <= 1e-10

    def test_infeasible_single_antenna(self):
        residuals = []
        for seed in range(5):
            _, ch = random_instance(2, 2, 1, seed)
            p = random_precoders(2, 2, np.random.default_rng(seed))
            sys = build_system(ch, p)
            with pytest.raises(InfeasibleError) as err:
                solve_min_norm(sys)
            residuals.append(err.value.residual)
        assert min(residuals) > 1e-3

    def test_zero_cross_channels(self, rng):
        _, ch = random_instance(2, 3, 2, 1)
        h = np.array(ch.h)
        h[0, 1] = h[1, 0] = 0.0
        ch0 = ChannelSet(h, ch.f, ch.g)
        p = random_precoders(2, 3, rng)
        sys = build_system(ch0, p)
        np.testing.assert_allclose(solve_min_norm(sys).matrix, 0, atol=1e-14)
        assert min_neutralization_power(ch0, p, sys) == pytest.approx(0.0, abs=1e-20)


class TestFamily:
    def test_zero_coordinates_is_min_norm(self, table1):
        sys = build_system(table1.channels, table1.precoders)
        np.testing.assert_array_equal(neutralized_family(sys, np.zeros(sys.null_dim)).matrix,
                                      solve_min_norm(sys).matrix)

    @pytest.mark.parametrize("seed", range(4))
    def test_members_neutralize(self, seed):
        rng = np.random.default_rng(seed)
        _, ch = random_instance(3, 2, min_antennas(3, 2, (2, 2, 2)), seed)
        p = random_precoders(3, 2, rng)
        sys = build_system(ch, p)
        y = rng.standard_normal(sys.null_dim) + 1j * rng.standard_normal(sys.null_dim)
        r = neutralized_family(sys, 5 * y)
        assert neutralization_residual(ch, r, p) <= 1e-8
        for i in range(3):
            assert leakage_rate(ch, r, p, i) <= 1e-8

    def test_coordinates_round_trip(self, table1, rng):
        sys = build_system(table1.channels, table1.precoders)
        y = rng.standard_normal(sys.null_dim) + 1j * rng.standard_normal(sys.null_dim)
        r = neutralized_family(sys, y)
        np.testing.assert_allclose(family_coordinates(sys, r), y, atol=1e-10)

    def test_printed_null_space_member(self, table1):
        sys = build_system(table1.channels, table1.precoders)
        printed = table1.relays["null_space_member"]
        y = family_coordinates(sys, printed)
        rebuilt = neutralized_family(sys, y).matrix
        # printed to four decimals; the printed matrix lies in the family up to rounding
        assert np.max(np.abs(rebuilt - printed)) <= 2e-3

    def test_wrong_length(self, table1):
        sys = build_system(table1.channels, table1.precoders)
        with pytest.raises(ValueError):
            neutralized_family(sys, np.zeros(3))

    @pytest.mark.parametrize("seed", range(5))
    def test_invertible_precoders_block_diagonal(self, seed):
        rng = np.random.default_rng(seed)
        _, ch = random_instance(2, 3, 2, seed)
        p = random_precoders(2, 3, rng)
        R = solve_min_norm(build_system(ch, p)).matrix
        assert off_block_norm(R, 3, 2) <= 1e-9
        np.testing.assert_allclose(R, effin_relay(ch).matrix, atol=1e-8)


class TestMinPower:
    def test_table1_positive_and_below_null_member(self, table1):
        ch, p = table1.channels, table1.precoders
        pmin = min_neutralization_power(ch, p)
        assert 0 < pmin <= relay_tx_power(ch, table1.relays["null_space_member"], p)
        assert pmin == pytest.approx(relay_tx_power(ch, table1.relays["min_norm"], p), rel=1e-3)

    @pytest.mark.parametrize("seed", range(4))
    def test_weighted_minimum_not_above_min_norm(self, seed):
        rng = np.random.default_rng(seed)
        _, ch = random_instance(2, 2, 2, seed)
        p = random_precoders(2, 2, rng, rank=1)
        at_zero, best = weighted_min_power(ch, p)
        assert best <= at_zero + 1e-9
        assert at_zero == pytest.approx(min_neutralization_power(ch, p), rel=1e-12)


class TestRelayFromTarget:
    def test_direct_target_gives_zero(self, table1, rng):
        ch = table1.channels
        p = random_precoders(2, 2, rng)
        T = ch.H_stacked() @ p.stacked()
        r = relay_from_target(ch, p, T, check=False)
        np.testing.assert_allclose(r.matrix, 0, atol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_reachable_target_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        _, ch = random_instance(2, 3, 2, seed)
        p = random_precoders(2, 3, rng)
        r0 = effin_relay(ch)
        T = (ch.H_stacked() + ch.GH_stacked() @ r0.matrix @ ch.F_stacked()) @ p.stacked()
        r = relay_from_target(ch, p, T)
        assert neutralization_residual(ch, r, p) <= 1e-8

    def test_unreachable_target(self, rng):
        # a single relay antenna cannot realize an arbitrary block-diagonal target
        _, ch = random_instance(2, 4, 1, 0)
        p = random_precoders(2, 4, rng)
        T = np.kron(np.eye(2), np.ones((4, 4))) * (rng.standard_normal((8, 8)) + 0j)
        with pytest.raises(UnreachableTargetError) as err:
            relay_from_target(ch, p, T)
        assert err.value.residual > 1e-3
