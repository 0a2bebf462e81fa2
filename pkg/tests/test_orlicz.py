"""N-function evaluation and the three Orlicz-type norms."""

import math

import numpy as np
import pytest

from strip_spectrum.spectral.models import NormKind, NormRequest
from strip_spectrum.spectral.orlicz import (
    SMALL_S,
    a_eval,
    a_inverse,
    amemiya,
    average_norm,
    b_eval,
    delta2_constant,
    dual_norm_bruteforce,
    luxemburg_bound_from_integral,
    luxemburg_norm,
    norm,
    norm_triple,
    orlicz_norm,
    young_gap,
)

CHAIN_TOL = 1e-9


def _request(f, w, kind=NormKind.LUXEMBURG) -> NormRequest:
    return NormRequest(np.asarray(f, dtype=float), np.asarray(w, dtype=float), kind)


class TestNFunctions:
    @pytest.mark.parametrize("fn", [a_eval, b_eval])
    def test_series_branch_is_continuous(self, fn):
        below = fn(SMALL_S * (1 - 1e-9))
        above = fn(SMALL_S * (1 + 1e-9))
        assert above == pytest.approx(below, rel=1e-6)

    def test_values(self):
        assert b_eval(1.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-14)
        assert a_eval(1.0) == pytest.approx(math.e - 2, rel=1e-14)
        assert a_eval(-1.0) == a_eval(1.0)

    def test_vectorized(self):
        out = b_eval(np.array([0.0, 1e-6, 2.0]))
        assert out.shape == (3,)
        assert out[0] == 0.0

    def test_a_saturates(self):
        assert a_eval(800.0) == math.inf
        assert math.isfinite(a_eval(700.0))

    @pytest.mark.parametrize("s", [0.5, 1.0, 3.0])
    def test_a_inverse_round_trip(self, s):
        assert float(a_inverse(a_eval(s))) == pytest.approx(s, rel=1e-9)

    def test_a_inverse_at_zero(self):
        assert a_inverse(0.0) == 0.0
        out = a_inverse(np.array([0.0, 1.0]))
        assert out[0] == 0.0 and np.all(np.isfinite(out))

    @pytest.mark.parametrize("s", [1e-9, 1e-6, 1e-3, 30.0, 700.0])
    def test_a_inverse_small_and_large(self, s):
        assert a_inverse(a_eval(s)) == pytest.approx(s, rel=1e-10)

    def test_a_inverse_rejects_negative(self):
        with pytest.raises(ValueError, match="inverted"):
            a_inverse(-1.0)

    @pytest.mark.parametrize("s", [0.1, 1.0, 2.5])
    def test_young_equality(self, s):
        assert young_gap(s, math.expm1(s)) == pytest.approx(0.0, abs=1e-12)

    def test_young_inequality(self, rng):
        s = rng.uniform(0, 5, 200)
        t = rng.uniform(0, 5, 200)
        assert np.all(young_gap(s, t) >= -1e-12)

    def test_delta2_constant(self):
        c = delta2_constant()
        assert 1.0 < c < 8.0


class TestIndicatorNorms:
    def test_luxemburg_unit_indicator(self):
        assert luxemburg_norm(_request([1.0], [1.0])) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-10)

    def test_orlicz_unit_indicator(self):
        assert orlicz_norm(_request([1.0], [1.0], NormKind.ORLICZ)) == pytest.approx(float(a_inverse(1.0)), rel=1e-8)

    @pytest.mark.parametrize("mass", [0.25, 1.0, 4.0])
    def test_average_norm_of_indicator(self, mass):
        value = average_norm(_request([1.0], [mass], NormKind.AVERAGE))
        assert value == pytest.approx(mass * float(a_inverse(1.0)), rel=1e-8)

    def test_zero_function(self):
        for kind in NormKind:
            assert norm(_request([0.0, 0.0], [1.0, 2.0], kind)) == 0.0

    def test_zero_weight_nodes_dropped(self):
        req = _request([5.0, 1.0], [0.0, 1.0])
        assert len(req.weights) == 1
        assert luxemburg_norm(req) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-10)


class TestNormChain:
    def test_luxemburg_orlicz_chain(self, rng):
        for _ in range(50):
            pieces = int(rng.integers(1, 8))
            f = rng.exponential(1.0, pieces) * rng.choice([0.1, 1.0, 10.0])
            w = rng.uniform(0.05, 2.0, pieces)
            lux = luxemburg_norm(_request(f, w))
            orl = orlicz_norm(_request(f, w, NormKind.ORLICZ))
            assert lux <= orl * (1 + CHAIN_TOL)
            assert orl <= 2 * lux * (1 + CHAIN_TOL)

    @pytest.mark.parametrize("kind", list(NormKind))
    def test_homogeneity(self, kind):
        f, w = np.array([0.3, 2.0, 1.1]), np.array([0.5, 0.2, 1.0])
        base = norm(_request(f, w, kind), omega_mass=2.0)
        scaled = norm(_request(3.0 * f, w, kind), omega_mass=2.0)
        assert scaled == pytest.approx(3.0 * base, rel=1e-8)

    @pytest.mark.parametrize("kind", list(NormKind))
    def test_monotone_in_pointwise_order(self, kind, rng):
        for _ in range(20):
            pieces = int(rng.integers(1, 8))
            f = rng.exponential(1.0, pieces) * rng.choice([0.1, 1.0, 10.0])
            g = f + rng.exponential(0.5, pieces) * rng.integers(0, 2, pieces)
            w = rng.uniform(0.05, 2.0, pieces)
            smaller = norm(_request(-f, w, kind), omega_mass=1.5)
            larger = norm(_request(g, w, kind), omega_mass=1.5)
            assert smaller <= larger * (1 + CHAIN_TOL)

    def test_norm_triple_keys(self):
        out = norm_triple(np.array([1.0]), np.array([1.0]))
        assert set(out) == {k.value for k in NormKind}
        assert out[NormKind.LUXEMBURG.value] <= out[NormKind.ORLICZ.value]

    def test_integral_bound_dominates_luxemburg(self, rng):
        f = rng.uniform(0, 10, 20)
        w = rng.uniform(0.1, 1.0, 20)
        for kappa0 in (0.5, 3.0, 21.0):
            assert luxemburg_norm(_request(f, w)) <= luxemburg_bound_from_integral(f, w, kappa0) * (1 + 1e-12)


class TestBruteForceDual:
    def test_single_node_is_exact(self):
        f, w = np.array([2.0]), np.array([0.7])
        assert dual_norm_bruteforce(f, w) == pytest.approx(amemiya(f, w, 1.0), rel=1e-8)

    @pytest.mark.parametrize("nodes", [2, 3])
    def test_matches_amemiya(self, nodes, rng):
        for _ in range(10):
            f = rng.uniform(0.1, 3.0, nodes)
            w = rng.uniform(0.2, 1.5, nodes)
            direct = dual_norm_bruteforce(f, w)
            value = orlicz_norm(_request(f, w, NormKind.ORLICZ))
            assert direct <= value * (1 + 1e-9)
            assert direct == pytest.approx(value, rel=1e-6)


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="same length"):
            _request([1.0, 2.0], [1.0])

    def test_nonfinite_values(self):
        with pytest.raises(ValueError, match="finite"):
            _request([math.nan], [1.0])

    def test_negative_weights(self):
        with pytest.raises(ValueError, match="nonnegative"):
            _request([1.0], [-1.0])

    def test_average_norm_needs_positive_mass(self):
        with pytest.raises(ValueError, match="omega_mass"):
            average_norm(_request([1.0], [1.0], NormKind.AVERAGE), omega_mass=0.0)

    def test_integral_bound_needs_positive_kappa(self):
        with pytest.raises(ValueError, match="kappa0"):
            luxemburg_bound_from_integral(np.ones(1), np.ones(1), 0.0)

    def test_bruteforce_node_limit(self):
        with pytest.raises(ValueError, match="one to three"):
            dual_norm_bruteforce(np.ones(4), np.ones(4))
