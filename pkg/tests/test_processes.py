"""Base kernels: Gaussian laws, log-space laws, and generator matrices."""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from restartk import (
    BrownianWithDrift,
    DomainError,
    FiniteCTMC,
    GeometricBrownian,
    Interval,
    Subset,
    ctmc_from_dict,
    ctmc_from_json,
    exp_weighted_integral,
)


def _phi(u):
    return 0.5 * (1.0 + math.erf(u / math.sqrt(2.0)))


class TestBrownianWithDrift:
    def test_transition_probability_against_erf(self):
        p = BrownianWithDrift(mu=0.5, sigma=2.0)
        t, x = 1.5, 0.3
        m, sd = x + 0.5 * t, 2.0 * math.sqrt(t)
        got = p.transition_probability(t, x, Interval(-1.0, 2.0))
        want = _phi((2.0 - m) / sd) - _phi((-1.0 - m) / sd)
        assert abs(got - want) < 1e-12

    def test_density_normalises_and_matches_probability(self):
        p = BrownianWithDrift(mu=-0.3, sigma=0.7)
        t, x = 0.8, 1.0
        mass, _ = integrate.quad(lambda z: p.transition_density(t, x, z), -10.0, 10.0)
        assert abs(mass - 1.0) < 1e-9
        prob, _ = integrate.quad(lambda z: p.transition_density(t, x, z), 0.0, 1.5)
        assert abs(prob - p.transition_probability(t, x, Interval(0.0, 1.5))) < 1e-9

    def test_chapman_kolmogorov_by_convolution(self):
        p = BrownianWithDrift(mu=0.4, sigma=1.2)
        s, t, x, z = 0.5, 0.9, 0.2, 1.1
        conv, _ = integrate.quad(
            lambda y: p.transition_density(s, x, y) * p.transition_density(t, y, z),
            -15.0,
            15.0,
        )
        assert abs(conv - p.transition_density(s + t, x, z)) < 1e-9

    def test_moments_match_density_quadrature(self):
        p = BrownianWithDrift(mu=0.5, sigma=1.5)
        t, x = 0.7, -0.4
        for k in range(5):
            numeric, _ = integrate.quad(
                lambda z: z**k * p.transition_density(t, x, z), -20.0, 20.0
            )
            assert abs(p.moment(k, t, x) - numeric) < 1e-8 * max(1.0, abs(numeric))

    def test_time_zero(self):
        p = BrownianWithDrift()
        assert p.transition_probability(0.0, 0.5, Interval(0.0, 1.0)) == 1.0
        assert p.transition_probability(0.0, 2.0, Interval(0.0, 1.0)) == 0.0
        assert p.moment(3, 0.0, 2.0) == 8.0
        with pytest.raises(DomainError):
            p.transition_density(0.0, 0.0, 0.0)

    def test_sampler_moments(self):
        p = BrownianWithDrift(mu=1.0, sigma=0.5)
        rng = np.random.default_rng(3)
        t, x, n = 0.6, 0.2, 50000
        draws = np.array([p.sample_transition(t, x, rng) for _ in range(n)])
        assert abs(draws.mean() - (x + 1.0 * t)) < 5 * 0.5 * math.sqrt(t / n)
        assert abs(draws.var() - 0.25 * t) < 0.01

    def test_density_envelope_uniform_past_s_min(self):
        p = BrownianWithDrift(mu=0.8, sigma=0.9)
        s_min = 0.2
        C, eta = p.density_envelope(1.3, s_min)
        assert eta == 0.0
        for s in (0.2, 0.5, 1.0, 4.0, 30.0):
            for z in (-3.0, 0.0, 1.3, 5.0):
                assert p.transition_density(s, 0.0, z) <= C * math.exp(eta * s) + 1e-15

    def test_parameter_validation(self):
        with pytest.raises(DomainError):
            BrownianWithDrift(sigma=0.0)
        with pytest.raises(DomainError):
            BrownianWithDrift(mu=math.inf)
        with pytest.raises(DomainError):
            BrownianWithDrift().transition_probability(-1.0, 0.0, Interval(0.0, 1.0))


class TestGeometricBrownian:
    def test_transition_probability_against_erf(self):
        p = GeometricBrownian(mu=0.1, sigma=0.4)
        t, x = 2.0, 1.5
        m = math.log(x) + (0.1 - 0.5 * 0.16) * t
        sd = 0.4 * math.sqrt(t)
        got = p.transition_probability(t, x, Interval(1.0, 3.0))
        want = _phi((math.log(3.0) - m) / sd) - _phi((math.log(1.0) - m) / sd)
        assert abs(got - want) < 1e-12

    def test_targets_touching_zero(self):
        p = GeometricBrownian(mu=0.1, sigma=0.4)
        a = p.transition_probability(1.0, 1.0, Interval(0.0, 2.0))
        b = p.transition_probability(1.0, 1.0, Interval(-math.inf, 2.0))
        assert abs(a - b) < 1e-15

    def test_density_normalises(self):
        p = GeometricBrownian(mu=0.2, sigma=0.5)
        mass, _ = integrate.quad(
            lambda z: p.transition_density(1.3, 0.8, z), 0.0, math.inf, limit=200
        )
        assert abs(mass - 1.0) < 1e-9

    def test_moment_growth_rates(self):
        p = GeometricBrownian(mu=0.25, sigma=0.6)
        assert abs(p.moment_growth_rate(1) - 0.25) < 1e-15
        assert abs(p.moment_growth_rate(2) - (2 * 0.25 + 0.36)) < 1e-15
        # k=1 moment is the exponential of the drift alone
        assert abs(p.moment(1, 2.0, 1.5) - 1.5 * math.exp(0.5)) < 1e-12

    def test_moments_match_density_quadrature(self):
        p = GeometricBrownian(mu=0.1, sigma=0.3)
        t, x = 0.9, 1.2
        for k in (1, 2, 3):
            numeric, _ = integrate.quad(
                lambda z: z**k * p.transition_density(t, x, z), 0.0, 60.0, limit=300
            )
            assert abs(p.moment(k, t, x) - numeric) < 1e-7 * max(1.0, abs(numeric))

    def test_sampler_is_lognormal(self):
        p = GeometricBrownian(mu=0.2, sigma=0.5)
        rng = np.random.default_rng(5)
        t, x, n = 0.8, 1.0, 50000
        logs = np.array([math.log(p.sample_transition(t, x, rng)) for _ in range(n)])
        m = math.log(x) + (0.2 - 0.125) * t
        sd = 0.5 * math.sqrt(t)
        assert abs(logs.mean() - m) < 5 * sd / math.sqrt(n)
        assert abs(logs.std() - sd) < 0.01

    def test_positivity_validation(self):
        p = GeometricBrownian()
        with pytest.raises(DomainError):
            p.transition_probability(1.0, 0.0, Interval(0.0, 1.0))
        with pytest.raises(DomainError):
            p.transition_density(1.0, 1.0, -0.5)
        with pytest.raises(DomainError):
            p.sample_transition(1.0, -1.0, np.random.default_rng(0))
        with pytest.raises(DomainError):
            p.density_envelope(0.0, 0.1)


class TestFiniteCTMC:
    def test_two_state_symmetric_closed_form(self):
        chain = FiniteCTMC([[-1.0, 1.0], [1.0, -1.0]])
        t = math.log(2.0) / 2.0
        P = chain.transition_matrix(t)
        # P00(t) = (1 + exp(-2t))/2 = 3/4 at t = ln(2)/2
        assert abs(P[0, 0] - 0.75) < 1e-14
        assert abs(P[0, 1] - 0.25) < 1e-14

    def test_two_state_asymmetric_closed_form(self):
        a, b, t = 2.0, 3.0, 0.4
        chain = FiniteCTMC([[-a, a], [b, -b]])
        P = chain.transition_matrix(t)
        want00 = b / (a + b) + a / (a + b) * math.exp(-(a + b) * t)
        assert abs(P[0, 0] - want00) < 1e-13

    def test_rows_are_distributions(self, three_state_chain):
        for t in (0.0, 0.05, 1.0, 8.0):
            P = three_state_chain.transition_matrix(t)
            assert np.all(P >= -1e-15)
            assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)

    def test_chapman_kolmogorov_exact(self, three_state_chain):
        s, t = 0.3, 1.1
        Ps = three_state_chain.transition_matrix(s)
        Pt = three_state_chain.transition_matrix(t)
        Pst = three_state_chain.transition_matrix(s + t)
        assert np.abs(Ps @ Pt - Pst).max() < 1e-13

    def test_transition_probability_sums_rows(self, three_state_chain):
        got = three_state_chain.transition_probability(0.7, 1, Subset([0, 2]))
        P = three_state_chain.transition_matrix(0.7)
        assert abs(got - (P[1, 0] + P[1, 2])) < 1e-15

    def test_stationary_distribution(self, three_state_chain):
        pi = three_state_chain.stationary_distribution()
        assert abs(pi.sum() - 1.0) < 1e-12
        assert np.abs(pi @ three_state_chain.Q).max() < 1e-12
        P = three_state_chain.transition_matrix(2.0)
        assert np.abs(pi @ P - pi).max() < 1e-12

    def test_resolvent_matches_weighted_time_integral(self, three_state_chain):
        # lam*(lam I - Q)^(-1) is the exponentially weighted average of e^{Qs}
        lam = 1.3
        R = lam * three_state_chain.resolvent_matrix(lam)
        r = exp_weighted_integral(
            three_state_chain.transition_matrix, lam, math.inf, rel_tol=1e-11
        )
        assert np.abs(r.value - R).max() < 1e-9

    def test_restarted_generator_is_a_generator(self, three_state_chain):
        nu = np.array([0.2, 0.5, 0.3])
        G = three_state_chain.restarted_generator(2.0, nu)
        assert np.allclose(G.sum(axis=1), 0.0, atol=1e-13)
        off = G - np.diag(np.diag(G))
        assert np.all(off >= 0.0)

    def test_sampler_matches_matrix(self):
        a = 1.5
        chain = FiniteCTMC([[-a, a], [a, -a]])
        rng = np.random.default_rng(9)
        t, n = 0.5, 20000
        stays = sum(chain.sample_transition(t, 0, rng) == 0 for _ in range(n)) / n
        want = 0.5 * (1.0 + math.exp(-2 * a * t))
        assert abs(stays - want) < 4.0 * math.sqrt(want * (1 - want) / n)

    def test_moment_and_state_values(self):
        chain = FiniteCTMC([[-1.0, 1.0], [1.0, -1.0]], state_values=[2.0, -1.0])
        assert chain.state_value(1) == -1.0
        t = 0.3
        P = chain.transition_matrix(t)
        want = P[0, 0] * 4.0 + P[0, 1] * 1.0
        assert abs(chain.moment(2, t, 0) - want) < 1e-14

    def test_default_labels_are_indices(self):
        chain = FiniteCTMC([[-1.0, 1.0], [1.0, -1.0]])
        assert chain.values.tolist() == [0.0, 1.0]

    def test_generator_validation(self):
        with pytest.raises(DomainError, match="square"):
            FiniteCTMC([[-1.0, 1.0]])
        with pytest.raises(DomainError, match=r"Q\[0,1\]"):
            FiniteCTMC([[1.0, -1.0], [1.0, -1.0]])
        with pytest.raises(DomainError, match="row 1"):
            FiniteCTMC([[-1.0, 1.0], [1.0, -0.5]])
        with pytest.raises(DomainError, match="finite"):
            FiniteCTMC([[-math.inf, math.inf], [1.0, -1.0]])
        with pytest.raises(DomainError, match="labels"):
            FiniteCTMC([[-1.0, 1.0], [1.0, -1.0]], state_values=[1.0])

    def test_matrix_exponential_overflow_diagnostic(self):
        chain = FiniteCTMC([[-1e200, 1e200], [1e200, -1e200]])
        with pytest.raises(DomainError, match="rescale"):
            chain.transition_matrix(1.0)

    def test_negative_time_rejected(self, three_state_chain):
        with pytest.raises(DomainError):
            three_state_chain.transition_matrix(-0.1)


class TestChainLoading:
    def test_from_dict(self):
        chain = ctmc_from_dict({"Q": [[-1.0, 1.0], [2.0, -2.0]], "values": [5.0, 7.0]})
        assert chain.space.n == 2
        assert chain.values.tolist() == [5.0, 7.0]

    def test_dict_validation_messages(self):
        with pytest.raises(DomainError, match="'Q'"):
            ctmc_from_dict({})
        with pytest.raises(DomainError, match="unknown entries"):
            ctmc_from_dict({"Q": [[0.0]], "rate": 1.0})
        with pytest.raises(DomainError, match="row 1 has 1 entries"):
            ctmc_from_dict({"Q": [[-1.0, 1.0], [0.0]]})
        with pytest.raises(DomainError, match="row 0, column 1"):
            ctmc_from_dict({"Q": [[-1.0, "x"], [0.0, 0.0]]})
        with pytest.raises(DomainError, match="row 0, column 0"):
            ctmc_from_dict({"Q": [[True, False], [0.0, 0.0]]})
        with pytest.raises(DomainError, match="list of rows"):
            ctmc_from_dict({"Q": "nope"})
        with pytest.raises(DomainError, match="expected an object"):
            ctmc_from_dict([1, 2])

    def test_from_json(self, tmp_path):
        path = tmp_path / "chain.json"
        path.write_text(json.dumps({"Q": [[-2.0, 2.0], [1.0, -1.0]]}))
        chain = ctmc_from_json(path)
        assert chain.space.n == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(DomainError, match="not valid JSON"):
            ctmc_from_json(bad)
