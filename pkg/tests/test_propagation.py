"""Adiabatic and exact propagators, first-order corrections and closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from majobraid.errors import NormCalculator, error_model
from majobraid.operators import SIGMA_X, SIGMA_Z, spectral_norm
from majobraid.propagation import (
    AdiabaticityError,
    GridTooCoarseError,
    QuadratureError,
    StepTooLargeError,
    adiabatic_propagator,
    analytic_branches,
    analytic_norm,
    analytic_valid,
    cycle_grid,
    drive,
    full_propagator,
    perturbative_correction,
    steps_for,
)
from majobraid.schedule import PathSpec
from majobraid.system import DeviceSpec, coulomb_operators, delta_operator, eps_operator

PATH = PathSpec(start_corner=2)


def constant(h):
    return lambda t: np.broadcast_to(h, np.shape(t) + h.shape)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


@pytest.fixture(scope="module")
def calc11():
    return NormCalculator("11", PATH)


class TestFullPropagator:
    def test_constant_hamiltonian(self):
        h = random_hermitian(np.random.default_rng(0), 6)
        t = np.linspace(0, 2.0, 201)
        u = full_propagator(constant(h), t)
        assert np.abs(u - expm(-2j * h)).max() <= 1e-10

    def test_second_order(self):
        def h_of_t(t):
            t = np.asarray(t)[..., None, None]
            return np.cos(3 * t) * SIGMA_X + t * SIGMA_Z

        ref = full_propagator(h_of_t, np.linspace(0, 2, 1601))
        errs = [spectral_norm(full_propagator(h_of_t, np.linspace(0, 2, n + 1)) - ref) for n in (50, 100)]
        assert 3.0 <= errs[0] / errs[1] <= 5.0

    def test_unitary_samples(self):
        ops = coulomb_operators(DeviceSpec())
        steps = steps_for(PATH, math.sqrt(3) * PATH.delta_max)
        samples = full_propagator(drive(np.zeros((8, 8)), ops, PATH), cycle_grid(PATH, steps), return_samples=True)
        eye = np.eye(8)
        assert max(np.abs(u @ u.conj().T - eye).max() for u in samples) <= 1e-9

    def test_step_too_large(self):
        with pytest.raises(StepTooLargeError):
            full_propagator(constant(10 * SIGMA_Z), np.linspace(0, 1, 11))

    def test_conserves_island_parity(self):
        spec = DeviceSpec({"1": 2})
        h = drive(0.3 * delta_operator(spec, "1", 1), coulomb_operators(spec), PATH)
        u = full_propagator(h, cycle_grid(PATH, steps_for(PATH, math.sqrt(3) * PATH.delta_max + 0.3)))
        pi = spec.parity_operators()["1"].matrix
        assert np.abs(u @ pi - pi @ u).max() <= 1e-9

    @pytest.mark.parametrize("h_norm", [1.0, 866.1, 1e4])
    def test_steps_for(self, h_norm):
        n = steps_for(PATH, h_norm)
        assert n % 2 == 0
        assert PATH.t0 / n * h_norm < 0.1


class TestAdiabaticPropagator:
    def test_constant_hamiltonian(self):
        h = random_hermitian(np.random.default_rng(1), 4)
        t = np.linspace(0, 1.5, 301)
        u0 = adiabatic_propagator(constant(h), t)
        assert np.abs(u0.final() - expm(-1.5j * h)).max() <= 1e-8

    def test_samples_unitary(self):
        ops = coulomb_operators(DeviceSpec())
        u0 = adiabatic_propagator(drive(np.zeros((8, 8)), ops, PATH), cycle_grid(PATH, 400))
        s = u0.samples()
        eye = np.eye(8)
        assert np.abs(s @ np.conj(np.swapaxes(s, 1, 2)) - eye).max() <= 1e-9
        assert np.allclose(s[5], u0.at(5), atol=1e-14)

    def test_forward_then_reverse(self):
        ops = coulomb_operators(DeviceSpec())
        times = cycle_grid(PATH, 2000)
        zero = np.zeros((8, 8))
        fwd = adiabatic_propagator(drive(zero, ops, PATH), times)
        back = adiabatic_propagator(drive(zero, ops, PATH.reversed()), times)
        ground = fwd.cluster_columns(int(np.argmin(fwd.cluster_energy0)))
        g0 = fwd.frames[0][:, ground]
        w = g0.conj().T @ back.final() @ fwd.final() @ g0
        overlap = abs(np.trace(w)) / 4
        assert overlap >= 1 - 1e-6

    def test_gap_collapse(self):
        def h_of_t(t):
            return (1 - 2 * np.asarray(t))[..., None, None] * SIGMA_Z

        with pytest.raises(AdiabaticityError):
            adiabatic_propagator(h_of_t, np.linspace(0, 1, 101))

    def test_coarse_grid(self):
        def h_of_t(t):
            th = 2 * np.asarray(t)[..., None, None]
            return np.cos(th) * SIGMA_Z + np.sin(th) * SIGMA_X

        with pytest.raises(GridTooCoarseError):
            adiabatic_propagator(h_of_t, np.linspace(0, 3, 4))

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            adiabatic_propagator(constant(SIGMA_Z), np.array([0.0, 1.0, 0.5]))


class TestCorrection:
    def test_bus_term_commutes(self):
        # a coupling to Gamma_A commutes with the whole drive: the integral is T V
        spec = DeviceSpec({"b": 2})
        v = eps_operator(spec, "b1")
        h = drive(np.zeros((spec.dim, spec.dim)), coulomb_operators(spec), PATH)
        u0 = adiabatic_propagator(h, cycle_grid(PATH, 500), {"b": spec.parity_operators()["b"].matrix})
        corr = perturbative_correction(u0, v)
        assert np.abs(corr.integral - PATH.t_cycle * v).max() <= 1e-8

    def test_sine_zero(self, calc11):
        assert calc11.norm(math.pi / 3) <= 0.05

    def test_quadrature_check(self):
        model = error_model("12")
        coarse = cycle_grid(PATH, 20)
        u0 = adiabatic_propagator(model.hamiltonian(PATH, 600.0), coarse, {"acc": model.parity})
        with pytest.raises(QuadratureError):
            perturbative_correction(u0, model.coupling, check="trapezoid")

    def test_aliasing_caught_by_filon(self):
        # 12 rad per step: Simpson and trapezoid alias together, Filon does not
        model = error_model("12")
        u0 = adiabatic_propagator(model.hamiltonian(PATH, 600.0), cycle_grid(PATH, 50), {"acc": model.parity})
        perturbative_correction(u0, model.coupling, check="trapezoid")
        with pytest.raises(QuadratureError):
            perturbative_correction(u0, model.coupling, check="filon")

    def test_simpson_and_filon_agree(self, calc11):
        for d in (0.0, 20.0, 500.0):
            a, b = calc11.norm(d), calc11.norm(d, method="filon")
            assert abs(a - b) <= 1e-3 * max(a, b)

    def test_norm_bound(self, calc11):
        assert all(0 <= calc11.norm(d) <= 3 * PATH.t_cycle for d in np.linspace(-50, 650, 15))

    def test_calculator_matches_direct(self):
        # the delta shortcut reproduces a fresh propagation at that delta
        model = error_model("21")
        calc = NormCalculator("21", PATH, 1000)
        u0 = adiabatic_propagator(model.hamiltonian(PATH, 7.0), cycle_grid(PATH, 1000), {"acc": model.parity})
        direct = perturbative_correction(u0, model.coupling)
        assert calc.norm(7.0) == pytest.approx(direct.norm, rel=1e-8)
        assert np.abs(calc.correction(7.0).matrix - direct.matrix).max() <= 1e-8


class TestAnalytic:
    def test_eleven_at_twenty(self):
        assert analytic_norm("11", 20.0) == pytest.approx(abs(math.sin(60.0)) / 20.0, rel=1e-15)

    def test_b2_decays(self):
        assert analytic_norm("b2", 1e7) < 1e-7

    def test_twelve_halfway(self):
        # the 1/|delta +- delta_max| branch outweighs the 1/delta^2 one here
        br = analytic_branches("12", 250.0)
        assert br["slow"] == pytest.approx(math.pi * abs(math.cos(500.0)) / (4 * 250.0**2))
        assert analytic_norm("12", 250.0) == max(br.values()) > 100 * br["slow"]

    def test_twelve_halfway_numeric(self):
        calc = NormCalculator("12", PATH)
        assert calc.norm(250.0) == pytest.approx(analytic_norm("12", 250.0), rel=0.01)

    def test_every_branch_evaluated(self):
        assert set(analytic_branches("12", 30.0)) == {"slow", "res++", "res+-", "res-+", "res--"}
        assert set(analytic_branches("b2", 30.0)) == {"slow+", "slow-", "res+", "res-"}

    def test_validity(self):
        assert analytic_valid(20.0, 500.0)
        assert not analytic_valid(3.0, 500.0)
        assert not analytic_valid(498.0, 500.0)

    def test_unknown(self):
        with pytest.raises(ValueError):
            analytic_norm("13", 1.0)

    @settings(max_examples=40)
    @given(st.sampled_from(["12", "11", "21", "b2"]), st.floats(5.5, 490.0))
    def test_even_in_delta_for_slow_branch(self, which, d):
        assert analytic_branches(which, d).get("slow", 0) == analytic_branches(which, -d).get("slow", 0)
