import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from dmx.errors import HistoryCapExceeded
from dmx.grid import GridSpec, MediumMap, Rectangle, sample_medium
from dmx.materials import LorentzMaterial, LorentzPole, kernel_lambda
from dmx.oracle import HistoryBuffer, NonlocalSimulation, Region, convolve, drude_regions, memory_work, step_nonlocal
from dmx.solver import Simulation, SourceSpec, StepScheme


@dataclass(frozen=True)
class UniformSource(SourceSpec):
    """Spatially constant drive, so the field stays in the k = 0 mode."""

    def profile(self, grid):
        return np.ones(grid.shape("E3"))


def _filled(kernel, dt, samples):
    samples = np.asarray(samples, dtype=float)
    h = HistoryBuffer(kernel, dt, samples.shape[1:], len(samples))
    for u in samples:
        h.append(u)
    return h


class TestConvolve:
    def test_constant_history_drude(self):
        # [TRIVIAL] Riemann sum of a constant: w^2 n dt
        h = _filled(LorentzMaterial.drude(3.0), 0.1, np.ones((25, 2)))
        for n in (1, 7, 25):
            np.testing.assert_allclose(convolve(h, n), 9.0 * n * 0.1, rtol=1e-14)

    def test_zero_history(self):
        h = _filled(LorentzMaterial.drude(2.0, 0.4), 0.1, np.zeros((10, 3)))
        assert not convolve(h).any()

    def test_empty(self):
        h = HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, 4, 10)
        np.testing.assert_array_equal(convolve(h, 0), np.zeros(4))

    def test_impulse(self):
        mat = LorentzMaterial((LorentzPole(1.3, 2.0, 0.3),))
        dt = 0.05
        u = np.zeros((40, 1))
        u[0] = 1.0
        h = _filled(mat, dt, u)
        for n in (1, 5, 40):
            # [TRIVIAL] single term: lambda((n - 1/2) dt) dt
            assert convolve(h, n)[0] == pytest.approx(float(kernel_lambda(mat, (n - 0.5) * dt)) * dt, rel=1e-14)

    def test_callable_kernel(self):
        h = _filled(lambda t: np.exp(-t), 0.1, np.ones((3, 1)))
        assert convolve(h)[0] == pytest.approx(0.1 * sum(math.exp(-(k + 0.5) * 0.1) for k in range(3)))

    def test_beyond_stored(self):
        h = HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, 1, 5)
        for _ in range(3):
            h.append(np.ones(1))
        with pytest.raises(ValueError):
            convolve(h, 4)
        with pytest.raises(HistoryCapExceeded):
            convolve(h, 6)


class TestCap:
    def test_refuses_large_buffer(self):
        with pytest.raises(HistoryCapExceeded):
            HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, (100, 100), 10 ** 4)

    def test_custom_cap(self):
        with pytest.raises(HistoryCapExceeded):
            HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, 10, 10, cap_bytes=799)
        HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, 10, 10, cap_bytes=800)

    def test_append_past_capacity(self):
        h = HistoryBuffer(LorentzMaterial.drude(1.0), 0.1, 2, 2)
        h.append(np.ones(2))
        h.append(np.ones(2))
        with pytest.raises(HistoryCapExceeded):
            h.append(np.ones(2))

    def test_simulation_cap(self):
        g = GridSpec(-1.6, 1.6, -1.6, 1.6, 32, 32)
        m = sample_medium(MediumMap(background=(1.0, 1.0)), g)
        with pytest.raises(HistoryCapExceeded):
            NonlocalSimulation.from_medium(g, m, StepScheme.from_cfl(g, 0.5, n_steps=10 ** 5))


lorentz = st.builds(LorentzPole, st.floats(0.1, 3.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))


class TestDiscreteIdentities:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(lorentz, min_size=1, max_size=3), st.integers(2, 64), st.integers(0, 2 ** 32 - 1))
    def test_fubini(self, poles, n, seed):
        rng = np.random.default_rng(seed)
        mat = LorentzMaterial(tuple(poles))
        u = rng.normal(size=(n, 3))
        dt = 0.07
        hu = _filled(mat, dt, u)
        hU = _filled(mat, dt, np.cumsum(u, axis=0))
        lhs = sum(convolve(hu, m) for m in range(1, n + 1))
        rhs = convolve(hU, n)
        scale = np.abs(lhs).max() + np.abs(rhs).max()
        # [DERIVED] swapping the order of a finite double sum
        assert np.abs(lhs - rhs).max() <= 1e-12 * scale

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 5.0), st.one_of(st.just(0.0), st.floats(1e-3, 3.0)), st.integers(1, 256),
           st.integers(0, 2 ** 32 - 1), st.floats(0.005, 0.5))
    def test_memory_work_non_negative_drude(self, wp, gamma, n, seed, dt):
        rng = np.random.default_rng(seed)
        mat = LorentzMaterial.drude(wp, gamma)
        u = rng.normal(size=(n, 2))
        scale = mat.strength * dt * dt * float(np.sum(u * u)) * n
        assert memory_work(_filled(mat, dt, u)) >= -1e-10 * scale

    @settings(max_examples=60, deadline=None)
    @given(st.lists(lorentz, min_size=1, max_size=3), st.integers(1, 256), st.integers(0, 2 ** 32 - 1),
           st.floats(0.1, 1.0))
    def test_memory_work_non_negative_resolved_lorentz(self, poles, n, seed, frac):
        # sampled Lorentz kernels are discretely passive once dt * max(w0, wp) <= 0.02
        rng = np.random.default_rng(seed)
        mat = LorentzMaterial(tuple(poles))
        dt = frac * 0.02 / max(max(p.omega_0, p.omega_p) for p in poles)
        u = rng.normal(size=(n, 2))
        scale = mat.strength * dt * dt * float(np.sum(u * u)) * n
        assert memory_work(_filled(mat, dt, u)) >= -1e-10 * scale

    def test_memory_work_matches_quadratic_form(self):
        rng = np.random.default_rng(5)
        mat = LorentzMaterial((LorentzPole(1.0, 2.0, 0.3),))
        dt, n = 0.05, 30
        u = rng.normal(size=(n, 1))
        lam = kernel_lambda(mat, (np.arange(n) + 0.5) * dt)
        T = np.array([[lam[i - k] if k <= i else 0.0 for k in range(n)] for i in range(n)])
        # [DERIVED] dt^2 u^T T u with T lower-triangular Toeplitz
        assert memory_work(_filled(mat, dt, u)) == pytest.approx(dt * dt * float(u[:, 0] @ T @ u[:, 0]), rel=1e-12)

    def test_under_resolved_lorentz_can_be_negative(self):
        # documented limit: a nearly undamped pole with w0 dt ~ 0.4
        mat = LorentzMaterial((LorentzPole(1.0, 2.9, 0.004),))
        dt, n = 0.13, 256
        lam = kernel_lambda(mat, (np.arange(n) + 0.5) * dt)
        c = lam.copy()
        c[1:] /= 2
        from scipy.linalg import toeplitz
        w, v = np.linalg.eigh(toeplitz(c))
        assert w[0] < 0
        assert memory_work(_filled(mat, dt, v[:, :1])) < 0


def _pair(gamma, n_steps):
    g = GridSpec(-1.6, 1.6, -1.6, 1.6, 32, 32)
    mm = MediumMap(rectangles=(Rectangle(-0.8, 0.8, -0.8, 0.8, 4.0, 2.0, gamma, gamma),))
    src = SourceSpec(omega=5.0, center=(-0.6, 0.1), a=25.0)
    sc = StepScheme.from_cfl(g, 0.9, n_steps=n_steps)
    m = sample_medium(mm, g)
    return Simulation(g, m, sc, src), NonlocalSimulation.from_medium(g, m, sc, source=src)


class TestEquivalence:
    @pytest.mark.parametrize("gamma", [0.0, 0.3])
    def test_matches_solver(self, gamma):
        a, b = _pair(gamma, 200)
        worst = 0.0
        for _ in range(200):
            a.step()
            step_nonlocal(b)
            worst = max(worst, max(float(np.abs(getattr(a.state, f) - getattr(b.state, f)).max())
                                   for f in ("E3", "H1", "H2")))
        assert np.abs(a.state.E3).max() > 1e-3
        assert worst <= 1e-10

    def test_vanishing_data(self):
        g = GridSpec(-1.6, 1.6, -1.6, 1.6, 16, 16)
        m = sample_medium(MediumMap(background=(2.0, 1.0)), g)
        sim = NonlocalSimulation.from_medium(g, m, StepScheme.from_cfl(g, 0.5, n_steps=100))
        sim.run(100)
        assert not (sim.state.E3.any() or sim.state.H1.any() or sim.state.H2.any())

    def test_drude_regions(self):
        we2 = np.array([[0.0, 4.0], [4.0, 9.0]])
        ge = np.array([[0.0, 0.1], [0.2, 0.1]])
        regs = drude_regions(we2, ge)
        assert len(regs) == 3
        assert sum(int(r.mask.sum()) for r in regs) == 3
        assert all(isinstance(r, Region) for r in regs)


def _lorentz_0d(dt, T, pole, omega):
    g = GridSpec(0.0, 4.0, 0.0, 4.0, 4, 4)
    n = round(T / dt)
    sc = StepScheme.from_dt(g, dt, n)
    mask = np.ones(g.shape("E3"), bool)
    sim = NonlocalSimulation(g, sc, electric=[Region(mask, LorentzMaterial((pole,)))],
                             source=UniformSource(omega=omega), boundary="periodic")
    sim.run(n)
    assert np.ptp(sim.state.E3) == 0.0 and not sim.state.H1.any()
    return float(sim.state.E3[0, 0])


def _lorentz_reference(T, pole, omega):
    # E' = sin(w t) - wp^2 q',  q'' + 2 g q' + w0^2 q = E
    wp2, w0, g = pole.omega_p ** 2, pole.omega_0, pole.gamma

    def rhs(t, y):
        e, q, p = y
        return [math.sin(omega * t) - wp2 * p, p, e - 2 * g * p - w0 * w0 * q]

    sol = solve_ivp(rhs, (0.0, T), [0.0, 0.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14)
    return float(sol.y[0, -1])


class TestLorentzZeroMode:
    def test_second_order(self):
        pole = LorentzPole(1.0, 2.0, 0.1)
        T, omega = 20.0, 1.5
        ref = _lorentz_reference(T, pole, omega)
        errs = [abs(_lorentz_0d(dt, T, pole, omega) - ref) for dt in (0.008, 0.004, 0.002)]
        for a, b in zip(errs, errs[1:]):
            assert 3.5 <= a / b <= 4.5
