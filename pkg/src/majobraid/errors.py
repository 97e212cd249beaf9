"""First-order braiding errors from single accidental pairs.

Each coupling ``ki`` is studied on its own: one accidental pair, split by
``i delta gamma_1 gamma_2``, attached to one computational Majorana through the
``eps_ki`` term. The pair's island parity is conserved by the unperturbed
Hamiltonian and the pair term is a constant inside each parity sector, so the
adiabatic eigenframes do not depend on ``delta``. :class:`NormCalculator`
exploits this: frames and slow matrix elements are computed once per path and
only the dynamical phases change along a ``delta`` sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import island_parity, spectral_norm
from .propagation import (
    DEFAULT_QUADRATURE,
    DEFAULT_STEPS_PER_LEG,
    AdiabaticPropagator,
    Correction,
    QuadratureError,
    _cluster_phases,
    _integrate_blocks,
    adiabatic_propagator,
    correction_from_samples,
    cycle_grid,
    drive,
    full_propagator,
    slow_matrix_elements,
    steps_for,
)
from .schedule import PathSpec
from .system import (
    KI_CHOICES,
    ConfigError,
    DeviceSpec,
    coulomb_operators,
    delta_operator,
    eps_operator,
    extended_appendix_set,
    ki_parts,
)

COUPLINGS = KI_CHOICES + ("b2", "g1")
INDEPENDENT = ("b2", "11", "12", "21")
EQUAL_GROUPS = (("b2", "g1"), ("11", "22", "32"), ("12", "31"))


@dataclass(frozen=True)
class ErrorModel:
    """Unperturbed drive plus unit-strength perturbation for one coupling."""

    which: str
    coulomb: tuple[np.ndarray, ...] = field(repr=False)
    pair: np.ndarray = field(repr=False)  # i gamma_1 gamma_2, multiplied by delta
    coupling: np.ndarray = field(repr=False)  # multiplied by eps
    parity: np.ndarray = field(repr=False)  # conserved island parity

    def static(self, delta: float) -> np.ndarray:
        return delta * self.pair

    def hamiltonian(self, path: PathSpec, delta: float, eps: float = 0.0):
        return drive(self.static(delta) + eps * self.coupling, self.coulomb, path)


def error_model(which: str) -> ErrorModel:
    if which in KI_CHOICES:
        coul, pair, pert = ki_parts(which)
        m = extended_appendix_set()
        parity = island_parity(m, ["gamma_1", "gamma_2"]).matrix
        return ErrorModel(which, tuple(coul), pair, pert, parity)
    if which in ("b2", "g1"):
        island = which[0]
        spec = DeviceSpec({island: 2})
        m = spec.majoranas()
        return ErrorModel(
            which,
            tuple(coulomb_operators(spec, m)),
            delta_operator(spec, island, 1, m),
            eps_operator(spec, which, m),
            spec.parity_operators(m)[island].matrix,
        )
    raise ConfigError(f"unknown coupling {which!r}; expected one of {COUPLINGS}")


class NormCalculator:
    """``||dU_which||_2`` along one path for any pair splitting ``delta``."""

    def __init__(self, which: str, path: PathSpec, steps_per_leg: int = DEFAULT_STEPS_PER_LEG):
        self.which = which
        self.path = path
        self.steps_per_leg = steps_per_leg
        self.model = error_model(which)
        times = cycle_grid(path, steps_per_leg)
        self.u0: AdiabaticPropagator = adiabatic_propagator(
            self.model.hamiltonian(path, 0.0), times, {"acc": self.model.parity}
        )
        self._slow = slow_matrix_elements(self.u0, self.model.coupling)
        self._cols, self._phase0 = _cluster_phases(self.u0)
        # pair term restricted to each cluster is (sign * identity)
        sign = []
        for cols in self._cols:
            g = self.u0.frames[0][:, cols]
            block = g.conj().T @ self.model.pair @ g
            s = float(np.real(block[0, 0]))
            if np.abs(block - s * np.eye(len(cols))).max() > 1e-9:
                raise ConfigError("pair term is not constant inside a parity sector")
            sign.append(s)
        self._sign = np.array(sign)

    def integral(self, delta: float, method: str = DEFAULT_QUADRATURE) -> np.ndarray:
        phase = self._phase0 + delta * self._sign[None, :] * self.u0.times[:, None]
        return _integrate_blocks(self._slow, self._cols, phase, self.u0.times, method)

    def norm(self, delta: float, method: str = DEFAULT_QUADRATURE, parity: int | None = None) -> float:
        """Spectral norm, maximized over sectors or restricted to pair parity ``parity``."""
        j = self.integral(delta, method)
        if parity is None:
            return spectral_norm(j)
        if parity not in (1, -1):
            raise ConfigError("parity must be +1, -1 or None")
        g0 = self.u0.frames[0]
        proj = 0.5 * (np.eye(self.u0.dim) + parity * self.model.parity)
        return spectral_norm(j @ (g0.conj().T @ proj @ g0))

    def correction(self, delta: float, method: str = DEFAULT_QUADRATURE, check: str | None = None, rtol: float = 0.01) -> Correction:
        """Full correction matrix ``dU`` at splitting ``delta``."""
        j = self.integral(delta, method)
        norm = spectral_norm(j)
        if check is not None:
            other = spectral_norm(self.integral(delta, check))
            if abs(other - norm) > rtol * max(norm, other, 1e-300):
                raise QuadratureError(f"{method} norm {norm:.6g} vs {check} norm {other:.6g}")
        g0 = self.u0.frames[0]
        col_phase = np.zeros(self.u0.dim)
        for c, cols in enumerate(self._cols):
            col_phase[cols] = self._phase0[-1, c] + delta * self._sign[c] * self.u0.times[-1]
        u_final = (self.u0.frames[-1] * np.exp(-1j * col_phase)[None, :]) @ g0.conj().T
        integral = g0 @ j @ g0.conj().T
        return Correction(-1j * u_final @ integral, norm, integral)

    def u0_final(self, delta: float) -> np.ndarray:
        col_phase = np.zeros(self.u0.dim)
        for c, cols in enumerate(self._cols):
            col_phase[cols] = self._phase0[-1, c] + delta * self._sign[c] * self.u0.times[-1]
        return (self.u0.frames[-1] * np.exp(-1j * col_phase)[None, :]) @ self.u0.frames[0].conj().T


def norm_curve(which: str, path: PathSpec, deltas, steps_per_leg: int = DEFAULT_STEPS_PER_LEG) -> np.ndarray:
    calc = NormCalculator(which, path, steps_per_leg)
    return np.array([calc.norm(float(d)) for d in deltas])


def local_maxima(x: np.ndarray, y: np.ndarray) -> list[tuple[float, float]]:
    """Interior and endpoint local maxima ``(x, y)`` sorted by height, largest first."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = []
    for i in range(len(y)):
        left = y[i - 1] if i > 0 else -np.inf
        right = y[i + 1] if i + 1 < len(y) else -np.inf
        if y[i] >= left and y[i] > right or y[i] > left and y[i] >= right:
            out.append((float(x[i]), float(y[i])))
    return sorted(out, key=lambda p: -p[1])


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Width between the outermost half-maximum crossings (linear interpolation)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * y.max()
    above = np.flatnonzero(y >= half)
    i, j = above[0], above[-1]
    left = x[i] if i == 0 else x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
    right = x[j] if j == len(x) - 1 else x[j] + (y[j] - half) * (x[j + 1] - x[j]) / (y[j] - y[j + 1])
    return float(right - left)


@dataclass(frozen=True)
class OrderCheck:
    """Residuals ``||U_full - (U0 + eps dU)||_2`` for a list of ``eps``."""

    eps: tuple[float, ...]
    residuals: tuple[float, ...]
    correction_norm: float

    @property
    def ratios(self) -> tuple[float, ...]:
        """Residual reduction factor each time ``eps`` is halved (eps sorted descending)."""
        pairs = sorted(zip(self.eps, self.residuals), reverse=True)
        return tuple(a[1] / b[1] for a, b in zip(pairs, pairs[1:]))


def perturbation_order(
    which: str,
    path: PathSpec,
    delta: float,
    eps_values=(0.1, 0.05, 0.025),
    steps_per_leg: int | None = None,
) -> OrderCheck:
    """Compare the exact propagator with the first-order reconstruction.

    The reconstruction uses exact unperturbed samples on the same grid, so the
    residual isolates the perturbative truncation.
    """
    model = error_model(which)
    h0 = model.hamiltonian(path, delta)
    if steps_per_leg is None:
        scale = np.sqrt(3) * path.delta_max + abs(delta) + max(eps_values)
        steps_per_leg = steps_for(path, scale)
    times = cycle_grid(path, steps_per_leg)
    samples = full_propagator(h0, times, return_samples=True)
    corr = correction_from_samples(samples, times, model.coupling, method="simpson")
    u0 = samples[-1]
    res = []
    for eps in eps_values:
        u = full_propagator(model.hamiltonian(path, delta, eps), times)
        res.append(spectral_norm(u - (u0 + eps * corr.matrix)))
    return OrderCheck(tuple(float(e) for e in eps_values), tuple(res), corr.norm)
