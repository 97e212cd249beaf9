"""Time evolution along a braiding cycle.

* :func:`adiabatic_propagator` -- non-Abelian parallel transport of degenerate
  eigenspaces plus dynamical phases, per conserved-parity sector.
* :func:`full_propagator` -- time-ordered product of midpoint exponentials.
* :func:`perturbative_correction` -- first-order correction of the cycle
  propagator from a weak coupling, ``U ~ U0 + eps * dU``.
* :func:`analytic_norm` -- asymptotic closed forms for the circular path.

Units: hbar = 1, energies in Delta_0, times in T_0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .operators import spectral_norm
from .schedule import PathSpec, couplings_array
from .system import Sector, all_sectors

HamiltonianFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_STEPS_PER_LEG = 2000
DEFAULT_QUADRATURE = "simpson"
QUADRATURES = ("simpson", "filon", "trapezoid")
FRAME_OVERLAP_MIN = math.cos(math.pi / 4)


class AdiabaticityError(RuntimeError):
    """Energy clusters approach each other or change multiplicity."""


class GridTooCoarseError(RuntimeError):
    """Successive eigenframes overlap too little to be matched."""


class StepTooLargeError(RuntimeError):
    """Time step violates ``h * ||H|| < 0.1``."""


class QuadratureError(RuntimeError):
    """Two quadrature rules disagree beyond tolerance."""


def drive(static: np.ndarray, operators: Sequence[np.ndarray], path: PathSpec) -> HamiltonianFn:
    """``H(t) = static + sum_k Delta_k(t) O_k`` as a vectorized callable."""
    ops = np.stack([np.asarray(o, dtype=complex) for o in operators])
    static = np.asarray(static, dtype=complex)

    def h_of_t(t: np.ndarray) -> np.ndarray:
        c = couplings_array(path, np.atleast_1d(t))
        return static[None] + np.einsum("tk,kij->tij", c, ops)

    return h_of_t


def cycle_grid(path: PathSpec, steps_per_leg: int = DEFAULT_STEPS_PER_LEG) -> np.ndarray:
    """Uniform grid over one cycle whose nodes include the leg boundaries."""
    if steps_per_leg < 1:
        raise ValueError("steps_per_leg must be positive")
    return np.linspace(0.0, path.t_cycle, 3 * steps_per_leg + 1)


def _eigh_batched(h: np.ndarray, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    ws, vs = [], []
    for i in range(0, len(h), chunk):
        w, v = np.linalg.eigh(h[i : i + chunk])
        ws.append(w)
        vs.append(v)
    return np.concatenate(ws), np.concatenate(vs)


def _clusters(w: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Split sorted eigenvalues into runs separated by gaps larger than ``tol``."""
    cuts = [0] + [i + 1 for i in range(len(w) - 1) if w[i + 1] - w[i] > tol] + [len(w)]
    return list(zip(cuts[:-1], cuts[1:]))


def _polar_batched(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unitary polar factors and smallest singular values of a matrix stack."""
    x, s, yh = np.linalg.svd(m)
    return x @ yh, s.min(axis=-1)


def _prefix_products(p: np.ndarray) -> np.ndarray:
    """``out[i] = p[i] @ p[i-1] @ ... @ p[0]`` by a log-depth scan."""
    out = p.copy()
    d = 1
    while d < len(out):
        out[d:] = out[d:] @ out[:-d]
        d *= 2
    return out


def _trapezoid_cumulative(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t)[:, None], axis=0)
    return out


@dataclass
class AdiabaticPropagator:
    """Adiabatic U0(t) on a time grid in factored form.

    ``U0(t_i) = G(t_i) diag(exp(-i phases[i])) G(0)^dagger`` where the columns
    of ``G`` are parallel-transported eigenframes (grouped by sector and energy
    cluster) embedded in the full register.
    """

    times: np.ndarray
    frames: np.ndarray = field(repr=False)  # (Nt, D, D)
    phases: np.ndarray = field(repr=False)  # (Nt, D)
    cluster_of: np.ndarray = field(repr=False)  # (D,) cluster id per column
    sector_of: np.ndarray = field(repr=False)  # (D,) sector id per column
    cluster_energy0: np.ndarray = field(repr=False)  # (n_clusters,)
    min_gap: float = math.inf

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def at(self, i: int) -> np.ndarray:
        g = self.frames[i]
        return (g * np.exp(-1j * self.phases[i])[None, :]) @ self.frames[0].conj().T

    def samples(self) -> np.ndarray:
        g = self.frames * np.exp(-1j * self.phases)[:, None, :]
        return g @ self.frames[0].conj().T[None]

    def final(self) -> np.ndarray:
        return self.at(len(self.times) - 1)

    def cluster_columns(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == cluster)


def adiabatic_propagator(
    h_of_t: HamiltonianFn,
    times: np.ndarray,
    conserved: Sequence[np.ndarray] | Mapping[str, np.ndarray] = (),
    degeneracy_tol: float = 1e-7,
    gap_floor: float | None = None,
) -> AdiabaticPropagator:
    """Adiabatic propagator by parallel transport of degenerate eigenspaces.

    The register is first split into joint eigenspaces of the ``conserved``
    operators; within each, eigenvalues of ``H(t)`` are grouped into clusters
    (runs with internal spacing below ``degeneracy_tol * max|E|``). Each
    cluster carries an orthonormal frame transported by projection and polar
    re-orthonormalization, and a dynamical phase integrated with the
    trapezoid rule.

    Raises
    ------
    AdiabaticityError
        cluster structure changes, or two clusters come closer than
        ``gap_floor`` (default ``1e-6 * max|E|``).
    GridTooCoarseError
        a frame's overlap with the next eigenspace has a singular value below
        cos(pi/4).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing 1-d grid")
    h = h_of_t(times)
    dim = h.shape[-1]
    if isinstance(conserved, Mapping):
        conserved = dict(conserved)
    else:
        conserved = {str(i): np.asarray(c) for i, c in enumerate(conserved)}
    sectors = all_sectors(conserved) if conserved else [Sector((), np.eye(dim, dtype=complex))]

    nt = len(times)
    frames = np.zeros((nt, dim, dim), dtype=complex)
    phases = np.zeros((nt, dim))
    cluster_of = np.zeros(dim, dtype=int)
    sector_of = np.zeros(dim, dtype=int)
    energies0 = []
    min_gap = math.inf
    col = 0
    n_clusters = 0
    for s_id, sec in enumerate(sectors):
        s = sec.basis
        hs = np.einsum("ia,tij,jb->tab", s.conj(), h, s, optimize=True)
        w, v = _eigh_batched(hs)
        scale = max(float(np.abs(w).max()), 1e-300)
        tol = degeneracy_tol * scale
        floor = 1e-6 * scale if gap_floor is None else gap_floor
        struct0 = _clusters(w[0], tol)
        lo = np.array([a for a, _ in struct0])
        hi = np.array([b for _, b in struct0])
        for a, b in struct0:
            if b - a > 1:
                spread = w[:, b - 1] - w[:, a]
                bad = np.flatnonzero(spread > tol)
                if bad.size:
                    raise AdiabaticityError(
                        f"degeneracy lifted at t={times[bad[0]]:.6g} (sector {sec.parities})"
                    )
        if len(struct0) > 1:
            gaps = w[:, lo[1:]] - w[:, hi[:-1] - 1]
            i_min = np.unravel_index(np.argmin(gaps), gaps.shape)
            min_gap = min(min_gap, float(gaps[i_min]))
            if gaps[i_min] < floor:
                raise AdiabaticityError(
                    f"gap {gaps[i_min]:.3g} below floor {floor:.3g} at t={times[i_min[0]]:.6g} "
                    f"(sector {sec.parities}); levels crossed or nearly crossed"
                )
        sec_frames = np.zeros((nt, sec.dim, sec.dim), dtype=complex)
        sec_energy = np.zeros((nt, len(struct0)))
        for c, (a, b) in enumerate(struct0):
            vc = v[:, :, a:b]
            overlap = np.conj(np.swapaxes(vc[1:], 1, 2)) @ vc[:-1]
            rot, smin = _polar_batched(overlap)
            bad = np.flatnonzero(smin < FRAME_OVERLAP_MIN)
            if bad.size:
                raise GridTooCoarseError(
                    f"eigenframe overlap {smin[bad[0]]:.3f} < cos(pi/4) at t={times[bad[0] + 1]:.6g}; refine the grid"
                )
            acc = np.concatenate([np.eye(b - a, dtype=complex)[None], _prefix_products(rot)])
            sec_frames[:, :, a:b] = vc @ acc
            sec_energy[:, c] = w[:, a:b].mean(axis=1)
        sec_phase = _trapezoid_cumulative(sec_energy, times)
        d = sec.dim
        frames[:, :, col : col + d] = np.einsum("ia,tab->tib", s, sec_frames)
        for c, (a, b) in enumerate(struct0):
            phases[:, col + a : col + b] = sec_phase[:, c : c + 1]
            cluster_of[col + a : col + b] = n_clusters + c
            energies0.append(sec_energy[0, c])
        sector_of[col : col + d] = s_id
        n_clusters += len(struct0)
        col += d
    return AdiabaticPropagator(times, frames, phases, cluster_of, sector_of, np.array(energies0), min_gap)


def full_propagator(
    h_of_t: HamiltonianFn,
    times: np.ndarray,
    check_step: bool = True,
    return_samples: bool = False,
    chunk: int = 1024,
):
    """Time-ordered product of midpoint exponentials ``exp(-i H(t_mid) h)``.

    Each exponential is built from a Hermitian eigendecomposition, so the
    result is unitary to rounding. The scheme is second order in the step.
    With ``return_samples`` the propagators at every grid node are returned
    as an ``(Nt, D, D)`` array instead of only the final one.
    """
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    if np.any(dt <= 0):
        raise ValueError("times must be strictly increasing")
    mids = 0.5 * (times[1:] + times[:-1])
    dim = h_of_t(mids[:1]).shape[-1]
    u = np.eye(dim, dtype=complex)
    samples = [u] if return_samples else None
    for k in range(0, len(mids), chunk):
        hm = h_of_t(mids[k : k + chunk])
        w, v = np.linalg.eigh(hm)
        steps = dt[k : k + chunk]
        if check_step:
            worst = float((np.abs(w).max(axis=1) * steps).max())
            if worst >= 0.1:
                raise StepTooLargeError(f"h*||H|| = {worst:.3g} >= 0.1; use a finer grid")
        exps = (v * np.exp(-1j * w * steps[:, None])[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
        for e in exps:
            u = e @ u
            if return_samples:
                samples.append(u)
    if return_samples:
        return np.stack(samples)
    return u


def steps_for(path: PathSpec, h_norm: float, margin: float = 0.09) -> int:
    """Even number of steps per leg so that ``h * h_norm < margin``."""
    n = max(2, math.ceil(path.t0 * h_norm / margin))
    return n + n % 2


# --- first-order correction --------------------------------------------------


def _filon_weights(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^1 (1-s) e^{a s} ds`` and ``int_0^1 s e^{a s} ds`` for imaginary ``a``."""
    small = np.abs(a) < 0.2
    a_big = np.where(small, 1.0, a)
    ea = np.exp(a_big)
    e1 = (ea - 1.0) / a_big
    e2 = (ea * (a_big - 1.0) + 1.0) / a_big**2
    if np.any(small):
        a_s = np.where(small, a, 0.0)
        s1 = np.zeros_like(a_s)
        s2 = np.zeros_like(a_s)
        term = np.ones_like(a_s)
        for k in range(12):
            s1 = s1 + term / (k + 1)
            s2 = s2 + term / (k + 2)
            term = term * a_s / (k + 1)
        e1 = np.where(small, s1, e1)
        e2 = np.where(small, s2, e2)
    return e1 - e2, e2


def _simpson_weights(t: np.ndarray) -> np.ndarray:
    n = len(t) - 1
    if n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9):
        raise ValueError("Simpson's rule needs a uniform grid")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h[0] / 3.0


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    h = np.diff(t)
    w = np.zeros(len(t))
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _cluster_phases(u0: AdiabaticPropagator) -> tuple[list[np.ndarray], np.ndarray]:
    n_cl = int(u0.cluster_of.max()) + 1
    cols = [u0.cluster_columns(c) for c in range(n_cl)]
    return cols, np.stack([u0.phases[:, c[0]] for c in cols], axis=1)


def _integrate_blocks(
    slow: np.ndarray, cols: list[np.ndarray], phase: np.ndarray, t: np.ndarray, method: str
) -> np.ndarray:
    """Sum over cluster blocks of ``int slow_ab(t) exp(i (phi_a - phi_b)) dt``."""
    if method == "filon":
        h = np.diff(t)
    elif method == "simpson":
        w = _simpson_weights(t)
    elif method == "trapezoid":
        w = _trapezoid_weights(t)
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    dim = slow.shape[1]
    out = np.zeros((dim, dim), dtype=complex)
    for ca, ia in enumerate(cols):
        for cb, ib in enumerate(cols):
            blk = slow[:, ia][:, :, ib]
            if not np.any(blk):
                continue
            theta = phase[:, ca] - phase[:, cb]
            if method == "filon":
                w0, w1 = _filon_weights(1j * np.diff(theta))
                f = h * np.exp(1j * theta[:-1])
                val = np.einsum("t,tab->ab", f * w0, blk[:-1]) + np.einsum("t,tab->ab", f * w1, blk[1:])
            else:
                val = np.einsum("t,tab->ab", w * np.exp(1j * theta), blk)
            out[np.ix_(ia, ib)] = val
    return out


def slow_matrix_elements(u0: AdiabaticPropagator, coupling: np.ndarray) -> np.ndarray:
    """``G(t)^dagger V G(t)`` on every grid node."""
    g = u0.frames
    return np.conj(np.swapaxes(g, 1, 2)) @ np.asarray(coupling, dtype=complex)[None] @ g


def interaction_integral(u0: AdiabaticPropagator, coupling: np.ndarray, method: str = DEFAULT_QUADRATURE) -> np.ndarray:
    """``int_0^T U0^dagger(t) V U0(t) dt`` expressed in the frame basis ``G(0)``.

    The returned matrix ``J`` satisfies ``int U0^dag V U0 = G0 J G0^dag``.

    ``method="filon"`` interpolates the slowly varying frame matrix elements
    linearly on each step and integrates the dynamical-phase factors exactly;
    ``"simpson"`` and ``"trapezoid"`` apply the plain rules to the full
    oscillating integrand.
    """
    cols, phase = _cluster_phases(u0)
    return _integrate_blocks(slow_matrix_elements(u0, coupling), cols, phase, u0.times, method)


@dataclass
class Correction:
    matrix: np.ndarray = field(repr=False)
    norm: float
    integral: np.ndarray = field(repr=False)


def perturbative_correction(
    u0: AdiabaticPropagator, coupling: np.ndarray, method: str = DEFAULT_QUADRATURE, check: str | None = None, rtol: float = 0.01
) -> Correction:
    """First-order correction ``dU = -i U0(T) int_0^T U0^dag(t) V U0(t) dt``.

    ``V`` is the coupling operator at unit strength (energy Delta_0), so the
    perturbed cycle propagator is ``U0(T) + eps * dU + O(eps^2)``. With
    ``check`` naming a second rule, the two norms must agree to ``rtol``
    (relative) or :class:`QuadratureError` is raised.
    """
    j = interaction_integral(u0, coupling, method)
    g0 = u0.frames[0]
    integral = g0 @ j @ g0.conj().T
    mat = -1j * u0.final() @ integral
    norm = spectral_norm(j)
    if check is not None:
        other = spectral_norm(interaction_integral(u0, coupling, check))
        if abs(other - norm) > rtol * max(norm, other, 1e-300):
            raise QuadratureError(f"{method} norm {norm:.6g} vs {check} norm {other:.6g} differ by more than {rtol:.0%}")
    return Correction(mat, norm, integral)


def correction_from_samples(u0_samples: np.ndarray, times: np.ndarray, coupling: np.ndarray, method: str = "simpson") -> Correction:
    """Same as :func:`perturbative_correction` for explicit ``U0(t_i)`` samples."""
    inner = np.conj(np.swapaxes(u0_samples, 1, 2)) @ coupling[None] @ u0_samples
    if method == "simpson":
        w = _simpson_weights(times)
    elif method == "trapezoid":
        w = _trapezoid_weights(times)
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    integral = np.einsum("t,tab->ab", w, inner)
    mat = -1j * u0_samples[-1] @ integral
    return Correction(mat, spectral_norm(integral), integral)


# --- closed forms for the circular path --------------------------------------

ANALYTIC_CHOICES = ("12", "11", "21", "b2")


def analytic_branches(which: str, delta: float, delta_max: float = 500.0) -> dict[str, float]:
    """Every branch of the asymptotic closed forms (energies in Delta_0).

    Where the combined expressions carry ``+-`` signs all sign combinations
    are evaluated; :func:`analytic_norm` takes the maximum.
    """
    d = float(delta)
    pm = (1.0, -1.0)
    out: dict[str, float] = {}

    def safe(num: float, den: float) -> float:
        return math.inf if den == 0 else num / den

    if which == "11":
        out["slow"] = safe(abs(math.sin(3 * d)), abs(d))
    elif which == "12":
        out["slow"] = safe(math.pi * abs(math.cos(2 * d)), 4 * d * d)
        for s1, s2 in itertools.product(pm, pm):
            x = d + s1 * delta_max
            out[f"res{'+-'[s1 < 0]}{'+-'[s2 < 0]}"] = safe(
                abs(math.cos(3 * x) + s2 * math.sin(3 * x)), math.sqrt(2.0) * abs(x)
            )
    elif which == "21":
        out["slow"] = safe(abs(math.sin(3 * d)), abs(d))
        for s1 in pm:
            x = d + s1 * delta_max
            out[f"res{'+-'[s1 < 0]}"] = safe(math.pi * abs(math.cos(3 * x)), 4 * x * x)
    elif which == "b2":
        for s1 in pm:
            out[f"slow{'+-'[s1 < 0]}"] = safe(math.sqrt(max(1 + s1 * math.sin(6 * d), 0.0)), math.sqrt(2.0) * abs(d))
            x = d + s1 * delta_max
            out[f"res{'+-'[s1 < 0]}"] = safe(math.pi * abs(math.cos(2 * x)), 4 * x * x)
    else:
        raise ValueError(f"which must be one of {ANALYTIC_CHOICES}")
    return out


def analytic_norm(which: str, delta: float, delta_max: float = 500.0) -> float:
    """Asymptotic closed form of ``||dU_which||_2`` on the circular path.

    Valid for ``|delta| >> 1`` and ``|delta +- delta_max| >> 1`` (units of
    Delta_0); see :func:`analytic_valid`.
    """
    return max(analytic_branches(which, delta, delta_max).values())


def analytic_valid(delta: float, delta_max: float, margin: float = 5.0) -> bool:
    return abs(delta) > margin and abs(abs(delta) - delta_max) > margin
