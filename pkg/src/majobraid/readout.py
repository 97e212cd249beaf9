"""Dispersive parity readout through a cavity-coupled transmon.

Register ordering is ``photon (0..N_max) x transmon x Majoranas``. The transmon
basis is ``(|e>, |g>)`` so ``tau_z = diag(+1, -1)``; the transmon ground state
has ``tau_z = -1``. The Majorana register holds Gamma_A, Gamma_B, the bus
island chain ``gamma_b,1 .. gamma_b,N`` and the external pair
``gamma_1,1, gamma_1,2``. The measured parity is ``P = -i Gamma_A Pi_b Gamma_B``.

Frequencies and energies share units (hbar = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import build_majorana_set, island_parity, MajoranaSet

TAU_Z = np.diag([1.0, -1.0]).astype(complex)
TAU_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
TAU_MINUS = TAU_PLUS.T.copy()
GROUND = 1  # index of |g> in the transmon basis

MIN_PHOTONS = 4
CONVERGENCE_TOL = 1e-6


class ReadoutError(ValueError):
    """Base class for invalid readout evaluations."""


class DispersiveFormulaError(ReadoutError):
    """Qubit-cavity detuning too small for the dispersive formula."""


class IdentificationError(ReadoutError):
    """No dressed state overlaps a bare measurement state by more than 1/2."""


class TruncationError(ReadoutError):
    """Photon cutoff too small or not converged."""


@dataclass(frozen=True)
class ReadoutParams:
    """Cavity, transmon and Majorana couplings of the readout circuit.

    Parameters
    ----------
    omega0, Omega0 : float
        Bare cavity and transmon frequencies.
    g : float
        Cavity-transmon coupling.
    delta_plus, delta_minus : float
        Parity couplings of the transmon term and of the bare energy.
    eps11 : float
        Coupling between Gamma_B and the external accidental pair.
    delta : float
        Splitting of the external pair.
    bus_delta : tuple of float
        Couplings ``delta_b,n`` along the bus chain; its length plus one is
        the number of bus accidentals (an even number, or zero if empty).
    bus_eps : (float, float)
        Couplings of Gamma_A to the first and of the last bus mode to Gamma_B.
    n_max : int
        Highest photon number kept.
    t_m : float
        Measurement duration used by the near-resonance estimate.
    """

    omega0: float = 10.0
    Omega0: float = 13.0
    g: float = 0.1
    delta_plus: float = 0.5
    delta_minus: float = 0.2
    eps11: float = 0.0
    delta: float = 0.1
    bus_delta: tuple[float, ...] = ()
    bus_eps: tuple[float, float] = (0.0, 0.0)
    n_max: int = 8
    t_m: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "bus_delta", tuple(float(x) for x in self.bus_delta))
        object.__setattr__(self, "bus_eps", tuple(float(x) for x in self.bus_eps))
        if self.n_max < MIN_PHOTONS:
            raise TruncationError(f"n_max must be at least {MIN_PHOTONS}")
        if len(self.bus_delta) % 2 == 0 and self.bus_delta:
            raise ReadoutError("the bus chain needs an even number of modes (odd number of couplings)")
        if len(self.bus_eps) != 2:
            raise ReadoutError("bus_eps holds exactly two couplings")
        vals = [self.omega0, self.Omega0, self.g, self.delta_plus, self.delta_minus, self.eps11, self.delta, self.t_m]
        if not all(math.isfinite(v) for v in vals + list(self.bus_delta) + list(self.bus_eps)):
            raise ReadoutError("readout parameters must be finite")

    @property
    def detuning(self) -> float:
        """Transmon-cavity detuning ``Omega0 - omega0``."""
        return self.Omega0 - self.omega0

    @property
    def parity_gap(self) -> float:
        """``Delta_+ - Delta_- - |delta|``, the energy scale protecting the readout."""
        return self.delta_plus - self.delta_minus - abs(self.delta)

    @property
    def n_bus(self) -> int:
        return len(self.bus_delta) + 1 if self.bus_delta else 0

    def dispersive(self) -> bool:
        """``(n+1) g^2 < detuning^2 / 10`` for every kept photon number."""
        return (self.n_max + 1) * self.g**2 < self.detuning**2 / 10

    def replace(self, **kw) -> "ReadoutParams":
        vals = {f: getattr(self, f) for f in self.__dataclass_fields__}
        vals.update(kw)
        return ReadoutParams(**vals)


def readout_register(params: ReadoutParams) -> MajoranaSet:
    labels = ["Gamma_A", "Gamma_B"]
    labels += [f"gamma_b,{n}" for n in range(1, params.n_bus + 1)]
    labels += ["gamma_1,1", "gamma_1,2"]
    return build_majorana_set(len(labels) // 2, labels)


def parity_operator(mset: MajoranaSet, params: ReadoutParams) -> np.ndarray:
    """``P = -i Gamma_A Pi_b Gamma_B`` on the Majorana register."""
    bus = [f"gamma_b,{n}" for n in range(1, params.n_bus + 1)]
    pi_b = island_parity(mset, bus, "b").matrix if bus else np.eye(mset.dim)
    return -1j * mset["Gamma_A"] @ pi_b @ mset["Gamma_B"]


def bus_hamiltonian(mset: MajoranaSet, params: ReadoutParams) -> np.ndarray:
    h = np.zeros((mset.dim, mset.dim), dtype=complex)
    n = params.n_bus
    if not n:
        return h
    for k, d in enumerate(params.bus_delta, start=1):
        h += 1j * d * mset[f"gamma_b,{k}"] @ mset[f"gamma_b,{k + 1}"]
    h += 1j * params.bus_eps[0] * mset["Gamma_A"] @ mset["gamma_b,1"]
    h += 1j * params.bus_eps[1] * mset[f"gamma_b,{n}"] @ mset["Gamma_B"]
    return h


@dataclass
class ReadoutModel:
    """Readout Hamiltonian together with its embedded operators."""

    params: ReadoutParams
    hamiltonian: np.ndarray = field(repr=False)
    parity: np.ndarray = field(repr=False)  # P on the full space
    majorana_hamiltonian: np.ndarray = field(repr=False)  # parity-conserving Majorana part
    majorana_parity: np.ndarray = field(repr=False)
    n_photons: int = 0

    def embed(self, n: int, tau: int, majorana_state: np.ndarray) -> np.ndarray:
        photon = np.zeros(self.n_photons, dtype=complex)
        photon[n] = 1
        transmon = np.zeros(2, dtype=complex)
        transmon[tau] = 1
        return np.kron(np.kron(photon, transmon), majorana_state)


def build_H_ro(params: ReadoutParams, mset: MajoranaSet | None = None) -> ReadoutModel:
    """Cavity + transmon + Majorana readout Hamiltonian."""
    mset = mset or readout_register(params)
    nph = params.n_max + 1
    a = np.diag(np.sqrt(np.arange(1, nph)), 1).astype(complex)
    i_ph, i_tr, i_mj = np.eye(nph), np.eye(2), np.eye(mset.dim)
    p = parity_operator(mset, params)
    pair = 1j * params.delta * mset["gamma_1,1"] @ mset["gamma_1,2"]
    h_maj = params.delta_minus * p + bus_hamiltonian(mset, params) + pair
    ext = 1j * params.eps11 * mset["Gamma_B"] @ mset["gamma_1,1"]

    def k3(x, y, z):
        return np.kron(np.kron(x, y), z)

    h = params.omega0 * k3(a.conj().T @ a, i_tr, i_mj)
    h = h + params.g * (k3(a, TAU_PLUS, i_mj) + k3(a.conj().T, TAU_MINUS, i_mj))
    h = h + k3(i_ph, TAU_Z, 0.5 * params.Omega0 * i_mj + params.delta_plus * p)
    h = h + k3(i_ph, i_tr, h_maj + ext)
    return ReadoutModel(params, h, k3(i_ph, i_tr, p), h_maj, p, nph)


def _sector_ground(h_maj: np.ndarray, p_mat: np.ndarray, p: int) -> np.ndarray:
    """Lowest-energy Majorana state with parity ``p`` (``h_maj`` conserves P)."""
    w, v = np.linalg.eigh(0.5 * (p_mat + p_mat.conj().T))
    sub = v[:, np.sign(w).astype(int) == p]
    ew, ev = np.linalg.eigh(sub.conj().T @ h_maj @ sub)
    if len(ew) > 1 and abs(ew[1] - ew[0]) < 1e-9:
        raise IdentificationError(f"degenerate Majorana ground state in the P={p:+d} sector")
    return sub @ ev[:, 0]


def _dressed(h: np.ndarray, bare: np.ndarray, tol: float = 1e-9) -> tuple[float, np.ndarray, float]:
    """Energy and state of the eigenmanifold that best overlaps ``bare``.

    Near-degenerate eigenvalues are grouped so that gauge freedom inside a
    degenerate manifold cannot hide the overlap.
    """
    w, v = np.linalg.eigh(h)
    weights = np.abs(v.conj().T @ bare) ** 2
    edges = np.flatnonzero(np.diff(w) > tol * max(1.0, np.abs(w).max())) + 1
    groups = np.split(np.arange(len(w)), edges)
    best = max(groups, key=lambda g: weights[g].sum())
    overlap = float(weights[best].sum())
    if overlap < 0.5:
        raise IdentificationError(f"best dressed-state overlap {overlap:.3f} < 0.5")
    cols = v[:, best]
    state = cols @ (cols.conj().T @ bare)
    state /= np.linalg.norm(state)
    return float(np.mean(w[best])), state, overlap


def dispersive_formula(params: ReadoutParams, parity: int, tau_z: int = -1) -> float:
    """``omega0 + tau_z g^2 / (detuning + 2 P Delta_+)``."""
    den = params.detuning + 2 * parity * params.delta_plus
    if abs(den) < 10 * params.g:
        raise DispersiveFormulaError(f"|detuning + 2P Delta_+| = {abs(den):.3g} < 10 g")
    return params.omega0 + tau_z * params.g**2 / den


@dataclass(frozen=True)
class DispersiveShift:
    parity: int
    tau_z: int
    closed_form: float
    numeric: float
    dispersive_ok: bool

    @property
    def discrepancy(self) -> float:
        return abs(self.numeric - self.closed_form)


def dispersive_shift(params: ReadoutParams, parity: int, tau_z: int = -1) -> DispersiveShift:
    """Cavity frequency conditioned on ``P`` and the transmon state.

    The numeric value is the spacing between the dressed states connected to
    ``|n=0>`` and ``|n=1>`` at fixed transmon state and Majorana state.
    """
    if parity not in (1, -1) or tau_z not in (1, -1):
        raise ValueError("parity and tau_z must be +1 or -1")
    if params.eps11:
        raise ReadoutError("the dispersive shift is defined on the eps11 = 0 branch")
    closed = dispersive_formula(params, parity, tau_z)
    model = build_H_ro(params)
    m = _sector_ground(model.majorana_hamiltonian, model.majorana_parity, parity)
    tau = 0 if tau_z == 1 else GROUND
    e0, _, _ = _dressed(model.hamiltonian, model.embed(0, tau, m))
    e1, _, _ = _dressed(model.hamiltonian, model.embed(1, tau, m))
    return DispersiveShift(parity, tau_z, closed, e1 - e0, params.dispersive())


@dataclass(frozen=True)
class MeasurementError:
    """Wrong-parity amplitude of the dressed measurement states.

    ``amplitude`` is the larger of the two parity branches; ``estimate`` is the
    perturbative value ``eps11 / (2 (Delta_+ - Delta_- - |delta|))``.
    """

    amplitude: float
    per_parity: dict = field(default_factory=dict)
    estimate: float = 0.0
    near_resonance: bool = False
    dispersive_ok: bool = True


def measurement_error(params: ReadoutParams) -> MeasurementError:
    """Parity admixture caused by ``eps11`` in the transmon ground state, no photons.

    Near the degeneracy ``|Delta_+ - Delta_- - |delta|| < eps11`` the
    admixture is no longer small and the time-limited estimate
    ``eps11 * t_m`` is returned with ``near_resonance`` set.
    """
    gap = params.parity_gap
    if params.eps11 == 0:
        # P commutes with H_ro, so the dressed states carry no wrong parity;
        # diagonalization would only add rounding noise
        return MeasurementError(0.0, {1: 0.0, -1: 0.0}, 0.0, False, params.dispersive())
    if abs(gap) < abs(params.eps11):
        est = abs(params.eps11) * params.t_m
        return MeasurementError(est, {}, est, True, params.dispersive())
    model = build_H_ro(params)
    clean = build_H_ro(params.replace(eps11=0.0))
    per = {}
    for p in (1, -1):
        m = _sector_ground(clean.majorana_hamiltonian, clean.majorana_parity, p)
        _, psi, _ = _dressed(model.hamiltonian, clean.embed(0, GROUND, m))
        wrong = 0.5 * (psi - p * model.parity @ psi)
        per[p] = float(np.linalg.norm(wrong))
    est = abs(params.eps11) / (2 * abs(gap)) if gap else math.inf
    return MeasurementError(max(per.values()), per, est, False, params.dispersive())


def check_truncation(params: ReadoutParams, tol: float = CONVERGENCE_TOL) -> float:
    """Largest change of the reported observables when ``n_max`` grows by 2."""
    bigger = params.replace(n_max=params.n_max + 2)
    change = 0.0
    for p in (1, -1):
        a = dispersive_shift(params.replace(eps11=0.0), p).numeric
        b = dispersive_shift(bigger.replace(eps11=0.0), p).numeric
        change = max(change, abs(a - b))
    if params.eps11:
        change = max(change, abs(measurement_error(params).amplitude - measurement_error(bigger).amplitude))
    if change >= tol:
        raise TruncationError(f"observables moved by {change:.3g} when n_max grew to {bigger.n_max}")
    return change


def fit_loglog_slope(x, y) -> float:
    lx, ly = np.log(np.abs(np.asarray(x, float))), np.log(np.abs(np.asarray(y, float)))
    return float(np.polyfit(lx, ly, 1)[0])
