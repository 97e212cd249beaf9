"""Braiding cycle on the full device register and the parity-flip protocol.

The topological qubit is encoded in the parity ``P = -i Gamma_A Pi_b Gamma_B``
of the bus island. At the start of a cycle the ancilla pair (Gamma_E, Gamma_F)
is coupled, so the logical basis is

    |0_L>  : P = +1, ancilla parity -i Gamma_E Gamma_F = p_anc, island parities p_k
    |1_L>  = i Gamma_B Gamma_C |0_L>

projected onto the energy manifold of H(0) that contains it. In this basis an
ideal exchange of Gamma_B and Gamma_C acts as ``exp(i s pi sigma_x / 4)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .propagation import cycle_grid, drive, full_propagator, steps_for
from .schedule import PathSpec
from .system import (
    ConfigError,
    DeviceSpec,
    DisorderConfig,
    build_H_delta,
    build_H_eps,
    coulomb_operators,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
LEAKAGE_FAILURE = 0.5
ANCILLA_CORNER = 2


def ideal_braid(s: int) -> np.ndarray:
    return math.cos(math.pi / 4) * np.eye(2) + 1j * s * math.sin(math.pi / 4) * SIGMA_X


def phase_invariant_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """``|Tr(V^dag U)|^2 / d^2``: 1 iff U equals V up to a global phase."""
    d = u.shape[0]
    return float(abs(np.trace(v.conj().T @ u)) ** 2 / d**2)


@dataclass(frozen=True)
class BraidSector:
    parities: Mapping[str, int] = field(default_factory=dict)
    p_anc: int = 1


@dataclass
class BraidResult:
    sector: BraidSector
    chirality: int
    qubit_unitary: np.ndarray = field(repr=False)
    fidelity: float
    leakage: float
    failed: bool = False
    cycle_unitary: np.ndarray | None = field(default=None, repr=False)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


class BraidSimulation:
    """Exact single-cycle propagator for a device and its logical basis."""

    def __init__(
        self,
        spec: DeviceSpec,
        disorder: DisorderConfig | None = None,
        path: PathSpec | None = None,
        steps_per_leg: int | None = None,
    ):
        self.spec = spec
        self.disorder = disorder or DisorderConfig()
        self.path = path or PathSpec(start_corner=ANCILLA_CORNER)
        if self.path.start_corner != ANCILLA_CORNER:
            raise ConfigError("the protocol starts at the ancilla corner (only Delta_2 on, start_corner=2)")
        self.mset = spec.majoranas()
        self.parity_ops = spec.parity_operators(self.mset)
        self.coulomb = coulomb_operators(spec, self.mset)
        self.static = build_H_delta(spec, self.disorder, self.mset) + build_H_eps(spec, self.disorder, self.mset)
        self.h_of_t = drive(self.static, self.coulomb, self.path)
        if steps_per_leg is None:
            h_scale = math.sqrt(3) * self.path.delta_max + np.abs(np.linalg.eigvalsh(self.static)).max()
            steps_per_leg = steps_for(self.path, h_scale)
        self.steps_per_leg = steps_per_leg
        self._u: np.ndarray | None = None

    @property
    def bus_parity(self) -> np.ndarray:
        """``P = -i Gamma_A Pi_b Gamma_B``."""
        m = self.mset
        pi_b = self.parity_ops["b"].matrix if "b" in self.parity_ops else np.eye(m.dim)
        return -1j * m["Gamma_A"] @ pi_b @ m["Gamma_B"]

    def cycle_unitary(self) -> np.ndarray:
        if self._u is None:
            self._u = full_propagator(self.h_of_t, cycle_grid(self.path, self.steps_per_leg))
        return self._u

    def logical_basis(self, sector: BraidSector) -> np.ndarray:
        """Columns |0_L>, |1_L> for the given island parities and ancilla parity."""
        m = self.mset
        dim = m.dim
        eye = np.eye(dim)
        proj = 0.5 * (eye + self.bus_parity)
        proj = proj @ (0.5 * (eye + sector.p_anc * (-1j) * m["Gamma_E"] @ m["Gamma_F"]))
        for isl, op in self.parity_ops.items():
            p = sector.parities.get(isl, 1)
            if p not in (1, -1):
                raise ConfigError(f"parity of island {isl} must be +1 or -1")
            proj = proj @ op.projector(p)
        extra = set(sector.parities) - set(self.parity_ops)
        if extra:
            raise ConfigError(f"islands {sorted(extra)} host no accidental modes")
        # fix the remaining freedom with the accidental pair terms and Gamma_C Gamma_D
        fixers = [-1j * m["Gamma_C"] @ m["Gamma_D"]]
        h_delta = build_H_delta(self.spec, self.disorder, self.mset)
        w, v = np.linalg.eigh(0.5 * (proj + proj.conj().T))
        sub = v[:, w > 0.5]
        for op in [h_delta] + fixers:
            r = sub.conj().T @ op @ sub
            ew, ev = np.linalg.eigh(0.5 * (r + r.conj().T))
            keep = np.abs(ew - ew[0]) < 1e-9 * max(1.0, abs(ew[0]))
            sub = sub @ ev[:, keep]
        zero = sub[:, 0]
        one = 1j * m["Gamma_B"] @ m["Gamma_C"] @ zero
        # project onto the H(0) manifold that holds |0_L>
        w0, v0 = np.linalg.eigh(self.h_of_t(np.array([0.0]))[0])
        energy = np.real(zero.conj() @ (v0 * w0) @ v0.conj().T @ zero)
        close = np.abs(w0 - energy) < 0.5 * self.path.delta_max
        manifold = v0[:, close] @ v0[:, close].conj().T
        basis = manifold @ np.stack([zero, one], axis=1)
        q, _ = np.linalg.qr(basis)
        # keep the phase convention of the unprojected states
        for k in range(2):
            ph = np.vdot(q[:, k], basis[:, k])
            q[:, k] *= ph / abs(ph)
        return q

    def braid(self, sector: BraidSector | None = None) -> BraidResult:
        sector = sector or BraidSector()
        basis = self.logical_basis(sector)
        u = self.cycle_unitary()
        q = basis.conj().T @ u @ basis
        leakage = float(max(0.0, 1.0 - np.linalg.norm(q, "fro") ** 2 / 2))
        fids = {s: phase_invariant_fidelity(q, ideal_braid(s)) for s in (1, -1)}
        s = max(fids, key=fids.get)
        return BraidResult(sector, s, q, fids[s], leakage, leakage > LEAKAGE_FAILURE, u)

    def sectors(self) -> list[BraidSector]:
        """Every combination of island parities and ancilla parity."""
        islands = sorted(self.parity_ops)
        out = []
        for bits in itertools.product((1, -1), repeat=len(islands) + 1):
            out.append(BraidSector(dict(zip(islands, bits[1:])), bits[0]))
        return out

    def worst_braid(self) -> BraidResult:
        """Lowest-fidelity sector."""
        return min((self.braid(s) for s in self.sectors()), key=lambda r: r.fidelity)

    def pflip(
        self,
        n_max: int,
        sector: BraidSector | None = None,
        shots: int | None = None,
        seed: int | None = None,
    ) -> list[float]:
        """Probability that P flips after n = 1..n_max cycles.

        With ``shots`` set, each probability is replaced by the observed
        frequency of a binomial sample (seeded).
        """
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        sector = sector or BraidSector()
        psi = self.logical_basis(sector)[:, 0]
        u = self.cycle_unitary()
        flip = 0.5 * (np.eye(len(psi)) - self.bus_parity)
        probs = []
        for _ in range(n_max):
            psi = u @ psi
            probs.append(float(np.real(np.vdot(psi, flip @ psi))))
        if shots:
            rng = np.random.default_rng(seed)
            probs = [float(rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots) for p in probs]
        return probs


def braid_cycle(
    spec: DeviceSpec,
    disorder: DisorderConfig | None = None,
    path: PathSpec | None = None,
    sector: BraidSector | None = None,
    eps_scale: float = 1.0,
    steps_per_leg: int | None = None,
) -> BraidResult:
    """One braiding cycle; ``eps_scale`` multiplies every eps coupling."""
    disorder = disorder or DisorderConfig()
    if eps_scale != 1.0:
        disorder = DisorderConfig(disorder.delta, {k: eps_scale * v for k, v in disorder.eps.items()})
    return BraidSimulation(spec, disorder, path, steps_per_leg).braid(sector)


def pflip_sequence(
    spec: DeviceSpec,
    disorder: DisorderConfig | None = None,
    path: PathSpec | None = None,
    n_max: int = 4,
    sector: BraidSector | None = None,
    shots: int | None = None,
    seed: int | None = None,
    steps_per_leg: int | None = None,
) -> list[float]:
    return BraidSimulation(spec, disorder, path, steps_per_leg).pflip(n_max, sector, shots, seed)


CLEAN_PFLIP = (0.5, 1.0, 0.5, 0.0)


def clean_pflip(n: int) -> float:
    """sin^2(n pi / 4): the ideal non-Abelian sequence 1/2, 1, 1/2, 0, ..."""
    return math.sin(n * math.pi / 4) ** 2
