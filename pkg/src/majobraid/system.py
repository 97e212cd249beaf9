"""Braiding Hamiltonians of the disordered Majorana-transmon circuit.

Register layout for a :class:`DeviceSpec`::

    Gamma_B, Gamma_C, Gamma_E, Gamma_F,
    accidentals of islands 1, 2, 3,
    Gamma_A, Gamma_D,
    accidentals of the bus (b) and ground (g) islands

Accidental Majoranas are labeled ``"gamma_k,n"`` with ``n`` starting at 1.
With a single pair on one T-junction island this register coincides with the
extended six-operator register used by :func:`build_H_ki`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .operators import (
    SIGMA_0,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    MajoranaSet,
    ParityOperator,
    appendix_a_set,
    build_majorana_set,
    island_parity,
    kron,
)
from .schedule import CouplingSet

ISLANDS = ("b", "g", "1", "2", "3")
JUNCTION = ("1", "2", "3")
COMPUTATIONAL = ("Gamma_A", "Gamma_B", "Gamma_C", "Gamma_D", "Gamma_E", "Gamma_F")

# (island, side) -> (left operator, right operator); "first"/"last" refer to the
# island's accidental chain.
EPS_TERMS: dict[str, tuple[str, str]] = {
    "b1": ("Gamma_A", "first"),
    "g1": ("Gamma_B", "first"),
    "11": ("Gamma_B", "first"),
    "21": ("Gamma_E", "first"),
    "31": ("Gamma_E", "first"),
    "b2": ("last", "Gamma_B"),
    "g2": ("last", "Gamma_D"),
    "12": ("last", "Gamma_E"),
    "22": ("last", "Gamma_F"),
    "32": ("last", "Gamma_C"),
}

PERTURBATIVE_LIMIT = 0.1


class ConfigError(ValueError):
    """Device and disorder descriptions are inconsistent."""


class SectorMixingError(ValueError):
    """Hamiltonian does not conserve the requested island parities."""


def accidental_label(island: str, n: int) -> str:
    return f"gamma_{island},{n}"


@dataclass(frozen=True)
class DeviceSpec:
    """Accidental-mode counts per island (each even)."""

    n_accidental: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        counts = {k: int(v) for k, v in dict(self.n_accidental).items() if int(v) != 0}
        for k, v in counts.items():
            if k not in ISLANDS:
                raise ConfigError(f"unknown island {k!r}; expected one of {ISLANDS}")
            if v < 0 or v % 2:
                raise ConfigError(f"island {k} needs an even, nonnegative accidental count (got {v})")
        object.__setattr__(self, "n_accidental", counts)

    def count(self, island: str) -> int:
        return self.n_accidental.get(island, 0)

    @property
    def labels(self) -> tuple[str, ...]:
        acc = lambda isl: [accidental_label(isl, n) for n in range(1, self.count(isl) + 1)]  # noqa: E731
        out = ["Gamma_B", "Gamma_C", "Gamma_E", "Gamma_F"]
        for isl in JUNCTION:
            out += acc(isl)
        out += ["Gamma_A", "Gamma_D"]
        for isl in ("b", "g"):
            out += acc(isl)
        return tuple(out)

    @property
    def n_modes(self) -> int:
        return len(self.labels) // 2

    @property
    def dim(self) -> int:
        return 2**self.n_modes

    def majoranas(self) -> MajoranaSet:
        return build_majorana_set(self.n_modes, self.labels)

    def parity_operators(self, mset: MajoranaSet | None = None) -> dict[str, ParityOperator]:
        """Island parities for every island that hosts accidental modes."""
        mset = mset or self.majoranas()
        return {
            isl: island_parity(mset, [accidental_label(isl, n) for n in range(1, self.count(isl) + 1)], isl)
            for isl in ISLANDS
            if self.count(isl)
        }


@dataclass(frozen=True)
class DisorderConfig:
    """Accidental couplings.

    ``delta[(k, n)]`` couples gamma_{k,n} to gamma_{k,n+1}; ``eps[(k, i)]``
    (``i`` in {1, 2}) couples the chain end to its computational Majorana.
    String keys ``"11"``, ``"b2"`` are accepted for ``eps``.
    """

    delta: Mapping[tuple[str, int], float] = field(default_factory=dict)
    eps: Mapping[tuple[str, int], float] = field(default_factory=dict)

    def __post_init__(self):
        eps = {}
        for key, val in dict(self.eps).items():
            if isinstance(key, str):
                key = (key[0], int(key[1:]))
            eps[(str(key[0]), int(key[1]))] = float(val)
        delta = {(str(k), int(n)): float(v) for (k, n), v in dict(self.delta).items()}
        for v in list(eps.values()) + list(delta.values()):
            if not math.isfinite(v):
                raise ConfigError("disorder couplings must be finite")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)

    def perturbative(self, delta0: float = 1.0) -> bool:
        """False when some |eps_ki| exceeds the first-order validity bound."""
        return all(abs(v) <= PERTURBATIVE_LIMIT * delta0 for v in self.eps.values())


def _coulomb_terms(mset: MajoranaSet, parities: Mapping[str, np.ndarray]) -> list[np.ndarray]:
    """The three unit-coupling operators i Gamma Pi Gamma of the Coulomb Hamiltonian."""
    eye = np.eye(mset.dim, dtype=complex)
    pi = {k: parities.get(k, eye) for k in JUNCTION}
    return [
        1j * mset["Gamma_B"] @ pi["1"] @ mset["Gamma_E"],
        1j * mset["Gamma_E"] @ pi["2"] @ mset["Gamma_F"],
        1j * mset["Gamma_E"] @ pi["3"] @ mset["Gamma_C"],
    ]


def coulomb_operators(spec: DeviceSpec, mset: MajoranaSet | None = None) -> list[np.ndarray]:
    mset = mset or spec.majoranas()
    ops = spec.parity_operators(mset)
    return _coulomb_terms(mset, {k: p.matrix for k, p in ops.items()})


def eps_operator(spec: DeviceSpec, term: str, mset: MajoranaSet | None = None) -> np.ndarray:
    """Unit-strength operator multiplying ``eps_term`` (e.g. ``"11"``, ``"b2"``)."""
    if term not in EPS_TERMS:
        raise ConfigError(f"unknown eps term {term!r}")
    mset = mset or spec.majoranas()
    island = term[0]
    n = spec.count(island)
    if n == 0:
        raise ConfigError(f"eps_{term} needs accidental modes on island {island}")
    names = {"first": accidental_label(island, 1), "last": accidental_label(island, n)}
    left, right = (names.get(x, x) for x in EPS_TERMS[term])
    return 1j * mset[left] @ mset[right]


def delta_operator(spec: DeviceSpec, island: str, n: int, mset: MajoranaSet | None = None) -> np.ndarray:
    mset = mset or spec.majoranas()
    if not 1 <= n < spec.count(island):
        raise ConfigError(f"delta_{island},{n} references a missing accidental mode")
    return 1j * mset[accidental_label(island, n)] @ mset[accidental_label(island, n + 1)]


def build_H_delta(spec: DeviceSpec, disorder: DisorderConfig, mset: MajoranaSet | None = None) -> np.ndarray:
    mset = mset or spec.majoranas()
    h = np.zeros((mset.dim, mset.dim), dtype=complex)
    for (isl, n), val in disorder.delta.items():
        h += val * delta_operator(spec, isl, n, mset)
    return h


def build_H_eps(spec: DeviceSpec, disorder: DisorderConfig, mset: MajoranaSet | None = None) -> np.ndarray:
    mset = mset or spec.majoranas()
    h = np.zeros((mset.dim, mset.dim), dtype=complex)
    for (isl, side), val in disorder.eps.items():
        h += val * eps_operator(spec, f"{isl}{side}", mset)
    return h


def build_H_br(spec: DeviceSpec, couplings: CouplingSet, disorder: DisorderConfig | None = None) -> np.ndarray:
    """H_C + H_delta + H_eps on the device register."""
    disorder = disorder or DisorderConfig()
    mset = spec.majoranas()
    hc = sum(d * op for d, op in zip(couplings.as_tuple(), coulomb_operators(spec, mset)))
    return hc + build_H_delta(spec, disorder, mset) + build_H_eps(spec, disorder, mset)


# --- Reduced six-Majorana Hamiltonians of the T-junction -----------------

KI_CHOICES = ("11", "12", "21", "22", "31", "32")

EXTENDED_LABELS = ("Gamma_B", "Gamma_C", "Gamma_E", "Gamma_F", "gamma_1", "gamma_2", "Gamma_A", "Gamma_D")


def extended_appendix_set() -> MajoranaSet:
    """16x16 register: the six T-junction operators on the low three qubits,
    plus the spectators Gamma_A, Gamma_D on a fourth qubit."""
    return build_majorana_set(4, EXTENDED_LABELS)


def ki_device(which: str) -> DeviceSpec:
    """Single accidental pair on the island named by the first digit."""
    if which not in KI_CHOICES:
        raise ConfigError(f"invalid selector {which!r}; expected one of {KI_CHOICES}")
    return DeviceSpec({which[0]: 2})


def ki_parts(which: str, mset: MajoranaSet | None = None) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """(Coulomb unit operators, i gamma_1 gamma_2, unit eps operator) for H_ki."""
    if which not in KI_CHOICES:
        raise ConfigError(f"invalid selector {which!r}; expected one of {KI_CHOICES}")
    m = mset or extended_appendix_set()
    b, c, e, f, g1, g2 = (m[x] for x in ("Gamma_B", "Gamma_C", "Gamma_E", "Gamma_F", "gamma_1", "gamma_2"))
    island = which[0]
    coul = [
        b @ g1 @ g2 @ e if island == "1" else 1j * b @ e,
        e @ g1 @ g2 @ f if island == "2" else 1j * e @ f,
        e @ g1 @ g2 @ c if island == "3" else 1j * e @ c,
    ]
    pert = {"11": b @ g1, "12": g2 @ e, "21": e @ g1, "22": g2 @ f, "31": e @ g1, "32": g2 @ c}[which]
    return coul, 1j * g1 @ g2, 1j * pert


def build_H_ki(which: str, couplings: CouplingSet, delta: float, eps: float, mset: MajoranaSet | None = None) -> np.ndarray:
    """One of the six reduced T-junction Hamiltonians H_11 ... H_32.

    Defaults to the 16x16 extended register; pass ``appendix_a_set()`` for
    the bare 8x8 form.
    """
    coul, hd, he = ki_parts(which, mset)
    return sum(d * op for d, op in zip(couplings.as_tuple(), coul)) + delta * hd + eps * he


def _block(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = np.zeros_like(a)
    return np.block([[a, z], [z, b]])


def appendix_unitaries() -> dict[str, np.ndarray]:
    """The 8x8 block-diagonal unitaries relating the six reduced Hamiltonians."""
    sxy = SIGMA_X + SIGMA_Y
    return {
        "U12": _block(kron(SIGMA_Z, SIGMA_Z), kron(SIGMA_X, SIGMA_X)),
        "U13": _block(kron(SIGMA_Z, SIGMA_Z), kron(SIGMA_Z, SIGMA_0)),
        "U13_tilde": _block(1j * kron(SIGMA_0, sxy), kron(SIGMA_0, sxy)) / math.sqrt(2.0),
    }


APPENDIX_IDENTITIES = (
    ("11", "U12", "22", False),
    ("11", "U13", "32", False),
    ("12", "U13_tilde", "31", True),
)


def appendix_identity_defects(
    couplings: CouplingSet,
    delta: float,
    eps: float,
    unitaries: Mapping[str, np.ndarray] | None = None,
) -> dict[str, float]:
    """``max|H_a - U H_b U^dag|`` for each unitary relation between reduced Hamiltonians.

    The third relation pairs ``H_12`` with ``H_31`` evaluated at swapped
    couplings ``Delta_1 <-> Delta_3``.
    """
    us = dict(unitaries or appendix_unitaries())
    m = appendix_a_set()
    out = {}
    for a, name, b, swap in APPENDIX_IDENTITIES:
        u = us[name]
        hb = build_H_ki(b, couplings.swap13() if swap else couplings, delta, eps, m)
        ha = build_H_ki(a, couplings, delta, eps, m)
        out[f"H{a}=U{name[1:]}.H{b}"] = float(np.abs(ha - u @ hb @ u.conj().T).max())
    return out


def extend_unitary(u: np.ndarray) -> np.ndarray:
    """Lift an 8x8 unitary to the extended register (identity on the spectators)."""
    return np.kron(SIGMA_0, u)


# --- Parity sectors -------------------------------------------------------


@dataclass(frozen=True)
class Sector:
    parities: tuple[tuple[str, int], ...]
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def reduce(self, h: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ h @ self.basis


def sector_basis(parity_ops: Mapping[str, ParityOperator | np.ndarray], parities: Mapping[str, int]) -> Sector:
    """Orthonormal basis of the joint eigenspace ``{Pi_k = p_k}``."""
    mats = {k: getattr(v, "matrix", v) for k, v in parity_ops.items()}
    if not mats:
        raise ValueError("no parity operators given")
    dim = next(iter(mats.values())).shape[0]
    proj = np.eye(dim, dtype=complex)
    for k, p in parities.items():
        if p not in (1, -1):
            raise ValueError(f"parity for island {k} must be +1 or -1")
        proj = proj @ (0.5 * (np.eye(dim) + p * mats[k]))
    proj = 0.5 * (proj + proj.conj().T)
    w, v = np.linalg.eigh(proj)
    basis = v[:, w > 0.5]
    return Sector(tuple(sorted(parities.items())), basis)


def all_sectors(parity_ops: Mapping[str, ParityOperator | np.ndarray]) -> list[Sector]:
    keys = sorted(parity_ops)
    out = []
    for bits in range(2 ** len(keys)):
        ps = {k: (1 if not (bits >> i) & 1 else -1) for i, k in enumerate(keys)}
        out.append(sector_basis(parity_ops, ps))
    return out


def sector_project(
    h: np.ndarray,
    parity_ops: Mapping[str, ParityOperator | np.ndarray],
    parities: Mapping[str, int],
    tol: float = 1e-10,
) -> np.ndarray:
    """Restrict ``h`` to the joint parity eigenspace; ``h`` must conserve every parity."""
    for k in parities:
        m = getattr(parity_ops[k], "matrix", parity_ops[k])
        if np.abs(h @ m - m @ h).max() > tol:
            raise SectorMixingError(f"Hamiltonian does not conserve the parity of island {k}")
    return sector_basis(parity_ops, parities).reduce(h)
