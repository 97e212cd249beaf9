"""Majorana operator algebra on a qubit register.

Majorana operators are represented as dense complex matrices built from
Kronecker products of Pauli matrices (Jordan-Wigner chain). Fermionic mode
``j`` lives on qubit ``j`` and qubit 0 is the *rightmost* Kronecker factor, so
the two Majoranas of mode ``j`` are

    X_j Z_{j-1} ... Z_0   and   Y_j Z_{j-1} ... Z_0

i.e. every operator carries a Z string over all lower-indexed modes. With this
ordering ``build_majorana_set(3)`` coincides with the six-operator register
``(Gamma_B, Gamma_C, Gamma_E, Gamma_F, gamma_1, gamma_2)`` of
:func:`appendix_a_set`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

MAX_MODES = 12
ALGEBRA_TOL = 1e-12

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"0": SIGMA_0, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class RegisterSizeError(ValueError):
    """Requested register is empty or larger than the dense-matrix cap."""


class ParityUndefinedError(ValueError):
    """Parity requested for an odd number of Majorana operators."""


class NumericError(ValueError):
    """Non-finite matrix entries."""


def kron(*factors: np.ndarray) -> np.ndarray:
    return reduce(np.kron, factors)


def pauli_string(spec: str) -> np.ndarray:
    """Kronecker product of Pauli matrices, e.g. ``pauli_string("0xz")``."""
    return kron(*(PAULI[c] for c in spec))


@dataclass(frozen=True)
class MajoranaSet:
    """Ordered, labeled Majorana operators on a register of ``n_modes`` qubits."""

    n_modes: int
    labels: tuple[str, ...]
    matrices: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.labels) != len(self.matrices):
            raise ValueError("labels and matrices differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate Majorana labels")
        for m in self.matrices:
            m.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2**self.n_modes

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, key: int | str) -> np.ndarray:
        if isinstance(key, str):
            return self.matrices[self.labels.index(key)]
        return self.matrices[key]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def relabel(self, labels: Sequence[str]) -> "MajoranaSet":
        return MajoranaSet(self.n_modes, tuple(labels), self.matrices)

    def product(self, *keys: int | str) -> np.ndarray:
        """Ordered product of the named operators (identity when empty)."""
        out = np.eye(self.dim, dtype=complex)
        for k in keys:
            out = out @ self[k]
        return out

    def algebra_defect(self) -> float:
        """Largest violation of Hermiticity, M^2 = 1 and {M_i, M_j} = 0."""
        eye = np.eye(self.dim)
        worst = 0.0
        for i, a in enumerate(self.matrices):
            worst = max(worst, np.abs(a - a.conj().T).max(), np.abs(a @ a - eye).max())
            for b in self.matrices[i + 1 :]:
                worst = max(worst, np.abs(a @ b + b @ a).max())
        return float(worst)


def build_majorana_set(n_modes: int, labels: Sequence[str] | None = None) -> MajoranaSet:
    """Jordan-Wigner Majoranas for ``n_modes`` fermionic modes.

    Returns ``2 * n_modes`` operators ordered ``(x_0, y_0, x_1, y_1, ...)``
    where ``x_j``/``y_j`` carry a Pauli X/Y on qubit ``j`` and Z on qubits
    ``0..j-1``. Default labels are ``"m0", "m1", ...``.
    """
    if not isinstance(n_modes, (int, np.integer)) or not 1 <= n_modes <= MAX_MODES:
        raise RegisterSizeError(f"n_modes must be in [1, {MAX_MODES}], got {n_modes!r}")
    mats = []
    for j in range(n_modes):
        left = "0" * (n_modes - 1 - j)
        right = "z" * j
        mats.append(pauli_string(left + "x" + right))
        mats.append(pauli_string(left + "y" + right))
    if labels is None:
        labels = [f"m{i}" for i in range(2 * n_modes)]
    if len(labels) != 2 * n_modes:
        raise ValueError("need exactly 2 * n_modes labels")
    return MajoranaSet(n_modes, tuple(labels), tuple(mats))


APPENDIX_LABELS = ("Gamma_B", "Gamma_C", "Gamma_E", "Gamma_F", "gamma_1", "gamma_2")
_APPENDIX_PAULIS = ("00x", "00y", "0xz", "0yz", "xzz", "yzz")


def appendix_a_set() -> MajoranaSet:
    """The six 8x8 operators of the T-junction register.

    Gamma_B = 1 x 1 x X, Gamma_C = 1 x 1 x Y, Gamma_E = 1 x X x Z,
    Gamma_F = 1 x Y x Z, gamma_1 = X x Z x Z, gamma_2 = Y x Z x Z.
    """
    mats = tuple(pauli_string(s) for s in _APPENDIX_PAULIS)
    return MajoranaSet(3, APPENDIX_LABELS, mats)


@dataclass(frozen=True)
class ParityOperator:
    island: str
    matrix: np.ndarray = field(repr=False)
    member_indices: tuple[int, ...]

    def projector(self, p: int) -> np.ndarray:
        return 0.5 * (np.eye(self.matrix.shape[0]) + p * self.matrix)


def island_parity(
    mset: MajoranaSet, members: Sequence[int | str], island: str = ""
) -> ParityOperator:
    """``exp(-i pi N/4)`` times the ordered product of ``N`` member operators.

    For an even number of distinct Majoranas this is Hermitian with
    eigenvalues +-1; ``N = 2`` gives ``-i m_a m_b``.
    """
    idx = tuple(mset.index(m) if isinstance(m, str) else int(m) for m in members)
    n = len(idx)
    if n == 0 or n % 2:
        raise ParityUndefinedError(f"island parity needs an even, nonzero member count (got {n})")
    if len(set(idx)) != n:
        raise ValueError("parity members must be distinct")
    if min(idx) < 0 or max(idx) >= len(mset):
        raise IndexError("parity member index out of range")
    mat = np.exp(-1j * np.pi * n / 4) * mset.product(*idx)
    mat.setflags(write=False)
    return ParityOperator(island, mat, idx)


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value, via the Hermitian eigenvalues of M^dagger M."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    if m.size == 0:
        return 0.0
    scale = np.abs(m).max()
    if scale == 0:
        return 0.0
    a = m / scale
    ev = np.linalg.eigvalsh(a.conj().T @ a)
    return float(scale * np.sqrt(max(ev[-1], 0.0)))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
