"""Self-check suite run by ``majobraid validate``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import RunConfig, config_hash
from .errors import EQUAL_GROUPS, INDEPENDENT, NormCalculator, perturbation_order
from .operators import (
    ALGEBRA_TOL,
    APPENDIX_LABELS,
    appendix_a_set,
    build_majorana_set,
    island_parity,
    pauli_string,
)
from .propagation import DEFAULT_STEPS_PER_LEG, adiabatic_propagator, analytic_norm, analytic_valid, cycle_grid
from .protocol import BraidSimulation
from .schedule import CouplingSet, PathSpec
from .sweep import CONVERGENCE_ATOL, CONVERGENCE_RTOL, read_hash
from .system import DeviceSpec, appendix_identity_defects, appendix_unitaries

FAULTS = ("u12-sign",)
ANALYTIC_POINTS = (20.0, 50.0, 100.0, 400.0, 600.0)
ANALYTIC_RTOL = 0.15
SYMMETRY_RTOL = 0.01
IDENTITY_TOL = 1e-12
ADIABATIC_TOL = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks]


def injected_unitaries(fault: str | None) -> dict[str, np.ndarray]:
    """Conjugation unitaries, optionally corrupted for negative-control runs."""
    us = appendix_unitaries()
    if fault is None:
        return us
    if fault == "u12-sign":
        flip = np.ones(8)
        flip[:4] = -1  # relative sign between the two diagonal blocks
        us["U12"] = us["U12"] * flip[None, :]
        return us
    raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")


def check_algebra(max_modes: int = 6) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_modes + 1):
        m = build_majorana_set(n)
        worst = max(worst, m.algebra_defect())
        p = island_parity(m, list(range(2 * n))).matrix
        worst = max(worst, np.abs(p - p.conj().T).max(), np.abs(p @ p - np.eye(m.dim)).max())
    ref = appendix_a_set()
    paulis = ("00x", "00y", "0xz", "0yz", "xzz", "yzz")
    exact = all(np.array_equal(ref[lab], pauli_string(s)) for lab, s in zip(APPENDIX_LABELS, paulis))
    ok = worst <= ALGEBRA_TOL and exact
    return ok, f"max defect {worst:.2e} up to {2 * max_modes} Majoranas; appendix set exact: {exact}"


def check_identities(fault: str | None, seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    us = injected_unitaries(fault)
    worst = {}
    for _ in range(5):
        c = CouplingSet(*rng.uniform(0.0, 2.0, 3))
        d, e = rng.uniform(-1.0, 1.0, 2)
        for k, v in appendix_identity_defects(c, d, e, us).items():
            worst[k] = max(worst.get(k, 0.0), v)
    ok = max(worst.values()) <= IDENTITY_TOL
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def check_symmetry(path: PathSpec, steps: int, points: int = 50) -> tuple[bool, str]:
    deltas = np.linspace(-40.0, 650.0, points)
    curves = {}
    for group in EQUAL_GROUPS:
        for which in group:
            calc = NormCalculator(which, path, steps)
            curves[which] = np.array([calc.norm(float(d)) for d in deltas])
    parts, ok = [], True
    for group in EQUAL_GROUPS:
        ref = curves[group[0]]
        rel = max(float(np.max(np.abs(curves[w] - ref) / np.maximum(ref, 1e-300))) for w in group[1:])
        ok &= rel <= SYMMETRY_RTOL
        parts.append(f"{'='.join(group)} rel {rel:.1e}")
    return ok, "; ".join(parts)


def analytic_table(path: PathSpec, steps: int, points=ANALYTIC_POINTS) -> list[tuple[str, float, float, float]]:
    """``(coupling, delta, numeric, closed form)`` at the comparison points."""
    rows = []
    for which in INDEPENDENT:
        calc = NormCalculator(which, path, steps)
        for d in points:
            if analytic_valid(d, path.delta_max):
                rows.append((which, d, calc.norm(d), analytic_norm(which, d, path.delta_max)))
    return rows


def check_analytic(path: PathSpec, steps: int) -> tuple[bool, str]:
    rows = analytic_table(path, steps)
    bad = [(w, d, n / a - 1) for w, d, n, a in rows if abs(n / a - 1) > ANALYTIC_RTOL]
    worst = max(rows, key=lambda r: abs(r[2] / r[3] - 1))
    detail = f"{len(rows)} points; worst {worst[0]} at delta={worst[1]:g}: rel {worst[2] / worst[3] - 1:+.3f}"
    if bad:
        detail += "; outside 15%: " + ", ".join(f"{w}@{d:g} ({r:+.2f})" for w, d, r in bad)
    return not bad, detail


def check_order(path: PathSpec) -> tuple[bool, str]:
    r = perturbation_order("12", path, 0.5)
    ok = all(3.0 <= x <= 5.0 for x in r.ratios)
    return ok, "residual ratios on halving eps: " + ", ".join(f"{x:.3f}" for x in r.ratios)


def check_adiabatic(path: PathSpec) -> tuple[bool, str]:
    """Ground-manifold block of the adiabatic and exact cycle propagators."""
    sim = BraidSimulation(DeviceSpec(), path=path)
    times = cycle_grid(path, sim.steps_per_leg)
    ad = adiabatic_propagator(sim.h_of_t, times)
    ground = ad.cluster_columns(int(np.argmin(ad.cluster_energy0)))
    g0 = ad.frames[0][:, ground]
    a = g0.conj().T @ ad.final() @ g0
    b = g0.conj().T @ sim.cycle_unitary() @ g0
    phase = np.trace(a.conj().T @ b)
    diff = float(np.linalg.norm(b - a * phase / abs(phase), 2))
    return diff <= ADIABATIC_TOL, f"ground-manifold difference {diff:.2e} (phase-aligned)"


def check_grid(path: PathSpec, steps: int) -> tuple[bool, str]:
    worst = (0.0, "", 0.0)
    for which in INDEPENDENT:
        a = NormCalculator(which, path, steps)
        b = NormCalculator(which, path, 2 * steps)
        for d in (0.0,) + ANALYTIC_POINTS + (path.delta_max,):
            na, nb = a.norm(d), b.norm(d)
            excess = abs(na - nb) - CONVERGENCE_RTOL * max(na, nb) - CONVERGENCE_ATOL
            rel = abs(na - nb) / max(na, nb, 1e-300)
            if excess > 0 and rel > worst[0]:
                worst = (rel, which, d)
    if worst[1]:
        rel, which, d = worst
        return False, (
            f"steps_per_leg={steps}: norm_{which} at delta={d:g} moved {rel:.1%} on doubling the grid "
            f"(limit {CONVERGENCE_RTOL:.1%}); raise steps_per_leg to at least {max(DEFAULT_STEPS_PER_LEG, 2 * steps)}"
        )
    return True, f"doubled grid ({2 * steps} steps/leg) agrees within {CONVERGENCE_RTOL:.1%}"


def check_hashes(files) -> tuple[bool, str]:
    """Each ``(output, config)`` pair: the output embeds the config's hash."""
    bad = []
    for out, cfg_path in files:
        if read_hash(out) != config_hash(Path(cfg_path).read_text()):
            bad.append(str(out))
    return not bad, "mismatched: " + ", ".join(bad) if bad else f"{len(files)} file(s) verified"


def run_validation(
    cfg: RunConfig,
    fault: str | None = None,
    seed: int = 0,
    hash_files=(),
    quick: bool = False,
    log: Callable[[str], None] | None = None,
) -> ValidationReport:
    """Run every check; ``quick`` skips the expensive propagation checks."""
    path, steps = cfg.path, cfg.steps_per_leg
    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("algebra", check_algebra),
        ("appendix-identities", lambda: check_identities(fault, seed)),
        ("grid-convergence", lambda: check_grid(path, steps)),
    ]
    if not quick:
        checks += [
            ("symmetry-equalities", lambda: check_symmetry(path, steps)),
            ("analytic-norms", lambda: check_analytic(path, steps)),
            ("perturbation-order", lambda: check_order(path)),
            ("adiabatic-vs-full", lambda: check_adiabatic(path)),
        ]
    if hash_files:
        checks.append(("config-hashes", lambda: check_hashes(hash_files)))
    report = ValidationReport()
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        report.checks.append(res)
        if log:
            log(report.lines()[-1])
    return report
