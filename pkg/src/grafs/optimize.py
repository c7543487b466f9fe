"""Bound-constrained gradient ascent on basis-expansion coefficients.

One iterate updates the whole coefficient matrix: the fidelity gradient with
respect to every coefficient is contracted out of one propagation, a
limited-memory quasi-Newton direction is built from recent (step, gradient
change) pairs, and a backtracking line search on the fidelity itself picks
the step length.  The box |coefficient| <= bound is enforced by projection,
so every iterate is feasible exactly and accepted steps never decrease the
fidelity.

Plain steepest ascent (``method="steepest"``) is kept as a fallback; it is
the bare update rule the quasi-Newton direction accelerates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .gradients import fidelity_gradient
from .models import resolve_system, resolve_target
from .quantum import (
    ControlPulse,
    ControlSystem,
    NumericalFailure,
    PulseGrid,
    phase_invariant_fidelity,
    propagate,
    trace_fidelity,
)
from .rng import stream
from .slepian import DEFAULT_ENDPOINT_THRESHOLD, SlepianBasis, endpoint_filter, generate_dpss

#: Above this many coefficients, the trace keeps a snapshot only every 10th
#: iteration instead of every iteration.
SNAPSHOT_LIMIT = 10_000

#: Pulse durations (inverse exchange-coupling units) for the named systems,
#: found by coarse scans and then frozen.
DEFAULT_TAU = {
    "toffoli": 10.0,
    "two-qubit": 6.0,
    "qubit-x": 4.0,
}


@dataclass(frozen=True)
class CoefficientMatrix:
    """K x M real weights, one column per control, optionally box-bounded.

    ``bound == 0`` means unbounded; otherwise every entry must satisfy
    |value| <= bound (the bound is inclusive).
    """

    values: np.ndarray
    bound: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"coefficients must be 2-d (basis x controls), got {v.ndim}-d")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        if self.bound < 0:
            raise ValueError(f"bound must be nonnegative, got {self.bound}")
        if self.bound > 0 and np.max(np.abs(v)) > self.bound:
            raise ValueError(
                f"coefficients exceed the bound {self.bound}: max |value| = {np.max(np.abs(v))}"
            )
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for one ascent run."""

    max_iters: int = 200
    grad_tol: float = 1e-9
    fid_target: float = 1.0
    coeff_bound: float = 0.0
    ls_step: float = 1.0
    ls_shrink: float = 0.5
    ls_sufficient: float = 1e-4
    memory: int = 10
    seed: int = 0
    method: str = "lbfgs"

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not (0.0 < self.ls_shrink < 1.0):
            raise ValueError("line-search shrink factor must lie in (0, 1)")
        if self.method not in ("lbfgs", "steepest"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class TraceRecord:
    """One accepted iterate."""

    iteration: int
    phi: float
    abs_overlap: float
    phase: float
    grad_norm: float
    step: float
    wall_time: float
    coeffs: np.ndarray | None = None


@dataclass(frozen=True)
class AscentResult:
    coeffs: CoefficientMatrix
    phi: float
    trace: tuple[TraceRecord, ...]
    termination: str
    iterations: int


def _project(a: np.ndarray, bound: float) -> np.ndarray:
    if bound <= 0:
        return a
    return np.clip(a, -bound, bound)


def _projected_gradient(a: np.ndarray, g: np.ndarray, bound: float) -> np.ndarray:
    """Gradient components that can still move the iterate inside the box."""
    if bound <= 0:
        return g
    pg = g.copy()
    pg[(a >= bound) & (g > 0)] = 0.0
    pg[(a <= -bound) & (g < 0)] = 0.0
    return pg


class _LbfgsMemory:
    """Two-loop recursion over the most recent curvature pairs (maximization form)."""

    def __init__(self, memory: int):
        self.memory = memory
        self.s: list[np.ndarray] = []
        self.y: list[np.ndarray] = []

    def push(self, s: np.ndarray, y: np.ndarray):
        # y is the *decrease* of the ascent gradient; curvature s.y > 0 along
        # directions where the concave model holds.
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            self.s.append(s)
            self.y.append(y)
            if len(self.s) > self.memory:
                self.s.pop(0)
                self.y.pop(0)

    def clear(self):
        self.s.clear()
        self.y.clear()

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(self.s), reversed(self.y)):
            rho = 1.0 / float(s @ y)
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if self.s:
            s, y = self.s[-1], self.y[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y), a in zip(zip(self.s, self.y), reversed(alphas)):
            rho = 1.0 / float(s @ y)
            b = rho * float(y @ q)
            q += (a - b) * s
        return q


def ascend(
    system: ControlSystem,
    grid: PulseGrid,
    basis: SlepianBasis,
    u_targ,
    cfg: OptimizerConfig,
    a0: CoefficientMatrix,
) -> AscentResult:
    """Maximize the phase-invariant fidelity over the coefficient box.

    Terminates on a small projected gradient, on reaching ``fid_target``, on
    the iteration budget, or when the line search cannot find an increase.
    """
    u_targ = np.asarray(u_targ, dtype=np.complex128)
    k, m = a0.shape
    if k != basis.k:
        raise ValueError(f"coefficients have {k} rows but the basis has {basis.k} columns")
    if m != system.n_controls:
        raise ValueError(f"coefficients drive {m} controls but the system has {system.n_controls}")
    bound = a0.bound if a0.bound > 0 else cfg.coeff_bound
    d = system.dim

    def eval_phi(a: np.ndarray):
        pulse = ControlPulse(basis.expand(a), grid)
        prop = propagate(system, pulse)
        fid = trace_fidelity(u_targ, prop.final)
        phi = abs(fid) / d
        if not math.isfinite(phi):
            raise NumericalFailure(f"non-finite fidelity {phi!r}", payload=a)
        return phi, fid, prop

    def eval_grad(prop):
        g = fidelity_gradient(prop, u_targ, basis=basis).grafs
        if not np.all(np.isfinite(g)):
            raise NumericalFailure("non-finite gradient", payload=prop.pulse.values)
        return g

    snapshot_every = 1 if k * m <= SNAPSHOT_LIMIT else 10

    started = time.perf_counter()
    trace: list[TraceRecord] = []

    def record(iteration, phi, fid, grad_norm, step, a):
        keep = iteration % snapshot_every == 0
        trace.append(
            TraceRecord(
                iteration=iteration,
                phi=phi,
                abs_overlap=abs(fid),
                phase=float(np.angle(fid)) if fid != 0 else 0.0,
                grad_norm=grad_norm,
                step=step,
                wall_time=time.perf_counter() - started,
                coeffs=a.copy() if keep else None,
            )
        )

    a = _project(np.asarray(a0.values, dtype=np.float64).copy(), bound)
    phi, fid, prop = eval_phi(a)
    g = eval_grad(prop)
    pg_norm = float(np.max(np.abs(_projected_gradient(a, g, bound))))
    record(0, phi, fid, pg_norm, 0.0, a)

    memory = _LbfgsMemory(cfg.memory)
    termination = "max_iters"
    iteration = 0

    while True:
        if phi >= cfg.fid_target:
            termination = "fid_target"
            break
        if pg_norm < cfg.grad_tol:
            termination = "grad_tol"
            break
        if iteration >= cfg.max_iters:
            termination = "max_iters"
            break
        iteration += 1

        flat_g = g.ravel()
        if cfg.method == "lbfgs":
            direction = memory.direction(flat_g).reshape(k, m)
            if float(direction.ravel() @ flat_g) <= 0.0:
                direction = g
        else:
            direction = g

        accepted = None
        for attempt in range(2):
            eps = cfg.ls_step
            while eps > 1e-14:
                candidate = _project(a + eps * direction, bound)
                delta = candidate - a
                gain = float(g.ravel() @ delta.ravel())
                if gain > 0.0:
                    phi_new, fid_new, prop_new = eval_phi(candidate)
                    if phi_new >= phi + cfg.ls_sufficient * gain:
                        accepted = (candidate, phi_new, fid_new, prop_new, eps)
                        break
                eps *= cfg.ls_shrink
            if accepted is not None or cfg.method == "steepest" or attempt == 1:
                break
            # quasi-Newton direction failed: drop stale curvature, retry steepest
            memory.clear()
            direction = g

        if accepted is None:
            termination = "line_search"
            break

        a_new, phi_new, fid_new, prop_new, eps = accepted
        g_new = eval_grad(prop_new)
        memory.push((a_new - a).ravel(), (g - g_new).ravel())
        a, phi, fid, g = a_new, phi_new, fid_new, g_new
        pg_norm = float(np.max(np.abs(_projected_gradient(a, g, bound))))
        record(iteration, phi, fid, pg_norm, eps, a)

    final = trace[-1]
    if final.coeffs is None:
        trace[-1] = replace(final, coeffs=a.copy())
    return AscentResult(
        coeffs=CoefficientMatrix(a, bound=bound),
        phi=phi,
        trace=tuple(trace),
        termination=termination,
        iterations=iteration,
    )


@dataclass(frozen=True)
class SynthesisSpec:
    """Everything needed to reproduce one synthesis run."""

    system: str = "toffoli"
    target: str = "toffoli"
    n: int = 1000
    w: float = 0.02
    tau: float | None = None
    k_policy: str = "full"
    endpoint_threshold: float = DEFAULT_ENDPOINT_THRESHOLD
    alpha_bound: float = 5.0
    max_iters: int = 200
    grad_tol: float = 1e-9
    fid_target: float = 1.0
    seed: int = 0
    init: str = "zero"

    def resolved_tau(self) -> float:
        if self.tau is not None:
            return float(self.tau)
        try:
            return DEFAULT_TAU[self.system]
        except KeyError:
            raise ValueError(f"no default duration for system {self.system!r}") from None


@dataclass(frozen=True)
class SynthesisResult:
    spec: SynthesisSpec
    basis: SlepianBasis
    grid: PulseGrid
    result: AscentResult
    pulse: np.ndarray

    @property
    def phi(self) -> float:
        return self.result.phi

    @property
    def infidelity(self) -> float:
        return 1.0 - self.result.phi


def build_basis(
    n: int,
    w: float,
    k_policy: str = "full",
    endpoint_threshold: float = DEFAULT_ENDPOINT_THRESHOLD,
) -> SlepianBasis:
    """Pulse-shaping basis for the given policy.

    ``full`` keeps every sequence up to the effective dimension 2NW;
    ``three-quarter`` keeps only the first ceil(0.75 * 2NW) orders (the
    deliberately incomplete variant); ``k:<count>`` pins the order count
    explicitly.  All policies then drop sequences with non-negligible
    endpoints.
    """
    from .slepian import effective_dimension

    k_full = effective_dimension(n, w)
    if k_policy == "full":
        k_max = k_full
    elif k_policy == "three-quarter":
        k_max = math.ceil(0.75 * k_full)
    elif k_policy.startswith("k:"):
        k_max = int(k_policy.split(":", 1)[1])
    else:
        raise ValueError(f"unknown basis policy {k_policy!r}")
    if k_max < 1:
        raise ValueError(f"basis policy {k_policy!r} leaves no sequences at n={n}, w={w}")
    return endpoint_filter(generate_dpss(n, w, k_max), endpoint_threshold)


def initial_coefficients(
    basis: SlepianBasis, n_controls: int, spec: SynthesisSpec
) -> CoefficientMatrix:
    shape = (basis.k, n_controls)
    if spec.init == "zero":
        values = np.zeros(shape)
    elif spec.init == "random":
        values = stream(spec.seed, "init-coeffs").uniform(-0.1, 0.1, size=shape)
    else:
        raise ValueError(f"unknown init policy {spec.init!r}")
    return CoefficientMatrix(values, bound=spec.alpha_bound)


def synthesize(spec: SynthesisSpec) -> SynthesisResult:
    """Wire the model library, basis generation and ascent for one named problem."""
    system = resolve_system(spec.system)
    target = resolve_target(spec.target)
    if target.dim != system.dim:
        raise ValueError(
            f"target {spec.target!r} has dimension {target.dim} "
            f"but system {spec.system!r} has dimension {system.dim}"
        )
    basis = build_basis(spec.n, spec.w, spec.k_policy, spec.endpoint_threshold)
    grid = PulseGrid(spec.n, spec.resolved_tau() / spec.n)
    cfg = OptimizerConfig(
        max_iters=spec.max_iters,
        grad_tol=spec.grad_tol,
        fid_target=spec.fid_target,
        coeff_bound=spec.alpha_bound,
        seed=spec.seed,
    )
    a0 = initial_coefficients(basis, system.n_controls, spec)
    result = ascend(system, grid, basis, target.unitary, cfg, a0)
    pulse = basis.expand(result.coeffs.values)
    return SynthesisResult(spec=spec, basis=basis, grid=grid, result=result, pulse=pulse)
