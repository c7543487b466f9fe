"""Dense operator algebra and piecewise-constant unitary propagation.

Operators are plain complex numpy arrays.  A control problem is described by a
:class:`ControlSystem` (drift plus control Hamiltonians), a :class:`PulseGrid`
(uniform time discretization) and a :class:`ControlPulse` (per-step control
amplitudes).  :func:`propagate` steps the Schroedinger equation with one
matrix exponential per segment and caches everything the gradient engine
needs: per-step eigensystems and the cumulative forward/backward products.

Units: hbar = 1, so Hamiltonian entries are angular frequencies and durations
are in the inverse units of the drift couplings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Absolute entrywise tolerance below which a matrix counts as Hermitian.
HERMITICITY_ATOL = 1e-12


class NumericalFailure(RuntimeError):
    """Raised when an iteration produces non-finite numbers.

    Carries the offending iterate (if any) in ``payload`` for post-mortem.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


def _as_square(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def max_asymmetry(h) -> float:
    """Largest entrywise deviation of ``h`` from its conjugate transpose."""
    m = np.asarray(h)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def require_hermitian(h, atol: float = HERMITICITY_ATOL, name: str = "operator") -> np.ndarray:
    """Validate that ``h`` is Hermitian and return it as a complex array."""
    m = _as_square(h)
    asym = max_asymmetry(m)
    if asym > atol:
        raise ValueError(
            f"{name} is not Hermitian: max asymmetry {asym:.3e} exceeds {atol:.1e}"
        )
    return m


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ControlSystem:
    """Drift Hamiltonian plus M >= 1 control Hamiltonians, all d x d Hermitian."""

    drift: np.ndarray
    controls: tuple[np.ndarray, ...]

    def __post_init__(self):
        drift = require_hermitian(self.drift, name="drift Hamiltonian")
        controls = tuple(
            require_hermitian(h, name=f"control Hamiltonian {j}")
            for j, h in enumerate(self.controls)
        )
        if not controls:
            raise ValueError("a control system needs at least one control Hamiltonian")
        d = drift.shape[0]
        for j, h in enumerate(controls):
            if h.shape != (d, d):
                raise ValueError(
                    f"control Hamiltonian {j} has shape {h.shape}, expected {(d, d)}"
                )
        object.__setattr__(self, "drift", _readonly(drift))
        object.__setattr__(self, "controls", tuple(_readonly(h) for h in controls))

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def control_stack(self) -> np.ndarray:
        """Controls as one (M, d, d) array."""
        return np.stack(self.controls)


@dataclass(frozen=True)
class PulseGrid:
    """Uniform discretization of [0, tau] into ``n_steps`` segments of length ``dt``.

    The total duration is always the product ``n_steps * dt``; it is never
    stored separately.  Step ``l`` (1-based) covers [(l-1)*dt, l*dt] and the
    control value on it is constant.
    """

    n_steps: int
    dt: float

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError(f"need at least 2 steps, got {self.n_steps}")
        if not (self.dt > 0):
            raise ValueError(f"step duration must be positive, got {self.dt}")

    @property
    def tau(self) -> float:
        return self.n_steps * self.dt

    def step_times(self) -> np.ndarray:
        """Right edge t_l = l * dt of every segment, l = 1..N."""
        return self.dt * np.arange(1, self.n_steps + 1)


@dataclass(frozen=True)
class ControlPulse:
    """Per-step control amplitudes: ``values[l, j]`` drives control j on step l+1."""

    values: np.ndarray
    grid: PulseGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"pulse values must be 2-d (steps x controls), got {values.ndim}-d")
        if values.shape[0] != self.grid.n_steps:
            raise ValueError(
                f"pulse has {values.shape[0]} rows but the grid has {self.grid.n_steps} steps"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("pulse values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]


def step_propagator(h, dt: float) -> np.ndarray:
    """exp(-i * dt * h) for Hermitian ``h``, via eigendecomposition.

    Rejects inputs whose asymmetry exceeds the Hermiticity tolerance.
    """
    m = require_hermitian(h)
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


@dataclass(frozen=True)
class Propagation:
    """Forward propagation with every intermediate product cached.

    Attributes
    ----------
    steps : (N, d, d)
        Per-step propagators, ``steps[l-1] = exp(-i*dt*H(t_l))``.
    fwd : (N+1, d, d)
        Cumulative products from the start: ``fwd[l]`` applies the first
        l steps (``fwd[0]`` is the identity).
    bwd : (N+1, d, d)
        Cumulative products from the end: ``bwd[l]`` applies steps
        l+1..N (``bwd[N]`` is the identity, ``bwd[0]`` the full propagator).
    eigvals, eigvecs : (N, d), (N, d, d)
        Eigensystem of each step Hamiltonian, reused by the gradient engine.
    """

    system: ControlSystem
    pulse: ControlPulse
    steps: np.ndarray
    fwd: np.ndarray
    bwd: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def final(self) -> np.ndarray:
        """The total propagator over [0, tau]."""
        return self.fwd[-1]


def propagate(system: ControlSystem, pulse: ControlPulse) -> Propagation:
    """Propagate the controlled Schroedinger equation across the whole grid."""
    if pulse.n_controls != system.n_controls:
        raise ValueError(
            f"pulse drives {pulse.n_controls} controls but the system has {system.n_controls}"
        )
    n = pulse.grid.n_steps
    d = system.dim
    dt = pulse.grid.dt

    hams = np.tensordot(pulse.values, system.control_stack(), axes=(1, 0))
    hams += system.drift
    eigvals, eigvecs = np.linalg.eigh(hams)
    phases = np.exp(-1j * dt * eigvals)
    steps = np.einsum("lab,lb,lcb->lac", eigvecs, phases, eigvecs.conj())

    fwd = np.empty((n + 1, d, d), dtype=np.complex128)
    bwd = np.empty((n + 1, d, d), dtype=np.complex128)
    fwd[0] = np.eye(d)
    for ell in range(n):
        fwd[ell + 1] = steps[ell] @ fwd[ell]
    bwd[n] = np.eye(d)
    for ell in range(n - 1, -1, -1):
        bwd[ell] = bwd[ell + 1] @ steps[ell]

    return Propagation(
        system=system,
        pulse=pulse,
        steps=_readonly(steps),
        fwd=_readonly(fwd),
        bwd=_readonly(bwd),
        eigvals=_readonly(eigvals),
        eigvecs=_readonly(eigvecs),
    )


def total_propagator(system: ControlSystem, pulse: ControlPulse) -> np.ndarray:
    """Ordered product of the per-step propagators, latest step leftmost."""
    return propagate(system, pulse).final


def _check_same_dim(u_targ, u_final):
    a = _as_square(u_targ)
    b = _as_square(u_final)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def trace_fidelity(u_targ, u_final) -> complex:
    """Complex trace overlap tr(u_targ^dag u_final); magnitude at most d."""
    a, b = _check_same_dim(u_targ, u_final)
    return complex(np.trace(a.conj().T @ b))


def phase_invariant_fidelity(u_targ, u_final) -> float:
    """|tr(u_targ^dag u_final)| / d, insensitive to a global phase on either gate."""
    a, _ = _check_same_dim(u_targ, u_final)
    return abs(trace_fidelity(u_targ, u_final)) / a.shape[0]


def operator_to_dict(op) -> dict:
    """Serialize an operator to the shared JSON structure.

    The format is ``{"dim": d, "entries": [[re, im], ...]}`` with entries in
    row-major order.
    """
    m = _as_square(op)
    flat = m.reshape(-1)
    return {
        "dim": int(m.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def operator_from_dict(data: dict) -> np.ndarray:
    """Inverse of :func:`operator_to_dict`."""
    d = int(data["dim"])
    entries = data["entries"]
    if len(entries) != d * d:
        raise ValueError(f"expected {d * d} entries for dim {d}, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return flat.reshape(d, d)
