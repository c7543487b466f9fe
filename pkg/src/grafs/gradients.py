"""Exact gradients of the phase-invariant fidelity.

Two parameterizations share one machinery.  The per-timestep (GRAPE) gradient
differentiates the ordered product of step propagators: the derivative of one
step is sandwiched between the cached partial products on either side.  The
basis-coefficient (GRAFS) gradient is the contraction of the GRAPE gradient
with the basis matrix over the time index, because the basis value on a step
is a scalar that distributes out of the step derivative.

The step derivative itself is exact, not a small-dt approximation: with the
eigensystem {w_v, |v>} of the step Hamiltonian, the derivative of
exp(-i*dt*(h + s*b)) along s has matrix elements <v|b|u> times the divided
difference of exp(-i*dt*.) at (w_v, w_u), whose degenerate limit is
-i*dt*exp(-i*dt*w_v).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import (
    ControlPulse,
    ControlSystem,
    Propagation,
    propagate,
    require_hermitian,
    trace_fidelity,
)
from .slepian import SlepianBasis

#: Eigenvalue gaps below ``tol * max(1, |w|)`` use the degenerate limit of the
#: divided difference instead of a catastrophically cancelled quotient.
DEGENERACY_RTOL = 1e-9


def _divided_difference(eigvals: np.ndarray, dt: float) -> np.ndarray:
    """Divided-difference table of z -> exp(-i*dt*z) over one or more eigensets.

    ``eigvals`` has shape (..., d); the result has shape (..., d, d).
    """
    w_row = eigvals[..., :, None]
    w_col = eigvals[..., None, :]
    gap = w_row - w_col
    phase_row = np.exp(-1j * dt * w_row)
    phase_col = np.exp(-1j * dt * w_col)
    degenerate = np.abs(gap) < DEGENERACY_RTOL * np.maximum(1.0, np.abs(w_row))
    safe_gap = np.where(degenerate, 1.0, gap)
    table = (phase_row - phase_col) / safe_gap
    return np.where(degenerate, -1j * dt * phase_row, table)


def exp_derivative(eigvals, eigvecs, b, dt: float) -> np.ndarray:
    """d/ds exp(-i*dt*(h + s*b)) from the eigensystem of h + s*b.

    ``eigvals``/``eigvecs`` are the spectrum of the Hermitian generator at the
    evaluation point (as retained by :func:`grafs.quantum.propagate`); ``b``
    is the Hermitian direction, possibly pre-scaled by a real factor.
    """
    w = np.asarray(eigvals, dtype=np.float64)
    v = np.asarray(eigvecs, dtype=np.complex128)
    bm = require_hermitian(b, name="derivative direction")
    b_eig = v.conj().T @ bm @ v
    return v @ (_divided_difference(w, dt) * b_eig) @ v.conj().T


@dataclass(frozen=True)
class PropagatorGradient:
    """Matrix-valued gradients of the total propagator.

    ``grape[l, j]`` is the d x d derivative with respect to the control-j
    amplitude on step l+1; ``grafs[k, j]`` (when a basis was supplied) is the
    derivative with respect to the basis-k coefficient of control j.
    """

    grape: np.ndarray
    grafs: np.ndarray | None = None


@dataclass(frozen=True)
class FidelityGradient:
    """Scalar gradients of the phase-invariant fidelity, plus the overlap phase."""

    grape: np.ndarray
    grafs: np.ndarray | None = None
    phase: float = 0.0


def _step_direction_eigbasis(prop: Propagation) -> np.ndarray:
    """Control Hamiltonians rotated into each step's eigenbasis, shape (N, M, d, d)."""
    v = prop.eigvecs
    h = prop.system.control_stack()
    return np.einsum("lba,jbc,lcd->ljad", v.conj(), h, v, optimize=True)


def _step_derivative_factors(prop: Propagation) -> np.ndarray:
    """(Gamma * b_eig) per step and control, still in the step eigenbasis."""
    table = _divided_difference(prop.eigvals, prop.pulse.grid.dt)
    return table[:, None, :, :] * _step_direction_eigbasis(prop)


def fidelity_gradient(
    prop: Propagation, u_targ, basis: SlepianBasis | None = None
) -> FidelityGradient:
    """Gradient of |tr(u_targ^dag U_tau)| / d over all step amplitudes.

    Uses the cached partial products, so the cost is O(N) matrix products.
    The overlap phase is fixed at its current value before differentiating
    the magnitude; a vanishing overlap uses phase zero (any phase is a valid
    ascent direction there).
    """
    u_targ = np.asarray(u_targ, dtype=np.complex128)
    d = prop.system.dim
    fid = trace_fidelity(u_targ, prop.final)
    phase = float(np.angle(fid)) if fid != 0 else 0.0

    # d(Phi)/dOmega[l,j] = Re[e^{-i phase} tr(X_l D_lj)] / d with
    # X_l = fwd[l-1] u_targ^dag bwd[l] collecting both cached products.
    x = np.einsum("lab,bc,lcd->lad", prop.fwd[:-1], u_targ.conj().T, prop.bwd[1:], optimize=True)
    x_eig = np.einsum("lba,lbc,lcd->lad", prop.eigvecs.conj(), x, prop.eigvecs, optimize=True)
    factors = _step_derivative_factors(prop)
    traces = np.einsum("lnm,ljnm->lj", x_eig.transpose(0, 2, 1), factors, optimize=True)
    grape = np.real(np.exp(-1j * phase) * traces) / d

    grafs = None
    if basis is not None:
        grafs = contract_time_index(grape, basis)
    return FidelityGradient(grape=grape, grafs=grafs, phase=phase)


def propagator_gradient(
    prop: Propagation, basis: SlepianBasis | None = None
) -> PropagatorGradient:
    """Full matrix-valued gradient of the total propagator, shape (N, M, d, d)."""
    factors = _step_derivative_factors(prop)
    step_deriv = np.einsum(
        "lab,ljbc,ldc->ljad", prop.eigvecs, factors, prop.eigvecs.conj(), optimize=True
    )
    grape = np.einsum(
        "lab,ljbc,lcd->ljad", prop.bwd[1:], step_deriv, prop.fwd[:-1], optimize=True
    )
    grafs = None
    if basis is not None:
        grafs = contract_time_index(grape, basis)
    return PropagatorGradient(grape=grape, grafs=grafs)


def grape_gradient(
    system: ControlSystem,
    pulse: ControlPulse,
    u_targ,
    basis: SlepianBasis | None = None,
) -> tuple[FidelityGradient, PropagatorGradient]:
    """Both gradient views from a single propagation of ``pulse``."""
    prop = propagate(system, pulse)
    return fidelity_gradient(prop, u_targ, basis), propagator_gradient(prop, basis)


def contract_time_index(grape: np.ndarray, basis: SlepianBasis) -> np.ndarray:
    """Tensor-dot of the basis matrix against the leading (time) gradient index.

    Works on the scalar (N, M) and matrix-valued (N, M, d, d) layouts alike;
    the summation order is fixed, so results are bit-identical regardless of
    how callers parallelize around this.
    """
    g = np.asarray(grape)
    if g.shape[0] != basis.n:
        raise ValueError(
            f"gradient covers {g.shape[0]} steps but the basis has length {basis.n}"
        )
    return np.tensordot(basis.matrix, g, axes=(0, 0))


def grafs_gradient(grad: FidelityGradient | PropagatorGradient, basis: SlepianBasis) -> np.ndarray:
    """Basis-coefficient gradient from a per-timestep gradient."""
    return contract_time_index(grad.grape, basis)


def grafs_gradient_direct(
    system: ControlSystem,
    basis: SlepianBasis,
    grid,
    coeffs: np.ndarray,
    u_targ,
) -> np.ndarray:
    """Product-rule evaluation of the coefficient gradient, one step at a time.

    Test oracle for :func:`grafs_gradient`: every per-step derivative is
    evaluated with the basis value folded into the direction operator and
    sandwiched explicitly, summed over the time index with no contraction
    shortcut.  O(N * K) exponential derivatives, so keep problems small.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    values = basis.expand(coeffs)
    pulse = ControlPulse(values, grid)
    prop = propagate(system, pulse)
    u_targ = np.asarray(u_targ, dtype=np.complex128)
    d = system.dim
    fid = trace_fidelity(u_targ, prop.final)
    phase = float(np.angle(fid)) if fid != 0 else 0.0

    n, m = values.shape
    k = basis.k
    dt = grid.dt
    out = np.zeros((k, m))
    for ki in range(k):
        for j in range(m):
            total = np.zeros((d, d), dtype=np.complex128)
            for ell in range(n):
                direction = basis.matrix[ell, ki] * system.controls[j]
                step = exp_derivative(prop.eigvals[ell], prop.eigvecs[ell], direction, dt)
                total += prop.bwd[ell + 1] @ step @ prop.fwd[ell]
            overlap = np.trace(u_targ.conj().T @ total)
            out[ki, j] = np.real(np.exp(-1j * phase) * overlap) / d
    return out
