"""Weyl-chamber coordinates, Cartan-form targets and perfect entanglers.

Every two-qubit gate is, up to single-qubit operations on either side,
determined by three angles (cx, cy, cz).  This module reduces those angles to
the canonical chamber pi/2 >= cx >= cy >= cz >= 0, builds gates from chamber
points dressed with Haar-random local operations, and classifies perfect
entanglers (the polyhedron of gates that map some product state to a
maximally entangled one).

The round trip gate -> coordinates -> gate is the contract that fixes all
sign and reduction conventions here; see the tests.  A caveat on sampling:
uniformity is with respect to the Euclidean chamber coordinates, not the Haar
measure on gates, whose volume element is distorted across the chamber.  The
per-target seed is recorded so samples can be re-weighted later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .models import SIGMA_Y, GateTarget
from .rng import stream

#: Transformation into the magic (Bell) basis, where the canonical
#: two-qubit invariants become eigenphases.
MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]],
    dtype=np.complex128,
) / np.sqrt(2.0)

_XX = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]])).astype(complex)
_YY = np.kron(SIGMA_Y, SIGMA_Y)
_ZZ = np.kron(np.diag([1, -1]), np.diag([1, -1])).astype(complex)

_HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class WeylPoint:
    """Canonical chamber coordinates (radians), pi/2 >= cx >= cy >= cz >= 0."""

    cx: float
    cy: float
    cz: float

    def __post_init__(self):
        c = (self.cx, self.cy, self.cz)
        if not (_HALF_PI + 1e-12 >= c[0] >= c[1] >= c[2] >= -1e-12):
            raise ValueError(f"point {c} violates the canonical chamber ordering")

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])


def canonicalize(cx: float, cy: float, cz: float) -> WeylPoint:
    """Reduce arbitrary chamber coordinates to the canonical ordering.

    Reflects cx through pi when it exceeds pi/2 (the identification on the
    full tetrahedron), then sorts in descending order.
    """
    if cx > _HALF_PI:
        cx = np.pi - cx
    c = np.sort([cx, cy, cz])[::-1]
    c = np.clip(c, 0.0, _HALF_PI)
    return WeylPoint(float(c[0]), float(c[1]), float(c[2]))


def cartan_core(point: WeylPoint) -> np.ndarray:
    """The nonlocal factor exp((i/2)(cx XX + cy YY + cz ZZ))."""
    gen = point.cx * _XX + point.cy * _YY + point.cz * _ZZ
    return expm(0.5j * gen)


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) element from a uniform point on the 3-sphere."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a = q[0] + 1j * q[1]
    b = q[2] + 1j * q[3]
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def haar_local(rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(2) x SU(2) acting on two qubits."""
    return np.kron(haar_su2(rng), haar_su2(rng))


def cartan_target(point: WeylPoint, seed: int) -> GateTarget:
    """Gate with the given chamber coordinates, dressed with random locals."""
    rng = stream(seed, "cartan-locals")
    u = haar_local(rng) @ cartan_core(point) @ haar_local(rng)
    return GateTarget(
        u,
        provenance=f"cartan({point.cx:.12g},{point.cy:.12g},{point.cz:.12g})",
        seed=seed,
    )


def _require_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 unitary, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(4)))
    if err > 1e-10:
        raise ValueError(f"matrix is not unitary: max deviation {err:.3e}")
    return u


def weyl_coordinates(u) -> WeylPoint:
    """Canonical chamber coordinates of a two-qubit unitary.

    The eigenphases of U (YY U^T YY) / sqrt(det U) determine the coordinates
    up to the chamber symmetries, which the final reduction removes.
    """
    u = _require_unitary(u)
    u_tilde = _YY @ u.T @ _YY
    ev = np.linalg.eigvals((u @ u_tilde) / np.sqrt(complex(np.linalg.det(u))))
    two_s = np.angle(ev) / np.pi
    two_s = np.where(two_s <= -0.5, two_s + 2.0, two_s)
    s = np.sort(two_s / 2.0)[::-1]
    shift = int(round(s.sum()))
    s -= np.concatenate([np.ones(shift), np.zeros(4 - shift)])
    s = np.roll(s, -shift)
    combine = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=float)
    c1, c2, c3 = combine @ s[:3]
    if c3 < 0:
        c1, c3 = 1.0 - c1, -c3
    return canonicalize(np.pi * c1, np.pi * c2, np.pi * c3)


def point_in_perfect_entangler(point: WeylPoint, atol: float = 1e-9) -> bool:
    """Membership of a canonical chamber point in the perfect-entangler polyhedron.

    In the canonical chamber the polyhedron reduces to two face inequalities:
    cx + cy >= pi/2 and cy + cz <= pi/2 (the third face, cx - cy <= pi/2,
    holds automatically once cx <= pi/2).
    """
    return (point.cx + point.cy >= _HALF_PI - atol) and (
        point.cy + point.cz <= _HALF_PI + atol
    )


def is_perfect_entangler(u, atol: float = 1e-9) -> bool:
    """Whether the gate can take some product state to a maximally entangled one."""
    return point_in_perfect_entangler(weyl_coordinates(u), atol=atol)


def sample_pe_weyl(rng: np.random.Generator) -> WeylPoint:
    """Uniform (in chamber coordinates) sample from the perfect-entangler polyhedron.

    Rejection sampling: uniform triples on [0, pi/2] sorted descending are
    uniform on the chamber tetrahedron; keep those inside the polyhedron.
    """
    while True:
        c = np.sort(rng.uniform(0.0, _HALF_PI, size=3))[::-1]
        point = WeylPoint(float(c[0]), float(c[1]), float(c[2]))
        if point_in_perfect_entangler(point, atol=0.0):
            return point


def random_perfect_entangler(seed: int) -> GateTarget:
    """Seeded random perfect-entangler gate with Haar-random locals."""
    point = sample_pe_weyl(stream(seed, "pe-weyl"))
    target = cartan_target(point, seed)
    return GateTarget(target.unitary, provenance=f"pe-random:{seed}", seed=seed)


def _product_state(angles: np.ndarray) -> np.ndarray:
    ta, pa, tb, pb = angles
    qa = np.array([np.cos(ta / 2), np.exp(1j * pa) * np.sin(ta / 2)])
    qb = np.array([np.cos(tb / 2), np.exp(1j * pb) * np.sin(tb / 2)])
    return np.kron(qa, qb)


def state_concurrence(psi) -> float:
    """Concurrence |<psi*| YY |psi>| of a normalized two-qubit pure state."""
    psi = np.asarray(psi, dtype=np.complex128)
    return float(abs(psi @ (_YY @ psi)))


def max_product_concurrence(u, seed: int = 0, n_starts: int = 8) -> float:
    """Largest output concurrence over product input states, by multi-start search.

    Variational ground truth for perfect-entangler membership: the maximum
    reaches 1 exactly when the gate is a perfect entangler.  Four angles
    parameterize the product input; each start runs a local quasi-Newton
    ascent.
    """
    u = _require_unitary(u)
    rng = stream(seed, "pe-oracle")

    def negative_concurrence(angles):
        return -state_concurrence(u @ _product_state(angles))

    best = 0.0
    bounds = [(0.0, np.pi), (-np.pi, np.pi)] * 2
    for _ in range(n_starts):
        x0 = rng.uniform([0, -np.pi, 0, -np.pi], [np.pi, np.pi, np.pi, np.pi])
        res = minimize(negative_concurrence, x0, method="L-BFGS-B", bounds=bounds)
        best = max(best, -float(res.fun))
        if best > 1.0 - 1e-9:
            break
    return min(best, 1.0)
