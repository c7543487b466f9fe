"""Hamiltonian systems and target gates for the synthesis experiments.

Couplings are Heisenberg exchange terms with unit strength, so every duration
in this package is expressed in inverse exchange-coupling units.  Controls are
single-qubit Paulis embedded by identity tensoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import ControlSystem, max_asymmetry

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class GateTarget:
    """A target unitary together with how it was constructed."""

    unitary: np.ndarray
    provenance: str
    seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=np.complex128)
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > 1e-12:
            raise ValueError(f"target is not unitary: max deviation {err:.3e}")
        u = np.ascontiguousarray(u)
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]


def _embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    if not (0 <= qubit < n_qubits):
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    out = np.eye(1, dtype=np.complex128)
    for q in range(n_qubits):
        out = np.kron(out, op if q == qubit else np.eye(2))
    return out


def pauli_control(axis: str, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit Pauli on ``qubit`` (0-based), identity elsewhere."""
    if axis not in _PAULIS:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    return _embed(_PAULIS[axis], qubit, n_qubits)


def heisenberg_exchange(i: int, j: int, n_qubits: int) -> np.ndarray:
    """Unit-strength exchange coupling between qubits ``i`` and ``j``."""
    if i == j:
        raise ValueError("exchange coupling needs two distinct qubits")
    total = np.zeros((2**n_qubits, 2**n_qubits), dtype=np.complex128)
    for axis in "xyz":
        total += pauli_control(axis, i, n_qubits) @ pauli_control(axis, j, n_qubits)
    return total


def toffoli_system() -> ControlSystem:
    """Three qubits on an exchange chain, x control on qubit 1 and y on qubit 3."""
    drift = heisenberg_exchange(0, 1, 3) + heisenberg_exchange(1, 2, 3)
    return ControlSystem(drift, (pauli_control("x", 0, 3), pauli_control("y", 2, 3)))


def toffoli_target() -> GateTarget:
    """Controlled-controlled-NOT: swaps |110> and |111>."""
    u = np.eye(8, dtype=np.complex128)
    u[[6, 7]] = u[[7, 6]]
    return GateTarget(u, provenance="toffoli")


def two_qubit_system() -> ControlSystem:
    """One exchange coupling with independent x and y controls on both qubits."""
    drift = heisenberg_exchange(0, 1, 2)
    controls = (
        pauli_control("x", 0, 2),
        pauli_control("y", 0, 2),
        pauli_control("x", 1, 2),
        pauli_control("y", 1, 2),
    )
    return ControlSystem(drift, controls)


def single_qubit_x_system() -> ControlSystem:
    """Driftless qubit driven along x.

    The control Hamiltonian is sigma_x / 2, so the integrated pulse area
    equals the Bloch rotation angle and |amplitude| <= 1 gives the textbook
    pulse-area time bound.
    """
    return ControlSystem(np.zeros((2, 2)), (SIGMA_X / 2.0,))


def cnot_target() -> GateTarget:
    u = np.eye(4, dtype=np.complex128)
    u[[2, 3]] = u[[3, 2]]
    return GateTarget(u, provenance="cnot")


def sqrt_swap_target() -> GateTarget:
    u = np.array(
        [
            [1, 0, 0, 0],
            [0, 0.5 + 0.5j, 0.5 - 0.5j, 0],
            [0, 0.5 - 0.5j, 0.5 + 0.5j, 0],
            [0, 0, 0, 1],
        ],
        dtype=np.complex128,
    )
    return GateTarget(u, provenance="sqrt-swap")


def x180_target() -> GateTarget:
    """A pi rotation of the Bloch vector about x: exp(-i (pi/2) sigma_x)."""
    u = np.array([[0, -1j], [-1j, 0]], dtype=np.complex128)
    return GateTarget(u, provenance="x180")


_SYSTEMS = {
    "toffoli": toffoli_system,
    "two-qubit": two_qubit_system,
    "qubit-x": single_qubit_x_system,
}


def resolve_system(name: str) -> ControlSystem:
    """Look up a named control system."""
    try:
        return _SYSTEMS[name]()
    except KeyError:
        raise ValueError(
            f"unknown system {name!r}; known systems: {sorted(_SYSTEMS)}"
        ) from None


def system_names() -> tuple[str, ...]:
    return tuple(sorted(_SYSTEMS))


def resolve_target(name: str) -> GateTarget:
    """Look up a named gate, or construct one from a spec string.

    Supported forms: ``toffoli``, ``cnot``, ``sqrt-swap``, ``x180``,
    ``cartan:<cx>,<cy>,<cz>:<seed>`` (angles in radians) and
    ``pe-random:<seed>``.
    """
    from . import weyl  # deferred; weyl imports GateTarget from here

    fixed = {
        "toffoli": toffoli_target,
        "cnot": cnot_target,
        "sqrt-swap": sqrt_swap_target,
        "x180": x180_target,
    }
    if name in fixed:
        return fixed[name]()
    if name.startswith("cartan:"):
        try:
            _, angles, seed = name.split(":")
            cx, cy, cz = (float(x) for x in angles.split(","))
            seed = int(seed)
        except ValueError:
            raise ValueError(
                f"malformed cartan target {name!r}; expected cartan:<cx>,<cy>,<cz>:<seed>"
            ) from None
        return weyl.cartan_target(weyl.WeylPoint(cx, cy, cz), seed=seed)
    if name.startswith("pe-random:"):
        try:
            seed = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"malformed target {name!r}; expected pe-random:<seed>") from None
        return weyl.random_perfect_entangler(seed)
    raise ValueError(f"unknown target {name!r}")


def lie_closure_dimension(hamiltonians, tol: float = 1e-8, max_sweeps: int = 12) -> int:
    """Dimension of the Lie algebra generated by -i * the given Hamiltonians.

    Repeatedly adjoins commutators, tracking an orthonormal real basis of the
    traceless span, until a sweep adds nothing.  A full span of su(d) has
    dimension d**2 - 1 and certifies operator controllability.
    """
    mats = [np.asarray(h, dtype=np.complex128) for h in hamiltonians]
    if any(max_asymmetry(m) > 1e-10 for m in mats):
        raise ValueError("generators must be Hermitian")
    d = mats[0].shape[0]
    elements: list[np.ndarray] = []
    basis: list[np.ndarray] = []

    def try_add(m: np.ndarray) -> bool:
        m = m - (np.trace(m) / d) * np.eye(d)
        nrm = np.linalg.norm(m)
        if nrm < 1e-14:
            return False
        v = np.concatenate([m.real.ravel(), m.imag.ravel()]) / nrm
        for b in basis:
            v = v - (b @ v) * b
        res = np.linalg.norm(v)
        if res < tol:
            return False
        basis.append(v / res)
        elements.append(m / nrm)
        return True

    for h in mats:
        try_add(-1j * h)
    fresh = list(elements)
    for _ in range(max_sweeps):
        added = []
        for a in fresh:
            for b in list(elements):
                if try_add(a @ b - b @ a):
                    added.append(elements[-1])
        if not added:
            break
        fresh = added
    return len(basis)
