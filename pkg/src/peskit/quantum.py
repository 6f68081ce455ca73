"""m-qubit statevector simulation and quantum fidelity kernels.

Gate set {H, R_Z, R_Y, R_ZZ, I} with little-endian qubit ordering (qubit 0
is the least significant bit of the basis index). Data vectors are encoded
into gate angles; the kernel is the squared overlap of the two encoded
states, computed from cached statevectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .gp import KernelFn, ParamVector

__all__ = [
    "GateOp",
    "Circuit",
    "QuantumKernelSpec",
    "QuantumKernel",
    "zero_state",
    "apply_gate",
    "encode",
    "statevector_for",
    "statevectors",
    "fidelity_kernel",
    "fidelity_via_adjoint",
    "build_fixed_ansatz",
    "build_variable_ansatz",
]

GATE_KINDS = ("H", "RZ", "RY", "RZZ", "ID")

# default bounds for the encoding scales theta_1..theta_m and Theta
THETA_BOUNDS = (1e-2, 1e1)


@dataclass(frozen=True)
class GateOp:
    """One gate: kind, target qubit(s), and an optional fixed angle.

    ``angle=None`` on a rotation gate means the angle is data-encoded.
    """

    kind: str
    qubits: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n = 2 if self.kind == "RZZ" else 1
        if len(self.qubits) != n:
            raise ValueError(f"{self.kind} takes {n} qubit index(es)")
        if self.kind == "RZZ":
            i, j = self.qubits
            if i == j:
                raise ValueError("RZZ qubits must be distinct")
            if i > j:
                raise ValueError("RZZ qubit pair must be ordered (i < j)")


@dataclass(frozen=True)
class Circuit:
    """Layered gate program; each qubit is touched at most once per layer."""

    m: int
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers",
                           tuple(tuple(layer) for layer in self.layers))
        for layer in self.layers:
            seen = set()
            for g in layer:
                for q in g.qubits:
                    if not 0 <= q < self.m:
                        raise ValueError(f"qubit index {q} out of range for m={self.m}")
                    if q in seen:
                        raise ValueError(
                            f"qubit {q} operated by more than one gate in a layer")
                    seen.add(q)

    def to_json(self, encoding=None) -> str:
        doc = {"m": self.m,
               "layers": [[{"gate": g.kind, "qubits": list(g.qubits),
                            **({"angle": g.angle} if g.angle is not None else {})}
                           for g in layer] for layer in self.layers]}
        if encoding is not None:
            doc["encoding"] = encoding
        return json.dumps(doc)

    @classmethod
    def from_json(cls, s: str):
        doc = json.loads(s)
        layers = tuple(tuple(GateOp(kind=g["gate"], qubits=tuple(g["qubits"]),
                                    angle=g.get("angle"))
                             for g in layer) for layer in doc["layers"])
        return cls(m=doc["m"], layers=layers), doc.get("encoding")


def zero_state(m, batch=None):
    """|0...0> as amplitudes, optionally batched."""
    shape = (2 ** m,) if batch is None else (batch, 2 ** m)
    psi = np.zeros(shape, dtype=complex)
    psi[..., 0] = 1.0
    return psi


def _bit(m, q):
    return (np.arange(2 ** m) >> q) & 1


def apply_gate(state, gate: GateOp, angle=None):
    """Apply one gate in place to amplitudes of shape (..., 2^m).

    ``angle`` may be a scalar or an array broadcasting over leading axes;
    it is ignored for H and ID.
    """
    dim = state.shape[-1]
    m = dim.bit_length() - 1
    for q in gate.qubits:
        if not 0 <= q < m:
            raise IndexError(f"qubit index {q} out of range for m={m}")
    if gate.kind == "ID":
        return state
    if gate.kind in ("RZ", "RZZ"):
        phi = np.asarray(angle, dtype=float)
        if gate.kind == "RZ":
            s = 1.0 - 2.0 * _bit(m, gate.qubits[0])
        else:
            i, j = gate.qubits
            s = (1.0 - 2.0 * _bit(m, i)) * (1.0 - 2.0 * _bit(m, j))
        state *= np.exp(-0.5j * phi[..., None] * s)
        return state
    # H and RY mix amplitude pairs along the target-qubit axis
    q = gate.qubits[0]
    lead = state.shape[:-1]
    view = state.reshape(lead + (2 ** (m - 1 - q), 2, 2 ** q))
    a = view[..., 0, :].copy()
    b = view[..., 1, :]
    if gate.kind == "H":
        r = 1.0 / math.sqrt(2.0)
        view[..., 0, :] = r * (a + b)
        view[..., 1, :] = r * (a - b)
    else:  # RY
        phi = np.asarray(angle, dtype=float)
        c = np.cos(0.5 * phi)[..., None, None]
        s = np.sin(0.5 * phi)[..., None, None]
        view[..., 0, :] = c * a - s * b
        view[..., 1, :] = s * a + c * b
    return state


@dataclass(frozen=True)
class QuantumKernelSpec:
    """A circuit plus the encoding rule defining a fidelity kernel.

    Trainable parameters are [theta_1 .. theta_m, Theta]: per-qubit scales
    for the single-qubit rotation angles x_i / theta_i and one shared scale
    for all R_ZZ angles exp(-(x_i - x_j)^2 / Theta). M = m + 1.
    """

    circuit: Circuit
    encoding: str  # "fixed" or "variable"

    def __post_init__(self):
        if self.encoding not in ("fixed", "variable"):
            raise ValueError(f"unknown encoding {self.encoding!r}")

    @property
    def m(self):
        return self.circuit.m

    def default_params(self) -> ParamVector:
        m = self.m
        names = tuple(f"theta_{i + 1}" for i in range(m)) + ("Theta",)
        lo, hi = THETA_BOUNDS
        center = math.sqrt(lo * hi)
        return ParamVector(names=names,
                           values=np.full(m + 1, center),
                           lower=np.full(m + 1, lo),
                           upper=np.full(m + 1, hi),
                           scales=("log",) * (m + 1))

    def to_json(self) -> str:
        return self.circuit.to_json(encoding=self.encoding)

    @classmethod
    def from_json(cls, s: str):
        circuit, encoding = Circuit.from_json(s)
        return cls(circuit=circuit, encoding=encoding or "variable")


def encode(x, params: ParamVector, gate: GateOp):
    """Angle(s) for one encoded gate; ``x`` is a D-vector or (B, D) batch.

    R_Y / R_Z on qubit i -> x_i / theta_i; R_ZZ on (i, j) ->
    exp(-(x_i - x_j)^2 / Theta).
    """
    x = np.asarray(x, dtype=float)
    v = params.values
    if gate.kind in ("RY", "RZ"):
        i = gate.qubits[0]
        if i >= v.size - 1:
            raise ValueError(f"no encoding scale for qubit {i}")
        return x[..., i] / v[i]
    if gate.kind == "RZZ":
        i, j = gate.qubits
        return np.exp(-((x[..., i] - x[..., j]) ** 2) / v[-1])
    raise ValueError(f"gate kind {gate.kind} carries no encoded angle")


def _gate_angle(gate, params, x):
    if gate.kind in ("H", "ID"):
        return None
    if gate.angle is not None:
        return np.asarray(gate.angle, dtype=float)
    return np.asarray(encode(x, params, gate), dtype=float)


def statevectors(spec: QuantumKernelSpec, params: ParamVector, X) -> np.ndarray:
    """Encoded states U(x)|0...0> for each input row; shape (B, 2^m)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.m:
        raise ValueError(
            f"input dimension {X.shape[1]} != qubit count m={spec.m}")
    psi = zero_state(spec.m, batch=X.shape[0])
    for layer in spec.circuit.layers:
        for gate in layer:
            apply_gate(psi, gate, _gate_angle(gate, params, X))
    return psi


def statevector_for(spec: QuantumKernelSpec, params: ParamVector, x) -> np.ndarray:
    """Encoded state for a single input vector."""
    return statevectors(spec, params, np.atleast_2d(x))[0]


def fidelity_kernel(spec: QuantumKernelSpec, params: ParamVector, x, xp) -> float:
    """|<psi(x')|psi(x)>|^2 from the two statevectors."""
    a = statevector_for(spec, params, x)
    b = statevector_for(spec, params, xp)
    return float(np.abs(np.vdot(b, a)) ** 2)


def fidelity_via_adjoint(spec: QuantumKernelSpec, params: ParamVector, x, xp) -> float:
    """Literal path: apply U(x), then the adjoint circuit of U(x'), read |<0|.>|^2."""
    psi = zero_state(spec.m, batch=1)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Xp = np.atleast_2d(np.asarray(xp, dtype=float))
    for layer in spec.circuit.layers:
        for gate in layer:
            apply_gate(psi, gate, _gate_angle(gate, params, X))
    for layer in reversed(spec.circuit.layers):
        for gate in reversed(layer):
            ang = _gate_angle(gate, params, Xp)
            apply_gate(psi, gate, None if ang is None else -ang)
    return float(np.abs(psi[0, 0]) ** 2)


@dataclass(frozen=True)
class QuantumKernel(KernelFn):
    """KernelFn view of a fidelity kernel; Gram via cached statevectors."""

    spec: QuantumKernelSpec

    def default_params(self) -> ParamVector:
        return self.spec.default_params()

    def eval(self, x, xp, params: ParamVector) -> float:
        return fidelity_kernel(self.spec, params, x, xp)

    def gram(self, X, X2, params: ParamVector) -> np.ndarray:
        V1 = statevectors(self.spec, params, X)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        X2a = np.atleast_2d(np.asarray(X2, dtype=float))
        if X2a.shape == X.shape and np.array_equal(X2a, X):
            V2 = V1
        else:
            V2 = statevectors(self.spec, params, X2a)
        return np.abs(V1 @ V2.conj().T) ** 2


def _pair_layers(pairs):
    """Greedy split of a pair list into layers with one gate per qubit."""
    layers = []
    for pair in pairs:
        for layer in layers:
            used = {q for g in layer for q in g.qubits}
            if pair[0] not in used and pair[1] not in used:
                layer.append(GateOp("RZZ", pair))
                break
        else:
            layers.append([GateOp("RZZ", pair)])
    return [tuple(layer) for layer in layers]


def build_fixed_ansatz(m) -> QuantumKernelSpec:
    """Fixed all-pairs ansatz U H^m U H^m with U = R_Z per qubit + R_ZZ per pair.

    The all-pairs R_ZZ block is split into commuting matching layers to
    respect the one-gate-per-qubit layer constraint.
    """
    if m < 2:
        raise ValueError("fixed ansatz needs m >= 2")
    h_layer = tuple(GateOp("H", (q,)) for q in range(m))
    rz_layer = tuple(GateOp("RZ", (q,)) for q in range(m))
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    u_block = [rz_layer] + _pair_layers(pairs)
    layers = [h_layer] + u_block + [h_layer] + u_block
    return QuantumKernelSpec(circuit=Circuit(m=m, layers=tuple(layers)),
                             encoding="fixed")


def build_variable_ansatz(m, rzz_layers) -> QuantumKernelSpec:
    """Variable ansatz R_Y^m U_e H^m; U_e given as a sequence of R_ZZ matchings."""
    h_layer = tuple(GateOp("H", (q,)) for q in range(m))
    ry_layer = tuple(GateOp("RY", (q,)) for q in range(m))
    layers = [h_layer]
    for matching in rzz_layers:
        pairs = [tuple(sorted(p)) for p in matching]
        layers.append(tuple(GateOp("RZZ", tuple(p)) for p in pairs))
    layers.append(ry_layer)
    return QuantumKernelSpec(circuit=Circuit(m=m, layers=tuple(layers)),
                             encoding="variable")
