"""Real Pauli and real Clifford group elements.

The groups are represented three ways at once and kept consistent:

* a binary orthogonal matrix acting on phase space (the coset label),
* a gate sequence over the primitive set {Z_i, X_i, H_i, CZ_ij, CNOT_ij},
* the dense 2^n x 2^n real orthogonal matrix.

Group elements are fixed representatives modulo global sign: conjugation
(and hence every survival probability) is blind to an overall factor of -1.
Qubit i occupies bit position n-1-i of a computational basis index, i.e.
qubit 0 is the leftmost tensor factor.

Conjugating the phased Pauli operator built by `hermitian_pauli` with an
element whose phase-space matrix is S maps the label x to S x and changes
at most the sign; the i^Q phase is invariant because S preserves Q.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from realrb.f2 import (
    BitMatrix,
    PhaseVector,
    _random_bits,
    invert_symplectic,
    is_in_orthogonal_plus,
    quadratic_form,
    sample_orthogonal_plus,
)

# Dense matrices get impractical long before phase-space algebra does.
DEFAULT_DENSE_QUBIT_CAP = 10

_ORTHOGONALITY_ATOL = 1e-10
_PAULI_MATCH_ATOL = 1e-9


@dataclass(frozen=True)
class Gate:
    """A primitive gate: 'Z', 'X', 'H' on one qubit; 'CZ', 'CNOT' on two."""

    name: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        arity = {"Z": 1, "X": 1, "H": 1, "CZ": 2, "CNOT": 2}
        if self.name not in arity:
            raise ValueError(f"unknown gate {self.name!r}")
        if len(self.qubits) != arity[self.name]:
            raise ValueError(f"{self.name} takes {arity[self.name]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")


GateSequence = tuple[Gate, ...]


def _qubit_bit(i: int, n: int) -> int:
    return n - 1 - i


def _qubit_mask_to_index(mask: int, n: int) -> int:
    """Map a per-qubit mask (bit i = qubit i) to a basis-index mask."""
    out = 0
    for i in range(n):
        if (mask >> i) & 1:
            out |= 1 << _qubit_bit(i, n)
    return out


def _index_to_qubit_mask(idx: int, n: int) -> int:
    out = 0
    for i in range(n):
        if (idx >> _qubit_bit(i, n)) & 1:
            out |= 1 << i
    return out


@functools.lru_cache(maxsize=None)
def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense real orthogonal matrix of a primitive gate on n qubits."""
    d = 1 << n
    z = np.arange(d)
    if gate.name == "H":
        (i,) = gate.qubits
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        m = np.eye(1)
        for k in range(n):
            m = np.kron(m, h if k == i else np.eye(2))
    elif gate.name == "Z":
        (i,) = gate.qubits
        signs = 1.0 - 2.0 * ((z >> _qubit_bit(i, n)) & 1)
        m = np.diag(signs)
    elif gate.name == "X":
        (i,) = gate.qubits
        m = np.zeros((d, d))
        m[z ^ (1 << _qubit_bit(i, n)), z] = 1.0
    elif gate.name == "CZ":
        i, j = gate.qubits
        signs = 1.0 - 2.0 * (((z >> _qubit_bit(i, n)) & 1) * ((z >> _qubit_bit(j, n)) & 1))
        m = np.diag(signs)
    else:  # CNOT
        c, t = gate.qubits
        flip = ((z >> _qubit_bit(c, n)) & 1) << _qubit_bit(t, n)
        m = np.zeros((d, d))
        m[z ^ flip, z] = 1.0
    m.setflags(write=False)
    return m


@functools.lru_cache(maxsize=None)
def gate_symplectic(gate: Gate, n: int) -> BitMatrix:
    """Phase-space action of a primitive gate (identity for Paulis)."""
    rows = list(BitMatrix.identity(n).rows)
    if gate.name == "H":
        (i,) = gate.qubits
        rows[i], rows[n + i] = rows[n + i], rows[i]
    elif gate.name == "CZ":
        i, j = gate.qubits
        rows[i] |= 1 << (n + j)
        rows[j] |= 1 << (n + i)
    elif gate.name == "CNOT":
        c, t = gate.qubits
        rows[c] |= 1 << t
        rows[n + t] |= 1 << (n + c)
    return BitMatrix(n, tuple(rows))


def circuit_matrix(circuit: GateSequence, n: int) -> np.ndarray:
    """Dense product of a gate sequence, first gate leftmost."""
    m = np.eye(1 << n)
    for g in circuit:
        m = m @ gate_matrix(g, n)
    return m


def circuit_symplectic(circuit: GateSequence, n: int) -> BitMatrix:
    s = BitMatrix.identity(n)
    for g in circuit:
        s = s @ gate_symplectic(g, n)
    return s


def real_pauli_matrix(p: int, q: int, n: int) -> np.ndarray:
    """The signed permutation matrix of the tensor product of X^{q_i} Z^{p_i}."""
    d = 1 << n
    q_idx = _qubit_mask_to_index(q, n)
    p_idx = _qubit_mask_to_index(p, n)
    z = np.arange(d)
    signs = 1.0 - 2.0 * (np.bitwise_count(p_idx & z) & 1).astype(float)
    m = np.zeros((d, d))
    m[z ^ q_idx, z] = signs
    return m


def hermitian_pauli(x: PhaseVector) -> np.ndarray:
    """The phased Pauli operator i^{Q(x)} tensor_i X^{q_i} Z^{p_i}."""
    return (1j ** quadratic_form(x)) * real_pauli_matrix(x.p, x.q, x.n).astype(complex)


@dataclass(frozen=True)
class PauliLabel:
    """A real Pauli group element sign * X^q Z^p."""

    x: PhaseVector
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def matrix(self) -> np.ndarray:
        return self.sign * real_pauli_matrix(self.x.p, self.x.q, self.x.n)

    def circuit(self) -> GateSequence:
        gates = [Gate("X", (i,)) for i in range(self.x.n) if (self.x.q >> i) & 1]
        gates += [Gate("Z", (i,)) for i in range(self.x.n) if (self.x.p >> i) & 1]
        return tuple(gates)


def pauli_label_from_matrix(m: np.ndarray, atol: float = _PAULI_MATCH_ATOL) -> PauliLabel:
    """Recover (sign, p, q) from a dense real Pauli matrix.

    Raises ValueError if the matrix is not a signed X^q Z^p pattern to
    within ``atol``.
    """
    d = m.shape[0]
    n = d.bit_length() - 1
    if m.shape != (d, d) or (1 << n) != d:
        raise ValueError("expected a square matrix of dimension 2^n")
    r = int(np.argmax(np.abs(m[:, 0])))
    s0 = float(m[r, 0])
    if abs(abs(s0) - 1.0) > atol:
        raise ValueError("matrix is not a real Pauli")
    sign = 1 if s0 > 0 else -1
    q_idx = r
    p_idx = 0
    for i in range(n):
        z = 1 << _qubit_bit(i, n)
        entry = float(m[z ^ q_idx, z])
        if abs(entry - s0) <= atol:
            continue
        if abs(entry + s0) <= atol:
            p_idx |= z
        else:
            raise ValueError("matrix is not a real Pauli")
    label = PauliLabel(
        PhaseVector(n, _index_to_qubit_mask(p_idx, n), _index_to_qubit_mask(q_idx, n)), sign
    )
    if np.max(np.abs(m - label.matrix())) > atol:
        raise ValueError("matrix is not a real Pauli")
    return label


# ---------------------------------------------------------------------------
# synthesis: phase-space matrix -> gate sequence
# ---------------------------------------------------------------------------


def synthesize_clifford(s: BitMatrix) -> GateSequence:
    """Gate sequence whose phase-space action equals ``s``.

    GF(2) elimination: left-multiply ``s`` by generator actions until it is
    the identity, standardizing the hyperbolic pairs in column order with
    ties broken by lowest qubit index.  Since every primitive is an
    involution, the collected gates read in order give a circuit whose
    action is exactly ``s``.
    """
    if not is_in_orthogonal_plus(s):
        raise ValueError("input is not a binary orthogonal matrix of plus type")
    n = s.n
    t = s
    gates: list[Gate] = []

    def apply(name: str, *qubits: int):
        nonlocal t
        g = Gate(name, qubits)
        gates.append(g)
        t = gate_symplectic(g, n) @ t

    def low_bits(mask: int):
        while mask:
            k = (mask & -mask).bit_length() - 1
            yield k
            mask &= mask - 1

    for i in range(n):
        col = t.column(i)
        if col.p == 0:
            apply("H", next(low_bits(col.q)))
            col = t.column(i)
        if not (col.p >> i) & 1:
            apply("CNOT", i, next(low_bits(col.p)))
            col = t.column(i)
        for k in low_bits(col.p & ~(1 << i)):
            apply("CNOT", k, i)
        col = t.column(i)
        # p is now the unit vector on qubit i; singularity forces q_i = 0.
        for k in low_bits(col.q):
            apply("H", k)
            apply("CNOT", k, i)
        col = t.column(n + i)
        for k in low_bits(col.p & ~(1 << i)):
            apply("CZ", i, k)
        col = t.column(n + i)
        # the pairing [e_i, f_i] = 1 guarantees q_i = 1 here
        for k in low_bits(col.q & ~(1 << i)):
            apply("CNOT", i, k)
    if t.rows != BitMatrix.identity(n).rows:
        raise AssertionError("elimination did not terminate at the identity")
    return tuple(gates)


@functools.lru_cache(maxsize=8192)
def _canonical_circuit(s: BitMatrix) -> GateSequence:
    return synthesize_clifford(s)


@functools.lru_cache(maxsize=8192)
def _canonical_matrix(s: BitMatrix) -> np.ndarray:
    m = circuit_matrix(_canonical_circuit(s), s.n)
    m.setflags(write=False)
    return m


# ---------------------------------------------------------------------------
# group elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RealCliffordElement:
    """A real Clifford group element (fixed representative modulo sign).

    Invariants: ``dense`` is real orthogonal, equals
    ``pauli.sign * (product of circuit gates)``, and conjugation by it maps
    Pauli label x to ``symplectic`` x up to sign.
    """

    n: int
    symplectic: BitMatrix
    pauli: PauliLabel
    circuit: GateSequence
    dense: np.ndarray

    def __post_init__(self):
        d = 1 << self.n
        err = np.linalg.norm(self.dense @ self.dense.T - np.eye(d))
        if err > _ORTHOGONALITY_ATOL:
            raise ValueError(f"dense part is not orthogonal (defect {err:.2e})")
        self.dense.setflags(write=False)

    @property
    def dim(self) -> int:
        return 1 << self.n


def _assemble(s: BitMatrix, label: PauliLabel) -> RealCliffordElement:
    circuit = label.circuit() + _canonical_circuit(s)
    dense = label.matrix() @ _canonical_matrix(s)
    return RealCliffordElement(s.n, s, label, circuit, dense)


def identity_element(n: int) -> RealCliffordElement:
    return _assemble(BitMatrix.identity(n), PauliLabel(PhaseVector(n, 0, 0)))


def sample_real_clifford(
    n: int, rng: np.random.Generator, max_qubits: int = DEFAULT_DENSE_QUBIT_CAP
) -> RealCliffordElement:
    """Uniformly random real Clifford element modulo global sign.

    Composition of a uniform phase-space sample, its synthesized circuit,
    and a uniformly random Pauli.
    """
    if n > max_qubits:
        raise ValueError(f"n={n} exceeds the dense cap of {max_qubits} qubits")
    s = sample_orthogonal_plus(n, rng)
    label = PauliLabel(PhaseVector.from_word(n, _random_bits(rng, 2 * n)))
    return _assemble(s, label)


def _element_from_parts(dense: np.ndarray, s: BitMatrix) -> RealCliffordElement:
    """Rebuild the canonical (pauli, circuit) split of a known group element."""
    residue = dense @ _canonical_matrix(s).T
    label = pauli_label_from_matrix(residue)
    circuit = label.circuit() + _canonical_circuit(s)
    dense_clean = label.sign * circuit_matrix(circuit, s.n)
    return RealCliffordElement(s.n, s, label, circuit, dense_clean)


def compose(a: RealCliffordElement, b: RealCliffordElement) -> RealCliffordElement:
    """The element acting as a after b (dense parts multiply as a.dense @ b.dense)."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    return _element_from_parts(a.dense @ b.dense, a.symplectic @ b.symplectic)


def inverse(a: RealCliffordElement) -> RealCliffordElement:
    """Group inverse; the dense part is just the transpose."""
    return _element_from_parts(a.dense.T.copy(), invert_symplectic(a.symplectic))


def real_clifford_generators(n: int) -> list[np.ndarray]:
    """Dense generators of the n-qubit real Clifford group: Z_i, H_i, CZ_ij."""
    gates = [Gate("Z", (i,)) for i in range(n)] + [Gate("H", (i,)) for i in range(n)]
    gates += [Gate("CZ", (i, j)) for i in range(n) for j in range(i + 1, n)]
    return [np.asarray(gate_matrix(g, n)) for g in gates]


def enumerate_closure(generators: list[np.ndarray], cap: int = 512, atol: float = 1e-9) -> list[np.ndarray]:
    """Multiplicative closure of a set of matrices, up to ``atol`` equality.

    Test oracle for small groups; raises ValueError once ``cap`` distinct
    elements are exceeded.
    """
    d = generators[0].shape[0]
    elems: list[np.ndarray] = [np.eye(d, dtype=complex) if np.iscomplexobj(generators[0]) else np.eye(d)]
    queue = [elems[0]]
    while queue:
        cur = queue.pop()
        for g in generators:
            new = cur @ g
            if any(np.allclose(new, e, rtol=0.0, atol=atol) for e in elems):
                continue
            if len(elems) >= cap:
                raise ValueError(f"closure exceeds cap of {cap} elements")
            elems.append(new)
            queue.append(new)
    return elems
