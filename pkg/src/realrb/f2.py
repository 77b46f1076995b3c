"""Binary phase-space linear algebra for n qubits.

Phase-space points live in F_2^{2n} and are written as a pair of n-bit
masks (p, q).  The fixed coordinate layout used everywhere in this package
is x = (p_1, ..., p_n, q_1, ..., q_n): component i < n of a length-2n
vector is p_{i+1}, component n+i is q_{i+1}.  Matrices act on column
vectors in this layout, and the Gram matrix of the bilinear form is the
block matrix [[0, I], [I, 0]].

Matrices are stored with one packed integer per row (bit j of row i is the
entry in column j), which keeps products, transposes and elimination
bit-parallel for n up to machine-word scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Iteration guard for the rejection loops in `sample_orthogonal_plus`.  The
# expected number of draws is at most 4 per basis vector, so hitting the cap
# indicates a bug rather than bad luck.
_REJECTION_CAP = 10_000

# Brute-force group enumeration is a test oracle, not a production path.
_ENUMERATION_MAX_N = 2


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _random_bits(rng: np.random.Generator, k: int) -> int:
    """Draw k uniformly random bits from ``rng`` as an integer."""
    nbytes = (k + 7) // 8
    raw = int.from_bytes(rng.integers(0, 256, size=nbytes, dtype=np.uint8).tobytes(), "little")
    return raw & ((1 << k) - 1)


@dataclass(frozen=True)
class PhaseVector:
    """A point (p, q) of binary phase space on n qubits."""

    n: int
    p: int
    q: int

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.n < 1:
            raise ValueError("need n >= 1")
        if self.p & ~mask or self.q & ~mask:
            raise ValueError("p/q bits outside the first n positions")

    def __add__(self, other: "PhaseVector") -> "PhaseVector":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return PhaseVector(self.n, self.p ^ other.p, self.q ^ other.q)

    def __bool__(self) -> bool:
        return bool(self.p | self.q)

    @property
    def word(self) -> int:
        """The packed length-2n coordinate vector (p in the low bits)."""
        return self.p | (self.q << self.n)

    @classmethod
    def from_word(cls, n: int, word: int) -> "PhaseVector":
        mask = (1 << n) - 1
        return cls(n, word & mask, (word >> n) & mask)

    def to_bits(self) -> list[int]:
        return [(self.word >> i) & 1 for i in range(2 * self.n)]


def quadratic_form(x: PhaseVector) -> int:
    """Q((p, q)) = p . q mod 2."""
    return _parity(x.p & x.q)


def symplectic_form(x: PhaseVector, y: PhaseVector) -> int:
    """[x, y] = p . q' + p' . q mod 2.

    Polarization identity: Q(x + y) + Q(x) + Q(y) = [x, y].
    """
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    return _parity((x.p & y.q) ^ (y.p & x.q))


@dataclass(frozen=True)
class BitMatrix:
    """A square bit matrix of size 2n x 2n with rows packed as integers."""

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        dim = 2 * self.n
        if len(self.rows) != dim:
            raise ValueError("expected 2n rows")
        mask = (1 << dim) - 1
        if any(r & ~mask for r in self.rows):
            raise ValueError("row bits outside the first 2n positions")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, tuple(1 << i for i in range(2 * n)))

    @classmethod
    def from_columns(cls, columns: list[PhaseVector]) -> "BitMatrix":
        n = columns[0].n
        if len(columns) != 2 * n or any(c.n != n for c in columns):
            raise ValueError("need 2n columns of matching n")
        rows = []
        for i in range(2 * n):
            row = 0
            for j, c in enumerate(columns):
                row |= ((c.word >> i) & 1) << j
            rows.append(row)
        return cls(n, tuple(rows))

    def column(self, j: int) -> PhaseVector:
        word = 0
        for i in range(self.dim):
            word |= ((self.rows[i] >> j) & 1) << i
        return PhaseVector.from_word(self.n, word)

    def columns(self) -> list[PhaseVector]:
        return [self.column(j) for j in range(self.dim)]

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        rows = []
        for r in self.rows:
            acc = 0
            m = r
            while m:
                j = (m & -m).bit_length() - 1
                acc ^= other.rows[j]
                m &= m - 1
            rows.append(acc)
        return BitMatrix(self.n, tuple(rows))

    def transpose(self) -> "BitMatrix":
        rows = [0] * self.dim
        for i, r in enumerate(self.rows):
            m = r
            while m:
                j = (m & -m).bit_length() - 1
                rows[j] |= 1 << i
                m &= m - 1
        return BitMatrix(self.n, tuple(rows))

    def apply(self, x: PhaseVector) -> PhaseVector:
        """Matrix-vector product over F_2."""
        if x.n != self.n:
            raise ValueError("dimension mismatch")
        w = x.word
        out = 0
        for i, r in enumerate(self.rows):
            out |= _parity(r & w) << i
        return PhaseVector.from_word(self.n, out)

    def to_array(self) -> np.ndarray:
        dim = self.dim
        out = np.zeros((dim, dim), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(dim):
                out[i, j] = (r >> j) & 1
        return out

    @classmethod
    def from_array(cls, a: np.ndarray) -> "BitMatrix":
        a = np.asarray(a) % 2
        dim = a.shape[0]
        if a.shape != (dim, dim) or dim % 2:
            raise ValueError("need a square matrix of even dimension")
        rows = tuple(int(sum(int(a[i, j]) << j for j in range(dim))) for i in range(dim))
        return cls(dim // 2, rows)


def is_in_orthogonal_plus(s: BitMatrix) -> bool:
    """Whether the columns of ``s`` form a hyperbolic basis.

    Equivalent to: s preserves the bilinear form (s^T J s = J) and every
    column is singular (Q = 0).
    """
    cols = s.columns()
    n = s.n
    for j, c in enumerate(cols):
        if quadratic_form(c):
            return False
        for k in range(j, 2 * n):
            expected = 1 if abs(j - k) == n else 0
            if symplectic_form(c, cols[k]) != expected:
                return False
    return True


def _nullspace(rows: list[int], ncols: int) -> list[int]:
    """Basis of the right nullspace of a packed bit matrix."""
    rows = [r for r in rows]
    pivot_cols = []
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if (rows[i] >> col) & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i] >> col) & 1:
                rows[i] ^= rows[rank]
        pivot_cols.append(col)
        rank += 1
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for free in free_cols:
        v = 1 << free
        for r, pc in zip(rows[:rank], pivot_cols):
            if (r >> free) & 1:
                v |= 1 << pc
        basis.append(v)
    return basis


def orthogonal_complement(
    vectors: list[PhaseVector], ambient_basis: list[PhaseVector] | None = None
) -> list[PhaseVector]:
    """Basis of the subspace of span(ambient_basis) symplectically orthogonal
    to all of ``vectors``.

    The ambient basis defaults to the standard basis of F_2^{2n}.  Solved by
    GF(2) elimination on the constraint matrix [a_k, b_j].
    """
    n = vectors[0].n
    if ambient_basis is None:
        ambient_basis = [PhaseVector.from_word(n, 1 << i) for i in range(2 * n)]
    k = len(ambient_basis)
    constraint_rows = []
    for b in vectors:
        row = 0
        for j, a in enumerate(ambient_basis):
            row |= symplectic_form(a, b) << j
        constraint_rows.append(row)
    out = []
    for coeff in _nullspace(constraint_rows, k):
        v = PhaseVector(n, 0, 0)
        for j in range(k):
            if (coeff >> j) & 1:
                v = v + ambient_basis[j]
        out.append(v)
    return out


def sample_orthogonal_plus(n: int, rng: np.random.Generator) -> BitMatrix:
    """Draw a uniformly random element of O+(2n, 2).

    Builds a uniformly random hyperbolic basis pair by pair: draw random
    combinations x of the current ambient basis until x is nonzero and
    singular; draw y until [x, y] = 1 and repair y to a singular partner if
    needed; then recurse on the symplectic complement of the pair.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    basis = [PhaseVector.from_word(n, 1 << i) for i in range(2 * n)]
    pairs: list[PhaseVector] = []
    for _ in range(n):
        e = None
        for _ in range(_REJECTION_CAP):
            x = _combine(basis, _random_bits(rng, len(basis)))
            if x and not quadratic_form(x):
                e = x
                break
        if e is None:
            raise RuntimeError("rejection cap hit while drawing a singular vector")
        f = None
        for _ in range(_REJECTION_CAP):
            y = _combine(basis, _random_bits(rng, len(basis)))
            if symplectic_form(e, y):
                f = y if not quadratic_form(y) else e + y
                break
        if f is None:
            raise RuntimeError("rejection cap hit while drawing a hyperbolic partner")
        pairs.extend((e, f))
        basis = orthogonal_complement(pairs, None)
    # Layout: e_i goes to column i, f_i to column n + i.
    columns = [pairs[2 * i] for i in range(n)] + [pairs[2 * i + 1] for i in range(n)]
    return BitMatrix.from_columns(columns)


def _combine(basis: list[PhaseVector], mask: int) -> PhaseVector:
    v = PhaseVector(basis[0].n, 0, 0)
    for j, b in enumerate(basis):
        if (mask >> j) & 1:
            v = v + b
    return v


def invert_symplectic(s: BitMatrix) -> BitMatrix:
    """Inverse of a form-preserving matrix: s^{-1} = J s^T J.

    Raises ValueError if the product with the claimed inverse is not the
    identity (which cannot happen for genuine O+ members).
    """
    n = s.n
    t = s.transpose()
    # J M swaps the top and bottom row blocks; M J swaps the bit halves of
    # every row.
    swapped_rows = t.rows[n:] + t.rows[:n]
    mask = (1 << n) - 1
    rows = tuple(((r >> n) & mask) | ((r & mask) << n) for r in swapped_rows)
    inv = BitMatrix(n, rows)
    if (s @ inv).rows != BitMatrix.identity(n).rows:
        raise ValueError("matrix is not symplectic; no inverse of the form J S^T J")
    return inv


def enumerate_orthogonal_plus(n: int) -> list[BitMatrix]:
    """All elements of O+(2n, 2) by brute force over every bit matrix.

    Exposed only for n <= 2 (at most 2^16 candidates); this is a test
    oracle, not a production path.
    """
    if n > _ENUMERATION_MAX_N:
        raise ValueError(f"enumeration supported only for n <= {_ENUMERATION_MAX_N}")
    dim = 2 * n
    nbits = dim * dim
    idx = np.arange(1 << nbits, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(nbits)) & 1).astype(np.int8)
    cand = bits.reshape(-1, dim, dim)  # entry (r, c) is bit r*dim + c
    j = np.zeros((dim, dim), dtype=np.int8)
    j[:n, n:] = np.eye(n, dtype=np.int8)
    j[n:, :n] = np.eye(n, dtype=np.int8)
    gram = np.einsum("nji,jk,nkl->nil", cand, j, cand) % 2
    symplectic = np.all(gram == j, axis=(1, 2))
    qcols = np.zeros(cand.shape[::2], dtype=np.int8)
    for i in range(n):
        qcols ^= cand[:, i, :] & cand[:, n + i, :]
    singular = np.all(qcols == 0, axis=1)
    keep = np.flatnonzero(symplectic & singular)
    return [BitMatrix.from_array(cand[i]) for i in keep]
