"""Quantum states, channels, and the orthogonal-group twirl.

Conventions fixed once for the whole package:

* vectorization is column-stacking, vec(A)[j*d + i] = A[i, j], so that
  vec(A X B) = (B^T kron A) vec(X) and a Kraus set {K_i} has superoperator
  sum_i conj(K_i) kron K_i;
* the Choi state of a channel T is (id kron T) applied to the maximally
  entangled state with the 1/d normalization inside, so a CPTP channel has
  a positive semidefinite, unit-trace Choi state whose partial trace over
  the output factor is I/d.

Twirling a channel over the orthogonal group projects its Choi state onto
the span of three orthogonal projectors (identity-like, antisymmetric, and
traceless-symmetric sectors); the resulting channel is a three-parameter
mixture of the identity, the completely depolarizing channel, and the
Werner-Holevo channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_HERMITICITY_ATOL = 1e-10
_TRACE_ATOL = 1e-10
_PSD_EIG_FLOOR = -1e-10
_CPTP_ATOL = 1e-9
_PROJECTOR_ATOL = 1e-12


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def check_density_matrix(rho: np.ndarray, atol: float = _HERMITICITY_ATOL) -> None:
    """Raise ValueError unless rho is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > _TRACE_ATOL:
        raise ValueError("state does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < _PSD_EIG_FLOOR:
        raise ValueError("state has a negative eigenvalue")


class Channel:
    """A linear map on d x d matrices in canonical superoperator form."""

    def __init__(self, superop: np.ndarray, kraus: list[np.ndarray] | None = None):
        superop = np.asarray(superop, dtype=complex)
        dsq = superop.shape[0]
        d = int(round(np.sqrt(dsq)))
        if superop.shape != (dsq, dsq) or d * d != dsq:
            raise ValueError("superoperator must be d^2 x d^2")
        self.superop = superop
        self.dim = d
        self._kraus = None if kraus is None else [np.asarray(k, dtype=complex) for k in kraus]

    # -- constructors --------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus: list[np.ndarray]) -> "Channel":
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        m = sum(np.kron(k.conj(), k) for k in kraus)
        return cls(m, kraus=kraus)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "Channel":
        return cls.from_kraus([u])

    @classmethod
    def identity(cls, d: int) -> "Channel":
        return cls.from_kraus([np.eye(d)])

    @classmethod
    def from_choi(cls, tau: np.ndarray) -> "Channel":
        d = int(round(np.sqrt(tau.shape[0])))
        t4 = np.asarray(tau, dtype=complex).reshape(d, d, d, d)
        return cls(d * t4.transpose(3, 1, 2, 0).reshape(d * d, d * d))

    # -- actions ---------------------------------------------------------

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.superop @ vec(rho))

    def apply_adjoint(self, effect: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action on an effect operator."""
        return unvec(self.superop.conj().T @ vec(effect))

    def __matmul__(self, other: "Channel") -> "Channel":
        """Composition: (self @ other) means apply ``other`` first."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        kraus = None
        if self._kraus is not None and other._kraus is not None:
            kraus = [a @ b for a in self._kraus for b in other._kraus]
        return Channel(self.superop @ other.superop, kraus=kraus)

    def tensor(self, other: "Channel") -> "Channel":
        return Channel.from_kraus(
            [np.kron(a, b) for a in self.kraus_operators() for b in other.kraus_operators()]
        )

    # -- representations -------------------------------------------------

    def choi(self) -> np.ndarray:
        d = self.dim
        m4 = self.superop.reshape(d, d, d, d)
        return m4.transpose(3, 1, 2, 0).reshape(d * d, d * d) / d

    def kraus_operators(self, atol: float = 1e-12) -> list[np.ndarray]:
        """Stored Kraus set, or one recovered from the Choi eigensystem."""
        if self._kraus is not None:
            return self._kraus
        d = self.dim
        w, v = np.linalg.eigh(self.choi())
        if w.min() < _PSD_EIG_FLOOR:
            raise ValueError("channel is not completely positive; no Kraus form")
        kraus = [np.sqrt(d * lam) * unvec(v[:, k]) for k, lam in enumerate(w) if lam > atol]
        self._kraus = kraus
        return kraus

    # -- checks ------------------------------------------------------------

    def is_cptp(self, atol: float = _CPTP_ATOL) -> bool:
        tau = self.choi()
        if np.max(np.abs(tau - tau.conj().T)) > atol:
            return False
        if np.linalg.eigvalsh(tau).min() < -atol:
            return False
        d = self.dim
        reduced = np.einsum("abcb->ac", tau.reshape(d, d, d, d))
        return bool(np.max(np.abs(reduced - np.eye(d) / d)) <= atol)


# ---------------------------------------------------------------------------
# commutant projectors and the analytic twirl
# ---------------------------------------------------------------------------


def flip_operator(d: int) -> np.ndarray:
    """The swap on C^d kron C^d (also the superoperator of transposition)."""
    return np.eye(d * d).reshape(d, d, d, d).transpose(0, 1, 3, 2).reshape(d * d, d * d)


def max_entangled_projector(d: int) -> np.ndarray:
    omega = vec(np.eye(d)) / np.sqrt(d)
    return np.outer(omega, omega)


def projectors(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three minimal projectors spanning the two-copy commutant.

    P0 projects onto the maximally entangled state, P1 onto the
    antisymmetric sector, P2 onto the traceless symmetric sector; they are
    mutually orthogonal and sum to the identity.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    f = flip_operator(d)
    p0 = max_entangled_projector(d)
    p1 = (np.eye(d * d) - f) / 2.0
    p2 = (np.eye(d * d) + f) / 2.0 - p0
    return p0, p1, p2


@dataclass(frozen=True)
class TwirlCoefficients:
    """Coordinates of a twirled channel.

    (alpha, beta, gamma) weight the identity, completely depolarizing and
    Werner-Holevo channels; (a, b, c) are the equivalent decay coordinates
    with a = alpha + beta + gamma (equal to 1 for trace-preserving input),
    b = alpha - gamma/(d-1) and c = alpha + gamma/(d-1).
    """

    d: int
    alpha: float
    beta: float
    gamma: float

    @property
    def a(self) -> float:
        return self.alpha + self.beta + self.gamma

    @property
    def b(self) -> float:
        return self.alpha - self.gamma / (self.d - 1)

    @property
    def c(self) -> float:
        return self.alpha + self.gamma / (self.d - 1)


def twirl_analytic(channel: Channel, atol: float = 1e-9) -> TwirlCoefficients:
    """Project a channel onto the orthogonal-twirl commutant.

    Works for any linear map whose commutant components are real (all
    Hermiticity-preserving maps qualify); coefficients are read off the
    Choi state as tr(tau P_m) / tr(P_m).
    """
    d = channel.dim
    tau = channel.choi()
    comps = []
    for pm in projectors(d):
        val = np.trace(tau @ pm) / np.trace(pm).real
        if abs(val.imag) > atol:
            raise ValueError("twirl coefficients are not real for this map")
        comps.append(val.real)
    c0, c1, c2 = comps
    d1 = d * (d - 1) // 2
    return TwirlCoefficients(
        d=d, alpha=c0 - c2, beta=d * d * c2, gamma=d1 * (c1 - c2)
    )


def twirled_channel_from_coefficients(coeffs: TwirlCoefficients) -> Channel:
    """The twirled channel itself, as a superoperator."""
    d = coeffs.d
    ket_i = vec(np.eye(d))
    dep = np.outer(ket_i, ket_i) / d
    werner_holevo = (np.outer(ket_i, ket_i) - flip_operator(d)) / (d - 1)
    m = coeffs.alpha * np.eye(d * d) + coeffs.beta * dep + coeffs.gamma * werner_holevo
    return Channel(m)


def twirl_average(channel: Channel, elements) -> Channel:
    """Empirical twirl: average of O^T T(O . O^T) O over the given elements.

    ``elements`` may be real orthogonal matrices or objects with a
    ``dense`` attribute (sampled group elements).
    """
    d = channel.dim
    acc = np.zeros((d * d, d * d), dtype=complex)
    count = 0
    for el in elements:
        o = getattr(el, "dense", el)
        w = np.kron(o, o)
        acc += w.T @ channel.superop @ w
        count += 1
    if count == 0:
        raise ValueError("need at least one element")
    return Channel(acc / count)


def twirled_power_apply(coeffs: TwirlCoefficients, m: int, rho: np.ndarray) -> np.ndarray:
    """Apply the m-fold concatenation of a twirled channel to rho.

    Powers act independently on the three sectors:
    a^m tr[rho] I/d + b^m (sym(rho) - tr[rho] I/d) + c^m antisym(rho).
    """
    if m < 0:
        raise ValueError("need m >= 0")
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    tr = np.trace(rho)
    ident = tr * np.eye(d) / d
    sym = (rho + rho.T) / 2.0
    anti = (rho - rho.T) / 2.0
    return coeffs.a**m * ident + coeffs.b**m * (sym - ident) + coeffs.c**m * anti


# ---------------------------------------------------------------------------
# noise models
# ---------------------------------------------------------------------------

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(axis: str) -> np.ndarray:
    m = np.eye(1, dtype=complex)
    for ch in axis.upper():
        if ch not in _PAULI_1Q:
            raise ValueError(f"invalid Pauli axis character {ch!r}")
        m = np.kron(m, _PAULI_1Q[ch])
    return m


def _weyl_unitaries(d: int) -> list[np.ndarray]:
    """The d^2 clock-and-shift unitaries (averaging them depolarizes)."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    out = []
    xa = np.eye(d, dtype=complex)
    for _ in range(d):
        zb = np.eye(d, dtype=complex)
        for _ in range(d):
            out.append(xa @ zb)
            zb = zb @ clock
        xa = xa @ shift
    return out


def depolarizing(p: float, d: int) -> Channel:
    """rho -> p rho + (1 - p) tr[rho] I/d; p = 1 is the identity channel."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing parameter must lie in [0, 1]")
    w = (1.0 - p) / d**2
    kraus = []
    for k, u in enumerate(_weyl_unitaries(d)):
        weight = w + (p if k == 0 else 0.0)
        if weight > 0.0:
            kraus.append(np.sqrt(weight) * u)
    return Channel.from_kraus(kraus)


def dephasing(gamma: float, d: int) -> Channel:
    """Computational-basis dephasing: rho -> (1 - gamma) rho + gamma diag(rho)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("dephasing parameter must lie in [0, 1]")
    kraus = [np.sqrt(1.0 - gamma) * np.eye(d, dtype=complex)]
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = np.sqrt(gamma)
        kraus.append(e)
    return Channel.from_kraus(kraus)


def amplitude_damping(gamma: float, n_qubits: int = 1) -> Channel:
    """Amplitude damping with rate gamma applied to each of n_qubits."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("damping parameter must lie in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    chan = Channel.from_kraus([k0, k1])
    out = chan
    for _ in range(n_qubits - 1):
        out = out.tensor(chan)
    return out


def coherent(axis: str, epsilon: float, n_qubits: int | None = None) -> Channel:
    """Unitary over-rotation exp(-i epsilon P) about a Pauli-string axis.

    A single-character axis on n_qubits > 1 acts on qubit 0 with identity
    padding on the rest.
    """
    axis = axis.upper()
    if n_qubits is not None and len(axis) < n_qubits:
        axis = axis + "I" * (n_qubits - len(axis))
    p = pauli_string_matrix(axis)
    d = p.shape[0]
    u = np.cos(epsilon) * np.eye(d, dtype=complex) - 1j * np.sin(epsilon) * p
    return Channel.from_unitary(u)


def noise_model(spec: dict, n_qubits: int) -> Channel:
    """Build a noise channel from a declarative spec.

    Supported kinds: depolarizing(p), dephasing(gamma),
    amplitude_damping(gamma), coherent(axis, epsilon), and
    composite(factors) where factors compose left to right as
    factors[0] o factors[1] o ... (the first factor acts last).
    """
    d = 1 << n_qubits
    kind = spec.get("kind")
    if kind == "depolarizing":
        return depolarizing(float(spec["p"]), d)
    if kind == "dephasing":
        return dephasing(float(spec["gamma"]), d)
    if kind == "amplitude_damping":
        return amplitude_damping(float(spec["gamma"]), n_qubits)
    if kind == "coherent":
        return coherent(str(spec["axis"]), float(spec["epsilon"]), n_qubits)
    if kind == "composite":
        factors = [noise_model(f, n_qubits) for f in spec["factors"]]
        if not factors:
            raise ValueError("composite noise needs at least one factor")
        out = factors[0]
        for f in factors[1:]:
            out = out @ f
        return out
    raise ValueError(f"unknown noise kind {kind!r}")


# ---------------------------------------------------------------------------
# fidelities
# ---------------------------------------------------------------------------


def avg_fidelity_from_bc(b: float, c: float, d: int) -> float:
    """Average fidelity of a channel with twirl coordinates (b, c)."""
    if d < 2:
        raise ValueError("need d >= 2")
    return (b * (d * d + d - 2) + c * d * (d - 1) + 2 * (d + 1)) / (2 * d * (d + 1))


def rebit_fidelity_from_b(b: float, d: int) -> float:
    """Average fidelity over real (orthogonally generated) pure states."""
    if d < 2:
        raise ValueError("need d >= 2")
    return (b * (d - 1) + 1) / d


def haar_orthogonal(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random orthogonal matrices via QR with the sign-of-R correction."""
    shape = (d, d) if size is None else (size, d, d)
    q, r = np.linalg.qr(rng.standard_normal(shape))
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * np.sign(diag)[..., None, :]


def haar_unitary(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unitaries via QR of a complex Ginibre matrix."""
    shape = (d, d) if size is None else (size, d, d)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag)).conj()[..., None, :]


def haar_fidelity_oracle(
    channel: Channel,
    ensemble: str,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo state-fidelity average over Haar-random pure states.

    Samples |psi> = W |0> with W Haar on the chosen group ('unitary' or
    'orthogonal') and averages <psi| T(|psi><psi|) |psi>.  Returns
    (estimate, standard error).
    """
    d = channel.dim
    if ensemble == "unitary":
        w = haar_unitary(d, rng, size=n_samples)
    elif ensemble == "orthogonal":
        w = haar_orthogonal(d, rng, size=n_samples).astype(complex)
    else:
        raise ValueError("ensemble must be 'unitary' or 'orthogonal'")
    psi = w[:, :, 0]
    # vec(|psi><psi|) in column stacking: component (j*d + i) = psi_i conj(psi_j)
    v = (psi.conj()[:, :, None] * psi[:, None, :]).reshape(n_samples, d * d)
    out = v @ channel.superop.T
    sigma = out.reshape(n_samples, d, d)  # sigma[s, j, i] = T(P_psi)[i, j]
    f = np.einsum("si,sji,sj->s", psi.conj(), sigma, psi)
    if np.max(np.abs(f.imag)) > 1e-8:
        raise ValueError("fidelity samples are not real; channel is not CPTP?")
    f = f.real
    return float(f.mean()), float(f.std(ddof=1) / np.sqrt(n_samples))


def random_cptp_channel(d: int, kraus_rank: int, rng: np.random.Generator) -> Channel:
    """A Haar-ish random CPTP channel from a random isometry."""
    g = rng.standard_normal((d * kraus_rank, d)) + 1j * rng.standard_normal((d * kraus_rank, d))
    v, _ = np.linalg.qr(g)
    return Channel.from_kraus([v[i * d : (i + 1) * d, :] for i in range(kraus_rank)])
