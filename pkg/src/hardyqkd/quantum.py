"""Two-qubit linear algebra: Hardy-state construction and Born-rule behaviors.

Conventions
-----------
Local bases follow

    |0'> = alpha |0> + beta |1>,      |1'> = beta* |0> - alpha* |1>,

with |alpha|^2 + |beta|^2 = 1 and 0 < |alpha| < 1 (the two settings must not
commute).  beta is always taken real nonnegative, so every constructed
vector is reproducible exactly.  Product vectors live in C^4 with index
2*i_A + i_B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinearDependenceError, ParameterRangeError

HERM_TOL = 1e-12
NORM_TOL = 1e-12
PSD_TOL = -1e-10
GS_TOL = 1e-12
BEHAVIOR_TOL = 1e-10

# |alpha|^2 at the Hardy optimum, and the two pinned probabilities.
ALPHA_SQ_OPT = (np.sqrt(5.0) - 1.0) / 2.0
ALPHA_OPT = float(np.sqrt(ALPHA_SQ_OPT))
Q_MAX = (5.0 * np.sqrt(5.0) - 11.0) / 2.0
Q_TILDE = np.sqrt(5.0) - 2.0


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol)


def is_unitary(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.abs(m @ m.conj().T - np.eye(m.shape[0])).max() <= tol)


def is_projector(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return is_hermitian(m, tol) and bool(np.abs(m @ m - m).max() <= tol)


def check_state_vector(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise ValueError("state vector is not normalized")
    return psi


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > NORM_TOL:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(rho).min() < PSD_TOL:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


@dataclass(frozen=True)
class MeasurementSet:
    """Rank-1 projectors indexed by (party, setting, outcome).

    `projectors[p, s, o]` is the 2x2 projector for party p (0 = Alice,
    1 = Bob), setting s and outcome o.
    """

    projectors: np.ndarray  # shape (2, 2, 2, 2, 2), complex
    alpha_a: complex
    alpha_b: complex

    def projector(self, party: int, setting: int, outcome: int) -> np.ndarray:
        return self.projectors[party, setting, outcome]

    def validate(self) -> None:
        for p in range(2):
            for s in range(2):
                p0, p1 = self.projectors[p, s]
                if not (is_projector(p0) and is_projector(p1)):
                    raise ValueError("measurement operators must be projectors")
                if np.abs(p0 + p1 - np.eye(2)).max() > HERM_TOL:
                    raise ValueError("outcome projectors must sum to identity")


@dataclass(frozen=True)
class Behavior:
    """Conditional probability table p[a, b, A, B] for the 2x2x2x2 scenario."""

    p: np.ndarray  # shape (2, 2, 2, 2), float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.p.shape != (2, 2, 2, 2):
            raise ValueError("behavior table must have shape (2, 2, 2, 2)")

    def validate(self, tol: float = BEHAVIOR_TOL) -> None:
        if (self.p < -tol).any() or (self.p > 1.0 + tol).any():
            raise ValueError("cell probabilities must lie in [0, 1]")
        totals = self.p.sum(axis=(0, 1))
        if np.abs(totals - 1.0).max() > tol:
            raise ValueError("each setting pair must be normalized")
        marg_a = self.p.sum(axis=1)  # [a, A, B]
        if np.abs(marg_a[:, :, 0] - marg_a[:, :, 1]).max() > tol:
            raise ValueError("signaling from Bob to Alice")
        marg_b = self.p.sum(axis=0)  # [b, A, B]
        if np.abs(marg_b[:, 0, :] - marg_b[:, 1, :]).max() > tol:
            raise ValueError("signaling from Alice to Bob")

    def cell(self, a: int, b: int, setting_a: int, setting_b: int) -> float:
        return float(self.p[a, b, setting_a, setting_b])

    def marginal_a(self, a: int, setting_a: int) -> float:
        return float(self.p[a, :, setting_a, 0].sum())

    def marginal_b(self, b: int, setting_b: int) -> float:
        return float(self.p[:, b, 0, setting_b].sum())


def _check_alpha(alpha: complex) -> complex:
    mag = abs(alpha)
    if not (1e-10 < mag < 1.0 - 1e-10):
        raise ParameterRangeError(
            f"|alpha| = {mag:.3g} must lie strictly inside (0, 1); "
            "the boundary makes the two settings commute")
    return complex(alpha)


def local_bases(alpha_a: complex, alpha_b: complex) -> MeasurementSet:
    """Projective measurements for both parties.

    Setting 0 measures in the computational basis; setting 1 in the rotated
    basis {|0'>, |1'>} determined by the party's alpha.
    """
    alpha_a = _check_alpha(alpha_a)
    alpha_b = _check_alpha(alpha_b)
    proj = np.zeros((2, 2, 2, 2, 2), dtype=complex)
    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([0.0, 1.0], dtype=complex)
    for party, alpha in ((0, alpha_a), (1, alpha_b)):
        beta = np.sqrt(1.0 - abs(alpha) ** 2)  # real nonnegative by convention
        prime0 = alpha * e0 + beta * e1
        prime1 = np.conj(beta) * e0 - np.conj(alpha) * e1
        for setting, (v0, v1) in ((0, (e0, e1)), (1, (prime0, prime1))):
            proj[party, setting, 0] = np.outer(v0, v0.conj())
            proj[party, setting, 1] = np.outer(v1, v1.conj())
    return MeasurementSet(projectors=proj, alpha_a=alpha_a, alpha_b=alpha_b)


def _basis_vector(bases: MeasurementSet, party: int, setting: int,
                  outcome: int) -> np.ndarray:
    """Unit eigenvector of the requested rank-1 projector (fixed phase)."""
    p = bases.projectors[party, setting, outcome]
    vals, vecs = np.linalg.eigh(p)
    v = vecs[:, np.argmax(vals)]
    # fix the global phase: make the largest component real positive
    k = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[k]))
    return v


def hardy_product_states(bases: MeasurementSet) -> list[np.ndarray]:
    """The four product vectors [phi0, phi1, phi2, phi3] attached to the test.

    phi0 = |1'>_A |1'>_B, phi1 = |0>_A |0'>_B, phi2 = |0'>_A |0>_B,
    phi3 = |0>_A |0>_B.
    """
    alpha_a, alpha_b = bases.alpha_a, bases.alpha_b
    beta_a = np.sqrt(1.0 - abs(alpha_a) ** 2)
    beta_b = np.sqrt(1.0 - abs(alpha_b) ** 2)
    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([0.0, 1.0], dtype=complex)
    prime0_a = alpha_a * e0 + beta_a * e1
    prime1_a = np.conj(beta_a) * e0 - np.conj(alpha_a) * e1
    prime0_b = alpha_b * e0 + beta_b * e1
    prime1_b = np.conj(beta_b) * e0 - np.conj(alpha_b) * e1
    phi0 = np.kron(prime1_a, prime1_b)
    phi1 = np.kron(e0, prime0_b)
    phi2 = np.kron(prime0_a, e0)
    phi3 = np.kron(e0, e0)
    return [phi0, phi1, phi2, phi3]


def gram_schmidt(vectors: list[np.ndarray]) -> list[np.ndarray]:
    """Classical Gram-Schmidt for unit input vectors.

    The k-th output spans the same flag as the first k inputs.  Raises
    `LinearDependenceError` when a normalization denominator falls below
    the degeneracy threshold.
    """
    out: list[np.ndarray] = []
    for i, v in enumerate(vectors):
        v = check_state_vector(v)
        overlaps = [np.vdot(u, v) for u in out]
        w = v - sum(c * u for c, u in zip(overlaps, out))
        rad = 1.0 - sum(abs(c) ** 2 for c in overlaps)
        if rad < GS_TOL:
            raise LinearDependenceError(
                f"vector {i} is linearly dependent on its predecessors")
        # one reorthogonalization pass removes the cancellation error of the
        # classical update without changing the exact-arithmetic result
        w = w - sum(np.vdot(u, w) * u for u in out)
        out.append(w / np.linalg.norm(w))
    return out


def hardy_state(alpha_a: complex, alpha_b: complex) -> np.ndarray:
    """The unique pure two-qubit state passing the test for these bases."""
    bases = local_bases(alpha_a, alpha_b)
    ortho = gram_schmidt(hardy_product_states(bases))
    return ortho[3]


def q_value(alpha_a: complex, alpha_b: complex) -> float:
    """Closed-form success probability |<psi|phi3>|^2.

    Equals |alpha_A alpha_B|^2 |beta_A beta_B|^2 / (1 - |alpha_A alpha_B|^2);
    its maximum over admissible alphas is (5*sqrt(5) - 11) / 2.
    """
    _check_alpha(alpha_a)
    _check_alpha(alpha_b)
    aa = abs(alpha_a) ** 2 * abs(alpha_b) ** 2
    bb = (1.0 - abs(alpha_a) ** 2) * (1.0 - abs(alpha_b) ** 2)
    return float(aa * bb / (1.0 - aa))


def uniqueness_check(bases: MeasurementSet) -> int:
    """Dimension of the orthocomplement of span{phi0, phi1, phi2} in C^4."""
    phi = hardy_product_states(bases)[:3]
    mat = np.stack(phi)
    rank = int(np.sum(np.linalg.svd(mat, compute_uv=False) > 1e-10))
    return 4 - rank


def noisy_state(eta: float, psi: np.ndarray) -> np.ndarray:
    """Isotropic mixture (1 - eta) I/4 + eta |psi><psi|."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterRangeError(f"eta = {eta} outside [0, 1]")
    psi = check_state_vector(psi)
    return (1.0 - eta) * np.eye(4) / 4.0 + eta * np.outer(psi, psi.conj())


def born_behavior(rho: np.ndarray, bases: MeasurementSet) -> Behavior:
    """p(a, b | A, B) = Tr[(Pi^A_{A,a} x Pi^B_{B,b}) rho]."""
    rho = np.asarray(rho, dtype=complex)
    p = np.zeros((2, 2, 2, 2))
    for sa in range(2):
        for sb in range(2):
            for a in range(2):
                for b in range(2):
                    op = np.kron(bases.projectors[0, sa, a],
                                 bases.projectors[1, sb, b])
                    p[a, b, sa, sb] = float(np.trace(op @ rho).real)
    p = np.clip(p, 0.0, 1.0)
    return Behavior(p=p)


def hardy_behavior(eta: float = 1.0,
                   alpha_a: complex = ALPHA_OPT,
                   alpha_b: complex = ALPHA_OPT) -> Behavior:
    """Behavior of the noisy Hardy setup rho(eta) with the matching bases."""
    bases = local_bases(alpha_a, alpha_b)
    rho = noisy_state(eta, hardy_state(alpha_a, alpha_b))
    return born_behavior(rho, bases)
