"""Density matrices, measurement effects and Bloch-type coordinates.

All types are immutable after construction (the wrapped arrays are made
read-only), so they are safe to share across threads.  Validation happens
in the ``validate_*`` constructors; the dataclasses themselves trust their
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EffectBoundExceeded,
    InvalidPovm,
    NotCommuting,
    NotHermitian,
    NotPSD,
    NotUnitTrace,
    VectorTooLong,
    WrongDimension,
)
from .policy import DEFAULT_POLICY, NumericPolicy

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

for _p in PAULIS:
    _p.setflags(write=False)


def _freeze(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.setflags(write=False)
    return out


def _as_square_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise WrongDimension(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _hermiticity_deviation(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def _min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())


@dataclass(frozen=True)
class DensityMatrix:
    """A validated d x d density matrix (Hermitian, PSD, unit trace)."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class Effect:
    """A measurement effect: Hermitian, PSD, no eigenvalue above one."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def weight(self) -> float:
        """Half the trace; the ``p`` in the qubit form ``p (I + r.sigma)``."""
        return float(np.trace(self.matrix).real) / 2.0


@dataclass(frozen=True)
class Povm:
    """An ordered collection of effects summing to the identity."""

    effects: tuple[Effect, ...]

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    def __len__(self) -> int:
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    def matrices(self) -> list[np.ndarray]:
        return [e.matrix for e in self.effects]


@dataclass(frozen=True)
class BlochVector:
    """Real three-vector coordinatizing a qubit operator."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal traceless Hermitian generators G_1 .. G_{d^2-1}.

    The implicit G_0 = I/sqrt(d) completes the basis of operator space.
    """

    dim: int
    generators: tuple[np.ndarray, ...]


def validate_state(m, policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
    """Validate a matrix as a density matrix or raise a named violation.

    Raises
    ------
    NotHermitian, NotUnitTrace, NotPSD
        Each carries the offending magnitude.
    """
    arr = _as_square_matrix(m)
    dev = _hermiticity_deviation(arr)
    if dev > policy.herm_tol:
        raise NotHermitian(dev)
    tr = complex(np.trace(arr))
    if abs(tr - 1.0) > policy.trace_tol:
        raise NotUnitTrace(tr)
    lo = _min_eigenvalue(arr)
    if lo < -policy.psd_tol:
        raise NotPSD(lo)
    return DensityMatrix(_freeze(arr))


def validate_effect(m, policy: NumericPolicy = DEFAULT_POLICY) -> Effect:
    """Validate a matrix as a POVM effect (Hermitian, PSD, <= identity)."""
    arr = _as_square_matrix(m)
    dev = _hermiticity_deviation(arr)
    if dev > policy.herm_tol:
        raise NotHermitian(dev)
    eigs = np.linalg.eigvalsh((arr + arr.conj().T) / 2)
    if eigs[0] < -policy.psd_tol:
        raise NotPSD(float(eigs[0]))
    if eigs[-1] > 1.0 + policy.effect_bound_tol:
        raise EffectBoundExceeded(float(eigs[-1]))
    return Effect(_freeze(arr))


def validate_povm(matrices, policy: NumericPolicy = DEFAULT_POLICY) -> Povm:
    """Validate a list of matrices as a POVM.

    Every element must be a valid effect and the sum must equal the
    identity entrywise within ``policy.povm_sum_tol``.
    """
    effects = tuple(validate_effect(m, policy) for m in matrices)
    if not effects:
        raise InvalidPovm("a POVM needs at least one effect")
    dim = effects[0].dim
    if any(e.dim != dim for e in effects):
        raise DimensionMismatch("POVM effects have mixed dimensions")
    total = sum(e.matrix for e in effects)
    dev = float(np.max(np.abs(total - np.eye(dim))))
    if dev > policy.povm_sum_tol:
        raise InvalidPovm(f"effects do not sum to the identity: max deviation {dev:.3e}", dev)
    return Povm(effects)


def as_povm(povm, policy: NumericPolicy = DEFAULT_POLICY) -> Povm:
    """Accept either a Povm or a list of matrices."""
    if isinstance(povm, Povm):
        return povm
    return validate_povm(povm, policy)


def bloch_decompose(rho: DensityMatrix) -> BlochVector:
    """Bloch vector (tr(sigma_x rho), tr(sigma_y rho), tr(sigma_z rho)) of a qubit state."""
    if rho.dim != 2:
        raise WrongDimension(f"Bloch decomposition needs a qubit, got dim {rho.dim}")
    m = rho.matrix
    return BlochVector(*(float(np.trace(p @ m).real) for p in PAULIS))


def bloch_compose(r, weight: float, policy: NumericPolicy = DEFAULT_POLICY) -> Effect:
    """Build the effect ``weight * (I + r . sigma)``.

    The result is rank one exactly when ``|r| = 1``; ``weight = 1/2`` with a
    unit vector gives the projector onto the +r eigenstate.
    """
    vec = r.as_array() if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    if vec.shape != (3,):
        raise WrongDimension(f"expected a 3-vector, got shape {vec.shape}")
    norm = float(np.linalg.norm(vec))
    if norm > 1.0 + policy.bloch_norm_tol:
        raise VectorTooLong(norm)
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    m = weight * (np.eye(2, dtype=complex) + vec[0] * PAULI_X + vec[1] * PAULI_Y + vec[2] * PAULI_Z)
    return Effect(_freeze(m))


def effect_bloch(effect: Effect) -> tuple[float, np.ndarray]:
    """Return (p, r) with ``effect = p (I + r . sigma)``; r is zero for p = 0."""
    if effect.dim != 2:
        raise WrongDimension(f"expected a qubit effect, got dim {effect.dim}")
    p = effect.weight()
    if p < 1e-300:
        return 0.0, np.zeros(3)
    r = np.array([float(np.trace(s @ effect.matrix).real) for s in PAULIS]) / (2.0 * p)
    return p, r


def gell_mann_basis(dim: int, policy: NumericPolicy = DEFAULT_POLICY) -> OperatorBasis:
    """Generalized Gell-Mann generators, ordered symmetric / antisymmetric / diagonal.

    Normalized so that tr(G_i G_j) = delta_ij; for dim = 2 this is the
    Pauli triple divided by sqrt(2).
    """
    if dim < 2:
        raise WrongDimension(f"need dim >= 2, got {dim}")
    mats: list[np.ndarray] = []
    for k in range(1, dim):
        for j in range(k):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = 1.0
            m[k, j] = 1.0
            mats.append(m / np.sqrt(2.0))
    for k in range(1, dim):
        for j in range(k):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1.0j
            m[k, j] = 1.0j
            mats.append(m / np.sqrt(2.0))
    for level in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[np.arange(level), np.arange(level)] = 1.0
        m[level, level] = -float(level)
        mats.append(m / np.sqrt(level * (level + 1)))
    return make_operator_basis(dim, mats, policy)


def make_operator_basis(dim: int, generators, policy: NumericPolicy = DEFAULT_POLICY) -> OperatorBasis:
    """Validate orthonormality and tracelessness of a generator list."""
    gens = tuple(_freeze(_as_square_matrix(g)) for g in generators)
    if len(gens) != dim * dim - 1:
        raise DimensionMismatch(f"need {dim * dim - 1} generators for dim {dim}, got {len(gens)}")
    for i, g in enumerate(gens):
        if g.shape != (dim, dim):
            raise DimensionMismatch(f"generator {i} has shape {g.shape}")
        if abs(np.trace(g)) > policy.basis_tol:
            raise InvalidPovm(f"generator {i} is not traceless")
    for i in range(len(gens)):
        for j in range(i, len(gens)):
            inner = np.trace(gens[i].conj().T @ gens[j])
            target = 1.0 if i == j else 0.0
            if abs(inner - target) > policy.basis_tol:
                raise InvalidPovm(f"generators {i},{j} are not orthonormal: tr(Gi Gj) = {inner:.3e}")
    return OperatorBasis(dim, gens)


def basis_decompose(rho: DensityMatrix, basis: OperatorBasis) -> np.ndarray:
    """Generalized coordinate vector of a state over an operator basis.

    Coordinates are scaled so that pure states have unit norm:
    ``r_i = tr(G_i rho) * d / sqrt(d^2 - d)``.
    """
    if rho.dim != basis.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs basis dim {basis.dim}")
    d = basis.dim
    scale = d / np.sqrt(d * d - d)
    return np.array([float(np.trace(g @ rho.matrix).real) for g in basis.generators]) * scale


def basis_compose(coords, basis: OperatorBasis) -> np.ndarray:
    """Inverse of :func:`basis_decompose`: rebuild the trace-one operator."""
    r = np.asarray(coords, dtype=float)
    if r.shape != (len(basis.generators),):
        raise DimensionMismatch(f"expected {len(basis.generators)} coordinates, got shape {r.shape}")
    d = basis.dim
    out = np.eye(d, dtype=complex)
    for ri, g in zip(r, basis.generators):
        out = out + np.sqrt(d * d - d) * ri * g
    return out / d


def _phase_fix(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Make the first significant component of each column real positive."""
    out = np.array(vectors, dtype=complex)
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.argmax(np.abs(col) > tol)
        pivot = col[idx]
        if abs(pivot) > tol:
            out[:, k] = col * (pivot.conjugate() / abs(pivot))
    return out


def commutator_norm(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    c = rho1.matrix @ rho2.matrix - rho2.matrix @ rho1.matrix
    return float(np.max(np.abs(c)))


def common_eigenbasis(
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> np.ndarray:
    """Orthonormal basis (columns) diagonalizing two commuting states.

    Degenerate eigenspaces of ``rho1`` are resolved by diagonalizing
    ``rho2`` inside them.  Raises :class:`NotCommuting` (carrying the
    commutator norm) when the states do not commute within tolerance.
    """
    if rho1.dim != rho2.dim:
        raise DimensionMismatch(f"dims {rho1.dim} vs {rho2.dim}")
    cnorm = commutator_norm(rho1, rho2)
    if cnorm >= policy.commute_tol:
        raise NotCommuting(cnorm)

    evals, vecs = np.linalg.eigh(rho1.matrix)
    # resolve clusters of equal rho1 eigenvalues using rho2
    cluster_tol = 10 * policy.diag_tol
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[stop - 1] < cluster_tol:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            sub = block.conj().T @ rho2.matrix @ block
            _, w = np.linalg.eigh((sub + sub.conj().T) / 2)
            vecs[:, start:stop] = block @ w
        start = stop
    vecs = _phase_fix(vecs)

    for rho in (rho1, rho2):
        diag = vecs.conj().T @ rho.matrix @ vecs
        off = float(np.max(np.abs(diag - np.diag(np.diag(diag)))))
        if off > policy.diag_tol:
            raise NotCommuting(cnorm)
    return vecs
