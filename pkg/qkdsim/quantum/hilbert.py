# Copyright (c) Nex-AGI. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Hilbert-space algebra for single photons (dimension 2) and photon pairs or
carrier/probe systems (dimension 4).

Kets are stored as immutable complex vectors in the reference basis
{|V>, |H>} (vertical, horizontal linear polarization); dimension-4 kets use
the product basis {VV, VH, HV, HH} with the first factor on the left.
Measurements draw exactly one uniform number from the caller's generator and
select the outcome by inverse CDF in basis order, so a seed replays exactly.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)

# Algebraic identities hold to this tolerance.
TOL_ALGEBRA = 1e-12
# Accumulated sums (probabilities, POVM completeness).
TOL_SUM = 1e-10

SUPPORTED_DIMS = (2, 4)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.complex128)
    array.setflags(write=False)
    return array


class Ket:
    """A unit-norm state vector. Global phase is kept, not quotiented."""

    __slots__ = ("amplitudes",)
    expected_dim: int | None = None

    def __init__(self, amplitudes: Sequence[complex] | np.ndarray, normalize=False):
        vector = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if self.expected_dim is not None and vector.shape[0] != self.expected_dim:
            raise ValueError(
                f"{type(self).__name__} needs {self.expected_dim} amplitudes, "
                f"got {vector.shape[0]}"
            )
        if vector.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"Unsupported ket dimension: {vector.shape[0]}")
        norm = float(np.linalg.norm(vector))
        if normalize:
            if norm < TOL_ALGEBRA:
                raise ValueError("Cannot normalize the zero vector")
            vector = vector / norm
        elif abs(norm - 1.0) > TOL_ALGEBRA:
            raise ValueError(f"Ket is not unit norm (norm={norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(vector))

    def __setattr__(self, name, value):
        raise AttributeError("Ket is immutable")

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self) -> str:
        coords = ", ".join(f"{a.real:+.6f}{a.imag:+.6f}j" for a in self.amplitudes)
        return f"{type(self).__name__}({coords})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ket):
            return NotImplemented
        return self.dim == other.dim and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=TOL_ALGEBRA
        )

    def __hash__(self) -> int:
        return hash(tuple(np.round(self.amplitudes, 10)))


class Ket2(Ket):
    __slots__ = ()
    expected_dim = 2


class Ket4(Ket):
    __slots__ = ()
    expected_dim = 4


def make_ket(amplitudes: Sequence[complex] | np.ndarray, normalize=False) -> Ket:
    vector = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if vector.shape[0] == 2:
        return Ket2(vector, normalize=normalize)
    if vector.shape[0] == 4:
        return Ket4(vector, normalize=normalize)
    raise ValueError(f"Unsupported ket dimension: {vector.shape[0]}")


def linear_ket(theta: float) -> Ket2:
    """|theta> = cos(theta)|V> + sin(theta)|H>, angle measured from vertical."""
    return Ket2([math.cos(theta), math.sin(theta)])


SQRT_HALF = 1.0 / math.sqrt(2.0)

KET_V = Ket2([1.0, 0.0])
KET_H = Ket2([0.0, 1.0])
KET_DIAG = Ket2([SQRT_HALF, SQRT_HALF])
KET_ANTI = Ket2([SQRT_HALF, -SQRT_HALF])
KET_RIGHT = Ket2([SQRT_HALF, -1j * SQRT_HALF])
KET_LEFT = Ket2([SQRT_HALF, 1j * SQRT_HALF])

# Symbol table used by reports and the bracket golden test.
POLARIZATION_KETS: dict[str, Ket2] = {
    "V": KET_V,
    "H": KET_H,
    "D": KET_DIAG,
    "A": KET_ANTI,
    "R": KET_RIGHT,
    "L": KET_LEFT,
}


def equal_up_to_phase(a: Ket, b: Ket, tol: float = TOL_ALGEBRA) -> bool:
    """Two kets are the same physical state iff |<a|b>| = 1."""
    return abs(abs(bracket(a, b)) - 1.0) <= tol


class Operator:
    """A d x d complex matrix; hermitian/unitary flags are computed."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence[complex]] | np.ndarray):
        matrix = np.asarray(entries, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Operator must be square, got shape {matrix.shape}")
        if matrix.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"Unsupported operator dimension: {matrix.shape[0]}")
        object.__setattr__(self, "entries", _frozen(matrix))

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def is_hermitian(self) -> bool:
        return bool(
            np.allclose(
                self.entries, self.entries.conj().T, rtol=0.0, atol=TOL_ALGEBRA
            )
        )

    @property
    def is_unitary(self) -> bool:
        product = self.entries.conj().T @ self.entries
        return bool(
            np.allclose(product, np.eye(self.dim), rtol=0.0, atol=TOL_ALGEBRA)
        )

    @property
    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries, "fro"))

    def _check_dim(self, other_dim: int) -> None:
        if other_dim != self.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other_dim}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_dim(other.dim)
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_dim(other.dim)
        return Operator(self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.entries)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_dim(other.dim)
        return Operator(self.entries @ other.entries)

    def allclose(self, other: "Operator", atol: float = TOL_ALGEBRA) -> bool:
        return self.dim == other.dim and bool(
            np.allclose(self.entries, other.entries, rtol=0.0, atol=atol)
        )

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, hermitian={self.is_hermitian})"


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim))


def projector(ket: Ket) -> Operator:
    """|k><k|"""
    return Operator(np.outer(ket.amplitudes, ket.amplitudes.conj()))


def kron(left: Operator, right: Operator) -> Operator:
    return Operator(np.kron(left.entries, right.entries))


@dataclass(frozen=True)
class OrthonormalBasis:
    """A complete orthonormal basis, validated once at construction."""

    kets: tuple[Ket, ...]

    def __post_init__(self):
        if not self.kets:
            raise ValueError("Basis is empty")
        dims = {ket.dim for ket in self.kets}
        if len(dims) != 1:
            raise ValueError(f"Basis kets have mixed dimensions: {sorted(dims)}")
        dim = dims.pop()
        if len(self.kets) != dim:
            raise ValueError(
                f"Basis is incomplete: {len(self.kets)} kets for dimension {dim}"
            )
        matrix = np.column_stack([ket.amplitudes for ket in self.kets])
        gram = matrix.conj().T @ matrix
        if not np.allclose(gram, np.eye(dim), rtol=0.0, atol=TOL_SUM):
            raise ValueError("Basis kets are not orthonormal")

    @property
    def dim(self) -> int:
        return self.kets[0].dim

    def __len__(self) -> int:
        return len(self.kets)

    def __iter__(self):
        return iter(self.kets)

    def __getitem__(self, index: int) -> Ket:
        return self.kets[index]


def as_basis(eigenkets: Sequence[Ket] | OrthonormalBasis) -> OrthonormalBasis:
    if isinstance(eigenkets, OrthonormalBasis):
        return eigenkets
    return OrthonormalBasis(tuple(eigenkets))


def orthogonal_complement(ket: Ket2) -> Ket2:
    """The unit ket orthogonal to a dimension-2 ket (phase fixed by convention)."""
    a, b = ket.amplitudes
    return Ket2([-np.conj(b), np.conj(a)])


def basis_from_ket(ket: Ket2) -> OrthonormalBasis:
    return OrthonormalBasis((ket, orthogonal_complement(ket)))


BASIS_RECTILINEAR = OrthonormalBasis((KET_V, KET_H))
BASIS_DIAGONAL = OrthonormalBasis((KET_DIAG, KET_ANTI))
BASIS_CIRCULAR = OrthonormalBasis((KET_RIGHT, KET_LEFT))


@dataclass(frozen=True)
class Povm:
    """Labelled positive operators summing to the identity."""

    labels: tuple[str, ...]
    elements: tuple[Operator, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.elements) or not self.elements:
            raise ValueError("POVM needs one label per element and at least one")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"POVM labels must be unique: {self.labels}")
        dim = self.elements[0].dim
        total = np.zeros((dim, dim), dtype=np.complex128)
        for label, element in zip(self.labels, self.elements):
            if element.dim != dim:
                raise ValueError(f"POVM element {label!r} has dimension {element.dim}")
            if not element.is_hermitian:
                raise ValueError(f"POVM element {label!r} is not hermitian")
            smallest = float(np.min(np.linalg.eigvalsh(element.entries)))
            if smallest < -TOL_SUM:
                raise ValueError(
                    f"POVM element {label!r} is not positive "
                    f"(eigenvalue {smallest:.3e})"
                )
            total = total + element.entries
        if not np.allclose(total, np.eye(dim), rtol=0.0, atol=TOL_SUM):
            raise ValueError("POVM elements do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def element(self, label: str) -> Operator:
        return self.elements[self.labels.index(label)]


def bracket(bra_of: Ket, ket: Ket) -> complex:
    """<bra_of|ket> = sum(conj(a_i) * b_i)."""
    if bra_of.dim != ket.dim:
        raise ValueError(f"Dimension mismatch: {bra_of.dim} vs {ket.dim}")
    return complex(np.vdot(bra_of.amplitudes, ket.amplitudes))


def tensor(left: Ket2, right: Ket2) -> Ket4:
    if left.dim != 2 or right.dim != 2:
        raise ValueError("tensor expects two dimension-2 kets")
    return Ket4(np.kron(left.amplitudes, right.amplitudes))


def sample_index(probabilities: np.ndarray, rng: SeededRng) -> int:
    total = float(np.sum(probabilities))
    if abs(total - 1.0) > TOL_SUM:
        raise ValueError(f"Outcome probabilities sum to {total!r}, not 1")
    cumulative = np.cumsum(probabilities)
    draw = rng.random()
    index = int(np.searchsorted(cumulative, draw, side="right"))
    return min(index, len(probabilities) - 1)


def projective_probabilities(
    state: Ket, eigenkets: Sequence[Ket] | OrthonormalBasis
) -> np.ndarray:
    basis = as_basis(eigenkets)
    if basis.dim != state.dim:
        raise ValueError(f"Dimension mismatch: basis {basis.dim} vs state {state.dim}")
    return np.array([abs(bracket(ket, state)) ** 2 for ket in basis])


def measure_projective(
    state: Ket, eigenkets: Sequence[Ket] | OrthonormalBasis, rng: SeededRng
) -> tuple[int, Ket]:
    """Measure in an orthonormal basis; the state jumps into the chosen eigenket."""
    basis = as_basis(eigenkets)
    probabilities = projective_probabilities(state, basis)
    index = sample_index(probabilities, rng)
    return index, basis[index]


def povm_probabilities(state: Ket, povm: Povm) -> np.ndarray:
    if povm.dim != state.dim:
        raise ValueError(f"Dimension mismatch: POVM {povm.dim} vs state {state.dim}")
    values = [
        np.vdot(state.amplitudes, element.entries @ state.amplitudes).real
        for element in povm.elements
    ]
    return np.clip(np.array(values), 0.0, None)


def measure_povm(state: Ket2, povm: Povm, rng: SeededRng) -> str:
    """Sample a POVM outcome label; the measured photon is consumed."""
    probabilities = povm_probabilities(state, povm)
    return povm.labels[sample_index(probabilities, rng)]


def _imaginary_tolerance(*operators: Operator) -> float:
    scale = max([1.0] + [op.frobenius_norm() for op in operators])
    return TOL_ALGEBRA * scale * scale


def expectation(obs: Operator, state: Ket) -> float:
    if not obs.is_hermitian:
        raise ValueError("expectation requires a hermitian observable")
    if obs.dim != state.dim:
        raise ValueError(f"Dimension mismatch: {obs.dim} vs {state.dim}")
    value = np.vdot(state.amplitudes, obs.entries @ state.amplitudes)
    if abs(value.imag) > _imaginary_tolerance(obs):
        raise ValueError(f"Expectation has imaginary part {value.imag!r}")
    return float(value.real)


def commutator(a: Operator, b: Operator) -> Operator:
    """[A, B] = AB - BA"""
    if a.dim != b.dim:
        raise ValueError(f"Dimension mismatch: {a.dim} vs {b.dim}")
    return a @ b - b @ a


def uncertainty_product(a: Operator, b: Operator, state: Ket) -> tuple[float, float]:
    """
    Both sides of the uncertainty relation for observables a, b.

    Returns (lhs, rhs) with lhs = <(dA)^2><(dB)^2> and rhs = |<[A,B]>|^2 / 4.
    """
    if not a.is_hermitian or not b.is_hermitian:
        raise ValueError("uncertainty_product requires hermitian observables")
    mean_a = expectation(a, state)
    mean_b = expectation(b, state)
    var_a = expectation(a @ a, state) - mean_a**2
    var_b = expectation(b @ b, state) - mean_b**2
    bracket_ab = np.vdot(state.amplitudes, commutator(a, b).entries @ state.amplitudes)
    lhs = max(var_a, 0.0) * max(var_b, 0.0)
    rhs = 0.25 * abs(bracket_ab) ** 2
    return float(lhs), float(rhs)


def apply_unitary(u: Operator, state: Ket) -> Ket:
    if u.dim != state.dim:
        raise ValueError(f"Dimension mismatch: {u.dim} vs {state.dim}")
    if not u.is_unitary:
        raise ValueError("apply_unitary requires a unitary operator")
    return make_ket(u.entries @ state.amplitudes, normalize=True)


def basis_change_unitary(
    source: OrthonormalBasis, target: OrthonormalBasis
) -> Operator:
    """Unitary taking the i-th ket of source to the i-th ket of target."""
    if source.dim != target.dim:
        raise ValueError(f"Dimension mismatch: {source.dim} vs {target.dim}")
    source_matrix = np.column_stack([ket.amplitudes for ket in source])
    target_matrix = np.column_stack([ket.amplitudes for ket in target])
    return Operator(target_matrix @ source_matrix.conj().T)


def coordinates(state: Ket, basis: OrthonormalBasis) -> np.ndarray:
    """Coordinates <b_i|state> of a ket against another basis."""
    return np.array([bracket(ket, state) for ket in as_basis(basis)])


def _factor_matrix(state: Ket4) -> np.ndarray:
    if state.dim != 4:
        raise ValueError("Factor operations need a dimension-4 ket")
    return state.amplitudes.reshape(2, 2)


def factor_outcome_weights(
    state: Ket4, basis: OrthonormalBasis, factor: int
) -> list[np.ndarray]:
    """Unnormalized conditional states of the other factor, one per basis ket."""
    matrix = _factor_matrix(state)
    if factor == 0:
        return [ket.amplitudes.conj() @ matrix for ket in basis]
    if factor == 1:
        return [matrix @ ket.amplitudes.conj() for ket in basis]
    raise ValueError(f"factor must be 0 or 1, got {factor}")


def measure_factor(
    state: Ket4, eigenkets: Sequence[Ket2] | OrthonormalBasis, factor: int, rng
) -> tuple[int, Ket4, Ket2]:
    """
    Projective measurement of one factor of a dimension-4 ket.

    Returns the outcome index, the collapsed joint state and the conditional
    state of the unmeasured factor.
    """
    basis = as_basis(eigenkets)
    if basis.dim != 2:
        raise ValueError("measure_factor needs a dimension-2 basis")
    remainders = factor_outcome_weights(state, basis, factor)
    probabilities = np.array([float(np.vdot(r, r).real) for r in remainders])
    index = sample_index(probabilities, rng)
    remainder = Ket2(remainders[index], normalize=True)
    if factor == 0:
        collapsed = tensor(basis[index], remainder)
    else:
        collapsed = tensor(remainder, basis[index])
    return index, collapsed, remainder


def schmidt_coefficients(state: Ket4) -> np.ndarray:
    return np.linalg.svd(_factor_matrix(state), compute_uv=False)


def factorize(state: Ket4, tol: float = TOL_SUM) -> tuple[Ket2, Ket2] | None:
    """Split a product state into its two factors, or None when entangled."""
    left_vectors, singular, right_vectors = np.linalg.svd(_factor_matrix(state))
    if singular[1] > tol:
        return None
    left = Ket2(left_vectors[:, 0], normalize=True)
    right = Ket2(right_vectors[0, :] * singular[0], normalize=True)
    return left, right


def unitary_extension(
    inputs: Sequence[Ket],
    outputs: Sequence[Ket],
    rng: SeededRng | None = None,
) -> Operator:
    """
    A unitary U with U|in_i> = |out_i> for every pair.

    Exists exactly when the Gram matrices of inputs and outputs agree; the
    action on the orthogonal complement is fixed deterministically, or drawn
    at random when rng is given.
    """
    if len(inputs) != len(outputs) or not inputs:
        raise ValueError("unitary_extension needs matching, non-empty ket lists")
    dim = inputs[0].dim
    if any(k.dim != dim for k in list(inputs) + list(outputs)):
        raise ValueError("unitary_extension kets must share one dimension")
    v_in = np.column_stack([k.amplitudes for k in inputs])
    v_out = np.column_stack([k.amplitudes for k in outputs])
    gram_in = v_in.conj().T @ v_in
    gram_out = v_out.conj().T @ v_out
    deviation = np.abs(gram_in - gram_out)
    if float(deviation.max()) > TOL_SUM:
        i, j = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
        raise ValueError(
            f"Gram condition <in_{i}|in_{j}> = <out_{i}|out_{j}> violated: "
            f"{complex(gram_in[i, j]):.6g} vs {complex(gram_out[i, j]):.6g}"
        )
    try:
        lower = scipy.linalg.cholesky(gram_in, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("unitary_extension inputs are linearly dependent") from None
    q_in = scipy.linalg.solve_triangular(lower.conj(), v_in.T, lower=True).T
    q_out = scipy.linalg.solve_triangular(lower.conj(), v_out.T, lower=True).T
    n_in = scipy.linalg.null_space(q_in.conj().T)
    n_out = scipy.linalg.null_space(q_out.conj().T)
    if n_out.shape[1] and rng is not None:
        n_out = n_out @ random_unitary(n_out.shape[1], rng)
    full_in = np.hstack([q_in, n_in])
    full_out = np.hstack([q_out, n_out])
    unitary = Operator(full_out @ full_in.conj().T)
    if not unitary.is_unitary:
        raise ValueError("unitary_extension produced a non-unitary operator")
    return unitary


def random_unitary(dim: int, rng: SeededRng) -> np.ndarray:
    """Orthonormalized complex Gaussian matrix (QR with phase correction)."""
    gaussian = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = scipy.linalg.qr(gaussian)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_ket(dim: int, rng: SeededRng) -> Ket:
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return make_ket(vector, normalize=True)


def random_hermitian(dim: int, rng: SeededRng, scale: float = 1.0) -> Operator:
    gaussian = rng.normal(scale=scale, size=(dim, dim)) + 1j * rng.normal(
        scale=scale, size=(dim, dim)
    )
    return Operator((gaussian + gaussian.conj().T) / 2.0)
