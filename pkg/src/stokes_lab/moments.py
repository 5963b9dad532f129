"""Polarization tensors, moment components, direction-moment profiles and
derived polarization measures.

A rank-r polarization tensor collects all expectations of ordered products
of r Stokes generators within one photon-number manifold.  Summing each
class of index permutations yields the real moment components, the
coefficients of the direction-moment profile as a polynomial on the sphere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import wordalg
from .errors import TensorConsistencyError
from .fock import as_direction, stokes_in_direction, stokes_vector_operators
from .states import BlockDiagonalState, ManifoldState, as_block_diagonal

IMAG_RESIDUE_TOL = 1e-10
DESCEND_TOL = 1e-9
DEFAULT_ORDER_CAP = 6


def component_classes(order: int) -> tuple[tuple[int, int], ...]:
    """Canonical (ones, twos) enumeration of the moment-component classes."""
    return tuple((k, l) for k in range(order + 1) for l in range(order - k + 1))


def moment_component_count(order: int) -> int:
    """Number of moment components of one order: (r+1)(r+2)/2."""
    return (order + 1) * (order + 2) // 2


def independent_moment_count(order: int) -> int:
    """Components not fixed by lower orders through the Casimir coupling: 2r+1."""
    return 2 * order + 1


def manifold_moment_total(n_photons: int) -> int:
    """Independent moment components across orders 1..N: N(N+2)."""
    return n_photons * (n_photons + 2)


def block_diagonal_parameters(manifolds) -> int:
    """Real parameters of a block-diagonal state on the given manifolds."""
    ms = list(manifolds)
    if len(set(ms)) != len(ms):
        raise ValueError("manifolds must be distinct")
    return -1 + sum((n + 1) ** 2 for n in ms)


def cutoff_block_diagonal_parameters(max_photons: int) -> int:
    """Closed form of the previous count for manifolds 0..max_photons."""
    n = max_photons
    return n * (2 * n * n + 9 * n + 13) // 6


def full_state_parameters(max_photons: int) -> int:
    """Real parameters of a general (not block-diagonal) state with <= N photons."""
    n = max_photons
    return n * (n + 3) * (n * n + 3 * n + 4) // 4


def averaged_parameter_count(max_order: int) -> int:
    """Moment components through a given order when photon number is unresolved."""
    r = max_order
    return r * (r * r + 6 * r + 11) // 6


class ParameterCounts(NamedTuple):
    block_diagonal: int
    cutoff_closed_form: int
    full_state: int


def count_parameters(max_photons: int) -> ParameterCounts:
    """Parameter-counting summary for states limited to manifolds 0..max_photons."""
    return ParameterCounts(
        block_diagonal=block_diagonal_parameters(range(max_photons + 1)),
        cutoff_closed_form=cutoff_block_diagonal_parameters(max_photons),
        full_state=full_state_parameters(max_photons),
    )


@dataclass(frozen=True)
class PolarizationTensor:
    """Rank-r array of ordered Stokes-product expectations.

    n_photons is None for a photon-number-averaged tensor.  The leftmost
    index is the leftmost operator in the product and varies slowest in
    the serialized form.
    """

    order: int
    n_photons: int | None
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (3,) * self.order:
            raise ValueError(f"rank-{self.order} tensor needs shape {(3,) * self.order}, got {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def element(self, indices) -> complex:
        """Entry by 1-based subscripts."""
        return complex(self.values[tuple(j - 1 for j in indices)])

    def check_hermiticity(self, tol: float = 1e-10) -> float:
        """Max deviation from the reversal-conjugation symmetry."""
        rev = np.transpose(self.values, axes=tuple(reversed(range(self.order))))
        return float(np.abs(self.values - rev.conj()).max())


@dataclass(frozen=True)
class MomentComponents:
    """The real coefficients of one direction-moment profile.

    values maps (ones, twos) -> coefficient of n1^ones n2^twos n3^rest.
    """

    order: int
    n_photons: int | None
    values: dict

    def __post_init__(self):
        expected = set(component_classes(self.order))
        if set(self.values) != expected:
            raise ValueError("component classes do not match the order")
        object.__setattr__(self, "values", {k: float(v) for k, v in self.values.items()})

    def __getitem__(self, key) -> float:
        return self.values[key]

    def as_vector(self) -> np.ndarray:
        return np.array([self.values[c] for c in component_classes(self.order)])

    def casimir_sum(self) -> float:
        """M(2,0) + M(0,2) + M(0,0); equals N(N+2) at order 2."""
        if self.order < 2:
            raise ValueError("defined for order >= 2")
        return self.values[(2, 0)] + self.values[(0, 2)] + self.values[(0, 0)]


def _word_products(n_photons: int, order: int):
    """All ordered products up to the given order, keyed by word."""
    gens = stokes_vector_operators(n_photons)
    dim = n_photons + 1
    products: dict[tuple, np.ndarray] = {(): np.eye(dim, dtype=complex)}
    for r in range(1, order + 1):
        for w in itertools.product((1, 2, 3), repeat=r):
            products[w] = products[w[:-1]] @ gens[w[-1] - 1]
    return products


def polarization_tensor(state: ManifoldState, order: int) -> PolarizationTensor:
    """All ordered-product expectations of one rank for a manifold state."""
    if order < 1:
        raise ValueError("order must be at least 1")
    rho = state.density()
    gens = stokes_vector_operators(state.n_photons)
    dim = state.n_photons + 1
    values = np.zeros((3,) * order, dtype=complex)
    # grow products left to right so prefixes are shared
    stack: dict[tuple, np.ndarray] = {(): np.eye(dim, dtype=complex)}
    for r in range(1, order + 1):
        nxt = {}
        for w, mat in stack.items():
            for j in (1, 2, 3):
                nxt[w + (j,)] = mat @ gens[j - 1]
        stack = nxt
        if r == order:
            for w, mat in stack.items():
                values[tuple(i - 1 for i in w)] = np.trace(rho @ mat)
    return PolarizationTensor(order, state.n_photons, values)


def averaged_tensor(state, order: int) -> PolarizationTensor:
    """Probability-weighted tensor over the populated manifolds."""
    block = as_block_diagonal(state)
    total = np.zeros((3,) * order, dtype=complex)
    for n, p, ms in block.blocks:
        total += p * polarization_tensor(ms, order).values
    return PolarizationTensor(order, None, total)


def moment_components(tensor: PolarizationTensor, imag_tol: float = IMAG_RESIDUE_TOL) -> MomentComponents:
    """Sum each permutation class of tensor elements into a real coefficient.

    The imaginary parts must cancel; a residue beyond tolerance signals a
    broken tensor and raises.
    """
    scale = max(1.0, float(np.abs(tensor.values).max(initial=0.0)))
    out = {}
    for ones, twos in component_classes(tensor.order):
        total = 0.0 + 0j
        for w in wordalg.class_words(ones, twos, tensor.order):
            total += tensor.element(w)
        if abs(total.imag) > imag_tol * scale:
            raise TensorConsistencyError(
                f"class ({ones},{twos}) of order {tensor.order} has imaginary residue {total.imag:.3e}"
            )
        out[(ones, twos)] = total.real
    return MomentComponents(tensor.order, tensor.n_photons, out)


def components_from_state(state: ManifoldState, order: int) -> MomentComponents:
    return moment_components(polarization_tensor(state, order))


def averaged_components(state, order: int) -> MomentComponents:
    return moment_components(averaged_tensor(state, order))


def profile_eval(components: MomentComponents, n) -> float:
    """Evaluate the direction-moment polynomial at a unit direction."""
    d = as_direction(n)
    r = components.order
    total = 0.0
    for (ones, twos), coeff in components.values.items():
        total += coeff * d.x**ones * d.y**twos * d.z ** (r - ones - twos)
    return total


def stokes_profile(state: ManifoldState, order: int, n) -> float:
    """Direct matrix route: Tr(rho (n.S)^r) on the state's manifold."""
    op = np.linalg.matrix_power(stokes_in_direction(n, state.n_photons), order)
    return float(state.expectation(op).real)


def averaged_profile(state, order: int, n) -> float:
    """Probability-weighted direction moment over populated manifolds."""
    block = as_block_diagonal(state)
    return sum(p * stokes_profile(ms, order, n) for _, p, ms in block.blocks)


def multi_direction_expectation(tensor: PolarizationTensor, directions) -> complex:
    """Full contraction of the tensor with one unit vector per slot."""
    vecs = [as_direction(d).as_array() for d in directions]
    if len(vecs) != tensor.order:
        raise ValueError(f"need {tensor.order} directions, got {len(vecs)}")
    out = tensor.values
    for v in vecs:
        out = np.tensordot(v, out, axes=([0], [0]))
    return complex(out)


def tensor_descend(tensor: PolarizationTensor, tol: float = DESCEND_TOL) -> PolarizationTensor:
    """Recover the rank-(r-1) tensor from antisymmetrized neighbor pairs.

    Every insertion slot must reproduce the same value; disagreement beyond
    tolerance marks the input as inconsistent.
    """
    r = tensor.order
    if r < 2:
        raise ValueError("descent needs order >= 2")
    cyclic = {1: (2, 3), 2: (3, 1), 3: (1, 2)}
    out = np.zeros((3,) * (r - 1), dtype=complex)
    scale = max(1.0, float(np.abs(tensor.values).max(initial=0.0)))
    for w in itertools.product((1, 2, 3), repeat=r - 1):
        candidates = []
        for slot in range(r - 1):
            mu, nu = cyclic[w[slot]]
            plus = w[:slot] + (mu, nu) + w[slot + 1 :]
            minus = w[:slot] + (nu, mu) + w[slot + 1 :]
            candidates.append((tensor.element(plus) - tensor.element(minus)) / 2j)
        spread = max(abs(a - b) for a in candidates for b in candidates)
        if spread > tol * scale:
            raise TensorConsistencyError(
                f"slot reconstructions of element {w} disagree by {spread:.3e}"
            )
        out[tuple(i - 1 for i in w)] = sum(candidates) / len(candidates)
    return PolarizationTensor(r - 1, tensor.n_photons, out)


def ordered_product(ones: int, twos: int, order: int, n_photons: int) -> np.ndarray:
    """Matrix of the standard-ordered product S1^ones S2^twos S3^(order-ones-twos)."""
    threes = order - ones - twos
    if min(ones, twos, threes) < 0:
        raise ValueError("multiplicities must be non-negative within the order")
    s1, s2, s3 = stokes_vector_operators(n_photons)
    out = np.linalg.matrix_power(s1, ones) @ np.linalg.matrix_power(s2, twos)
    return out @ np.linalg.matrix_power(s3, threes)


def stokes_vector_mean(state) -> np.ndarray:
    """Photon-number-averaged first moments of the three generators."""
    block = as_block_diagonal(state)
    out = np.zeros(3)
    for n, p, ms in block.blocks:
        gens = stokes_vector_operators(n)
        out += p * np.array([ms.expectation(g).real for g in gens])
    return out


def degree_of_polarization(state) -> float:
    """First-order polarization measure |<S>| / <S0> over the whole state."""
    block = as_block_diagonal(state)
    mean_photons = block.mean_photon_number()
    if mean_photons <= 0.0:
        raise ValueError("degree of polarization is undefined for the vacuum")
    return float(np.linalg.norm(stokes_vector_mean(block)) / mean_photons)


def manifold_degree_of_polarization(state: ManifoldState) -> float:
    """Per-manifold variant of the first-order polarization measure."""
    if state.n_photons == 0:
        raise ValueError("degree of polarization is undefined for the vacuum manifold")
    mean = stokes_vector_mean(BlockDiagonalState.single(state))
    return float(np.linalg.norm(mean) / state.n_photons)


def covariance_matrix(state, n_photons: int | None = None) -> np.ndarray:
    """Symmetrized second-moment covariance of the generators.

    With a manifold given, the covariance within that manifold; otherwise
    the probability-weighted average of per-manifold covariances.
    """
    block = as_block_diagonal(state)
    if n_photons is not None:
        ms = block.block(n_photons)
        if ms is None:
            raise ValueError(f"manifold {n_photons} is unpopulated")
        t2 = polarization_tensor(ms, 2).values
        t1 = np.array([ms.expectation(g).real for g in stokes_vector_operators(n_photons)])
        return t2.real - np.outer(t1, t1)
    total = np.zeros((3, 3))
    for n, p, ms in block.blocks:
        total += p * covariance_matrix(BlockDiagonalState.single(ms), n_photons=n)
    return total


def variance_sum(state) -> float:
    """Sum of the three generator variances of the full state."""
    block = as_block_diagonal(state)
    first = stokes_vector_mean(block)
    second = np.zeros(3)
    for n, p, ms in block.blocks:
        gens = stokes_vector_operators(n)
        second += p * np.array([ms.expectation(g @ g).real for g in gens])
    return float(second.sum() - (first**2).sum())


def uncertainty_bounds(state) -> tuple[float, float]:
    """(lower, upper) bounds that the variance sum must satisfy."""
    block = as_block_diagonal(state)
    lower = 2.0 * block.mean_photon_number()
    upper = sum(p * n * (n + 2) for n, p, _ in block.blocks)
    return float(lower), float(upper)


# ---------------------------------------------------------------------------
# Tensor assembly from moment components


def assemble_tensor_order2(components: MomentComponents, first_order: PolarizationTensor) -> PolarizationTensor:
    """Second-rank tensor from its components and the first-order Stokes vector.

    Diagonal entries are the pure-class components; each off-diagonal pair
    splits its class evenly with the commutator supplying the imaginary
    part.
    """
    if components.order != 2 or first_order.order != 1:
        raise ValueError("need order-2 components and an order-1 tensor")
    m = components.values
    s1, s2, s3 = (first_order.element((j,)).real for j in (1, 2, 3))
    values = np.array(
        [
            [m[(2, 0)], m[(1, 1)] / 2 + 1j * s3, m[(1, 0)] / 2 - 1j * s2],
            [m[(1, 1)] / 2 - 1j * s3, m[(0, 2)], m[(0, 1)] / 2 + 1j * s1],
            [m[(1, 0)] / 2 + 1j * s2, m[(0, 1)] / 2 - 1j * s1, m[(0, 0)]],
        ]
    )
    return PolarizationTensor(2, components.n_photons, values)


def assemble_tensor_order3(components: MomentComponents, second_order: PolarizationTensor) -> PolarizationTensor:
    """Third-rank tensor from its components and the full second-order tensor."""
    if components.order != 3 or second_order.order != 2:
        raise ValueError("need order-3 components and an order-2 tensor")
    m = components.values
    t = lambda i, j: second_order.element((i, j))
    d = np.empty((3, 3, 3), dtype=complex)
    d[0, 0, 0] = m[(3, 0)]
    d[0, 0, 1] = (m[(2, 1)] + 4j * t(1, 3) + 2j * t(3, 1)) / 3
    d[0, 0, 2] = (m[(2, 0)] - 4j * t(1, 2) - 2j * t(2, 1)) / 3
    d[0, 1, 0] = (m[(2, 1)] - 2j * t(1, 3) + 2j * t(3, 1)) / 3
    d[0, 1, 1] = (m[(1, 2)] + 2j * t(2, 3) + 4j * t(3, 2)) / 3
    d[0, 1, 2] = m[(1, 1)] / 6 + 1j * t(1, 1) - 1j * t(2, 2) + 1j * t(3, 3)
    d[0, 2, 0] = (m[(2, 0)] + 2j * t(1, 2) - 2j * t(2, 1)) / 3
    d[0, 2, 1] = m[(1, 1)] / 6 - 1j * t(1, 1) - 1j * t(2, 2) + 1j * t(3, 3)
    d[0, 2, 2] = (m[(1, 0)] - 2j * t(3, 2) - 4j * t(2, 3)) / 3
    d[1, 0, 0] = (m[(2, 1)] - 2j * t(1, 3) - 4j * t(3, 1)) / 3
    d[1, 0, 1] = (m[(1, 2)] + 2j * t(2, 3) - 2j * t(3, 2)) / 3
    d[1, 0, 2] = m[(1, 1)] / 6 + 1j * t(1, 1) - 1j * t(2, 2) - 1j * t(3, 3)
    d[1, 1, 0] = (m[(1, 2)] - 4j * t(2, 3) - 2j * t(3, 2)) / 3
    d[1, 1, 1] = m[(0, 3)]
    d[1, 1, 2] = (m[(0, 2)] + 4j * t(2, 1) + 2j * t(1, 2)) / 3
    d[1, 2, 0] = m[(1, 1)] / 6 + 1j * t(1, 1) + 1j * t(2, 2) - 1j * t(3, 3)
    d[1, 2, 1] = (m[(0, 2)] - 2j * t(2, 1) + 2j * t(1, 2)) / 3
    d[1, 2, 2] = (m[(0, 1)] + 2j * t(3, 1) + 4j * t(1, 3)) / 3
    d[2, 0, 0] = (m[(2, 0)] + 2j * t(1, 2) + 4j * t(2, 1)) / 3
    d[2, 0, 1] = m[(1, 1)] / 6 - 1j * t(1, 1) + 1j * t(2, 2) + 1j * t(3, 3)
    d[2, 0, 2] = (m[(1, 0)] - 2j * t(3, 2) + 2j * t(2, 3)) / 3
    d[2, 1, 0] = m[(1, 1)] / 6 - 1j * t(1, 1) + 1j * t(2, 2) - 1j * t(3, 3)
    d[2, 1, 1] = (m[(0, 2)] - 2j * t(2, 1) - 4j * t(1, 2)) / 3
    d[2, 1, 2] = (m[(0, 1)] + 2j * t(3, 1) - 2j * t(1, 3)) / 3
    d[2, 2, 0] = (m[(1, 0)] + 4j * t(3, 2) + 2j * t(2, 3)) / 3
    d[2, 2, 1] = (m[(0, 1)] - 4j * t(3, 1) - 2j * t(1, 3)) / 3
    d[2, 2, 2] = m[(0, 0)]
    return PolarizationTensor(3, components.n_photons, d)


def assemble_tensor(components: MomentComponents, lower_tensors) -> PolarizationTensor:
    """General rank-r assembly from components plus all lower tensors.

    Within each permutation class the pairwise differences are fixed by
    commutator reductions against lower orders, so the class sum pins every
    element.  lower_tensors maps order -> ndarray for orders 1..r-1.
    """
    r = components.order
    arrays = {q: np.asarray(t.values if isinstance(t, PolarizationTensor) else t) for q, t in lower_tensors.items()}
    values = np.zeros((3,) * r, dtype=complex)
    for ones, twos in component_classes(r):
        words = wordalg.class_words(ones, twos, r)
        offsets = {
            w: wordalg.evaluate_terms(wordalg.lower_order_terms(w), arrays) for w in words
        }
        base = (components.values[(ones, twos)] - sum(offsets.values())) / len(words)
        for w in words:
            values[tuple(j - 1 for j in w)] = base + offsets[w]
    tensor = PolarizationTensor(r, components.n_photons, values)
    dev = tensor.check_hermiticity()
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    if dev > 1e-9 * scale:
        raise TensorConsistencyError(f"assembled order-{r} tensor breaks Hermiticity by {dev:.3e}")
    return tensor
