"""Simulated direction measurements and order-by-order sector reconstruction.

One measurement setting fixes a direction on the polarization sphere; each
shot draws a joint outcome (total photon number, difference eigenvalue).
Per-manifold moment estimates feed a constrained linear inversion for the
moment components, tensors are assembled order by order, and each manifold
density matrix is recovered by linear inversion with a physicality
projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import wordalg
from .errors import NonPhysicalStateError, RankDeficientError, StokesLabError
from .fock import Direction, as_direction, stokes_in_direction, stokes_vector_operators
from .moments import (
    DEFAULT_ORDER_CAP,
    MomentComponents,
    PolarizationTensor,
    assemble_tensor,
    component_classes,
    independent_moment_count,
    moment_component_count,
)
from .states import BlockDiagonalState, ManifoldState, as_block_diagonal

RANK_TOL = 1e-12
PHILOX_KEY_BOUND = 1 << 128


# ---------------------------------------------------------------------------
# Measurement simulation


@dataclass(frozen=True)
class MeasurementSetting:
    """One measurement direction with a shot budget and its own RNG key."""

    direction: Direction
    shots: int
    seed: int

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if not 0 <= self.seed < PHILOX_KEY_BOUND:
            raise ValueError("seed must fit a 128-bit counter-based RNG key")

    def euler_angles(self):
        return self.direction.euler_angles()


@dataclass(frozen=True)
class MeasurementRecord:
    """Empirical counts over joint (photon number, eigenvalue) outcomes."""

    setting: MeasurementSetting
    counts: dict  # (n_photons, eigenvalue) -> int

    def __post_init__(self):
        total = 0
        for (n, s), c in self.counts.items():
            if c < 0:
                raise ValueError("counts must be non-negative")
            if (n - s) % 2 or abs(s) > n:
                raise ValueError(f"outcome ({n}, {s}) is impossible")
            total += c
        if total != self.setting.shots:
            raise ValueError(f"counts total {total} differs from shots {self.setting.shots}")

    def manifold_totals(self) -> dict:
        out: dict[int, int] = {}
        for (n, _), c in self.counts.items():
            out[n] = out.get(n, 0) + c
        return out


def outcome_distribution(state, n) -> dict:
    """Joint law over (photon number, difference eigenvalue) for one direction.

    Per manifold the probabilities come from the eigendecomposition of the
    directional operator; eigenvalues are snapped to the exact grid N-2k.
    """
    direction = as_direction(n)
    block = as_block_diagonal(state)
    dist: dict[tuple[int, int], float] = {}
    for n_photons, p, ms in block.blocks:
        if n_photons == 0:
            dist[(0, 0)] = dist.get((0, 0), 0.0) + p
            continue
        op = stokes_in_direction(direction, n_photons)
        evals, evecs = np.linalg.eigh(op)
        rho = ms.density()
        for idx in range(n_photons + 1):
            s = int(round(evals[idx]))
            v = evecs[:, idx]
            prob = float((v.conj() @ rho @ v).real)
            if prob < 0.0:
                prob = 0.0
            dist[(n_photons, s)] = dist.get((n_photons, s), 0.0) + p * prob
    total = sum(dist.values())
    return {k: v / total for k, v in dist.items() if v > 0.0}


def distribution_moment(distribution: dict, order: int, n_photons: int) -> float | None:
    """Manifold-conditioned moment of the eigenvalue, or None if unpopulated."""
    weight = sum(p for (n, _), p in distribution.items() if n == n_photons)
    if weight <= 0.0:
        return None
    return sum(p * s**order for (n, s), p in distribution.items() if n == n_photons) / weight


def simulate_measurement(state, setting: MeasurementSetting) -> MeasurementRecord:
    """Draw i.i.d. joint outcomes with a counter-based generator.

    Shot i consumes the i-th uniform variate of a Philox stream keyed by
    the setting seed, so any worker partition of the shot range reproduces
    the same record.
    """
    dist = outcome_distribution(state, setting.direction)
    outcomes = sorted(dist)
    probs = np.array([dist[o] for o in outcomes])
    edges = np.cumsum(probs)
    edges[-1] = 1.0
    gen = np.random.Generator(np.random.Philox(key=setting.seed))
    draws = gen.random(setting.shots)
    idx = np.searchsorted(edges, draws, side="right")
    counts = np.bincount(idx, minlength=len(outcomes))
    return MeasurementRecord(
        setting, {o: int(c) for o, c in zip(outcomes, counts) if c > 0}
    )


class MomentEstimate(NamedTuple):
    value: float
    standard_error: float


@dataclass(frozen=True)
class EmpiricalMoments:
    """Sample moments per manifold and order, with plug-in standard errors."""

    shots: int
    manifold_probabilities: dict  # n_photons -> MomentEstimate
    moments: dict  # (n_photons, order) -> MomentEstimate

    def moment(self, n_photons: int, order: int) -> MomentEstimate | None:
        return self.moments.get((n_photons, order))


def estimate_moments(record: MeasurementRecord, orders) -> EmpiricalMoments:
    """Per-manifold sample moments of the measured eigenvalue.

    Manifolds with no counts yield no estimates (undefined, not zero).
    """
    orders = sorted(set(int(r) for r in orders))
    if any(r < 0 for r in orders):
        raise ValueError("orders must be non-negative")
    shots = record.setting.shots
    totals = record.manifold_totals()
    probs = {}
    moments = {}
    for n, tot in sorted(totals.items()):
        p_hat = tot / shots
        probs[n] = MomentEstimate(p_hat, math.sqrt(p_hat * (1.0 - p_hat) / shots))
        values = np.array([s for (nn, s) in record.counts if nn == n], dtype=float)
        weights = np.array([record.counts[(n, int(s))] for s in values], dtype=float)
        for r in orders:
            powered = values**r
            mean = float(powered @ weights / tot)
            second = float((powered**2) @ weights / tot)
            var = max(second - mean * mean, 0.0)
            moments[(n, r)] = MomentEstimate(mean, math.sqrt(var / tot))
    return EmpiricalMoments(shots, probs, moments)


# ---------------------------------------------------------------------------
# Measurement directions


@dataclass(frozen=True)
class DirectionSet:
    """A labelled list of measurement lines with provenance tags."""

    label: str
    order: int
    directions: tuple
    tags: tuple = ()
    rank_deficient: bool = False

    def arrays(self):
        return [d.as_array() for d in self.directions]


def axes_directions() -> DirectionSet:
    dirs = tuple(Direction.from_vector(v) for v in np.eye(3))
    return DirectionSet("coordinate-axes", 1, dirs, tags=("uniform lines",))


def icosahedral_directions() -> DirectionSet:
    """The five lines maximizing the minimal pairwise angle; exact surds."""
    golden = 1.0 + math.sqrt(5.0)
    norm = math.sqrt(10.0 + 2.0 * math.sqrt(5.0))
    raw = [
        (0.0, 2.0, golden),
        (0.0, -2.0, golden),
        (2.0, golden, 0.0),
        (-2.0, golden, 0.0),
        (golden, 0.0, 2.0),
    ]
    dirs = tuple(Direction(x / norm, y / norm, z / norm) for x, y, z in raw)
    return DirectionSet("icosahedral-five", 2, dirs, tags=("max-min-angle lines",))


def _diagonal_lines() -> tuple[Direction, ...]:
    r3 = math.sqrt(3.0)
    return (
        Direction(1 / r3, 1 / r3, 1 / r3),
        Direction(-1 / r3, 1 / r3, 1 / r3),
        Direction(1 / r3, -1 / r3, 1 / r3),
        Direction(-1 / r3, -1 / r3, 1 / r3),
    )


def third_order_symmetric_directions() -> DirectionSet:
    """Axes plus the four cube diagonals: maximally spread seven lines.

    Kept for reference and failure reproduction: the third powers along the
    axes are linear combinations of the diagonal ones, so the design only
    carries four independent measurements.
    """
    dirs = tuple(Direction.from_vector(v) for v in np.eye(3)) + _diagonal_lines()
    return DirectionSet(
        "symmetric-seven", 3, dirs, tags=("max-min-angle lines",), rank_deficient=True
    )


# Derived once by derive_third_order_fallback() and frozen for bit-stable output.
_FALLBACK_AXES = (
    (0.8734821795775402, 0.19911441860296364, 0.4442773123454244),
    (-0.4554249004256072, 0.868261541485753, 0.19674871193761365),
    (-0.1832203258390451, -0.4551765778371658, 0.8713464266225465),
)


def third_order_fallback_directions() -> DirectionSet:
    """Seven third-order lines with a well-conditioned reduced design.

    The four diagonal lines are kept; the three axes are replaced by
    conditioned replacements found by seeded local search (see
    derive_third_order_fallback).
    """
    dirs = tuple(Direction(*v) for v in _FALLBACK_AXES) + _diagonal_lines()
    return DirectionSet("conditioned-seven", 3, dirs, tags=("conditioned fallback",))


def design_matrix(directions, order: int) -> np.ndarray:
    """Rows of direction monomials over the component classes of one order."""
    rows = []
    for d in directions:
        dd = as_direction(d)
        rows.append(
            [dd.x**k * dd.y**l * dd.z ** (order - k - l) for k, l in component_classes(order)]
        )
    return np.array(rows)


def casimir_constraint_matrix(order: int) -> np.ndarray:
    """Coefficient rows coupling the components of one order through the
    squared-total identity; the right-hand sides depend on lower-order data."""
    if order < 2:
        return np.zeros((0, moment_component_count(order)))
    classes = component_classes(order)
    lower = component_classes(order - 2)
    rows = np.zeros((len(lower), len(classes)))
    for i, (k, l) in enumerate(lower):
        for kk, ll in ((k + 2, l), (k, l + 2), (k, l)):
            rows[i, classes.index((kk, ll))] += 1.0 / wordalg.trinomial(kk, ll, order)
    return rows


def constraint_nullspace(order: int) -> np.ndarray:
    """Orthonormal basis of component space consistent with the constraints."""
    b = casimir_constraint_matrix(order)
    if b.shape[0] == 0:
        return np.eye(moment_component_count(order))
    _, sv, vt = np.linalg.svd(b)
    if sv.min() < 1e-10:
        raise StokesLabError("order-coupling constraints are unexpectedly degenerate")
    return vt[b.shape[0] :].T


def reduced_design_singular_values(directions, order: int) -> np.ndarray:
    """Singular values of the design restricted to the free component subspace."""
    a = design_matrix(directions, order)
    return np.linalg.svd(a @ constraint_nullspace(order), compute_uv=False)


def derive_third_order_fallback(seed: int = 0xD1CE, iterations: int = 400, step: float = 0.08):
    """Reproduce the conditioned fallback set.

    Starts from the axes tilted 30 degrees toward their nearest diagonals
    (itself rank-deficient) and locally minimizes the reduced-design
    condition number by seeded random perturbation of the three
    replacement lines.
    """
    diagonals = [d.as_array() for d in _diagonal_lines()]

    def tilt(axis, target, angle):
        perp = target - (target @ axis) * axis
        perp /= np.linalg.norm(perp)
        return math.cos(angle) * axis + math.sin(angle) * perp

    current = [tilt(np.eye(3)[i], diagonals[i], math.pi / 6.0) for i in range(3)]

    def cond(axes):
        sv = reduced_design_singular_values(
            [Direction.from_vector(v, normalize=True) for v in axes] + list(_diagonal_lines()), 3
        )
        if sv[-1] <= sv[0] * RANK_TOL:
            return math.inf
        return sv[0] / sv[-1]

    best = cond(current)
    gen = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(iterations):
        idx = int(gen.integers(0, 3))
        perturbation = gen.normal(size=3) * step
        candidate = [v.copy() for v in current]
        vec = candidate[idx] + perturbation
        candidate[idx] = vec / np.linalg.norm(vec)
        c = cond(candidate)
        if c < best:
            current, best = candidate, c
    return tuple(Direction.from_vector(v, normalize=True) for v in current), best


def generic_directions(order: int, seed: int = 2023, candidates: int = 200) -> DirectionSet:
    """A 2r+1 direction set chosen by condition-number search.

    Not taken from any published construction; provided as an extension for
    orders without a named set and tagged as such.
    """
    n_free = independent_moment_count(order)
    gen = np.random.Generator(np.random.Philox(key=seed + order))
    pool = gen.normal(size=(candidates, 3))
    pool /= np.linalg.norm(pool, axis=1, keepdims=True)
    null = constraint_nullspace(order)

    def cond_of(subset):
        sv = np.linalg.svd(design_matrix(subset, order) @ null, compute_uv=False)
        if sv[-1] <= sv[0] * RANK_TOL:
            return math.inf
        return sv[0] / sv[-1]

    best = None
    best_c = math.inf
    for _ in range(200):
        pick = gen.choice(candidates, size=n_free, replace=False)
        subset = [Direction.from_vector(pool[i], normalize=True) for i in pick]
        c = cond_of(subset)
        if c < best_c:
            best, best_c = subset, c
    return DirectionSet(
        f"generic-{order}", order, tuple(best), tags=("condition-number search", "extension")
    )


def choose_directions(order: int, mode: str = "auto") -> DirectionSet:
    """Measurement lines for one moment order.

    mode "auto" picks the named sets for orders 1..3 (the conditioned
    fallback at order 3) and the generic search beyond; "symmetric7"
    forces the rank-deficient symmetric third-order set.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if mode == "symmetric7":
        if order != 3:
            raise ValueError("the symmetric seven-line set is a third-order set")
        return third_order_symmetric_directions()
    if mode != "auto":
        raise ValueError(f"unknown direction mode {mode!r}")
    if order == 1:
        return axes_directions()
    if order == 2:
        return icosahedral_directions()
    if order == 3:
        return third_order_fallback_directions()
    return generic_directions(order)


# ---------------------------------------------------------------------------
# Moment-component inversion


def closed_form_second_order(measured, n_photons: int | None = None, casimir: float | None = None) -> MomentComponents:
    """Second-order components from the five icosahedral direction moments.

    measured follows icosahedral_directions() order.  casimir defaults to
    N(N+2); pass the measured mean of S0(S0+2) for the photon-number-
    averaged variant.
    """
    v1, v2, v3, v4, v5 = (float(v) for v in measured)
    if casimir is None:
        if n_photons is None:
            raise ValueError("need a manifold or an explicit casimir value")
        casimir = float(n_photons * (n_photons + 2))
    rt5 = math.sqrt(5.0)
    pair12 = v1 + v2
    pair34 = v3 + v4
    den = 4.0 * (7.0 + 3.0 * rt5)
    values = {
        (0, 1): rt5 / 2.0 * (v1 - v2),
        (1, 1): rt5 / 2.0 * (v3 - v4),
        (1, 0): rt5 / 2.0 * (pair12 + pair34 + 2.0 * v5) - rt5 * casimir,
        (0, 0): ((15 + 7 * rt5) * pair12 - (10 + 4 * rt5) * pair34 + (6 + 2 * rt5) * casimir) / den,
        (0, 2): ((10 + 4 * rt5) * pair12 + (25 + 11 * rt5) * pair34 - (14 + 6 * rt5) * casimir) / den,
        (2, 0): ((36 + 16 * rt5) * casimir - (25 + 11 * rt5) * pair12 - (15 + 7 * rt5) * pair34) / den,
    }
    return MomentComponents(2, n_photons, values)


@dataclass(frozen=True)
class SolveDiagnostics:
    condition_number: float
    residual: float
    rank: int
    n_free: int


def _constraint_rhs(order: int, n_photons: int, lower_arrays: dict) -> np.ndarray:
    """Right-hand sides of the order-coupling constraints from lower tensors."""
    lower = component_classes(order - 2)
    rhs = np.zeros(len(lower))
    for i, (k, l) in enumerate(lower):
        if order - 2 == 0:
            base = 1.0 + 0j
        else:
            base = wordalg.evaluate_word(wordalg.standard_word(k, l, order - 2), lower_arrays)
        value = n_photons * (n_photons + 2) * base
        scale = max(1.0, abs(value))
        commutator_part, magnitude = wordalg.evaluate_terms_with_magnitude(
            wordalg.commutator_with_square_terms(k, l, order), lower_arrays
        )
        value += commutator_part
        scale = max(scale, magnitude)
        # move the ordering corrections of each class onto the known side
        for kk, ll in ((k + 2, l), (k, l + 2), (k, l)):
            correction = 0.0 + 0j
            for w in wordalg.class_words(kk, ll, order):
                part, magnitude = wordalg.evaluate_terms_with_magnitude(
                    wordalg.lower_order_terms(w), lower_arrays
                )
                correction += part
                scale = max(scale, magnitude)
            value += correction / wordalg.trinomial(kk, ll, order)
        # imaginary parts cancel identically; residue scales with the summands
        if abs(value.imag) > 1e-9 * scale:
            raise StokesLabError(f"constraint ({k},{l}) has imaginary residue {value.imag:.3e}")
        rhs[i] = value.real
    return rhs


def solve_moment_components(
    directions,
    measured,
    n_photons: int,
    order: int,
    lower_tensors: dict | None = None,
) -> tuple[MomentComponents, SolveDiagnostics]:
    """Least-squares inversion of direction moments for one order.

    The order-coupling constraints are substituted (the unknown vector is
    parameterized on their null space), reducing the problem to 2r+1 free
    unknowns.  Orders of three and above need the lower tensors to value
    the constraint right-hand sides.  A numerically rank-deficient reduced
    design raises RankDeficientError naming the unresolved component
    combinations.
    """
    dirs = [as_direction(d) for d in directions]
    values = np.asarray([float(v) for v in measured])
    if len(dirs) != len(values):
        raise ValueError("one measured moment per direction required")
    n_free = independent_moment_count(order)
    a = design_matrix(dirs, order)
    if order >= 2:
        lower_arrays = {}
        if order > 2:
            if lower_tensors is None:
                raise ValueError("orders above two need the lower-order tensors")
            for q in range(1, order):
                if q not in lower_tensors:
                    raise ValueError(f"missing lower tensor of order {q}")
            lower_arrays = {
                q: np.asarray(t.values if isinstance(t, PolarizationTensor) else t)
                for q, t in lower_tensors.items()
            }
        b = casimir_constraint_matrix(order)
        rhs = _constraint_rhs(order, n_photons, lower_arrays)
        particular, *_ = np.linalg.lstsq(b, rhs, rcond=None)
        null = constraint_nullspace(order)
    else:
        particular = np.zeros(moment_component_count(order))
        null = np.eye(moment_component_count(order))
    reduced = a @ null
    u, sv, vt = np.linalg.svd(reduced, full_matrices=False)
    rank = int((sv > sv[0] * RANK_TOL).sum()) if sv.size else 0
    condition = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else math.inf
    if rank < n_free:
        deficient = (null @ vt[rank:].T).T
        raise RankDeficientError(
            f"order-{order} design resolves only {rank} of {n_free} component combinations",
            rank=rank,
            expected=n_free,
            condition_number=condition,
            deficient_directions=deficient,
        )
    target = values - a @ particular
    solution = vt.T @ ((u.T @ target) / sv)
    x = particular + null @ solution
    residual = float(np.linalg.norm(reduced @ solution - target))
    components = MomentComponents(
        order, n_photons, dict(zip(component_classes(order), x))
    )
    return components, SolveDiagnostics(condition, residual, rank, n_free)


def assemble_all_tensors(components_by_order: dict, n_photons: int) -> dict:
    """Tensors for every order present, assembled in increasing order.

    Order one is the component vector itself; each further order
    distributes its classes with commutator differences from the tensor
    below.
    """
    tensors: dict[int, PolarizationTensor] = {}
    for order in sorted(components_by_order):
        comp = components_by_order[order]
        if order == 1:
            vec = np.array([comp[(1, 0)], comp[(0, 1)], comp[(0, 0)]], dtype=complex)
            tensors[1] = PolarizationTensor(1, n_photons, vec)
        else:
            missing = [q for q in range(1, order) if q not in tensors]
            if missing:
                raise ValueError(f"cannot assemble order {order}; missing orders {missing}")
            tensors[order] = assemble_tensor(comp, tensors)
    return tensors


# ---------------------------------------------------------------------------
# Density-matrix reconstruction


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    return 0.5 * float(np.abs(np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))).sum())


@dataclass(frozen=True)
class ReconstructionDiagnostics:
    system_rank: int
    lstsq_residual: float
    min_eigenvalue: float
    projection_distance: float


def project_to_physical(matrix: np.ndarray) -> tuple[np.ndarray, ReconstructionDiagnostics]:
    """Clip negative eigenvalues and renormalize the trace to one."""
    hermitian = (matrix + matrix.conj().T) / 2.0
    evals, evecs = np.linalg.eigh(hermitian)
    clipped = np.clip(evals, 0.0, None)
    total = clipped.sum()
    if total <= 0.0:
        raise NonPhysicalStateError("reconstruction collapsed to the zero matrix")
    projected = (evecs * (clipped / total)) @ evecs.conj().T
    diag = ReconstructionDiagnostics(
        system_rank=-1,
        lstsq_residual=0.0,
        min_eigenvalue=float(evals.min()),
        projection_distance=trace_distance(hermitian, projected),
    )
    return projected, diag


def reconstruct_density(tensors: dict, n_photons: int) -> tuple[ManifoldState, ReconstructionDiagnostics]:
    """Invert the complete tensor set of one manifold to its density matrix.

    The spanning operator family is the identity plus all standard-ordered
    products of orders up to the photon number; their expectations are the
    corresponding sorted-word tensor entries.  The linear system is solved
    by least squares, then the estimate is projected onto the physical
    cone.
    """
    if n_photons == 0:
        state = ManifoldState.mixed(0, np.array([[1.0 + 0j]]))
        return state, ReconstructionDiagnostics(1, 0.0, 1.0, 0.0)
    for q in range(1, n_photons + 1):
        if q not in tensors:
            raise ValueError(f"missing tensor of order {q}")
    dim = n_photons + 1
    gens = stokes_vector_operators(n_photons)
    rows = [np.eye(dim, dtype=complex).T.reshape(-1)]
    rhs = [1.0 + 0j]
    arrays = {
        q: np.asarray(t.values if isinstance(t, PolarizationTensor) else t)
        for q, t in tensors.items()
    }
    for order in range(1, n_photons + 1):
        for k, l in component_classes(order):
            word = wordalg.standard_word(k, l, order)
            rows.append(wordalg.word_matrix(word, gens).T.reshape(-1))
            rhs.append(wordalg.evaluate_word(word, arrays))
    a = np.array(rows)
    b = np.array(rhs)
    rank = int(np.linalg.matrix_rank(a, tol=1e-8))
    if rank < dim * dim:
        raise StokesLabError(
            f"ordered products span only {rank} of {dim * dim} dimensions on manifold {n_photons}"
        )
    solution, residuals, _, _ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ solution - b))
    raw = solution.reshape(dim, dim)
    projected, proj_diag = project_to_physical(raw)
    diagnostics = ReconstructionDiagnostics(
        system_rank=rank,
        lstsq_residual=residual,
        min_eigenvalue=proj_diag.min_eigenvalue,
        projection_distance=proj_diag.projection_distance,
    )
    return ManifoldState.mixed(n_photons, projected), diagnostics


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass(frozen=True)
class ManifoldReconstruction:
    n_photons: int
    probability: float
    probability_error: float
    components: dict  # order -> MomentComponents
    tensors: dict  # order -> PolarizationTensor
    state: ManifoldState
    solve_diagnostics: dict  # order -> SolveDiagnostics
    reconstruction: ReconstructionDiagnostics


@dataclass(frozen=True)
class ReconstructionResult:
    manifolds: dict  # n_photons -> ManifoldReconstruction
    skipped: dict = field(default_factory=dict)  # n_photons -> reason
    shots: int | None = None
    seed: int | None = None
    records: tuple = ()

    def state(self) -> BlockDiagonalState:
        """The reconstructed polarization sector (probabilities renormalized)."""
        blocks = []
        for n, rec in sorted(self.manifolds.items()):
            if rec.probability > 0.0:
                blocks.append((n, rec.probability, rec.state))
        total = sum(p for _, p, _ in blocks)
        return BlockDiagonalState(tuple((n, p / total, s) for n, p, s in blocks))


def _setting_seed(base_seed: int, index: int) -> int:
    # disjoint Philox keys per setting; base seed must fit 64 bits
    if not 0 <= base_seed < (1 << 64):
        raise ValueError("base seed must fit 64 bits")
    return (base_seed << 32) + index


def run_tomography(
    state,
    shots: int | None = None,
    seed: int = 0,
    direction_mode: str = "auto",
    max_order: int | None = None,
    min_counts: int = 10,
) -> ReconstructionResult:
    """Measure, invert, assemble and reconstruct every populated manifold.

    shots=None runs the exact-moment mode (no sampling).  Each unique
    direction is measured once; per-manifold moment orders run from one to
    the photon number.  Full reconstruction of a manifold needs all orders
    up to its photon number, so manifolds beyond the order cap (default 6,
    where dense tensors stay cheap) are skipped with a reason, as are
    manifolds whose records hold fewer than min_counts samples.
    """
    block = as_block_diagonal(state)
    populated = list(block.manifolds)
    if not populated:
        raise ValueError("state has no populated manifolds")

    order_cap = DEFAULT_ORDER_CAP if max_order is None else max_order
    deep_manifolds = {n for n in populated if n > order_cap}
    populated = [n for n in populated if n <= order_cap]

    def orders_for(n):
        return min(n, order_cap)

    if not populated:
        raise ValueError("every populated manifold exceeds the order cap")
    top_order = max(orders_for(n) for n in populated)
    sets = {
        r: choose_directions(r, mode=direction_mode if r == 3 else "auto")
        for r in range(1, top_order + 1)
    }
    unique: list[Direction] = []
    seen = set()
    for r in sorted(sets):
        for d in sets[r].directions:
            key = (d.x, d.y, d.z)
            if key not in seen:
                seen.add(key)
                unique.append(d)
    if not unique:
        # vacuum-only input: one setting still pins the photon distribution
        unique.append(Direction(0.0, 0.0, 1.0))

    records = []
    estimates = {}
    manifold_counts: dict[int, int] = {}
    if shots is None:
        distributions = {(d.x, d.y, d.z): outcome_distribution(block, d) for d in unique}
        probabilities = {n: block.probability(n) for n in populated}
        prob_errors = {n: 0.0 for n in populated}
        manifold_counts = {n: None for n in populated}
    else:
        total_by_manifold: dict[int, int] = {}
        for i, d in enumerate(unique):
            setting = MeasurementSetting(d, shots, _setting_seed(seed, i))
            record = simulate_measurement(block, setting)
            records.append(record)
            emp = estimate_moments(record, range(0, top_order + 1))
            estimates[(d.x, d.y, d.z)] = emp
            for n, c in record.manifold_totals().items():
                total_by_manifold[n] = total_by_manifold.get(n, 0) + c
        grand_total = shots * len(unique)
        probabilities = {n: c / grand_total for n, c in total_by_manifold.items()}
        prob_errors = {
            n: math.sqrt(p * (1 - p) / grand_total) for n, p in probabilities.items()
        }
        manifold_counts = total_by_manifold

    def measured_moment(direction: Direction, n_photons: int, order: int):
        key = (direction.x, direction.y, direction.z)
        if shots is None:
            return distribution_moment(distributions[key], order, n_photons)
        est = estimates[key].moment(n_photons, order)
        return None if est is None else est.value

    results = {}
    skipped = {
        n: f"photon number exceeds the order cap {order_cap}; raise max_order"
        for n in sorted(deep_manifolds)
    }
    for n in sorted(populated):
        if shots is not None and manifold_counts.get(n, 0) < min_counts:
            skipped[n] = f"only {manifold_counts.get(n, 0)} samples across settings"
            continue
        if n == 0:
            state0, diag0 = reconstruct_density({}, 0)
            results[0] = ManifoldReconstruction(
                0, probabilities.get(0, 0.0), prob_errors.get(0, 0.0), {}, {}, state0, {}, diag0
            )
            continue
        orders = range(1, orders_for(n) + 1)
        components = {}
        tensors: dict[int, PolarizationTensor] = {}
        diagnostics = {}
        failed = None
        for r in orders:
            dset = sets[r]
            values = []
            for d in dset.directions:
                v = measured_moment(d, n, r)
                if v is None:
                    failed = f"no samples for manifold {n} along {dset.label}"
                    break
                values.append(v)
            if failed:
                break
            comp, diag = solve_moment_components(
                dset.directions, values, n, r, lower_tensors=tensors if r > 2 else None
            )
            components[r] = comp
            diagnostics[r] = diag
            tensors.update(assemble_all_tensors({q: components[q] for q in components}, n))
        if failed:
            skipped[n] = failed
            continue
        rho, rec_diag = reconstruct_density(tensors, n)
        results[n] = ManifoldReconstruction(
            n,
            probabilities.get(n, 0.0),
            prob_errors.get(n, 0.0),
            components,
            tensors,
            rho,
            diagnostics,
            rec_diag,
        )
    return ReconstructionResult(
        manifolds=results,
        skipped=skipped,
        shots=shots,
        seed=None if shots is None else seed,
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# Non-resolved photon numbers (support limited to at most two photons)


@dataclass(frozen=True)
class LowExcitationMoments:
    """Per-manifold data recovered from photon-number-averaged moments."""

    probabilities: tuple  # (p0, p1, p2)
    single_photon_first: float | None
    two_photon_first: float | None
    two_photon_second: float | None


def non_resolved_manifold_moments(
    s0_mean: float,
    s0_sq_mean: float,
    first: float,
    second: float,
    third: float,
    tol: float = 1e-9,
) -> LowExcitationMoments:
    """Recover per-manifold direction moments without photon resolution.

    The caller asserts that the state has support on at most two photons;
    inferred probabilities outside [0, 1] beyond tolerance flag a
    violation.  Manifolds with zero weight return None entries (undefined,
    following the sum convention for empty manifolds).
    """
    p1 = 2.0 * s0_mean - s0_sq_mean
    p2 = (s0_sq_mean - s0_mean) / 2.0
    p0 = 1.0 - p1 - p2
    for name, p in (("p0", p0), ("p1", p1), ("p2", p2)):
        if p < -tol or p > 1.0 + tol:
            raise NonPhysicalStateError(
                f"inferred {name} = {p:.6g}; support is not limited to two photons"
            )
    p0, p1, p2 = (min(max(p, 0.0), 1.0) for p in (p0, p1, p2))
    single_first = None
    if p1 > tol:
        single_first = (4.0 * first - third) / (6.0 * s0_mean - 3.0 * s0_sq_mean)
    two_first = None
    two_second = None
    if p2 > tol:
        # the odd-moment split needs the pair weight restored explicitly
        two_first = 2.0 * (third - first) / (3.0 * (s0_sq_mean - s0_mean))
        two_second = 2.0 * (second + s0_sq_mean - 2.0 * s0_mean) / (s0_sq_mean - s0_mean)
    return LowExcitationMoments((p0, p1, p2), single_first, two_first, two_second)


def averaged_second_order_components(measured, s0_mean: float, s0_sq_mean: float) -> MomentComponents:
    """Averaged second-order components from the five icosahedral moments.

    Knowing the mean and second moment of the total photon number fixes the
    averaged squared-total value and removes the second-order redundancy.
    """
    return closed_form_second_order(measured, n_photons=None, casimir=s0_sq_mean + 2.0 * s0_mean)
