"""Uniformly elliptic operators F and the heat-type operator H(u) = F(D²u) - ∂ₜu.

This module provides:
1. Operator kinds: linear, Bellman (sup or inf over a coefficient family), Pucci extremal
2. Pointwise evaluation of F and H on symmetric matrices (scalar or batched)
3. Randomized checks of the structural hypotheses (H0) F(0)=0, (H1) Pucci sandwich, (H2) convexity
4. The half-space coefficient γ with F(γ e⊗e) = 1
5. Axis-aligned Bellman nets approximating the Pucci sup for the grid solver
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

logger = logging.getLogger(__name__)

ALGEBRAIC_TOL = 1e-12


class OperatorKind(str, Enum):
    """Supported forms of F."""
    LINEAR = "linear"
    BELLMAN = "bellman"            # max_j trace(A_j M)
    BELLMAN_MIN = "bellman_min"    # min_j trace(A_j M)
    PUCCI_PLUS = "pucci_plus"
    PUCCI_MINUS = "pucci_minus"


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric n×n matrix stored as its upper triangle (row-major).

    n=1: (m11,); n=2: (m11, m12, m22).
    """
    n: int
    upper: tuple[float, ...]

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"SymMatrix supports n in {{1, 2}}, got {self.n}")
        expected = self.n * (self.n + 1) // 2
        if len(self.upper) != expected:
            raise ValueError(f"SymMatrix(n={self.n}) needs {expected} entries, got {len(self.upper)}")

    @classmethod
    def from_array(cls, a) -> 'SymMatrix':
        """Build from a square array; only the upper triangle is read."""
        arr = np.asarray(a, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        n = arr.shape[0]
        rows, cols = np.triu_indices(n)
        return cls(n=n, upper=tuple(float(v) for v in arr[rows, cols]))

    @classmethod
    def zeros(cls, n: int) -> 'SymMatrix':
        return cls(n=n, upper=(0.0,) * (n * (n + 1) // 2))

    @classmethod
    def identity(cls, n: int) -> 'SymMatrix':
        return cls.from_array(np.eye(n))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        rows, cols = np.triu_indices(self.n)
        out[rows, cols] = self.upper
        out[cols, rows] = self.upper
        return out


MatrixLike = Union[SymMatrix, np.ndarray, float]


@dataclass(frozen=True, eq=False)
class Operator:
    """A (λ₀, λ₁)-elliptic operator F acting on symmetric n×n matrices.

    Construction checks structure only (shapes, symmetry, λ₀ ≤ λ₁, non-empty family).
    Whether the declared ellipticity constants are honest is the job of `validate`.

    `dilation` R turns F into F_R(M) = F(R²M)/R² (see poly_ladder.normalize).
    """
    kind: OperatorKind
    lambda0: float
    lambda1: float
    n: int
    matrices: tuple[np.ndarray, ...] = field(default=())
    dilation: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"Only n in {{1, 2}} spatial dimensions are supported, got {self.n}")
        if not (self.lambda0 > 0 and self.lambda1 > 0):
            raise ValueError(f"Ellipticity constants must be positive (lambda0={self.lambda0}, lambda1={self.lambda1})")
        if self.lambda0 > self.lambda1:
            raise ValueError(f"lambda0 ({self.lambda0}) must not exceed lambda1 ({self.lambda1})")
        if self.dilation <= 0:
            raise ValueError(f"dilation must be positive, got {self.dilation}")

        frozen = []
        for a in self.matrices:
            arr = np.array(a, dtype=float).reshape(self.n, self.n)
            if not np.allclose(arr, arr.T, atol=0.0, rtol=0.0):
                raise ValueError(f"Coefficient matrix is not symmetric:\n{arr}")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "matrices", tuple(frozen))

        if self.kind == OperatorKind.LINEAR and len(self.matrices) != 1:
            raise ValueError("A linear operator needs exactly one coefficient matrix")
        if self.kind in (OperatorKind.BELLMAN, OperatorKind.BELLMAN_MIN) and not self.matrices:
            raise ValueError("A Bellman operator needs a non-empty coefficient family")
        if self.kind in (OperatorKind.PUCCI_PLUS, OperatorKind.PUCCI_MINUS) and self.matrices:
            raise ValueError("Pucci operators take no coefficient matrices")

    @classmethod
    def linear(cls, a, lambda0: float, lambda1: float) -> 'Operator':
        arr = np.atleast_2d(np.asarray(a, dtype=float))
        return cls(OperatorKind.LINEAR, lambda0, lambda1, arr.shape[0], (arr,))

    @classmethod
    def bellman(cls, family, lambda0: float, lambda1: float, sense: str = "max") -> 'Operator':
        arrs = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in family)
        if not arrs:
            raise ValueError("A Bellman operator needs a non-empty coefficient family")
        kind = OperatorKind.BELLMAN if sense == "max" else OperatorKind.BELLMAN_MIN
        return cls(kind, lambda0, lambda1, arrs[0].shape[0], arrs)

    @classmethod
    def pucci_plus(cls, lambda0: float, lambda1: float, n: int) -> 'Operator':
        return cls(OperatorKind.PUCCI_PLUS, lambda0, lambda1, n)

    @classmethod
    def pucci_minus(cls, lambda0: float, lambda1: float, n: int) -> 'Operator':
        return cls(OperatorKind.PUCCI_MINUS, lambda0, lambda1, n)

    @property
    def is_convex(self) -> bool:
        return self.kind in (OperatorKind.LINEAR, OperatorKind.BELLMAN, OperatorKind.PUCCI_PLUS)

    @property
    def is_concave(self) -> bool:
        return self.kind in (OperatorKind.LINEAR, OperatorKind.BELLMAN_MIN, OperatorKind.PUCCI_MINUS)

    def with_dilation(self, dilation: float) -> 'Operator':
        """Return F_R(M) = F(R²M)/R² as a new operator (R composes multiplicatively)."""
        return Operator(self.kind, self.lambda0, self.lambda1, self.n, self.matrices,
                        self.dilation * dilation)

    def describe(self) -> str:
        return (f"{self.kind.value}(n={self.n}, lambda0={self.lambda0:g}, lambda1={self.lambda1:g}, "
                f"family={len(self.matrices)}, dilation={self.dilation:g})")


def _as_batch(m: MatrixLike, n: int) -> np.ndarray:
    if isinstance(m, SymMatrix):
        if m.n != n:
            raise ValueError(f"Dimension mismatch: operator n={n}, matrix n={m.n}")
        return m.to_array()
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 0 and n == 1:
        return arr.reshape(1, 1)
    if arr.ndim < 2 or arr.shape[-2:] != (n, n):
        raise ValueError(f"Dimension mismatch: operator n={n}, matrix shape {arr.shape}")
    return arr


def pucci_plus(m: np.ndarray, lambda0: float, lambda1: float) -> np.ndarray:
    """P⁺(M) = λ₁Σeᵢ⁺ - λ₀Σeᵢ⁻ over the eigenvalues of (batched) M."""
    eig = np.linalg.eigvalsh(m)
    return lambda1 * np.clip(eig, 0.0, None).sum(axis=-1) - lambda0 * np.clip(-eig, 0.0, None).sum(axis=-1)


def pucci_minus(m: np.ndarray, lambda0: float, lambda1: float) -> np.ndarray:
    """P⁻(M) = λ₀Σeᵢ⁺ - λ₁Σeᵢ⁻ over the eigenvalues of (batched) M."""
    eig = np.linalg.eigvalsh(m)
    return lambda0 * np.clip(eig, 0.0, None).sum(axis=-1) - lambda1 * np.clip(-eig, 0.0, None).sum(axis=-1)


def _family_values(op: Operator, arr: np.ndarray) -> np.ndarray:
    return np.stack([np.einsum("ij,...ij->...", a, arr) for a in op.matrices], axis=0)


def eval_f(op: Operator, m: MatrixLike):
    """Evaluate F(M).

    Args:
        op: Operator
        m: SymMatrix, an (n, n) array, or a batch of shape (..., n, n)

    Returns:
        float for a single matrix, ndarray of shape (...) for a batch

    Raises:
        ValueError: If the matrix dimension does not match the operator
    """
    arr = _as_batch(m, op.n)
    scale = op.dilation ** 2
    if scale != 1.0:
        arr = arr * scale

    if op.kind == OperatorKind.LINEAR:
        value = np.einsum("ij,...ij->...", op.matrices[0], arr)
    elif op.kind == OperatorKind.BELLMAN:
        value = _family_values(op, arr).max(axis=0)
    elif op.kind == OperatorKind.BELLMAN_MIN:
        value = _family_values(op, arr).min(axis=0)
    elif op.kind == OperatorKind.PUCCI_PLUS:
        value = pucci_plus(arr, op.lambda0, op.lambda1)
    else:
        value = pucci_minus(arr, op.lambda0, op.lambda1)

    if scale != 1.0:
        value = value / scale
    if np.ndim(value) == 0:
        return float(value)
    return value


def eval_h(op: Operator, m: MatrixLike, ut):
    """H = F(M) - ∂ₜu (scalar or batched)."""
    return eval_f(op, m) - ut


def pucci_brute_force(m: np.ndarray, lambda0: float, lambda1: float, points: int = 50) -> tuple[float, float]:
    """Brute-force (P⁻(M), P⁺(M)) over a net of admissible N diagonal in M's eigenbasis.

    trace(NM) = Σ νᵢeᵢ for N = Q diag(ν) Qᵀ, so the net is the product grid of
    `points` values in [λ₀, λ₁] per eigen-direction.
    """
    eig = np.linalg.eigvalsh(np.asarray(m, dtype=float))
    nu = np.linspace(lambda0, lambda1, points)
    grids = np.meshgrid(*([nu] * eig.size), indexing="ij")
    traces = sum(g * e for g, e in zip(grids, eig))
    return float(np.min(traces)), float(np.max(traces))


@dataclass
class HypothesisCheck:
    """Outcome of one structural hypothesis on random samples."""
    name: str
    passed: bool
    margin: float  # worst-case slack, >= -tolerance means pass
    detail: str = ""


@dataclass
class ValidationReport:
    """Result of `validate`."""
    operator: str
    sample_count: int
    seed: int
    checks: list[HypothesisCheck]
    convex: bool
    concave: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [
            f"operator: {self.operator}",
            f"sample_count: {self.sample_count}",
            f"seed: {self.seed}",
        ]
        for c in self.checks:
            lines.append(f"{c.name}: {'pass' if c.passed else 'fail'} (margin {c.margin:.3e}) {c.detail}".rstrip())
        lines.append(f"convex: {self.convex}")
        lines.append(f"concave: {self.concave}")
        lines.append(f"status: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def random_symmetric(rng: np.random.Generator, count: int, n: int, scale: float = 2.0) -> np.ndarray:
    b = rng.normal(scale=scale, size=(count, n, n))
    return 0.5 * (b + np.swapaxes(b, -1, -2))


def validate(op: Operator, sample_count: int = 1000, seed: int = 0) -> ValidationReport:
    """Check (H0)-(H2) on pseudo-random symmetric pairs.

    Failures are report entries, never exceptions.
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be >= 1, got {sample_count}")

    rng = np.random.default_rng(seed)
    p1 = random_symmetric(rng, sample_count, op.n)
    p2 = random_symmetric(rng, sample_count, op.n)

    f0 = eval_f(op, np.zeros((op.n, op.n)))
    h0 = HypothesisCheck("H0", f0 == 0.0, -abs(f0), "F(0) = 0 exactly")

    f1 = np.asarray(eval_f(op, p1))
    f2 = np.asarray(eval_f(op, p2))
    diff = f1 - f2
    lower = diff - pucci_minus(p1 - p2, op.lambda0, op.lambda1)
    upper = pucci_plus(p1 - p2, op.lambda0, op.lambda1) - diff
    h1_margin = float(min(lower.min(), upper.min()))
    h1 = HypothesisCheck("H1", h1_margin >= -ALGEBRAIC_TOL, h1_margin, "Pucci sandwich of increments")

    mid = np.asarray(eval_f(op, 0.5 * (p1 + p2)))
    convex_margin = float((0.5 * (f1 + f2) - mid).min())
    concave_margin = float((mid - 0.5 * (f1 + f2)).min())
    convex = convex_margin >= -ALGEBRAIC_TOL
    concave = concave_margin >= -ALGEBRAIC_TOL
    h2 = HypothesisCheck(
        "H2",
        convex or concave,
        max(convex_margin, concave_margin),
        f"midpoint convexity margin {convex_margin:.3e}, concavity margin {concave_margin:.3e}",
    )

    report = ValidationReport(op.describe(), sample_count, seed, [h0, h1, h2], convex, concave)
    if not report.passed:
        logger.warning(f"Operator {op.describe()} failed validation:\n{report.to_text()}")
    return report


def halfspace_gamma(op: Operator, e) -> float:
    """Find γ with F(γ e⊗e) = 1 by bisection on [1/(2λ₁), 2/λ₀].

    γ ↦ F(γ e⊗e) is strictly increasing under (H1), so the root is unique.

    Raises:
        ValueError: If |e| != 1, the bracket does not straddle the root, or the root
            falls outside [1/λ₁, 1/λ₀] (both signal a dishonest ellipticity declaration)
    """
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.size != op.n:
        raise ValueError(f"Direction has {e.size} components, operator has n={op.n}")
    if abs(np.linalg.norm(e) - 1.0) > ALGEBRAIC_TOL:
        raise ValueError(f"Direction must be a unit vector, |e| = {np.linalg.norm(e)}")

    outer = np.outer(e, e)

    def phi(gamma: float) -> float:
        return eval_f(op, gamma * outer) - 1.0

    lo, hi = 1.0 / (2.0 * op.lambda1), 2.0 / op.lambda0
    flo, fhi = phi(lo), phi(hi)
    if not (flo < 0.0 < fhi):
        raise ValueError(
            f"Bisection bracket [{lo:g}, {hi:g}] does not contain F(γ e⊗e) = 1 "
            f"(values {flo + 1:g}, {fhi + 1:g}); check lambda0/lambda1"
        )

    gamma = 0.5 * (lo + hi)
    for _ in range(200):
        gamma = 0.5 * (lo + hi)
        value = phi(gamma)
        if abs(value) <= ALGEBRAIC_TOL or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        if value < 0.0:
            lo = gamma
        else:
            hi = gamma

    slack = ALGEBRAIC_TOL * max(1.0, 1.0 / op.lambda0)
    if not (1.0 / op.lambda1 - slack <= gamma <= 1.0 / op.lambda0 + slack):
        raise ValueError(
            f"γ = {gamma:g} lies outside [1/lambda1, 1/lambda0] = [{1 / op.lambda1:g}, {1 / op.lambda0:g}]"
        )
    return gamma


def pucci_net(lambda0: float, lambda1: float, m: int, n: int = 1, concave: bool = False) -> Operator:
    """Axis-aligned Bellman net approximating P⁺ (or P⁻ with `concave=True`).

    The family is every diagonal matrix with entries drawn from m points of [λ₀, λ₁].
    Exact whenever M is diagonal in grid axes; on rotated Hessians net(M) ≤ P⁺(M).
    """
    if m < 2:
        raise ValueError(f"pucci_net needs m >= 2 sample values, got {m}")
    values = np.linspace(lambda0, lambda1, m)
    family = [np.diag(combo) for combo in itertools.product(values, repeat=n)]
    return Operator.bellman(family, lambda0, lambda1, sense="min" if concave else "max")


def solver_family(op: Operator, net_size: int = 2) -> tuple[tuple[np.ndarray, ...], str]:
    """Coefficient family and sense ("max"/"min") used by the monotone grid solver.

    Dilation is ignored: every shipped kind is positively 1-homogeneous, so F_R = F.
    """
    if op.kind == OperatorKind.LINEAR:
        return op.matrices, "max"
    if op.kind == OperatorKind.BELLMAN:
        return op.matrices, "max"
    if op.kind == OperatorKind.BELLMAN_MIN:
        return op.matrices, "min"
    net = pucci_net(op.lambda0, op.lambda1, net_size, op.n, concave=op.kind == OperatorKind.PUCCI_MINUS)
    return net.matrices, "max" if op.kind == OperatorKind.PUCCI_PLUS else "min"
