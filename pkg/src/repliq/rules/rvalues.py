"""FDR and FWER replicability r-values.

The FDR r-value of a feature is the fixed point of f_i(x) = x, where f_i is a
step-down minimum of rank-adjusted e-values that combine both studies. The
FWER (Bonferroni) r-value solves m * e_j(x) = x. Both are found by bisection
on g(x) = f(x) - x, which crosses zero once because f(x)/x is strictly
decreasing; under the threshold dependency mode the first crossing is located
on a grid and then refined.
"""

import math
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import digamma
from scipy.stats import rankdata

from ..config import settings
from ..errors import ConfigurationError, DomainError, EmptySelectionError, NumericalError
from ..logging_config import analysis_logger
from ..models import AnalysisConfig, DependencyMode, DirectedPair, ErrorFlavor


# Below this index harmonic numbers are summed exactly, above it the digamma identity is used.
EXACT_HARMONIC_LIMIT = 64
GRID_CHUNK = 2048
C1_TILDE_CACHE_SIZE = 1 << 16

ArrayLike = Union[float, Sequence[float], np.ndarray]
FeatureRef = Union[int, str]


class EvaluationContext(BaseModel):
    """Quantities shared by every e-value and f-value evaluation of one analysis."""

    model_config = ConfigDict(frozen=True)

    m: int
    m_effective: float
    R1: int
    c2: float
    l00: float
    dependency: DependencyMode = DependencyMode.INDEPENDENT
    threshold: Optional[float] = None

    def plain(self) -> "EvaluationContext":
        """Context without dependency modifications (used by the FWER flavor)."""
        return self.model_copy(
            update={
                "m_effective": float(self.m),
                "dependency": DependencyMode.INDEPENDENT,
                "threshold": None,
            }
        )


class RValueResult(BaseModel):
    """r-value of one feature; 1 encodes "no solution in (0,1)"."""

    model_config = ConfigDict(frozen=True)

    feature_id: str
    r_value: float
    flavor: ErrorFlavor
    context: EvaluationContext
    conservative_fallback: bool = False


class C1Tilde(NamedTuple):
    """Solution of the threshold-mode constant equation."""
    value: float
    branch: int
    conservative: bool


# ---------------------------------------------------------------------------
# Scalar building blocks
# ---------------------------------------------------------------------------

def harmonic_number(k: int) -> float:
    """Return H_k = 1 + 1/2 + ... + 1/k (H_0 = 0)."""
    if k < 0:
        raise DomainError(f"harmonic number of negative index {k}")
    if k <= EXACT_HARMONIC_LIMIT:
        return math.fsum(1.0 / i for i in range(1, k + 1))
    return float(digamma(k + 1.0) + np.euler_gamma)


def _check_parameters(l00: float, c2: float) -> None:
    if not 0.0 <= l00 < 1.0:
        raise DomainError(f"l00 must lie in [0,1), got {l00}")
    if not 0.0 < c2 < 1.0:
        raise DomainError(f"c2 must lie in (0,1), got {c2}")


def c1(x: ArrayLike, l00: float, c2: float) -> ArrayLike:
    """Primary-study constant c1(x) = (1 - c2) / (1 - l00 (1 - c2 x)).

    Accepts a scalar or an array of evaluation points in (0,1].

    Raises:
        DomainError: If x, l00 or c2 is outside its domain
    """
    _check_parameters(l00, c2)
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0.0)) or np.any(xs > 1.0):
        raise DomainError(f"c1 is defined for x in (0,1], got {x}")
    value = (1.0 - c2) / (1.0 - l00 * (1.0 - c2 * xs))
    return float(value) if value.ndim == 0 else value


def m_star(m: int) -> float:
    """Family size inflated for arbitrary primary dependence, m* = m * H_m.

    Raises:
        DomainError: If m < 1
    """
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    return m * harmonic_number(m)


@lru_cache(maxsize=C1_TILDE_CACHE_SIZE)
def c1_tilde_solution(x: float, t: float, m: int, l00: float, c2: float) -> C1Tilde:
    """Largest a with a (1 + H_k) = c1(x), where k = ceil(t m / (a x)) - 1.

    Branch k has the candidate a_k = c1(x) / (1 + H_k); candidates decrease with
    k, so the first self-consistent branch gives the maximum. Branches are
    visited by jumping to the index the current candidate requires, which skips
    only branches that cannot be consistent. The required index grows like
    log k, so the jumps end at a consistent branch. When floating-point
    ceilings break that, the largest a_k with required index <= k is returned
    and flagged as conservative.

    Raises:
        DomainError: If t or x is outside (0,1)
    """
    if not 0.0 < t < 1.0:
        raise DomainError(f"threshold t must lie in (0,1), got {t}")
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    base = c1(x, l00, c2)

    if t <= base * x / m:
        return C1Tilde(value=base, branch=0, conservative=False)

    k = 0
    while True:
        a = base / (1.0 + harmonic_number(k))
        required = math.ceil(t * m / (a * x)) - 1
        if required == k:
            return C1Tilde(value=a, branch=k, conservative=False)
        if required < k:
            return C1Tilde(value=a, branch=k, conservative=True)
        k = required


def c1_tilde(x: float, t: float, m: int, l00: float, c2: float) -> float:
    """Threshold-mode replacement for c1(x); see ``c1_tilde_solution``."""
    return c1_tilde_solution(x, t, m, l00, c2).value


def threshold_modification_needed(t: float, q: float, m: int, l00: float, c2: float) -> bool:
    """True when the threshold-mode r-values can differ from the unmodified ones at level q."""
    return t > c1(q, l00, c2) * q / m


def threshold_beats_mstar(t: float, q: float, m: int, l00: float, c2: float) -> bool:
    """True when the threshold modification yields more discoveries than the m* one."""
    return t < c1(q, l00, c2) * q / (1.0 + harmonic_number(m - 1))


def build_context(config: AnalysisConfig, n_selected: int) -> EvaluationContext:
    """Build the evaluation context for a follow-up set of size ``n_selected``.

    Raises:
        EmptySelectionError: If nothing was selected
        DomainError: If more features were selected than examined
    """
    if n_selected < 1:
        raise EmptySelectionError("no features were selected for follow-up")
    if n_selected > config.m:
        raise DomainError(f"R1={n_selected} exceeds m={config.m}")
    m_effective = m_star(config.m) if config.dependency is DependencyMode.MSTAR else float(config.m)
    return EvaluationContext(
        m=config.m,
        m_effective=m_effective,
        R1=n_selected,
        c2=config.c2,
        l00=config.l00,
        dependency=config.dependency,
        threshold=config.threshold,
    )


# ---------------------------------------------------------------------------
# Vectorised e-values and f-values
# ---------------------------------------------------------------------------

def _pvalue_arrays(pairs: Sequence[DirectedPair]) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        raise EmptySelectionError("no directed pairs to evaluate")
    p1 = np.fromiter((pair.p1_directed for pair in pairs), dtype=float, count=len(pairs))
    p2 = np.fromiter((pair.p2_directed for pair in pairs), dtype=float, count=len(pairs))
    return p1, p2


def _primary_constants(xs: np.ndarray, ctx: EvaluationContext) -> tuple[np.ndarray, np.ndarray]:
    """c1 (or c1 tilde) at each evaluation point, with conservative-fallback flags."""
    if ctx.dependency is DependencyMode.THRESHOLD:
        points, inverse = np.unique(xs, return_inverse=True)
        solutions = [c1_tilde_solution(float(x), ctx.threshold, ctx.m, ctx.l00, ctx.c2) for x in points]
        values = np.fromiter((s.value for s in solutions), dtype=float, count=len(solutions))
        flags = np.fromiter((s.conservative for s in solutions), dtype=bool, count=len(solutions))
        return values[inverse], flags[inverse]
    return np.asarray(c1(xs, ctx.l00, ctx.c2), dtype=float), np.zeros(len(xs), dtype=bool)


def _e_matrix(xs: np.ndarray, p1: np.ndarray, p2: np.ndarray, ctx: EvaluationContext) -> np.ndarray:
    """e-values with one row per evaluation point and one column per feature."""
    constants, _ = _primary_constants(xs, ctx)
    followup = ctx.R1 * p2 / (ctx.m_effective * ctx.c2)
    return np.maximum(p1[None, :] / constants[:, None], followup[None, :])


def rank_adjusted_minimum(e: np.ndarray, m_effective: float) -> np.ndarray:
    """Step-down minimum of e_j * m / rank(e_j) over features with e_j >= e_i.

    Ties share the maximum rank of their group. Works row-wise on 2-D input.
    """
    e = np.asarray(e, dtype=float)
    rows = np.atleast_2d(e)
    order = np.argsort(rows, axis=1, kind="stable")
    sorted_e = np.take_along_axis(rows, order, axis=1)
    ranks = rankdata(sorted_e, method="max", axis=1)
    adjusted = sorted_e * m_effective / ranks
    running = np.minimum.accumulate(adjusted[:, ::-1], axis=1)[:, ::-1]
    result = np.empty_like(running)
    np.put_along_axis(result, order, running, axis=1)
    return result if e.ndim == 2 else result[0]


def f_matrix(xs: ArrayLike, pairs: Sequence[DirectedPair], ctx: EvaluationContext) -> np.ndarray:
    """FDR f-values at each evaluation point (rows) for each feature (columns)."""
    p1, p2 = _pvalue_arrays(pairs)
    grid = np.atleast_1d(np.asarray(xs, dtype=float))
    return rank_adjusted_minimum(_e_matrix(grid, p1, p2, ctx), ctx.m_effective)


def e_values(x: float, pairs: Sequence[DirectedPair], ctx: EvaluationContext) -> list[float]:
    """e_j(x) = max(p'_1j / c1(x), R1 p'_2j / (m c2)) for every pair, in input order.

    Under the m* mode m is replaced by m*, under the threshold mode c1 by c1 tilde.
    """
    p1, p2 = _pvalue_arrays(pairs)
    return _e_matrix(np.array([x], dtype=float), p1, p2, ctx)[0].tolist()


def f_values(x: float, pairs: Sequence[DirectedPair], ctx: EvaluationContext) -> list[float]:
    """f_i(x) for every pair, in input order."""
    return f_matrix([x], pairs, ctx)[0].tolist()


def fwer_values(x: float, pairs: Sequence[DirectedPair], ctx: EvaluationContext) -> list[float]:
    """Bonferroni f-values m * e_j(x); never uses the dependency modifications."""
    plain = ctx.plain()
    return [plain.m * e for e in e_values(x, pairs, plain)]


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _fdr_evaluator(p1: np.ndarray, p2: np.ndarray, ctx: EvaluationContext) -> Evaluator:
    def evaluate(xs: np.ndarray, idx: np.ndarray) -> np.ndarray:
        # ranks depend on x, so every point needs the full row
        rows = rank_adjusted_minimum(_e_matrix(xs, p1, p2, ctx), ctx.m_effective)
        return rows[np.arange(len(xs)), idx]
    return evaluate


def _fwer_evaluator(p1: np.ndarray, p2: np.ndarray, ctx: EvaluationContext) -> Evaluator:
    plain = ctx.plain()
    followup = plain.R1 * p2 / (plain.m * plain.c2)

    def evaluate(xs: np.ndarray, idx: np.ndarray) -> np.ndarray:
        constants = np.asarray(c1(xs, plain.l00, plain.c2), dtype=float)
        return plain.m * np.maximum(p1[idx] / constants, followup[idx])
    return evaluate


def _bisect(
    evaluate: Evaluator,
    idx: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    tolerance: float,
    max_iterations: int,
) -> np.ndarray:
    """Shrink brackets with g(lo) > 0 >= g(hi) until hi - lo <= tolerance; returns hi."""
    lo = lo.copy()
    hi = hi.copy()
    active = (hi - lo) > tolerance
    for _ in range(max_iterations):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        below = (evaluate(mid, idx) - mid) <= 0.0
        hi = np.where(active & below, mid, hi)
        lo = np.where(active & ~below, mid, lo)
        active &= (hi - lo) > tolerance
    if active.any():
        raise NumericalError(
            f"bisection did not converge within {max_iterations} iterations "
            f"for {int(active.sum())} feature(s)"
        )

    # f(hi) <= hi lies between the root and hi; keep it when it is still on the crossing side
    candidate = evaluate(hi, idx)
    inside = (candidate >= lo) & (candidate < hi) & (candidate > 0.0)
    if inside.any():
        polished = np.where(inside, candidate, hi)
        still_below = (evaluate(polished, idx) - polished) <= 0.0
        hi = np.where(inside & still_below, polished, hi)
    return hi


def _solve_unique(
    evaluate: Evaluator,
    idx: np.ndarray,
    tolerance: float,
    max_iterations: int,
    floor: float,
) -> np.ndarray:
    """Fixed points of f_i(x) = x when f_i(x)/x is strictly decreasing."""
    n = len(idx)
    lo = np.full(n, floor)
    hi = np.full(n, 1.0 - floor)
    at_floor = (evaluate(lo, idx) - lo) <= 0.0
    no_crossing = (evaluate(hi, idx) - hi) > 0.0

    result = np.ones(n)
    result[at_floor] = floor
    bracketed = ~at_floor & ~no_crossing
    if bracketed.any():
        sub = np.flatnonzero(bracketed)
        result[sub] = _bisect(
            evaluate, idx[sub], lo[sub], hi[sub], tolerance, max_iterations
        )
    return result


def _solve_first_crossing(
    evaluate: Evaluator,
    pairs: Sequence[DirectedPair],
    ctx: EvaluationContext,
    idx: np.ndarray,
    tolerance: float,
    max_iterations: int,
    floor: float,
    grid_step: float,
) -> np.ndarray:
    """min{x: f_i(x) <= x} by a grid scan followed by bisection on the first bracket."""
    n_points = int(round(1.0 / grid_step))
    grid = np.concatenate(([floor], np.arange(1, n_points) * grid_step, [1.0 - floor]))

    first = np.full(len(idx), -1)
    for start in range(0, len(grid), GRID_CHUNK):
        pending = first < 0
        if not pending.any():
            break
        chunk = grid[start:start + GRID_CHUNK]
        crossed = (f_matrix(chunk, pairs, ctx)[:, idx] - chunk[:, None]) <= 0.0
        hit = crossed.any(axis=0) & pending
        first[hit] = start + np.argmax(crossed[:, hit], axis=0)

    result = np.ones(len(idx))
    result[first == 0] = floor
    interior = np.flatnonzero(first > 0)
    if len(interior):
        lo = grid[first[interior] - 1]
        hi = grid[first[interior]]
        result[interior] = _bisect(evaluate, idx[interior], lo, hi, tolerance, max_iterations)
    return result


def _resolve_index(ref: FeatureRef, pairs: Sequence[DirectedPair]) -> int:
    if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
        if not 0 <= ref < len(pairs):
            raise IndexError(f"feature index {ref} out of range")
        return int(ref)
    for position, pair in enumerate(pairs):
        if pair.feature_id == ref:
            return position
    raise KeyError(f"feature '{ref}' is not among the pairs")


def _solve(
    idx: np.ndarray,
    pairs: Sequence[DirectedPair],
    ctx: EvaluationContext,
    flavor: ErrorFlavor,
    tolerance: Optional[float],
    max_iterations: Optional[int],
    grid_step: Optional[float],
) -> list[RValueResult]:
    tolerance = settings.solver_tolerance if tolerance is None else tolerance
    max_iterations = settings.solver_max_iterations if max_iterations is None else max_iterations
    grid_step = settings.threshold_grid_step if grid_step is None else grid_step
    floor = settings.solver_floor

    p1, p2 = _pvalue_arrays(pairs)
    if flavor is ErrorFlavor.FWER:
        context = ctx.plain()
        roots = _solve_unique(_fwer_evaluator(p1, p2, ctx), idx, tolerance, max_iterations, floor)
    elif ctx.dependency is DependencyMode.THRESHOLD:
        context = ctx
        roots = _solve_first_crossing(
            _fdr_evaluator(p1, p2, ctx), pairs, ctx, idx,
            tolerance, max_iterations, floor, grid_step,
        )
    else:
        context = ctx
        roots = _solve_unique(_fdr_evaluator(p1, p2, ctx), idx, tolerance, max_iterations, floor)

    results = []
    for position, root in zip(idx, roots):
        r_value = float(min(max(root, floor), 1.0))
        fallback = False
        if context.dependency is DependencyMode.THRESHOLD and r_value < 1.0:
            fallback = c1_tilde_solution(
                r_value, context.threshold, context.m, context.l00, context.c2
            ).conservative
            if fallback:
                analysis_logger.log_fallback(pairs[position].feature_id, r_value)
        results.append(
            RValueResult(
                feature_id=pairs[position].feature_id,
                r_value=r_value,
                flavor=flavor,
                context=context,
                conservative_fallback=fallback,
            )
        )
    return results


def compute_rvalues(
    pairs: Sequence[DirectedPair],
    ctx: EvaluationContext,
    flavor: ErrorFlavor = ErrorFlavor.FDR,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    grid_step: Optional[float] = None,
) -> list[RValueResult]:
    """r-values of every pair, solved together with one bracket per feature.

    Args:
        pairs: Directed pairs of the follow-up set
        ctx: Evaluation context built for this follow-up set
        flavor: FDR or FWER r-values
        tolerance: Absolute bisection tolerance (default from settings)
        max_iterations: Bisection iteration cap (default from settings)
        grid_step: Grid step of the threshold-mode scan (default from settings)

    Returns:
        One RValueResult per pair, in input order

    Raises:
        NumericalError: If bisection does not converge
    """
    idx = np.arange(len(pairs))
    return _solve(idx, pairs, ctx, ErrorFlavor(flavor), tolerance, max_iterations, grid_step)


def solve_fdr_rvalue(
    i: FeatureRef,
    pairs: Sequence[DirectedPair],
    ctx: EvaluationContext,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    grid_step: Optional[float] = None,
) -> RValueResult:
    """FDR r-value of one feature, given by position or feature id."""
    idx = np.array([_resolve_index(i, pairs)])
    return _solve(idx, pairs, ctx, ErrorFlavor.FDR, tolerance, max_iterations, grid_step)[0]


def solve_fwer_rvalue(
    j: FeatureRef,
    pairs: Sequence[DirectedPair],
    ctx: EvaluationContext,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> RValueResult:
    """Bonferroni r-value of one feature, given by position or feature id."""
    idx = np.array([_resolve_index(j, pairs)])
    return _solve(idx, pairs, ctx, ErrorFlavor.FWER, tolerance, max_iterations, None)[0]


def check_single_context(results: Sequence[RValueResult]) -> tuple[EvaluationContext, ErrorFlavor]:
    """Return the shared context and flavor of a batch of r-values.

    Raises:
        ConfigurationError: If the r-values come from different analyses
    """
    if not results:
        raise ConfigurationError("no r-values supplied")
    context, flavor = results[0].context, results[0].flavor
    for result in results[1:]:
        if result.context != context or result.flavor != flavor:
            raise ConfigurationError("r-values were computed under different configurations")
    return context, flavor
