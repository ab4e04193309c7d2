"""Orbit records, discrete Wronskians, and window-based basis detection.

A family of scalar observables is a basis for the map when one fixed
coefficient vector annihilates the observable values along every orbit.
On a finite orbit this becomes a null-space question for the window
matrix M[r][s] = (observable s at orbit point start+r): a one-dimensional
null space whose vector varies only with the initial point turns the
coefficient ratios into integrals of the map.  Observables are callables
(orbit, base) -> real so that a single window matrix can mix state
functions, bilinear functions of consecutive points, and discrete
Wronskians that look several steps ahead.

Null-space detection uses a full singular-value decomposition with the
relative threshold NULL_SIGMA_FACTOR and reports the spectral gap as a
quality score; candidate vectors must also annihilate the window matrix
to ANNIHILATION_FACTOR times its norm, otherwise they are not counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .quadfield import QuadraticVectorField, SingularStepError, delta, kahan_step
from .systems import central_gradient

NULL_SIGMA_FACTOR = 1e-9
ANNIHILATION_FACTOR = 1e-10
PIVOT_FLOOR = 1e-6

Observable = Callable[["OrbitRecord", int], float]


@dataclass(frozen=True)
class OrbitRecord:
    """A Kahan orbit: states (k+1, n) plus one entry per attempted step.

    When the iteration dies at a pole, the failed attempt still records
    its (near-zero) denominator and a raised flag, but no new state and a
    NaN residual; the arrays are then one longer than states[1:].
    """

    states: np.ndarray
    eps: float
    deltas: np.ndarray
    residuals: np.ndarray
    pole_flags: np.ndarray

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must be a (points, dim) matrix")
        deltas = np.array(self.deltas, dtype=float)
        residuals = np.array(self.residuals, dtype=float)
        flags = np.array(self.pole_flags, dtype=bool)
        attempts = deltas.shape[0]
        if residuals.shape != (attempts,) or flags.shape != (attempts,):
            raise ValueError("deltas, residuals, pole_flags must share one attempt count")
        if attempts not in (states.shape[0] - 1, states.shape[0]):
            raise ValueError(f"{attempts} attempts inconsistent with {states.shape[0]} states")
        for arr in (states, deltas, residuals, flags):
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "residuals", residuals)
        object.__setattr__(self, "pole_flags", flags)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def steps(self) -> int:
        """Completed steps, excluding a final pole attempt."""
        return self.states.shape[0] - 1

    @property
    def hit_pole(self) -> bool:
        return bool(self.pole_flags.any())


def iterate_orbit(
    field: QuadraticVectorField, x0: np.ndarray, eps: float, steps: int
) -> OrbitRecord:
    """Apply the Kahan map repeatedly, stopping early if a step denominator
    vanishes after the first step (a pole at step 0 is re-raised)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x0, dtype=float)
    if x.shape != (field.dim,):
        raise ValueError(f"x0 must have shape ({field.dim},), got {x.shape}")
    states = [x.copy()]
    deltas: list[float] = []
    residuals: list[float] = []
    flags: list[bool] = []
    for k in range(steps):
        try:
            result = kahan_step(field, states[-1], eps)
        except SingularStepError:
            if k == 0:
                raise
            deltas.append(delta(field, states[-1], eps))
            residuals.append(np.nan)
            flags.append(True)
            break
        states.append(result.next)
        deltas.append(result.delta)
        residuals.append(result.residual)
        flags.append(False)
    return OrbitRecord(
        states=np.array(states),
        eps=eps,
        deltas=np.array(deltas),
        residuals=np.array(residuals),
        pole_flags=np.array(flags, dtype=bool),
    )


def discrete_wronskian(orbit: OrbitRecord, ell: int, pair: tuple, base: int) -> float:
    """x_i at base+ell times x_j at base, minus x_i at base times x_j at base+ell."""
    if ell < 1:
        raise ValueError("order must be >= 1")
    i, j = pair
    if not (0 <= i < orbit.dim and 0 <= j < orbit.dim):
        raise IndexError(f"pair {pair} outside dimension {orbit.dim}")
    if base < 0 or base + ell >= orbit.states.shape[0]:
        raise IndexError(
            f"base {base} with order {ell} exceeds orbit of {orbit.states.shape[0]} points"
        )
    s = orbit.states
    return float(s[base + ell, i] * s[base, j] - s[base, i] * s[base + ell, j])


def wronskian_observable(ell: int, pair: tuple) -> Observable:
    def observe(orbit: OrbitRecord, base: int) -> float:
        return discrete_wronskian(orbit, ell, pair, base)

    return observe


def state_observable(fn: Callable[[np.ndarray], float]) -> Observable:
    """Wrap a plain function of the state."""

    def observe(orbit: OrbitRecord, base: int) -> float:
        if base < 0 or base >= orbit.states.shape[0]:
            raise IndexError(f"base {base} outside orbit")
        return float(fn(orbit.states[base]))

    return observe


def bilinear_observable(fn: Callable[[np.ndarray, np.ndarray], float]) -> Observable:
    """Wrap a function of a state and its successor on the orbit."""

    def observe(orbit: OrbitRecord, base: int) -> float:
        if base < 0 or base + 1 >= orbit.states.shape[0]:
            raise IndexError(f"base {base} needs a successor state")
        return float(fn(orbit.states[base], orbit.states[base + 1]))

    return observe


def constant_observable(value: float = 1.0) -> Observable:
    def observe(orbit: OrbitRecord, base: int) -> float:
        return float(value)

    return observe


def conjugate_pairs(dim: int) -> tuple:
    """Pairs (i, i + dim/2): each first-block component against its partner."""
    if dim < 2 or dim % 2:
        raise ValueError(f"dimension must be even, got {dim}")
    half = dim // 2
    return tuple((i, i + half) for i in range(half))


@dataclass(frozen=True)
class WronskianBasisSpec:
    order: int
    pairs: tuple

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        pairs = tuple(tuple(p) for p in self.pairs)
        if not pairs:
            raise ValueError("at least one pair is required")
        for p in pairs:
            if len(p) != 2 or p[0] == p[1] or min(p) < 0:
                raise ValueError(f"invalid pair {p}")
        object.__setattr__(self, "pairs", pairs)

    def observables(self) -> list:
        return [wronskian_observable(self.order, p) for p in self.pairs]


def default_window(m: int) -> int:
    """Window height giving comfortable oversampling for m observables."""
    return max(2 * m + 4, m + 2)


@dataclass(frozen=True)
class HKNullSpaceReport:
    singular_values: np.ndarray
    null_dim: int
    coeff_vectors: np.ndarray
    window: tuple
    gap_ratio: float

    def to_json_dict(self) -> dict:
        gap = self.gap_ratio if np.isfinite(self.gap_ratio) else None
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "null_dim": int(self.null_dim),
            "gap_ratio": gap,
            "coeff_vectors": [[float(c) for c in v] for v in self.coeff_vectors],
            "window": [int(self.window[0]), int(self.window[1])],
        }


def _window_matrix(
    orbit: OrbitRecord, observables: Sequence[Observable], window: int, start: int
) -> np.ndarray:
    m = len(observables)
    rows = np.empty((window, m))
    try:
        for r in range(window):
            for s, observe in enumerate(observables):
                rows[r, s] = observe(orbit, start + r)
    except IndexError as exc:
        raise ValueError(
            f"orbit too short for window of {window} rows starting at {start}"
        ) from exc
    if not np.isfinite(rows).all():
        raise ValueError("observable produced a non-finite value inside the window")
    return rows


def hk_nullspace(
    orbit: OrbitRecord,
    observables: Sequence[Observable],
    window: int,
    start: int = 0,
) -> HKNullSpaceReport:
    """Singular spectrum and annihilating vectors of the window matrix.

    Trailing singular directions count toward the null space only while
    sigma < NULL_SIGMA_FACTOR * sigma_max and the normalized vector
    annihilates the matrix to ANNIHILATION_FACTOR * sigma_max.  Vectors
    are scaled so their largest-magnitude entry is +1.
    """
    m = len(observables)
    if window < m + 2:
        raise ValueError(f"window must be at least {m + 2} for {m} observables")
    rows = _window_matrix(orbit, observables, window, start)
    _, sv, vt = np.linalg.svd(rows, full_matrices=False)
    sigma_max = sv[0]
    accepted: list[np.ndarray] = []
    for idx in range(m - 1, -1, -1):
        if sigma_max > 0 and sv[idx] >= NULL_SIGMA_FACTOR * sigma_max:
            break
        v = vt[idx]
        v = v / v[np.argmax(np.abs(v))]
        if sigma_max > 0 and np.max(np.abs(rows @ v)) > ANNIHILATION_FACTOR * sigma_max:
            break
        accepted.append(v)
    null_dim = len(accepted)
    if null_dim == 0:
        gap = 0.0  # sentinel: no spectral split to report
        vectors = np.empty((0, m))
    else:
        if null_dim == m or sv[m - null_dim] == 0:
            gap = np.inf
        else:
            gap = sv[m - null_dim - 1] / sv[m - null_dim]
        vectors = np.array(accepted[::-1])
    return HKNullSpaceReport(
        singular_values=sv,
        null_dim=null_dim,
        coeff_vectors=vectors,
        window=(start, window),
        gap_ratio=float(gap),
    )


@dataclass(frozen=True)
class RatioSequences:
    """Per-observable coefficient ratio sequences over sliding windows."""

    ratios: tuple
    non_constant: tuple
    tolerance: float

    def __len__(self) -> int:
        return len(self.ratios)

    def __getitem__(self, index: int) -> np.ndarray:
        return self.ratios[index]

    def __iter__(self):
        return iter(self.ratios)


def extract_integral_ratios(
    report: HKNullSpaceReport,
    orbit: OrbitRecord,
    observables: Sequence[Observable],
    pivot: int,
    tol: float = 1e-9,
) -> RatioSequences:
    """Recompute the null vector on every window the orbit affords and
    divide by the pivot coefficient; constant sequences are integrals."""
    if report.null_dim != 1:
        raise ValueError(f"requires null_dim 1, report has {report.null_dim}")
    m = len(observables)
    if not 0 <= pivot < m:
        raise ValueError(f"pivot {pivot} outside {m} observables")
    start, window = report.window
    columns: list[list[float]] = [[] for _ in range(m)]
    while start <= orbit.states.shape[0]:
        try:
            sub = hk_nullspace(orbit, observables, window, start=start)
        except ValueError:
            break
        if sub.null_dim != 1:
            raise RuntimeError(
                f"null space dimension {sub.null_dim} != 1 at window start {start}"
            )
        v = sub.coeff_vectors[0]
        if abs(v[pivot]) < PIVOT_FLOOR * np.max(np.abs(v)):
            raise ValueError(f"pivot coefficient degenerate at window start {start}")
        for s in range(m):
            columns[s].append(v[s] / v[pivot])
        start += 1
    ratios = tuple(np.array(col) for col in columns)
    flags = []
    for seq in ratios:
        center = float(np.median(seq))
        flags.append(bool(np.max(np.abs(seq - center)) > tol * (1 + abs(center))))
    return RatioSequences(ratios=ratios, non_constant=tuple(flags), tolerance=tol)


def functional_rank(
    integrals: Sequence[Callable[[np.ndarray], float]],
    x: np.ndarray,
    threshold: float = 1e-7,
) -> int:
    """Numerical rank of the stacked finite-difference gradients at x."""
    x = np.asarray(x, dtype=float)
    grads = np.array([central_gradient(fn, x) for fn in integrals])
    sv = np.linalg.svd(grads, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > threshold * sv[0]))


def wronskian_ratio_integral(
    field: QuadraticVectorField,
    eps: float,
    order: int,
    num: int,
    den: int,
    pairs: tuple = None,
    window: int = None,
):
    """Integral of the map read off a discrete-Wronskian null vector.

    Returns a function of the initial state: it runs a short orbit, finds
    the one-dimensional null space of the order-`order` Wronskian window
    matrix, and returns entry `num` over entry `den`.
    """
    if pairs is None:
        pairs = conjugate_pairs(field.dim)
    observables = WronskianBasisSpec(order, pairs).observables()
    m = len(observables)
    height = window if window is not None else default_window(m)
    steps = height - 1 + order

    def integral(x: np.ndarray) -> float:
        orbit = iterate_orbit(field, x, eps, steps)
        report = hk_nullspace(orbit, observables, height)
        if report.null_dim != 1:
            raise RuntimeError(
                f"order-{order} Wronskian window has null dimension {report.null_dim}"
            )
        v = report.coeff_vectors[0]
        if abs(v[den]) < PIVOT_FLOOR * np.max(np.abs(v)):
            raise ValueError(f"denominator entry {den} degenerate in null vector")
        return float(v[num] / v[den])

    return integral
