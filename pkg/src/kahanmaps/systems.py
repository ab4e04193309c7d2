"""Catalog of quadratic systems whose Kahan maps have extra structure.

Six entries: the general Clebsch flow on e(3)* (parameters a, b subject to a
compatibility condition), its first and second special cases (parametrized by
omega), the Kirchhoff case (a1 = a2, b1 = b2), the Lagrange top (the one
entry with a linear part), and a planar family with an affine multiplier
where only the first two components are constrained.

State ordering for the 6-dim systems is x = (m1, m2, m3, p1, p2, p3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from kahanmaps.quadfield import QuadraticVectorField, evaluate_field

__all__ = [
    "SYSTEM_KINDS",
    "PARAM_FIELDS",
    "ClebschParams",
    "FirstClebschParams",
    "SecondClebschParams",
    "KirchhoffParams",
    "LagrangeParams",
    "PlanarFamilyParams",
    "ContinuousInvariants",
    "SystemDescriptor",
    "clebsch_condition_residual",
    "clebsch_derived_params",
    "clebsch_params_from_decomposition",
    "decompose_clebsch",
    "build_system",
    "params_from_dict",
    "params_to_dict",
    "system_from_json",
    "system_to_json",
    "continuous_invariants",
    "continuous_wronskian_residual",
    "poisson_bracket_e3",
    "central_gradient",
]

SYSTEM_KINDS = (
    "general_clebsch",
    "first_clebsch",
    "second_clebsch",
    "kirchhoff",
    "lagrange",
    "planar_family",
)

# Config keys that belong to each system's params block.
PARAM_FIELDS = {
    "general_clebsch": {"required": ("a", "b"), "optional": ("beta", "wcoef")},
    "first_clebsch": {"required": ("omega",), "optional": ()},
    "second_clebsch": {"required": ("omega",), "optional": ()},
    "kirchhoff": {"required": ("a1", "a3", "b1", "b3"), "optional": ()},
    "lagrange": {"required": ("alpha", "gamma"), "optional": ()},
    "planar_family": {
        "required": ("qform", "ell"),
        "optional": ("ell0", "extra_quad", "extra_lin", "extra_const"),
    },
}

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def _vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def clebsch_condition_residual(a, b) -> float:
    """Cyclic-sum compatibility residual (b_i - b_j)/a_k over (i,j,k) cyclic.

    Vanishes exactly when (a, b) admits the two-parameter spectral
    decomposition a_i = alpha + beta*omega_i, b_i = alpha*omega_i -
    beta*omega_j*omega_k.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(sum((b[i] - b[j]) / a[k] for i, j, k in _CYCLIC))


def _condition_scale(a, b) -> float:
    return 1.0 + float(sum(abs((b[i] - b[j]) / a[k]) for i, j, k in _CYCLIC))


def _wcoef_from_a(a: np.ndarray) -> np.ndarray:
    out = np.array([1 / a[j] + 1 / a[k] - 1 / a[i] for i, j, k in _CYCLIC])
    out.setflags(write=False)
    return out


def _beta_from_ratios(a: np.ndarray, b: np.ndarray) -> tuple[float, bool]:
    """beta with 1/beta = (b_i - b_j) / (a_k (a_i - a_j)), read off the ratio
    with the largest denominator. Returns (beta, degenerate)."""
    nums = np.array([b[i] - b[j] for i, j, k in _CYCLIC])
    dens = np.array([a[k] * (a[i] - a[j]) for i, j, k in _CYCLIC])
    scale_den = np.max(np.abs(a)) ** 2 + 1.0
    scale_num = np.max(np.abs(b)) + 1.0
    pick = int(np.argmax(np.abs(dens)))
    if abs(dens[pick]) <= 1e-14 * scale_den:
        # a is constant: the first special case (beta = 0) if b varies,
        # otherwise no information at all.
        if np.max(np.abs(nums)) <= 1e-14 * scale_num:
            return math.nan, True
        return 0.0, False
    if nums[pick] == 0.0:
        raise ValueError("parameters admit no finite spectral decomposition (b_i - b_j = 0 while a_k(a_i - a_j) != 0)")
    beta = float(dens[pick] / nums[pick])
    # remaining well-conditioned ratios must agree
    for k in range(3):
        if k != pick and abs(dens[k]) > 1e-9 * scale_den:
            if abs(beta * nums[k] - dens[k]) > 1e-8 * (abs(dens[k]) + scale_den * 1e-9):
                raise ValueError("spectral ratios disagree; compatibility condition violated")
    return beta, False


@dataclass(frozen=True, eq=False)
class ClebschParams:
    """General Clebsch parameters (a, b) with the derived data beta and the
    Wronskian weights wcoef, A_i = 1/a_j + 1/a_k - 1/a_i.

    The compatibility condition is validated on construction; beta and wcoef
    are computed when not supplied. degenerate marks inputs with both a and b
    constant, where beta carries no information.
    """

    a: np.ndarray
    b: np.ndarray
    beta: Optional[float] = None
    wcoef: Optional[np.ndarray] = None
    degenerate: bool = dc_field(default=False)

    def __post_init__(self) -> None:
        a = _vec3(self.a, "a")
        b = _vec3(self.b, "b")
        if np.any(a == 0.0):
            raise ValueError("all entries of a must be nonzero")
        residual = clebsch_condition_residual(a, b)
        if abs(residual) > 1e-12 * _condition_scale(a, b):
            raise ValueError(
                f"compatibility condition violated: cyclic-sum residual {residual:.3e}"
            )
        beta, degenerate = _beta_from_ratios(a, b)
        if self.beta is not None and not degenerate:
            if abs(self.beta - beta) > 1e-9 * (1.0 + abs(beta)):
                raise ValueError(
                    f"supplied beta {self.beta} disagrees with ratio value {beta}"
                )
            beta = float(self.beta)
        wcoef = _wcoef_from_a(a)
        if self.wcoef is not None:
            supplied = _vec3(self.wcoef, "wcoef")
            if not np.allclose(supplied, wcoef, rtol=1e-9, atol=1e-12):
                raise ValueError("supplied wcoef disagrees with 1/a_j + 1/a_k - 1/a_i")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "wcoef", wcoef)
        object.__setattr__(self, "degenerate", degenerate)


@dataclass(frozen=True, eq=False)
class FirstClebschParams:
    """First special case: unit m-coefficients, omega on the p-quadratics."""

    omega: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))


@dataclass(frozen=True, eq=False)
class SecondClebschParams:
    """Second special case: a_i = omega_i, b_i = -omega_j*omega_k."""

    omega: np.ndarray

    def __post_init__(self) -> None:
        omega = _vec3(self.omega, "omega")
        if np.any(omega == 0.0):
            raise ValueError("omega entries must be nonzero (they become the a-coefficients)")
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class KirchhoffParams:
    """Axially symmetric case a1 = a2, b1 = b2 of the Clebsch family."""

    a1: float
    a3: float
    b1: float
    b3: float

    def __post_init__(self) -> None:
        for name in ("a1", "a3", "b1", "b3"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.a1 == 0.0:
            raise ValueError("a1 must be nonzero")


@dataclass(frozen=True)
class LagrangeParams:
    """Symmetric heavy top: anisotropy alpha on m3, gravity coupling gamma."""

    alpha: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("alpha", "gamma"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)


@dataclass(frozen=True, eq=False)
class PlanarFamilyParams:
    """Planar quadratic form H = (a x1^2 + 2 b x1 x2 + c x2^2)/2 rotated by an
    affine multiplier ell(x) = ell . x + ell0 on all of R^n; components 3..n
    of the field are arbitrary quadratic (they do not affect the first two).
    """

    qform: tuple
    ell: np.ndarray
    ell0: float = 0.0
    extra_quad: Optional[np.ndarray] = None
    extra_lin: Optional[np.ndarray] = None
    extra_const: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        qform = tuple(float(v) for v in self.qform)
        if len(qform) != 3:
            raise ValueError("qform must be the triple (a, b, c)")
        ell = np.array(self.ell, dtype=float)
        if ell.ndim != 1 or ell.shape[0] < 2:
            raise ValueError("ell must be a coefficient vector of length >= 2")
        n = ell.shape[0]
        extra_quad = (
            np.zeros((n - 2, n, n)) if self.extra_quad is None else np.array(self.extra_quad, dtype=float)
        )
        extra_lin = (
            np.zeros((n - 2, n)) if self.extra_lin is None else np.array(self.extra_lin, dtype=float)
        )
        extra_const = (
            np.zeros(n - 2) if self.extra_const is None else np.array(self.extra_const, dtype=float)
        )
        if extra_quad.shape != (n - 2, n, n):
            raise ValueError(f"extra_quad must have shape {(n - 2, n, n)}")
        if not np.array_equal(extra_quad, extra_quad.swapaxes(1, 2)):
            raise ValueError("extra_quad must be symmetric in its last two axes")
        if extra_lin.shape != (n - 2, n):
            raise ValueError(f"extra_lin must have shape {(n - 2, n)}")
        if extra_const.shape != (n - 2,):
            raise ValueError(f"extra_const must have shape {(n - 2,)}")
        for arr in (ell, extra_quad, extra_lin, extra_const):
            if not np.isfinite(arr).all():
                raise ValueError("planar family coefficients must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "qform", qform)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "ell0", float(self.ell0))
        object.__setattr__(self, "extra_quad", extra_quad)
        object.__setattr__(self, "extra_lin", extra_lin)
        object.__setattr__(self, "extra_const", extra_const)

    @property
    def dim(self) -> int:
        return self.ell.shape[0]


@dataclass(frozen=True)
class ContinuousInvariants:
    """Conserved quantities of the continuous flow, as callables of the state.

    Entries that do not apply to a system are None. H generates the flow;
    K1 = p.p and K2 = m.p are the e(3)* Casimirs; H1 and H2 are the pair of
    quadratic integrals of the Clebsch family; lagrangeH1 is the Lagrange
    top's defining Hamiltonian combination.
    """

    H: Optional[Callable] = None
    H1: Optional[Callable] = None
    H2: Optional[Callable] = None
    K1: Optional[Callable] = None
    K2: Optional[Callable] = None
    lagrangeH1: Optional[Callable] = None

    def available(self) -> dict:
        out = {}
        for name in ("H", "H1", "H2", "K1", "K2", "lagrangeH1"):
            fn = getattr(self, name)
            if fn is not None:
                out[name] = fn
        return out


@dataclass(frozen=True, eq=False)
class SystemDescriptor:
    """A catalog system: its kind, parameters, quadratic field, and the names
    of the map-level quantities attached to it.

    integral_names: columns emitted per orbit row, in order
    density_names: quantities whose coefficient times Delta is a preserved
      density numerator
    conserved_names: quantities checked for drift along orbits (may contain
      ratio names like "c1/c0" and the plain coordinate "m3")
    wronskian_coeffs: weights of the continuous relation
      sum_i gamma_i (mdot_i p_i - m_i pdot_i) = 0, None for the planar family
    wronskian_orders: discrete Wronskian orders with an asserted
      one-dimensional null space
    """

    kind: str
    params: object
    field: QuadraticVectorField
    integral_names: tuple
    density_names: tuple
    conserved_names: tuple
    wronskian_coeffs: Optional[tuple]
    wronskian_orders: tuple

    @property
    def dim(self) -> int:
        return self.field.dim


def clebsch_params_from_decomposition(alpha: float, beta: float, omega) -> ClebschParams:
    """Assemble (a, b) from the spectral data: a_i = alpha + beta*omega_i,
    b_i = alpha*omega_i - beta*omega_j*omega_k."""
    omega = _vec3(omega, "omega")
    a = np.array([alpha + beta * omega[i] for i in range(3)])
    b = np.array([alpha * omega[i] - beta * omega[j] * omega[k] for i, j, k in _CYCLIC])
    return ClebschParams(a=a, b=b)


def clebsch_derived_params(a, b) -> ClebschParams:
    """Validate the compatibility condition and derive beta and wcoef."""
    return ClebschParams(a=a, b=b)


def decompose_clebsch(params: ClebschParams) -> list:
    """Both spectral decompositions (alpha, omega) of general Clebsch
    parameters with beta != 0, sorted by alpha.

    alpha solves 2*alpha^2 - S*alpha + T = 0 with S = sum(a) and
    T = a_j*a_k + beta*b_i (the same for every i); omega = (a - alpha)/beta.
    """
    if params.degenerate or params.beta == 0.0:
        raise ValueError("decomposition requires beta != 0 (use the first special case instead)")
    a, b, beta = params.a, params.b, params.beta
    s = float(np.sum(a))
    t_all = [a[j] * a[k] + beta * b[i] for i, j, k in _CYCLIC]
    t = t_all[0]
    scale = 1.0 + max(abs(v) for v in t_all)
    if max(abs(v - t) for v in t_all) > 1e-9 * scale:
        raise ValueError("inconsistent spectral data: a_j*a_k + beta*b_i varies with i")
    disc = s * s - 8.0 * t
    if disc < -1e-12 * (1.0 + s * s):
        raise ValueError("no real decomposition: negative discriminant")
    root = math.sqrt(max(disc, 0.0))
    alphas = sorted({(s - root) / 4.0, (s + root) / 4.0})
    out = []
    for alpha in alphas:
        omega = (a - alpha) / beta
        rebuilt = np.array(
            [alpha * omega[i] - beta * omega[j] * omega[k] for i, j, k in _CYCLIC]
        )
        if not np.allclose(rebuilt, b, rtol=1e-8, atol=1e-8 * (1 + np.max(np.abs(b)))):
            raise ValueError("decomposition failed to reproduce b")
        omega.setflags(write=False)
        out.append((float(alpha), omega))
    return out


def _sym_put(quad: np.ndarray, i: int, j: int, k: int, coef: float) -> None:
    quad[i, j, k] += coef / 2.0
    quad[i, k, j] += coef / 2.0


def _clebsch_field(a, b) -> QuadraticVectorField:
    quad = np.zeros((6, 6, 6))
    for i, j, k in _CYCLIC:
        # mdot_i = (a_k - a_j) m_j m_k + (b_k - b_j) p_j p_k
        _sym_put(quad, i, j, k, a[k] - a[j])
        _sym_put(quad, i, 3 + j, 3 + k, b[k] - b[j])
        # pdot_i = a_k m_k p_j - a_j m_j p_k
        _sym_put(quad, 3 + i, k, 3 + j, a[k])
        _sym_put(quad, 3 + i, j, 3 + k, -a[j])
    return QuadraticVectorField(quad=quad, lin=np.zeros((6, 6)), const=np.zeros(6))


def _lagrange_field(alpha: float, gamma: float) -> QuadraticVectorField:
    quad = np.zeros((6, 6, 6))
    _sym_put(quad, 0, 1, 2, alpha - 1.0)   # mdot1 = (alpha-1) m2 m3 + gamma p2
    _sym_put(quad, 1, 0, 2, 1.0 - alpha)   # mdot2 = (1-alpha) m1 m3 - gamma p1
    _sym_put(quad, 3, 4, 2, alpha)         # pdot1 = alpha p2 m3 - p3 m2
    _sym_put(quad, 3, 5, 1, -1.0)
    _sym_put(quad, 4, 5, 0, 1.0)           # pdot2 = p3 m1 - alpha p1 m3
    _sym_put(quad, 4, 3, 2, -alpha)
    _sym_put(quad, 5, 3, 1, 1.0)           # pdot3 = p1 m2 - p2 m1
    _sym_put(quad, 5, 4, 0, -1.0)
    lin = np.zeros((6, 6))
    lin[0, 4] = gamma
    lin[1, 3] = -gamma
    return QuadraticVectorField(quad=quad, lin=lin, const=np.zeros(6))


def _planar_field(params: PlanarFamilyParams) -> QuadraticVectorField:
    n = params.dim
    qa, qb, qc = params.qform
    quad = np.zeros((n, n, n))
    lin = np.zeros((n, n))
    const = np.zeros(n)
    rot = (np.array([qb, qc]), np.array([-qa, -qb]))  # (b x1 + c x2), -(a x1 + b x2)
    for row, w2 in enumerate(rot):
        w = np.zeros(n)
        w[:2] = w2
        quad[row] = 0.5 * (np.outer(params.ell, w) + np.outer(w, params.ell))
        lin[row] = params.ell0 * w
    quad[2:] = params.extra_quad
    lin[2:] = params.extra_lin
    const[2:] = params.extra_const
    return QuadraticVectorField(quad=quad, lin=lin, const=const)


_CLEBSCH_INTEGRALS = (
    "I0", "J0",
    "g1", "g2", "g3", "G1", "G2", "G3",
    "c1", "c2", "c3", "c0", "C1", "C2", "C3", "C0",
)
_CLEBSCH_RATIOS = ("c1/c0", "c2/c0", "c3/c0", "C1/C0", "C2/C0", "C3/C0")


def build_system(kind: str, params) -> SystemDescriptor:
    """Assemble the quadratic field and the attached quantity names for one
    catalog entry. params may be the matching params object or a plain dict.
    """
    if kind not in SYSTEM_KINDS:
        raise ValueError(f"unknown system kind '{kind}'; expected one of {SYSTEM_KINDS}")
    if isinstance(params, dict):
        params = params_from_dict(kind, params)

    if kind == "general_clebsch":
        if not isinstance(params, ClebschParams):
            raise TypeError("general_clebsch takes ClebschParams")
        if params.degenerate or params.beta == 0.0:
            raise ValueError(
                "general_clebsch requires beta != 0; constant-a parameters belong to first_clebsch"
            )
        return SystemDescriptor(
            kind=kind,
            params=params,
            field=_clebsch_field(params.a, params.b),
            integral_names=_CLEBSCH_INTEGRALS,
            density_names=("C0", "C1", "C2", "C3"),
            conserved_names=("I0", "J0") + _CLEBSCH_RATIOS,
            wronskian_coeffs=tuple(params.wcoef),
            wronskian_orders=(1, 2, 3, 4),
        )
    if kind == "first_clebsch":
        if not isinstance(params, FirstClebschParams):
            raise TypeError("first_clebsch takes FirstClebschParams")
        omega = params.omega
        return SystemDescriptor(
            kind=kind,
            params=params,
            field=_clebsch_field(np.ones(3), omega),
            integral_names=("I0", "J0", "K", "c1", "c2", "c3", "c0", "C1", "C2", "C3", "C0"),
            density_names=("C0", "J0_den"),
            conserved_names=("I0", "J0", "K") + _CLEBSCH_RATIOS,
            wronskian_coeffs=(1.0, 1.0, 1.0),
            wronskian_orders=(1, 2, 3, 4),
        )
    if kind == "second_clebsch":
        if not isinstance(params, SecondClebschParams):
            raise TypeError("second_clebsch takes SecondClebschParams")
        omega = params.omega
        b = np.array([-omega[j] * omega[k] for _, j, k in _CYCLIC])
        return SystemDescriptor(
            kind=kind,
            params=params,
            field=_clebsch_field(omega, b),
            integral_names=_CLEBSCH_INTEGRALS,
            density_names=("C0", "C1", "C2", "C3"),
            conserved_names=("I0", "J0") + _CLEBSCH_RATIOS,
            wronskian_coeffs=tuple(_wcoef_from_a(omega)),
            wronskian_orders=(1, 2, 3, 4),
        )
    if kind == "kirchhoff":
        if not isinstance(params, KirchhoffParams):
            raise TypeError("kirchhoff takes KirchhoffParams")
        a = (params.a1, params.a1, params.a3)
        b = (params.b1, params.b1, params.b3)
        return SystemDescriptor(
            kind=kind,
            params=params,
            field=_clebsch_field(a, b),
            integral_names=("I0", "J0", "c1", "c3", "C1", "C3"),
            density_names=("C1", "C3"),
            conserved_names=("I0", "J0", "m3"),
            wronskian_coeffs=(1.0, 1.0, 2.0 * params.a3 / params.a1 - 1.0),
            wronskian_orders=(1, 2, 3),
        )
    if kind == "lagrange":
        if not isinstance(params, LagrangeParams):
            raise TypeError("lagrange takes LagrangeParams")
        return SystemDescriptor(
            kind=kind,
            params=params,
            field=_lagrange_field(params.alpha, params.gamma),
            integral_names=("I0", "J0", "r", "s", "R", "S"),
            density_names=("R", "S"),
            conserved_names=("I0", "J0", "m3"),
            wronskian_coeffs=(1.0, 1.0, 2.0 * params.alpha - 1.0),
            wronskian_orders=(1, 2, 3),
        )
    if not isinstance(params, PlanarFamilyParams):
        raise TypeError("planar_family takes PlanarFamilyParams")
    return SystemDescriptor(
        kind="planar_family",
        params=params,
        field=_planar_field(params),
        integral_names=("F", "Fhat"),
        density_names=(),
        conserved_names=("F", "Fhat"),
        wronskian_coeffs=None,
        wronskian_orders=(),
    )


def params_from_dict(kind: str, doc: dict) -> object:
    """Build the params object for a kind from plain JSON data, naming any
    missing field in the error."""
    if kind not in SYSTEM_KINDS:
        raise ValueError(f"unknown system kind '{kind}'; expected one of {SYSTEM_KINDS}")
    spec = PARAM_FIELDS[kind]
    for key in spec["required"]:
        if key not in doc:
            raise ValueError(f"{kind} config missing required field '{key}'")
    known = set(spec["required"]) | set(spec["optional"])
    for key in doc:
        if key not in known:
            raise ValueError(f"{kind} config has unknown field '{key}'")
    if kind == "general_clebsch":
        return ClebschParams(
            a=doc["a"], b=doc["b"], beta=doc.get("beta"), wcoef=doc.get("wcoef")
        )
    if kind == "first_clebsch":
        return FirstClebschParams(omega=doc["omega"])
    if kind == "second_clebsch":
        return SecondClebschParams(omega=doc["omega"])
    if kind == "kirchhoff":
        return KirchhoffParams(a1=doc["a1"], a3=doc["a3"], b1=doc["b1"], b3=doc["b3"])
    if kind == "lagrange":
        return LagrangeParams(alpha=doc["alpha"], gamma=doc["gamma"])
    return PlanarFamilyParams(
        qform=doc["qform"],
        ell=doc["ell"],
        ell0=doc.get("ell0", 0.0),
        extra_quad=doc.get("extra_quad"),
        extra_lin=doc.get("extra_lin"),
        extra_const=doc.get("extra_const"),
    )


def params_to_dict(params) -> dict:
    """JSON-ready dict for any catalog params object."""
    if isinstance(params, ClebschParams):
        return {
            "a": params.a.tolist(),
            "b": params.b.tolist(),
            "beta": params.beta,
            "wcoef": params.wcoef.tolist(),
        }
    if isinstance(params, (FirstClebschParams, SecondClebschParams)):
        return {"omega": params.omega.tolist()}
    if isinstance(params, KirchhoffParams):
        return {"a1": params.a1, "a3": params.a3, "b1": params.b1, "b3": params.b3}
    if isinstance(params, LagrangeParams):
        return {"alpha": params.alpha, "gamma": params.gamma}
    if isinstance(params, PlanarFamilyParams):
        return {
            "qform": list(params.qform),
            "ell": params.ell.tolist(),
            "ell0": params.ell0,
            "extra_quad": params.extra_quad.tolist(),
            "extra_lin": params.extra_lin.tolist(),
            "extra_const": params.extra_const.tolist(),
        }
    raise TypeError(f"not a catalog params object: {type(params).__name__}")


def system_to_json(desc: SystemDescriptor) -> dict:
    return {"kind": desc.kind, "params": params_to_dict(desc.params)}


def system_from_json(doc: dict) -> SystemDescriptor:
    for key in ("kind", "params"):
        if key not in doc:
            raise ValueError(f"system document is missing key '{key}'")
    return build_system(doc["kind"], params_from_dict(doc["kind"], doc["params"]))


def _kirchhoff_omega(params: KirchhoffParams) -> np.ndarray:
    return np.array([params.b1 / params.a1, params.b1 / params.a1, params.b3 / params.a1])


def _h1(omega):
    def fn(x):
        m, p = x[:3], x[3:]
        return float(np.dot(m, m) + np.dot(omega, p * p))

    return fn


def _h2(omega):
    ojk = np.array([omega[j] * omega[k] for _, j, k in _CYCLIC])

    def fn(x):
        m, p = x[:3], x[3:]
        return float(np.dot(omega, m * m) - np.dot(ojk, p * p))

    return fn


def _quadratic_h(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def fn(x):
        m, p = x[:3], x[3:]
        return 0.5 * float(np.dot(a, m * m) + np.dot(b, p * p))

    return fn


def _casimir_k1(x):
    p = x[3:]
    return float(np.dot(p, p))


def _casimir_k2(x):
    return float(np.dot(x[:3], x[3:]))


def continuous_invariants(desc: SystemDescriptor) -> ContinuousInvariants:
    """Conserved quantities of the continuous flow for one catalog entry."""
    kind = desc.kind
    if kind == "planar_family":
        qa, qb, qc = desc.params.qform

        def planar_h(x):
            return 0.5 * float(qa * x[0] ** 2 + 2 * qb * x[0] * x[1] + qc * x[1] ** 2)

        return ContinuousInvariants(H=planar_h)
    if kind == "lagrange":
        alpha, gamma = desc.params.alpha, desc.params.gamma

        def lag_h1(x):
            return float(x[0] ** 2 + x[1] ** 2 + alpha * x[2] ** 2 + 2 * gamma * x[5])

        return ContinuousInvariants(
            H=lambda x: 0.5 * lag_h1(x),
            K1=_casimir_k1,
            K2=_casimir_k2,
            lagrangeH1=lag_h1,
        )
    if kind == "first_clebsch":
        omega = desc.params.omega
        return ContinuousInvariants(
            H=_quadratic_h(np.ones(3), omega),
            H1=_h1(omega),
            H2=_h2(omega),
            K1=_casimir_k1,
            K2=_casimir_k2,
        )
    if kind == "second_clebsch":
        omega = desc.params.omega
        b = np.array([-omega[j] * omega[k] for _, j, k in _CYCLIC])
        return ContinuousInvariants(
            H=_quadratic_h(omega, b),
            H1=_h1(omega),
            H2=_h2(omega),
            K1=_casimir_k1,
            K2=_casimir_k2,
        )
    if kind == "kirchhoff":
        params = desc.params
        omega = _kirchhoff_omega(params)
        a = (params.a1, params.a1, params.a3)
        b = (params.b1, params.b1, params.b3)
        return ContinuousInvariants(
            H=_quadratic_h(a, b),
            H1=_h1(omega),
            H2=_h2(omega),
            K1=_casimir_k1,
            K2=_casimir_k2,
        )
    # general Clebsch: H1/H2 need a spectral decomposition; omit them when
    # none exists over the reals
    params = desc.params
    h1 = h2 = None
    try:
        _, omega = decompose_clebsch(params)[0]
    except ValueError:
        omega = None
    if omega is not None:
        h1, h2 = _h1(omega), _h2(omega)
    return ContinuousInvariants(
        H=_quadratic_h(params.a, params.b),
        H1=h1,
        H2=h2,
        K1=_casimir_k1,
        K2=_casimir_k2,
    )


def continuous_wronskian_residual(desc: SystemDescriptor, x) -> float:
    """sum_i gamma_i (mdot_i p_i - m_i pdot_i) along the continuous field;
    identically zero for the 6-dim catalog systems."""
    if desc.wronskian_coeffs is None:
        raise ValueError(f"{desc.kind} has no Wronskian relation")
    x = np.asarray(x, dtype=float)
    xdot = evaluate_field(desc.field, x)
    m, p = x[:3], x[3:]
    mdot, pdot = xdot[:3], xdot[3:]
    gamma = np.asarray(desc.wronskian_coeffs)
    return float(np.sum(gamma * (mdot * p - m * pdot)))


def central_gradient(fn: Callable, x: np.ndarray, scale: float = 1e-6) -> np.ndarray:
    """Central-difference gradient with per-coordinate step scale*(1+|x_j|)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape[0])
    for j in range(x.shape[0]):
        h = scale * (1.0 + abs(x[j]))
        e = np.zeros(x.shape[0])
        e[j] = h
        out[j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return out


def poisson_bracket_e3(F: Callable, G: Callable, x, scale: float = 1e-6) -> float:
    """e(3)* bracket m.(dF_m x dG_m) + p.(dF_m x dG_p - dG_m x dF_p) with
    central-difference gradients. The Casimirs p.p and m.p commute with
    everything; the bracket is antisymmetric."""
    x = np.asarray(x, dtype=float)
    if x.shape != (6,):
        raise ValueError("bracket is defined on 6-dim (m, p) states")
    grad_f = central_gradient(F, x, scale)
    grad_g = central_gradient(G, x, scale)
    fm, fp = grad_f[:3], grad_f[3:]
    gm, gp = grad_g[:3], grad_g[3:]
    m, p = x[:3], x[3:]
    return float(
        np.dot(m, np.cross(fm, gm)) + np.dot(p, np.cross(fm, gp) - np.cross(gm, fp))
    )
