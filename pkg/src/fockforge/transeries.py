"""Formal sums of translation operators ``sum_q A_q T_q`` and functions of them.

A real-space factor ``exp(-i q.x)`` becomes ``T_q`` and ``exp(i q.x)`` becomes
``T_{-q}``.  A series is stored as a sparse map ``offset -> coefficient``;
products convolve offsets and keep the left factor's coefficient on the left,
so operator coefficients never get reordered.  ``T_q delta_{k,0}`` is nonzero
only at ``k = -q``, hence :func:`evaluate_at_delta` at label ``k`` returns the
coefficient stored at offset ``-k``, i.e. the Fourier coefficient of
``exp(i k.x)``.

:class:`GradedSeries` adds a bookkeeping power series on top: component ``d``
collects terms of total degree ``d`` in the fluctuation operators, and every
product is cut at the configured order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .fock_core import SparseOperator, identity, operator_norm

IntVec = Tuple[int, ...]
SCALAR = "scalar"
OPERATOR = "operator"

LEADING_TOL = 1e-12
CONVERGENCE_TOL = 1e-8


class KindMismatch(TypeError):
    """Scalar and operator series mixed in one operation."""


def _kind_of(value) -> str:
    return OPERATOR if isinstance(value, SparseOperator) else SCALAR


def _is_zero(value) -> bool:
    if isinstance(value, SparseOperator):
        return value.nnz == 0
    return value == 0


def _size(value) -> float:
    if isinstance(value, SparseOperator):
        return float(np.abs(value.matrix.data).max()) if value.nnz else 0.0
    return abs(value)


class TransSeries:
    """Immutable ``sum_q A_q T_q`` with scalar or operator coefficients.

    ``max_offset`` bounds every stored offset component; terms outside are
    dropped and counted in ``dropped``/``dropped_mass``.  ``period`` folds
    offsets onto a cyclic group instead (wrap-mode grids).
    """

    __slots__ = ("_coeffs", "kind", "dim", "max_offset", "period", "zero", "dropped", "dropped_mass")
    # keep numpy scalars from treating a series as an array (it would iterate __getitem__ forever)
    __array_ufunc__ = None

    def __init__(
        self,
        coefficients: Mapping[IntVec, object] = (),
        *,
        dim: int = 1,
        kind: Optional[str] = None,
        max_offset: Optional[int] = None,
        period: Optional[int] = None,
        zero=None,
        dropped: int = 0,
        dropped_mass: float = 0.0,
    ):
        items = list(dict(coefficients).items())
        if kind is None:
            if zero is not None:
                kind = _kind_of(zero)
            elif items:
                kind = _kind_of(items[0][1])
            else:
                kind = SCALAR
        if kind == OPERATOR and zero is None:
            if not items:
                raise ValueError("an empty operator series needs an explicit zero coefficient")
            op = items[0][1]
            zero = op * 0
        self.kind = kind
        self.dim = dim
        self.max_offset = max_offset
        self.period = period
        self.zero = zero if kind == OPERATOR else 0j
        coeffs: Dict[IntVec, object] = {}
        for key, val in items:
            if _kind_of(val) != kind:
                raise KindMismatch(f"{_kind_of(val)} coefficient in a {kind} series")
            key = self._normalize(key)
            if key is None:
                dropped += 1
                dropped_mass += _size(val)
                continue
            coeffs[key] = coeffs[key] + val if key in coeffs else val
        self._coeffs = {k: v for k, v in sorted(coeffs.items()) if not _is_zero(v)}
        self.dropped = dropped
        self.dropped_mass = dropped_mass

    def _normalize(self, key) -> Optional[IntVec]:
        key = (key,) if isinstance(key, (int, np.integer)) else tuple(int(c) for c in key)
        if len(key) != self.dim:
            raise ValueError(f"offset {key} has the wrong dimension (expected {self.dim})")
        if self.period is not None:
            h = self.period // 2
            key = tuple((c + h) % self.period - h for c in key)
        if self.max_offset is not None and any(abs(c) > self.max_offset for c in key):
            return None
        return key

    # construction helpers -------------------------------------------------

    def _like(self, coeffs, dropped=0, dropped_mass=0.0) -> "TransSeries":
        return TransSeries(
            coeffs,
            dim=self.dim,
            kind=self.kind,
            max_offset=self.max_offset,
            period=self.period,
            zero=self.zero if self.kind == OPERATOR else None,
            dropped=dropped,
            dropped_mass=dropped_mass,
        )

    @classmethod
    def translation(cls, q, coefficient=1.0, **kw) -> "TransSeries":
        """``coefficient * T_q``."""
        q = (q,) if isinstance(q, int) else tuple(q)
        kw.setdefault("dim", len(q))
        return cls({q: coefficient}, **kw)

    @classmethod
    def from_fourier(cls, fourier: Mapping[IntVec, complex], **kw) -> "TransSeries":
        """``sum_q f_q T_{-q}`` for a function ``f(x) = sum_q f_q exp(i q.x)``."""
        out = {}
        for q, v in fourier.items():
            q = (q,) if isinstance(q, int) else tuple(q)
            out[tuple(-c for c in q)] = v
            kw.setdefault("dim", len(q))
        return cls(out, **kw)

    def unit(self) -> "TransSeries":
        """Multiplicative identity: 1 (or the identity operator) at offset 0."""
        if self.kind == SCALAR:
            one = 1.0 + 0j
        else:
            if not self.zero.is_square:
                raise KindMismatch("operator series with non-square coefficients has no unit")
            one = identity(self.zero.domain)
        return self._like({(0,) * self.dim: one})

    def zero_series(self) -> "TransSeries":
        return self._like({})

    # access -----------------------------------------------------------------

    @property
    def coefficients(self) -> Dict[IntVec, object]:
        return dict(self._coeffs)

    def __getitem__(self, offset) -> object:
        key = self._normalize(offset)
        if key is None:
            return self.zero
        return self._coeffs.get(key, self.zero)

    def offsets(self) -> List[IntVec]:
        return list(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    def _compatible(self, other: "TransSeries"):
        if not isinstance(other, TransSeries):
            raise TypeError(f"expected TransSeries, got {type(other).__name__}")
        if other.kind != self.kind:
            raise KindMismatch(f"cannot combine {self.kind} and {other.kind} series")
        if other.dim != self.dim or other.period != self.period:
            raise ValueError("series live on different offset lattices")

    # arithmetic -------------------------------------------------------------

    def __add__(self, other: "TransSeries") -> "TransSeries":
        return series_add(self, other)

    def __sub__(self, other: "TransSeries") -> "TransSeries":
        return series_add(self, series_scale(-1.0, other))

    def __neg__(self) -> "TransSeries":
        return series_scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, TransSeries):
            return series_multiply(self, other)
        return series_scale(other, self)

    def __rmul__(self, alpha):
        return series_scale(alpha, self)

    def max_abs(self) -> float:
        return max((_size(v) for v in self._coeffs.values()), default=0.0)

    def to_json(self, operator_ref: Optional[Callable[[IntVec, object], str]] = None) -> list:
        """Dump as ``[{offset, re, im}]`` or ``[{offset, operator_ref}]``."""
        out = []
        for k, v in self._coeffs.items():
            if self.kind == SCALAR:
                out.append({"offset": list(k), "re": float(np.real(v)), "im": float(np.imag(v))})
            else:
                ref = operator_ref(k, v) if operator_ref else f"op{list(k)}"
                out.append({"offset": list(k), "operator_ref": ref})
        return out

    def __repr__(self) -> str:
        return f"TransSeries({self.kind}, terms={len(self)}, dropped={self.dropped})"


def series_add(s1: TransSeries, s2: TransSeries) -> TransSeries:
    s1._compatible(s2)
    coeffs = dict(s1._coeffs)
    for k, v in s2._coeffs.items():
        coeffs[k] = coeffs[k] + v if k in coeffs else v
    return s1._like(coeffs, s1.dropped + s2.dropped, s1.dropped_mass + s2.dropped_mass)


def series_scale(alpha, s: TransSeries) -> TransSeries:
    if alpha == 0:
        return s._like({}, s.dropped, s.dropped_mass)
    return s._like({k: alpha * v for k, v in s._coeffs.items()}, s.dropped, s.dropped_mass)


def series_multiply(s1: TransSeries, s2: TransSeries) -> TransSeries:
    """Offset convolution ``(S1 S2)_q = sum_{q1+q2=q} A_{q1} B_{q2}`` with ``A`` on the left."""
    s1._compatible(s2)
    operator = s1.kind == OPERATOR
    acc: Dict[IntVec, object] = {}
    for k1, a in s1._coeffs.items():
        for k2, b in s2._coeffs.items():
            k = tuple(x + y for x, y in zip(k1, k2))
            term = (a @ b) if operator else a * b
            acc[k] = acc[k] + term if k in acc else term
    max_off = s1.max_offset if s2.max_offset is None else (
        s2.max_offset if s1.max_offset is None else min(s1.max_offset, s2.max_offset)
    )
    out = TransSeries(
        acc,
        dim=s1.dim,
        kind=s1.kind,
        max_offset=max_off,
        period=s1.period,
        zero=s1.zero if operator else None,
        dropped=s1.dropped + s2.dropped,
        dropped_mass=s1.dropped_mass + s2.dropped_mass,
    )
    return out


def evaluate_at_delta(s, k):
    """``[S] delta_{k,0}``: the coefficient at offset ``-k``.

    For a :class:`GradedSeries` this sums all degree components.
    """
    if isinstance(s, GradedSeries):
        return s.evaluate_at_delta(k)
    k = (k,) if isinstance(k, int) else tuple(k)
    return s[tuple(-c for c in k)]


# ---------------------------------------------------------------------------
# graded series


class GradedSeries:
    """``sum_d eps^d S_d`` with :class:`TransSeries` components, cut at ``order``."""

    __slots__ = ("components", "order", "template")
    __array_ufunc__ = None

    def __init__(self, components: Mapping[int, TransSeries], order: int, template: TransSeries):
        self.order = int(order)
        self.template = template.zero_series()
        self.components: Dict[int, TransSeries] = {
            d: c for d, c in sorted(components.items()) if d <= self.order and len(c)
        }

    @classmethod
    def of(cls, series: TransSeries, degree: int, order: int) -> "GradedSeries":
        return cls({degree: series}, order, series)

    def unit(self) -> "GradedSeries":
        return GradedSeries({0: self.template.unit()}, self.order, self.template)

    def component(self, d: int) -> TransSeries:
        return self.components.get(d, self.template)

    def _check(self, other: "GradedSeries"):
        if not isinstance(other, GradedSeries):
            raise TypeError(f"expected GradedSeries, got {type(other).__name__}")
        self.template._compatible(other.template)

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        self._check(other)
        comps = dict(self.components)
        for d, c in other.components.items():
            comps[d] = comps[d] + c if d in comps else c
        return GradedSeries(comps, min(self.order, other.order), self.template)

    def __sub__(self, other: "GradedSeries") -> "GradedSeries":
        return self + (-1.0) * other

    def __neg__(self) -> "GradedSeries":
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, GradedSeries):
            self._check(other)
            order = min(self.order, other.order)
            comps: Dict[int, TransSeries] = {}
            for d1, a in self.components.items():
                for d2, b in other.components.items():
                    if d1 + d2 > order:
                        continue
                    p = series_multiply(a, b)
                    d = d1 + d2
                    comps[d] = comps[d] + p if d in comps else p
            return GradedSeries(comps, order, self.template)
        return GradedSeries({d: series_scale(other, c) for d, c in self.components.items()}, self.order, self.template)

    def __rmul__(self, alpha):
        return GradedSeries({d: series_scale(alpha, c) for d, c in self.components.items()}, self.order, self.template)

    def truncated(self, order: int) -> "GradedSeries":
        return GradedSeries(self.components, min(order, self.order), self.template)

    def evaluate_at_delta(self, k, degrees: Optional[Iterable[int]] = None):
        degrees = self.components if degrees is None else degrees
        total = self.template.zero
        for d in degrees:
            if d in self.components:
                total = total + evaluate_at_delta(self.components[d], k)
        return total

    def evaluate_by_degree(self, k) -> Dict[int, object]:
        return {d: evaluate_at_delta(c, k) for d, c in self.components.items()}

    @property
    def dropped(self) -> int:
        return sum(c.dropped for c in self.components.values())

    def __repr__(self) -> str:
        return f"GradedSeries(order={self.order}, degrees={list(self.components)})"


# ---------------------------------------------------------------------------
# analytic functions


@dataclass(frozen=True)
class AnalyticFunction:
    """Taylor data ``F(y) = sum_n taylor[n] (y - expansion_point)^n``.

    ``exact`` optionally evaluates F pointwise (used by oracles); polynomials
    are exact from their Taylor data alone.
    """

    taylor: Tuple[complex, ...]
    expansion_point: complex = 0.0
    name: str = "F"
    is_polynomial: bool = False
    exact: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.taylor) < 1:
            raise ValueError("an analytic function needs at least one Taylor coefficient")
        object.__setattr__(self, "taylor", tuple(complex(c) for c in self.taylor))
        object.__setattr__(self, "expansion_point", complex(self.expansion_point))

    def __call__(self, y):
        if self.exact is not None:
            return self.exact(y)
        if not self.is_polynomial:
            raise ValueError(f"{self.name} has no exact pointwise form")
        y = np.asarray(y, dtype=complex) - self.expansion_point
        out = np.zeros_like(y)
        for c in reversed(self.taylor):
            out = out * y + c
        return out


DEFAULT_TAYLOR_LENGTH = 64


def identity_function(expansion_point: complex = 0.0) -> AnalyticFunction:
    return AnalyticFunction((expansion_point, 1.0), expansion_point, "identity", True)


def polynomial(coeffs: Sequence[complex]) -> AnalyticFunction:
    """``sum_n coeffs[n] y^n`` around 0."""
    return AnalyticFunction(tuple(complex(c) for c in coeffs) or (0j,), 0.0, "polynomial", True)


def exp_function(length: int = DEFAULT_TAYLOR_LENGTH) -> AnalyticFunction:
    coeffs = tuple(1.0 / math.factorial(n) for n in range(length))
    return AnalyticFunction(coeffs, 0.0, "exp", False, np.exp)


def log_function(expansion_point: complex = 1.0, length: int = DEFAULT_TAYLOR_LENGTH) -> AnalyticFunction:
    """``ln y`` around ``a``: ``ln a + sum_{n>=1} (-1)^{n+1} (y-a)^n / (n a^n)``."""
    a = complex(expansion_point)
    coeffs = [np.log(a)] + [(-1) ** (n + 1) / (n * a**n) for n in range(1, length)]
    return AnalyticFunction(tuple(coeffs), a, "log", False, np.log)


def power_function(p: float, expansion_point: complex = 1.0, length: int = DEFAULT_TAYLOR_LENGTH) -> AnalyticFunction:
    """``y^p`` around ``a`` via the generalized binomial series."""
    a = complex(expansion_point)
    coeffs, binom = [], 1.0
    for n in range(length):
        coeffs.append(binom * a ** (p - n))
        binom *= (p - n) / (n + 1)
    is_poly = float(p).is_integer() and p >= 0
    return AnalyticFunction(tuple(coeffs), a, f"power({p})", is_poly, lambda y, p=p: np.power(y, p))


def series_apply_function(F: AnalyticFunction, S, order: int):
    """Truncated Taylor evaluation of ``F`` at ``S`` by Horner's rule.

    For a :class:`GradedSeries` the degree-0 part must equal
    ``F.expansion_point`` times the unit; the remainder is the expansion
    variable and the result is cut at ``min(order, S.order)``.  For a plain
    :class:`TransSeries` the expansion variable is ``S - expansion_point``.
    """
    a = F.expansion_point
    n_terms = min(order, len(F.taylor) - 1)
    if isinstance(S, GradedSeries):
        unit = S.unit()
        lead = S.component(0)
        gap = series_add(lead, series_scale(-a, unit.component(0)))
        if gap.max_abs() > LEADING_TOL:
            raise ValueError(
                f"leading term of the series does not match the expansion point {a} (gap {gap.max_abs():.3e})"
            )
        y = GradedSeries({d: c for d, c in S.components.items() if d > 0}, min(order, S.order), S.template)
        unit = unit.truncated(y.order)
    else:
        unit = S.unit()
        y = S - a * unit if a != 0 else S
    result = F.taylor[n_terms] * unit
    for n in range(n_terms - 1, -1, -1):
        result = result * y + F.taylor[n] * unit
    return result


def convergence_gap(previous, current) -> float:
    """Size of the change between two successive truncation orders."""
    if isinstance(previous, SparseOperator):
        return operator_norm(current - previous)
    if isinstance(previous, TransSeries):
        return (current - previous).max_abs()
    return float(np.max(np.abs(np.asarray(current) - np.asarray(previous)))) if np.size(previous) else 0.0


# ---------------------------------------------------------------------------
# lemma: F(f(x)) Fourier coefficients from translation series


@dataclass
class LemmaReport:
    max_abs_error: float
    series_path: Dict[IntVec, complex]
    oracle_path: Dict[IntVec, complex]
    order: int
    grid_points: int
    divergence_flag: bool
    order_gap: float
    dropped: int

    def summary(self) -> dict:
        return {
            "max_abs_error": self.max_abs_error,
            "order": self.order,
            "grid_points": self.grid_points,
            "divergence_flag": self.divergence_flag,
            "order_gap": self.order_gap,
            "dropped": self.dropped,
        }


def _as_series(f_coeffs, max_offset=None) -> TransSeries:
    if isinstance(f_coeffs, TransSeries):
        return f_coeffs
    return TransSeries.from_fourier(f_coeffs, max_offset=max_offset)


def _series_coefficients(F: AnalyticFunction, s: TransSeries, order: int):
    g = series_apply_function(F, s, order)
    return {tuple(-c for c in k): complex(v) for k, v in g.coefficients.items()}, g.dropped


def lemma_check(F: AnalyticFunction, f_coeffs, grid_points: Optional[int] = None, order: Optional[int] = None) -> LemmaReport:
    """Compare ``[F(sum f_q T_{-q})] delta_{k,0}`` with a sampled-grid oracle.

    ``f_coeffs`` is either a mapping ``q -> f_q`` of Fourier coefficients of
    ``f(x) = sum_q f_q exp(i q.x)`` (period 2 pi) or the translation series
    itself.  The oracle samples ``f`` on ``grid_points`` points per axis,
    applies ``F`` pointwise and takes the discrete Fourier transform.
    """
    s = _as_series(f_coeffs)
    if order is None:
        order = len(F.taylor) - 1
    reach = max((max(abs(c) for c in k) for k in s.offsets()), default=0)
    if grid_points is None:
        grid_points = 2 * reach * max(order, 1) + 1 + 16
    dim = s.dim

    series, dropped = _series_coefficients(F, s, order)
    if F.is_polynomial and order >= len(F.taylor) - 1:
        gap = 0.0
    elif order >= 1:
        prev, _ = _series_coefficients(F, s, order - 1)
        keys = set(series) | set(prev)
        gap = max((abs(series.get(k, 0) - prev.get(k, 0)) for k in keys), default=0.0)
    else:
        gap = float("inf")

    x = 2 * np.pi * np.arange(grid_points) / grid_points
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    f_vals = np.zeros(mesh[0].shape, dtype=complex)
    for k, v in s.coefficients.items():
        q = tuple(-c for c in k)
        f_vals += v * np.exp(1j * sum(qi * xi for qi, xi in zip(q, mesh)))
    g_vals = F(f_vals)
    g_hat = np.fft.fftn(g_vals) / grid_points**dim

    oracle: Dict[IntVec, complex] = {}
    h = grid_points // 2
    for idx in np.ndindex(*g_hat.shape):
        val = complex(g_hat[idx])
        if abs(val) > 0:
            oracle[tuple((i + h) % grid_points - h for i in idx)] = val

    keys = set(series) | set(oracle)
    err = max((abs(series.get(k, 0) - oracle.get(k, 0)) for k in keys), default=0.0)
    return LemmaReport(
        max_abs_error=float(err),
        series_path=series,
        oracle_path=oracle,
        order=order,
        grid_points=grid_points,
        divergence_flag=bool(gap >= CONVERGENCE_TOL),
        order_gap=float(gap),
        dropped=dropped,
    )


def random_lemma_instance(rng: np.random.Generator, max_degree: int = 6, max_modes: int = 5, amplitude: float = 0.3, dims=(1, 2), reach: int = 3):
    """A random polynomial F and a random few-mode f for the lemma suite."""
    degree = int(rng.integers(1, max_degree + 1))
    coeffs = rng.uniform(-1, 1, degree + 1) + 1j * rng.uniform(-1, 1, degree + 1)
    dim = int(rng.choice(dims))
    n_modes = int(rng.integers(1, max_modes + 1))
    fourier: Dict[IntVec, complex] = {}
    while len(fourier) < n_modes:
        q = tuple(int(c) for c in rng.integers(-reach, reach + 1, dim))
        r = amplitude * rng.uniform(0, 1)
        fourier[q] = r * np.exp(2j * np.pi * rng.uniform())
    return polynomial(coeffs), fourier
