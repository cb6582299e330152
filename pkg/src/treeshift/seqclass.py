"""Finitely presented moment sequences and their periodicity.

A sequence ``(c_n)`` of positive reals is described by one of

* :class:`ClosedForm` -- the Dirichlet family ``sqrt((n+q)/(n+1))`` or the
  Bergman family ``sqrt((n+1)/(n+q))``, optionally with finitely many entries
  overridden;
* :class:`EventuallyPeriodic` -- a preperiod followed by a repeated block;
* :class:`PrefixOnly` -- finitely many observed values and nothing else.

Comparisons are made on ``c_n**2``.  When every input is rational (ints,
:class:`~fractions.Fraction`, strings such as ``"3/2"``, or floats with a short
decimal form such as ``1.5``) they are exact; otherwise a relative tolerance of
``1e-12`` applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import IndexOutOfRange, QTooSmall, SpecError, SpecParseError

RTOL = 1e-12
_FAMILIES = ("dirichlet", "bergman")


def exact_value(x) -> Fraction | None:
    """Rational value of ``x`` if it is meant to be rational, else ``None``."""
    if isinstance(x, bool):
        raise SpecError("booleans are not sequence values")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            return None
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        text = repr(x)
        mantissa = text.split("e")[0].replace("-", "").replace(".", "").lstrip("0")
        if len(mantissa) <= 12:
            return Fraction(text)
        return None
    return None


def _parse_number(x):
    if isinstance(x, str):
        if x.strip().lower() in ("pi", "π"):
            return math.pi
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise SpecParseError(f"cannot parse number {x!r}") from exc
    if isinstance(x, (int, float, Fraction)) and not isinstance(x, bool):
        return x
    raise SpecParseError(f"expected a number, got {x!r}")


def _sq(x):
    e = exact_value(x)
    return e * e if e is not None else float(x) ** 2


def _positive(values, what):
    for v in values:
        if not float(v) > 0:
            raise SpecError(f"{what} must be positive, got {v!r}")


def values_equal(a, b, rtol: float = RTOL) -> bool:
    """Equality of two squared moments (exact when both are Fractions)."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= rtol * max(abs(fa), abs(fb))


# ---------------------------------------------------------------- specs


class MomentSequenceSpec:
    """Base class; use one of the three concrete variants."""

    exact = True

    def sq(self, n: int):
        """``c_n**2`` as a Fraction when exact, otherwise a float."""
        raise NotImplementedError

    def __call__(self, n: int) -> float:
        return evaluate(self, n)


@dataclass(frozen=True)
class ClosedForm(MomentSequenceSpec):
    family: str
    q: object
    overrides: tuple = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        q = _parse_number(self.q)
        object.__setattr__(self, "q", q)
        if float(q) < 1:
            raise QTooSmall(q)
        ov = self.overrides
        if isinstance(ov, Mapping):
            ov = ov.items()
        ov = tuple(sorted((int(i), _parse_number(v)) for i, v in ov))
        if any(i < 0 for i, _ in ov) or len({i for i, _ in ov}) != len(ov):
            raise SpecError("override indices must be distinct and non-negative")
        _positive([v for _, v in ov], "override values")
        object.__setattr__(self, "overrides", ov)

    @property
    def _q_exact(self):
        return exact_value(self.q)

    @property
    def is_constant_family(self) -> bool:
        qe = self._q_exact
        return qe == 1 if qe is not None else float(self.q) == 1.0

    @property
    def override_end(self) -> int:
        """First index from which the family formula applies."""
        return self.overrides[-1][0] + 1 if self.overrides else 0

    def family_sq(self, n: int):
        qe = self._q_exact
        if qe is not None:
            r = (n + qe) / Fraction(n + 1)
        else:
            r = (n + float(self.q)) / (n + 1)
        return r if self.family == "dirichlet" else 1 / r

    def sq(self, n):
        for i, v in self.overrides:
            if i == n:
                return _sq(v)
        return self.family_sq(n)

    def to_json(self):
        out = {"family": self.family, "q": _num_json(self.q)}
        if self.overrides:
            out["overrides"] = {str(i): _num_json(v) for i, v in self.overrides}
        return out


@dataclass(frozen=True)
class EventuallyPeriodic(MomentSequenceSpec):
    preperiod: tuple
    period: tuple

    def __post_init__(self):
        pre = tuple(_parse_number(v) for v in self.preperiod)
        per = tuple(_parse_number(v) for v in self.period)
        if not per:
            raise SpecError("period must be non-empty")
        _positive(pre + per, "sequence values")
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def value(self, n: int):
        if n < 0:
            raise IndexOutOfRange(f"negative index {n}")
        p = len(self.preperiod)
        if n < p:
            return self.preperiod[n]
        return self.period[(n - p) % len(self.period)]

    def sq(self, n):
        return _sq(self.value(n))

    def to_json(self):
        return {
            "preperiod": [_num_json(v) for v in self.preperiod],
            "period": [_num_json(v) for v in self.period],
        }


@dataclass(frozen=True)
class PrefixOnly(MomentSequenceSpec):
    values: tuple
    exact = False

    def __post_init__(self):
        vals = tuple(_parse_number(v) for v in self.values)
        _positive(vals, "sequence values")
        object.__setattr__(self, "values", vals)

    def sq(self, n):
        if not 0 <= n < len(self.values):
            raise IndexOutOfRange(f"index {n} outside observed prefix of length {len(self.values)}")
        return _sq(self.values[n])

    def to_json(self):
        return {"prefix": [_num_json(v) for v in self.values]}


def _num_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


def dirichlet(q, overrides=()) -> ClosedForm:
    return ClosedForm("dirichlet", q, overrides)


def bergman(q, overrides=()) -> ClosedForm:
    return ClosedForm("bergman", q, overrides)


def parse_sequence_spec(obj) -> MomentSequenceSpec:
    if isinstance(obj, MomentSequenceSpec):
        return obj
    if not isinstance(obj, Mapping):
        raise SpecParseError(f"sequence description must be an object, got {obj!r}")
    keys = set(obj)
    if "family" in keys:
        if "q" not in keys:
            raise SpecParseError("family description needs 'q'")
        return ClosedForm(str(obj["family"]).lower(), obj["q"], obj.get("overrides", ()))
    if "period" in keys:
        return EventuallyPeriodic(tuple(obj.get("preperiod", ())), tuple(obj["period"]))
    if "prefix" in keys:
        return PrefixOnly(tuple(obj["prefix"]))
    raise SpecParseError(f"unrecognised sequence description with keys {sorted(keys)}")


def evaluate(spec: MomentSequenceSpec, n: int) -> float:
    """``c_n`` as a float."""
    if n < 0:
        raise IndexOutOfRange(f"negative index {n}")
    if isinstance(spec, ClosedForm):
        for i, v in spec.overrides:
            if i == n:
                return float(v)
        q = float(spec.q)
        r = (n + q) / (n + 1)
        return math.sqrt(r if spec.family == "dirichlet" else 1 / r)
    if isinstance(spec, EventuallyPeriodic):
        return float(spec.value(n))
    if isinstance(spec, PrefixOnly):
        if n >= len(spec.values):
            raise IndexOutOfRange(f"index {n} outside observed prefix of length {len(spec.values)}")
        return float(spec.values[n])
    raise TypeError(f"not a sequence spec: {spec!r}")


def reciprocal(spec: MomentSequenceSpec) -> MomentSequenceSpec:
    """The sequence ``1/c_n`` in the same presentation."""

    def inv(v):
        return 1 / v if isinstance(v, Fraction) else (Fraction(1, v) if isinstance(v, int) else 1.0 / v)

    if isinstance(spec, ClosedForm):
        other = "bergman" if spec.family == "dirichlet" else "dirichlet"
        return ClosedForm(other, spec.q, tuple((i, inv(v)) for i, v in spec.overrides))
    if isinstance(spec, EventuallyPeriodic):
        return EventuallyPeriodic(tuple(map(inv, spec.preperiod)), tuple(map(inv, spec.period)))
    return PrefixOnly(tuple(map(inv, spec.values)))


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class PeriodicityVerdict:
    """``kind`` is one of ``periodic``, ``eventually_periodic``, ``non_periodic``,
    ``unknown_prefix``.  A constant sequence is ``periodic`` with ``period=1``."""

    kind: str
    preperiod: int | None = None
    period: int | None = None
    certified: str = "exact"
    depth: int | None = None
    witness: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "kind": self.kind,
            "preperiod": self.preperiod,
            "period": self.period,
            "certified": self.certified,
            "depth": self.depth,
            "witness": dict(self.witness),
        }


def minimal_period(seq, eq=None) -> int:
    """Smallest ``k`` dividing ``len(seq)`` with ``seq`` a repetition of ``seq[:k]``.

    Uses the failure function (longest proper border) of ``seq``.
    """
    if eq is None:
        eq = lambda a, b: a == b  # noqa: E731
    n = len(seq)
    if n == 0:
        raise ValueError("empty sequence")
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k > 0 and not eq(seq[i], seq[k]):
            k = fail[k - 1]
        if eq(seq[i], seq[k]):
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return p if n % p == 0 else n


def normalize(spec: EventuallyPeriodic) -> EventuallyPeriodic:
    """Minimal preperiod and minimal period describing the same sequence."""
    sq_pre = [_sq(v) for v in spec.preperiod]
    sq_per = [_sq(v) for v in spec.period]
    k = minimal_period(sq_per, values_equal)
    pre = list(spec.preperiod)
    per = list(spec.period[:k])
    sq_per = sq_per[:k]
    while pre and values_equal(sq_pre[-1], sq_per[-1]):
        pre.pop()
        sq_pre.pop()
        per = [per[-1]] + per[:-1]
        sq_per = [sq_per[-1]] + sq_per[:-1]
    return EventuallyPeriodic(tuple(pre), tuple(per))


def _as_eventually_periodic(spec: ClosedForm) -> EventuallyPeriodic:
    """Materialise a constant family (q = 1) with overrides."""
    M = spec.override_end
    ov = dict(spec.overrides)
    pre = tuple(ov.get(i, 1) for i in range(M))
    return EventuallyPeriodic(pre, (1,))


def classify(spec: MomentSequenceSpec) -> PeriodicityVerdict:
    if isinstance(spec, ClosedForm):
        if spec.is_constant_family:
            return classify(_as_eventually_periodic(spec))
        direction = "decreasing" if spec.family == "dirichlet" else "increasing"
        return PeriodicityVerdict(
            "non_periodic",
            witness={"strictly_monotone_from": spec.override_end, "direction": direction},
        )
    if isinstance(spec, EventuallyPeriodic):
        norm = normalize(spec)
        n0, k = len(norm.preperiod), len(norm.period)
        kind = "periodic" if n0 == 0 else "eventually_periodic"
        return PeriodicityVerdict(kind, n0, k)
    if isinstance(spec, PrefixOnly):
        return _classify_prefix(spec)
    raise TypeError(f"not a sequence spec: {spec!r}")


def _classify_prefix(spec: PrefixOnly) -> PeriodicityVerdict:
    sq = [_sq(v) for v in spec.values]
    L = len(sq)
    for total in range(1, L + 1):
        for k in range(1, total + 1):
            n0 = total - k
            if L - n0 < 2 * k:
                continue
            if all(values_equal(sq[m], sq[m + k]) for m in range(n0, L - k)):
                kind = "periodic" if n0 == 0 else "eventually_periodic"
                return PeriodicityVerdict(kind, n0, k, certified="prefix", depth=L)
    return PeriodicityVerdict("unknown_prefix", certified="prefix", depth=L)


def tails_equal(spec: MomentSequenceSpec, m1: int, m2: int) -> bool:
    """Whether ``c_{m1+j} == c_{m2+j}`` for every ``j >= 0``.

    For :class:`PrefixOnly` only the observed prefix is compared.
    """
    if m1 < 0 or m2 < 0:
        raise IndexOutOfRange("negative shift")
    if m1 == m2:
        return True
    if isinstance(spec, ClosedForm):
        if not spec.is_constant_family:
            # the tail is strictly monotone, so shifted tails never coincide
            return False
        spec = _as_eventually_periodic(spec)
    if isinstance(spec, EventuallyPeriodic):
        norm = normalize(spec)
        n0, k = len(norm.preperiod), len(norm.period)
        stop = max(0, n0 - min(m1, m2)) + k
        return all(values_equal(norm.sq(m1 + j), norm.sq(m2 + j)) for j in range(stop))
    L = len(spec.values)
    stop = L - max(m1, m2)
    return all(values_equal(spec.sq(m1 + j), spec.sq(m2 + j)) for j in range(max(stop, 0)))


def _eventual_structure(spec):
    """``(start, period)`` for eventually periodic presentations, else None."""
    if isinstance(spec, ClosedForm):
        if not spec.is_constant_family:
            return None
        spec = _as_eventually_periodic(spec)
    if isinstance(spec, EventuallyPeriodic):
        return len(spec.preperiod), len(spec.period)
    return None


def first_mismatch(a: MomentSequenceSpec, b: MomentSequenceSpec):
    """First ``n`` with ``c_n != c~_n``, as ``(n or None, exact)``.

    ``exact`` is False only when a :class:`PrefixOnly` side leaves the
    comparison open beyond its prefix.  A mismatch found is always definitive.
    """
    if isinstance(a, PrefixOnly) or isinstance(b, PrefixOnly):
        L = min(len(s.values) for s in (a, b) if isinstance(s, PrefixOnly))
        for n in range(L):
            if not values_equal(a.sq(n), b.sq(n)):
                return n, True
        return None, False

    sa, sb = _eventual_structure(a), _eventual_structure(b)
    if sa is not None and sb is not None:
        stop = max(sa[0], sb[0]) + math.lcm(sa[1], sb[1])
        for n in range(stop):
            if not values_equal(a.sq(n), b.sq(n)):
                return n, True
        return None, True

    if sa is None and sb is None:
        # two non-constant closed forms
        M = max(a.override_end, b.override_end)
        for n in range(M):
            if not values_equal(a.sq(n), b.sq(n)):
                return n, True
        same_q = values_equal(_sq(a.q), _sq(b.q))
        if a.family == b.family and same_q:
            return None, True
        # distinct families/parameters agree at no index (at most at two, for safety scan)
        for n in range(M, M + 8):
            if not values_equal(a.sq(n), b.sq(n)):
                return n, True
        raise AssertionError("closed forms coincide on 8 consecutive indices")

    # one strictly monotone tail against an eventually periodic sequence
    cf, ep_struct = (a, sb) if sa is None else (b, sa)
    start = max(cf.override_end, ep_struct[0])
    for n in range(start + ep_struct[1] + 1):
        if not values_equal(a.sq(n), b.sq(n)):
            return n, True
    raise AssertionError("monotone tail matched a full period")  # pragma: no cover


def sup_window_product(spec: MomentSequenceSpec, n: int):
    """``sup_m prod_{j<n} c_{m+j}`` over all ``m >= 0``.

    Returns ``(value, certified)`` where ``certified`` is ``"exact"`` or
    ``"prefix"``.
    """
    if n == 0:
        return 1.0, "exact"

    def window(m):
        return math.prod(evaluate(spec, m + j) for j in range(n))

    if isinstance(spec, PrefixOnly):
        L = len(spec.values)
        if L < n:
            raise IndexOutOfRange(f"prefix of length {L} has no window of length {n}")
        return max(window(m) for m in range(L - n + 1)), "prefix"
    struct = _eventual_structure(spec)
    if struct is not None:
        start, k = struct
        return max(window(m) for m in range(start + k)), "exact"
    # non-constant closed form: windows starting at m >= M are monotone in m
    M = spec.override_end
    best = max((window(m) for m in range(M)), default=0.0)
    if spec.family == "dirichlet":
        # c_m decreasing: the sup over m >= M sits at m = M
        return max(best, window(M)), "exact"
    # c_m increasing to 1: the sup over m >= M is the limit 1 (not attained)
    return max(best, 1.0), "exact"
