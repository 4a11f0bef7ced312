"""Exact multivariate polynomials in cos/sin of two angles plus auxiliary variables.

Polynomials live over a :class:`VarRegistry` whose first four variables are
``cos_a, sin_a, cos_b, sin_b``.  In normal form every ``sin^2`` is rewritten
as ``1 - cos^2``, so each term carries ``sin_a`` and ``sin_b`` to at most the
first power.  Raw (non-normal) polynomials are allowed too; they are needed
for the Pythagorean identities themselves and for the aggregated
sum-of-squares, which must equal the literal sum of squares at every point.
"""
from __future__ import annotations

import json
import re
import threading
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm
from typing import Iterable, Mapping, Sequence

import mpmath
import numpy as np

try:
    from gmpy2 import mpz as _bigint
except ImportError:  # pragma: no cover
    _bigint = int

BASE_VARS = ("cos_a", "sin_a", "cos_b", "sin_b")
# (sin index, cos index) pairs rewritten by the normal form
_PYTHAGOREAN = ((1, 0), (3, 2))
_AUX_NAME = re.compile(r"^(eps[1-9][0-9]*|z[1-9][0-9]*)$")

MIN_PRECISION = 64
DEFAULT_PRECISION = 256

# sparse schoolbook product below this many term pairs
_KRONECKER_MIN_PAIRS = 2048
# refuse to pack more than this many bytes per operand
_KRONECKER_MAX_BYTES = 1 << 28


class RegistryMismatch(ValueError):
    pass


class PolyFormatError(ValueError):
    pass


@dataclass(frozen=True)
class VarRegistry:
    names: tuple[str, ...] = BASE_VARS

    def __post_init__(self) -> None:
        if tuple(self.names[:4]) != BASE_VARS:
            raise ValueError(f"registry must start with {BASE_VARS}, got {self.names[:4]}")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        for name in self.names[4:]:
            if not _AUX_NAME.match(name):
                raise ValueError(f"unknown variable name {name!r}")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"variable {name!r} not registered") from None

    def extended(self, *names: str) -> VarRegistry:
        return VarRegistry(self.names + tuple(n for n in names if n not in self.names))


BASE = VarRegistry()


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


def _reduce_terms(terms: Mapping[tuple[int, ...], Fraction]) -> dict[tuple[int, ...], Fraction]:
    """Apply ``sin^2 -> 1 - cos^2`` until every sin exponent is at most 1."""
    out: dict[tuple[int, ...], Fraction] = {}
    for e, c in terms.items():
        if e[1] < 2 and e[3] < 2:
            out[e] = out.get(e, 0) + c
            continue
        expanded = [(list(e), c)]
        for si, ci in _PYTHAGOREAN:
            nxt = []
            for ev, cv in expanded:
                half, ev[si] = divmod(ev[si], 2)
                if half == 0:
                    nxt.append((ev, cv))
                    continue
                base_cos = ev[ci]
                for m in range(half + 1):
                    ew = list(ev)
                    ew[ci] = base_cos + 2 * m
                    nxt.append((ew, cv * comb(half, m) * (-1) ** m))
            expanded = nxt
        for ev, cv in expanded:
            key = tuple(ev)
            out[key] = out.get(key, 0) + cv
    return {e: c for e, c in out.items() if c}


def _mul_schoolbook(p, q):
    out: dict = {}
    get = out.get
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = get(e, 0) + c1 * c2
    return out


def _mul_kronecker(p, q, nvars):
    """Product by packing each operand into one big integer.

    Exponent vectors map to slots via mixed radix sized so no slot overflows
    into its neighbour, coefficients are scaled to integers and split by sign
    so every packed digit is non-negative.  Returns ``None`` when packing
    would be too large.
    """
    dp = [max(e[v] for e in p) for v in range(nvars)]
    dq = [max(e[v] for e in q) for v in range(nvars)]
    radix = [a + b + 1 for a, b in zip(dp, dq)]
    strides = []
    s = 1
    for r in radix:
        strides.append(s)
        s *= r
    slots = s

    den_p = lcm(*(c.denominator for c in p.values()))
    den_q = lcm(*(c.denominator for c in q.values()))
    ip = {e: c.numerator * (den_p // c.denominator) for e, c in p.items()}
    iq = {e: c.numerator * (den_q // c.denominator) for e, c in q.items()}
    bound = min(len(p), len(q)) * max(map(abs, ip.values())) * max(map(abs, iq.values()))
    width = (bound.bit_length() + 8) // 8
    if slots * width > _KRONECKER_MAX_BYTES:
        return None

    def slot(e):
        return sum(a * b for a, b in zip(e, strides))

    def pack(coeffs):
        pos = bytearray()
        neg = bytearray()
        for e, c in coeffs.items():
            buf = pos if c > 0 else neg
            off = slot(e) * width
            if len(buf) < off + width:
                buf.extend(bytes(off + width - len(buf)))
            buf[off:off + width] = abs(c).to_bytes(width, "little")
        return _bigint(int.from_bytes(pos, "little")), _bigint(int.from_bytes(neg, "little"))

    p_pos, p_neg = pack(ip)
    q_pos, q_neg = pack(iq)
    plus = p_pos * q_pos + p_neg * q_neg
    minus = p_pos * q_neg + p_neg * q_pos

    def unpack(v):
        if not v:
            return {}
        raw = int(v).to_bytes(slots * width, "little")
        arr = np.frombuffer(raw, dtype=np.uint8).reshape(slots, width)
        nz = np.flatnonzero(arr.any(axis=1))
        return {int(k): int.from_bytes(raw[k * width:(k + 1) * width], "little") for k in nz}

    up = unpack(plus)
    um = unpack(minus)
    active = [(v, r) for v, r in enumerate(radix) if r > 1]
    zero_e = [0] * nvars
    out = {}
    for k in up.keys() | um.keys():
        num = up.get(k, 0) - um.get(k, 0)
        if not num:
            continue
        e = list(zero_e)
        rem = k
        for v, r in active:
            rem, e[v] = divmod(rem, r)
        out[tuple(e)] = num
    return out, den_p * den_q


def _mul_terms(p, q, nvars, normal):
    """Product term map; reduced to normal form when ``normal``."""
    if not p or not q:
        return {}
    if len(p) * len(q) >= _KRONECKER_MIN_PAIRS:
        r = _mul_kronecker(p, q, nvars)
        if r is not None:
            nums, den = r
            # reduce on integer numerators, build each Fraction once
            if normal:
                nums = _reduce_terms(nums)
            return {e: Fraction(c, den) for e, c in nums.items() if c}
    out = _mul_schoolbook(p, q)
    return _reduce_terms(out) if normal else out


def _grlex_key(e: tuple[int, ...]):
    return (sum(e), e)


class TrigPoly:
    """Immutable polynomial with exact rational coefficients.

    ``normal=True`` (the default) keeps the sin-exponent normal form; results
    of arithmetic are normal only when both operands are.
    """

    __slots__ = ("registry", "_terms", "normal")

    def __init__(
        self,
        registry: VarRegistry = BASE,
        terms: Mapping[Sequence[int], object] | None = None,
        normal: bool = True,
    ) -> None:
        self.registry = registry
        self.normal = normal
        clean: dict[tuple[int, ...], Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != len(registry) or min(e, default=0) < 0:
                raise ValueError(f"exponent vector {e} does not fit registry of {len(registry)} variables")
            c = _as_fraction(c)
            if c:
                clean[e] = clean.get(e, 0) + c
        clean = {e: c for e, c in clean.items() if c}
        self._terms = _reduce_terms(clean) if normal else clean

    @classmethod
    def _make(cls, registry, terms, normal, reduce=True):
        obj = cls.__new__(cls)
        obj.registry = registry
        obj.normal = normal
        if normal and reduce:
            obj._terms = _reduce_terms(terms)
        else:
            obj._terms = {e: c for e, c in terms.items() if c}
        return obj

    @classmethod
    def constant(cls, c, registry: VarRegistry = BASE, normal: bool = True) -> TrigPoly:
        return cls(registry, {(0,) * len(registry): c}, normal)

    @classmethod
    def var(cls, name: str, registry: VarRegistry = BASE, power: int = 1, normal: bool = True) -> TrigPoly:
        e = [0] * len(registry)
        e[registry.index(name)] = power
        return cls(registry, {tuple(e): 1}, normal)

    @classmethod
    def zero(cls, registry: VarRegistry = BASE) -> TrigPoly:
        return cls(registry)

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, e: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(e), Fraction(0))

    def degree(self, name: str | None = None) -> int:
        if not self._terms:
            return -1
        if name is None:
            return max(sum(e) for e in self._terms)
        i = self.registry.index(name)
        return max(e[i] for e in self._terms)

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in descending graded-lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def normalized(self) -> TrigPoly:
        return TrigPoly._make(self.registry, self._terms, True)

    def as_raw(self) -> TrigPoly:
        return TrigPoly._make(self.registry, self._terms, False)

    def embed(self, registry: VarRegistry) -> TrigPoly:
        """Same polynomial over a registry that extends this one."""
        if registry.names[: len(self.registry)] != self.registry.names:
            raise RegistryMismatch(f"{registry.names} does not extend {self.registry.names}")
        pad = (0,) * (len(registry) - len(self.registry))
        return TrigPoly._make(registry, {e + pad: c for e, c in self._terms.items()}, self.normal)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> TrigPoly:
        if isinstance(other, TrigPoly):
            if other.registry != self.registry:
                raise RegistryMismatch(f"{self.registry.names} vs {other.registry.names}")
            return other
        if isinstance(other, (int, Fraction)):
            return TrigPoly.constant(other, self.registry, self.normal)
        raise TypeError(f"cannot combine TrigPoly with {type(other).__name__}")

    def __add__(self, other) -> TrigPoly:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        # a sum of normal-form polynomials is already in normal form
        return TrigPoly._make(self.registry, out, self.normal and other.normal, reduce=False)

    __radd__ = __add__

    def __neg__(self) -> TrigPoly:
        return TrigPoly._make(self.registry, {e: -c for e, c in self._terms.items()}, self.normal, reduce=False)

    def __sub__(self, other) -> TrigPoly:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> TrigPoly:
        return self._coerce(other) - self

    def __mul__(self, other) -> TrigPoly:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        normal = self.normal and other.normal
        terms = _mul_terms(self._terms, other._terms, len(self.registry), normal)
        return TrigPoly._make(self.registry, terms, normal, reduce=False)

    __rmul__ = __mul__

    def __truediv__(self, c) -> TrigPoly:
        if not isinstance(c, (int, Fraction)):
            return NotImplemented
        return self.scale(Fraction(1) / c)

    def __pow__(self, k: int) -> TrigPoly:
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = TrigPoly.constant(1, self.registry, self.normal)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c) -> TrigPoly:
        c = _as_fraction(c)
        terms = {e: v * c for e, v in self._terms.items()} if c else {}
        return TrigPoly._make(self.registry, terms, self.normal, reduce=False)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = TrigPoly.constant(other, self.registry, self.normal)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return (
            self.registry == other.registry
            and self.normal == other.normal
            and self._terms == other._terms
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if not self._terms:
            return "TrigPoly(0)"
        parts = []
        for e, c in self.sorted_terms()[:8]:
            mono = "*".join(
                n if k == 1 else f"{n}^{k}" for n, k in zip(self.registry.names, e) if k
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        more = " + ..." if len(self._terms) > 8 else ""
        return f"TrigPoly({' + '.join(parts)}{more})"

    # -- evaluation ---------------------------------------------------------

    def _point_list(self, point) -> list:
        if isinstance(point, Mapping):
            missing = [n for n in self.registry.names if n not in point]
            if missing:
                raise ValueError(f"point lacks values for {missing}")
            return [point[n] for n in self.registry.names]
        point = list(point)
        if len(point) != len(self.registry):
            raise ValueError(f"point has {len(point)} coordinates, registry has {len(self.registry)}")
        return point

    def eval(self, point, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
        """Nested Horner evaluation at ``precision`` bits of working precision."""
        if precision < MIN_PRECISION:
            raise ValueError(f"precision must be at least {MIN_PRECISION} bits, got {precision}")
        pts = self._point_list(point)
        with mpmath.workprec(precision):
            xs = [mpmath.mpf(v) if not isinstance(v, Fraction) else mpmath.mpf(v.numerator) / v.denominator
                  for v in pts]
            conv = {}

            def coef(c):
                v = conv.get(c)
                if v is None:
                    v = conv[c] = mpmath.mpf(c.numerator) / c.denominator
                return v

            return +_horner(list(self._terms.items()), xs, 0, coef, mpmath.mpf(0))

    def eval_exact(self, point) -> Fraction:
        pts = [_as_fraction(v) for v in self._point_list(point)]
        return _horner(list(self._terms.items()), pts, 0, lambda c: c, Fraction(0))

    def eval_float(self, point) -> float:
        pts = [float(v) for v in self._point_list(point)]
        return float(_horner(list(self._terms.items()), pts, 0, float, 0.0))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "variables": list(self.registry.names),
            "terms": [{"c": f"{c.numerator}/{c.denominator}", "e": list(e)} for e, c in self.sorted_terms()],
        }
        if not self.normal:
            doc["normal_form"] = False
        return doc


def _horner(items, xs, v, coef, zero):
    """Evaluate ``items`` (exponent, coefficient) by Horner in variable ``v``, recursing on the rest."""
    if not items:
        return zero
    if v == len(xs):
        total = zero
        for _, c in items:
            total = total + coef(c)
        return total
    groups: dict[int, list] = {}
    for e, c in items:
        groups.setdefault(e[v], []).append((e, c))
    x = xs[v]
    acc = zero
    prev = None
    for k in sorted(groups, reverse=True):
        if prev is not None:
            acc = acc * x ** (prev - k)
        acc = acc + _horner(groups[k], xs, v + 1, coef, zero)
        prev = k
    if prev:
        acc = acc * x ** prev
    return acc


def serialize(p: TrigPoly, indent: int | None = None) -> str:
    return json.dumps(p.to_json(), indent=indent, separators=None if indent else (",", ":"))


_COEF = re.compile(r"^(-?(?:0|[1-9][0-9]*))/([1-9][0-9]*)$")


def from_json(doc, registry: VarRegistry | None = None) -> TrigPoly:
    """Build a polynomial from its JSON object, checking the canonical form strictly."""
    if not isinstance(doc, dict):
        raise PolyFormatError("polynomial document must be an object")
    extra = set(doc) - {"variables", "terms", "normal_form"}
    if extra:
        raise PolyFormatError(f"unknown field(s) {sorted(extra)}")
    if "variables" not in doc or "terms" not in doc:
        raise PolyFormatError("polynomial needs 'variables' and 'terms'")
    names = doc["variables"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise PolyFormatError("'variables' must be a list of names")
    try:
        reg = VarRegistry(tuple(names))
    except ValueError as exc:
        raise PolyFormatError(f"unknown variable: {exc}") from None
    if registry is not None and reg != registry:
        raise PolyFormatError(f"unknown variable set {names}, expected {list(registry.names)}")
    normal = doc.get("normal_form", True)
    if not isinstance(normal, bool):
        raise PolyFormatError("'normal_form' must be a boolean")
    if not isinstance(doc["terms"], list):
        raise PolyFormatError("'terms' must be a list")
    terms = {}
    prev = None
    for idx, t in enumerate(doc["terms"]):
        if not isinstance(t, dict) or set(t) != {"c", "e"}:
            raise PolyFormatError(f"terms[{idx}] must have exactly keys 'c' and 'e'")
        m = _COEF.match(t["c"]) if isinstance(t["c"], str) else None
        if not m:
            raise PolyFormatError(f"terms[{idx}]: bad coefficient {t['c']!r}")
        num, den = int(m.group(1)), int(m.group(2))
        if num == 0:
            raise PolyFormatError(f"terms[{idx}]: zero coefficient")
        c = Fraction(num, den)
        if c.denominator != den:
            raise PolyFormatError(f"terms[{idx}]: coefficient {t['c']} not in lowest terms")
        e = t["e"]
        if (not isinstance(e, list) or len(e) != len(reg)
                or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 0 for k in e)):
            raise PolyFormatError(f"terms[{idx}]: bad exponent vector {e!r}")
        e = tuple(e)
        if normal and (e[1] > 1 or e[3] > 1):
            raise PolyFormatError(f"terms[{idx}]: sin exponent above 1 in a normal-form polynomial")
        if prev is not None and not _grlex_key(e) < _grlex_key(prev):
            raise PolyFormatError(f"terms[{idx}]: terms not in strictly descending graded-lex order")
        prev = e
        terms[e] = c
    return TrigPoly._make(reg, terms, normal)


def deserialize(text: str, registry: VarRegistry | None = None) -> TrigPoly:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolyFormatError(f"malformed JSON: {exc}") from None
    return from_json(doc, registry)


# -- the angle recurrences -------------------------------------------------

class _RecurrenceCache:
    """Per-registry memo of cos(k b) and sin(k b), filled by the two-term recurrence."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._cos: dict[VarRegistry, list[TrigPoly]] = {}
        self._sin: dict[VarRegistry, list[TrigPoly]] = {}

    def get(self, k: int, registry: VarRegistry, which: str) -> TrigPoly:
        if k < 0:
            raise ValueError(f"k must be non-negative, got {k}")
        with self._lock:
            cos = self._cos.get(registry)
            if cos is None:
                cb = TrigPoly.var("cos_b", registry)
                cos = self._cos[registry] = [TrigPoly.constant(1, registry), cb]
                self._sin[registry] = [TrigPoly.zero(registry), TrigPoly.var("sin_b", registry)]
            sin = self._sin[registry]
            cb2 = cos[1] * 2
            while len(cos) <= k:
                cos.append(cb2 * cos[-1] - cos[-2])
                sin.append(cb2 * sin[-1] - sin[-2])
            return cos[k] if which == "cos" else sin[k]


_cache = _RecurrenceCache()


def cos_k_beta(k: int, registry: VarRegistry = BASE) -> TrigPoly:
    """cos(k b) as a polynomial in cos_b via cos(kb) = 2 cos((k-1)b) cos b - cos((k-2)b)."""
    return _cache.get(k, registry, "cos")


def sin_k_beta(k: int, registry: VarRegistry = BASE) -> TrigPoly:
    """sin(k b) = 2 sin((k-1)b) cos b - sin((k-2)b); every term carries sin_b once."""
    return _cache.get(k, registry, "sin")


@lru_cache(maxsize=None)
def cos_alpha_plus_k_beta(k: int, registry: VarRegistry = BASE) -> TrigPoly:
    """cos(a + k b) = cos a cos(k b) - sin a sin(k b)."""
    ca = TrigPoly.var("cos_a", registry)
    sa = TrigPoly.var("sin_a", registry)
    return ca * cos_k_beta(k, registry) - sa * sin_k_beta(k, registry)


def trig_point(alpha, beta, registry: VarRegistry = BASE, extra: Iterable = (), precision: int = DEFAULT_PRECISION):
    """Coordinates ``(cos a, sin a, cos b, sin b, *extra)`` at ``precision`` bits."""
    with mpmath.workprec(precision):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        pt = [mpmath.cos(a), mpmath.sin(a), mpmath.cos(b), mpmath.sin(b), *extra]
    if len(pt) != len(registry):
        raise ValueError(f"point has {len(pt)} coordinates, registry has {len(registry)}")
    return pt


def rational_circle_point(t: Fraction) -> tuple[Fraction, Fraction]:
    """Rational point ``((1-t^2)/(1+t^2), 2t/(1+t^2))`` on the unit circle."""
    t = _as_fraction(t)
    d = 1 + t * t
    return (1 - t * t) / d, 2 * t / d


__all__ = [
    "BASE",
    "BASE_VARS",
    "DEFAULT_PRECISION",
    "PolyFormatError",
    "RegistryMismatch",
    "TrigPoly",
    "VarRegistry",
    "cos_alpha_plus_k_beta",
    "cos_k_beta",
    "deserialize",
    "from_json",
    "rational_circle_point",
    "serialize",
    "sin_k_beta",
    "trig_point",
]
