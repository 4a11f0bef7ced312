"""Binary periodic pulse functions with periods 1/(1 + iR), R in Q(sqrt 2).

Function ``i`` is high on ``[D_i + m T_i, D_i + m T_i + x)`` for ``m >= 0``.
Exact work (displacements, alignment procedures, the commensurability
check) uses :class:`QuadExt`; the interval sweep runs in mpmath unless asked
to stay exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .quadext import QuadExt


class PulseError(ValueError):
    pass


class EventBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PulseSystem:
    n: int
    R: QuadExt
    x_high: QuadExt
    delays: tuple[QuadExt, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise PulseError(f"need at least one function, got n={self.n}")
        R = QuadExt.coerce(self.R)
        object.__setattr__(self, "R", R)
        if R.b == 0:
            raise PulseError(f"R must be irrational (nonzero sqrt2 part), got {R}")
        if R.sign() <= 0:
            raise PulseError(f"R must be positive, got {R}")
        delays = tuple(QuadExt.coerce(d) for d in self.delays) or (QuadExt(0),) * self.n
        if len(delays) != self.n:
            raise PulseError(f"{len(delays)} delays given for {self.n} functions")
        object.__setattr__(self, "delays", delays)
        x = QuadExt.coerce(self.x_high)
        object.__setattr__(self, "x_high", x)
        if not QuadExt(0) < x < self.period(self.n):
            raise PulseError(f"high duration {x} must lie strictly between 0 and the smallest period")
        for i, d in enumerate(delays, start=1):
            if not QuadExt(0) <= d < self.period(i):
                raise PulseError(f"delay D_{i} = {d} must satisfy 0 <= D < T_{i}")

    def period(self, i: int) -> QuadExt:
        if not 1 <= i <= self.n:
            raise PulseError(f"function index {i} outside 1..{self.n}")
        return (1 + i * self.R).inverse()

    def periods(self) -> list[QuadExt]:
        return [self.period(i) for i in range(1, self.n + 1)]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "R": self.R.to_json(),
            "x_high": self.x_high.to_json(),
            "delays": [d.to_json() for d in self.delays],
        }


def period(sys: PulseSystem, i: int) -> QuadExt:
    return sys.period(i)


def e_displacement(sys: PulseSystem, i: int, t) -> QuadExt:
    """Distance from ``t`` to the next start of a high of function ``i``, in ``[0, T_i)``."""
    t = QuadExt.coerce(t)
    if t.sign() < 0:
        raise PulseError(f"t must be non-negative, got {t}")
    T = sys.period(i)
    d = sys.delays[i - 1] - t
    return d - T * (d / T).floor()


@dataclass(frozen=True)
class IncommensurabilityVerdict:
    passed: bool
    i: int
    j: int
    bound: int
    violation: tuple[int, int] | None = None


def incommensurability_check(sys: PulseSystem, i: int, j: int, bound: int) -> IncommensurabilityVerdict:
    """Check exactly that ``N1 T_i != N2 T_j`` for all ``1 <= N1, N2 <= bound``.

    Equality in Q(sqrt 2) splits into a rational and a sqrt2 component; for
    each N1 the sqrt2 component pins down the only candidate N2, and only
    that candidate needs the full comparison.
    """
    if i == j:
        raise PulseError("incommensurability check needs two distinct functions")
    if bound < 1:
        raise PulseError(f"bound must be at least 1, got {bound}")
    ti, tj = sys.period(i), sys.period(j)
    for n1 in range(1, bound + 1):
        if tj.b == 0:
            candidates = range(1, bound + 1) if ti.b == 0 else ()
        else:
            n2 = n1 * ti.b / tj.b
            candidates = (int(n2),) if n2.denominator == 1 and 1 <= n2 <= bound else ()
        for n2 in candidates:
            if n1 * ti == n2 * tj:
                return IncommensurabilityVerdict(False, i, j, bound, (n1, n2))
    return IncommensurabilityVerdict(True, i, j, bound)


def commensurable_pairs_bruteforce(sys: PulseSystem, i: int, j: int, bound: int) -> list[tuple[int, int]]:
    """Every ``(N1, N2)`` with ``N1 T_i == N2 T_j``, by direct double loop."""
    ti, tj = sys.period(i), sys.period(j)
    return [(a, b) for a in range(1, bound + 1) for b in range(1, bound + 1) if a * ti == b * tj]


@dataclass(frozen=True)
class TraceEntry:
    index: int
    pos_a: QuadExt
    pos_b: QuadExt
    difference: QuadExt  # signed pos_b - pos_a
    multiplier: int | None = None

    @property
    def gap(self) -> QuadExt:
        return abs(self.difference)

    def to_json(self) -> dict:
        d = {
            "index": self.index,
            "pos_a": self.pos_a.to_json(),
            "pos_b": self.pos_b.to_json(),
            "difference": self.difference.to_json(),
            "gap": self.gap.to_json(),
            "gap_decimal": mpmath.nstr(self.gap.to_mpf(128), 20),
        }
        if self.multiplier is not None:
            d["multiplier"] = self.multiplier
        return d


@dataclass(frozen=True)
class AlignmentTrace:
    kind: str
    i: int
    j: int
    entries: tuple[TraceEntry, ...]
    note: str = ""
    # convergent denominators, cf traces only
    denominators: tuple[int, ...] = field(default=())
    high: QuadExt | None = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def gaps(self) -> list[QuadExt]:
        return [e.gap for e in self.entries]

    def to_json(self) -> dict:
        d = {"kind": self.kind, "i": self.i, "j": self.j, "entries": [e.to_json() for e in self.entries]}
        if self.denominators:
            d["denominators"] = list(self.denominators)
        if self.high is not None and self.entries:
            # achieved gap relative to the high duration
            ratios = [(g / self.high).to_mpf(128) for g in self.gaps]
            d["gap_over_high_decimal"] = [mpmath.nstr(r, 20) for r in ratios]
            d["min_gap_over_high_decimal"] = mpmath.nstr(min(ratios), 20)
        if self.note:
            d["note"] = self.note
        return d


def token_alignment(sys: PulseSystem, i: int, j: int, max_overtakes: int,
                    int_rounding: str = "trunc") -> AlignmentTrace:
    """Run the two-token overtaking procedure step for step.

    Token A walks with the longer period, token B with the shorter.  B steps
    until it passes A; then, repeatedly, the difference is recorded,
    ``mult = 1 + INT(pos_a / difference)``, ``pos_a := (2 pos_a) mult`` and
    ``pos_b := pos_b mult``, returning to the difference step each time.

    ``INT`` keeps the integer portion (truncation toward zero) by default;
    ``int_rounding="floor"`` rounds down instead.  A zero multiplier sends
    both tokens to t = 0; the following zero difference is recorded and the
    trace ends, since the next division is undefined.
    """
    if i == j:
        raise PulseError("token alignment needs two distinct functions")
    if max_overtakes < 1:
        raise PulseError(f"max_overtakes must be at least 1, got {max_overtakes}")
    if int_rounding not in ("trunc", "floor"):
        raise PulseError(f"int_rounding must be 'trunc' or 'floor', got {int_rounding!r}")
    ti, tj = sys.period(i), sys.period(j)
    t_a, t_b = (ti, tj) if ti > tj else (tj, ti)
    pos_a = t_a
    pos_b = QuadExt(0)
    while not pos_b > pos_a:
        pos_b = pos_b + t_b
    entries = []
    note = ""
    while len(entries) < max_overtakes:
        diff = pos_b - pos_a
        if diff == 0:
            entries.append(TraceEntry(len(entries) + 1, pos_a, pos_b, diff))
            note = "difference reached 0 after a zero multiplier; the next multiplier is undefined"
            break
        ratio = pos_a / diff
        mult = 1 + (ratio.trunc() if int_rounding == "trunc" else ratio.floor())
        entries.append(TraceEntry(len(entries) + 1, pos_a, pos_b, diff, mult))
        pos_a = (2 * pos_a) * mult
        pos_b = pos_b * mult
    return AlignmentTrace("token", i, j, tuple(entries), note, high=sys.x_high)


def continued_fraction(x: QuadExt, depth: int) -> list[int]:
    """First ``depth`` partial quotients of a quadratic irrational."""
    out = []
    for _ in range(depth):
        a = x.floor()
        out.append(a)
        frac = x - a
        if frac == 0:
            break
        x = frac.inverse()
    return out


def convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    h0, h1 = 1, quotients[0] if quotients else 0
    k0, k1 = 0, 1
    out = []
    for idx, a in enumerate(quotients):
        if idx == 0:
            out.append((a, 1))
            continue
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append((h1, k1))
    return out


def cf_alignment(sys: PulseSystem, i: int, j: int, depth: int) -> AlignmentTrace:
    """Gaps ``|q T_i - p T_j|`` at the continued-fraction convergents p/q of T_i / T_j."""
    if i == j:
        raise PulseError("cf alignment needs two distinct functions")
    if depth <= 0:
        return AlignmentTrace("cf", i, j, ())
    ti, tj = sys.period(i), sys.period(j)
    quotients = continued_fraction(ti / tj, depth)
    entries = []
    dens = []
    for idx, (p, q) in enumerate(convergents(quotients), start=1):
        pa, pb = q * ti, p * tj
        entries.append(TraceEntry(idx, pa, pb, pb - pa))
        dens.append(q)
    return AlignmentTrace("cf", i, j, tuple(entries), denominators=tuple(dens), high=sys.x_high)


def best_gap_bruteforce(sys: PulseSystem, i: int, j: int, q_max: int) -> list[tuple[int, int, QuadExt]]:
    """Record-setting minima of ``|q T_i - p T_j|`` for q = 1..q_max, p nearest to q T_i / T_j."""
    ti, tj = sys.period(i), sys.period(j)
    ratio = ti / tj
    best = None
    out = []
    for q in range(1, q_max + 1):
        p0 = (q * ratio).floor()
        for p in (p0, p0 + 1):
            if p < 0:
                continue
            gap = abs(q * ti - p * tj)
            if best is None or gap < best:
                best = gap
                out.append((p, q, gap))
    return out


# -- simultaneous-high sweep -----------------------------------------------

@dataclass(frozen=True)
class HighInterval:
    start: object
    end: object
    err: object

    @property
    def length(self):
        return self.end - self.start

    def to_json(self, digits: int = 30) -> dict:
        def fmt(v):
            if isinstance(v, QuadExt):
                return mpmath.nstr(v.to_mpf(4 * digits), digits)
            return mpmath.nstr(v, digits)
        return {"start": fmt(self.start), "end": fmt(self.end), "err": mpmath.nstr(self.err, 3)}


def _windows(start, step, width, horizon):
    out = []
    t = start
    while t < horizon:
        out.append((t, min(t + width, horizon)))
        t = t + step
    return out


def _intersect(a, b):
    out = []
    p = q = 0
    while p < len(a) and q < len(b):
        lo = max(a[p][0], b[q][0])
        hi = min(a[p][1], b[q][1])
        if lo < hi:
            out.append((lo, hi))
        if a[p][1] < b[q][1]:
            p += 1
        else:
            q += 1
    return out


def simultaneous_high_intervals(sys: PulseSystem, horizon, min_duration, precision: int = 256,
                                exact: bool = False, max_events: int = 2_000_000) -> list[HighInterval]:
    """Maximal sub-intervals of ``[0, horizon)`` where all functions are high, of length >= min_duration."""
    horizon = QuadExt.coerce(horizon)
    min_duration = QuadExt.coerce(min_duration)
    if horizon.sign() <= 0:
        raise PulseError("horizon must be positive")
    if min_duration.sign() < 0:
        raise PulseError("min_duration must be non-negative")
    if min_duration > sys.x_high:
        return []
    events = sum(int(float(horizon / T)) + 2 for T in sys.periods())
    if events > max_events:
        raise EventBudgetExceeded(f"{events} pulse windows exceed the budget of {max_events}")

    if exact:
        conv = lambda v: v  # noqa: E731
        err = mpmath.mpf(0)
    else:
        conv = lambda v: v.to_mpf(precision)  # noqa: E731
        margin = int(mpmath.ceil(mpmath.log(float(horizon) + 2, 2))) + 4
        err = mpmath.mpf(2) ** (margin - precision)

    with mpmath.workprec(precision):
        h = conv(horizon)
        width = conv(sys.x_high)
        common = None
        for i in range(1, sys.n + 1):
            w = _windows(conv(sys.delays[i - 1]), conv(sys.period(i)), width, h)
            common = w if common is None else _intersect(common, w)
        md = conv(min_duration)
        return [HighInterval(lo, hi, err) for lo, hi in common if hi - lo >= md]


def pulse_report(sys: PulseSystem, intervals: Sequence[HighInterval] = (),
                 traces: Sequence[AlignmentTrace] = (), extra: dict | None = None) -> dict:
    doc = {
        "system": sys.to_json(),
        "intervals": [iv.to_json() for iv in intervals],
        "traces": [t.to_json() for t in traces],
    }
    if extra:
        doc.update(extra)
    return doc


def sqrt2_over(d: int) -> QuadExt:
    return QuadExt(0, Fraction(1, d))
