"""Radius tail families f(r) = P(R >= r), prefix moments, and regular-variation diagnostics.

Five parametric families are supported, named in config strings as
``const:<c>``, ``geom:<q>``, ``logpow:<b>``, ``pow:<p>``, ``slowlog``.
Every family is normalized to a valid tail: f(1) = 1 and f non-increasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "TailFunction",
    "TailMoments",
    "TailExhaustedError",
    "parse_tail",
    "tail_prefix_total",
    "karamata_ratio",
    "rv_limit_probe",
    "moment_diagnostic",
    "cf_estimate",
    "star_probe",
    "triangle_probe",
]

_FAMILIES = ("const", "geom", "logpow", "pow", "slowlog")


class TailExhaustedError(ZeroDivisionError):
    """Raised when a diagnostic needs f(x) > 0 but the tail is already zero."""


@dataclass(frozen=True)
class TailFunction:
    """One radius law, identified by family name and a single parameter.

    const:c    R == c exactly                        (mean c)
    geom:q     f(r) = q**(r-1), q in (0,1)           (mean 1/(1-q))
    logpow:b   monotone envelope of min(ln^b(r)/r, 1), b > -1   (infinite mean)
    pow:p      f(r) = r**p, p in (-1,0)              (infinite mean)
    slowlog    f(r) = 1/(1 + ln r)                   (infinite mean)
    """

    family: str
    param: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown tail family {self.family!r}")
        p = self.param
        if self.family == "const" and (p < 1 or p != int(p)):
            raise ValueError("const radius must be a positive integer")
        if self.family == "geom" and not 0.0 < p < 1.0:
            raise ValueError("geom parameter must lie in (0,1)")
        if self.family == "logpow" and p <= -1.0:
            raise ValueError("logpow exponent must exceed -1")
        if self.family == "pow" and not -1.0 < p < 0.0:
            raise ValueError("pow exponent must lie in (-1,0)")

    # -- constructors ----------------------------------------------------
    @classmethod
    def constant(cls, c: int) -> "TailFunction":
        return cls("const", float(c))

    @classmethod
    def geometric(cls, q: float) -> "TailFunction":
        return cls("geom", q)

    @classmethod
    def log_power(cls, b: float) -> "TailFunction":
        return cls("logpow", b)

    @classmethod
    def pure_power(cls, p: float) -> "TailFunction":
        return cls("pow", p)

    @classmethod
    def slow_log(cls) -> "TailFunction":
        return cls("slowlog", 0.0)

    # -- basic values -----------------------------------------------------
    @property
    def spec_string(self) -> str:
        if self.family == "slowlog":
            return "slowlog"
        if self.family == "const":
            return f"const:{int(self.param)}"
        return f"{self.family}:{self.param:g}"

    def mean(self) -> float | None:
        """E[R] when finite, else None."""
        if self.family == "const":
            return self.param
        if self.family == "geom":
            return 1.0 / (1.0 - self.param)
        return None

    def _raw_logpow(self, rf: np.ndarray) -> np.ndarray:
        # ln(r)^b / r for r >= 2; single expression shared by every code path
        return np.log(rf) ** self.param / rf

    def _envelope_head(self) -> float:
        # running minimum of min(ln^b(r)/r, 1) up to the unimodal peak; for
        # integer arguments this is min(1, ln(2)^b / 2)
        return min(1.0, float(self._raw_logpow(np.array([2.0]))[0]))

    def value(self, r) -> float:
        """f(r) = P(R >= r). Accepts arbitrarily large integers."""
        if r < 1:
            raise ValueError("radius argument must be >= 1")
        fam = self.family
        if fam == "const":
            return 1.0 if r <= self.param else 0.0
        if r == 1:
            return 1.0
        if r <= 2**53:
            return float(self.values(np.asarray([r], dtype=np.int64))[0])
        # log-space fallback for astronomically large radii
        lr = math.log(r)
        if fam == "geom":
            return 0.0
        if fam == "pow":
            return math.exp(self.param * lr)
        if fam == "slowlog":
            return 1.0 / (1.0 + lr)
        return min(self._envelope_head(), math.exp(self.param * math.log(lr) - lr))

    def values(self, r: np.ndarray) -> np.ndarray:
        """Vectorized f over an int64 array of radii >= 1."""
        r = np.asarray(r, dtype=np.int64)
        if r.size and int(r.min()) < 1:
            raise ValueError("radius argument must be >= 1")
        fam = self.family
        if fam == "const":
            return np.where(r <= self.param, 1.0, 0.0)
        rf = r.astype(np.float64)
        if fam == "geom":
            return np.power(self.param, rf - 1.0)
        if fam == "pow":
            return np.power(rf, self.param)
        if fam == "slowlog":
            return 1.0 / (1.0 + np.log(rf))
        # logpow envelope: 1 at r=1, else min(1, ln(2)^b/2, ln(r)^b/r)
        out = np.empty_like(rf)
        one = r == 1
        out[one] = 1.0
        rest = ~one
        with np.errstate(divide="ignore"):
            base = self._raw_logpow(rf[rest])
        out[rest] = np.minimum(self._envelope_head(), base)
        return out

    # -- sampling ----------------------------------------------------------
    def sample_radius(self, u: float) -> int:
        """Exact inverse transform: max{r >= 1 : f(r) >= u} for u in (0,1]."""
        if not 0.0 < u <= 1.0:
            raise ValueError("u must lie in (0,1]")
        if self.family == "const":
            return int(self.param)
        if self.value(2) < u:
            return 1
        lo, hi = 2, 4
        steps = 0
        while self.value(hi) >= u:
            lo, hi = hi, hi * 2
            steps += 1
            if steps > 256:
                raise OverflowError("radius quantile exceeds 2**258; use sample_radii with a cap instead")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.value(mid) >= u:
                lo = mid
            else:
                hi = mid
        return lo

    def sample_radii(self, u: np.ndarray, cap: int) -> np.ndarray:
        """Vectorized inverse transform clamped at cap: min(R, cap), exact below cap."""
        u = np.asarray(u, dtype=np.float64)
        if u.size == 0:
            return np.empty(0, dtype=np.int64)
        if not (0.0 < u.min() and u.max() <= 1.0):
            raise ValueError("u must lie in (0,1]")
        if cap < 1:
            raise ValueError("cap must be >= 1")
        fam = self.family
        if fam == "const":
            return np.full(u.shape, min(int(self.param), cap), dtype=np.int64)
        capf = float(cap)
        with np.errstate(divide="ignore", over="ignore"):
            if fam == "geom":
                guess = 1.0 + np.floor(np.log(u) / math.log(self.param))
            elif fam == "pow":
                guess = np.floor(np.power(u, 1.0 / self.param))
            elif fam == "slowlog":
                guess = np.floor(np.exp(1.0 / u - 1.0))
            else:
                guess = self._logpow_guess(u)
        guess = np.where(np.isfinite(guess), guess, capf + 2.0)
        r = np.clip(guess, 1.0, capf).astype(np.int64)
        # local correction restores the exact discrete inverse
        for _ in range(64):
            bad_hi = self.values(r) < u
            if bad_hi.any():
                r[bad_hi] -= 1
                continue
            room = r < cap
            if room.any():
                bad_lo = np.zeros_like(bad_hi)
                bad_lo[room] = self.values(r[room] + 1) >= u[room]
                if bad_lo.any():
                    r[bad_lo] += 1
                    continue
            break
        else:
            raise RuntimeError("radius correction failed to converge")
        return np.maximum(r, 1)

    def _logpow_guess(self, u: np.ndarray) -> np.ndarray:
        # solve ln(r)^b / r = u on the decreasing branch: y - b ln y = -ln u
        b = self.param
        head = self._envelope_head()
        y = np.maximum(-np.log(u), 1.5)
        for _ in range(12):
            y = np.maximum(-np.log(u) + b * np.log(y), 1.0)
        out = np.exp(y)
        return np.where(u > head, 1.0, out)


def parse_tail(spec: str) -> TailFunction:
    """Parse a config-file family string such as 'geom:0.5' (case-sensitive)."""
    if spec == "slowlog":
        return TailFunction.slow_log()
    name, sep, arg = spec.partition(":")
    if not sep or name not in ("const", "geom", "logpow", "pow"):
        raise ValueError(f"unrecognized tail spec {spec!r}")
    if name == "const":
        return TailFunction.constant(int(arg))
    return TailFunction(name, float(arg))


# -- prefix sums and moments ---------------------------------------------

_CHUNK = 1 << 16


def _prefix_array(tail: TailFunction, n_max: int) -> np.ndarray:
    """prefix[k] = sum_{i<=k} f(i); chunked cumsum with an fsum-compensated carry."""
    out = np.empty(n_max + 1, dtype=np.float64)
    out[0] = 0.0
    parts: list[float] = []
    for start in range(1, n_max + 1, _CHUNK):
        stop = min(start + _CHUNK, n_max + 1)
        vals = tail.values(np.arange(start, stop, dtype=np.int64))
        out[start:stop] = math.fsum(parts) + np.cumsum(vals)
        parts.append(math.fsum(vals))
    return out


@lru_cache(maxsize=128)
def tail_prefix_total(tail: TailFunction, n: int) -> float:
    """F_n = sum_{i<=n} f(i), compensated."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if tail.family == "const":
        return float(min(n, int(tail.param)))
    if tail.family == "geom":
        q = tail.param
        return (1.0 - q**n) / (1.0 - q)
    parts = []
    for start in range(1, n + 1, _CHUNK):
        stop = min(start + _CHUNK, n + 1)
        parts.append(math.fsum(tail.values(np.arange(start, stop, dtype=np.int64))))
    return math.fsum(parts)


class TailMoments:
    """Cached prefix sums F_k and the normalized sequence g_k = F_k / mu."""

    def __init__(self, tail: TailFunction, n_max: int):
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        self.tail = tail
        self.n_max = n_max
        self.prefix = _prefix_array(tail, n_max)
        self.mu = tail.mean()

    def prefix_sum(self, k: int) -> float:
        if not 1 <= k <= self.n_max:
            raise IndexError(f"k={k} outside [1, {self.n_max}]")
        return float(self.prefix[k])

    def g_value(self, k: int) -> float:
        if self.mu is None:
            raise ValueError(f"infinite mean: family {self.tail.family!r} has no g sequence")
        return self.prefix_sum(k) / self.mu

    @property
    def g(self) -> np.ndarray | None:
        if self.mu is None:
            return None
        return self.prefix[1:] / self.mu


# -- regular-variation diagnostics ----------------------------------------


def karamata_ratio(tail: TailFunction, x: int) -> float:
    """x f(x) / F_x; tends to p+1 for f regularly varying with index p > -1."""
    if x < 2:
        raise ValueError("x must be >= 2")
    return x * tail.value(x) / tail_prefix_total(tail, x)


def rv_limit_probe(tail: TailFunction, t: float, x: int) -> float:
    """f(floor(x t)) / f(x); tends to t**p for f in RV_p."""
    if x < 1 or x * t < 1:
        raise ValueError("require x >= 1 and x*t >= 1")
    fx = tail.value(x)
    if fx == 0.0:
        raise TailExhaustedError(f"tail exhausted: f({x}) = 0")
    return tail.value(int(x * t)) / fx


def moment_diagnostic(tail: TailFunction, lam: float, k: int) -> float:
    """f(k) k^(1+lambda) ln k; vanishes iff the light-tail moment condition holds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return tail.value(k) * float(k) ** (1.0 + lam) * math.log(k)


def cf_estimate(tail: TailFunction, n: int) -> float:
    """F_n / (n f(n)); converges to 1/(1+p) for pow:p and to 1 for slowly varying tails."""
    if n < 2:
        raise ValueError("n must be >= 2")
    fn = tail.value(n)
    if fn == 0.0:
        raise TailExhaustedError(f"tail exhausted: f({n}) = 0")
    return tail_prefix_total(tail, n) / (n * fn)


def star_probe(tail: TailFunction, n: int, beta: float, points: int = 64) -> float:
    """sup of x f(x) / (n f(n)) over x in [n^beta, n], sampled geometrically."""
    lo = max(2, int(n**beta))
    xs = np.unique(np.geomspace(lo, n, points).astype(np.int64))
    vals = xs * tail.values(xs) / (n * tail.value(n))
    return float(vals.max())


def triangle_probe(tail: TailFunction, n: int, beta: float) -> float:
    """F_{n^beta} / (f(n) n ln n)."""
    k = max(1, int(n**beta))
    return tail_prefix_total(tail, k) / (tail.value(n) * n * math.log(n))
