"""Exact continued-fraction machinery.

A ContinuedFraction is a finite list of partial quotients.  It either
represents a rational exactly (``exact=True``, produced by ``expand``) or
is a truncation of an unknown deeper expansion; in the latter case every
deeper extension lies strictly between the last two convergents, which
gives a certified two-sided rational bracket for the value.  All
comparisons against that value are interval checks: they either decide
exactly or raise ``UndecidableAtDepthError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .arith import as_fraction, largest_power_leq
from .errors import (
    BudgetExceededError,
    UndecidableAtDepthError,
    ValidationError,
)

DEFAULT_DEPTH = 64
MAX_POWER_EXPONENT_BITS = 1 << 14


@dataclass(frozen=True)
class Convergent:
    index: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class ContinuedFraction:
    a: tuple[int, ...]
    exact: bool = False

    def __post_init__(self):
        if not self.a:
            raise ValidationError("continued fraction needs at least one quotient")
        if any(not isinstance(x, int) for x in self.a):
            raise ValidationError("partial quotients must be integers")
        if any(x < 1 for x in self.a[1:]):
            raise ValidationError("partial quotients a_i must be >= 1 for i >= 1")

    @property
    def depth(self) -> int:
        return len(self.a)

    def value_bounds(self) -> tuple[Fraction, Fraction]:
        """Certified inclusive bracket for the value and all deeper truncations."""
        convs = convergents(self)
        last = convs[-1].value
        if self.exact or len(convs) == 1:
            if self.exact:
                return (last, last)
            # unknown tail after a single quotient a_0: value in [a_0, a_0 + 1]
            return (last, last + 1)
        prev = convs[-2].value
        return (min(last, prev), max(last, prev))

    def exact_value(self) -> Fraction:
        if not self.exact:
            raise ValidationError("continued fraction is a truncation, not exact")
        return convergents(self)[-1].value

    def max_quotient(self) -> int:
        return max(self.a)

    def to_json(self) -> list[int]:
        return list(self.a)

    @staticmethod
    def from_json(data) -> "ContinuedFraction":
        return ContinuedFraction(tuple(int(x) for x in data))

    @staticmethod
    def from_quotients(quotients, exact: bool = False) -> "ContinuedFraction":
        return ContinuedFraction(tuple(int(x) for x in quotients), exact)


def golden_cf(depth: int = 40, unit_interval: bool = True) -> ContinuedFraction:
    """All-ones continued fraction; with ``unit_interval`` the value is 1/phi."""
    head = [0] if unit_interval else [1]
    return ContinuedFraction.from_quotients(head + [1] * (depth - 1))


def expand(x) -> ContinuedFraction:
    """Euclidean-algorithm expansion of a rational.

    The final quotient is >= 2 whenever the depth exceeds 1, which makes
    the expansion the unique canonical one and lets round trips be exact.
    """
    x = as_fraction(x)
    quotients = []
    num, den = x.numerator, x.denominator
    while True:
        a, rem = divmod(num, den)
        quotients.append(a)
        if rem == 0:
            break
        num, den = den, rem
    return ContinuedFraction.from_quotients(quotients, exact=True)


def convergents(cf: ContinuedFraction, upto: int | None = None) -> list[Convergent]:
    """Exact convergents p_i/q_i from the standard two-term recurrences."""
    if upto is None:
        upto = cf.depth - 1
    if not 0 <= upto < cf.depth:
        raise ValidationError(f"convergent index {upto} out of range for depth {cf.depth}")
    out = []
    p_prev, q_prev = 1, 0
    p_cur, q_cur = cf.a[0], 1
    out.append(Convergent(0, p_cur, q_cur))
    for i in range(1, upto + 1):
        p_cur, p_prev = cf.a[i] * p_cur + p_prev, p_cur
        q_cur, q_prev = cf.a[i] * q_cur + q_prev, q_cur
        out.append(Convergent(i, p_cur, q_cur))
    return out


def _gap_interval(cf: ContinuedFraction, conv: Convergent) -> tuple[Fraction, Fraction]:
    """Inclusive interval for |value - p_i/q_i|."""
    lo, hi = cf.value_bounds()
    c = conv.value
    upper = max(abs(lo - c), abs(hi - c))
    lower = Fraction(0) if lo <= c <= hi else min(abs(lo - c), abs(hi - c))
    return lower, upper


def verify_approximation_bound(cf: ContinuedFraction, i: int) -> tuple[bool, Fraction]:
    """Check |value - p_i/q_i| < 1/(q_i q_{i+1}) with certified intervals.

    For a truncation the value bracket is an open interval (every deeper
    expansion lies strictly between the last two convergents), so the
    strict bound is certified even when the unattained supremum of the
    gap equals it.  Returns the verdict and the exact slack (bound minus
    the worst-case gap).  At the terminal index of an exact rational the
    gap is zero and the check passes vacuously.
    """
    convs = convergents(cf)
    if not 0 <= i < len(convs):
        raise ValidationError(f"index {i} out of range")
    if i == cf.depth - 1:
        if cf.exact:
            return True, Fraction(0)
        raise UndecidableAtDepthError("bound at the last index needs q_{i+1}; deepen the truncation")
    bound = Fraction(1, convs[i].q * convs[i + 1].q)
    gap_lo, gap_hi = _gap_interval(cf, convs[i])
    open_bracket = not cf.exact
    if gap_hi < bound or (open_bracket and gap_hi == bound):
        return True, bound - gap_hi
    if gap_lo >= bound:
        return False, bound - gap_lo
    raise UndecidableAtDepthError(
        f"gap interval [{gap_lo}, {gap_hi}] straddles the bound {bound}; deepen the truncation"
    )


def is_restricted_up_to_depth(cf: ContinuedFraction, bound: int) -> bool:
    """Depth-limited verdict only: no claim is made about the full tail."""
    return cf.max_quotient() <= bound


def badly_approximable_margin(
    cf: ContinuedFraction, upto: int
) -> tuple[Fraction, Fraction]:
    """Certified interval for min_{i <= upto} q_i^2 |value - p_i/q_i|.

    The minimum over convergents is exactly what is reported; no claim
    about non-convergent denominators is made.
    """
    convs = convergents(cf, upto)
    lo_best = hi_best = None
    for conv in convs:
        gap_lo, gap_hi = _gap_interval(cf, conv)
        scale = Fraction(conv.q * conv.q)
        lo_i, hi_i = scale * gap_lo, scale * gap_hi
        lo_best = lo_i if lo_best is None else min(lo_best, lo_i)
        hi_best = hi_i if hi_best is None else min(hi_best, hi_i)
    return lo_best, hi_best


@dataclass(frozen=True)
class LevelDecomposition:
    """Level split t = l*q with q a convergent denominator near sqrt(t)."""

    t: int
    l: Fraction
    q: int
    p: int
    bound: Fraction  # the certified right-hand side (A+1)/l
    certified: bool
    failure: str | None = None

    def to_json(self) -> dict:
        return {
            "t": str(self.t),
            "l": str(self.l),
            "q": str(self.q),
            "p": str(self.p),
            "bound": str(self.bound),
            "certified": self.certified,
            "failure": self.failure,
        }


def level_decomposition(
    cf: ContinuedFraction, t: int, quotient_bound: int | None = None
) -> LevelDecomposition:
    """Split a level t >= 1 as l*q with q = q_i for q_i <= sqrt(t) < q_{i+1}.

    Certifies |q*value - p| <= (A+1)/l where A bounds the partial
    quotients; when certification fails the decomposition is returned
    with the violated inequality spelled out.
    """
    if t < 1:
        raise ValidationError("level t must be a positive integer")
    bound_a = cf.max_quotient() if quotient_bound is None else quotient_bound
    convs = convergents(cf)
    root = math.isqrt(t)
    pick = None
    for idx in range(len(convs) - 1):
        if convs[idx].q <= root < convs[idx + 1].q:
            pick = convs[idx]
            break
    if pick is None:
        raise UndecidableAtDepthError(
            f"no convergent pair straddles sqrt({t}); extend the expansion"
        )
    q, p = pick.q, pick.p
    l = Fraction(t, q)
    rhs = Fraction(bound_a + 1, 1) / l
    lo, hi = cf.value_bounds()
    worst = max(abs(q * lo - p), abs(q * hi - p))
    if worst <= rhs:
        return LevelDecomposition(t, l, q, p, rhs, True)
    return LevelDecomposition(
        t,
        l,
        q,
        p,
        rhs,
        False,
        failure=f"|q*alpha - p| reaches {worst}, exceeding (A+1)/l = {rhs}",
    )


# -- higher tori construction ------------------------------------------------


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class HigherToriData:
    m: int
    bases: tuple[int, ...]
    depth: int
    denominators: tuple[tuple[int, ...], ...]  # per base, levels 1..depth
    betas: tuple[Fraction, ...]
    q: int
    ps: tuple[int, ...]
    tail_bounds: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "bases": list(self.bases),
            "depth": self.depth,
            "denominators": [[str(d) for d in row] for row in self.denominators],
            "betas": [f"{b.numerator}/{b.denominator}" for b in self.betas],
            "q": str(self.q),
            "ps": [str(p) for p in self.ps],
        }


def higher_tori_alpha(m: int, bases, digits, depth: int) -> HigherToriData:
    """Partial sums of the base-power series used for the torus angles.

    ``digits[i][n-1]`` is the numerator at level n for base ``bases[i]``.
    Denominators are the largest powers of each base not exceeding
    2**(m**(2n)), found by exact integer search.  Also returns the common
    denominator q = prod_i D_{i,depth}, the numerators over q, and the
    certified tail bound 2*b_i**2 / 2**(m**(2*depth+2)) for each angle.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    bases = tuple(int(b) for b in bases)
    if len(bases) != m or any(not _is_odd_prime(b) for b in bases):
        raise ValidationError("need m odd prime bases")
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    top_exponent = m ** (2 * depth + 2)
    if top_exponent > MAX_POWER_EXPONENT_BITS:
        raise BudgetExceededError(
            f"2**{top_exponent} exceeds the big-integer budget of 2**{MAX_POWER_EXPONENT_BITS}"
        )
    digits = [list(row) for row in digits]
    if len(digits) != m or any(len(row) != depth for row in digits):
        raise ValidationError("digits must be an m x depth array")
    denominators = []
    betas = []
    for i, b in enumerate(bases):
        row = []
        beta = Fraction(0)
        for n in range(1, depth + 1):
            digit = int(digits[i][n - 1])
            if not 1 <= digit <= b - 1:
                raise ValidationError(f"digit {digit} out of range for base {b}")
            d = largest_power_leq(b, 2 ** (m ** (2 * n)))
            row.append(d)
            beta += Fraction(digit, d)
        denominators.append(tuple(row))
        betas.append(beta)
    q = 1
    for row in denominators:
        q *= row[-1]
    ps = []
    for beta in betas:
        p = beta * q
        if p.denominator != 1:
            raise ValidationError("numerator over the common denominator is not integral")
        ps.append(p.numerator)
    tails = tuple(
        Fraction(2 * b * b, 2 ** (m ** (2 * depth + 2))) for b in bases
    )
    return HigherToriData(
        m, bases, depth, tuple(denominators), tuple(betas), q, tuple(ps), tails
    )


# -- joint technical conditions ----------------------------------------------


def _coprime_factorizations(q: int, parts: int):
    """All ordered splits of q into ``parts`` pairwise coprime factors,
    assigning whole prime-power blocks."""
    factors = []
    n, d = q, 2
    while d * d <= n:
        if n % d == 0:
            power = 1
            while n % d == 0:
                n //= d
                power *= d
            factors.append(power)
        d += 1
    if n > 1:
        factors.append(n)
    if len(factors) > 12:
        raise BudgetExceededError("too many prime factors to search factorizations")

    def assign(idx, current):
        if idx == len(factors):
            yield tuple(current)
            return
        for slot in range(parts):
            current[slot] *= factors[idx]
            yield from assign(idx + 1, current)
            current[slot] //= factors[idx]

    yield from assign(0, [1] * parts)


def verify_technical_conditions(
    m: int,
    q: int,
    ps,
    l,
    bound_k,
    alphas=None,
    factorization=None,
) -> tuple[bool, dict]:
    """Check the residue and approximation hypotheses behind the torus map.

    For each coordinate the numerator p_i must vanish modulo every other
    factor l_j and be invertible modulo its own factor l_i (so its image
    generates the l_i summand of Z/q under the coprime splitting), every
    l_i must be at most l, and, when value intervals are supplied,
    |q*alpha_i - p_i| < K/l must hold with certainty.
    """
    ps = [int(p) for p in ps]
    l = as_fraction(l)
    bound_k = as_fraction(bound_k)
    if len(ps) != m:
        raise ValidationError("need one numerator per coordinate")
    diagnosis: dict = {"q": q, "ps": list(ps)}

    def residue_check(ls) -> tuple[bool, str | None]:
        if len(ls) != m:
            return False, f"factorization has {len(ls)} parts, need {m}"
        prod = 1
        for li in ls:
            prod *= li
        if prod != q:
            return False, f"factors multiply to {prod}, not {q}"
        for a in range(m):
            for b in range(a + 1, m):
                if math.gcd(ls[a], ls[b]) != 1:
                    return False, f"factors l_{a + 1}, l_{b + 1} are not coprime"
        for i, p in enumerate(ps):
            if not 1 <= p <= q - 1:
                return False, f"p_{i + 1} = {p} outside 1..q-1"
            for j in range(m):
                if j != i and p % ls[j] != 0:
                    return False, f"p_{i + 1} = {p} not divisible by l_{j + 1} = {ls[j]}"
            if math.gcd(p % ls[i], ls[i]) != 1:
                return False, f"p_{i + 1} mod l_{i + 1} = {p % ls[i]} does not generate Z/{ls[i]}"
        return True, None

    chosen = None
    if factorization is not None:
        ls = tuple(int(x) for x in factorization)
        ok, why = residue_check(ls)
        if ok:
            chosen = ls
        else:
            diagnosis["residue_failure"] = why
    else:
        last_reason = "q has no factorization into the requested parts"
        for ls in _coprime_factorizations(q, m):
            ok, why = residue_check(ls)
            if ok:
                chosen = ls
                break
            last_reason = why
        if chosen is None:
            diagnosis["residue_failure"] = last_reason
    if chosen is None:
        return False, diagnosis
    diagnosis["factorization"] = list(chosen)

    oversized = [li for li in chosen if li > l]
    if oversized:
        diagnosis["scale_failure"] = f"factor {oversized[0]} exceeds l = {l}"
        return False, diagnosis

    if alphas is not None:
        rhs = bound_k / l
        for i, alpha in enumerate(alphas):
            if isinstance(alpha, tuple):
                lo, hi = (as_fraction(alpha[0]), as_fraction(alpha[1]))
            else:
                lo = hi = as_fraction(alpha)
            worst = max(abs(q * lo - ps[i]), abs(q * hi - ps[i]))
            best = (
                Fraction(0)
                if lo <= Fraction(ps[i], q) <= hi
                else min(abs(q * lo - ps[i]), abs(q * hi - ps[i]))
            )
            if worst < rhs:
                continue
            if best >= rhs:
                diagnosis["approximation_failure"] = (
                    f"|q*alpha_{i + 1} - p_{i + 1}| >= {best} but K/l = {rhs}"
                )
                return False, diagnosis
            raise UndecidableAtDepthError(
                f"approximation check for alpha_{i + 1} is undecidable at this depth"
            )
        diagnosis["approximation_bound"] = str(rhs)
    return True, diagnosis
