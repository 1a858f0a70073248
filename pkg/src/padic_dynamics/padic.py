"""Exact truncated p-adic arithmetic.

Values are digit vectors over {0, ..., p-1} attached to a base exponent u:
the encoded number is sum(d[i] * p**(u + i)).  Every value is exact modulo
p**(u + len(d)); nothing is ever rounded, precision is only ever truncated.
A PrecisionContext fixes the prime, the per-value digit budget and (for the
field mode) the admissible window of base exponents.  The integer-ring mode
is exactly the residue ring Z/p^N.

No floating point is used anywhere; norms are carried symbolically as
integer exponents (see NormValue) and converted to Fraction on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import (
    AlphabetViolation,
    BudgetExceeded,
    ParseError,
    WindowViolation,
)

_SMALL_PRIMES = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}


def _check_prime(p: int) -> None:
    if p not in _SMALL_PRIMES:
        # fall back to trial division for unusual (but legal) primes
        if p < 2 or any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)):
            raise AlphabetViolation(f"{p} is not a prime")


@dataclass(frozen=True, order=True)
class NormValue:
    """A p-adic absolute value, |x| = p**(-exponent), kept exactly.

    ``exponent is None`` encodes "zero to known precision": the value is
    indistinguishable from 0 at the current truncation and ``bound_exp``
    records the certified bound |x| <= p**(-bound_exp).  Ordering treats
    such a zero as strictly smaller than every definite norm.
    """

    sort_key: tuple = field(init=False, repr=False)
    prime: int = field(compare=False)
    exponent: Optional[int] = field(compare=False, default=None)
    bound_exp: Optional[int] = field(compare=False, default=None)

    def __post_init__(self):
        if self.exponent is None:
            key = (0, 0)
        else:
            key = (1, -self.exponent)
        object.__setattr__(self, "sort_key", key)

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    def as_fraction(self) -> Fraction:
        if self.exponent is None:
            return Fraction(0)
        if self.exponent >= 0:
            return Fraction(1, self.prime ** self.exponent)
        return Fraction(self.prime ** (-self.exponent))

    def scaled(self, k: int) -> "NormValue":
        """Multiply by p**(-k), i.e. tighten/loosen by k digit positions."""
        if self.exponent is None:
            b = None if self.bound_exp is None else self.bound_exp + k
            return NormValue(self.prime, None, b)
        return NormValue(self.prime, self.exponent + k)

    def __repr__(self):
        if self.exponent is None:
            if self.bound_exp is None:
                return f"|0|_{self.prime}"
            return f"|<=p^-{self.bound_exp}|_{self.prime}"
        return f"p^{-self.exponent}" if self.exponent else "1"


def norm_from_exp(p: int, k: int) -> NormValue:
    """The norm p**(-k)."""
    return NormValue(p, k)


def norm_zero(p: int, bound_exp: Optional[int] = None) -> NormValue:
    return NormValue(p, None, bound_exp)


@dataclass(frozen=True)
class PrecisionContext:
    """Fixed prime, digit budget and exponent window.

    space_tag "Zp" pins base_exp to 0; "Qp" allows base exponents in
    [u_min, u_max].  total_digits spans every representable position, so
    engine-internal integers live in [0, p**total_digits) and denote the
    value p**u_min * m.
    """

    prime: int
    digit_budget: int
    u_min: int = 0
    u_max: int = 0
    space_tag: str = "Zp"
    ball_budget: int = 1 << 20

    def __post_init__(self):
        _check_prime(self.prime)
        if self.digit_budget < 1:
            raise BudgetExceeded("digit budget must be positive")
        if self.space_tag not in ("Zp", "Qp"):
            raise WindowViolation(f"unknown space tag {self.space_tag!r}")
        if self.space_tag == "Zp" and (self.u_min != 0 or self.u_max != 0):
            raise WindowViolation("Zp context requires u_min == u_max == 0")
        if self.u_min > self.u_max:
            raise WindowViolation("empty exponent window")

    @property
    def total_digits(self) -> int:
        return (self.u_max - self.u_min) + self.digit_budget

    @property
    def modulus(self) -> int:
        return self.prime ** self.total_digits

    @property
    def resolution_exp(self) -> int:
        """Finest certified position: values are exact mod p**resolution_exp."""
        return self.u_min + self.total_digits

    # -- engine-internal integer bridge -------------------------------

    def to_int(self, x: "PAdic") -> int:
        """Scaled-integer representative of x, exact mod self.modulus."""
        if x.prime != self.prime:
            raise AlphabetViolation("prime mismatch with context")
        if x.base_exp < self.u_min:
            raise WindowViolation(
                f"base exponent {x.base_exp} below window minimum {self.u_min}")
        shift = x.base_exp - self.u_min
        acc = 0
        for i, d in enumerate(reversed(x.digits)):
            acc = acc * self.prime + d
        return (acc * self.prime ** shift) % self.modulus

    def from_int(self, m: int, base_exp: Optional[int] = None) -> "PAdic":
        """PAdic carrying all total_digits digits of m (mod modulus)."""
        m %= self.modulus
        u = self.u_min if base_exp is None else base_exp
        if u != self.u_min:
            q, r = divmod(m, self.prime ** (u - self.u_min))
            if r:
                raise WindowViolation("integer not representable at this base exponent")
            m = q
        n = self.modulus // self.prime ** (u - self.u_min)
        digits = []
        while m:
            m, d = divmod(m, self.prime)
            digits.append(d)
        length = self.total_digits - (u - self.u_min)
        digits.extend([0] * (length - len(digits)))
        return PAdic(self.prime, u, tuple(digits))

    def norm_of_int(self, m: int) -> NormValue:
        """Norm of the value p**u_min * m, as certified by this context."""
        m %= self.modulus
        if m == 0:
            return norm_zero(self.prime, self.resolution_exp)
        v = 0
        while m % self.prime == 0:
            m //= self.prime
            v += 1
        return NormValue(self.prime, self.u_min + v)


@dataclass(frozen=True)
class PAdic:
    """Immutable truncated p-adic value: sum(digits[i] * p**(base_exp+i)).

    The value is exact modulo p**(base_exp + len(digits)); known_radius
    reports that bound.  Instances are plain data — all arithmetic lives
    in module-level functions.
    """

    prime: int
    base_exp: int
    digits: tuple

    def __post_init__(self):
        for i, d in enumerate(self.digits):
            if not isinstance(d, int) or not 0 <= d < self.prime:
                raise AlphabetViolation(
                    f"digit {d!r} at position {i} outside 0..{self.prime - 1}")

    @property
    def known_exp(self) -> int:
        """Value is exact modulo p**known_exp."""
        return self.base_exp + len(self.digits)

    @property
    def known_radius(self) -> NormValue:
        return NormValue(self.prime, self.known_exp)

    def digit_at(self, position: int) -> int:
        """Digit at absolute position (exponent) `position`, 0 if below range."""
        i = position - self.base_exp
        if i < 0:
            return 0
        if i >= len(self.digits):
            raise WindowViolation(f"position {position} beyond known precision")
        return self.digits[i]

    def normalized(self) -> "PAdic":
        """Strip leading zero digits into the base exponent (display form)."""
        i = 0
        while i < len(self.digits) and self.digits[i] == 0:
            i += 1
        if i == 0:
            return self
        return PAdic(self.prime, self.base_exp + i, self.digits[i:])

    def as_fraction(self) -> Fraction:
        acc = Fraction(0)
        for i, d in enumerate(self.digits):
            if d:
                e = self.base_exp + i
                acc += d * (Fraction(self.prime) ** e)
        return acc


def make_padic(ctx: PrecisionContext, base_exp: int, digits: Iterable[int]) -> PAdic:
    """Validated constructor; truncates digits beyond the context budget."""
    digits = tuple(digits)
    if ctx.space_tag == "Zp":
        if base_exp != 0:
            raise WindowViolation("Zp values must have base exponent 0")
    else:
        if not ctx.u_min <= base_exp <= ctx.u_max:
            raise WindowViolation(
                f"base exponent {base_exp} outside window [{ctx.u_min}, {ctx.u_max}]")
    for d in digits:
        if not isinstance(d, int) or not 0 <= d < ctx.prime:
            raise AlphabetViolation(f"digit {d!r} outside 0..{ctx.prime - 1}")
    if len(digits) > ctx.digit_budget:
        digits = digits[:ctx.digit_budget]
    return PAdic(ctx.prime, base_exp, digits)


def norm(x: PAdic) -> NormValue:
    """p-adic absolute value; zero-to-precision carries its certified bound."""
    for i, d in enumerate(x.digits):
        if d:
            return NormValue(x.prime, x.base_exp + i)
    return norm_zero(x.prime, x.known_exp)


def _require_same_prime(x: PAdic, y: PAdic) -> None:
    if x.prime != y.prime:
        raise AlphabetViolation(f"prime mismatch: {x.prime} != {y.prime}")


def _to_scaled(x: PAdic, u: int) -> int:
    """Integer m with x = p**u * m exactly (mod the joint precision)."""
    acc = 0
    for d in reversed(x.digits):
        acc = acc * x.prime + d
    return acc * x.prime ** (x.base_exp - u)


def _build(prime: int, u: int, m: int, length: int) -> PAdic:
    if length <= 0:
        return PAdic(prime, u, ())
    m %= prime ** length
    digits = []
    for _ in range(length):
        m, d = divmod(m, prime)
        digits.append(d)
    return PAdic(prime, u, tuple(digits))


def add(x: PAdic, y: PAdic) -> PAdic:
    """Exact sum, truncated to the shared certified precision."""
    _require_same_prime(x, y)
    u = min(x.base_exp, y.base_exp)
    m_exp = min(x.known_exp, y.known_exp)
    return _build(x.prime, u, _to_scaled(x, u) + _to_scaled(y, u), m_exp - u)


def sub(x: PAdic, y: PAdic) -> PAdic:
    """Exact difference, truncated to the shared certified precision."""
    _require_same_prime(x, y)
    u = min(x.base_exp, y.base_exp)
    m_exp = min(x.known_exp, y.known_exp)
    return _build(x.prime, u, _to_scaled(x, u) - _to_scaled(y, u), m_exp - u)


def mul(x: PAdic, y: PAdic) -> PAdic:
    """Exact product, truncated to the provable output precision.

    If x is exact mod p**mx and |y| <= p**-vy (valuation lower bound from
    the leading digits), the product is exact mod p**min(mx+vy, my+vx).
    """
    _require_same_prime(x, y)
    nx, ny = norm(x), norm(y)
    vx = nx.bound_exp if nx.is_zero else nx.exponent
    vy = ny.bound_exp if ny.is_zero else ny.exponent
    m_exp = min(x.known_exp + vy, y.known_exp + vx)
    u = x.base_exp + y.base_exp
    return _build(x.prime, u, _to_scaled(x, x.base_exp) * _to_scaled(y, y.base_exp),
                  m_exp - u)


def int_frac_split(x: PAdic) -> tuple:
    """Split into (floor_part, frac_part): digits at exponents >=0 and <0."""
    if x.base_exp >= 0:
        return x, PAdic(x.prime, min(x.base_exp, 0), ())
    cut = -x.base_exp
    frac = PAdic(x.prime, x.base_exp, x.digits[:cut])
    floor = PAdic(x.prime, 0, x.digits[cut:])
    return floor, frac


def enumerate_ball(ctx: PrecisionContext, center: PAdic, radius: NormValue) -> list:
    """All context residues within `radius` of center (a coset enumeration)."""
    if radius.is_zero:
        raise BudgetExceeded("zero radius enumerates nothing at finite precision")
    k = radius.exponent
    if k > ctx.resolution_exp:
        raise BudgetExceeded("radius finer than context resolution")
    k = max(k, ctx.u_min)
    step = ctx.prime ** (k - ctx.u_min)
    count = ctx.modulus // step
    if count > ctx.ball_budget:
        raise BudgetExceeded(f"{count} residues exceed ball budget {ctx.ball_budget}")
    c = ctx.to_int(center) % step
    return [ctx.from_int(c + t * step) for t in range(count)]


# ---------------------------------------------------------------------------
# canonical text / JSON forms
# ---------------------------------------------------------------------------

def format_padic(x: PAdic) -> str:
    d = ",".join(str(t) for t in x.digits)
    return f"p:{x.prime};u:{x.base_exp};d:{d}"


def parse_padic(text: str) -> PAdic:
    """Parse the canonical form ``p:<prime>;u:<exp>;d:<d0,d1,...>``."""
    parts = text.split(";")
    if len(parts) != 3:
        raise ParseError("expected three ';'-separated fields", len(text))
    offsets = []
    pos = 0
    for part in parts:
        offsets.append(pos)
        pos += len(part) + 1
    fields = {}
    for part, off in zip(parts, offsets):
        if ":" not in part:
            raise ParseError("missing ':' in field", off)
        key, _, val = part.partition(":")
        fields[key.strip()] = (val, off + len(key) + 1)
    for key in ("p", "u", "d"):
        if key not in fields:
            raise ParseError(f"missing field {key!r}", 0)
    try:
        p = int(fields["p"][0])
    except ValueError:
        raise ParseError("prime is not an integer", fields["p"][1])
    try:
        u = int(fields["u"][0])
    except ValueError:
        raise ParseError("base exponent is not an integer", fields["u"][1])
    dtext, doff = fields["d"]
    digits = []
    if dtext.strip():
        cursor = doff
        for token in dtext.split(","):
            try:
                d = int(token)
            except ValueError:
                raise ParseError(f"bad digit {token!r}", cursor)
            if not 0 <= d < p:
                raise ParseError(f"digit {d} outside 0..{p - 1}", cursor)
            digits.append(d)
            cursor += len(token) + 1
    _check_prime(p)
    return PAdic(p, u, tuple(digits))


def padic_to_json(x: PAdic) -> dict:
    return {"p": x.prime, "u": x.base_exp, "digits": list(x.digits)}


def padic_from_json(obj: dict) -> PAdic:
    try:
        return PAdic(int(obj["p"]), int(obj["u"]), tuple(int(d) for d in obj["digits"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad JSON p-adic object: {exc}", 0)


def parse_norm(text: str, p: int) -> NormValue:
    """Parse tolerance strings of the form ``p^-k`` (or ``1``/``0``)."""
    text = text.strip()
    if text == "0":
        return norm_zero(p)
    if text == "1":
        return NormValue(p, 0)
    if not text.startswith("p^"):
        raise ParseError("expected 'p^<exponent>' form", 0)
    try:
        k = int(text[2:])
    except ValueError:
        raise ParseError("exponent is not an integer", 2)
    return NormValue(p, -k)


def format_norm(n: NormValue) -> str:
    if n.is_zero:
        return "0"
    return f"p^{-n.exponent}"
