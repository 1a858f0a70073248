"""Map catalog and structured perturbations.

Maps act on engine-internal scaled integers: under a PrecisionContext, the
integer m in [0, modulus) denotes the value p**u_min * m.  A DynamicMap
wraps such an int function with precision/Lipschitz metadata; everything
here is pure and deterministic (seeded where randomness is called for).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import (
    BadParams,
    BudgetExceeded,
    DeltaTooSmall,
    NotBijective,
    NotIsometry,
    UnknownMap,
    WindowViolation,
)
from .padic import NormValue, PAdic, PrecisionContext, norm_from_exp


@dataclass
class DynamicMap:
    """A self-map of the context space with precision bookkeeping.

    precision_loss: certified output digits = total_digits - precision_loss
    per application; compositions add losses.  lip_upper / lip_lower are
    declared two-sided Lipschitz bounds (None when unknown / not holding).
    """

    name: str
    ctx: PrecisionContext
    fn: Callable[[int], int]
    precision_loss: int = 0
    lip_upper: Optional[Fraction] = None
    lip_lower: Optional[Fraction] = None
    params: dict = field(default_factory=dict)
    _table: Optional[list] = field(default=None, repr=False)

    def __call__(self, m: int) -> int:
        if self._table is not None:
            return self._table[m]
        return self.fn(m)

    def eval(self, x: PAdic) -> PAdic:
        return self.ctx.from_int(self(self.ctx.to_int(x)))

    def tabulate(self) -> list:
        """Precompute the full residue table (small contexts only)."""
        if self._table is None:
            if self.ctx.modulus > self.ctx.ball_budget:
                raise BudgetExceeded("context too large to tabulate")
            fn = self.fn
            self._table = [fn(m) for m in range(self.ctx.modulus)]
        return self._table


def identity_map(ctx: PrecisionContext) -> DynamicMap:
    return DynamicMap("identity", ctx, lambda m: m, 0, Fraction(1), Fraction(1))


def compose(outer: DynamicMap, inner: DynamicMap, name: Optional[str] = None) -> DynamicMap:
    if outer.ctx != inner.ctx:
        raise BadParams("composition requires a shared context")
    lip = None
    if outer.lip_upper is not None and inner.lip_upper is not None:
        lip = outer.lip_upper * inner.lip_upper
    lo = None
    if outer.lip_lower is not None and inner.lip_lower is not None:
        lo = outer.lip_lower * inner.lip_lower
    return DynamicMap(
        name or f"{outer.name}.{inner.name}", outer.ctx,
        lambda m, f=outer, g=inner: f(g(m)),
        outer.precision_loss + inner.precision_loss, lip, lo)


# ---------------------------------------------------------------------------
# digit helpers on scaled integers
# ---------------------------------------------------------------------------

def _digit(m: int, p: int, i: int) -> int:
    return (m // p ** i) % p


def _pow_norm(p: int, k: int) -> Fraction:
    return Fraction(1, p ** k) if k >= 0 else Fraction(p ** (-k))


def _as_scaled(ctx: PrecisionContext, value) -> int:
    """Accept an int (already scaled) or a PAdic parameter value."""
    if isinstance(value, PAdic):
        return ctx.to_int(value)
    if isinstance(value, int):
        return value % ctx.modulus
    raise BadParams(f"expected int or PAdic parameter, got {type(value).__name__}")


def _valuation(m: int, p: int, cap: int) -> int:
    if m == 0:
        return cap
    v = 0
    while m % p == 0 and v < cap:
        m //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# bijective isometries (building blocks for locally scaling maps)
# ---------------------------------------------------------------------------

def bijective_isometry(ctx: PrecisionContext, kind: str, seed: int = 0) -> DynamicMap:
    """Catalog of bijective isometries of the context space.

    'identity'   -- the identity.
    'alphabet'   -- a seeded alphabet permutation applied at each digit
                    position (first-differing-position is preserved, so
                    this is always an isometry).
    'triangular' -- seeded unit-triangular digit map: output digit i is
                    x_i plus an offset depending only on x mod p**i, which
                    is automatically a bijective isometry.
    """
    p, D = ctx.prime, ctx.total_digits
    if kind == "identity":
        return DynamicMap("iso.identity", ctx, lambda m: m, 0, Fraction(1), Fraction(1))
    if kind == "alphabet":
        rng = random.Random(seed)
        perms = []
        for _ in range(D):
            perm = list(range(p))
            rng.shuffle(perm)
            perms.append(perm)

        def fn(m, p=p, D=D, perms=perms):
            out = 0
            pw = 1
            for i in range(D):
                out += perms[i][(m // pw) % p] * pw
                pw *= p
            return out

        return DynamicMap(f"iso.alphabet[{seed}]", ctx, fn, 0,
                          Fraction(1), Fraction(1), {"seed": seed})
    if kind == "triangular":
        # per-level offset tables: level i maps each prefix class (x mod p^i)
        # to a digit offset; unit diagonal keeps it bijective and isometric.
        rng = random.Random(seed)
        offsets = [[rng.randrange(p) for _ in range(p ** i)] for i in range(D)]

        def fn(m, p=p, D=D, offsets=offsets):
            out = 0
            prefix = 0
            pw = 1
            for i in range(D):
                d = (m // pw) % p
                out += ((d + offsets[i][prefix]) % p) * pw
                prefix += d * pw
                pw *= p
            return out

        return DynamicMap(f"iso.triangular[{seed}]", ctx, fn, 0,
                          Fraction(1), Fraction(1), {"seed": seed})
    raise UnknownMap(f"unknown isometry kind {kind!r}")


def check_isometry(w: DynamicMap, sample: int = 4096, seed: int = 0) -> None:
    """Raise NotBijective / NotIsometry unless w is a bijective isometry.

    Exhaustive for tabulable contexts: w is an isometry exactly when, for
    every level j, it induces a well-defined bijection on residues mod p**j
    (two points first differing at digit j then stay distinguished there).
    Falls back to seeded pair sampling on huge contexts.
    """
    ctx = w.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if M <= ctx.ball_budget:
        table = w.tabulate()
        if len(set(table)) != M:
            raise NotBijective(f"{w.name} is not a bijection on {M} residues")
        for j in range(1, D + 1):
            pj = p ** j
            reduced = {}
            for m, im in enumerate(table):
                key = m % pj
                val = im % pj
                prev = reduced.get(key)
                if prev is None:
                    reduced[key] = val
                elif prev != val:
                    raise NotIsometry(
                        f"{w.name} not constant on a radius p^-{j} ball")
            if len(set(reduced.values())) != len(reduced):
                raise NotIsometry(
                    f"{w.name} collapses two radius p^-{j} balls")
        return
    rng = random.Random(seed)
    for _ in range(sample):
        x, y = rng.randrange(M), rng.randrange(M)
        if x == y:
            continue
        if ctx.norm_of_int(w(x) - w(y)) != ctx.norm_of_int(x - y):
            raise NotIsometry(f"{w.name} fails isometry on sampled pair")


# ---------------------------------------------------------------------------
# builtin catalog
# ---------------------------------------------------------------------------

def builtin_map(name: str, ctx: PrecisionContext, **params) -> DynamicMap:
    """Construct a catalog map by name under the given context."""
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    W = -ctx.u_min  # number of fractional digit positions

    if name == "shift_zp":
        if ctx.space_tag != "Zp":
            raise BadParams("shift_zp needs a Zp context")
        return DynamicMap("shift_zp", ctx, lambda m, p=p: m // p, 1, Fraction(p))

    if name == "shift_qp":
        if ctx.space_tag != "Qp":
            raise BadParams("shift_qp needs a Qp context")

        def fn(m, p=p):
            if m % p:
                raise WindowViolation("shift would push a digit below the window")
            return m // p

        return DynamicMap("shift_qp", ctx, fn, 1, Fraction(p))

    if name == "affine":
        v = _as_scaled(ctx, params.get("v"))
        w = _as_scaled(ctx, params.get("w", 0))
        if v % M == 0:
            raise BadParams("affine coefficient v must be nonzero at resolution")
        mv = _valuation(v, p, D)
        lip = _pow_norm(p, ctx.u_min + mv)
        return DynamicMap("affine", ctx, lambda m, v=v, w=w, M=M: (v * m + w) % M,
                          0, lip, lip, {"v": v, "w": w, "val": mv})

    if name == "scaled_isometry":
        k = int(params.get("m", 1))
        if k < 1:
            raise BadParams("scaled_isometry needs contraction order m >= 1")
        iso = params.get("iso", "triangular")
        seed = int(params.get("seed", 0))
        c = _as_scaled(ctx, params.get("c", 0))
        w = iso if isinstance(iso, DynamicMap) else bijective_isometry(ctx, iso, seed)
        pk = p ** k
        lip = _pow_norm(p, k)
        return DynamicMap(
            f"scaled_isometry[{k},{w.name}]", ctx,
            lambda m, w=w, pk=pk, c=c, M=M: (pk * w(m) + c) % M,
            0, lip, lip, {"m": k, "iso": w, "c": c})

    if name == "example2_R":
        # digit i of x lands at position 2i+1; doubles the spacing.
        def fn(m, p=p, D=D):
            out = 0
            pw = 1           # p^i
            opw = p          # p^(2i+1)
            for _ in range((D + 1) // 2):
                out += ((m // pw) % p) * opw
                pw *= p
                opw *= p * p
            return out % (p ** D)

        return DynamicMap("example2_R", ctx, fn, 0, Fraction(1, p), None)

    if name == "example2_L":
        # left inverse of example2_R: collect digits at odd positions.
        def fn(m, p=p, D=D):
            out = 0
            pw = 1
            for i in range(D // 2):
                out += _digit(m, p, 2 * i + 1) * pw
                pw *= p
            return out

        return DynamicMap("example2_L", ctx, fn, D - D // 2, Fraction(p), None)

    if name == "example2_phi_n":
        n = int(params.get("n", 0))
        if not 0 <= 2 * n + 1 < D:
            raise BadParams("perturbation index n outside context digits")
        shift = p ** (2 * n + 1)

        def fn(m, p=p, n=n, shift=shift, M=M):
            return (-((m // p ** n) % p) * shift) % M

        return DynamicMap(f"example2_phi_n[{n}]", ctx, fn, 0,
                          _pow_norm(p, n + 1), None, {"n": n})

    if name == "rho_open_Ra":
        if ctx.space_tag != "Qp" or ctx.u_min > -1 or ctx.u_max < 0:
            raise BadParams("rho_open_Ra needs a Qp context with window below 0")
        a = int(params.get("a", 0))
        if not 0 <= a < p:
            raise BadParams("digit parameter a outside alphabet")
        pw_frac = p ** W

        def fn(m, p=p, a=a, pw=pw_frac, W=W, M=M):
            fr, fl = m % pw, m // pw
            return (p * fr + a * p ** (1 + W) + fl * p ** (2 + W)) % M

        return DynamicMap(f"rho_open_Ra[{a}]", ctx, fn, 0,
                          Fraction(1, p), Fraction(1, p * p), {"a": a})

    if name == "remark2_uvw":
        if ctx.space_tag != "Qp":
            raise BadParams("remark2_uvw needs a Qp context")
        u = _as_scaled(ctx, params.get("u"))
        v = _as_scaled(ctx, params.get("v"))
        w = _as_scaled(ctx, params.get("w", 0))
        vu = _valuation(u, p, D) + ctx.u_min
        vv = _valuation(v, p, D) + ctx.u_min
        if not (vv > vu > 0):
            raise BadParams("need 0 < |v| < |u| < 1 (valuations v > u > 0)")
        pw_frac = p ** W

        def fn(m, u=u, v=v, w=w, pw=pw_frac, W=W, M=M, p=p):
            fr, fl = m % pw, m // pw
            total = u * fr + v * (fl * pw) + w * pw
            if total % pw:
                raise WindowViolation("result falls below the window")
            return (total // pw) % M

        return DynamicMap("remark2_uvw", ctx, fn, 0, _pow_norm(p, vu),
                          _pow_norm(p, vv), {"u": u, "v": v, "w": w})

    if name == "thm1_qp_example":
        if ctx.space_tag != "Qp":
            raise BadParams("thm1_qp_example needs a Qp context")

        # integer-part digit a_i feeds both sums; both are taken over the
        # displayed ranges (first over i >= 0, second over i >= 2).
        def fn(m, p=p, W=W, D=D, M=M):
            out = 0
            for i in range(D - W):
                a = _digit(m, p, W + i)
                if not a:
                    continue
                lowpos = W - 1 - i        # exponent -(i+1), scaled position
                if lowpos < 0:
                    raise WindowViolation(
                        "low-exponent term falls below the window")
                out += a * p ** lowpos
                if i >= 2:
                    out += a * p ** (W + i - 2)
            return out % M

        return DynamicMap("thm1_qp_example", ctx, fn, 2, Fraction(p))

    raise UnknownMap(f"no catalog map named {name!r}")


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------

@dataclass
class LipschitzPerturbation:
    """A perturbation phi with certified sup-norm and Lipschitz bound delta."""

    map: DynamicMap
    delta: NormValue
    kind: str

    def __call__(self, m: int) -> int:
        return self.map(m)


def make_lipschitz_perturbation(ctx: PrecisionContext, kind: str,
                                delta: NormValue, seed: int = 0,
                                **params) -> LipschitzPerturbation:
    """Build a perturbation with sup-norm and Lipschitz constant <= delta.

    'constant'        -- phi == c with |c| <= delta.
    'digit_local'     -- p**k times a seeded unit-triangular digit map
                         (1-Lipschitz, sup <= 1), hence delta-Lipschitz
                         and delta-bounded for delta = p**-k.
    'example2_phi_n'  -- the digit-cancelling family from the catalog.
    """
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if delta.is_zero:
        raise DeltaTooSmall("delta must be a definite norm")
    k = delta.exponent - ctx.u_min
    if k >= D:
        raise DeltaTooSmall(f"delta {delta!r} below context resolution")

    if kind == "constant":
        c = _as_scaled(ctx, params.get("c", 0))
        if ctx.norm_of_int(c) > delta:
            raise BadParams("constant exceeds the declared delta")
        m = DynamicMap(f"phi.const[{c}]", ctx, lambda _x, c=c: c, 0,
                       Fraction(0), Fraction(0), {"c": c})
        return LipschitzPerturbation(m, delta, kind)

    if kind == "digit_local":
        if k < 0:
            raise BadParams("delta must be at most 1 for digit_local")
        rng = random.Random(seed)
        # g triangular: digit i of g depends only on x mod p^i, so g is
        # 1-Lipschitz; phi = p^k * g is then delta-Lipschitz with sup<=delta.
        levels = [[rng.randrange(p) for _ in range(p ** i)]
                  for i in range(D - k)]

        def fn(m, p=p, k=k, levels=levels, M=M):
            out = 0
            pw = 1
            prefix = 0
            for table in levels:
                d = (m // pw) % p
                out += table[prefix] * pw
                prefix += d * pw
                pw *= p
            return (out * p ** k) % M

        mp = DynamicMap(f"phi.digit_local[{seed}]", ctx, fn, 0,
                        delta.as_fraction(), None, {"seed": seed, "k": k})
        return LipschitzPerturbation(mp, delta, kind)

    if kind == "example2_phi_n":
        n = int(params.get("n", 0))
        mp = builtin_map("example2_phi_n", ctx, n=n)
        if mp.lip_upper > delta.as_fraction():
            raise BadParams("example2_phi_n exceeds the declared delta")
        return LipschitzPerturbation(mp, delta, kind)

    raise UnknownMap(f"no perturbation kind named {kind!r}")


def perturb(f: DynamicMap, phi: LipschitzPerturbation) -> DynamicMap:
    """The perturbed map f + phi (pointwise sum in the context ring)."""
    if f.ctx != phi.map.ctx:
        raise BadParams("perturbation context mismatch")
    M = f.ctx.modulus
    lip = None
    if f.lip_upper is not None:
        lip = max(f.lip_upper, phi.delta.as_fraction())
    return DynamicMap(
        f"{f.name}+{phi.map.name}", f.ctx,
        lambda m, f=f, g=phi.map, M=M: (f(m) + g(m)) % M,
        max(f.precision_loss, phi.map.precision_loss), lip, None,
        {"base": f, "phi": phi})


# ---------------------------------------------------------------------------
# right-inverse families
# ---------------------------------------------------------------------------

@dataclass
class RightInverseFamily:
    """Finitely many right inverses of a map, with a membership oracle.

    membership(x) returns the index i with x in R_i(image) (ties broken by
    the smallest index), or None when the family does not cover x.
    """

    members: tuple
    membership: Callable[[int], Optional[int]]
    covering: bool
    disjoint_open: bool
    lip_upper: Fraction

    def __len__(self):
        return len(self.members)


def shift_right_inverses(ctx: PrecisionContext) -> RightInverseFamily:
    """The p right inverses R_i(x) = i + p*x of the one-sided shift."""
    p, M = ctx.prime, ctx.modulus
    members = tuple(
        DynamicMap(f"R[{i}]", ctx, lambda m, i=i, p=p, M=M: (i + p * m) % M,
                   0, Fraction(1, p), Fraction(1, p), {"i": i})
        for i in range(p))
    return RightInverseFamily(members, lambda m, p=p: m % p, True, True,
                              Fraction(1, p))


def furno_compose(w: DynamicMap, k: int, check: bool = True) -> DynamicMap:
    """The (p**-k, p**k) locally scaling map S^k o w for a bijective isometry w."""
    if k < 1:
        raise BadParams("need k >= 1")
    if check:
        check_isometry(w)
    ctx = w.ctx
    pk = ctx.prime ** k
    f = DynamicMap(f"furno[{k},{w.name}]", ctx,
                   lambda m, w=w, pk=pk: w(m) // pk,
                   k, Fraction(ctx.prime ** k), None, {"w": w, "k": k})
    return f


def locally_scaling_inverses(w: DynamicMap, k: int,
                             check: bool = True) -> RightInverseFamily:
    """The p**k right inverses of S^k o w: R_a = w^-1 o R_a1 o ... o R_ak.

    The index integer a < p**k encodes the digit word (a1..ak) with a1 the
    lowest digit; membership is read off the first k digits of w(x).
    """
    if check:
        check_isometry(w)
    ctx = w.ctx
    p, M = ctx.prime, ctx.modulus
    pk = p ** k
    table = w.tabulate()
    inv = [0] * M
    for m, im in enumerate(table):
        inv[im] = m
    members = tuple(
        DynamicMap(f"R[{a}]", ctx,
                   lambda m, a=a, pk=pk, inv=inv, M=M: inv[(a + pk * m) % M],
                   0, Fraction(1, pk), Fraction(1, pk), {"a": a})
        for a in range(pk))
    return RightInverseFamily(members, lambda m, pk=pk, table=table: table[m] % pk,
                              True, True, Fraction(1, pk))


def left_inverse_for(R: DynamicMap) -> DynamicMap:
    """A continuous f with f o R = id, for invertible catalog contractions."""
    ctx = R.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if R.name == "affine":
        v, w = R.params["v"], R.params["w"]
        mv = R.params["val"]
        unit = v // p ** mv
        inv_unit = pow(unit, -1, M)

        def fn(m, w=w, inv=inv_unit, pmv=p ** mv, M=M):
            return (((m - w) * inv) % M) // pmv

        return DynamicMap("affine.left_inv", ctx, fn, mv, _pow_norm(p, -mv))
    if R.name.startswith("scaled_isometry"):
        k, wmap, c = R.params["m"], R.params["iso"], R.params["c"]
        table = wmap.tabulate()
        inv = [0] * M
        for m, im in enumerate(table):
            inv[im] = m

        def fn(m, c=c, pk=p ** k, inv=inv, M=M):
            return inv[((m - c) % M) // pk]

        return DynamicMap(f"{R.name}.left_inv", ctx, fn, k, _pow_norm(p, -k))
    raise UnknownMap(f"no left inverse recipe for {R.name!r}")
