"""Empirical metric estimators: Lipschitz constants, scaling behaviour,
openness of images and expansivity certificates.

All estimators are exact at the context resolution: distances are powers
of p computed from digit valuations, with output valuations capped at the
map's certified digit count so precision loss can never fabricate a
contraction.  Exhaustive scans are used whenever the pair count fits the
budget; otherwise seeded sampling is applied and flagged in the result.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional

from .errors import BudgetExceeded
from .dynamics import DynamicMap
from .padic import NormValue


def _valuation(m: int, p: int, cap: int) -> int:
    if m == 0:
        return cap
    v = 0
    while m % p == 0 and v < cap:
        m //= p
        v += 1
    return v


def _pair_iter(f: DynamicMap, inputs: Optional[Iterable[int]],
               pair_budget: int, sample: int, seed: int):
    """Yield (exhaustive, iterator of (x, y) pairs)."""
    ctx = f.ctx
    if inputs is None:
        if ctx.modulus <= 1 << 14:
            inputs = range(ctx.modulus)
        else:
            rng = random.Random(seed)
            M = ctx.modulus
            return False, ((rng.randrange(M), rng.randrange(M))
                           for _ in range(sample))
    inputs = list(inputs)
    npairs = len(inputs) * (len(inputs) - 1) // 2
    if npairs <= pair_budget:
        return True, combinations(inputs, 2)
    rng = random.Random(seed)
    return False, ((rng.choice(inputs), rng.choice(inputs))
                   for _ in range(sample))


@dataclass
class LipschitzEstimate:
    c1_lower: Optional[Fraction]   # min measured ratio (two-sided lower bound)
    c2_upper: Optional[Fraction]   # max measured ratio
    exhaustive: bool
    pairs: int
    witness_low: Optional[tuple] = None
    witness_high: Optional[tuple] = None


def estimate_lipschitz(f: DynamicMap, inputs: Optional[Iterable[int]] = None,
                       pair_budget: int = 1 << 22, sample: int = 20000,
                       seed: int = 0) -> LipschitzEstimate:
    """Scan distance ratios |f(x)-f(y)| / |x-y| over input pairs.

    Output valuations are capped at the certified digit count; pairs whose
    images coincide at that resolution contribute the smallest resolvable
    ratio to c1_lower (an honest lower bound, not a claim of collapse).
    """
    ctx = f.ctx
    p, D = ctx.prime, ctx.total_digits
    cap = D - f.precision_loss
    M = ctx.modulus
    exhaustive, pairs = _pair_iter(f, inputs, pair_budget, sample, seed)
    c1 = c2 = None
    wlow = whigh = None
    count = 0
    for x, y in pairs:
        if x == y:
            continue
        vin = _valuation((x - y) % M, p, D)
        vout = _valuation((f(x) - f(y)) % M, p, cap)
        ratio = Fraction(p) ** (vin - vout)
        count += 1
        if c1 is None or ratio < c1:
            c1, wlow = ratio, (x, y)
        # images equal at certified resolution certify no upper ratio:
        # the true output valuation may exceed the cap
        if vout < cap and (c2 is None or ratio > c2):
            c2, whigh = ratio, (x, y)
    return LipschitzEstimate(c1, c2, exhaustive, count, wlow, whigh)


def check_locally_scaling(f: DynamicMap, k: int, m_exp: int,
                          inputs: Optional[Iterable[int]] = None,
                          pair_budget: int = 1 << 22, sample: int = 20000,
                          seed: int = 0) -> tuple:
    """Verify |f(x)-f(y)| == p**-m_exp * |x-y| on pairs with |x-y| <= p**-k.

    Returns (ok, witness); comparisons beyond the certified output digits
    are skipped rather than falsified.
    """
    ctx = f.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    cap = D - f.precision_loss
    _, pairs = _pair_iter(f, inputs, pair_budget, sample, seed)
    for x, y in pairs:
        if x == y:
            continue
        vin = _valuation((x - y) % M, p, D)
        if vin < k - ctx.u_min:
            continue
        expected = vin + m_exp
        if expected >= cap:
            continue
        vout = _valuation((f(x) - f(y)) % M, p, cap)
        if vout != expected:
            return False, (x, y)
    return True, None


@dataclass
class ScalingProfile:
    table: dict                    # input valuation -> output valuation
    consistent: bool
    witness: Optional[tuple] = None


def scaling_profile(f: DynamicMap, inputs: Optional[Iterable[int]] = None,
                    pair_budget: int = 1 << 22, sample: int = 20000,
                    seed: int = 0) -> ScalingProfile:
    """Tabulate kappa(|x-y|) = |f(x)-f(y)|; consistent when single-valued."""
    ctx = f.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    cap = D - f.precision_loss
    _, pairs = _pair_iter(f, inputs, pair_budget, sample, seed)
    table = {}
    for x, y in pairs:
        if x == y:
            continue
        vin = _valuation((x - y) % M, p, D)
        vout = _valuation((f(x) - f(y)) % M, p, cap)
        if vout >= cap:
            continue        # below certified resolution; unusable
        prev = table.get(vin)
        if prev is None:
            table[vin] = vout
        elif prev != vout:
            return ScalingProfile(table, False, (x, y))
    return ScalingProfile(table, True)


def image_openness(f: DynamicMap,
                   inputs: Optional[Iterable[int]] = None) -> Optional[NormValue]:
    """Largest rho = p**-n0 with f(inputs) a union of radius-rho balls.

    Scans n0 up to two digits short of the certified resolution; radii
    within that margin are truncation artifacts and yield None instead.
    """
    ctx = f.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    cap = D - f.precision_loss
    if inputs is None:
        if M > ctx.ball_budget:
            raise BudgetExceeded("context too large for image enumeration")
        inputs = range(M)
    image = {f(x) % M for x in inputs}
    for n0 in range(0, cap - 1):
        step = p ** n0
        coset_size = M // step
        # group image points by their class mod p^n0
        groups = {}
        for y in image:
            groups.setdefault(y % step, set()).add(y)
        if all(len(g) == coset_size for g in groups.values()):
            return NormValue(p, ctx.u_min + n0)
    return None


def expansivity_constant(f: DynamicMap, horizon: int,
                         inputs: Optional[Iterable[int]] = None,
                         pair_budget: int = 1 << 22, sample: int = 20000,
                         seed: int = 0) -> tuple:
    """Horizon-limited expansivity certificate.

    Returns (constant, witness): every scanned pair x != y separates to
    distance >= constant within `horizon` iterations; witness attains it.
    """
    ctx = f.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    _, pairs = _pair_iter(f, inputs, pair_budget, sample, seed)
    worst_v = None
    witness = None
    for x, y in pairs:
        if x == y:
            continue
        a, b = x, y
        best_v = _valuation((a - b) % M, p, D)
        for _ in range(horizon):
            if worst_v is not None and best_v <= worst_v:
                break
            a, b = f(a), f(b)
            v = _valuation((a - b) % M, p, D)
            if v < best_v:
                best_v = v
        if worst_v is None or best_v > worst_v:
            worst_v = best_v
            witness = (x, y)
    if worst_v is None:
        return None, None
    return NormValue(p, ctx.u_min + worst_v), witness
