"""Pseudo-orbit generation and the shadowing solver.

The solver runs the backward contraction recursion driven by a family of
right inverses: with indices i_n chosen so that R_{i_n} inverts the map at
x_n, corrections satisfy z_L = 0 and

    z_n = R_{i_n}(x_{n+1} + z_{n+1}) - x_n,

so f(x_n + z_n) = x_{n+1} + z_{n+1} at the certified modulus (digits the
contraction pushed off the top are unrecoverable at finite precision) and
x_0 + z_0 shadows the whole pseudo-orbit with max |z_n| <= delta / p.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .errors import BudgetExceeded, CoveringViolation, PrecisionExhausted
from .dynamics import DynamicMap, RightInverseFamily
from .padic import NormValue, PrecisionContext, norm_zero


def _min_valuation_norm(ctx: PrecisionContext, diffs) -> NormValue:
    """Norm of the largest difference in a list of scaled ints."""
    best: Optional[NormValue] = None
    for d in diffs:
        n = ctx.norm_of_int(d)
        if best is None or n > best:
            best = n
    return best if best is not None else norm_zero(ctx.prime, ctx.resolution_exp)


@dataclass(frozen=True)
class PseudoOrbit:
    """A finite delta-pseudo-orbit of scaled residues."""

    ctx: PrecisionContext
    points: tuple
    delta: NormValue

    def __len__(self):
        return len(self.points)


def random_pseudo_orbit(f: DynamicMap, delta: NormValue, length: int,
                        seed: int = 0) -> PseudoOrbit:
    """Seeded pseudo-orbit: x_{n+1} = f(x_n) + e_n with |e_n| <= delta."""
    ctx = f.ctx
    p, M = ctx.prime, ctx.modulus
    k = delta.exponent - ctx.u_min
    if not 0 <= k <= ctx.total_digits:
        raise BudgetExceeded(f"delta {delta!r} outside context range")
    step = p ** k
    span = M // step
    rng = random.Random(seed)
    points = [rng.randrange(M)]
    for _ in range(length):
        e = step * rng.randrange(span) if span > 1 else 0
        points.append((f(points[-1]) + e) % M)
    return PseudoOrbit(ctx, tuple(points), delta)


def verify_pseudo_orbit(f: DynamicMap, orbit: PseudoOrbit) -> NormValue:
    """Largest defect |f(x_n) - x_{n+1}|; raises nothing, caller compares."""
    pts = orbit.points
    return _min_valuation_norm(
        orbit.ctx, (f(pts[n]) - pts[n + 1] for n in range(len(pts) - 1)))


@dataclass
class ShadowingResult:
    point: int                    # scaled residue x_0 + z_0
    corrections: tuple            # z_0, ..., z_L
    indices: tuple                # chosen right-inverse indices i_0..i_{L-1}
    achieved_bound: NormValue     # max |z_n|
    bound_ok: bool                # achieved_bound <= delta / p
    forward_checked: int          # orbit steps re-verified forward
    certified_digits: int         # digits certified for forward iteration


def solve_shadowing(f: DynamicMap, family: RightInverseFamily,
                    orbit: PseudoOrbit,
                    require_forward_cert: bool = False) -> ShadowingResult:
    """Backward-recursion shadowing solver.

    The recursion itself is exact at the context resolution regardless of
    the map's per-step precision loss, so no digit gate is applied to the
    orbit length; certified_digits reports how far forward iteration of f
    itself stays certified, and require_forward_cert turns a shortfall
    (fewer than 2 certified digits) into PrecisionExhausted.
    """
    ctx = orbit.ctx
    M = ctx.modulus
    pts = orbit.points
    L = len(pts) - 1
    cert = ctx.total_digits - L * f.precision_loss
    if require_forward_cert and cert < 2:
        raise PrecisionExhausted(
            f"{L} steps of {f.name} leave {cert} certified digits")

    indices = []
    for n in range(L):
        i = family.membership(pts[n])
        if i is None:
            raise CoveringViolation(
                f"no right inverse covers orbit point at step {n}")
        indices.append(i)

    z = [0] * (L + 1)
    for n in range(L - 1, -1, -1):
        R = family.members[indices[n]]
        z[n] = (R((pts[n + 1] + z[n + 1]) % M) - pts[n]) % M

    achieved = _min_valuation_norm(ctx, z)
    bound_ok = achieved <= orbit.delta.scaled(1)

    # forward re-verification where f's own precision loss still certifies
    checked = 0
    y = (pts[0] + z[0]) % M
    p = ctx.prime
    for n in range(1, L + 1):
        digits = ctx.total_digits - n * f.precision_loss
        if digits < 1:
            break
        y = f(y)
        if (y - (pts[n] + z[n])) % (p ** digits):
            break
        checked = n

    return ShadowingResult((pts[0] + z[0]) % M, tuple(z), tuple(indices),
                           achieved, bound_ok, checked, max(cert, 0))


def brute_force_shadow(f: DynamicMap, orbit: PseudoOrbit,
                       respect_loss: bool = False) -> tuple:
    """Exhaustive oracle: the residue minimising max_n |f^n(x) - x_n|.

    Returns (best_point, best_error).  Ties resolve to the smallest
    residue.  Requires an enumerable context.

    With respect_loss, differences confined to the digits a lossy map
    leaves uncertified after n steps (positions >= D - n*loss) are not
    counted as errors: they are truncation artifacts, not evidence that
    the candidate misses the orbit.
    """
    ctx = orbit.ctx
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if M > ctx.ball_budget:
        raise BudgetExceeded(f"{M} residues exceed enumeration budget")
    pts = orbit.points
    L = len(pts) - 1
    loss = f.precision_loss if respect_loss else 0

    def valuation(m, cert=D):
        if m == 0:
            return D
        v = 0
        while m % p == 0:
            m //= p
            v += 1
        return v if v < cert else D

    best_point, best_minval = 0, -1
    for x in range(M):
        y = x
        minval = valuation((y - pts[0]) % M)
        for n in range(L):
            if minval <= best_minval:
                break
            y = f(y)
            v = valuation((y - pts[n + 1]) % M, D - (n + 1) * loss)
            if v < minval:
                minval = v
        if minval > best_minval:
            best_minval = minval
            best_point = x
    if best_minval >= D:
        err = norm_zero(p, ctx.resolution_exp)
    else:
        err = NormValue(p, ctx.u_min + best_minval)
    return best_point, err
