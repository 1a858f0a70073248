"""Conjugacy builders.

Three constructions, all table-based at the context resolution:

* shadowing conjugacy for maps with a finite family of contracting right
  inverses: h(x) = x + z_0(x) from a depth-limited backward recursion
  along the g-orbit of x, together with its inverse built from
  transferred right inverses;
* contraction conjugacy for a bi-Lipschitz contraction R and its
  perturbation T: the space splits into layers T^n(U) of the complement
  U of the image plus a residual core, h replays each layer through R and
  sends the core to the fixed point (or through a windowed two-sided
  recursion in field mode);
* the homogeneity homeomorphism matching two close proper sequences by a
  product of isometric ball swaps.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import (
    BadParams,
    BudgetExceeded,
    CoveringViolation,
    DeltaTooLarge,
    DepthInsufficient,
    NonConvergence,
    NotClose,
    NotProper,
    WindowTooSmall,
)
from .dynamics import DynamicMap, RightInverseFamily
from .padic import NormValue, PrecisionContext, norm_zero


def _val(m: int, p: int, cap: int) -> int:
    if m == 0:
        return cap
    v = 0
    while m % p == 0 and v < cap:
        m //= p
        v += 1
    return v


def _max_norm(ctx: PrecisionContext, values) -> NormValue:
    best = None
    for m in values:
        n = ctx.norm_of_int(m)
        if best is None or n > best:
            best = n
    return best if best is not None else norm_zero(ctx.prime, ctx.resolution_exp)


@dataclass
class ConjugacyMap:
    """A residue-level map produced by one of the builders."""

    ctx: PrecisionContext
    table: list
    closeness: NormValue          # max |h(x) - x|
    depth: int
    tag: str

    def __call__(self, m: int) -> int:
        return self.table[m]

    def is_bijective(self) -> bool:
        return len(set(self.table)) == len(self.table)


@dataclass
class ConjugacyReport:
    max_defect: NormValue         # max |f(h(x)) - h(g(x))|
    injective: bool
    closeness: NormValue
    residues: int


def verify_conjugacy(f: DynamicMap, g: DynamicMap, h: ConjugacyMap) -> ConjugacyReport:
    """Measure the intertwining defect f o h - h o g over all residues."""
    ctx = h.ctx
    M = ctx.modulus
    defect = _max_norm(ctx, ((f(h.table[x]) - h.table[g(x)]) % M for x in range(M)))
    return ConjugacyReport(defect, h.is_bijective(), h.closeness, M)


# ---------------------------------------------------------------------------
# transfer of right inverses along a perturbation
# ---------------------------------------------------------------------------

def transfer_right_inverse(R: DynamicMap, phi: Callable[[int], int],
                           delta: NormValue, max_iter: Optional[int] = None
                           ) -> DynamicMap:
    """R-tilde = R o H^-1 for H = id + phi o R; a right inverse transfers
    from f to g = f + phi.  Requires delta * Lip(R) < 1; the pointwise
    inversion is a contraction iteration and must stabilise.
    """
    ctx = R.ctx
    M = ctx.modulus
    if R.lip_upper is None:
        raise BadParams("transfer needs a declared Lipschitz bound for R")
    shrink = delta.as_fraction() * R.lip_upper
    if shrink >= 1:
        raise DeltaTooLarge(f"delta * Lip(R) = {shrink} >= 1")
    limit = max_iter if max_iter is not None else ctx.total_digits + 2

    def fn(z, R=R, phi=phi, M=M, limit=limit):
        x = z
        for _ in range(limit):
            nxt = (z - phi(R(x))) % M
            if nxt == x:
                return R(x)
            x = nxt
        raise NonConvergence("contraction inversion did not stabilise")

    lip = R.lip_upper / (1 - shrink)
    return DynamicMap(f"transfer[{R.name}]", ctx, fn, R.precision_loss,
                      lip, None, {"base": R, "delta": delta})


def transfer_family(family: RightInverseFamily, phi: Callable[[int], int],
                    delta: NormValue) -> RightInverseFamily:
    """Transfer every member; membership is unchanged (images coincide)."""
    members = tuple(transfer_right_inverse(R, phi, delta)
                    for R in family.members)
    lip = members[0].lip_upper
    return RightInverseFamily(members, family.membership, family.covering,
                              family.disjoint_open, lip)


# ---------------------------------------------------------------------------
# shadowing conjugacy (finite right-inverse family)
# ---------------------------------------------------------------------------

def _require_delta_small(family: RightInverseFamily, delta: NormValue) -> None:
    r = 1 / family.lip_upper
    if delta.as_fraction() >= r - 1:
        raise DeltaTooLarge(
            f"need delta < {r - 1} for contraction rate {family.lip_upper}")


def _orbit_recursion(g: DynamicMap, family: RightInverseFamily,
                     x: int, depth: int) -> int:
    """z_0 for the backward recursion along the g-orbit of x."""
    M = g.ctx.modulus
    orbit = [x]
    for _ in range(depth):
        orbit.append(g(orbit[-1]))
    idx = []
    for n in range(depth):
        i = family.membership(orbit[n])
        if i is None:
            raise CoveringViolation(f"orbit point at step {n} not covered")
        idx.append(i)
    z = 0
    for n in range(depth - 1, -1, -1):
        R = family.members[idx[n]]
        z = (R((orbit[n + 1] + z) % M) - orbit[n]) % M
    return z


def build_conjugacy_thm1(f: DynamicMap, family: RightInverseFamily,
                         g: DynamicMap, delta: NormValue,
                         depth: int) -> ConjugacyMap:
    """h with f o h = h o g, h = id + z_0, certified to ~p**-depth.

    f must admit the given contracting right-inverse family and g must be
    a delta-perturbation of f with delta below the contraction margin.
    """
    ctx = f.ctx
    M = ctx.modulus
    if M > ctx.ball_budget:
        raise BudgetExceeded("context too large for a table-based conjugacy")
    _require_delta_small(family, delta)
    for mp in (f, g, *family.members):
        mp.tabulate()
    table = [0] * M
    corrections = []
    for x in range(M):
        z = _orbit_recursion(g, family, x, depth)
        corrections.append(z)
        table[x] = (x + z) % M
    return ConjugacyMap(ctx, table, _max_norm(ctx, corrections), depth, "thm1")


def build_inverse_conjugacy_thm1(f: DynamicMap, family: RightInverseFamily,
                                 g: DynamicMap, delta: NormValue,
                                 depth: int) -> ConjugacyMap:
    """h-tilde with g o h-tilde = h-tilde o f; inverse of the map above.

    Uses the right inverses transferred from f to g along phi = g - f and
    runs the mirror recursion along f-orbits.
    """
    ctx = f.ctx
    M = ctx.modulus
    if M > ctx.ball_budget:
        raise BudgetExceeded("context too large for a table-based conjugacy")
    _require_delta_small(family, delta)
    for mp in (f, g, *family.members):
        mp.tabulate()
    phi_table = [(g(x) - f(x)) % M for x in range(M)]
    tfam = transfer_family(family, lambda m: phi_table[m], delta)
    table = [0] * M
    corrections = []
    for y in range(M):
        z = _orbit_recursion(f, tfam, y, depth)
        corrections.append(z)
        table[y] = (y + z) % M
    return ConjugacyMap(ctx, table, _max_norm(ctx, corrections), depth, "thm1.inv")


# ---------------------------------------------------------------------------
# contraction conjugacy (image-layer partition)
# ---------------------------------------------------------------------------

@dataclass
class DomainPartition:
    """Layers T^n(U) of the image complement U, plus the residual core."""

    layer_of: dict                # residue -> layer index
    layers: list                  # list of sets
    core: set                     # residues inside every image up to depth+1
    parents: list = field(repr=False, default_factory=list)
    # parents[n][y] = chosen preimage of y inside layer n-1 / image chain

    def chain_root(self, x: int) -> tuple:
        """(n, u): x lies in layer n with chain root u in U."""
        n = self.layer_of[x]
        u = x
        for level in range(n, 0, -1):
            u = self.parents[level][u]
        return n, u


def partition_contraction_domain(T: DynamicMap, depth: int) -> DomainPartition:
    """Split the space into layers T^n(complement of image) and a core.

    Preimage choices under T are deterministic (smallest residue); at
    finite precision T may identify residues that differ only in the top
    contracted digits, which the chain bookkeeping absorbs.
    """
    ctx = T.ctx
    M = ctx.modulus
    if M > ctx.ball_budget:
        raise BudgetExceeded("context too large for domain partition")
    T.tabulate()
    current = set(range(M))
    layer_of = {}
    layers = []
    parents = [dict()]          # parents[n] maps S_n -> chosen preimage in S_{n-1}
    for n in range(depth + 1):
        nxt = set()
        parent = {}
        for x in sorted(current):
            y = T(x)
            nxt.add(y)
            if y not in parent:
                parent[y] = x
        layer = current - nxt
        for x in layer:
            layer_of[x] = n
        layers.append(layer)
        parents.append(parent)
        current = nxt
    core = current
    return DomainPartition(layer_of, layers, core, parents)


def _fixed_point(R: DynamicMap) -> int:
    """Residue of the unique fixed point of a contraction."""
    M = R.ctx.modulus
    x = 0
    for _ in range(2 * R.ctx.total_digits + 4):
        nxt = R(x)
        if nxt == x:
            return x
        x = nxt
    raise NonConvergence("contraction has no stable fixed residue")


def build_conjugacy_thm3(R: DynamicMap, T: DynamicMap, depth: int,
                         delta: NormValue, rho: Optional[NormValue] = None,
                         window: Optional[int] = None) -> ConjugacyMap:
    """h with R o h = h o T for a bi-Lipschitz contraction R and T = R + phi.

    Requires p * delta <= c1 (and <= rho when the image openness radius is
    supplied).  Layer points replay their chain through R; core points go
    to the fixed point of R in ring mode, or through a window-limited
    two-sided recursion in field mode.
    """
    ctx = R.ctx
    p, M = ctx.prime, ctx.modulus
    if R.lip_lower is None:
        raise BadParams("contraction conjugacy needs two-sided bounds for R")
    dfrac = delta.as_fraction()
    if p * dfrac > R.lip_lower:
        raise DeltaTooLarge("need p * delta <= lower Lipschitz constant")
    if rho is not None and p * dfrac > rho.as_fraction():
        raise DeltaTooLarge("need p * delta <= image openness radius")
    part = partition_contraction_domain(T, depth)
    R.tabulate()
    table = [0] * M
    moves = []
    for x in range(M):
        if x in part.layer_of:
            n, u = part.chain_root(x)
            y = u
            for _ in range(n):
                y = R(y)
            table[x] = y
            moves.append((y - x) % M)
    core = sorted(part.core)
    if window is None:
        xr = _fixed_point(R)
        for x in core:
            table[x] = xr
            moves.append((xr - x) % M)
    else:
        _core_window_images(R, T, core, window, table, moves)
    return ConjugacyMap(ctx, table, _max_norm(ctx, moves), depth, "thm3")


def _core_window_images(R: DynamicMap, T: DynamicMap, core: list,
                        window: int, table: list, moves: list) -> None:
    """Two-sided recursion for core points: walk `window` steps into the
    past along T (inverted inside the core), then roll forward through R.
    """
    ctx = R.ctx
    M = ctx.modulus
    # contraction order of R per application, from the declared bound
    lip = R.lip_upper
    order = 0
    frac = Fraction(1)
    while frac > lip:
        frac /= ctx.prime
        order += 1
    if window * max(order, 1) < ctx.total_digits and window < ctx.total_digits:
        raise WindowTooSmall(
            f"window {window} cannot certify {ctx.total_digits} digits")
    inv = {}
    for x in core:
        y = T(x)
        if y in inv:
            # keep deterministic smallest-preimage choice
            inv[y] = min(inv[y], x)
        else:
            inv[y] = x
    for x in core:
        past = [x]
        for _ in range(window):
            prev = inv.get(past[-1])
            if prev is None:
                raise DepthInsufficient(
                    "core residue has no past inside the core; increase depth")
            past.append(prev)
        past.reverse()              # T^-window(x), ..., T^-1(x), x
        z = 0
        for n in range(1, len(past)):
            z = (R((past[n - 1] + z) % M) - past[n]) % M
        table[x] = (x + z) % M
        moves.append(z)


# ---------------------------------------------------------------------------
# homogeneity homeomorphism
# ---------------------------------------------------------------------------

def homogeneity_homeomorphism(ctx: PrecisionContext, ys: list, zs: list,
                              delta: NormValue) -> ConjugacyMap:
    """Isometric-swap product phi with phi(y_n) = z_n and |phi - id| < delta.

    Both sequences must be proper (pairwise distinct at resolution) and
    pointwise within delta of each other.  Each step swaps the smallest
    pair of disjoint balls around the current image and the target that
    avoids every already-placed target.
    """
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if M > ctx.ball_budget:
        raise BudgetExceeded("context too large for a table-based swap product")
    if len(ys) != len(zs):
        raise BadParams("sequences must have equal length")
    ys = [y % M for y in ys]
    zs = [z % M for z in zs]
    if len(set(ys)) != len(ys) or len(set(zs)) != len(zs):
        raise NotProper("sequence terms collide at the context resolution")
    for y, z in zip(ys, zs):
        if ctx.norm_of_int(y - z) >= delta:
            raise NotClose(f"|y - z| not below delta for pair ({y}, {z})")

    table = list(range(M))
    placed = []
    for y, z in zip(ys, zs):
        w = table[y]
        if w == z:
            placed.append(z)
            continue
        j = _val((w - z) % M, p, D) + 1      # balls of radius p^-j are disjoint
        while any((t - w) % (p ** j) == 0 or (t - z) % (p ** j) == 0
                  for t in placed):
            j += 1
            if j > D:
                raise NotProper("cannot separate swap balls from placed targets")
        pj = p ** j
        shift = (z - w) % M
        for x in range(M):
            t = table[x]
            if (t - w) % pj == 0:
                table[x] = (t + shift) % M
            elif (t - z) % pj == 0:
                table[x] = (t - shift) % M
        placed.append(z)
    moves = [(table[x] - x) % M for x in range(M)]
    return ConjugacyMap(ctx, table, _max_norm(ctx, moves), len(ys), "homogeneity")
