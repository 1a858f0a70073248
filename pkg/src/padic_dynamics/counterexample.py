"""A piecewise map with right inverses but no covering family, built by
transporting a strictly sofic binary subshift onto the p-adic integers.

The chart identifies cylinder classes of the subshift with digit balls:
each tree level splits a class of admissible words into p nonempty groups
aligned to word subtrees, so two chart images are close exactly when the
underlying words share a long prefix.  The transported shift s acts on
the top digit block of x = a + b*p + z*p**2; the full map fixes a = 0,
projects b = 0 down to z, and otherwise cycles b while applying s.

Its right inverses R_a(x) = a + p**2 x never cover the space, and the
pseudo-orbits assembled here exploit that: a single fault hidden `delta`
deep fakes an odd zero-run flanked by ones, which no true orbit of the
even shift can shadow, while the identical pipeline over the full shift
is shadowed by an honest point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from typing import Callable, List, Optional, Tuple

from .errors import (
    BadParams,
    ChartExhausted,
    DepthInsufficient,
    IsolatedPoint,
    NoWitnessFound,
)
from .dynamics import DynamicMap, RightInverseFamily
from .padic import NormValue, PrecisionContext
from .shadowing import PseudoOrbit, brute_force_shadow, verify_pseudo_orbit


# ---------------------------------------------------------------------------
# subshift rules
# ---------------------------------------------------------------------------

def _even_extensions(word: Tuple[int, ...]) -> List[int]:
    """Letters extending an admissible even-shift word (binary alphabet;
    maximal zero-runs flanked by ones must have even length)."""
    out = [0]
    r = 0
    for sym in reversed(word):
        if sym == 0:
            r += 1
        else:
            break
    flanked = r < len(word)
    if not (flanked and r % 2 == 1):
        out.append(1)
    return out


def _full_extensions_factory(p: int) -> Callable[[Tuple[int, ...]], List[int]]:
    letters = list(range(p))
    return lambda word: letters


class _NeedMore(Exception):
    """Internal: split infeasible at the current word length."""


# ---------------------------------------------------------------------------
# chart construction
# ---------------------------------------------------------------------------

@dataclass
class ChartNode:
    words: list                   # sorted admissible words, equal length
    children: Optional[list]      # p child nodes, or None at a leaf
    child_sets: Optional[list]    # frozensets for membership walks
    child_len: int                # word length inside the children


def _split_aligned(words: list, pos: int, k: int) -> list:
    """Partition sorted equal-length words into k nonempty blocks, each a
    union of whole word subtrees (so every block fixes a symbol prefix)."""
    if k == 1:
        return [words]
    if pos >= len(words[0]):
        raise _NeedMore
    classes = [list(g) for _, g in groupby(words, key=lambda w: w[pos])]
    if len(classes) == 1:
        return _split_aligned(words, pos + 1, k)
    if len(classes) >= k:
        blocks = [[w for w in c] for c in classes[:k - 1]]
        tail = []
        for c in classes[k - 1:]:
            tail.extend(c)
        blocks.append(tail)
        return blocks
    # fewer letter classes than blocks: recurse into the larger classes
    quotas = [1] * len(classes)
    extra = k - len(classes)
    order = sorted(range(len(classes)), key=lambda i: -len(classes[i]))
    while extra > 0:
        progressed = False
        for i in order:
            if extra == 0:
                break
            if quotas[i] < len(classes[i]):
                quotas[i] += 1
                extra -= 1
                progressed = True
        if not progressed:
            raise _NeedMore
    blocks = []
    for c, kq in zip(classes, quotas):
        blocks.extend(_split_aligned(c, pos + 1, kq))
    return blocks


def _extend_words(words: list, extensions, rounds_cap: int) -> list:
    """One letter of growth for every word in the class."""
    grown = []
    for w in words:
        exts = extensions(w)
        if not exts:
            raise IsolatedPoint(f"word {w} has no admissible extension")
        for a in exts:
            grown.append(w + (a,))
    grown.sort()
    return grown


@dataclass
class CantorChart:
    """Bijection between depth-d digit balls and subshift cylinder classes."""

    p: int
    depth: int
    subshift: str
    root: ChartNode

    def encode(self, word: Tuple[int, ...]) -> int:
        """Chart image of an admissible word (zero-extended as needed)."""
        node = self.root
        out = 0
        pw = 1
        for _ in range(self.depth):
            L = node.child_len
            target = tuple(word[:L]) + (0,) * max(0, L - len(word))
            for i, ws in enumerate(node.child_sets):
                if target in ws:
                    out += i * pw
                    break
            else:
                raise BadParams(f"word {word} is not admissible for this chart")
            pw *= self.p
            node = node.children[i]
        return out

    def decode(self, z: int) -> Tuple[int, ...]:
        """Canonical word of the ball containing z (zero tail implied)."""
        node = self.root
        for _ in range(self.depth):
            z, d = z // self.p, z % self.p
            node = node.children[d]
        return tuple(node.words[0])


def build_cantor_chart(subshift: str, p: int, depth: int) -> CantorChart:
    """Recursively split cylinder classes into p groups down to `depth`."""
    if subshift == "even":
        extensions = lambda w: _even_extensions(w)
    elif subshift == "full":
        extensions = _full_extensions_factory(p)
    else:
        raise BadParams(f"unknown subshift {subshift!r}")

    def build(words: list, level: int) -> ChartNode:
        if level == depth:
            return ChartNode(words, None, None, len(words[0]) if words else 0)
        work = list(words)
        for _round in range(4 * p + 8):
            if len(work) >= p:
                try:
                    blocks = _split_aligned(work, 0, p)
                    break
                except _NeedMore:
                    pass
            work = _extend_words(work, extensions, 4 * p + 8)
        else:
            raise ChartExhausted(
                f"cannot split class {words[:2]}... into {p} groups")
        children = [build(b, level + 1) for b in blocks]
        return ChartNode(work, children,
                         [frozenset(map(tuple, b)) for b in blocks],
                         len(work[0]))

    seed = _extend_words([()], extensions, 4)
    root = build(seed, 0)
    return CantorChart(p, depth, subshift, root)


def transported_shift_table(chart: CantorChart) -> list:
    """s = chart o shift o chart^-1 as a table on depth-digit residues."""
    M = chart.p ** chart.depth
    return [chart.encode(chart.decode(z)[1:]) for z in range(M)]


# ---------------------------------------------------------------------------
# the piecewise map and its (non-covering) right inverses
# ---------------------------------------------------------------------------

def build_thm2_map(ctx: PrecisionContext, s_table: list,
                   z_digits: int) -> DynamicMap:
    """x = a + b*p + z*p**2: fix when a = 0, project to z when b = 0,
    otherwise cycle b and apply the transported shift to z."""
    p, D, M = ctx.prime, ctx.total_digits, ctx.modulus
    if z_digits != D - 2:
        raise BadParams("z digit count must be total_digits - 2")
    if len(s_table) < p ** z_digits:
        raise DepthInsufficient("chart table shallower than the context budget")
    p2 = p * p

    def fn(x, p=p, p2=p2, s=s_table):
        a = x % p
        if a == 0:
            return x
        b = (x // p) % p
        z = x // p2
        if b == 0:
            return z
        bn = b + 1 if b <= p - 2 else 1
        return a + bn * p + s[z] * p2

    return DynamicMap("thm2_map", ctx, fn, 2, None, None,
                      {"z_digits": z_digits})


def thm2_right_inverses(ctx: PrecisionContext) -> RightInverseFamily:
    """R_a(x) = a + p**2 x for a = 1..p-1; jointly non-covering."""
    p, M = ctx.prime, ctx.modulus
    p2 = p * p
    members = tuple(
        DynamicMap(f"R[{a}]", ctx, lambda m, a=a, p2=p2, M=M: (a + p2 * m) % M,
                   0, Fraction(1, p2), Fraction(1, p2), {"a": a})
        for a in range(1, p))

    def membership(m, p=p):
        a = m % p
        b = (m // p) % p
        if a != 0 and b == 0:
            return a - 1
        return None

    return RightInverseFamily(members, membership, False, True, Fraction(1, p2))


def covered_residue_count(ctx: PrecisionContext) -> int:
    """|union of R_a images| = (p-1) * p**(D-2) < p**D."""
    p, D = ctx.prime, ctx.total_digits
    return (p - 1) * p ** (D - 2)


# ---------------------------------------------------------------------------
# the non-shadowing demonstration
# ---------------------------------------------------------------------------

@dataclass
class NonShadowingResult:
    subshift: str
    q: int                        # length of the faked zero-run
    orbit_s: tuple                # chart-level pseudo-orbit
    orbit_f: tuple                # lifted pseudo-orbit of the piecewise map
    delta: NormValue              # chart-level pseudo-orbit bound (met)
    eps: NormValue                # chart-level shadowing tolerance tested
    best_point: int
    best_error_f: NormValue       # exhaustive minimum at the lifted level
    best_error_s: NormValue       # the same, rescaled to the chart level
    shadowed: bool                # best_error_s <= eps


def _splice_orbit(chart: CantorChart, s_table: list, q: int) -> tuple:
    """Pseudo-orbit faking the word 1 0^q 1: follow eta = 1 0^(q+1) 1 for
    two steps, then continue from eta' = 0^q 1 with the fault hidden at
    word depth q-1."""
    eta = (1,) + (0,) * (q + 1) + (1,)
    etap = (0,) * q + (1,)
    pts = [chart.encode(eta), chart.encode(eta[1:])]
    for n in range(2, q + 3):
        pts.append(chart.encode(etap[n - 1:]))
    return tuple(pts)


def demonstrate_non_shadowing(p: int, chart_depth: int, delta: NormValue,
                              eps: NormValue, subshift: str = "even",
                              a_digit: int = 1, require_witness: bool = True,
                              max_q: int = 40,
                              chart: Optional[CantorChart] = None
                              ) -> NonShadowingResult:
    """Construct a delta-pseudo-orbit of the transported shift, lift it,
    and measure exhaustively how well any residue shadows it.

    The chart-level faked run length q grows (odd values only — an even
    run would be admissible) until the splice fault drops below delta.
    The lifted orbit cycles the middle digit b_n = (n mod (p-1)) + 1 and
    carries the chart orbit in the top digit block, so its defects are
    delta * p**-2.  Errors are reported both at the lifted level and
    rescaled by p**2 back to the chart level, where `eps` applies.
    """
    if p < 3:
        raise BadParams("the construction needs p >= 3")
    if a_digit < 1 or a_digit >= p:
        raise BadParams("fixed low digit must be nonzero")
    z_ctx = PrecisionContext(p, chart_depth)
    f_ctx = PrecisionContext(p, chart_depth + 2)
    if chart is None:
        chart = build_cantor_chart(subshift, p, chart_depth)
    s_table = transported_shift_table(chart)

    orbit_s = None
    chosen_q = None
    for q in range(3, max_q + 1, 2):
        pts = _splice_orbit(chart, s_table, q)
        defect = max(
            (z_ctx.norm_of_int(s_table[pts[n]] - pts[n + 1])
             for n in range(len(pts) - 1)),
            default=z_ctx.norm_of_int(0))
        if defect <= delta:
            orbit_s = pts
            chosen_q = q
            break
    if orbit_s is None:
        raise NoWitnessFound(
            f"no odd run length up to {max_q} hides the fault below delta")

    f = build_thm2_map(f_ctx, s_table, chart_depth)
    p2 = p * p
    lifted = tuple(a_digit + ((n % (p - 1)) + 1) * p + z * p2
                   for n, z in enumerate(orbit_s))
    orbit_f = PseudoOrbit(f_ctx, lifted, delta.scaled(2))
    worst = verify_pseudo_orbit(f, orbit_f)
    if worst > orbit_f.delta:
        raise NoWitnessFound(f"lifted orbit defect {worst!r} exceeds bound")

    f.tabulate()
    best_point, best_error_f = brute_force_shadow(f, orbit_f)
    if best_error_f.is_zero:
        best_error_s = best_error_f
    else:
        exp = max(best_error_f.exponent - 2, 0)
        best_error_s = NormValue(p, exp)
    shadowed = best_error_s <= eps
    if require_witness and shadowed:
        raise NoWitnessFound(
            f"pseudo-orbit is {eps!r}-shadowed by residue {best_point}")
    return NonShadowingResult(subshift, chosen_q, orbit_s, lifted, delta, eps,
                              best_point, best_error_f, best_error_s, shadowed)
