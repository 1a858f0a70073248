"""Conjugacy builder tests: perturbation conjugacies and their inverses,
right-inverse transfer, contraction-layer conjugacies, and the
ball-swap homeomorphism for close proper sequences."""

import random
from fractions import Fraction

import pytest

from padic_dynamics.analysis import estimate_lipschitz
from padic_dynamics.conjugacy import (
    build_conjugacy_thm1,
    build_conjugacy_thm3,
    build_inverse_conjugacy_thm1,
    homogeneity_homeomorphism,
    partition_contraction_domain,
    transfer_family,
    transfer_right_inverse,
    verify_conjugacy,
)
from padic_dynamics.dynamics import (
    builtin_map,
    make_lipschitz_perturbation,
    perturb,
    shift_right_inverses,
)
from padic_dynamics.errors import (
    DeltaTooLarge,
    NonConvergence,
    NotClose,
    NotProper,
    WindowTooSmall,
)
from padic_dynamics.padic import NormValue, PrecisionContext


# ---------------------------------------------------------------------------
# perturbation conjugacy and its inverse
# ---------------------------------------------------------------------------

def test_thm1_conjugacy_for_perturbed_shift():
    ctx = PrecisionContext(3, 6)
    f = builtin_map("shift_zp", ctx)
    fam = shift_right_inverses(ctx)
    delta = NormValue(3, 2)
    depth = 4
    for seed in (0, 1, 2):
        phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed)
        g = perturb(f, phi)
        h = build_conjugacy_thm1(f, fam, g, delta, depth)
        rep = verify_conjugacy(f, g, h)
        assert rep.max_defect <= NormValue(3, depth)
        assert rep.injective
        assert rep.closeness <= delta.scaled(1)    # |h - id| <= delta/p


def test_thm1_inverse_round_trip():
    ctx = PrecisionContext(3, 6)
    f = builtin_map("shift_zp", ctx)
    fam = shift_right_inverses(ctx)
    delta = NormValue(3, 2)
    depth = 4
    cert = 3 ** (ctx.total_digits - depth)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=5)
    g = perturb(f, phi)
    h = build_conjugacy_thm1(f, fam, g, delta, depth)
    hinv = build_inverse_conjugacy_thm1(f, fam, g, delta, depth)
    for x in range(ctx.modulus):
        assert (hinv(h(x)) - x) % cert == 0
        assert (h(hinv(x)) - x) % cert == 0


def test_thm1_rejects_delta_at_contraction_margin():
    # the shift on Z_2 contracts by 1/2, so only delta < 2 - 1 = 1 works
    ctx = PrecisionContext(2, 6)
    f = builtin_map("shift_zp", ctx)
    fam = shift_right_inverses(ctx)
    g = f
    with pytest.raises(DeltaTooLarge):
        build_conjugacy_thm1(f, fam, g, NormValue(2, 0), 3)


def test_thm1_depth_tightens_defect():
    ctx = PrecisionContext(3, 8)
    f = builtin_map("shift_zp", ctx)
    fam = shift_right_inverses(ctx)
    delta = NormValue(3, 2)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=7)
    g = perturb(f, phi)
    defects = []
    for depth in (2, 4, 6):
        h = build_conjugacy_thm1(f, fam, g, delta, depth)
        defects.append(verify_conjugacy(f, g, h).max_defect)
    assert defects[0] >= defects[1] >= defects[2]
    assert defects[2] <= NormValue(3, 6)


# ---------------------------------------------------------------------------
# right-inverse transfer
# ---------------------------------------------------------------------------

def test_transfer_preserves_images_and_lip_bound():
    ctx = PrecisionContext(2, 8)
    fam = shift_right_inverses(ctx)
    delta = NormValue(2, 2)
    M = ctx.modulus
    for seed in range(5):
        phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed)
        tfam = transfer_family(fam, phi, delta)
        bound = fam.lip_upper / (1 - delta.as_fraction() * fam.lip_upper)
        for R, Rt in zip(fam.members, tfam.members):
            est = estimate_lipschitz(Rt)
            assert est.c2_upper <= bound
            assert {Rt(x) for x in range(M)} == {R(x) for x in range(M)}


def test_transferred_inverse_inverts_perturbed_map():
    ctx = PrecisionContext(3, 6)
    f = builtin_map("shift_zp", ctx)
    fam = shift_right_inverses(ctx)
    delta = NormValue(3, 2)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=3)
    g = perturb(f, phi)
    tfam = transfer_family(fam, phi, delta)
    cert = 3 ** (ctx.total_digits - 1)
    for Rt in tfam.members:
        for x in range(ctx.modulus):
            assert (g(Rt(x)) - x) % cert == 0


def test_transfer_rejects_large_delta():
    ctx = PrecisionContext(2, 6)
    fam = shift_right_inverses(ctx)
    phi = make_lipschitz_perturbation(ctx, "constant", NormValue(2, 0), c=1)
    with pytest.raises(DeltaTooLarge):
        transfer_right_inverse(fam.members[0], phi, NormValue(2, -1))


def test_transfer_nonconvergence_guard():
    ctx = PrecisionContext(2, 6)
    fam = shift_right_inverses(ctx)
    phi = make_lipschitz_perturbation(ctx, "digit_local", NormValue(2, 1),
                                      seed=1)
    Rt = transfer_right_inverse(fam.members[0], phi, NormValue(2, 1),
                                max_iter=0)
    with pytest.raises(NonConvergence):
        Rt(5)


# ---------------------------------------------------------------------------
# contraction conjugacy
# ---------------------------------------------------------------------------

def test_partition_layers_of_affine_contraction():
    # R(x) = 3x + 1 on 3^6 residues: the image complement holds 2/3 of
    # the space and each deeper layer shrinks by a factor p, leaving the
    # fixed point 364 = -1/2 mod 729 as the core.
    ctx = PrecisionContext(3, 6)
    R = builtin_map("affine", ctx, v=3, w=1)
    part = partition_contraction_domain(R, 6)
    assert [len(layer) for layer in part.layers] == [486, 162, 54, 18, 6, 2, 0]
    assert part.core == {364}


def test_partition_chain_roots_replay_to_origin():
    ctx = PrecisionContext(3, 4)
    R = builtin_map("affine", ctx, v=3, w=1)
    part = partition_contraction_domain(R, 4)
    for x, n in part.layer_of.items():
        level, u = part.chain_root(x)
        assert level == n
        assert u in part.layers[0] or n == 0
        y = u
        for _ in range(n):
            y = R(y)
        assert y == x


def test_thm3_conjugacy_affine():
    ctx = PrecisionContext(3, 6)
    R = builtin_map("affine", ctx, v=3, w=1)
    delta = NormValue(3, 3)
    for seed in range(3):
        phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed)
        T = perturb(R, phi)
        h = build_conjugacy_thm3(R, T, ctx.total_digits, delta)
        rep = verify_conjugacy(R, T, h)
        assert rep.max_defect.is_zero
        assert rep.injective
        assert rep.closeness <= delta


def test_thm3_sends_fixed_point_to_fixed_point():
    ctx = PrecisionContext(3, 6)
    R = builtin_map("affine", ctx, v=3, w=1)
    delta = NormValue(3, 3)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=11)
    T = perturb(R, phi)
    x_t = 0
    for _ in range(4 * ctx.total_digits):
        x_t = T(x_t)
    assert T(x_t) == x_t
    h = build_conjugacy_thm3(R, T, ctx.total_digits, delta)
    assert h(x_t) == 364                  # the fixed point of R


def test_thm3_rejects_delta_beyond_margin():
    ctx = PrecisionContext(3, 6)
    R = builtin_map("affine", ctx, v=3, w=1)
    with pytest.raises(DeltaTooLarge):
        build_conjugacy_thm3(R, R, 6, NormValue(3, 1))
    with pytest.raises(DeltaTooLarge):
        build_conjugacy_thm3(R, R, 6, NormValue(3, 3), rho=NormValue(3, 4))


def test_thm3_scaled_isometry_contraction():
    ctx = PrecisionContext(3, 5)
    R = builtin_map("scaled_isometry", ctx, m=2, seed=8, c=5)
    delta = NormValue(3, 4)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=2)
    T = perturb(R, phi)
    h = build_conjugacy_thm3(R, T, ctx.total_digits, delta)
    rep = verify_conjugacy(R, T, h)
    assert rep.max_defect.is_zero and rep.injective


def test_thm3_windowed_core_matches_fixed_point_mode():
    ctx = PrecisionContext(3, 4)
    R = builtin_map("affine", ctx, v=3, w=1)
    delta = NormValue(3, 2)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=4)
    T = perturb(R, phi)
    h_ring = build_conjugacy_thm3(R, T, ctx.total_digits, delta)
    h_win = build_conjugacy_thm3(R, T, ctx.total_digits, delta,
                                 window=ctx.total_digits)
    rep = verify_conjugacy(R, T, h_win)
    assert rep.max_defect.is_zero
    assert h_win.table == h_ring.table


def test_thm3_window_too_small():
    ctx = PrecisionContext(3, 4)
    R = builtin_map("affine", ctx, v=3, w=1)
    delta = NormValue(3, 2)
    phi = make_lipschitz_perturbation(ctx, "digit_local", delta, seed=4)
    T = perturb(R, phi)
    with pytest.raises(WindowTooSmall):
        build_conjugacy_thm3(R, T, ctx.total_digits, delta, window=1)


# ---------------------------------------------------------------------------
# homogeneity homeomorphism
# ---------------------------------------------------------------------------

def test_homogeneity_matches_sequences():
    ctx = PrecisionContext(3, 5)
    delta = NormValue(3, 2)
    rng = random.Random(17)
    for _ in range(10):
        n = rng.randrange(2, 8)
        ys, zs = [], []
        while len(ys) < n:
            y = rng.randrange(ctx.modulus)
            z = (y + 27 * rng.randrange(9)) % ctx.modulus
            if y in ys or z in zs:
                continue
            ys.append(y)
            zs.append(z)
        phi = homogeneity_homeomorphism(ctx, ys, zs, delta)
        assert phi.is_bijective()
        for y, z in zip(ys, zs):
            assert phi(y) == z
        assert phi.closeness.as_fraction() < 3 * delta.as_fraction()


def test_homogeneity_identity_when_sequences_equal():
    ctx = PrecisionContext(2, 5)
    ys = [1, 9, 17]
    phi = homogeneity_homeomorphism(ctx, ys, ys, NormValue(2, 1))
    assert phi.table == list(range(ctx.modulus))
    assert phi.closeness.is_zero


def test_homogeneity_rejects_bad_inputs():
    ctx = PrecisionContext(3, 4)
    delta = NormValue(3, 2)
    with pytest.raises(NotProper):
        homogeneity_homeomorphism(ctx, [1, 1], [2, 2 + 27], delta)
    with pytest.raises(NotClose):
        homogeneity_homeomorphism(ctx, [1], [2], delta)
