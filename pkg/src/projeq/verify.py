"""Verification suites run by the ``verify`` command.

Each check exercises one structural claim end to end and returns a
CheckReport whose name states the mathematical property, so a failure
points straight at the theorem-level fact that broke.  Tolerances follow
the ladder used across the package: construction 1e-10, membership 1e-9,
cross-method oracles 1e-8 (networks: 1e-7 for the point-cloud nets).
"""

from __future__ import annotations

import numpy as np

from projeq import autodiff as ad
from projeq import charnet, data, groups, invariants, reps, spinornet, su2, vierernet
from projeq.invariants import CheckReport
from projeq.linalg import COMPLEX, REAL, subspace_equal

SCOPES = ("groups", "invariants", "su2", "network")


def _report(name: str, passed: bool, dev: float = 0.0, **details) -> CheckReport:
    return CheckReport(name, bool(passed), float(dev), details)


# ---------------------------------------------------------------------------
# groups


def suite_groups() -> list[CheckReport]:
    out = []
    vierer = groups.make_vierer()
    table = np.array([c.values for c in groups.character_group(vierer, REAL)])
    expected = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float)
    out.append(_report("flip-group-character-table-rows", np.array_equal(table, expected)))

    z3 = groups.character_group(groups.make_cyclic(3), COMPLEX)
    alpha = np.exp(2j * np.pi / 3)
    dev = max(
        float(np.max(np.abs(z3[1].values - np.array([1, alpha, alpha**2])))),
        float(np.max(np.abs(z3[2].values - np.array([1, alpha**2, alpha])))),
    )
    out.append(_report("cyclic3-characters-are-cube-roots", len(z3) == 3 and dev < 1e-12, dev))

    ok = True
    for n in (3, 4, 5):
        chars = groups.character_group(groups.make_symmetric(n), COMPLEX)
        ok = ok and len(chars) == 2 and chars[0].is_trivial and np.all(np.abs(np.abs(chars[1].values) - 1) < 1e-12)
    out.append(_report("symmetric-group-characters-trivial-and-sign", ok))

    ok = True
    details = {}
    for n in (3, 4, 5):
        g = groups.make_symmetric(n)
        sub = groups.commutator_subgroup(g)
        details[f"S{n}"] = sub.order
        ok = ok and sub.order == g.order // 2
    out.append(_report("symmetric-commutators-generate-alternating-group", ok, **details))

    ok = True
    for g in (groups.make_symmetric(4), groups.make_symmetric(5), vierer):
        sub = groups.commutator_subgroup(g)
        for c in groups.character_group(g, COMPLEX):
            ok = ok and all(abs(c(m) - 1.0) < 1e-12 for m in sub.members)
    out.append(_report("characters-identically-one-on-commutator-subgroup", ok))

    z5 = groups.character_group(groups.make_cyclic(5), REAL)
    z4 = groups.character_group(groups.make_cyclic(4), REAL)
    out.append(
        _report(
            "real-cyclic-characters-follow-root-parity",
            len(z5) == 1 and len(z4) == 2 and z4[1](1) == -1.0,
        )
    )

    a5 = groups.commutator_subgroup(groups.make_symmetric(5)).as_group("A5")
    chars = groups.character_group(a5, COMPLEX)
    out.append(
        _report(
            "perfect-group-has-only-trivial-character",
            groups.is_perfect(a5) and len(chars) == 1 and chars[0].is_trivial,
            order=a5.order,
        )
    )

    ok = True
    for g in (groups.make_cyclic(6), vierer, groups.make_symmetric(4)):
        chars = groups.character_group(g, COMPLEX)
        keys = {c.key() for c in chars}
        ok = ok and len(chars) > 0
        for a in chars:
            ok = ok and a.inverse_char().key() in keys
            for b in chars:
                ok = ok and groups.char_mul(a, b).key() in keys
    out.append(_report("character-group-closed-under-product-and-inverse", ok))
    return out


# ---------------------------------------------------------------------------
# invariants


def _acceptance_reps():
    return [
        reps.rep_cyclic_shift(4, field=COMPLEX),
        reps.rep_flip_image(3, 3),
        reps.rep_permutation_tensor(4, 2),
    ]


def suite_invariants() -> list[CheckReport]:
    out = []
    flip = reps.rep_flip_image(3, 3)
    chars = groups.character_group(flip.group, REAL)
    dims_projector = []
    dims_nullspace = []
    agree = True
    for c in chars:
        b1 = invariants.invariant_basis(flip, c)
        b2 = invariants.invariant_basis_nullspace(flip, c)
        dims_projector.append(b1.dim)
        dims_nullspace.append(b2.dim)
        agree = agree and subspace_equal(b1.vectors, b2.vectors, tol=1e-9)
    out.append(
        _report(
            "flip-filter-space-dimensions-4-2-2-1",
            dims_projector == [4, 2, 2, 1] and dims_nullspace == [4, 2, 2, 1] and agree,
            dims=dims_projector,
        )
    )

    shift = reps.rep_cyclic_shift(4, field=COMPLEX)
    worst = 0.0
    ok = True
    for b in invariants.projective_invariants(shift):
        ok = ok and b.dim == 1
        omega = b.character(1)
        expected = np.array([omega ** (-k) for k in range(4)]) / 2.0
        worst = max(worst, 1.0 - abs(np.vdot(expected, b.vectors[0])))
    out.append(_report("shift-twisted-lines-are-fourier-components", ok and worst < 1e-10, worst))

    for r in _acceptance_reps():
        rep_report = invariants.projective_oracle_check(r)
        rep_report.name = f"projective-solutions-match-oracle[{r.name}]"
        out.append(rep_report)

    for r in [
        reps.rep_cyclic_shift(4, field=COMPLEX),
        reps.rep_flip_image(3, 3, field=COMPLEX),
        reps.rep_permutation_tensor(4, 2, field=COMPLEX),
    ]:
        rep_report = invariants.commutator_structure_check(r)
        rep_report.name = f"twisted-sum-equals-commutator-invariants[{r.name}]"
        out.append(rep_report)
    real_containment = invariants.commutator_structure_check(reps.rep_flip_image(3, 3))
    real_containment.name = "twisted-spaces-inside-commutator-invariants[real]"
    out.append(real_containment)

    for n, k in [(4, 2), (5, 2), (5, 3), (3, 2), (4, 3)]:
        out.append(invariants.sign_triviality_check(n, k))
    for n, k in [(3, 2), (4, 3)]:
        out.append(invariants.verify_sign_tensor(n, k))
    return out


# ---------------------------------------------------------------------------
# su2


def suite_su2() -> list[CheckReport]:
    out = []
    rng = np.random.default_rng(900)

    worst = 0.0
    for _ in range(200):
        q, p, r = (su2.random_unit_quaternion(rng) for _ in range(3))
        left = su2.quat_mul(su2.quat_mul(q, p), r)
        right = su2.quat_mul(q, su2.quat_mul(p, r))
        worst = max(worst, float(np.max(np.abs(left.as_array() - right.as_array()))))
    out.append(_report("quaternion-product-associative", worst < 1e-12, worst))

    worst = 0.0
    for _ in range(200):
        q, p = su2.random_unit_quaternion(rng), su2.random_unit_quaternion(rng)
        lhs = su2.quat_to_rotation(su2.quat_mul(q, p))
        rhs = su2.quat_to_rotation(q) @ su2.quat_to_rotation(p)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        worst = max(worst, float(np.max(np.abs(su2.quat_to_rotation(-q) - su2.quat_to_rotation(q)))))
    out.append(_report("covering-map-homomorphic-and-antipodal", worst < 1e-10, worst))

    worst = 0.0
    for _ in range(200):
        q = su2.random_unit_quaternion(rng)
        back = su2.rotation_to_quat(su2.quat_to_rotation(q))
        worst = max(worst, min(su2.quat_distance(back, q), su2.quat_distance(back, -q)))
    out.append(_report("double-cover-two-preimages-per-rotation", worst < 1e-9, worst))

    worst = 0.0
    for _ in range(1000):
        q = su2.random_unit_quaternion(rng)
        r, s = su2.commutator_decompose(q)
        rec = su2.reconstruct_commutator(r, s)
        worst = max(worst, float(np.max(np.abs(rec.as_array() - q.as_array()))))
    out.append(_report("every-element-is-a-commutator", worst < 1e-10, worst))

    pairs = [(a / 2.0, b / 2.0) for a in range(5) for b in range(5)]
    worst = 0.0
    for pair in pairs:
        c = su2.clebsch_gordan(*pair).matrix
        worst = max(worst, float(np.max(np.abs(c @ c.conj().T - np.eye(c.shape[0])))))
    out.append(_report("coupling-tables-unitary", worst < 1e-10, worst))

    worst = 0.0
    for pair in pairs:
        t = su2.clebsch_gordan(*pair)
        for _ in range(100):
            q = su2.random_unit_quaternion(rng)
            w = np.kron(su2.wigner(pair[0], q).astype(complex), su2.wigner(pair[1], q).astype(complex))
            conj = t.matrix @ w @ t.matrix.conj().T
            for lev, off in zip(t.block_levels, t.block_offsets):
                d = lev + 1
                block = conj[off : off + d, off : off + d].copy()
                conj[off : off + d, off : off + d] = 0.0
                if lev <= max(su2.SUPPORTED_TWO_L):
                    worst = max(worst, float(np.max(np.abs(block - su2.wigner(lev / 2.0, q)))))
            worst = max(worst, float(np.max(np.abs(conj))))
    out.append(_report("coupling-tables-block-diagonalize-products", worst < 1e-8, worst))

    t11 = su2.clebsch_gordan(1, 1)
    scalar = (t11.block(0.0) * np.sqrt(3.0)).real
    cross = (t11.block(1.0) * np.sqrt(2.0)).real
    expected_cross = np.array([[0, 0, 0, 0, 0, 1, 0, -1, 0], [0, 0, -1, 0, 0, 0, 1, 0, 0], [0, 1, 0, -1, 0, 0, 0, 0, 0]], dtype=float)
    dev = max(
        float(np.max(np.abs(scalar - np.array([[1, 0, 0, 0, 1, 0, 0, 0, 1]])))),
        float(np.max(np.abs(cross - expected_cross))),
        float(np.max(np.abs(t11.matrix.imag))),
    )
    out.append(_report("vector-coupling-rows-are-dot-and-cross", dev < 1e-12, dev))

    steps = 100
    prev = su2.QUAT_ONE
    for k in range(1, steps + 1):
        theta = 2.0 * np.pi * k / steps
        q = su2.UnitQuaternion(np.cos(theta / 2), np.sin(theta / 2) * np.array([0.0, 0.0, 1.0]))
        if su2.quat_distance(q, prev) > su2.quat_distance(-q, prev):
            q = -q
        prev = q
    dev = float(np.max(np.abs(su2.wigner(0.5, prev) + np.eye(2))))
    out.append(_report("half-level-lift-has-no-continuous-sign", dev < 1e-6, dev))

    worst = 0.0
    ok = True
    for _ in range(100):
        s = rng.normal(size=2) + 1j * rng.normal(size=2)
        sc, vec = su2.spinor_square(s)
        sc2, vec2 = su2.spinor_square(-s)
        ok = ok and sc == sc2 and np.array_equal(vec, vec2)
        worst = max(worst, abs(sc))
        q = su2.random_unit_quaternion(rng)
        _, rot = su2.spinor_square(su2.wigner(0.5, q) @ s)
        worst = max(worst, float(np.max(np.abs(rot - su2.quat_to_rotation(q) @ vec))))
    out.append(_report("spinor-square-sign-blind-and-equivariant", ok and worst < 1e-9, worst))
    return out


# ---------------------------------------------------------------------------
# network


def suite_network() -> list[CheckReport]:
    out = []
    rng = np.random.default_rng(901)

    for n, field, nonlin in ((3, COMPLEX, "modulus_tanh"), (4, COMPLEX, "modulus_tanh")):
        rep = reps.rep_cyclic_shift(n, field=field)
        net = charnet.CharNet.random([rep, rep, rep], rng, nonlinearity=nonlin)
        worst = 0.0
        for _ in range(100):
            x = rng.normal(size=n) + 1j * rng.normal(size=n)
            g = int(rng.integers(0, n))
            worst = max(worst, charnet.slot_equivariance_defect(net, x, g))
        out.append(_report(f"slot-equivariance-cyclic{n}-net", worst < 1e-8, worst))

    net = vierernet.ViererNet(widths=(3, 3, 3), seed=5)
    images = rng.normal(size=(4, 12, 12))
    dev = vierernet.slot_flip_defect(net, images)
    out.append(_report("slot-equivariance-flip-cnn", dev < 1e-8, dev))

    rep = reps.rep_cyclic_shift(3, field=COMPLEX)
    cnet = charnet.CharNet.random([rep, rep, rep], rng, with_selector=True)
    chars = list(cnet.layers[0].chars)
    for hot in range(3):
        sel = np.zeros(3, dtype=complex)
        sel[hot] = 1.0
        picked = charnet.CharNet(cnet.layers, cnet.nonlinearity, sel)
        report = charnet.check_projective_equivariance(
            picked, rep, lambda g, y: rep.matrix(g) @ y, samples=5, tol=1e-8, chars=chars
        )
        # the recovered scalar must be the slot's character value at g
        matched = all(abs(r.scalar - chars[hot](r.element)) < 1e-6 for r in report.records)
        out.append(
            _report(
                f"one-hot-selector-projectively-equivariant[slot{hot}]",
                report.passed and matched,
                report.max_sin,
            )
        )
    dense = charnet.check_projective_equivariance(
        cnet, rep, lambda g, y: rep.matrix(g) @ y, samples=5, tol=1e-8, chars=chars
    )
    out.append(
        _report(
            "dense-selector-deviation-recorded-not-asserted",
            True,
            dense.max_sin,
            note="a dense selector generally breaks exact projective equivariance",
        )
    )

    vnet = vierernet.ViererNet(widths=(4, 4, 4), seed=1)
    bnet = vierernet.BaselineCNN(widths=(4, 4, 4), seed=1)
    conv_v = sum(p.value.size for n_, p in vnet.params().items() if n_.startswith("conv"))
    conv_b = sum(p.value.size for n_, p in bnet.params().items() if n_.startswith("conv"))
    out.append(_report("channel-pair-parameter-parity", conv_v == conv_b, vierer=conv_v, baseline=conv_b))

    ds = data.gen_spinor_dataset(4, 0.1, seed=7, rotate=False)
    worst = 0.0
    for variant in ("spinors-as-features", "spinors-as-filters", "squared-features", "squared-filters"):
        net = spinornet.SpinorNet(variant, seed=3)
        base = net.forward(ds.positions, ds.spinors).value
        for _ in range(20):
            q = su2.random_unit_quaternion(rng)
            r = su2.quat_to_rotation(q)
            u = su2.wigner(0.5, q)
            rotated = net.forward(ds.positions @ r.T, ds.spinors @ u.T).value
            worst = max(worst, float(np.max(np.abs(rotated - base @ u.T))))
    out.append(_report("point-cloud-nets-rotation-equivariant", worst < 1e-7, worst))

    ok = True
    for variant in spinornet.VARIANT_NAMES:
        net = spinornet.SpinorNet(variant, seed=4)
        a = net.forward(ds.positions, ds.spinors).value
        b = net.forward(ds.positions, -ds.spinors).value
        if variant == "spinors-as-scalars":
            continue
        ok = ok and np.allclose(b, -a, atol=1e-10)
    out.append(_report("spinor-sign-flip-propagates-to-output", ok))

    gate = ad.Var(np.full((2, 3, 1, 1), 30.0))
    spinor_feat = ad.Var(rng.normal(size=(2, 3, 1, 2)) + 1j * rng.normal(size=(2, 3, 1, 2)))
    gated = ad.mul(spinor_feat, ad.sigmoid(gate))
    dev = float(np.max(np.abs(gated.value - spinor_feat.value)))
    out.append(_report("gate-saturation-preserves-features", dev < 1e-9, dev))

    x = rng.normal(size=32)
    dev = float(np.max(np.abs(np.tanh(-x) + np.tanh(x))))
    out.append(_report("tanh-odd-so-sign-slots-commute", dev == 0.0, dev))
    return out


SUITES = {
    "groups": suite_groups,
    "invariants": suite_invariants,
    "su2": suite_su2,
    "network": suite_network,
}


def run_suites(scope: str = "all") -> dict:
    names = list(SUITES) if scope == "all" else [scope]
    if any(n not in SUITES for n in names):
        raise ValueError(f"unknown scope {scope!r}; choose from all, {', '.join(SUITES)}")
    results = {}
    all_passed = True
    for name in names:
        checks = SUITES[name]()
        results[name] = [c.to_json() for c in checks]
        all_passed = all_passed and all(c.passed for c in checks)
    return {"passed": all_passed, "suites": results}
