"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every expected value is either computed by an independent oracle inside
the test or follows from a closed-form identity; tolerances are pinned in
the assertions.
"""
import filecmp
import time

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from duomotion.contacts import brute_force_pairs, collision_pairs, detect_sequence
from duomotion.curriculum import CurriculumState, gain, update_scales
from duomotion.fixtures import FixtureSpec, generate_fixture, random_triangle_soup
from duomotion.metrics import acc_error, contact_f1, mpjpe, success, vel_error
from duomotion.pipeline import PipelineConfig, rest_robot_keypoints, run_pipeline
from duomotion.retarget import project_contact_mask
from duomotion.rewards import (
    RewardConfig,
    RolloutFrame,
    expected_contact_reward,
    interaction_discrepancy,
    interaction_reward,
    interaction_weights,
    unexpected_contact_penalty,
)
from duomotion.rootopt import (
    CentroidPair,
    apply_root_offset,
    centroid_objective,
    contact_centroids,
    mean_centroid_gap,
    optimize_root_offset,
)
from duomotion.rotations import aa_to_matrix
from duomotion.shapefit import (
    ShapeFitConfig,
    fit_shape,
    keypoint_system,
    ridge_solution,
    shape_loss_gradient,
    shape_loss_terms,
)


def _report(name: str, ok: bool) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}", flush=True)


def test_criterion_1_collision_oracle_equivalence():
    """BVH pair sets equal brute force exactly on >= 20 random mesh pairs."""
    rng = np.random.default_rng(2024)
    ok = True
    t0 = time.perf_counter()
    try:
        nonempty = 0
        for trial in range(20):
            n_a = int(rng.integers(50, 700)) if trial < 18 else 2000
            n_b = int(rng.integers(50, 700)) if trial < 18 else 1500
            gap = float(rng.uniform(0.0, 0.6))
            a = random_triangle_soup(rng, n_a, (0.0, 0.0, 0.0))
            b = random_triangle_soup(rng, n_b, (gap, 0.0, 0.0))
            eps = float(rng.uniform(0.0, 0.03))
            got = {(p.face_a, p.face_b) for p in collision_pairs(a, b, eps)}
            want = {(p.face_a, p.face_b) for p in brute_force_pairs(a, b, eps)}
            assert got == want, f"trial {trial}: BVH != brute force"
            nonempty += bool(got)
        assert nonempty >= 10, "test pairs are too easy: most were contact-free"
        elapsed = time.perf_counter() - t0
        assert elapsed <= 60.0, f"runtime {elapsed:.1f}s exceeds 60s budget"
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 1: collision oracle equivalence", ok)


def test_criterion_2_root_offset_closed_form():
    """translation_only matches the analytic mean; full matches grid search."""
    rng = np.random.default_rng(7)
    ok = True
    try:
        # part A: closed-form translation on 100 random pair sets
        for _ in range(100):
            n = int(rng.integers(1, 12))
            c_a = rng.normal(0, 1, (n, 3))
            c_b = rng.normal(0, 1, (n, 3))
            pairs = [CentroidPair(frame=0, c_a=a, c_b=b) for a, b in zip(c_a, c_b)]
            off = optimize_root_offset(pairs, np.zeros((1, 3)), mode="translation_only")
            assert np.max(np.abs(off.delta_p - (c_b - c_a).mean(axis=0))) <= 1e-10

        # part B: rotated-contact fixture, 10 degrees about z through the pivot
        angle = np.deg2rad(10.0)
        true_rot = np.array([0.0, 0.0, angle])
        piv = np.array([0.1, -0.3, 0.9])
        dp_true = np.array([0.05, -0.02, 0.01])
        c_a = rng.normal(0, 0.5, (20, 3)) + piv
        c_b = (c_a - piv) @ aa_to_matrix(true_rot).T + piv + dp_true
        pairs = [CentroidPair(frame=0, c_a=a, c_b=b) for a, b in zip(c_a, c_b)]
        off = optimize_root_offset(pairs, piv[None, :], mode="full")

        # grid-search oracle: rotation vectors on a 0.5-degree lattice with the
        # exact per-rotation translation (finer than a 1 mm translation grid)
        step = np.deg2rad(0.5)
        axis_vals = np.arange(-24, 25) * step  # +/- 12 degrees per component
        grid = np.stack(np.meshgrid(axis_vals, axis_vals, axis_vals, indexing="ij"), axis=-1).reshape(-1, 3)
        best_f = np.inf
        best = None
        rel_a = c_a - piv
        for chunk in np.array_split(grid, 64):
            mats = Rotation.from_rotvec(chunk).as_matrix()
            moved = np.einsum("nij,pj->npi", mats, rel_a) + piv
            dp = (c_b[None, :, :] - moved).mean(axis=1)
            resid = moved + dp[:, None, :] - c_b[None, :, :]
            f = np.sum(resid**2, axis=(1, 2))
            i = int(np.argmin(f))
            if f[i] < best_f:
                best_f = float(f[i])
                best = (dp[i], chunk[i])
        oracle_dp, oracle_rot = best

        rot_err = np.linalg.norm(
            (Rotation.from_rotvec(off.delta_theta).inv() * Rotation.from_rotvec(oracle_rot)).as_rotvec()
        )
        assert rot_err <= np.deg2rad(0.1), f"rotation differs from grid oracle by {np.rad2deg(rot_err):.3f} deg"
        assert np.linalg.norm(off.delta_p - oracle_dp) <= 1e-3, "translation differs from grid oracle by > 1 mm"
        assert centroid_objective(pairs, piv[None, :], off) <= 1e-6
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 2: root-offset closed form and grid-search oracle", ok)


def test_criterion_3_shape_fit_oracle(template, robot):
    """fit_shape matches closed-form ridge; gradient matches finite differences."""
    ok = True
    try:
        keys = rest_robot_keypoints(template, robot)
        a, b = keypoint_system(template, robot, keys)
        for lam in (0.0, 1e-3, 0.0016, 0.1):
            got = fit_shape(template, robot, keys, ShapeFitConfig(lam=lam)).beta_prime
            want = ridge_solution(a, b, lam)
            assert np.max(np.abs(got - want)) <= 1e-6, f"lambda={lam}: |fit - ridge| > 1e-6"

        rng = np.random.default_rng(11)
        w = np.ones(a.shape[0])
        h = 1e-5
        for _ in range(5):
            beta = rng.normal(0, 0.5, a.shape[2])
            grad = shape_loss_gradient(a, b, beta, 0.0016, w)
            for i in range(beta.size):
                bp, bm = beta.copy(), beta.copy()
                bp[i] += h
                bm[i] -= h
                kp, rp, _ = shape_loss_terms(a, b, bp, 0.0016, w)
                km, rm, _ = shape_loss_terms(a, b, bm, 0.0016, w)
                fd = ((kp + rp) - (km + rm)) / (2 * h)
                denom = max(abs(fd), 1e-8)
                assert abs(grad[i] - fd) / denom <= 1e-4
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 3: shape-fit ridge oracle and gradient check", ok)


def test_criterion_4_reward_identities():
    """Closed-form reward identities at pinned tolerances."""
    ok = True
    try:
        rng = np.random.default_rng(3)
        kp1 = rng.normal(0, 1, (4, 3))
        kp2 = rng.normal(0, 1, (4, 3))
        frame = RolloutFrame(
            keypoints=np.stack([kp1, kp2]),
            ref_keypoints=np.stack([kp1, kp2]),
            contact_forces=np.zeros((2, 3)),
            ref_contact_mask=np.zeros((2, 3), dtype=int),
        )
        assert interaction_reward(frame, RewardConfig()) == 1.0

        e = interaction_discrepancy(np.array([2.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
        assert abs(e - 0.75) <= 1e-12

        offs = rng.normal(0, 1, (5, 5, 3))
        assert abs(interaction_weights(offs, 0.2).sum() - 1.0) <= 1e-12

        # kappa = 1 keeps f_min - ln(3)/kappa at a physical (positive) force
        cfg = RewardConfig(f_min=5.0, f_max=200.0, kappa=1.0, tau=10.0, r_max=1.0)
        assert expected_contact_reward(0.5 * (cfg.f_min + cfg.f_max), 1, cfg) == cfg.r_max
        quarter = expected_contact_reward(cfg.f_min - np.log(3.0) / cfg.kappa, 1, cfg)
        assert abs(quarter - cfg.r_max / 4.0) <= 1e-12
        assert unexpected_contact_penalty(cfg.tau, 0, cfg) == 0.5
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 4: reward identities", ok)


def test_criterion_5_curriculum_dynamics():
    """Product invariance over 1000 updates; alpha = 1/sqrt(s); s<1 no-op."""
    ok = True
    try:
        rng = np.random.default_rng(9)
        state = CurriculumState()
        product0 = state.scales["goal"] * state.scales["interaction"]
        # proficiencies near 1 keep scales far away from the safety clamps
        for _ in range(1000):
            s = float(rng.uniform(0.995, 1.005))
            state = update_scales(state, s)
        drift = abs(state.scales["goal"] * state.scales["interaction"] - product0) / product0
        assert drift <= 1e-12, f"tracking*interaction product drifted by {drift:.2e}"

        assert gain(4.0) == 0.5
        fresh = CurriculumState()
        halved = update_scales(fresh, 4.0)
        assert halved.scales["goal"] == pytest.approx(0.5, abs=1e-15)
        assert halved.scales["vel"] == pytest.approx(0.5, abs=1e-15)

        noop = update_scales(fresh, 0.999999)
        assert noop.scales == fresh.scales
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 5: curriculum dynamics", ok)


@pytest.mark.parametrize("scenario", ["handshake", "linked_arms", "shoulder_to_shoulder"])
def test_criterion_6_pipeline_efficacy(template, robot, scenario):
    """Root offset strictly reduces the centroid gap; F1 does not degrade."""
    ok = True
    try:
        a, b = generate_fixture(FixtureSpec(scenario=scenario, frames=15))
        contacts = detect_sequence(template, a, b, 0.0)
        assert contacts.total_pairs() > 0, f"{scenario}: fixture produced no contacts"
        beta = np.zeros(template.num_shapes)
        pairs = contact_centroids(template, beta, a, b, contacts)
        piv = template.rest_joints(beta)[0] + a.root_translation
        off = optimize_root_offset(pairs, piv, mode="full")
        moved = apply_root_offset(a, off, composition="rotational")
        gap_pre = mean_centroid_gap(pairs)
        gap_post = mean_centroid_gap(contact_centroids(template, beta, moved, b, contacts))
        assert gap_pre - gap_post > 0, f"{scenario}: no gap reduction ({gap_pre:.4f} -> {gap_post:.4f})"

        ref_mask = project_contact_mask(contacts, template, robot)
        pre = detect_sequence(template, a, b, 0.0)
        post = detect_sequence(template, moved, b, 0.0)
        f1_pre = contact_f1(project_contact_mask(pre, template, robot).ravel(), ref_mask.ravel())
        f1_post = contact_f1(project_contact_mask(post, template, robot).ravel(), ref_mask.ravel())
        assert f1_post >= f1_pre, f"{scenario}: F1 degraded {f1_pre:.3f} -> {f1_post:.3f}"
    except AssertionError:
        ok = False
        raise
    finally:
        _report(f"criterion 6: pipeline efficacy ({scenario})", ok)


def test_criterion_7_metric_sanity():
    """Identity inputs score perfectly; difference operators annihilate trends."""
    ok = True
    try:
        rng = np.random.default_rng(5)
        p = rng.normal(0, 1, (6, 4, 3))
        quat = np.tile([0.0, 0.0, 0.0, 1.0], (6, 4, 1))
        mask = rng.integers(0, 2, (6, 4))
        assert mpjpe(p, p) == 0.0
        assert mpjpe(p, p, root_relative=True) == 0.0
        assert acc_error(p, p) == 0.0
        assert vel_error(p[:, 0], p[:, 0]) == 0.0
        assert success(p, p, quat, quat) == 1
        assert contact_f1(mask, mask) == 1.0

        shift = np.array([1.3, -0.7, 2.1])
        assert mpjpe(p + shift, p, root_relative=True) <= 1e-9

        const = p + np.array([3.0, 0.0, 0.0])
        ramp = p + np.arange(6)[:, None, None] * np.array([0.001, 0.0, 0.0])
        assert acc_error(const, p) == pytest.approx(0.0, abs=1e-9)
        assert acc_error(ramp, p) == pytest.approx(0.0, abs=1e-9)
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 7: metric sanity", ok)


def test_criterion_8_run_determinism(tmp_path):
    """Two runs with the same seed are byte-identical (wall times excluded)."""
    ok = True
    try:
        dirs = []
        for d in ("run1", "run2"):
            out = tmp_path / d
            run_pipeline(PipelineConfig(out_dir=str(out), scenario="handshake", frames=12, seed=42))
            dirs.append(out)
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            if name == "timings.csv":  # wall-clock data, inherently nondeterministic
                continue
            same = filecmp.cmp(dirs[0] / name, dirs[1] / name, shallow=False)
            assert same, f"{name} differs between identical-seed runs"
    except AssertionError:
        ok = False
        raise
    finally:
        _report("criterion 8: run determinism", ok)
