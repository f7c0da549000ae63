"""Evaluation metrics: MPJPE family, success, contact F1."""
import numpy as np
import pytest

from duomotion.errors import InputError, UndefinedMetricError
from duomotion.metrics import (
    SuccessConfig,
    acc_error,
    contact_f1,
    evaluate,
    mpjpe,
    success,
    vel_error,
)
from duomotion.rotations import aa_to_matrix, aa_to_quat


def _traj(rng, t=6, links=4):
    return rng.normal(0, 1, (t, links, 3))


class TestMpjpe:
    def test_identical(self, rng):
        p = _traj(rng)
        assert mpjpe(p, p) == 0.0
        assert mpjpe(p, p, root_relative=True) == 0.0

    def test_root_relative_kills_global_shift(self, rng):
        p = _traj(rng)
        assert mpjpe(p + (0.1, 0.0, 0.0), p, root_relative=True) <= 1e-9

    def test_global_mode_sees_constant_offset(self, rng):
        p = _traj(rng)
        assert mpjpe(p + (0.1, 0.0, 0.0), p) == pytest.approx(100.0, abs=1e-9)

    def test_consistency_with_origin_anchor(self, rng):
        # pinning the anchor to the origin makes both modes agree
        p = _traj(rng)
        r = _traj(rng)
        p[:, 0] = 0.0
        r[:, 0] = 0.0
        assert mpjpe(p, r) == pytest.approx(mpjpe(p, r, root_relative=True), abs=1e-12)

    def test_rigid_invariance(self, rng):
        p = _traj(rng)
        r = _traj(rng)
        rot = aa_to_matrix(np.array([0.3, 0.1, -0.4]))
        shift = np.array([1.0, -2.0, 0.5])
        assert mpjpe(p @ rot.T + shift, r @ rot.T + shift) == pytest.approx(mpjpe(p, r), abs=1e-9)

    def test_shape_mismatch(self, rng):
        with pytest.raises(InputError):
            mpjpe(_traj(rng), _traj(rng, t=5))


class TestAccError:
    def test_identical(self, rng):
        p = _traj(rng)
        assert acc_error(p, p) == 0.0

    def test_constant_shift_annihilated(self, rng):
        p = _traj(rng)
        assert acc_error(p + (3.0, 0.0, 0.0), p) == pytest.approx(0.0, abs=1e-9)

    def test_linear_ramp_annihilated(self, rng):
        p = _traj(rng, t=8)
        ramp = np.arange(8)[:, None, None] * np.array([0.001, 0.0, 0.0])
        assert acc_error(p + ramp, p) == pytest.approx(0.0, abs=1e-9)

    def test_short_sequence_undefined(self, rng):
        with pytest.raises(UndefinedMetricError):
            acc_error(_traj(rng, t=2), _traj(rng, t=2))


class TestVelError:
    def test_identical(self, rng):
        root = rng.normal(0, 1, (6, 3))
        assert vel_error(root, root) == 0.0

    def test_constant_offset(self, rng):
        root = rng.normal(0, 1, (6, 3))
        assert vel_error(root + (0.5, 0.0, 0.0), root) == pytest.approx(0.0, abs=1e-9)

    def test_one_mm_per_frame(self):
        t = np.arange(5)
        ref = np.zeros((5, 3))
        pred = np.zeros((5, 3))
        pred[:, 0] = 0.001 * t
        assert vel_error(pred, ref) == pytest.approx(1.0, abs=1e-9)

    def test_short_sequence_undefined(self):
        with pytest.raises(UndefinedMetricError):
            vel_error(np.zeros((1, 3)), np.zeros((1, 3)))


class TestSuccess:
    def _quats(self, t=4, links=2, spin=0.0):
        out = np.zeros((t, links, 4))
        for i in range(t):
            out[i, :] = aa_to_quat(np.array([0.0, 0.0, spin * i]))
        return out

    def test_identical(self, rng):
        p = _traj(rng, links=2)
        q = self._quats(t=6)
        assert success(p, p, q, q) == 1

    def test_height_violation(self, rng):
        cfg = SuccessConfig()
        p = _traj(rng, links=2)
        bad = p.copy()
        bad[2, 0, 2] += 2.0 * cfg.height_threshold
        assert success(bad, p, self._quats(t=6), self._quats(t=6), cfg) == 0

    def test_threshold_is_inclusive(self, rng):
        cfg = SuccessConfig()
        p = _traj(rng, links=2)
        p[:, 0, 2] = 0.0  # exact anchor height so the deviation is exactly the threshold
        edge = p.copy()
        edge[:, 0, 2] = cfg.height_threshold
        assert success(edge, p, self._quats(t=6), self._quats(t=6), cfg) == 1

    def test_orientation_violation(self, rng):
        cfg = SuccessConfig()
        p = _traj(rng, links=2)
        tilted = self._quats(t=6, spin=0.3)  # frame 5 reaches 1.5 rad > 0.8
        assert success(p, p, tilted, self._quats(t=6), cfg) == 0


class TestContactF1:
    def test_identical_with_positives(self):
        m = np.array([[1, 0], [0, 1]])
        assert contact_f1(m, m) == 1.0

    def test_all_zero_pred_misses(self):
        assert contact_f1(np.zeros((2, 2), dtype=int), np.array([[1, 0], [0, 0]])) == 0.0

    def test_both_all_zero_is_perfect(self):
        z = np.zeros((3, 2), dtype=int)
        assert contact_f1(z, z) == 1.0

    def test_counting_formula(self):
        pred = np.array([1, 1, 1, 0, 0])
        ref = np.array([1, 1, 0, 1, 0])
        assert contact_f1(pred, ref) == pytest.approx(2 * 2 / (2 * 2 + 1 + 1), abs=1e-12)

    def test_symmetric_when_fp_equals_fn(self):
        pred = np.array([1, 0, 1, 0])
        ref = np.array([1, 1, 0, 0])
        assert contact_f1(pred, ref) == contact_f1(ref, pred)

    def test_non_binary_rejected(self):
        with pytest.raises(InputError):
            contact_f1(np.array([0.5]), np.array([1.0]))


class TestEvaluate:
    def test_identical_report(self, rng):
        p = _traj(rng, t=6, links=3)
        q = np.tile(aa_to_quat(np.zeros(3)), (6, 3, 1))
        mask = np.zeros((6, 3), dtype=int)
        rep = evaluate(p, p, q, q, mask, mask)
        assert rep.success == 1.0
        assert rep.e_gmpjpe == 0.0
        assert rep.e_mpjpe == 0.0
        assert rep.e_acc == 0.0
        assert rep.e_vel == 0.0
        assert rep.contact_f1 == 1.0
