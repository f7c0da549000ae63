"""Contact-aware root offset: centroids, optimization, application."""
import numpy as np
import pytest

from duomotion.body import pose_sequence
from duomotion.contacts import detect_sequence
from duomotion.errors import InputError, NoContactError
from duomotion.fixtures import FixtureSpec, generate_fixture
from duomotion.rootopt import (
    CentroidPair,
    RootOffset,
    apply_root_offset,
    centroid_objective,
    contact_centroids,
    mean_centroid_gap,
    optimize_root_offset,
)
from duomotion.rotations import aa_to_matrix, aa_to_quat, quat_multiply, quat_to_aa


def _pairs_from_points(c_a, c_b, frame=0):
    return [CentroidPair(frame=frame, c_a=np.asarray(a, float), c_b=np.asarray(b, float)) for a, b in zip(c_a, c_b)]


ZERO_PIV = np.zeros((1, 3))


class TestCentroids:
    def test_centroid_is_vertex_mean(self, template):
        a, b = generate_fixture(FixtureSpec(scenario="handshake", frames=15))
        contacts = detect_sequence(template, a, b, 0.0)
        beta = np.zeros(template.num_shapes)
        pairs = contact_centroids(template, beta, a, b, contacts)
        assert pairs
        meshes_a = pose_sequence(template, a)
        meshes_b = pose_sequence(template, b)
        k = 0
        for t, frame_pairs in enumerate(contacts.per_frame):
            for cp in frame_pairs:
                tri_a = meshes_a[t].vertices[template.faces[cp.face_a]]
                tri_b = meshes_b[t].vertices[template.faces[cp.face_b]]
                np.testing.assert_allclose(pairs[k].c_a, tri_a.mean(axis=0), atol=1e-12)
                np.testing.assert_allclose(pairs[k].c_b, tri_b.mean(axis=0), atol=1e-12)
                # containment: each centroid inside its own face's AABB
                assert np.all(pairs[k].c_a >= tri_a.min(axis=0) - 1e-12)
                assert np.all(pairs[k].c_a <= tri_a.max(axis=0) + 1e-12)
                k += 1

    def test_empty_contact_set_gives_empty_list(self, template):
        a, b = generate_fixture(FixtureSpec(scenario="separated", frames=4))
        contacts = detect_sequence(template, a, b, 0.0)
        assert contact_centroids(template, np.zeros(template.num_shapes), a, b, contacts) == []


class TestOptimize:
    def test_single_pair_translation(self):
        pairs = _pairs_from_points([(0, 0, 0)], [(1, 0, 0)])
        off = optimize_root_offset(pairs, ZERO_PIV, mode="translation_only")
        np.testing.assert_allclose(off.delta_p, [1.0, 0.0, 0.0], atol=1e-12)
        assert centroid_objective(pairs, ZERO_PIV, off) == pytest.approx(0.0, abs=1e-20)

    def test_common_offset_translation(self):
        pairs = _pairs_from_points([(0, 0, 0), (0, 1, 0)], [(1, 0, 0), (1, 1, 0)])
        off = optimize_root_offset(pairs, ZERO_PIV, mode="translation_only")
        np.testing.assert_allclose(off.delta_p, [1.0, 0.0, 0.0], atol=1e-12)

    def test_translation_matches_variance_minimum(self, rng):
        for _ in range(20):
            c_a = rng.normal(0, 1, (8, 3))
            c_b = rng.normal(0, 1, (8, 3))
            pairs = _pairs_from_points(c_a, c_b)
            off = optimize_root_offset(pairs, ZERO_PIV, mode="translation_only")
            gaps = c_b - c_a
            mean = gaps.mean(axis=0)
            np.testing.assert_allclose(off.delta_p, mean, atol=1e-12)
            assert centroid_objective(pairs, ZERO_PIV, off) == pytest.approx(
                float(np.sum((gaps - mean) ** 2)), abs=1e-10
            )

    def test_full_recovers_planted_rotation(self, rng):
        angle = np.deg2rad(10.0)
        rot = aa_to_matrix(np.array([0.0, 0.0, angle]))
        piv = np.array([0.1, -0.2, 0.9])
        dp = np.array([0.05, 0.02, -0.01])
        c_a = rng.normal(0, 0.6, (18, 3)) + piv
        c_b = (c_a - piv) @ rot.T + piv + dp
        pairs = _pairs_from_points(c_a, c_b)
        off = optimize_root_offset(pairs, piv[None, :], mode="full")
        assert np.linalg.norm(off.delta_theta - [0, 0, angle]) <= np.deg2rad(0.1)
        assert centroid_objective(pairs, piv[None, :], off) <= 1e-6

    def test_full_never_worse_than_zero_offset(self, rng):
        c_a = rng.normal(0, 1, (10, 3))
        c_b = rng.normal(0, 1, (10, 3))
        pairs = _pairs_from_points(c_a, c_b)
        zero = RootOffset(delta_p=np.zeros(3), delta_theta=np.zeros(3))
        off = optimize_root_offset(pairs, ZERO_PIV, mode="full")
        assert centroid_objective(pairs, ZERO_PIV, off) <= centroid_objective(pairs, ZERO_PIV, zero) + 1e-12

    def test_no_pairs_raises(self):
        with pytest.raises(NoContactError):
            optimize_root_offset([], ZERO_PIV)

    def test_unknown_mode_rejected(self):
        pairs = _pairs_from_points([(0, 0, 0)], [(1, 0, 0)])
        with pytest.raises(InputError):
            optimize_root_offset(pairs, ZERO_PIV, mode="rigid")

    def test_offset_rotation_bounded(self):
        with pytest.raises(InputError):
            RootOffset(delta_p=np.zeros(3), delta_theta=np.array([np.pi, 0.0, 0.0]))


class TestApply:
    def _motion(self):
        a, _ = generate_fixture(FixtureSpec(scenario="handshake", frames=6))
        return a

    def test_zero_offset_is_identity(self):
        m = self._motion()
        zero = RootOffset(delta_p=np.zeros(3), delta_theta=np.zeros(3))
        for comp in ("additive", "rotational"):
            out = apply_root_offset(m, zero, composition=comp)
            np.testing.assert_array_equal(out.root_translation, m.root_translation)
            np.testing.assert_array_equal(out.root_rotation, m.root_rotation)

    def test_additive_translation_shift(self):
        m = self._motion()
        off = RootOffset(delta_p=np.array([1.0, 2.0, 3.0]), delta_theta=np.zeros(3))
        out = apply_root_offset(m, off, composition="additive")
        np.testing.assert_array_equal(out.root_translation, m.root_translation + (1.0, 2.0, 3.0))

    def test_additive_is_invertible(self):
        m = self._motion()
        off = RootOffset(delta_p=np.array([0.3, -0.1, 0.2]), delta_theta=np.array([0.1, 0.2, -0.3]))
        inv = RootOffset(delta_p=-off.delta_p, delta_theta=-off.delta_theta)
        back = apply_root_offset(apply_root_offset(m, off, "additive"), inv, "additive")
        np.testing.assert_array_equal(back.root_translation, m.root_translation)
        np.testing.assert_array_equal(back.root_rotation, m.root_rotation)

    def test_rotational_composition_quaternion_oracle(self):
        m = self._motion()
        dth = np.array([0.0, 0.0, np.pi / 2])
        off = RootOffset(delta_p=np.zeros(3), delta_theta=dth)
        out = apply_root_offset(m, off, composition="rotational")
        for t in range(m.num_frames):
            want = quat_multiply(aa_to_quat(dth), aa_to_quat(m.root_rotation[t]))
            got = aa_to_quat(out.root_rotation[t])
            assert min(np.linalg.norm(got - want), np.linalg.norm(got + want)) <= 1e-9

    def test_rotational_zero_base_rotation(self):
        m = self._motion()
        zeroed = type(m)(
            beta=m.beta, theta=m.theta, root_translation=m.root_translation,
            root_rotation=np.zeros_like(m.root_rotation), dt=m.dt,
        )
        dth = np.array([0.0, 0.0, np.pi / 2])
        out = apply_root_offset(zeroed, RootOffset(delta_p=np.zeros(3), delta_theta=dth), "rotational")
        np.testing.assert_allclose(out.root_rotation, np.tile(dth, (m.num_frames, 1)), atol=1e-12)


class TestEndToEndReduction:
    @pytest.mark.parametrize("scenario", ["handshake", "linked_arms", "shoulder_to_shoulder"])
    def test_offset_reduces_mean_gap_after_redetection(self, template, scenario):
        a, b = generate_fixture(FixtureSpec(scenario=scenario, frames=15))
        contacts = detect_sequence(template, a, b, 0.0)
        beta = np.zeros(template.num_shapes)
        pairs = contact_centroids(template, beta, a, b, contacts)
        assert pairs
        piv = template.rest_joints(beta)[0] + a.root_translation
        off = optimize_root_offset(pairs, piv, mode="full")
        moved = apply_root_offset(a, off, composition="rotational")
        pairs_post = contact_centroids(template, beta, moved, b, contacts)
        assert mean_centroid_gap(pairs_post) < mean_centroid_gap(pairs)
