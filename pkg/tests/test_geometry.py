import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from xia_motion.geometry import (
    EXPI_SKELETON, Camera, RigidTransform, Ray, apply_transform, backproject, format_cameras, load_cameras,
    normalization_transform, normalize_couple, normalize_pose, procrustes_align, procrustes_transform,
    project, reflect_pose, skeleton_for, triangulate_two_rays,
)
from xia_motion.utils.common import ContractError, DegeneracyError, NoUniqueSolutionError, ParseError

LHIP, RHIP, NECK = (EXPI_SKELETON.index(name) for name in ("lhip", "rhip", "neck"))


def canonical_pose(rng):
    """Random pose already in the normalized frame."""
    pose = rng.normal(scale=300.0, size=(18, 3))
    pose[LHIP] = [120.0, 0.0, 0.0]
    pose[RHIP] = [-120.0, 0.0, 0.0]
    pose[NECK] = [30.0, 0.0, 520.0]
    return pose


def random_rigid(seed):
    rotation = Rotation.random(None, seed).as_matrix()
    translation = np.random.default_rng(seed).uniform(-2000.0, 2000.0, size=3)
    return RigidTransform(rotation, translation)


def test_canonical_pose_gives_identity(rng):
    transform = normalization_transform(canonical_pose(rng))
    np.testing.assert_allclose(transform.rotation, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(transform.translation, np.zeros(3), atol=1e-12)


def test_translated_canonical_pose_gives_pure_translation(rng):
    pose = canonical_pose(rng) + [100.0, 0.0, 0.0]
    transform = normalization_transform(pose)
    np.testing.assert_allclose(transform.rotation, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(transform.translation, [-100.0, 0.0, 0.0], atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_normalization_undoes_rigid_motion(seed, rng):
    pose = canonical_pose(rng)
    moved = random_rigid(seed).apply(pose)
    np.testing.assert_allclose(normalize_pose(moved), pose, atol=1e-9)


def test_normalized_frame_properties(rng):
    pose = random_rigid(11).apply(rng.normal(scale=300.0, size=(18, 3)))
    out = normalize_pose(pose)
    center = 0.5 * (out[LHIP] + out[RHIP])
    np.testing.assert_allclose(center, np.zeros(3), atol=1e-9)
    assert out[LHIP][0] > 0
    np.testing.assert_allclose(out[LHIP][1:], [0.0, 0.0], atol=1e-9)
    assert abs(out[NECK][1]) < 1e-9
    assert out[NECK][2] > 0


def test_normalization_is_idempotent(rng):
    once = normalize_pose(rng.normal(scale=300.0, size=(18, 3)))
    np.testing.assert_allclose(normalize_pose(once), once, atol=1e-9)


def test_degenerate_anchors(rng):
    pose = canonical_pose(rng)
    coincident = pose.copy()
    coincident[RHIP] = coincident[LHIP]
    with pytest.raises(DegeneracyError):
        normalization_transform(coincident)
    collinear = pose.copy()
    collinear[NECK] = [500.0, 0.0, 0.0]
    with pytest.raises(DegeneracyError):
        normalization_transform(collinear)


def test_apply_transform_examples(rng):
    pose = rng.normal(size=(18, 3))
    assert np.array_equal(apply_transform(RigidTransform.identity(), pose), pose)
    shift = RigidTransform(np.eye(3), [1.0, -2.0, 3.0])
    np.testing.assert_allclose(apply_transform(shift, pose), pose + [1.0, -2.0, 3.0], atol=1e-12)
    transform = random_rigid(3)
    np.testing.assert_allclose(apply_transform(transform.compose(transform.inverse()), pose), pose, atol=1e-9)


def test_rigid_transform_rejects_reflections():
    with pytest.raises(ContractError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(ContractError):
        RigidTransform(2 * np.eye(3), np.zeros(3))


def test_normalize_couple_uses_leader_frame(rng):
    leader = np.stack([random_rigid(s).apply(canonical_pose(rng)) for s in range(3)])
    follower = leader + [0.0, 1000.0, 0.0]
    out_leader, out_follower = normalize_couple(leader, follower)
    for t in range(3):
        transform = normalization_transform(leader[t])
        np.testing.assert_allclose(out_follower[t], transform.apply(follower[t]), atol=1e-9)
        np.testing.assert_allclose(out_leader[t], normalize_pose(leader[t]), atol=1e-9)


def test_procrustes_examples(rng):
    gt = rng.normal(scale=300.0, size=(18, 3))
    np.testing.assert_allclose(procrustes_align(gt, gt), gt, atol=1e-9)
    for seed in range(5):
        pred = random_rigid(seed).apply(gt)
        np.testing.assert_allclose(procrustes_align(pred, gt), gt, atol=1e-9)


def test_procrustes_beats_sampled_transforms(rng):
    gt = rng.normal(scale=300.0, size=(18, 3))
    pred = random_rigid(4).apply(gt + rng.normal(scale=40.0, size=gt.shape))
    best = procrustes_transform(pred, gt)
    best_ssd = np.sum((best.apply(pred) - gt) ** 2)

    # 10^4 candidates: small perturbations of the optimum plus uniform rotations
    count = 10_000
    perturb = Rotation.from_rotvec(rng.normal(scale=0.05, size=(count, 3))).as_matrix()
    uniform = Rotation.random(count, 7).as_matrix()
    rotations = np.concatenate([perturb[: count // 2] @ best.rotation, uniform[: count // 2]])
    translations = best.translation + rng.normal(scale=20.0, size=(count, 3))
    moved = np.einsum("nij,kj->nki", rotations, pred) + translations[:, None, :]
    ssd = np.sum((moved - gt) ** 2, axis=(1, 2))
    assert ssd.min() >= best_ssd - 1e-6


def test_procrustes_degenerate_ground_truth(rng):
    with pytest.raises(DegeneracyError):
        procrustes_align(rng.normal(size=(18, 3)), np.zeros((18, 3)))


def make_camera(seed, distance=4000.0):
    rotation = Rotation.random(None, seed).as_matrix()
    intrinsic = np.array([[1100.0, 0.0, 640.0], [0.0, 1080.0, 360.0], [0.0, 0.0, 1.0]])
    # camera looks at the world origin from `distance` mm away
    translation = np.array([0.0, 0.0, distance])
    return Camera(intrinsic, rotation, translation)


def test_principal_point_ray_is_optical_axis():
    camera = Camera(np.array([[900.0, 0, 320.0], [0, 900.0, 240.0], [0, 0, 1.0]]), np.eye(3), np.zeros(3))
    ray = backproject(camera, [320.0, 240.0])
    np.testing.assert_allclose(ray.origin, np.zeros(3), atol=1e-12)
    np.testing.assert_allclose(ray.direction, [0.0, 0.0, 1.0], atol=1e-12)


def test_project_backproject_round_trip(rng):
    camera = make_camera(1)
    for point in rng.uniform(-500.0, 500.0, size=(10, 3)):
        ray = backproject(camera, project(camera, point))
        assert ray.distance_to(point) < 1e-9


def test_triangulation_of_exact_scene(rng):
    cam_a, cam_b = make_camera(1), make_camera(2)
    for point in rng.uniform(-800.0, 800.0, size=(20, 3)):
        ray_a = backproject(cam_a, project(cam_a, point))
        ray_b = backproject(cam_b, project(cam_b, point))
        np.testing.assert_allclose(triangulate_two_rays(ray_a, ray_b), point, atol=1e-6)


def test_triangulation_of_skew_lines():
    x_axis = Ray([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    vertical = Ray([0.0, 1.0, 1.0], [0.0, 0.0, 1.0])
    point = triangulate_two_rays(x_axis, vertical)
    np.testing.assert_allclose(point, [0.0, 0.5, 0.0], atol=1e-12)
    assert x_axis.distance_to(point) == pytest.approx(vertical.distance_to(point), abs=1e-12)


def test_triangulation_of_intersecting_rays():
    a = Ray([0.0, 0.0, 0.0], np.array([1.0, 1.0, 0.0]) / np.sqrt(2))
    b = Ray([2.0, 0.0, 0.0], np.array([-1.0, 1.0, 0.0]) / np.sqrt(2))
    np.testing.assert_allclose(triangulate_two_rays(a, b), [1.0, 1.0, 0.0], atol=1e-12)


def test_parallel_rays_have_no_unique_point():
    with pytest.raises(NoUniqueSolutionError):
        triangulate_two_rays(Ray([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]), Ray([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]))


def test_camera_file_round_trip(tmp_path):
    cameras = [make_camera(1), make_camera(2)]
    path = tmp_path / "cameras.txt"
    path.write_text(format_cameras(cameras))
    loaded = load_cameras(path)
    assert len(loaded) == 2
    for original, parsed in zip(cameras, loaded):
        assert np.array_equal(original.intrinsic, parsed.intrinsic)
        assert np.array_equal(original.rotation, parsed.rotation)
        assert np.array_equal(original.translation, parsed.translation)


def test_camera_file_with_wrong_value_count(tmp_path):
    path = tmp_path / "cameras.txt"
    path.write_text("1 2 3\n")
    with pytest.raises(ParseError):
        load_cameras(path)


def test_reflect_pose(rng):
    pose = rng.normal(scale=300.0, size=(18, 3))
    np.testing.assert_array_equal(reflect_pose(reflect_pose(pose)), pose)
    np.testing.assert_allclose(EXPI_SKELETON.bone_lengths(reflect_pose(pose)), EXPI_SKELETON.bone_lengths(pose),
                               atol=1e-9)
    mirrored = reflect_pose(pose)
    assert mirrored[LHIP][0] == -pose[RHIP][0]


def test_generic_skeleton_keeps_anchors():
    skeleton = skeleton_for(4)
    assert skeleton.num_joints == 4
    assert [skeleton.index(name) for name in ("lhip", "rhip", "neck")] == [0, 1, 2]
    with pytest.raises(ContractError):
        skeleton_for(3)
