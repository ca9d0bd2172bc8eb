from .skeleton import (
    Skeleton, EXPI_SKELETON, EXPI_JOINTS, ANCHOR_JOINTS, make_skeleton, reflect_pose, skeleton_for,
)
from .transforms import (
    RigidTransform, normalization_transform, apply_transform, normalize_pose,
    normalize_sequence, normalize_couple, procrustes_transform, procrustes_align,
)
from .camera import Camera, Ray, project, backproject, triangulate_two_rays, load_cameras, format_cameras
