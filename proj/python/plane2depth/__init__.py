"""Plane-query monocular depth estimation toolkit.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

from ._plane2depth import (  # noqa: F401
    CameraIntrinsics,
    GenerationParams,
    IoError,
    PlaneNet,
    UsageError,
    backproject,
    depth_from_plane_fields,
    derive_gt_normal_distance,
    distance_loss,
    evaluate,
    generate_dataset,
    normal_loss,
    pixel_ray,
    plane_to_depth,
    render_scene,
    si_loss,
)

__all__ = [
    "CameraIntrinsics",
    "GenerationParams",
    "IoError",
    "PlaneNet",
    "UsageError",
    "backproject",
    "depth_from_plane_fields",
    "derive_gt_normal_distance",
    "distance_loss",
    "evaluate",
    "generate_dataset",
    "normal_loss",
    "pixel_ray",
    "plane_to_depth",
    "render_scene",
    "si_loss",
]
