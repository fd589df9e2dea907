"""Quaternion math and projection of global 3D boxes to 2D image boxes.

Conventions: quaternions are (w, x, y, z) with Hamilton product and active
rotation, matching the nuScenes ecosystem.  The projection chain takes a box
from the global frame into the ego frame (translate by -E_t, rotate by
E_r^-1), then into the camera frame (translate by -C_t, rotate by C_r^-1),
then through the pinhole intrinsics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels

# Points at or behind the image plane: z <= Z_EPS meters never projects.
Z_EPS = 1e-6


@dataclass(frozen=True)
class Quaternion:
    """Unit rotation quaternion, scalar-first."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalize(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "Quaternion":
        # unit quaternion: inverse == conjugate
        return self.conjugate()

    def multiply(self, other: "Quaternion") -> "Quaternion":
        """Hamilton product self * other."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotate(self, v: Sequence[float]) -> np.ndarray:
        """Actively rotate a 3-vector by this quaternion.

        Uses the expansion q v q* = v + 2w (u x v) + 2 u x (u x v) with
        u the vector part, which avoids building the full product.
        """
        vec = np.asarray(v, dtype=np.float64)
        u = np.array([self.x, self.y, self.z])
        t = 2.0 * np.cross(u, vec)
        return vec + self.w * t + np.cross(u, t)

    def rotation_matrix(self) -> np.ndarray:
        """Equivalent active 3x3 rotation matrix."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Sequence[float], angle_rad: float) -> "Quaternion":
        ax = np.asarray(axis, dtype=np.float64)
        ax = ax / np.linalg.norm(ax)
        half = angle_rad / 2.0
        s = math.sin(half)
        return Quaternion(math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: translation in meters plus unit rotation."""

    translation: np.ndarray
    rotation: Quaternion

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))
        if abs(self.rotation.norm() - 1.0) > 1e-9:
            object.__setattr__(self, "rotation", self.rotation.normalize())

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.translation, other.translation) and self.rotation == other.rotation

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), Quaternion.identity())


@dataclass(frozen=True)
class CameraCalib:
    """Sensor pose in the ego frame plus pinhole intrinsics in pixels."""

    extrinsic: Pose
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")


@dataclass(frozen=True)
class ProjectedBox2D:
    """Axis-aligned image-plane box from projected 3D corners.

    fully_in_front is False when any source corner sat at or behind the
    image plane, so the min/max covers only the visible corners.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    fully_in_front: bool

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("degenerate box: min exceeds max")

    @property
    def centroid(self) -> np.ndarray:
        return np.array([(self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0])

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min


# Corner order: offsets (±w/2, ±l/2, ±h/2) with the x component varying
# fastest, i.e. index bit 0 -> x sign, bit 1 -> y sign, bit 2 -> z sign.
_CORNER_SIGNS = np.array(
    [
        [-1, -1, -1],
        [+1, -1, -1],
        [-1, +1, -1],
        [+1, +1, -1],
        [-1, -1, +1],
        [+1, -1, +1],
        [-1, +1, +1],
        [+1, +1, +1],
    ],
    dtype=np.float64,
)


def rotate(q: Quaternion, v: Sequence[float]) -> np.ndarray:
    """Module-level alias for Quaternion.rotate."""
    return q.rotate(v)


def box_corners(ann) -> np.ndarray:
    """Eight global-frame corners of an oriented 3D box annotation.

    Accepts any object exposing center_global (3-vector), size (w, l, h)
    and orientation_global (Quaternion).  Returns an (8, 3) array in the
    fixed corner order documented at _CORNER_SIGNS.
    """
    center = np.asarray(ann.center_global, dtype=np.float64)
    w, l, h = (float(s) for s in ann.size)
    local = _CORNER_SIGNS * np.array([w / 2.0, l / 2.0, h / 2.0])
    rot = ann.orientation_global.rotation_matrix()
    return local @ rot.T + center


def camera_affine(ego: Pose, cam: CameraCalib) -> tuple[np.ndarray, np.ndarray]:
    """Fold global->ego->camera into one rotation matrix and offset.

    Returns (rot, trans) such that p_cam = rot @ p_global + trans.
    """
    r_e = ego.rotation.rotation_matrix()
    r_c = cam.extrinsic.rotation.rotation_matrix()
    rot = r_c.T @ r_e.T
    trans = -rot @ ego.translation - r_c.T @ cam.extrinsic.translation
    return rot, trans


def _box_from_uvz(
    uvz: np.ndarray,
    z_eps: float,
    clip_to: Optional[tuple[float, float]],
) -> Optional[ProjectedBox2D]:
    z = uvz[:, 2]
    front = z > z_eps
    if not front.any():
        return None
    u = uvz[front, 0]
    v = uvz[front, 1]
    x_min, x_max = float(u.min()), float(u.max())
    y_min, y_max = float(v.min()), float(v.max())
    if clip_to is not None:
        wlim, hlim = float(clip_to[0]), float(clip_to[1])
        x_min = min(max(x_min, 0.0), wlim)
        x_max = min(max(x_max, 0.0), wlim)
        y_min = min(max(y_min, 0.0), hlim)
        y_max = min(max(y_max, 0.0), hlim)
    return ProjectedBox2D(x_min, y_min, x_max, y_max, bool(front.all()))


def project_box(
    ann,
    ego: Pose,
    cam: CameraCalib,
    z_eps: float = Z_EPS,
    clip_to: Optional[tuple[float, float]] = None,
) -> Optional[ProjectedBox2D]:
    """Project one global 3D box annotation into the image plane.

    Args:
        ann: annotation with center_global, size, orientation_global.
        ego: ego vehicle pose in the global frame.
        cam: camera calibration (extrinsic pose in ego frame, intrinsics).
        z_eps: corners with camera-frame z <= z_eps are dropped.
        clip_to: optional (width, height); clamps the box into the image.

    Returns:
        ProjectedBox2D, or None when every corner is at or behind the
        image plane (the box is not visible at all).
    """
    corners = box_corners(ann)
    rot, trans = camera_affine(ego, cam)
    uvz = kernels.project_points(corners, rot, trans, cam.fx, cam.fy, cam.cx, cam.cy, z_eps)
    return _box_from_uvz(uvz, z_eps, clip_to)


def project_frame(
    frame,
    z_eps: float = Z_EPS,
    clip_to: Optional[tuple[float, float]] = None,
) -> dict:
    """Project every annotation of one frame in a single batched kernel call.

    Returns {instance_id: ProjectedBox2D | None} preserving the behavior of
    per-annotation project_box exactly.
    """
    anns = frame.annotations
    result: dict = {}
    if not anns:
        return result
    rot, trans = camera_affine(frame.ego_pose, frame.camera)
    stacked = np.concatenate([box_corners(a) for a in anns], axis=0)
    cam = frame.camera
    uvz = kernels.project_points(stacked, rot, trans, cam.fx, cam.fy, cam.cx, cam.cy, z_eps)
    for i, ann in enumerate(anns):
        result[ann.instance_id] = _box_from_uvz(uvz[8 * i : 8 * i + 8], z_eps, clip_to)
    return result
