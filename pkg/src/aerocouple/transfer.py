"""Radial basis function field transfer between non-matching point clouds.

Interpolation uses the compactly supported Wendland C2 kernel with an
appended linear polynomial, so any affine field (in particular rigid-body
translations and linearized rotations) is reproduced exactly.  Force transfer
comes in two flavours: ``consistent`` (an independent RBF fit from the fluid
cloud) and ``conservative`` (transpose of the displacement map, preserving
force and moment sums).

Degenerate clouds are rejected exactly as the underlying method requires:
for a problem that is genuinely two-dimensional (a coordinate constant over
both clouds) the sources must not be collinear; in three dimensions they
must not be coplanar.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.spatial.distance import cdist

from .errors import DegenerateCloudError, SingularSystemError

log = logging.getLogger(__name__)

_EXTENT_TOL = 1e-12
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class InterfaceField:
    """Ordered point cloud with one 3-vector value per point.

    ``moments`` optionally carries point couples for force fields;
    ``rotations`` optionally carries nodal rotations for motion fields
    (rotations are never interpolated).  ``resultant`` marks a force field
    that is a point resultant to be assigned to coincident nodes rather
    than interpolated.
    """

    ids: np.ndarray
    points: np.ndarray
    values: np.ndarray
    kind: str
    moments: np.ndarray | None = None
    rotations: np.ndarray | None = None
    resultant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=int))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.points.shape != (len(self.ids), 3):
            raise ValueError("points must be (n, 3) matching ids")
        if self.values.shape != self.points.shape:
            raise ValueError("values must be (n, 3) matching points")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def __len__(self) -> int:
        return len(self.ids)

    def force_sum(self) -> np.ndarray:
        return self.values.sum(axis=0)


def wendland_c2(xi: np.ndarray) -> np.ndarray:
    """CP C2 kernel: (1 - xi)^4 (4 xi + 1) on [0, 1], zero outside."""
    xi = np.asarray(xi)
    inside = np.clip(1.0 - xi, 0.0, None)
    return inside**4 * (4.0 * xi + 1.0)


def default_support_radius(points: np.ndarray) -> float:
    """Twice the bounding-sphere diameter of the cloud (global support)."""
    points = np.asarray(points, dtype=float)
    center = 0.5 * (points.min(axis=0) + points.max(axis=0))
    radius = np.linalg.norm(points - center, axis=1).max()
    return 4.0 * radius if radius > 0 else 1.0


def _active_dimensions(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Coordinate axes along which the combined clouds actually extend."""
    combined = np.vstack([source, target])
    extent = combined.max(axis=0) - combined.min(axis=0)
    scale = max(extent.max(), 1.0)
    return np.flatnonzero(extent > _EXTENT_TOL * scale)


def _check_source_spread(source: np.ndarray, active: np.ndarray) -> None:
    """Sources must span the active subspace affinely."""
    ndim = len(active)
    if len(source) < ndim + 1:
        raise DegenerateCloudError(
            f"need at least {ndim + 1} source points for a {ndim}D problem, "
            f"got {len(source)}"
        )
    centered = source[:, active] - source[:, active].mean(axis=0)
    svals = la.svdvals(centered)
    if svals[0] == 0.0 or svals[ndim - 1] <= _RANK_TOL * svals[0]:
        shape = {1: "coincident", 2: "collinear", 3: "coplanar"}[ndim]
        raise DegenerateCloudError(
            f"source points are {shape}: the {ndim}D interpolation problem "
            "is degenerate"
        )


@dataclass(frozen=True)
class RbfMap:
    """Factored interpolation operator from source cloud to target cloud."""

    source_points: np.ndarray
    target_points: np.ndarray
    support_radius: float
    operator: np.ndarray       # (n_target, n_source) effective matrix
    condition: float           # condition estimate of the saddle system
    active_dims: tuple[int, ...]

    @property
    def n_source(self) -> int:
        return len(self.source_points)

    @property
    def n_target(self) -> int:
        return len(self.target_points)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Interpolate per-source values (n_source, k) onto the targets."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_source:
            raise ValueError(
                f"value rows {values.shape[0]} do not match source size {self.n_source}"
            )
        return self.operator @ values

    def apply_transpose(self, values: np.ndarray) -> np.ndarray:
        """Conservative pull-back of per-target values onto the sources."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_target:
            raise ValueError(
                f"value rows {values.shape[0]} do not match target size {self.n_target}"
            )
        return self.operator.T @ values


def build_map(source_points, target_points, support_radius=None) -> RbfMap:
    """Assemble and factor the RBF system mapping source values to targets.

    The saddle-point system [[Phi, P], [P^T, 0]] is solved once for unit
    source data, yielding a dense (n_target, n_source) operator; the linear
    polynomial block P spans only the dimensions the clouds actually occupy.
    """
    source = np.atleast_2d(np.asarray(source_points, dtype=float))
    target = np.atleast_2d(np.asarray(target_points, dtype=float))
    if source.shape[1] != 3 or target.shape[1] != 3:
        raise ValueError("point clouds must be (n, 3)")

    active = _active_dimensions(source, target)
    if len(active) == 0:
        raise DegenerateCloudError("point clouds have no spatial extent")
    _check_source_spread(source, active)

    if support_radius is None:
        support_radius = default_support_radius(source)
    if support_radius <= 0:
        raise ValueError("support radius must be positive")

    dist_ss = cdist(source, source)
    n = len(source)
    if n > 1:
        min_spacing = dist_ss[~np.eye(n, dtype=bool)].min()
        if support_radius < min_spacing:
            warnings.warn(
                "support radius smaller than the minimum source spacing: "
                "the interpolant is disconnected",
                stacklevel=2,
            )

    q = 1 + len(active)
    system = np.zeros((n + q, n + q))
    system[:n, :n] = wendland_c2(dist_ss / support_radius)
    poly_s = np.column_stack([np.ones(n), source[:, active]])
    system[:n, n:] = poly_s
    system[n:, :n] = poly_s.T

    condition = float(np.linalg.cond(system))
    log.info("RBF map %d -> %d points, condition estimate %.3e",
             n, len(target), condition)
    if not np.isfinite(condition) or condition > 1e14:
        raise SingularSystemError(
            f"RBF saddle system is numerically singular (cond ~ {condition:.3e})"
        )

    try:
        lu, piv = la.lu_factor(system)
    except la.LinAlgError as exc:
        raise SingularSystemError(f"RBF system factorization failed: {exc}") from exc
    rhs = np.zeros((n + q, n))
    rhs[:n, :n] = np.eye(n)
    coeffs = la.lu_solve((lu, piv), rhs)

    eval_block = np.empty((len(target), n + q))
    eval_block[:, :n] = wendland_c2(cdist(target, source) / support_radius)
    eval_block[:, n] = 1.0
    eval_block[:, n + 1:] = target[:, active]
    operator = eval_block @ coeffs

    return RbfMap(
        source_points=source,
        target_points=target,
        support_radius=float(support_radius),
        operator=operator,
        condition=condition,
        active_dims=tuple(int(d) for d in active),
    )


def apply_displacements(rbf_map: RbfMap, field: InterfaceField,
                        target_ids=None) -> InterfaceField:
    """Interpolate a structural motion field onto the fluid cloud.

    Displacements are understood relative to the undeformed positions the
    map was built from; rotations carried by the field are not transferred.
    """
    values = rbf_map.apply(field.values)
    ids = np.arange(1, rbf_map.n_target + 1) if target_ids is None else target_ids
    return InterfaceField(
        ids=ids,
        points=rbf_map.target_points,
        values=values,
        kind=field.kind,
    )


def apply_forces(rbf_map: RbfMap, field: InterfaceField, mode: str,
                 target_ids=None) -> InterfaceField:
    """Transfer a distributed fluid force field onto the structural nodes.

    ``conservative`` expects the structure-to-fluid displacement map and
    uses its transpose (component force sums and, given affine reproduction,
    moment sums are preserved).  ``consistent`` expects an independent
    fluid-to-structure map and interpolates the force values directly.
    """
    if mode == "conservative":
        values = rbf_map.apply_transpose(field.values)
        points = rbf_map.source_points
        n_out = rbf_map.n_source
    elif mode == "consistent":
        values = rbf_map.apply(field.values)
        points = rbf_map.target_points
        n_out = rbf_map.n_target
    else:
        raise ValueError(f"unknown transfer mode {mode!r}")
    ids = np.arange(1, n_out + 1) if target_ids is None else target_ids
    return InterfaceField(ids=ids, points=points, values=values, kind="force")


def grid_velocities(previous_points, current_points, dt,
                    first_step_with_initial_deformation=False) -> np.ndarray:
    """Finite-difference mesh velocities, (x_new - x_old) / dt.

    At the very first step of a run that starts from a deformed interface
    the difference is fictitious, so the field is forced to exactly zero.
    """
    previous_points = np.asarray(previous_points, dtype=float)
    current_points = np.asarray(current_points, dtype=float)
    if previous_points.shape != current_points.shape:
        raise ValueError("point sets must match")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if first_step_with_initial_deformation:
        return np.zeros_like(current_points)
    return (current_points - previous_points) / dt


def dump_field_csv(field: InterfaceField, path) -> None:
    """Debug dump: id,x,y,z,vx,vy,vz."""
    with open(path, "w") as handle:
        handle.write("id,x,y,z,vx,vy,vz\n")
        for nid, xyz, val in zip(field.ids, field.points, field.values):
            handle.write(
                f"{nid}," + ",".join("%.12e" % v for v in (*xyz, *val)) + "\n"
            )
