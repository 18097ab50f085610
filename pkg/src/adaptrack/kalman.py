"""Constant-velocity Kalman filter over (cx, cy, aspect, height) box states.

Measurement noise scales with box height: position/size stds are h/20 and
velocity stds h/160. The whole constants block lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from adaptrack.core import BoundingBox, TrackingError

STD_WEIGHT_POSITION = 1.0 / 20
STD_WEIGHT_VELOCITY = 1.0 / 160

_NDIM = 4

# Transition: position block += velocity block, unit frame step.
_MOTION_MAT = np.eye(2 * _NDIM)
for _i in range(_NDIM):
    _MOTION_MAT[_i, _NDIM + _i] = 1.0
_UPDATE_MAT = np.eye(_NDIM, 2 * _NDIM)


class DegenerateState(TrackingError):
    """State cannot be mapped back to a valid box (height or aspect <= 0)."""


@dataclass
class KalmanState:
    """Gaussian over (cx, cy, aspect, h) and their per-frame rates."""

    mean: np.ndarray        # shape (8,)
    covariance: np.ndarray  # shape (8, 8)


def _bbox_to_measurement(bbox: BoundingBox) -> np.ndarray:
    cx, cy = bbox.center
    return np.array([cx, cy, bbox.w / bbox.h, bbox.h], dtype=np.float64)


def initiate(bbox: BoundingBox) -> KalmanState:
    """Start a state at the box with zero velocity and height-scaled uncertainty."""
    mean = np.zeros(2 * _NDIM)
    mean[:_NDIM] = _bbox_to_measurement(bbox)
    h = bbox.h
    std = np.array([
        2 * STD_WEIGHT_POSITION * h,
        2 * STD_WEIGHT_POSITION * h,
        1e-2,
        2 * STD_WEIGHT_POSITION * h,
        10 * STD_WEIGHT_VELOCITY * h,
        10 * STD_WEIGHT_VELOCITY * h,
        1e-5,
        10 * STD_WEIGHT_VELOCITY * h,
    ])
    return KalmanState(mean=mean, covariance=np.diag(std ** 2))


def predict(state: KalmanState) -> KalmanState:
    """Advance one frame under the constant-velocity model."""
    h = state.mean[3]
    std = np.array([
        STD_WEIGHT_POSITION * h,
        STD_WEIGHT_POSITION * h,
        1e-2,
        STD_WEIGHT_POSITION * h,
        STD_WEIGHT_VELOCITY * h,
        STD_WEIGHT_VELOCITY * h,
        1e-5,
        STD_WEIGHT_VELOCITY * h,
    ])
    process_noise = np.diag(std ** 2)
    mean = _MOTION_MAT @ state.mean
    covariance = _MOTION_MAT @ state.covariance @ _MOTION_MAT.T + process_noise
    return KalmanState(mean=mean, covariance=_symmetrize(covariance))


def update(state: KalmanState, measurement: BoundingBox) -> KalmanState:
    """Fold a measured box into the state with the standard gain correction."""
    h = state.mean[3]
    std = np.array([
        STD_WEIGHT_POSITION * h,
        STD_WEIGHT_POSITION * h,
        1e-1,
        STD_WEIGHT_POSITION * h,
    ])
    measurement_noise = np.diag(std ** 2)

    projected_mean = _UPDATE_MAT @ state.mean
    projected_cov = _UPDATE_MAT @ state.covariance @ _UPDATE_MAT.T + measurement_noise

    gain = np.linalg.solve(projected_cov.T, (state.covariance @ _UPDATE_MAT.T).T).T
    innovation = _bbox_to_measurement(measurement) - projected_mean

    mean = state.mean + gain @ innovation
    covariance = state.covariance - gain @ projected_cov @ gain.T
    return KalmanState(mean=mean, covariance=_symmetrize(covariance))


def state_to_bbox(state: KalmanState) -> BoundingBox:
    """Invert the center/aspect/height parameterization back to a box."""
    cx, cy, aspect, h = state.mean[:_NDIM]
    if h <= 0 or aspect <= 0:
        raise DegenerateState(f"state not a valid box: aspect={aspect}, h={h}")
    w = aspect * h
    return BoundingBox(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h)


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    return (cov + cov.T) / 2.0
