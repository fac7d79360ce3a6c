"""Radial curvature profiles ``-kappa + beta / r**2`` with a constant core.

Two kinds share one representation: the lower bound used to build a model
space, and the radial curvature ``K(r)`` of a rotationally symmetric target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class ProfileKind(str, Enum):
    MODEL_LOWER_BOUND = "model_lower_bound"
    RADIAL_CURVATURE = "radial_curvature"


class ProfileError(ValueError):
    """Invalid profile parameters or a tail-dependent call on a tabulated profile."""


@dataclass(frozen=True)
class CurvatureProfile:
    """Nonpositive curvature function of the radius.

    For r >= r_join the value is exactly ``-kappa + beta / r**2``; on
    ``[0, r_join)`` it is the constant join value. A tabulated profile
    (``table`` set, ``kappa``/``beta``/``r_join`` None) is piecewise linear and
    constant past its last node.
    """

    kappa: float | None
    beta: float | None
    r_join: float | None
    inner_value: float
    kind: ProfileKind = ProfileKind.MODEL_LOWER_BOUND
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    @property
    def has_tail(self) -> bool:
        return self.table is None

    def require_tail(self) -> None:
        if not self.has_tail:
            raise ProfileError("operation needs a (kappa, beta) tail; got a tabulated profile")

    @property
    def essential_scale(self) -> float:
        """sqrt(kappa), the limit of the logarithmic derivative of the warping."""
        self.require_tail()
        return math.sqrt(self.kappa)

    def __call__(self, r: float) -> float:
        if self.table is not None:
            return float(np.interp(r, self.table[0], self.table[1]))
        if r < self.r_join:
            return self.inner_value
        return -self.kappa + self.beta / (r * r)

    def values(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.table is not None:
            return np.interp(r, self.table[0], self.table[1])
        rr = np.where(r < self.r_join, self.r_join, r)
        return np.where(r < self.r_join, self.inner_value, -self.kappa + self.beta / (rr * rr))

    def to_text(self) -> str:
        self.require_tail()
        return (
            f"kappa = {self.kappa!r}\nbeta = {self.beta!r}\n"
            f"r_join = {self.r_join!r}\nkind = {self.kind.value}\n"
        )


def make_profile(kappa: float, beta: float, r_join: float,
                 kind: ProfileKind | str = ProfileKind.MODEL_LOWER_BOUND) -> CurvatureProfile:
    kappa, beta, r_join = float(kappa), float(beta), float(r_join)
    if not kappa > 0:
        raise ProfileError(f"kappa must be positive, got {kappa}")
    if not r_join > 0:
        raise ProfileError(f"r_join must be positive, got {r_join}")
    if not beta >= 0:
        raise ProfileError(f"beta must be nonnegative, got {beta}")
    if beta > kappa * r_join * r_join:
        raise ProfileError(
            f"beta={beta} > kappa*r_join**2={kappa * r_join ** 2}: profile would be positive at the join"
        )
    inner = -kappa + beta / (r_join * r_join)
    return CurvatureProfile(kappa, beta, r_join, inner, ProfileKind(kind))


def make_custom_profile(r, values, kind: ProfileKind | str = ProfileKind.MODEL_LOWER_BOUND) -> CurvatureProfile:
    """Tabulated piecewise-linear profile, for oracle tests."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 2:
        raise ProfileError("table needs matching 1-d arrays with at least two nodes")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise ProfileError("table radii must start at 0 and increase strictly")
    if np.any(v > 0):
        raise ProfileError("tabulated profile must be nonpositive")
    return CurvatureProfile(None, None, None, float(v[0]), ProfileKind(kind),
                            (tuple(r.tolist()), tuple(v.tolist())))


def zero_profile(kind: ProfileKind | str = ProfileKind.MODEL_LOWER_BOUND) -> CurvatureProfile:
    return make_custom_profile([0.0, 1.0], [0.0, 0.0], kind)


def eval_profile(p: CurvatureProfile, r: float) -> float:
    if r < 0:
        raise ProfileError(f"radius must be nonnegative, got {r}")
    return p(r)


def profile_from_mapping(d: dict) -> CurvatureProfile:
    """Build from a flat ``kappa/beta/r_join/kind`` mapping (values may be strings)."""
    missing = [k for k in ("kappa", "beta", "r_join") if k not in d]
    if missing:
        raise ProfileError(f"missing profile keys: {', '.join(missing)}")
    kind = d.get("kind", ProfileKind.MODEL_LOWER_BOUND.value)
    return make_profile(float(d["kappa"]), float(d["beta"]), float(d["r_join"]), kind)


def profile_from_text(text: str) -> CurvatureProfile:
    d = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ProfileError(f"expected 'key = value', got {line!r}")
        d[key.strip()] = value.strip()
    return profile_from_mapping(d)
