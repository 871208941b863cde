"""Lifted Clifford torus: exact Legendrian lift and gauge-ball mass ratios.

The map under study sends t in R x [0, 2pi)^(n-1) to

    (cos t_1 - 1, ..., cos t_n - 1, sin t_1, ..., sin t_n,
     (1/2) sum_i (t_i - sin t_i)),

an isometric Legendrian immersion of the flat torus cylinder: the contact
form applied to each coordinate derivative cancels in closed form, and the
coordinate frame is orthonormal, so surface measure on the image equals
Lebesgue measure on the parameter domain. Ball volumes vol(image cap B_r)
are therefore Lebesgue measures of parameter preimages, which this module
estimates by seeded stratified Monte Carlo.

Why sampling the slab |t_1| <= T with T = r^2/2 + 2 pi n + n is enough:
a preimage point satisfies 4|phi| < r^2 with
phi = (1/2) sum (t_i - sin t_i), and t_i - sin t_i lies in [0, 2 pi] for
t_i in [0, 2 pi), so |t_1 - sin t_1| < r^2/2 + 2 pi (n - 1) and hence
|t_1| < r^2/2 + 2 pi (n - 1) + 1, comfortably inside T.

The sampler tightens this further, which is what makes small radii
affordable. Both restrictions below are exact implications of
gauge(lift(t)) < r, so restricting the uniform proposal to their
intersection leaves the estimated measure unbiased; everything outside is
indicator-false slab volume:

  * axis width: |z|^2 = sum (2 - 2 cos t_i) < r^2 forces, per axis,
    2 - 2 cos t_i < r^2, i.e. |sin(t_i/2)| < r/2: t_i lies within
    m = 2 arcsin(min(r, 2)/2) of a multiple of 2 pi (m = pi when r >= 2).
  * vertical window per branch: on the branch t_1 in (2 pi k - m, 2 pi k + m)
    the function t_1 - sin t_1 is increasing with range
    [2 pi k - m + sin m, 2 pi k + m - sin m]; since the other axes
    contribute sum(t_i - sin t_i) in [0, 2 pi (n-1)], the branch can meet
    |phi| < r^2/4 only if 2 pi k - m + sin m < r^2/2 and
    2 pi k + m - sin m > -r^2/2 - 2 pi (n - 1). Branches failing this are
    dropped whole.

Strata are the surviving t_1 branches; samples are allocated
proportionally (equal branch lengths, deterministic remainder placement),
drawn from a counter-based Philox stream in a fixed chunk order, and
reduced with per-stratum integer hit counts, so records are reproducible
bit for bit independent of threading.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .constants import SCHEMA_VERSION
from .errors import DimensionMismatchError
from .excess import unit_ball_volume
from .heis import HeisPoint, TangentVector, contact_eval, fk_gauge

__all__ = [
    "TorusParam",
    "RatioRecord",
    "torus_lift",
    "torus_frame",
    "legendrian_residual_torus",
    "frame_fd_error",
    "slab_halfwidth",
    "ball_volume",
    "preimage_stats",
    "ratio_profile",
    "records_to_csv",
]

_CHUNK = 1 << 20
_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class TorusParam:
    """Fundamental-domain parameter: t_1 free, remaining angles in [0, 2 pi)."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        if t.size < 1:
            raise DimensionMismatchError("parameter vector must have length >= 1")
        if t.size > 1 and (np.any(t[1:] < 0.0) or np.any(t[1:] >= 2.0 * math.pi)):
            raise ValueError("components 2..n must lie in [0, 2 pi)")
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.t.size


def _params_array(t) -> np.ndarray:
    if isinstance(t, TorusParam):
        return t.t
    return np.asarray(t, dtype=float)


def torus_lift(t) -> HeisPoint:
    """Lift parameters (batched on leading axes) to Heisenberg points."""
    t = _params_array(t)
    return HeisPoint(
        np.cos(t) - 1.0,
        np.sin(t),
        0.5 * np.sum(t - np.sin(t), axis=-1),
    )


def torus_frame(t) -> TangentVector:
    """Closed-form coordinate derivatives of the lift, stacked on a new axis.

    Component i is (-sin t_i e_i, cos t_i e_i, (1 - cos t_i)/2); the contact
    form on it is (1 - cos t_i)/2 - (1/2)[(cos t_i - 1) cos t_i + sin^2 t_i]
    which collapses to zero identically.
    """
    t = _params_array(t)
    n = t.shape[-1]
    shape = t.shape[:-1]
    eye = np.eye(n).reshape((n,) + (1,) * len(shape) + (n,))
    eye = np.broadcast_to(eye, (n,) + shape + (n,))
    u = -np.sin(t)[None, ...] * eye
    v = np.cos(t)[None, ...] * eye
    w = 0.5 * (1.0 - np.cos(t))
    w = np.moveaxis(w, -1, 0)
    return TangentVector(u, v, w)


def legendrian_residual_torus(n: int, samples: int, seed: int = 0) -> float:
    """Max |contact form on the closed-form frame| over random parameters."""
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.Generator(np.random.Philox(key=seed))
    t = np.concatenate(
        [
            rng.uniform(-50.0, 50.0, size=(samples, 1)),
            rng.uniform(0.0, 2.0 * math.pi, size=(samples, n - 1)),
        ],
        axis=1,
    )
    p = torus_lift(t)
    frame = torus_frame(t)
    batch = HeisPoint(
        np.broadcast_to(p.x, (n, samples, n)),
        np.broadcast_to(p.y, (n, samples, n)),
        np.broadcast_to(p.phi, (n, samples)),
    )
    return float(np.max(np.abs(contact_eval(batch, frame))))


def frame_fd_error(n: int, samples: int, seed: int = 0, step: float = 1e-6) -> float:
    """Max relative error of the closed-form frame against central differences."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    t = np.concatenate(
        [
            rng.uniform(-10.0, 10.0, size=(samples, 1)),
            rng.uniform(0.1, 2.0 * math.pi - 0.1, size=(samples, n - 1)),
        ],
        axis=1,
    )
    frame = torus_frame(t)
    worst = 0.0
    for i in range(n):
        dt = np.zeros(n)
        dt[i] = step
        pp, pm = torus_lift(t + dt), torus_lift(t - dt)
        fd_u = (pp.x - pm.x) / (2 * step)
        fd_v = (pp.y - pm.y) / (2 * step)
        fd_w = (pp.phi - pm.phi) / (2 * step)
        num = np.sqrt(
            np.sum((fd_u - frame.u[i]) ** 2, axis=-1)
            + np.sum((fd_v - frame.v[i]) ** 2, axis=-1)
            + (fd_w - frame.w[i]) ** 2
        )
        den = np.sqrt(
            np.sum(frame.u[i] ** 2, axis=-1)
            + np.sum(frame.v[i] ** 2, axis=-1)
            + frame.w[i] ** 2
        )
        worst = max(worst, float(np.max(num / np.maximum(den, 1e-300))))
    return worst


@dataclass(frozen=True)
class RatioRecord:
    n: int
    r: float
    volume_estimate: float
    std_error: float
    ratio: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0 or self.ratio < 0:
            raise ValueError("std_error and ratio must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n,
            "r": self.r,
            "volume_estimate": self.volume_estimate,
            "std_error": self.std_error,
            "ratio": self.ratio,
            "samples": self.samples,
            "seed": self.seed,
        }


def slab_halfwidth(n: int, r: float) -> float:
    """The documented conservative slab bound T = r^2/2 + 2 pi n + n."""
    return 0.5 * r * r + 2.0 * math.pi * n + n


def lattice_quotient_norm(t) -> np.ndarray:
    """Distance of parameters to the lift's invariance lattice.

    The lift is unchanged by t -> t + 2 pi k whenever the integer vector k
    sums to zero (the shift cancels inside phi), so the parameter domain is
    really the quotient cylinder and the meaningful size of a parameter is
    min over balanced k of |t - 2 pi k|. Candidates come from rounding each
    component and rebalancing by at most one unit per component.
    """
    t = np.asarray(t, dtype=float)
    two_pi = 2.0 * math.pi
    k0 = np.rint(t / two_pi)
    d = np.sum(k0, axis=-1)
    n = t.shape[-1]
    best = np.full(t.shape[:-1], np.inf)
    grid = np.indices((3,) * n).reshape(n, -1).T - 1
    for delta in grid:
        ok = d + float(delta.sum()) == 0.0
        if not np.any(ok):
            continue
        res = t - two_pi * (k0 + delta)
        norm = np.sqrt(np.sum(res * res, axis=-1))
        best = np.where(ok, np.minimum(best, norm), best)
    return best


def _axis_halfwidth(r: float) -> float:
    return 2.0 * math.asin(min(r, 2.0) / 2.0) if r < 2.0 else math.pi


def _t1_branches(n: int, r: float):
    """Feasible t_1 intervals (2 pi k - m, 2 pi k + m), filtered per docstring."""
    m = _axis_halfwidth(r)
    upper = 0.5 * r * r
    lower = -0.5 * r * r - 2.0 * math.pi * (n - 1)
    t1_bound = 0.5 * r * r + 2.0 * math.pi * (n - 1) + 1.0
    kmax = int(math.ceil((t1_bound + m) / (2.0 * math.pi))) + 1
    branches = []
    for k in range(-kmax, kmax + 1):
        c = 2.0 * math.pi * k
        lo_val = c - m + math.sin(m)
        hi_val = c + m - math.sin(m)
        if lo_val < upper and hi_val > lower:
            branches.append((c - m, c + m))
    return m, branches


def _draw_axes(rng, count: int, n: int, m: float) -> np.ndarray:
    """Uniform draw over the feasible arcs of each periodic axis."""
    u = rng.uniform(0.0, 2.0 * m, size=(count, n - 1))
    return np.where(u < m, u, u + 2.0 * (math.pi - m))


def _stratum_counts(total: int, nstrata: int):
    base = total // nstrata
    rem = total - base * nstrata
    return [base + (1 if i < rem else 0) for i in range(nstrata)]


def ball_volume(n: int, r: float, samples: int, seed: int) -> RatioRecord:
    """Stratified Monte Carlo measure of the gauge-ball preimage on the torus.

    Strata are the feasible t_1 branches; their union provably contains the
    whole preimage within the fundamental domain (module docstring), so the
    estimator is unbiased for the Lebesgue measure and hence for the
    surface mass inside the gauge ball.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if samples < _MIN_SAMPLES:
        raise ValueError(f"need at least {_MIN_SAMPLES} samples")
    if n < 1:
        raise DimensionMismatchError("dimension must be >= 1")
    m, branches = _t1_branches(n, r)
    axis_measure = (2.0 * m) ** (n - 1)
    rng = np.random.Generator(np.random.Philox(key=seed))
    counts = _stratum_counts(samples, len(branches))
    volume = 0.0
    var = 0.0
    for (lo, hi), cnt in zip(branches, counts):
        if cnt == 0:
            continue
        hits = 0
        done = 0
        while done < cnt:
            k = min(_CHUNK, cnt - done)
            t1 = rng.uniform(lo, hi, size=(k, 1))
            if n > 1:
                t = np.concatenate([t1, _draw_axes(rng, k, n, m)], axis=1)
            else:
                t = t1
            hits += int(np.count_nonzero(fk_gauge(torus_lift(t)) < r))
            done += k
        meas = (hi - lo) * axis_measure
        p = hits / cnt
        volume += meas * p
        var += meas * meas * p * (1.0 - p) / cnt
    omega = unit_ball_volume(n) * r ** n
    return RatioRecord(
        n=n,
        r=float(r),
        volume_estimate=float(volume),
        std_error=float(math.sqrt(var)),
        ratio=float(max(volume, 0.0) / omega),
        samples=int(samples),
        seed=int(seed),
    )


def preimage_stats(n: int, r: float, samples: int, seed: int) -> dict:
    """Diagnostics over the same stream: extreme coordinates of sampled hits."""
    if r <= 0:
        raise ValueError("radius must be positive")
    m, branches = _t1_branches(n, r)
    rng = np.random.Generator(np.random.Philox(key=seed))
    counts = _stratum_counts(samples, len(branches))
    max_t1_hit = 0.0
    max_norm_hit = 0.0
    max_quotient_hit = 0.0
    max_t1_sampled = 0.0
    hits_near_slab_edge = 0
    total_hits = 0
    T = slab_halfwidth(n, r)
    for (lo, hi), cnt in zip(branches, counts):
        if cnt == 0:
            continue
        done = 0
        while done < cnt:
            k = min(_CHUNK, cnt - done)
            t1 = rng.uniform(lo, hi, size=(k, 1))
            if n > 1:
                t = np.concatenate([t1, _draw_axes(rng, k, n, m)], axis=1)
            else:
                t = t1
            inside = fk_gauge(torus_lift(t)) < r
            max_t1_sampled = max(max_t1_sampled, float(np.max(np.abs(t1))))
            if np.any(inside):
                th = t[inside]
                max_t1_hit = max(max_t1_hit, float(np.max(np.abs(th[:, 0]))))
                max_norm_hit = max(
                    max_norm_hit, float(np.max(np.sqrt(np.sum(th * th, axis=1))))
                )
                max_quotient_hit = max(
                    max_quotient_hit, float(np.max(lattice_quotient_norm(th)))
                )
                hits_near_slab_edge += int(
                    np.count_nonzero(np.abs(th[:, 0]) >= 0.99 * T)
                )
                total_hits += int(np.count_nonzero(inside))
            done += k
    return {
        "slab_halfwidth": T,
        "max_abs_t1_hit": max_t1_hit,
        "max_param_norm_hit": max_norm_hit,
        "max_quotient_norm_hit": max_quotient_hit,
        "max_abs_t1_sampled": max_t1_sampled,
        "hits_within_1pct_of_slab": hits_near_slab_edge,
        "total_hits": total_hits,
    }


def ratio_profile(n: int, radii, samples: int, seed: int):
    """ball_volume across radii with independent child streams of one seed."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(len(radii))
    out = []
    for r, child in zip(radii, children):
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        rec = ball_volume(n, r, samples, child_seed)
        out.append(
            RatioRecord(
                n=rec.n,
                r=rec.r,
                volume_estimate=rec.volume_estimate,
                std_error=rec.std_error,
                ratio=rec.ratio,
                samples=rec.samples,
                seed=int(seed),
            )
        )
    return tuple(out)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "r", "samples", "seed", "volume", "std_error", "ratio"])
    for rec in records:
        w.writerow(
            [
                rec.n,
                repr(rec.r),
                rec.samples,
                rec.seed,
                repr(rec.volume_estimate),
                repr(rec.std_error),
                repr(rec.ratio),
            ]
        )
    return buf.getvalue()
