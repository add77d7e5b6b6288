"""Nonlinear time-series analysis for neural activation records.

The toolkit answers four questions about a scalar series: how far apart
should delay coordinates be (mutual information), how many coordinates
are needed (false nearest neighbors), does the reconstructed flow
stretch or contract (largest Lyapunov exponent, Rosenstein method), and
is the flow deterministic at all (Kaplan-Glass box statistic).

All routines accept a plain 1-D numpy array of samples.  Where a result
depends on physical time the sampling interval dt is passed explicitly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

# Kennel false-neighbor thresholds.
RTOL = 15.0
ATOL = 2.0
FNN_ACCEPT_FRACTION = 0.01

MIN_FNN_POINTS = 500
MIN_LYAPUNOV_PAIRS = 10
DEFAULT_BOXES_PER_AXIS = 10

# Samples that precede the analysed window, expressed in time units.
DEFAULT_TRANSIENT = 500.0


def _histogram_mutual_information(x, y, bins):
    """Mutual information of two sample vectors, in nats."""
    joint, _, _ = np.histogram2d(x, y, bins=bins)
    total = joint.sum()
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0.0
    return float(np.sum(p[nz] * np.log(p[nz] / (px * py)[nz])))


def mutual_information_delay(values, max_lag, return_curve=False):
    """Pick an embedding delay from the lagged mutual information.

    Mutual information between the series and its lagged copy is
    estimated with an equal-width histogram of ceil(sqrt(N)) bins per
    axis.  The returned delay is the first local minimum of that curve.
    If the curve has no interior minimum the fallback is the first lag
    at which the autocorrelation drops below 1/e, and if that never
    happens max_lag is returned.

    Raises ValueError on a constant series.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one dimensional")
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if n < max_lag + 2:
        raise ValueError("series too short for requested max_lag")
    if np.ptp(x) == 0.0:
        raise ValueError("zero-variance series")

    bins = int(np.ceil(np.sqrt(n)))
    mi = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        if lag == 0:
            mi[lag] = _histogram_mutual_information(x, x, bins)
        else:
            mi[lag] = _histogram_mutual_information(x[:-lag], x[lag:], bins)

    delay = None
    for lag in range(1, max_lag):
        if mi[lag] < mi[lag - 1] and mi[lag] <= mi[lag + 1]:
            delay = lag
            break

    if delay is None:
        # No interior minimum: fall back to autocorrelation decay.
        xc = x - x.mean()
        denom = float(np.dot(xc, xc))
        threshold = 1.0 / np.e
        for lag in range(1, max_lag + 1):
            ac = float(np.dot(xc[:-lag], xc[lag:])) / denom
            if ac < threshold:
                delay = lag
                break
    if delay is None:
        delay = max_lag

    if return_curve:
        return delay, mi
    return delay


def delay_embed(values, dim, delay):
    """Stack lagged copies of the series into dim-dimensional points.

    Row t is (v[t], v[t + delay], ..., v[t + (dim - 1) delay]); there
    are N - (dim - 1) * delay rows.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one dimensional")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if delay < 1:
        raise ValueError("delay must be at least 1")
    count = x.size - (dim - 1) * delay
    if count < 1:
        raise ValueError("series too short for this dim and delay")
    out = np.empty((count, dim))
    for j in range(dim):
        out[:, j] = x[j * delay:j * delay + count]
    return out


def _nearest_valid_neighbors(points, theiler):
    """Nearest neighbor of each point outside a temporal exclusion window.

    Returns (indices, distances); index -1 marks points for which no
    neighbor with |i - j| > theiler exists.
    """
    pts = np.ascontiguousarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    tree = cKDTree(pts)
    idx = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, np.inf)
    pending = np.arange(n)
    k = min(n, 2 * (theiler + 1))
    while pending.size:
        d, j = tree.query(pts[pending], k=k)
        if k == 1:
            d = d[:, None]
            j = j[:, None]
        valid = np.abs(j - pending[:, None]) > theiler
        first = valid.argmax(axis=1)
        found = valid[np.arange(pending.size), first]
        hit = pending[found]
        idx[hit] = j[found, first[found]]
        dist[hit] = d[found, first[found]]
        pending = pending[~found]
        if k >= n:
            break
        k = min(n, 2 * k)
    return idx, dist


@dataclass
class FnnResult:
    """False-neighbor fractions per candidate dimension.

    fractions[i] belongs to dimension dims[i].  chosen_dim is the
    smallest dimension whose fraction falls below the acceptance
    threshold, or None when the curve never saturates (as for noise).
    """

    dims: np.ndarray
    fractions: np.ndarray
    chosen_dim: Optional[int]

    @property
    def saturated(self) -> bool:
        return self.chosen_dim is not None


def false_nearest_neighbors(values, delay, max_dim, rtol=RTOL, atol=ATOL,
                            accept=FNN_ACCEPT_FRACTION, theiler=None,
                            noise_floor=1e-8):
    """Estimate the embedding dimension by the Kennel criterion.

    For each candidate dimension d the nearest neighbor of every point
    (excluding temporally close points) is tested in dimension d + 1.
    A neighbor is false when the extra coordinate pushes it away by
    more than rtol times its distance, or beyond atol attractor radii.
    The chosen dimension is the smallest whose false fraction drops
    below `accept`.

    Pairs whose full (d+1)-dimensional separation is below noise_floor
    attractor radii are counted as true neighbors: such pairs are
    floating-point recurrences of the trajectory and their coordinate
    ratios carry no geometric information.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one dimensional")
    if max_dim < 1:
        raise ValueError("max_dim must be at least 1")
    if theiler is None:
        theiler = delay
    n = x.size
    usable_min = n - max_dim * delay
    if usable_min < MIN_FNN_POINTS:
        raise ValueError("too few points for neighbor statistics")
    scale = float(x.std())
    if scale == 0.0:
        raise ValueError("zero-variance series")

    dims = np.arange(1, max_dim + 1)
    fractions = np.empty(max_dim)
    for d in dims:
        # Keep only points whose (d+1)-th coordinate exists, so the
        # same point set is judged before and after adding it.
        count = n - d * delay
        pts = delay_embed(x, d, delay)[:count]
        nn_idx, nn_dist = _nearest_valid_neighbors(pts, theiler)
        ok = nn_idx >= 0
        i = np.nonzero(ok)[0]
        j = nn_idx[i]
        gap = np.abs(x[i + d * delay] - x[j + d * delay])
        r_d = nn_dist[i]
        if i.size == 0:
            raise ValueError("too few points for neighbor statistics")
        # gap > rtol * r_d handles r_d == 0 without dividing: a zero
        # distance neighbor is false exactly when the new coordinate
        # separates the pair.
        r_next = np.sqrt(r_d * r_d + gap * gap)
        false_a = gap > rtol * r_d
        false_b = r_next > atol * scale
        genuine = r_next > noise_floor * scale
        fractions[d - 1] = np.mean((false_a | false_b) & genuine)

    chosen = None
    for d in dims:
        if fractions[d - 1] < accept:
            chosen = int(d)
            break
    return FnnResult(dims=dims, fractions=fractions, chosen_dim=chosen)


def mean_period_samples(values, fallback=10):
    """Mean oscillation period estimated from zero crossings.

    The series is mean-subtracted; the mean gap between successive
    sign changes is half a period.  With fewer than two crossings the
    fallback value is returned.
    """
    x = np.asarray(values, dtype=float)
    xc = x - x.mean()
    signs = np.sign(xc)
    # Treat exact zeros as belonging to the previous sign.
    for i in range(1, signs.size):
        if signs[i] == 0.0:
            signs[i] = signs[i - 1]
    crossings = np.nonzero(np.diff(signs) != 0.0)[0]
    if crossings.size < 2:
        return int(fallback)
    half = float(np.mean(np.diff(crossings)))
    period = int(round(2.0 * half))
    return max(period, 1)


def largest_lyapunov(values, dim, delay, dt=1.0, i_max=None, theiler=None,
                     return_details=False):
    """Largest Lyapunov exponent by the Rosenstein method.

    Each embedded point is paired with its nearest neighbor at least a
    mean period away in time; the average log separation of the pairs
    is tracked for i_max steps and a line is fit to the first third of
    that curve.  The exponent is the slope divided by dt.

    Raises ValueError when fewer than 10 usable pairs exist.
    """
    x = np.asarray(values, dtype=float)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if i_max is None:
        i_max = 10 * delay
    if theiler is None:
        theiler = mean_period_samples(x)
    pts = delay_embed(x, dim, delay)
    m = pts.shape[0]
    follow = int(i_max)
    if m - follow < 2:
        raise ValueError("insufficient data")

    base = pts[:m - follow]
    nn_idx, nn_dist = _nearest_valid_neighbors(base, theiler)
    ok = (nn_idx >= 0) & (nn_dist > 0.0)
    i = np.nonzero(ok)[0]
    j = nn_idx[i]
    if i.size < MIN_LYAPUNOV_PAIRS:
        raise ValueError("insufficient data")

    curve = np.empty(follow + 1)
    counts = np.empty(follow + 1, dtype=np.int64)
    for step in range(follow + 1):
        diff = pts[i + step] - pts[j + step]
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        alive = d > 0.0
        counts[step] = int(alive.sum())
        if counts[step] == 0:
            curve = curve[:step]
            counts = counts[:step]
            break
        curve[step] = float(np.mean(np.log(d[alive])))

    fit_stop = max(2, len(curve) // 3)
    if len(curve) < 2:
        raise ValueError("insufficient data")
    t = np.arange(fit_stop)
    slope, intercept = np.polyfit(t, curve[:fit_stop], 1)
    exponent = float(slope) / dt
    if return_details:
        details = {
            "curve": curve,
            "pair_counts": counts,
            "fit_stop": fit_stop,
            "theiler": int(theiler),
            "n_pairs": int(i.size),
            "intercept": float(intercept),
        }
        return exponent, details
    return exponent


def determinism_test(values, dim, delay, boxes_per_axis=DEFAULT_BOXES_PER_AXIS):
    """Kaplan-Glass determinism factor of the embedded trajectory.

    The embedding hypercube is split into boxes_per_axis boxes per
    axis.  Every unit displacement vector between consecutive points
    is credited to the box containing the midpoint of that hop, which
    makes the statistic symmetric under time reversal.  Within each
    box the vectors are summed; k is the total resultant length over
    the total number of passes.  Deterministic flow gives k near 1,
    a random walk gives k near 0.

    Raises ValueError when the whole trajectory falls in one box.
    """
    if boxes_per_axis < 1:
        raise ValueError("boxes_per_axis must be at least 1")
    pts = delay_embed(values, dim, delay)
    if pts.shape[0] < 3:
        raise ValueError("too few points")
    disp = np.diff(pts, axis=0)
    norms = np.sqrt(np.einsum("ij,ij->i", disp, disp))
    moving = norms > 0.0
    if not np.any(moving):
        raise ValueError("degenerate embedding")
    units = disp[moving] / norms[moving][:, None]
    mids = 0.5 * (pts[:-1] + pts[1:])[moving]

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    span[span == 0.0] = 1.0
    cells = np.floor((mids - lo) / span * boxes_per_axis).astype(np.int64)
    np.clip(cells, 0, boxes_per_axis - 1, out=cells)
    flat = np.ravel_multi_index(cells.T, (boxes_per_axis,) * pts.shape[1])
    box_ids, inverse = np.unique(flat, return_inverse=True)
    if box_ids.size < 2:
        raise ValueError("degenerate embedding")

    sums = np.zeros((box_ids.size, pts.shape[1]))
    np.add.at(sums, inverse, units)
    resultant = np.sqrt(np.einsum("ij,ij->i", sums, sums))
    return float(resultant.sum() / units.shape[0])


@dataclass
class AnalysisReport:
    """Bundle of descriptors for one activation series."""

    n_samples: int
    dt: float
    transient: float
    delay: int
    fnn_fractions: np.ndarray
    embedding_dim: Optional[int]
    saturated: bool
    lle: float
    determinism_k: float
    diagnostics: dict = field(default_factory=dict)


def analyze(values, dt, transient=DEFAULT_TRANSIENT, max_lag=None,
            max_dim=6, boxes_per_axis=DEFAULT_BOXES_PER_AXIS):
    """Run the full descriptor pipeline on one scalar series.

    Drops the leading transient, picks a delay by mutual information,
    an embedding dimension by false nearest neighbors (falling back to
    max_dim when the fraction never saturates), then computes the
    largest Lyapunov exponent and the determinism factor at that
    embedding.
    """
    x = np.asarray(values, dtype=float)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    drop = int(round(transient / dt))
    if drop >= x.size:
        raise ValueError("transient longer than series")
    x = x[drop:]
    n = x.size
    if n < 2000:
        warnings.warn("series shorter than 2000 samples; "
                      "estimates will be coarse", stacklevel=2)
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")

    if max_lag is None:
        max_lag = min(500, max(n // 10, 1))
    delay = mutual_information_delay(x, max_lag)
    fnn = false_nearest_neighbors(x, delay, max_dim)
    dim = fnn.chosen_dim if fnn.chosen_dim is not None else max_dim
    lle, lle_details = largest_lyapunov(x, dim, delay, dt=dt,
                                        return_details=True)
    k = determinism_test(x, dim, delay, boxes_per_axis=boxes_per_axis)
    return AnalysisReport(
        n_samples=n,
        dt=dt,
        transient=float(transient),
        delay=int(delay),
        fnn_fractions=fnn.fractions,
        embedding_dim=fnn.chosen_dim,
        saturated=fnn.saturated,
        lle=lle,
        determinism_k=k,
        diagnostics={"lyapunov": lle_details, "max_lag": int(max_lag),
                     "analysis_dim": int(dim)},
    )
