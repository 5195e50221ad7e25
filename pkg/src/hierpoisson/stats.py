"""Goodness-of-fit verdicts and the deterministic condition sequences."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .hierarchy import HierarchyGeometry
from .laplacian import CouplingSequence, SpectralDimensionSpec, geometric_couplings
from .potential import PotentialModel, normalizers

SIGNIFICANCE_FLOOR = 1e-3
MIN_COUNT_SAMPLES = 100
MIN_GAPS = 50
EXPONENT_TOL = 0.2


@dataclass
class GofReport:
    test: str
    statistic: float
    p_value: float
    sample_size: int
    params: dict = field(default_factory=dict)
    dispersion: float | None = None
    inconclusive: bool = False

    def passed(self, alpha: float = SIGNIFICANCE_FLOOR) -> bool:
        return not self.inconclusive and self.p_value > alpha

    def to_dict(self) -> dict:
        return asdict(self)


def _poisson_bins(mean: float, size: int, min_expected: float = 5.0) -> list[tuple[int, int | None]]:
    """Half-open count ranges [lo, hi) with expected frequency >= min_expected; last one open."""
    bins, lo, c = [], 0, 0
    while sps.poisson.sf(c, mean) * size >= min_expected:
        mass = sps.poisson.cdf(c, mean) - (sps.poisson.cdf(lo - 1, mean) if lo > 0 else 0.0)
        if mass * size >= min_expected:
            bins.append((lo, c + 1))
            lo = c + 1
        c += 1
    bins.append((lo, None))
    return bins


def poisson_count_gof(counts, mean: float) -> GofReport:
    """Chi-square test of per-realization counts against Poisson(mean).

    Adjacent count values are merged until every bin expects at least 5
    observations; the last bin is the open tail.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if not mean > 0:
        raise ValueError(f"Poisson mean must be > 0, got {mean}")
    if counts.size < MIN_COUNT_SAMPLES:
        raise ValueError(f"need at least {MIN_COUNT_SAMPLES} count samples, got {counts.size}")
    size = counts.size
    bins = _poisson_bins(mean, size)
    obs, exp = [], []
    for lo, hi in bins:
        if hi is None:
            obs.append(np.count_nonzero(counts >= lo))
            exp.append(sps.poisson.sf(lo - 1, mean) * size)
        else:
            obs.append(np.count_nonzero((counts >= lo) & (counts < hi)))
            exp.append((sps.poisson.cdf(hi - 1, mean) - sps.poisson.cdf(lo - 1, mean)) * size)
    exp = np.asarray(exp)
    exp *= size / exp.sum()
    sample_mean = float(counts.mean())
    dispersion = float(counts.var(ddof=1) / sample_mean) if sample_mean > 0 else math.nan
    if len(bins) < 2:
        stat, p = 0.0, 1.0
    else:
        stat, p = sps.chisquare(np.asarray(obs, dtype=float), exp)
    return GofReport(
        test="poisson_count_chi2",
        statistic=float(stat),
        p_value=float(p),
        sample_size=size,
        params={"mean": float(mean), "sample_mean": sample_mean, "bins": [[lo, hi] for lo, hi in bins]},
        dispersion=dispersion,
    )


def window_gap_sf(g, intensity: float, length: float):
    """Survival function of a consecutive gap observed inside a window.

    For a Poisson process of the given intensity restricted to a window of
    the given length, pooling all consecutive gaps gives
    S(g) = ((mu q - 1) e^{mu q} + 1) / ((mu - 1) e^{mu} + 1), q = 1 - g / length,
    mu = intensity * length. As length grows this tends to exp(-intensity g).
    """
    g = np.clip(np.asarray(g, dtype=float), 0.0, length)
    mu = intensity * length
    mq = mu * (1.0 - g / length)
    # Scaled by e^{-mu} to keep both terms finite for wide windows.
    num = (mq - 1.0) * np.exp(mq - mu) + np.exp(-mu)
    den = (mu - 1.0) + np.exp(-mu)
    if mu < 1e-4:
        # Series form: numerator and denominator both ~ (mu q)^2 / 2.
        return (1.0 - g / length) ** 2
    return num / den


def exponential_gap_gof(processes, intensity: float, windowed: bool = True) -> GofReport:
    """Kolmogorov-Smirnov test of pooled consecutive gaps.

    The null is the gap law of a Poisson process with the given intensity.
    Gaps are only seen inside each process window, so by default the null
    is the window-conditioned law (`window_gap_sf`); ``windowed=False``
    tests against the bare Exponential(intensity).
    """
    if not intensity > 0:
        raise ValueError(f"intensity must be > 0, got {intensity}")
    processes = list(processes)
    gaps = np.concatenate([np.diff(p.points) for p in processes]) if processes else np.empty(0)
    lengths = {2.0 * p.half_width for p in processes}
    if windowed and len(lengths) > 1:
        raise ValueError("all processes must share the same window for the windowed gap test")
    length = lengths.pop() if lengths else math.inf
    params = {"intensity": float(intensity), "window_length": length, "windowed": windowed}
    if gaps.size == 0:
        return GofReport("exponential_gap_ks", math.nan, 1.0, 0, params, inconclusive=True)
    if windowed and math.isfinite(length):
        cdf = lambda g: 1.0 - window_gap_sf(g, intensity, length)  # noqa: E731
    else:
        cdf = sps.expon(scale=1.0 / intensity).cdf
    res = sps.kstest(gaps, cdf)
    return GofReport(
        test="exponential_gap_ks",
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        sample_size=int(gaps.size),
        params=params,
        inconclusive=gaps.size < MIN_GAPS,
    )


def grigelionis_sums(ensembles: dict, interval) -> list[dict]:
    """Empirical Grigelionis aggregates from per-block counts.

    ``ensembles`` maps a volume level k to an integer array of shape
    (realizations, blocks) holding xi_{k,j}(I) for each realization.
    """
    rows = []
    for k in sorted(ensembles):
        counts = np.asarray(ensembles[k])
        reps, blocks = counts.shape
        ge1 = counts >= 1
        ge2 = counts >= 2
        p1 = ge1.mean(axis=0)
        jmax = int(np.argmax(p1))
        mean_j = counts.mean(axis=0)
        se_j = counts.std(axis=0, ddof=1) / math.sqrt(reps)
        fact2 = (counts * (counts - 1)).mean(axis=0)
        rows.append({
            "k": k,
            "interval": [float(interval[0]), float(interval[1])],
            "realizations": reps,
            "blocks": blocks,
            "max_p_ge1": float(p1[jmax]),
            "max_p_ge1_se": float(math.sqrt(p1[jmax] * (1 - p1[jmax]) / reps)),
            "sum_p_ge1": float(p1.sum()),
            "sum_p_ge1_se": float(ge1.sum(axis=1).std(ddof=1) / math.sqrt(reps)),
            "sum_p_ge2": float(ge2.mean(axis=0).sum()),
            "sum_p_ge2_se": float(ge2.sum(axis=1).std(ddof=1) / math.sqrt(reps)),
            "block_mean": mean_j.tolist(),
            "block_mean_se": se_j.tolist(),
            "block_factorial2": fact2.tolist(),
            "block_factorial2_se": ((counts * (counts - 1)).std(axis=0, ddof=1) / math.sqrt(reps)).tolist(),
        })
    return rows


def r_of(k: int, theta: float) -> int:
    return int(math.floor(theta * k + 1e-12))


def _slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


def theta_star(gamma: float, theta: float) -> float:
    """Exponent min{2(1+gamma)(1-theta), 1+theta} of the block-sum bound."""
    return min(2.0 * (1.0 + gamma) * (1.0 - theta), 1.0 + theta)


def block_sum_exponent(gamma: float, theta: float) -> float:
    """Exponent of sum_j (A_kj / A_k)**2 in |B_k| from the direct block-sum asymptotics."""
    if gamma >= -0.5:
        return 1.0 - theta
    return 2.0 * (1.0 + gamma) * (1.0 - theta)


@dataclass
class HypothesisHReport:
    gamma: float
    theta: float
    n: int
    rows: list[dict]
    fitted_slope: float
    theta_star: float
    block_exponent: float
    log_corrected: bool
    within_tolerance: bool
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return asdict(self)


def _h_rows(model, couplings, theta, k_list, geom) -> list[dict]:
    rows = []
    for k in k_list:
        r = r_of(k, theta)
        if r < 1:
            raise ValueError(f"r_k = floor({theta} * {k}) = {r} < 1; raise k or theta")
        N = normalizers(model, k, r, geom)
        q = N.ratios
        volume = geom.volume(k)
        tail = couplings.tail_at(r) if couplings is not None else math.nan
        rows.append({
            "k": k,
            "r_k": r,
            "A_k": N.A_k,
            "sup_ratio": float(q.max()),
            "sum_ratio": float(q.sum()),
            "sum_sq_ratio": float(np.sum(q * q)),
            "poisson_condition": N.A_k * volume * tail,
            "weak_condition": volume / N.A_k * tail,
        })
    return rows


def hypothesis_h_report(
    model: PotentialModel,
    couplings: CouplingSequence | None,
    theta: float,
    k_list,
    geom: HierarchyGeometry,
) -> HypothesisHReport:
    """Exact condition sequences along r_k = floor(theta k); no sampling.

    The fitted slope is that of ln sum_j (A_kj/A_k)^2 against ln |B_k|; at
    gamma = -1/2 the sum is first divided by ln(|B_k| / |B_kj|).
    """
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    k_list = list(k_list)
    rows = _h_rows(model, couplings, theta, k_list, geom)
    ln_vol = np.array([row["k"] * math.log(geom.n) for row in rows])
    y = np.log([row["sum_sq_ratio"] for row in rows])
    log_corrected = math.isclose(model.gamma, -0.5)
    if log_corrected:
        y = y - np.log([(row["k"] - row["r_k"]) * math.log(geom.n) for row in rows])
    slope = _slope(ln_vol, y) if len(rows) >= 2 else math.nan
    ts = theta_star(model.gamma, theta)
    return HypothesisHReport(
        gamma=model.gamma,
        theta=theta,
        n=geom.n,
        rows=rows,
        fitted_slope=slope,
        theta_star=ts,
        block_exponent=block_sum_exponent(model.gamma, theta),
        log_corrected=log_corrected,
        within_tolerance=bool(abs(slope + ts) <= EXPONENT_TOL),
    )


def threshold(gamma: float) -> float:
    """Largest spectral dimension 1 / (1 + gamma/2) with a feasible theta."""
    return 1.0 / (1.0 + gamma / 2.0)


def default_theta(gamma: float, d: float) -> float | None:
    """Midpoint of ((1 + gamma/2) d, 1); None when that interval is empty."""
    lo = (1.0 + gamma / 2.0) * d
    if lo >= 1.0:
        return None
    return 0.5 * (max(lo, 0.0) + 1.0)


FALLBACK_THETA = 0.5


def dimension_threshold_report(
    model: PotentialModel,
    spec: SpectralDimensionSpec,
    theta: float | None,
    k_list,
    geom: HierarchyGeometry,
) -> HypothesisHReport:
    """Laplacian-vs-disorder sequences A_k|B_k|(1-lambda_rk) and (|B_k|/A_k)(1-lambda_rk).

    Verdicts: "decreasing" when the threshold d < 1/(1+gamma/2) holds and the
    fitted exponent of A_k|B_k|(1-lambda_rk) in |B_k| is negative;
    "threshold violated" when no admissible theta exists (theta then falls
    back to the given value or 0.5); "not decreasing" otherwise.
    """
    k_list = list(k_list)
    feasible_theta = default_theta(model.gamma, spec.d)
    feasible = feasible_theta is not None
    if theta is None:
        theta = feasible_theta if feasible else FALLBACK_THETA
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    theta_ok = feasible and (1.0 + model.gamma / 2.0) * spec.d < theta
    couplings = geometric_couplings(spec, max(k_list))
    rows = _h_rows(model, couplings, theta, k_list, geom)
    ln_vol = np.array([row["k"] * math.log(geom.n) for row in rows])
    poisson_slope = _slope(ln_vol, np.log([row["poisson_condition"] for row in rows]))
    weak_slope = _slope(ln_vol, np.log([row["weak_condition"] for row in rows]))
    if not feasible:
        verdict = "threshold violated"
    elif not theta_ok:
        verdict = "theta outside admissible interval"
    elif poisson_slope < 0:
        verdict = "decreasing"
    else:
        verdict = "not decreasing"
    ts = theta_star(model.gamma, theta)
    return HypothesisHReport(
        gamma=model.gamma,
        theta=theta,
        n=geom.n,
        rows=rows,
        fitted_slope=poisson_slope,
        theta_star=ts,
        block_exponent=block_sum_exponent(model.gamma, theta),
        log_corrected=False,
        within_tolerance=bool(feasible and theta_ok),
        extra={
            "d": spec.d,
            "threshold": threshold(model.gamma),
            "feasible": feasible,
            "verdict": verdict,
            "poisson_exponent": poisson_slope,
            "weak_exponent": weak_slope,
            "expected_exponent": 2.0 + model.gamma - 2.0 * theta / spec.d,
        },
    )


def trace_variance_bound(row: dict, z: complex) -> float:
    """(2 (|B_k|/A_k)(1 - lambda_rk) / |Im z|^2)^2 + sum_j (A_kj/A_k)^2."""
    return (2.0 * row["weak_condition"] / abs(complex(z).imag) ** 2) ** 2 + row["sum_sq_ratio"]


def trace_variance_decay(
    model: PotentialModel,
    couplings: CouplingSequence,
    geom: HierarchyGeometry,
    z: complex,
    k_list,
    realizations: int,
    seed: int,
    theta: float,
    workers: int = 1,
) -> list[dict]:
    """Sample variance of (1/A_k) tr (H_k - z)^-1 per volume, with its bound."""
    from .ensemble import ModelSetup, full_spectra

    if realizations < 100:
        raise ValueError(f"need at least 100 realizations, got {realizations}")
    z = complex(z)
    setup = ModelSetup(n=geom.n, couplings=couplings, model=model)
    out = []
    for k in k_list:
        row = _h_rows(model, couplings, theta, [k], geom)[0]
        spectra = full_spectra(setup, k, k, seed, realizations, workers=workers)
        d = (1.0 / (spectra - z)).sum(axis=1) / row["A_k"]
        dev2 = np.abs(d - d.mean()) ** 2
        out.append({
            "k": k,
            "r_k": row["r_k"],
            "realizations": realizations,
            "mean_re": float(d.real.mean()),
            "mean_im": float(d.imag.mean()),
            "var_re": float(d.real.var(ddof=1)),
            "var_im": float(d.imag.var(ddof=1)),
            "var_total": float(dev2.sum() / (realizations - 1)),
            "var_total_se": float(dev2.std(ddof=1) / math.sqrt(realizations)),
            "bound": trace_variance_bound(row, z),
        })
    return out
