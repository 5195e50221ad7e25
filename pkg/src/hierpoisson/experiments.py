"""Experiment bodies behind the CLI subcommands.

Each function takes an ExperimentConfig and returns an ExperimentResult:
a JSON-ready summary plus named CSV tables. Nothing here touches the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .ensemble import ModelSetup, block_spectra_ensemble, full_spectra
from .measures import block_count_array, default_epsilon, empirical_IDS, eta_samples, rescale_spectrum
from .operator import assemble_hamiltonian, block_eigenvalues, eigenvalues, truncation_gap
from .potential import intensity_F, normalizers, sample_potential
from .reference import (
    PoissonRef,
    cauchy_eta,
    expected_rescaled_count,
    poisson_sample,
    pure_random_points,
)
from .seeding import realization_seed, realization_seeds
from .stats import (
    dimension_threshold_report,
    exponential_gap_gof,
    grigelionis_sums,
    hypothesis_h_report,
    poisson_count_gof,
    trace_variance_decay,
)


@dataclass
class ExperimentResult:
    summary: dict
    tables: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return self.summary.get("verdict", "n/a")


def _strictly_decreasing(values) -> bool:
    values = list(values)
    return all(b < a for a, b in zip(values, values[1:]))


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def _setup(cfg: ExperimentConfig) -> ModelSetup:
    return ModelSetup(n=cfg.n, couplings=cfg.couplings(), model=cfg.model)


def _model_meta(cfg: ExperimentConfig) -> dict:
    return {"n": cfg.n, "d": cfg.d, "p": cfg.p, "model": cfg.model.to_dict()}


def _verdict(flags: dict) -> str:
    return "pass" if all(flags.values()) else "fail"


def run_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    geom, k = cfg.geom, cfg.k
    r = cfg.r if cfg.r is not None else cfg.r_for(k)
    c = cfg.couplings()
    seed = realization_seed(cfg.seed, 0)
    v = sample_potential(cfg.model, k, geom, seed)
    full = eigenvalues(assemble_hamiltonian(c, k, k, v, geom, seed=seed), check_residuals=True)
    tables = {"spectrum_full": (["index", "eigenvalue"], list(enumerate(full.eigenvalues.tolist())))}
    summary = {
        **_model_meta(cfg),
        "k": k,
        "r": r,
        "seed": seed,
        "size": len(full),
        "min": float(full.eigenvalues[0]),
        "max": float(full.eigenvalues[-1]),
        "near_ties_full": full.near_ties,
    }
    if r < k:
        trunc = np.sort(block_eigenvalues(c, k, r, v, geom).ravel())
        tables["spectrum_truncated"] = (["index", "eigenvalue"], list(enumerate(trunc.tolist())))
        shift = float(np.max(np.abs(trunc - full.eigenvalues)))
        summary.update({
            "max_eigenvalue_shift": shift,
            "coupling_tail": c.tail_at(r),
            "weyl_bound_holds": shift <= c.tail_at(r) + 1e-12,
            "resolvent_bound_at_z": truncation_gap(c, k, r, cfg.z),
        })
    return ExperimentResult(summary, tables)


def run_ids(cfg: ExperimentConfig) -> ExperimentResult:
    geom, k = cfg.geom, cfg.k
    r = cfg.r if cfg.r is not None else k
    A_k = normalizers(cfg.model, k, k, geom).A_k
    spectra = full_spectra(_setup(cfg), k, r, cfg.seed, cfg.realizations, cfg.workers)
    grid = cfg.grid()
    ids = np.array([empirical_IDS(s, A_k, grid) for s in spectra])
    mean = ids.mean(axis=0)
    se = ids.std(axis=0, ddof=1) / math.sqrt(len(ids)) if len(ids) > 1 else np.full(len(grid), math.nan)
    rows = [(e, m, s) for e, m, s in zip(grid, mean.tolist(), se.tolist())]
    summary = {**_model_meta(cfg), "k": k, "r": r, "A_k": A_k, "realizations": cfg.realizations,
               "total_mass": geom.volume(k) / A_k, "monotone": bool(np.all(np.diff(mean) >= 0))}
    return ExperimentResult(summary, {"ids": (["energy", "ids_mean", "ids_se"], rows)})


def _eta_entry(cfg, spectra, e, A_k, r, geom) -> dict:
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(A_k)
    value, se = _mean_se(eta_samples(spectra, e, A_k, eps))
    entry = {"e": e, "epsilon": eps, "eta": value, "eta_se": se,
             "pi_eta": math.pi * value, "pi_eta_se": math.pi * se,
             "density_bound_holds": bool(math.pi * value <= 1.0 + 3.0 * math.pi * se)}
    if cfg.base == "cauchy":
        entry["eta_exact_mean"] = cauchy_eta(cfg.couplings(), cfg.k, r, cfg.model, e, eps, geom)
    return entry


def run_poisson(cfg: ExperimentConfig) -> ExperimentResult:
    """Rescaled eigenvalue process of H_k near e: count and gap tests at the eta intensity."""
    geom, k = cfg.geom, cfg.k
    r = cfg.r if cfg.r is not None else k
    A_k = normalizers(cfg.model, k, k, geom).A_k
    seeds = realization_seeds(cfg.seed, cfg.realizations)
    spectra = full_spectra(_setup(cfg), k, r, cfg.seed, cfg.realizations, cfg.workers)
    eta = _eta_entry(cfg, spectra, cfg.e, A_k, r, geom)
    procs = [rescale_spectrum(s, cfg.e, A_k, cfg.half_width) for s in spectra]
    counts = np.array([p.count for p in procs])
    length = 2.0 * cfg.half_width
    count_gof = poisson_count_gof(counts, eta["eta"] * length)
    gap_gof = exponential_gap_gof(procs, eta["eta"])
    extra = [_eta_entry(cfg, spectra, e, A_k, r, geom) for e in (cfg.energies or [])]
    mean, se = _mean_se(counts)
    flags = {"count_gof": count_gof.passed(), "gap_gof": gap_gof.passed(),
             "density_bound": all(x["density_bound_holds"] for x in [eta, *extra])}
    summary = {
        **_model_meta(cfg), "k": k, "r": r, "e": cfg.e, "A_k": A_k, "half_width": cfg.half_width,
        "realizations": cfg.realizations, "mean_count": mean, "mean_count_se": se,
        "eta": eta, "eta_at_energies": extra, "count_gof": count_gof.to_dict(), "gap_gof": gap_gof.to_dict(),
        "checks": flags, "verdict": _verdict(flags),
    }
    tables = {
        "counts": (["realization", "seed", "count"], [(i, s, int(c)) for i, (s, c) in enumerate(zip(seeds, counts))]),
        "points": (["realization", "point"], [(i, float(x)) for i, p in enumerate(procs) for x in p.points]),
    }
    return ExperimentResult(summary, tables)


def run_pure_random(cfg: ExperimentConfig) -> ExperimentResult:
    """Diagonal model H = V built directly from the potential, no eigensolves."""
    geom, k, model = cfg.geom, cfg.k, cfg.model
    seeds = realization_seeds(cfg.seed, cfg.realizations)
    procs = [pure_random_points(model, k, cfg.e, geom, s, cfg.half_width) for s in seeds]
    counts = np.array([p.count for p in procs])
    expected = expected_rescaled_count(model, k, cfg.e, cfg.half_width, geom)
    F = intensity_F(model, cfg.e, k, geom)
    mean, se = _mean_se(counts)
    count_gof = poisson_count_gof(counts, expected)
    gap_gof = exponential_gap_gof(procs, F)
    flags = {"mean_within_3se": abs(mean - expected) <= 3.0 * se,
             "count_gof": count_gof.passed(), "gap_gof": gap_gof.passed()}
    summary = {
        **_model_meta(cfg), "k": k, "e": cfg.e, "A_k": normalizers(model, k, k, geom).A_k,
        "half_width": cfg.half_width, "realizations": cfg.realizations,
        "mean_count": mean, "mean_count_se": se, "expected_count": expected, "intensity_F": F,
        "count_gof": count_gof.to_dict(), "gap_gof": gap_gof.to_dict(), "checks": flags, "verdict": _verdict(flags),
    }
    tables = {"counts": (["realization", "seed", "count"],
                         [(i, s, int(c)) for i, (s, c) in enumerate(zip(seeds, counts))])}
    return ExperimentResult(summary, tables)


def grigelionis_level(cfg: ExperimentConfig, k: int, r: int) -> dict:
    """Block counts and bounds for the truncated ensemble at one volume level."""
    geom, model = cfg.geom, cfg.model
    interval = cfg.rescaled_interval()
    length = interval[1] - interval[0]
    blocks = block_spectra_ensemble(_setup(cfg), k, r, cfg.seed, cfg.realizations, cfg.workers)
    N = normalizers(model, k, r, geom)
    counts = np.stack([block_count_array(b, cfg.e, N.A_k, interval) for b in blocks])
    flat = blocks.reshape(blocks.shape[0], -1)
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(N.A_k)
    eta, eta_se = _mean_se(eta_samples(flat, cfg.e, N.A_k, eps))
    return {"k": k, "r": r, "counts": counts, "normalizers": N, "length": length,
            "eta": eta, "eta_se": eta_se, "epsilon": eps}


def run_grigelionis(cfg: ExperimentConfig) -> ExperimentResult:
    interval = cfg.rescaled_interval()
    levels = {}
    for k in cfg.levels():
        r = cfg.r if (cfg.r is not None and len(cfg.levels()) == 1) else cfg.r_for(k)
        levels[k] = grigelionis_level(cfg, k, r)
    rows = grigelionis_sums({k: lv["counts"] for k, lv in levels.items()}, interval)
    seeds = realization_seeds(cfg.seed, cfg.realizations)
    table_rows, count_rows = [], []
    for row in rows:
        lv = levels[row["k"]]
        q = lv["normalizers"].ratios
        length = lv["length"]
        mean_j, se_j = np.array(row["block_mean"]), np.array(row["block_mean_se"])
        f2, f2_se = np.array(row["block_factorial2"]), np.array(row["block_factorial2_se"])
        wegner = length * q
        minami = length**2 * float(np.sum(q * q))
        eta_I, eta_I_se = lv["eta"] * length, lv["eta_se"] * length
        combined_se = math.hypot(row["sum_p_ge1_se"], eta_I_se)
        row.update({
            "r_k": lv["r"],
            "A_k": lv["normalizers"].A_k,
            "wegner_bound": wegner.tolist(),
            "wegner_holds": bool(np.all(mean_j <= wegner + 3.0 * se_j)),
            "minami_bound": minami,
            "minami_holds": bool(row["sum_p_ge2"] <= minami + 3.0 * row["sum_p_ge2_se"]),
            "factorial_moment_holds": bool(np.all(f2 <= mean_j**2 + 3.0 * f2_se)),
            "eta": lv["eta"], "eta_se": lv["eta_se"], "epsilon": lv["epsilon"],
            "eta_times_length": eta_I, "eta_times_length_se": eta_I_se,
            "first_moment_within_3se": bool(abs(row["sum_p_ge1"] - eta_I) <= 3.0 * combined_se),
        })
        table_rows.append((row["k"], lv["r"], row["max_p_ge1"], row["sum_p_ge1"], row["sum_p_ge1_se"],
                           row["sum_p_ge2"], row["sum_p_ge2_se"], minami, eta_I, eta_I_se))
        for i, (seed, per_block) in enumerate(zip(seeds, lv["counts"])):
            count_rows.extend((row["k"], i, seed, j + 1, int(cnt)) for j, cnt in enumerate(per_block))
    trends = {
        "max_p_ge1_strictly_decreasing": _strictly_decreasing(r["max_p_ge1"] for r in rows),
        "sum_p_ge2_strictly_decreasing": _strictly_decreasing(r["sum_p_ge2"] for r in rows),
    }
    flags = {"wegner": all(r["wegner_holds"] for r in rows), "minami": all(r["minami_holds"] for r in rows),
             "factorial_moment": all(r["factorial_moment_holds"] for r in rows)}
    if len(rows) > 1:
        flags.update(trends)
    summary = {**_model_meta(cfg), "e": cfg.e, "interval": list(interval), "theta": cfg.resolved_theta(),
               "realizations": cfg.realizations, "levels": rows, "trends": trends, "checks": flags,
               "verdict": _verdict(flags)}
    tables = {
        "grigelionis": (["k", "r_k", "max_p_ge1", "sum_p_ge1", "sum_p_ge1_se", "sum_p_ge2", "sum_p_ge2_se",
                         "minami_bound", "eta_times_length", "eta_times_length_se"], table_rows),
        "block_counts": (["k", "realization", "seed", "j", "count"], count_rows),
    }
    return ExperimentResult(summary, tables)


_H_COLUMNS = ["k", "r_k", "A_k", "sup_ratio", "sum_sq_ratio", "poisson_condition", "weak_condition"]


def run_hypothesis_h(cfg: ExperimentConfig) -> ExperimentResult:
    theta = cfg.resolved_theta()
    couplings = cfg.couplings() if (cfg.p is not None or cfg.d is not None) else None
    rep = hypothesis_h_report(cfg.model, couplings, theta, cfg.levels(), cfg.geom)
    flags = {
        "sup_ratio_strictly_decreasing": _strictly_decreasing(rep.column("sup_ratio")),
        "sum_sq_ratio_strictly_decreasing": _strictly_decreasing(rep.column("sum_sq_ratio")),
        "slope_within_tolerance": rep.within_tolerance,
    }
    summary = {**_model_meta(cfg), **rep.to_dict(), "checks": flags, "verdict": _verdict(flags)}
    rows = [tuple(row[c] for c in _H_COLUMNS) for row in rep.rows]
    return ExperimentResult(summary, {"hypothesis_h": (_H_COLUMNS, rows)})


def run_threshold(cfg: ExperimentConfig) -> ExperimentResult:
    rep = dimension_threshold_report(cfg.model, cfg.spec, cfg.theta, cfg.levels(), cfg.geom)
    summary = {**_model_meta(cfg), **rep.to_dict(), "verdict": rep.extra["verdict"]}
    rows = [tuple(row[c] for c in _H_COLUMNS) for row in rep.rows]
    return ExperimentResult(summary, {"threshold": (_H_COLUMNS, rows)})


def run_trace_variance(cfg: ExperimentConfig) -> ExperimentResult:
    theta = cfg.resolved_theta()
    rows = trace_variance_decay(cfg.model, cfg.couplings(), cfg.geom, cfg.z, cfg.levels(),
                                cfg.realizations, cfg.seed, theta, cfg.workers)
    flags = {
        "variance_strictly_decreasing": _strictly_decreasing(r["var_total"] for r in rows),
        "below_bound": all(r["var_total"] <= r["bound"] + 3.0 * r["var_total_se"] for r in rows),
    }
    cols = ["k", "r_k", "var_re", "var_im", "var_total", "var_total_se", "bound"]
    summary = {**_model_meta(cfg), "theta": theta, "z": [cfg.z_re, cfg.z_im], "rows": rows,
               "checks": flags, "verdict": _verdict(flags)}
    return ExperimentResult(summary, {"trace_variance": (cols, [tuple(r[c] for c in cols) for r in rows])})


def _reject_rate(pvalues, alpha: float) -> dict:
    reps = len(pvalues)
    rate = float(np.mean(np.asarray(pvalues) < alpha))
    se = math.sqrt(alpha * (1 - alpha) / reps)
    return {"alpha": alpha, "rate": rate, "binomial_se": se, "holds": rate <= alpha + 2.0 * se}


def run_selftest(cfg: ExperimentConfig) -> ExperimentResult:
    """Null calibration and power checks of both tests against reference samplers."""
    reps, size = cfg.repetitions, max(cfg.realizations, 100)
    intensity = 1.0 / math.pi
    mean = intensity * 2.0 * cfg.half_width
    root = np.random.SeedSequence(cfg.seed)
    count_p, gap_p = [], []
    for child in root.spawn(reps):
        rng = np.random.default_rng(child)
        count_p.append(poisson_count_gof(rng.poisson(mean, size), mean).p_value)
        ref = PoissonRef(intensity, cfg.half_width)
        procs = [poisson_sample(ref, s) for s in child.spawn(size)]
        gap_p.append(exponential_gap_gof(procs, intensity).p_value)
    calibration = {
        "count": [_reject_rate(count_p, a) for a in (0.05, 0.01)],
        "gap": [_reject_rate(gap_p, a) for a in (0.05, 0.01)],
    }
    power_seq = np.random.SeedSequence([cfg.seed, 1])
    big = [poisson_sample(PoissonRef(intensity, cfg.half_width), s) for s in power_seq.spawn(20 * size)]
    picket = [rescale_spectrum(np.linspace(-cfg.half_width, cfg.half_width, 5), 0.0, 1.0, cfg.half_width)] * size
    power = {
        "constant_counts": poisson_count_gof(np.full(size, 3), 3.0).p_value,
        "picket_fence": exponential_gap_gof(picket, intensity).p_value,
        "double_intensity": exponential_gap_gof(big, 2.0 * intensity).p_value,
    }
    flags = {
        "calibration": all(x["holds"] for v in calibration.values() for x in v),
        "power": all(p < 1e-3 for p in power.values()),
    }
    summary = {"repetitions": reps, "sample_size": size, "intensity": intensity, "calibration": calibration,
               "power_p_values": power, "checks": flags, "verdict": _verdict(flags)}
    rows = [(i, cp, gp) for i, (cp, gp) in enumerate(zip(count_p, gap_p))]
    return ExperimentResult(summary, {"selftest_pvalues": (["repetition", "count_p", "gap_p"], rows)})


COMMANDS = {
    "spectrum": (run_spectrum, True),
    "ids": (run_ids, True),
    "poisson": (run_poisson, True),
    "pure-random": (run_pure_random, False),
    "grigelionis": (run_grigelionis, True),
    "hypothesis-h": (run_hypothesis_h, False),
    "threshold": (run_threshold, False),
    "trace-variance": (run_trace_variance, True),
    "selftest": (run_selftest, False),
}
