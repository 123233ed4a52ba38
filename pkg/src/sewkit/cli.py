"""Experiment runner: `sewkit <experiment> --config file.json [--seed N]
[--out DIR] [--workers K]`.

Each experiment writes four artifact kinds into the output directory:
resolved-config.json (every default made explicit), results.csv (fixed
column order), summary.json (slopes, ratios and pass/fail verdicts), and
SVG plots.  Runs are deterministic for a fixed seed: per-path streams are
counter-split from the seed, reductions happen in fixed path order, and the
worker count only partitions work, never reorders it.
"""

import argparse
import concurrent.futures
import csv
import json
import math
import os
import sys
import time

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sewkit"

import matplotlib.pyplot as plt
import numpy as np

from . import _kernels
from . import controls as ctrl
from . import fbm
from . import functionals as fl
from . import kolmogorov as kol
from . import mtype as mt
from . import sewing as sw
from . import spectral as sp

_INF_TOKENS = {"inf", "Infinity", "INF"}


def _num(x):
    """Config numbers, with "inf" accepted for the extended exponents."""
    if isinstance(x, str) and x in _INF_TOKENS:
        return math.inf
    return float(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return "inf" if math.isinf(f) else f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


_DEFAULTS = {
    "sew-study": {
        "seed": 42,
        "germ": {"name": "ito"},
        "H": 0.5,
        "T": 1.0,
        "n_grid": 2048,
        "m_past": 8.0,
        "paths": 256,
        "levels": [2, 9],
        "control": {"kind": "linear"},
    },
    "fbm-check": {
        "seed": 1,
        "paths": 20000,
        "n_grid": 1152,
        "m_past": 8.0,
        "H_list": [0.25, 0.5, 0.75],
        "pairs": [[0.25, 0.5], [0.25, 0.75], [0.5, 1.0]],
        "chunk": 4096,
    },
    "functional-rate": {
        "seed": 3,
        "H": 0.5,
        "T": 1.0,
        "paths": 128,
        "n_time": 1024,
        "m_past": 2.0,
        "L": 6.0,
        "n_space": 256,
        "profile": {"name": "plane_wave", "k": 2},
        "gamma": 0.2,
        "theta": "inf",
        "levels": [2, 7],
        "t": 1.0,
    },
    "regularity-probe": {
        "seed": 11,
        "H": 0.5,
        "T": 1.0,
        "paths": 32,
        "n_time": 1024,
        "m_past": 8.0,
        "L": 6.0,
        "n_space": 512,
        "profile": {"name": "dirac"},
        "alpha": -0.51,
        "p": 2,
        "q": 2,
        "theta": 2,
        "gammas": [0.5, 0.7, 1.0, 1.3, 1.5],
        "steps": 3,
        "t": 1.0,
    },
    "occupation": {
        "seed": 5,
        "H": 0.5,
        "T": 1.0,
        "paths": 16,
        "n_time": 4096,
        "m_past": 2.0,
        "L": 6.0,
        "n_space": 1024,
        "g": {"name": "gaussian_bump", "sigma2": 0.09},
        "t": 1.0,
    },
    "mtype": {
        "seed": 7,
        "mode": "both",
        "Ns": [4, 8, 12],
        "type_Ns": [4, 6, 8, 12, 16],
        "p_list": [1.5, 2.0, 3.0],
        "k": 3,
        "reps": 4,
        "g_level": 1,
    },
    "kolmogorov": {
        "seed": 9,
        "H": 0.5,
        "T": 1.0,
        "paths": 500,
        "n_grid": 4096,
        "m_past": 8.0,
        "betas": [0.3, 0.375, 0.45],
        "levels": [8, 10, 12],
        "m": 8,
    },
    "besov-bench": {
        "seed": 2,
        "n_freqs": [256, 1024],
        "n_cells": [512, 2048],
        "repeats": 3,
    },
}


def _merge_config(exp, user):
    base = json.loads(json.dumps(_DEFAULTS[exp]))
    for key, val in user.items():
        if key not in base:
            raise SystemExit(
                f"config error: unknown key {key!r} for {exp} "
                f"(known: {sorted(base)})"
            )
        if isinstance(base[key], dict) and isinstance(val, dict):
            base[key] = {**base[key], **val}
        else:
            base[key] = val
    return base


def _chunked(seq, n_chunks):
    size = max(1, math.ceil(len(seq) / n_chunks))
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def _map_ordered(fn, items, workers):
    """Apply fn to items, optionally in a thread pool; results keep order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_outputs(outdir, exp, cfg, rows, fieldnames, summary, figures):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "resolved-config.json"), "w") as fh:
        json.dump(_jsonable({"experiment": exp, **cfg}), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(outdir, "results.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in fieldnames})
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, fig in figures:
        fig.savefig(os.path.join(outdir, name), format="svg", metadata={"Date": None})
        plt.close(fig)


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _loglog_figure(xs, ys, xlabel, ylabel, title, fit=None):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(xs, ys, "o-")
    if fit is not None:
        slope, intercept = fit
        ax.loglog(xs, np.exp(intercept) * np.asarray(xs) ** slope, "--",
                  label=f"slope {slope:.3f}")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    return fig


# -- experiment handlers -------------------------------------------------------


def _control_from_cfg(cfg_control):
    return ctrl.control_from_dict(cfg_control)


def _young_fn(name):
    table = {
        "id": (lambda t: t, lambda t: np.ones_like(t)),
        "sin": (np.sin, np.cos),
        "cos": (np.cos, lambda t: -np.sin(t)),
        "poly2": (lambda t: t**2, lambda t: 2.0 * t),
    }
    if name not in table:
        raise SystemExit(f"config error: unknown young path {name!r}")
    return table[name]


def _run_sew_study(cfg, workers):
    germ_cfg = cfg["germ"]
    name = germ_cfg.get("name", "ito")
    control = _control_from_cfg(cfg["control"])
    lo, hi = cfg["levels"]
    levels = list(range(int(lo), int(hi) + 1))
    T = _num(cfg["T"])
    reference = None
    if name == "young":
        f, df = _young_fn(germ_cfg.get("f", "sin"))
        g, dg = _young_fn(germ_cfg.get("g", "cos"))
        germ = sw.young_germ(f, g)
        ctx = None
        rr = np.linspace(0.0, T, 1 << 18)
        reference = float(np.trapezoid(f(rr) * dg(rr), rr))
    elif name in ("ito", "fbm_square", "zero"):
        params = fbm.FbmParams(H=_num(cfg["H"]), T=T, m_past=_num(cfg["m_past"]),
                               n_grid=int(cfg["n_grid"]))
        model = fbm.model_for(params)
        ctx = model.sample_batch(cfg["seed"], int(cfg["paths"]))
        germ = {"ito": sw.ito_germ, "fbm_square": sw.fbm_square_germ,
                "zero": sw.zero_germ}[name]()
        if name == "ito":
            bT = ctx.b(T)
            reference = 0.5 * (bT**2 - T)
        elif name == "fbm_square":
            reference = ctx.b(T) ** 2 - ctx.b(0.0) ** 2
    elif name == "table":
        pts = np.asarray(germ_cfg["points"], dtype=float)
        germ = sw.table_germ(pts, np.asarray(germ_cfg["table"], dtype=float))
        ctx = None
    else:
        raise SystemExit(f"config error: unknown germ {name!r}")

    res = sw.sew(germ, ctx, control, 0.0, T, levels)
    rows = res.trace_rows()
    summary = {
        "germ": name,
        "nondecaying": res.nondecaying,
        "finest_level": res.levels[-1],
        "finest_norm": res.value_norm[-1],
    }
    figures = []
    if reference is not None:
        study = sw.convergence_study(
            germ, [ctx], control, lambda _ctx: reference, 0.0, T, levels
        )
        for row, err in zip(rows, study.rms_error):
            row["rms_error"] = err
        summary["slope"] = study.slope
        summary["degenerate"] = study.degenerate
        if not study.degenerate:
            figures.append((
                "error-vs-mesh.svg",
                _loglog_figure(study.mesh_w, study.rms_error, "mesh_w",
                               "rms error", f"{name} sewing error",
                               fit=(study.slope, study.intercept)),
            ))
    fields = ["level", "mesh_w", "value_norm", "cauchy_diff"]
    if reference is not None:
        fields.append("rms_error")
    return rows, fields, summary, figures


def _run_fbm_check(cfg, workers):
    rows = []
    summary = {"H": {}}
    pairs = [(float(u), float(v)) for u, v in cfg["pairs"]]
    n_paths = int(cfg["paths"])
    for H in [_num(h) for h in cfg["H_list"]]:
        params = fbm.FbmParams(H=H, T=1.0, m_past=_num(cfg["m_past"]),
                               n_grid=int(cfg["n_grid"]))
        model = fbm.model_for(params)
        times = sorted({t for uv in pairs for t in uv})
        cond = [(u, v) for u, v in pairs]
        ens = model.sample_batch(cfg["seed"], n_paths, keep_dw=False,
                                 times=times, cond_pairs=cond,
                                 chunk=int(cfg["chunk"]))
        worst_cov = 0.0
        worst_z = 0.0
        for u, v in pairs:
            bu, bv = ens.b(u), ens.b(v)
            if H == 0.5:
                cov = float(np.mean(bu * bv))
                target = min(u, v)
                rel = abs(cov - target) / target
                worst_cov = max(worst_cov, rel)
                rows.append({"H": H, "u": u, "v": v, "stat": "cov",
                             "value": cov, "target": target, "score": rel})
            resid = bv - ens.cond_mean(u, v)
            var = float(np.mean(resid**2))
            target = model.rho_discrete(u, v)
            se = float(np.std(resid**2, ddof=1) / np.sqrt(n_paths))
            z = abs(var - target) / se
            worst_z = max(worst_z, z)
            rows.append({"H": H, "u": u, "v": v, "stat": "cond_var",
                         "value": var, "target": target, "score": z})
        summary["H"][str(H)] = {"worst_cov_rel": worst_cov if H == 0.5 else None,
                                "worst_var_z": worst_z}
    fig, ax = plt.subplots(figsize=(5, 4))
    for H in [_num(h) for h in cfg["H_list"]]:
        sub = [(r["v"] - r["u"], r["value"]) for r in rows
               if r["H"] == H and r["stat"] == "cond_var"]
        sub.sort()
        ax.loglog([g for g, _ in sub], [v for _, v in sub], "o-", label=f"H={H}")
    ax.set_xlabel("v - u")
    ax.set_ylabel("Var(B_v - E_u B_v)")
    ax.legend()
    fig.tight_layout()
    fields = ["H", "u", "v", "stat", "value", "target", "score"]
    return rows, fields, summary, [("conditional-variance.svg", fig)]


def _profile_from_cfg(cfg_prof, spec):
    name = cfg_prof["name"]
    if name == "constant":
        return fl.constant_profile(spec, _num(cfg_prof.get("value", 1.0)))
    if name == "plane_wave":
        return fl.plane_wave_profile(spec, int(cfg_prof.get("k", 2)))
    if name == "gaussian_bump":
        return fl.gaussian_bump_profile(spec, _num(cfg_prof.get("sigma2", 0.09)))
    if name == "dirac":
        return fl.dirac_profile(spec)
    if name == "besov_random":
        return fl.besov_random_profile(spec, _num(cfg_prof.get("alpha", -0.25)),
                                       int(cfg_prof.get("seed", 0)))
    raise SystemExit(f"config error: unknown profile {name!r}")


def _run_functional_rate(cfg, workers):
    H = _num(cfg["H"])
    T = _num(cfg["T"])
    t = _num(cfg["t"])
    spec = sp.GridSpec(1, int(cfg["n_space"]), _num(cfg["L"]))
    profile = _profile_from_cfg(cfg["profile"], spec)
    n_time = int(cfg["n_time"])
    if H == 0.5:
        params = fbm.FbmParams(H=H, T=T, m_past=8.0, n_grid=n_time)
    else:
        mp = _num(cfg["m_past"])
        params = fbm.FbmParams(H=H, T=T, m_past=mp,
                               n_grid=int(round(n_time * (1.0 + mp / T))))
    model = fbm.model_for(params)
    ens = model.sample_batch(cfg["seed"], int(cfg["paths"]))
    theta = _num(cfg["theta"])
    gamma = _num(cfg["gamma"])
    budget = fl.regularity_budget(H, 1, theta, 0.0, 2.0, 2.0)
    envelope = budget.rate_envelope(gamma)
    germ = fl.make_functional_germ(profile)
    lo, hi = cfg["levels"]
    levels = list(range(int(lo), int(hi) + 1))
    study = sw.convergence_study(
        germ, [ens], ctrl.LinearControl(),
        lambda e: fl.functional_reference_batch(profile, e, t), 0.0, t, levels
    )
    rows = [
        {"level": h, "mesh_w": m_, "rms_error": r}
        for h, m_, r in zip(study.levels, study.mesh_w, study.rms_error)
    ]
    summary = {
        "profile": profile.name,
        "H": H,
        "gamma": gamma,
        "envelope": envelope,
        "slope": study.slope,
        "degenerate": "exact" if study.degenerate else None,
        "n_time": model.n_fut,
    }
    figures = []
    if not study.degenerate:
        fine = float(np.polyfit(np.log(study.mesh_w[-3:]),
                                np.log(study.rms_error[-3:]), 1)[0])
        summary["fine_slope"] = fine
        summary["slope_within_envelope"] = bool(abs(study.slope - envelope) <= 0.15)
        summary["slope_self_consistent"] = bool(abs(study.slope - fine) <= 0.15)
        figures.append((
            "rate.svg",
            _loglog_figure(study.mesh_w, study.rms_error, "mesh_w", "rms error",
                           f"functional rate H={H}",
                           fit=(study.slope, study.intercept)),
        ))
    return rows, ["level", "mesh_w", "rms_error"], summary, figures


def _run_regularity_probe(cfg, workers):
    H = _num(cfg["H"])
    T = _num(cfg["T"])
    spec = sp.GridSpec(1, int(cfg["n_space"]), _num(cfg["L"]))
    profile = _profile_from_cfg(cfg["profile"], spec)
    n_time = int(cfg["n_time"])
    if H == 0.5:
        params = fbm.FbmParams(H=H, T=T, m_past=8.0, n_grid=n_time)
    else:
        mp = _num(cfg["m_past"])
        params = fbm.FbmParams(H=H, T=T, m_past=mp,
                               n_grid=int(round(n_time * (1.0 + mp / T))))
    model = fbm.model_for(params)
    n_paths = int(cfg["paths"])

    def draw(idx):
        return [model.sample(cfg["seed"], index=i) for i in idx]

    chunks = _chunked(list(range(n_paths)), max(1, workers))
    paths = [p for chunk in _map_ordered(draw, chunks, workers) for p in chunk]
    alpha, p, q, theta = (_num(cfg[k]) for k in ("alpha", "p", "q", "theta"))
    budget = fl.regularity_budget(H, 1, theta, alpha, p, q)
    b = sp.BesovIndices(alpha, p, q)
    gammas = [_num(g) for g in cfg["gammas"]]
    rep = fl.regularity_probe(profile, paths, _num(cfg["t"]), gammas, b,
                              steps=int(cfg["steps"]))
    rows = []
    for ig, gamma in enumerate(rep["gammas"]):
        for k, meta in enumerate(rep["steps"]):
            rows.append({
                "gamma": gamma, "step": k, "n_time": meta["n_time"],
                "n_space": meta["n_space"], "stat": rep["stats"][ig, k],
            })
    summary = {
        "budget": budget.as_dict(),
        "gamma_max": budget.gamma_max,
        "gammas": rep["gammas"],
        "slopes": rep["slopes"],
        "last_ratio": rep["last_ratio"],
    }
    fig, ax = plt.subplots(figsize=(5, 4))
    for ig, gamma in enumerate(rep["gammas"]):
        ax.semilogy(range(len(rep["steps"])), rep["stats"][ig], "o-",
                    label=f"gamma={gamma}")
    ax.set_xlabel("refinement step")
    ax.set_ylabel("Besov-norm statistic")
    ax.axhline(0, lw=0)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fields = ["gamma", "step", "n_time", "n_space", "stat"]
    return rows, fields, summary, [("per-gamma-norms.svg", fig)]


def _run_occupation(cfg, workers):
    H = _num(cfg["H"])
    spec = sp.GridSpec(1, int(cfg["n_space"]), _num(cfg["L"]))
    gcfg = cfg["g"]
    if gcfg["name"] == "gaussian_bump":
        g = sp.gaussian_bump(spec, _num(gcfg.get("sigma2", 0.09)))
    elif gcfg["name"] == "constant":
        g = sp.constant_one(spec)
    else:
        raise SystemExit(f"config error: unknown g {gcfg['name']!r}")
    T = _num(cfg["T"])
    n_time = int(cfg["n_time"])
    if H == 0.5:
        params = fbm.FbmParams(H=H, T=T, m_past=8.0, n_grid=n_time)
    else:
        mp = _num(cfg["m_past"])
        params = fbm.FbmParams(H=H, T=T, m_past=mp,
                               n_grid=int(round(n_time * (1.0 + mp / T))))
    model = fbm.model_for(params)
    t = _num(cfg["t"])

    def one(i):
        path = model.sample(cfg["seed"], index=i)
        mass = fl.occupation_check(path, sp.constant_one(spec), t)
        return {"path": i, "residual": fl.occupation_check(path, g, t),
                "mass_residual": mass}

    chunks = _chunked(list(range(int(cfg["paths"]))), max(1, workers))
    rows = [r for chunk in _map_ordered(lambda c: [one(i) for i in c], chunks,
                                        workers) for r in chunk]
    res = [r["residual"] for r in rows]
    summary = {
        "max_residual": max(res),
        "median_residual": float(np.median(res)),
        "max_mass_residual": max(r["mass_residual"] for r in rows),
        "g": gcfg["name"],
    }
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([r["path"] for r in rows], res, "o")
    ax.set_xlabel("path")
    ax.set_ylabel("relative residual")
    ax.set_title("occupation identity")
    fig.tight_layout()
    return rows, ["path", "residual", "mass_residual"], summary, [
        ("occupation-residuals.svg", fig)
    ]


def _run_mtype(cfg, workers):
    rows = []
    summary = {}
    if cfg["mode"] in ("type", "both"):
        st = mt.type_study(cfg["type_Ns"], 1.5, 2.0)
        for N, r in zip(st["Ns"], st["ratios"]):
            rows.append({"check": "type_ratio", "p": 1.5, "N": N, "value": r})
        summary["type_slope_vs_exponent2"] = st["slope"]
        st1 = mt.type_study(cfg["type_Ns"], 1.5, 1.5)
        summary["type_ratio_native_max_dev"] = float(
            max(abs(r - 1.0) for r in st1["ratios"])
        )
    if cfg["mode"] in ("doob", "both"):
        doob = {}
        for p in [_num(x) for x in cfg["p_list"]]:
            p_hat = min(2.0, p)
            cs = []
            for N in cfg["Ns"]:
                worst = mt.doob_min_constant(
                    mt.sign_sequence(int(N)), p_hat, p, p, int(cfg["g_level"]), p=p
                )
                for kdim in range(2, int(cfg["k"]) + 2):
                    for rep in range(int(cfg["reps"])):
                        seed = cfg["seed"] + 7919 * int(N) + 101 * kdim + rep
                        ys = mt.drift_noise_sequence(int(N), kdim, seed,
                                                     drift_scale=0.0)
                        worst = max(worst, mt.doob_min_constant(
                            ys, p_hat, p, p, int(cfg["g_level"]), p=p))
                cs.append(worst)
                rows.append({"check": "doob_min_C", "p": p, "N": int(N),
                             "value": worst})
            slope = float(np.polyfit(np.log(cfg["Ns"]), np.log(cs), 1)[0])
            doob[str(p)] = {"C": cs, "spread": max(cs) / min(cs), "slope": slope}
        summary["doob"] = doob
    fig, ax = plt.subplots(figsize=(5, 4))
    for check in ("type_ratio", "doob_min_C"):
        pts = [(r["N"], r["value"]) for r in rows if r["check"] == check]
        if pts:
            ax.plot([n for n, _ in pts], [v for _, v in pts], "o",
                    label=check)
    ax.set_xlabel("N")
    ax.legend()
    fig.tight_layout()
    return rows, ["check", "p", "N", "value"], summary, [("mtype.svg", fig)]


def _run_kolmogorov(cfg, workers):
    H = _num(cfg["H"])
    params = fbm.FbmParams(H=H, T=_num(cfg["T"]), m_past=_num(cfg["m_past"]),
                           n_grid=int(cfg["n_grid"]))
    model = fbm.model_for(params)
    control = ctrl.LinearControl()
    levels = [int(h) for h in cfg["levels"]]
    tree = kol.sample_on_tree(control, 0.0, model.T, max(levels))
    n_pts = tree.levels[-1].size
    if model.n_fut + 1 < n_pts or model.n_fut % (n_pts - 1):
        raise SystemExit("config error: n_grid must resolve the deepest level")
    n_paths = int(cfg["paths"])

    def draw(chunk):
        e = model.sample_batch(cfg["seed"], len(chunk), start=chunk[0],
                               keep_dw=False)
        stride = model.n_fut // (n_pts - 1)
        return e.values[:, 0, ::stride]

    chunks = _chunked(list(range(n_paths)), max(1, workers))
    vals = np.concatenate(_map_ordered(draw, chunks, workers), axis=0)
    betas = [_num(b) for b in cfg["betas"]]
    rep = kol.tail_study(tree, vals, control, betas, levels, m=_num(cfg["m"]))
    rows = rep.rows()
    summary = {
        "betas": rep.betas,
        "levels": rep.levels,
        "lm_norms": rep.lm_norms,
        "trend_slopes": rep.trend_slopes,
        "norm_ratios": (rep.lm_norms[:, -1] / rep.lm_norms[:, 0]),
    }
    fig, ax = plt.subplots(figsize=(5, 4))
    for ib, beta in enumerate(rep.betas):
        ax.plot(rep.levels, rep.lm_norms[ib], "o-", label=f"beta={beta}")
    ax.set_xlabel("h_max")
    ax.set_ylabel(f"L^{cfg['m']} norm of M_beta")
    ax.legend()
    fig.tight_layout()
    fields = ["beta", "level", "q25", "median", "q75", "mean", "lm_norm"]
    return rows, fields, summary, [("modulus-norms.svg", fig)]


def _run_besov_bench(cfg, workers):
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for nf in cfg["n_freqs"]:
        for nc in cfg["n_cells"]:
            xi = np.linspace(-50.0, 50.0, int(nf))
            rho = np.abs(rng.standard_normal(int(nc))) * 1e-3
            shift = rng.standard_normal(int(nc))
            weight = np.full(int(nc), 1.0 / nc)
            timings = {}
            for backend, fn in (
                ("numpy", _kernels.heat_phase_sum_1d_numpy),
                ("numba", _kernels.heat_phase_sum_1d_numba),
            ):
                if fn is None:
                    continue
                fn(xi, rho, shift, weight)  # warm-up / compile
                best = math.inf
                for _ in range(int(cfg["repeats"])):
                    t0 = time.perf_counter()
                    fn(xi, rho, shift, weight)
                    best = min(best, time.perf_counter() - t0)
                timings[backend] = best
                rows.append({"n_freq": nf, "n_cells": nc, "backend": backend,
                             "seconds": best})
            if "numba" in timings:
                rows.append({"n_freq": nf, "n_cells": nc, "backend": "speedup",
                             "seconds": timings["numpy"] / timings["numba"]})
    summary = {
        "numba_enabled": _kernels.numba_enabled(),
        "speedups": [r["seconds"] for r in rows if r["backend"] == "speedup"],
    }
    fig, ax = plt.subplots(figsize=(5, 4))
    sp_rows = [r for r in rows if r["backend"] == "speedup"]
    ax.bar(range(len(sp_rows)), [r["seconds"] for r in sp_rows])
    ax.set_xticks(range(len(sp_rows)))
    ax.set_xticklabels([f"{r['n_freq']}x{r['n_cells']}" for r in sp_rows],
                       rotation=30, fontsize=7)
    ax.set_ylabel("numpy time / numba time")
    fig.tight_layout()
    fields = ["n_freq", "n_cells", "backend", "seconds"]
    return rows, fields, summary, [("kernel-speedup.svg", fig)]


_HANDLERS = {
    "sew-study": _run_sew_study,
    "fbm-check": _run_fbm_check,
    "functional-rate": _run_functional_rate,
    "regularity-probe": _run_regularity_probe,
    "occupation": _run_occupation,
    "mtype": _run_mtype,
    "kolmogorov": _run_kolmogorov,
    "besov-bench": _run_besov_bench,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sewkit", description="sewing-lemma experiment runner"
    )
    parser.add_argument("experiment", choices=sorted(_HANDLERS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output directory (or $SEWKIT_OUT)")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    user = {}
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
    try:
        cfg = _merge_config(args.experiment, user)
    except SystemExit:
        raise
    if args.seed is not None:
        cfg["seed"] = args.seed
    outdir = args.out or os.environ.get("SEWKIT_OUT") or os.path.join(
        "sewkit-out", args.experiment
    )
    t0 = time.perf_counter()
    try:
        rows, fields, summary, figures = _HANDLERS[args.experiment](
            cfg, max(1, args.workers)
        )
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = {"experiment": args.experiment, "seed": cfg["seed"],
               "elapsed_seconds": round(time.perf_counter() - t0, 3), **summary}
    _write_outputs(outdir, args.experiment, cfg, rows, fields, summary, figures)
    print(f"{args.experiment}: wrote {len(rows)} result rows to {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
