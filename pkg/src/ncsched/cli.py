"""Command-line pipeline: certify | design | simulate | generate | report.

Configs and artifacts are JSON (matrices row-major as nested lists),
trajectories are CSV, plots are self-contained SVG. All writes are atomic
(temp file + rename) and byte-deterministic for a fixed config and seed.

Exit codes: 0 success, 1 config/input error, 2 certification failure,
3 cycle search exhausted, 4 GAS check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import linalg
from .certificates import (
    AssumptionViolation,
    CertificateError,
    LambdaGrid,
    ModeCertificate,
    NoFeasibleRate,
    PlantCertificate,
    PlantSpec,
    certify_all,
    lqr_gain,
)
from .cycles import (
    CycleDesign,
    CycleSearchError,
    SearchBudget,
    SearchExhausted,
    design_cycle,
)
from .graph import vertex_count
from .schedule import ScheduleLogic, build_schedule
from .sim import gas_report, simulate
from .schedule import InsufficientHorizon

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERTIFY = 2
EXIT_SEARCH = 3
EXIT_GAS = 4

TRAJECTORY_HEADER = ["run_id", "plant", "t", "mode", "norm_x", "v_value"]

_GENERATION_MAX_REJECTS = 10_000


class ConfigError(Exception):
    pass


class GenerationStalled(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SimSettings:
    horizon: float
    sample_dt: float
    n_initial: int
    init_box_halfwidth: float
    rng_seed: int


@dataclass(frozen=True)
class NcsConfig:
    plants: list[PlantSpec]
    capacity: int
    grid: LambdaGrid
    kappa_floor: float
    search: SearchBudget
    sim: SimSettings


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing field '{key}' in {where}")
    return obj[key]


def _matrix(obj, where: str) -> np.ndarray:
    try:
        return linalg.as_matrix(obj)
    except Exception as exc:
        raise ConfigError(f"bad matrix at {where}: {exc}") from exc


def load_config(path: str) -> NcsConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    plants_raw = _field(raw, "plants", "config")
    if not isinstance(plants_raw, list) or len(plants_raw) < 2:
        raise ConfigError("config needs a list of at least 2 plants")
    capacity = int(_field(raw, "capacity", "config"))
    if not 0 < capacity < len(plants_raw):
        raise ConfigError(
            f"InvalidCapacity: need 0 < capacity < {len(plants_raw)}, got {capacity}"
        )

    lqr_raw = raw.get("lqr")
    plants = []
    for i, p in enumerate(plants_raw, start=1):
        where = f"plants[{i - 1}]"
        a = _matrix(_field(p, "A", where), where + ".A")
        b = _matrix(_field(p, "B", where), where + ".B")
        if "K" in p and p["K"] is not None:
            k = _matrix(p["K"], where + ".K")
        else:
            if lqr_raw is None:
                raise ConfigError(f"{where}: no gain K and no 'lqr' settings")
            d = a.shape[0]
            q = float(lqr_raw.get("q_scale", 1.0)) * np.eye(d)
            r = float(lqr_raw.get("r_scale", 1.0)) * np.eye(b.shape[1])
            k = -lqr_gain(a, b, q, r)
        try:
            plants.append(PlantSpec(index=i, a=a, b=b, k=k))
        except linalg.DimensionError as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    g = _field(raw, "lambda_grid", "config")
    try:
        grid = LambdaGrid(
            s_min=float(_field(g, "lambda_s_min", "lambda_grid")),
            s_max=float(_field(g, "lambda_s_max", "lambda_grid")),
            h_s=float(_field(g, "h_s", "lambda_grid")),
            u_min=float(_field(g, "lambda_u_min", "lambda_grid")),
            u_max=float(g.get("lambda_u_max", 0.0)),
            h_u=float(_field(g, "h_u", "lambda_grid")),
        )
    except ValueError as exc:
        raise ConfigError(f"lambda_grid: {exc}") from exc

    s = raw.get("search", {})
    try:
        search = SearchBudget(
            max_cycle_len=int(s.get("max_cycle_len", 12)),
            max_cycles=int(s.get("max_cycles", 200)),
            delta=float(s.get("delta", 1e-6)),
            t_min=float(s.get("t_min", 1e-3)),
        )
    except ValueError as exc:
        raise ConfigError(f"search: {exc}") from exc

    sm = raw.get("simulate", {})
    sim_settings = SimSettings(
        horizon=float(sm.get("horizon", 100.0)),
        sample_dt=float(sm.get("sample_dt", 0.1)),
        n_initial=int(sm.get("n_initial", 10)),
        init_box_halfwidth=float(sm.get("init_box_halfwidth", 10.0)),
        rng_seed=int(sm.get("rng_seed", 0)),
    )
    if sim_settings.horizon <= 0 or sim_settings.sample_dt <= 0:
        raise ConfigError("simulate: horizon and sample_dt must be positive")

    kappa = float(raw.get("kappa_floor", 0.01))
    if not 0 < kappa < 1:
        raise ConfigError(f"kappa_floor must lie in (0,1), got {kappa}")

    return NcsConfig(plants=plants, capacity=capacity, grid=grid,
                     kappa_floor=kappa, search=search, sim=sim_settings)


# ---------------------------------------------------------------------------
# artifact io


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _mat_list(m: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in m]


def certificate_to_json(cert: PlantCertificate) -> dict:
    return {
        "plant": cert.plant,
        "lambda_s": cert.stable.rate,
        "lambda_u": cert.unstable.rate,
        "mu_su": cert.mu_su,
        "mu_us": cert.mu_us,
        "p_stable": _mat_list(cert.stable.p),
        "p_unstable": _mat_list(cert.unstable.p),
    }


def certificate_from_json(obj: dict) -> PlantCertificate:
    return PlantCertificate(
        plant=int(obj["plant"]),
        stable=ModeCertificate("stable", np.array(obj["p_stable"]), float(obj["lambda_s"])),
        unstable=ModeCertificate("unstable", np.array(obj["p_unstable"]), float(obj["lambda_u"])),
        mu_su=float(obj["mu_su"]),
        mu_us=float(obj["mu_us"]),
    )


def design_to_json(design: CycleDesign, capacity: int) -> dict:
    return {
        "n_plants": len(design.certificates),
        "capacity": capacity,
        "cycle": [list(v) for v in design.vertices],
        "t_factors": [float(t) for t in design.t_factors],
        "period": design.period,
        "xi_margins": [float(x) for x in design.xi_margins],
        "lambda_s": design.lambda_s,
        "lambda_u": design.lambda_u,
        "certificates": [certificate_to_json(c) for c in design.certificates],
    }


def load_schedule_artifact(path: str):
    """Returns (ScheduleLogic, certificates, artifact dict)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
        n_plants = int(raw["n_plants"])
        segments = [
            (tuple(int(i) for i in v), float(t))
            for v, t in zip(raw["cycle"], raw["t_factors"])
        ]
        schedule = ScheduleLogic(n_plants=n_plants, segments=segments)
        certs = [certificate_from_json(c) for c in raw["certificates"]]
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read schedule artifact {path}: {exc}") from exc
    return schedule, certs, raw


# ---------------------------------------------------------------------------
# svg plotting


def svg_norm_plot(series: list[tuple[list[float], list[float]]], title: str,
                  log_scale: bool = False, width: int = 640, height: int = 400) -> str:
    """Line plot of ||x(t)|| traces; one polyline per run."""
    margin = 50
    floor = 1e-16
    pts_all = [
        (t, (math.log10(max(v, floor)) if log_scale else v))
        for ts, vs in series for t, v in zip(ts, vs)
    ]
    if not pts_all:
        pts_all = [(0.0, 0.0)]
    tmin = min(p[0] for p in pts_all)
    tmax = max(p[0] for p in pts_all) or 1.0
    vmin = min(p[1] for p in pts_all)
    vmax = max(p[1] for p in pts_all)
    if vmax == vmin:
        vmax = vmin + 1.0

    def sx(t):
        return margin + (t - tmin) / (tmax - tmin) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - vmin) / (vmax - vmin) * (height - 2 * margin)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 20}" font-family="sans-serif" '
        f'font-size="11">t={tmin:g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 20}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">t={tmax:g}</text>',
        f'<text x="{margin - 5}" y="{height - margin}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{vmin:.3g}</text>',
        f'<text x="{margin - 5}" y="{margin + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{vmax:.3g}</text>',
    ]
    ylabel = "log10 ||x||" if log_scale else "||x||"
    lines.append(
        f'<text x="15" y="{height / 2:.0f}" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 15 {height / 2:.0f})" text-anchor="middle">{ylabel}</text>'
    )
    for ts, vs in series:
        pts = " ".join(
            f"{sx(t):.2f},{sy(math.log10(max(v, floor)) if log_scale else v):.2f}"
            for t, v in zip(ts, vs)
        )
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_certify(config: NcsConfig, out_dir: str) -> int:
    try:
        certs = certify_all(config.plants, config.grid, kappa=config.kappa_floor)
    except (NoFeasibleRate, AssumptionViolation) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFY
    report = {"plants": []}
    for plant, cert in zip(config.plants, certs):
        entry = certificate_to_json(cert)
        entry["kappa_eff_stable"] = float(
            linalg.sym_eig(cert.stable.p).eigenvalues[0]
        )
        entry["kappa_eff_unstable"] = float(
            linalg.sym_eig(cert.unstable.p).eigenvalues[0]
        )
        entry["abscissa_closed_loop"] = linalg.spectral_abscissa(plant.closed_loop)
        entry["abscissa_open_loop"] = linalg.spectral_abscissa(plant.a)
        report["plants"].append(entry)
    write_json(os.path.join(out_dir, "certificates.json"), report)
    print(f"certified {len(certs)} plants -> {out_dir}/certificates.json")
    return EXIT_OK


def cmd_design(config: NcsConfig, out_dir: str) -> int:
    try:
        design = design_cycle(
            config.plants, config.capacity, config.grid,
            search=config.search, kappa=config.kappa_floor,
        )
    except AssumptionViolation as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFY
    except SearchExhausted as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    artifact = design_to_json(design, config.capacity)
    artifact["graph_vertex_count"] = str(
        vertex_count(len(config.plants), config.capacity)
    )
    write_json(os.path.join(out_dir, "schedule.json"), artifact)
    print(
        f"T-contractive cycle of length {len(design.vertices)}, "
        f"period {design.period:.6g} -> {out_dir}/schedule.json"
    )
    return EXIT_OK


def cmd_simulate(config: NcsConfig, schedule_path: str, out_dir: str,
                 log_scale: bool = False) -> int:
    schedule, certs, _ = load_schedule_artifact(schedule_path)
    if schedule.n_plants != len(config.plants):
        raise ConfigError(
            f"schedule artifact is for {schedule.n_plants} plants, "
            f"config has {len(config.plants)}"
        )
    sm = config.sim
    rng = np.random.default_rng(sm.rng_seed)
    initial_states = [
        [rng.uniform(-sm.init_box_halfwidth, sm.init_box_halfwidth, p.dim)
         for p in config.plants]
        for _ in range(sm.n_initial)
    ]

    rows = []
    norm_series: dict[int, list[tuple[list[float], list[float]]]] = {
        p.index: [] for p in config.plants
    }
    report = {"period": schedule.period, "runs": [], "passed": True}
    for run_id, x0 in enumerate(initial_states):
        trajs = simulate(config.plants, certs, schedule, x0,
                         sm.horizon, sm.sample_dt)
        run_entry = {"run_id": run_id, "plants": []}
        for traj, cert in zip(trajs, certs):
            for s in traj.samples:
                rows.append([run_id, traj.plant, repr(s.t), s.mode,
                             repr(s.norm), repr(s.v_value)])
            norm_series[traj.plant].append(
                ([s.t for s in traj.samples], [s.norm for s in traj.samples])
            )
            entry = {"plant": traj.plant, "overflow": traj.overflow}
            if traj.overflow:
                entry["passed"] = False
            else:
                rep = gas_report(traj, cert, schedule)
                entry.update(
                    ratios=rep.ratios,
                    bound=rep.bound,
                    norm_constant=rep.norm_constant,
                    passed=rep.passed,
                    trivially_converged=rep.trivially_converged,
                )
            if not entry["passed"]:
                report["passed"] = False
            run_entry["plants"].append(entry)
        report["runs"].append(run_entry)

    csv_lines = [",".join(TRAJECTORY_HEADER)]
    csv_lines += [",".join(str(c) for c in row) for row in rows]
    _atomic_write(os.path.join(out_dir, "trajectories.csv"),
                  "\n".join(csv_lines) + "\n")
    write_json(os.path.join(out_dir, "report.json"), report)
    for plant_id, series in norm_series.items():
        _atomic_write(
            os.path.join(out_dir, f"plant_{plant_id}.svg"),
            svg_norm_plot(series, f"plant {plant_id}: state norm", log_scale),
        )
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"simulated {sm.n_initial} runs over horizon {sm.horizon:g}: {verdict}")
    return EXIT_OK if report["passed"] else EXIT_GAS


def generate_config(n: int, m: int, seed: int, dim: int = 2,
                    entry_range: tuple[float, float] = (-2.0, 2.0),
                    q_scale: float = 5.0, r_scale: float = 1.0) -> dict:
    """Random NCS ensemble: open-loop unstable, controllable pairs with
    binary input vectors, LQR gains."""
    if not 0 < m < n:
        raise ConfigError(f"InvalidCapacity: need 0 < m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    plants = []
    for i in range(n):
        for _ in range(_GENERATION_MAX_REJECTS):
            a = rng.uniform(entry_range[0], entry_range[1], (dim, dim))
            b = rng.integers(0, 2, (dim, 1)).astype(float)
            if linalg.spectral_abscissa(a) <= 0:
                continue
            if _controllability_rank(a, b) < dim:
                continue
            k = -lqr_gain(a, b, q_scale * np.eye(dim), r_scale * np.eye(1))
            plants.append({"A": _mat_list(a), "B": _mat_list(b), "K": _mat_list(k)})
            break
        else:
            raise GenerationStalled(f"plant {i + 1}: exceeded rejection budget")
    return {
        "plants": plants,
        "capacity": m,
        "lambda_grid": {
            "lambda_s_min": 0.1, "lambda_s_max": 8.0, "h_s": 0.1,
            "lambda_u_min": -12.0, "lambda_u_max": 0.0, "h_u": 0.2,
        },
        # Random ensembles routinely produce certificates with conditioning
        # near 100, so the floor is looser than the curated-scenario default.
        "kappa_floor": 1e-3,
        "search": {"max_cycle_len": max(12, 2 * math.ceil(n / m)),
                   "max_cycles": 200, "delta": 1e-6, "t_min": 1e-3},
        "simulate": {"horizon": 100.0, "sample_dt": 0.1, "n_initial": 10,
                     "init_box_halfwidth": 10.0, "rng_seed": seed},
        "lqr": {"q_scale": q_scale, "r_scale": r_scale},
    }


def _controllability_rank(a: np.ndarray, b: np.ndarray) -> int:
    """Rank of [B, AB, ...] by pivoted elimination, threshold 1e-9 ||A||."""
    d = a.shape[0]
    blocks = [b]
    for _ in range(d - 1):
        blocks.append(a @ blocks[-1])
    c = np.hstack(blocks)
    tol = 1e-9 * max(np.linalg.norm(a), 1.0)
    rank = 0
    c = c.copy()
    for col in range(c.shape[1]):
        if rank >= d:
            break
        pivot_row = rank + int(np.argmax(np.abs(c[rank:, col])))
        if abs(c[pivot_row, col]) <= tol:
            continue
        c[[rank, pivot_row]] = c[[pivot_row, rank]]
        c[rank + 1:] -= np.outer(c[rank + 1:, col] / c[rank, col], c[rank])
        rank += 1
    return rank


def cmd_generate(n: int, m: int, seed: int, out_path: str | None,
                 dim: int = 2) -> int:
    cfg = generate_config(n, m, seed, dim=dim)
    text = json.dumps(cfg, indent=2, sort_keys=True) + "\n"
    if out_path:
        _atomic_write(out_path, text)
        print(f"generated N={n}, M={m} config -> {out_path} "
              f"(graph has {vertex_count(n, m)} vertices)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(schedule_path: str, trajectories_path: str, out_dir: str) -> int:
    schedule, certs, artifact = load_schedule_artifact(schedule_path)
    try:
        with open(trajectories_path) as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != TRAJECTORY_HEADER:
                raise ConfigError(
                    f"unexpected trajectory header: {reader.fieldnames}"
                )
            records = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read {trajectories_path}: {exc}") from exc
    if not records:
        raise ConfigError("no runs found in trajectory file")

    period = schedule.period
    tol = 1e-9 * max(1.0, period)
    # v-values at period boundaries, per (run, plant)
    boundary: dict[tuple[int, int], dict[int, float]] = {}
    for rec in records:
        t = float(rec["t"])
        mult = round(t / period)
        if abs(t - mult * period) > tol:
            continue
        key = (int(rec["run_id"]), int(rec["plant"]))
        boundary.setdefault(key, {})[int(mult)] = float(rec["v_value"])

    worst: dict[int, tuple[float, int]] = {}
    for (_, plant), values in boundary.items():
        for mth in sorted(values):
            if mth + 1 not in values or values[mth] == 0.0:
                continue
            ratio = values[mth + 1] / values[mth]
            if plant not in worst or ratio > worst[plant][0]:
                worst[plant] = (ratio, mth)

    lines = [
        "# Schedule verification summary",
        "",
        f"- cycle length: {len(artifact['cycle'])}",
        f"- period: {period:.6g}",
        "",
        "| plant | lambda_s | lambda_u | mu_su | mu_us | Xi | worst ratio | bound exp(Xi) | verdict |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    all_pass = True
    for cert, xi in zip(certs, artifact["xi_margins"]):
        bound = math.exp(xi)
        if cert.plant in worst:
            ratio, mth = worst[cert.plant]
            ok = ratio <= bound * (1.0 + 1e-6)
            verdict = "PASS" if ok else f"FAIL (period {mth})"
            ratio_txt = f"{ratio:.6g}"
        else:
            ok = True
            verdict = "PASS (trivial)"
            ratio_txt = "-"
        all_pass &= ok
        lines.append(
            f"| {cert.plant} | {cert.stable.rate:.4g} | {cert.unstable.rate:.4g} "
            f"| {cert.mu_su:.6g} | {cert.mu_us:.6g} | {xi:.6g} "
            f"| {ratio_txt} | {bound:.6g} | {verdict} |"
        )
    lines += ["", f"Overall: {'PASS' if all_pass else 'FAIL'}", ""]
    _atomic_write(os.path.join(out_dir, "summary.md"), "\n".join(lines))
    print(f"report -> {out_dir}/summary.md ({'PASS' if all_pass else 'FAIL'})")
    return EXIT_OK if all_pass else EXIT_GAS


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncsched",
        description="Stability-preserving periodic network scheduling for NCSs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("certify", "design", "simulate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        if name == "simulate":
            p.add_argument("--schedule", required=True)
            p.add_argument("--log-scale", action="store_true")

    p = sub.add_parser("generate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--out", default=None)

    p = sub.add_parser("report")
    p.add_argument("--schedule", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--out", default=".")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "certify":
            return cmd_certify(load_config(args.config), args.out)
        if args.command == "design":
            return cmd_design(load_config(args.config), args.out)
        if args.command == "simulate":
            return cmd_simulate(load_config(args.config), args.schedule,
                                args.out, log_scale=args.log_scale)
        if args.command == "generate":
            return cmd_generate(args.n, args.m, args.seed, args.out, dim=args.dim)
        if args.command == "report":
            return cmd_report(args.schedule, args.trajectories, args.out)
    except (ConfigError, GenerationStalled, InsufficientHorizon) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoFeasibleRate, AssumptionViolation) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFY
    except SearchExhausted as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (CertificateError, CycleSearchError, linalg.LinalgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
