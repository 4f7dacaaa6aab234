"""Command-line front end: batch sweeps, diagnostics, and CSV persistence.

Exit codes: 0 on success, 2 on configuration/validation errors, 3 on
numerical failures. On keyboard interrupt the rows computed so far are
flushed to ``<csv>.partial`` before exiting.
"""
from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from . import config as cfg
from . import floquet as flq
from . import scenarios as sc
from .specfn import Gap, StructureFactorKind, s_ph_analytic, s_ph_quadrature

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INTERRUPT = 130


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        value = args.threads
    else:
        value = int(os.environ.get("QPGEN_THREADS", "1"))
    if value < 1:
        raise cfg.ConfigError("thread count must be >= 1")
    return value


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _chunks(n_points: int, size: int) -> list[range]:
    size = max(1, size)
    return [range(lo, min(lo + size, n_points))
            for lo in range(0, n_points, size)]


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _run_sweep_rows(config: cfg.RunConfig, threads: int,
                    rows: list[dict], extra: dict) -> None:
    """Run the configured scenario, appending rows as chunks complete.

    The outermost independent axis is processed in chunks so that an
    interrupt still leaves the completed grid points available for the
    partial flush. Labeling sweeps are sequential in their swept axis and
    are never split.
    """
    grid, env, num = config.grid, config.environment, config.numerics
    p = config.circuit
    if config.scenario == "charge_drive_map":
        omega_ds = grid["omega_d_GHz"]
        amps = grid["amplitude_GHz"]
        alphas = tuple(grid.get("alphas", [0]))
        for chunk in _chunks(len(omega_ds), threads):
            part = sc.charge_drive_map(
                p, [omega_ds[i] for i in chunk], amps, num=num, env=env,
                alphas=alphas, threads=threads)
            for row in part:
                row["grid_index"] += chunk.start * len(amps)
            rows.extend(part)
    elif config.scenario == "constant_stark_cut":
        omega_ds = grid["omega_d_GHz"]
        solutions: list[dict] = []
        extra["stark_solutions"] = solutions
        for chunk in _chunks(len(omega_ds), threads):
            part, sols = sc.constant_stark_cut(
                p, [omega_ds[i] for i in chunk], num=num, env=env,
                delta_target_GHz=grid.get("delta_target_GHz", 3e-3),
                tol_GHz=grid.get("tol_GHz", 1e-6), threads=threads)
            for row in part:
                row["grid_index"] += chunk.start
            rows.extend(part)
            solutions.extend(
                {"omega_d_GHz": s.omega_d_GHz, "omega_GHz": s.omega_GHz,
                 "delta_ac_GHz": s.delta_ac_GHz, "iterations": s.iterations,
                 "flags": list(s.flags)} for s in sols)
    elif config.scenario == "readout_sweep":
        rows.extend(sc.readout_sweep(
            p, grid["omega_r_GHz"], grid["nbar"],
            chi_target_GHz=grid.get("chi_target_GHz", 1e-3),
            num=num, env=env, alphas=tuple(grid.get("alphas", [0, 1])),
            threads=threads))
    elif config.scenario == "kapitza_sweep":
        phi_acs = [2.0 * math.pi * x for x in grid["phi_ac_over_2pi"]]
        for chunk in _chunks(len(phi_acs), threads):
            part = sc.kapitza_sweep(
                p, grid["omega_d_GHz"], [phi_acs[i] for i in chunk],
                num=num, env=env, threads=threads)
            for row in part:
                row["grid_index"] += chunk.start
            rows.extend(part)
    else:  # pragma: no cover - scenarios gate at validation
        raise cfg.ConfigError(f"unsupported scenario {config.scenario}")


def _sweep_svg(path: Path, rows: Sequence[Mapping[str, Any]]) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    totals: dict[tuple[int, int], tuple[float, float]] = {}
    for row in rows:
        key = (int(row["grid_index"]), int(row["alpha"]))
        totals[key] = (float(row["amplitude"]), float(row["T_s"]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for alpha in sorted({a for _, a in totals}):
        pts = sorted((gi, amp, t) for (gi, a), (amp, t) in totals.items()
                     if a == alpha)
        ax.semilogy([p[1] for p in pts], [p[2] for p in pts],
                    label=f"state {alpha}")
    ax.set_xlabel("drive amplitude")
    ax.set_ylabel("parity lifetime (s)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = cfg.load_config(args.config, args.profile)
    threads = _threads(args)
    out = _out_dir(args)
    csv_path = out / config.output["csv"]
    rows: list[dict] = []
    extra: dict = {"threads": threads}
    try:
        _run_sweep_rows(config, threads, rows, extra)
    except KeyboardInterrupt:
        cfg.write_csv(str(csv_path) + ".partial", rows)
        print(f"interrupted; {len(rows)} rows flushed to "
              f"{csv_path}.partial", file=sys.stderr)
        return EXIT_INTERRUPT
    cfg.write_csv(csv_path, rows)
    cfg.write_summary(out / config.output["summary"], config, rows,
                      _timestamp(), __version__, extra)
    if args.svg:
        _sweep_svg(out / config.output.get("svg", f"{config.scenario}.svg"),
                   rows)
    counts = cfg.flag_counts(rows)
    if counts:
        print("flagged rows:", json.dumps(counts))
    print(f"wrote {len(rows)} rows to {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# structure-factors
# ---------------------------------------------------------------------------

def _read_aux_config(path: str, allowed: Mapping[str, type],
                     required: Sequence[str]) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise cfg.ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise cfg.ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise cfg.ConfigError("config must be a JSON object")
    unknown = set(raw) - set(allowed)
    if unknown:
        raise cfg.ConfigError(f"unknown key(s): {sorted(unknown)}")
    missing = [k for k in required if k not in raw]
    if missing:
        raise cfg.ConfigError(f"missing key(s): {missing}")
    return raw


def cmd_structure_factors(args: argparse.Namespace) -> int:
    raw = _read_aux_config(
        args.config,
        {"omega_GHz": list, "delta_GHz": float, "csv": str, "svg": str},
        ("omega_GHz",))
    gap = Gap(float(raw.get("delta_GHz", Gap().delta_GHz)))
    omegas = [float(w) for w in raw["omega_GHz"]]
    out = _out_dir(args)
    rows = []
    for w in omegas:
        rows.append({
            "omega_GHz": w,
            "s_plus": s_ph_analytic(StructureFactorKind.PLUS, w, gap),
            "s_minus": s_ph_analytic(StructureFactorKind.MINUS, w, gap),
            "s_plus_quadrature": s_ph_quadrature(
                StructureFactorKind.PLUS, w, gap),
            "s_minus_quadrature": s_ph_quadrature(
                StructureFactorKind.MINUS, w, gap),
        })
    csv_path = out / raw.get("csv", "structure_factors.csv")
    cfg.write_csv(csv_path, rows,
                  header="omega_GHz,s_plus,s_minus,"
                         "s_plus_quadrature,s_minus_quadrature")
    if args.svg:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(omegas, [r["s_plus"] for r in rows], label=r"$S^+$")
        ax.plot(omegas, [r["s_minus"] for r in rows], label=r"$S^-$")
        ax.set_xlabel("transition frequency (GHz)")
        ax.set_ylabel("structure factor")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / raw.get("svg", "structure_factors.svg"))
        plt.close(fig)
    print(f"wrote {len(rows)} rows to {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------

def cmd_potential(args: argparse.Namespace) -> int:
    raw = _read_aux_config(
        args.config,
        {"circuit": dict, "omega_d_GHz": (int, float),
         "phi_ac_over_2pi": list, "n_phi": int, "normalize": bool,
         "csv": str, "svg": str},
        ("circuit", "omega_d_GHz", "phi_ac_over_2pi"))
    p = cfg._build_circuit("kapitza_sweep", raw["circuit"])
    phi_acs = [2.0 * math.pi * float(x) for x in raw["phi_ac_over_2pi"]]
    n_phi = int(raw.get("n_phi", 201))
    phi_grid = np.linspace(-math.pi, math.pi, n_phi)
    rows = sc.kapitza_potentials(p, float(raw["omega_d_GHz"]), phi_acs,
                                 phi_grid=phi_grid)
    if raw.get("normalize", False):
        # shift each amplitude's curve so its minimum sits at zero
        for gi in {r["grid_index"] for r in rows}:
            sub = [r for r in rows if r["grid_index"] == gi]
            floor = min(r["U_eff_GHz"] for r in sub)
            for r in sub:
                r["U_eff_GHz"] -= floor
    out = _out_dir(args)
    csv_path = out / raw.get("csv", "potential.csv")
    cfg.write_csv(csv_path, rows,
                  header="grid_index,phi_ac,phi,U_eff_GHz,"
                         "E_J_eff_GHz,E_J2phi_GHz")
    if args.svg:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for gi in sorted({r["grid_index"] for r in rows}):
            sub = [r for r in rows if r["grid_index"] == gi]
            ax.plot([r["phi"] for r in sub], [r["U_eff_GHz"] for r in sub],
                    label=f"phi_ac/2pi = {sub[0]['phi_ac'] / (2 * math.pi):g}")
        ax.set_xlabel(r"$\varphi$")
        ax.set_ylabel(r"$U_{\rm eff}$ (GHz)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / raw.get("svg", "potential.svg"))
        plt.close(fig)
    print(f"wrote {len(rows)} rows to {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# label-demo
# ---------------------------------------------------------------------------

def cmd_label_demo(args: argparse.Namespace) -> int:
    raw = _read_aux_config(
        args.config,
        {"circuit": dict, "omega_d_GHz": (int, float),
         "omega_max_GHz": (int, float), "omega_step_GHz": (int, float),
         "numerics": dict, "csv": str},
        ("circuit", "omega_d_GHz", "omega_max_GHz"))
    p = cfg._build_circuit("charge_drive_map", raw["circuit"])
    num = cfg._build_numerics("charge_drive_map", raw.get("numerics", {}),
                              args.profile or "full")
    omega_d = float(raw["omega_d_GHz"])
    step = float(raw.get("omega_step_GHz", 5e-3))
    omegas = np.arange(0.0, float(raw["omega_max_GHz"]) + 0.5 * step, step)
    eig = sc.build_transmon_eigenbasis(p, num)
    h_q = np.diag(eig.energies_even)
    # linear charge-drive frame: static qubit plus (Omega/2) n in the
    # one-photon sidebands
    problems = [
        flq.FloquetProblem(
            flq.FourierSeries({0: h_q, 1: 0.5 * om * eig.n_even,
                               -1: 0.5 * om * eig.n_even}),
            omega_d, num.m_max, dim_limit=sc.TRANSMON_DIM_CAP)
        for om in omegas
    ]
    labels = flq.label_sweep(problems, [(0, num.m0)], axis=omegas)
    dim = num.d
    static_row = (num.m0 + num.m_max) * dim  # extended index of |g, m0>
    rows = []
    for i, om in enumerate(omegas):
        vec = labels.vector(i, 0, num.m0)
        rows.append({
            "Omega_GHz": float(om),
            "overlap_static": float(abs(vec[static_row])),
            "overlap_step": float(labels.overlaps[i, 0]),
            "energy_GHz": float(labels.energy(i, 0, num.m0)),
            "eig_index": int(labels.indices[i, 0]),
            "ambiguous": int(labels.ambiguous[i, 0]),
        })
    out = _out_dir(args)
    csv_path = out / raw.get("csv", "label_demo.csv")
    cfg.write_csv(csv_path, rows,
                  header="Omega_GHz,overlap_static,overlap_step,"
                         "energy_GHz,eig_index,ambiguous")
    print(f"wrote {len(rows)} rows to {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

def cmd_converge(args: argparse.Namespace) -> int:
    raw = _read_aux_config(
        args.config,
        {"target": str, "circuit": dict, "point": dict,
         "numerics": dict, "m_max_levels": list, "threshold": (int, float),
         "report": str},
        ("target", "circuit", "point", "m_max_levels"))
    target = raw["target"]
    if target not in ("charge_drive_map", "kapitza_sweep"):
        raise cfg.ConfigError(
            "converge target must be charge_drive_map or kapitza_sweep")
    levels = [{"m_max": int(m)} for m in raw["m_max_levels"]]
    threshold = float(raw.get("threshold", 1e-4))
    p = cfg._build_circuit(target, raw["circuit"])
    base = dict(raw.get("numerics", {}))
    point = raw["point"]

    if target == "charge_drive_map":
        def evaluate(level):
            num = cfg._build_numerics(target, {**base, **level},
                                      args.profile or "full")
            return sc.charge_drive_point_observables(
                p, float(point["omega_d_GHz"]),
                float(point["amplitude_GHz"]), num)
    else:
        def evaluate(level):
            num = cfg._build_numerics(target, {**base, **level},
                                      args.profile or "full")
            return sc.kapitza_point_observables(
                p, float(point["omega_d_GHz"]),
                2.0 * math.pi * float(point["phi_ac_over_2pi"]), num)

    report = sc.convergence_audit(evaluate, levels, threshold)
    out = _out_dir(args)
    payload = {
        "target": target,
        "levels": report.levels,
        "observables": report.observables,
        "drifts": report.drifts,
        "threshold": report.threshold,
        "passed": report.passed,
    }
    path = out / raw.get("report", "convergence.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    worst = max(report.drifts[-1].values(), default=0.0)
    print(f"max drift between last two levels: {worst:.3e} "
          f"({'pass' if report.passed else 'FAIL'} at {threshold:g})")
    return EXIT_OK if report.passed else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpgen",
        description="Multiphoton pair-breaking rates and parity lifetimes "
                    "in driven superconducting circuits.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "sweep": cmd_sweep,
        "structure-factors": cmd_structure_factors,
        "potential": cmd_potential,
        "label-demo": cmd_label_demo,
        "converge": cmd_converge,
    }
    for name, handler in handlers.items():
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--threads", type=int, default=None)
        cmd.add_argument("--profile", choices=cfg.PROFILES, default=None)
        cmd.add_argument("--out", default=None)
        cmd.add_argument("--svg", action="store_true")
        cmd.set_defaults(handler=handler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
