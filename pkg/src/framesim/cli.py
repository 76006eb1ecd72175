"""Command-line entry point: config ingestion, scenario dispatch, outputs.

Every output file starts with a comment header carrying the config hash and
package version (JSON files carry the same fields as leading keys, since
JSON has no comments).  Exit codes: 0 success, 2 configuration error,
3 numerical-guard failure.  Progress goes to stderr only; re-running an
identical manifest reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, analysis, models, protocol, theory
from .fockops import StateInvariantError, partial_trace
from .frames import FockLeakageError, FrameDriftError, StepperConfig
from .lindblad import IntegratorDivergenceError
from .models import ConfigError, ModelParams
from .protocol import MisconfiguredSwitchError, ProtocolConfig

SCENARIOS = ("benchmark", "displaced-jc", "driven-jc", "forced-jc", "transfer",
             "sweep", "oracle")

_GUARD_ERRORS = (
    FrameDriftError,
    FockLeakageError,
    IntegratorDivergenceError,
    MisconfiguredSwitchError,
    StateInvariantError,
)

_SCENARIO_KEYS = {
    "benchmark": {"e_c_list_hz", "duration_s", "n_cav_dim", "tau_ns"},
    "displaced-jc": {"P", "n_cav", "duration_s", "n_cav_dim", "tau_ns"},
    "driven-jc": {"P", "e_c_hz", "n_targets", "n_cav_dim", "tau_ns"},
    "forced-jc": {"n_cav", "duration_s", "n_cav_dim", "tau_ns", "stride"},
    "transfer": {
        "P", "e1_hz", "n_target", "t_ringup_s", "transfer_duration_s",
        "n_cav_dim", "n_mech_dim", "qubit_kind", "transmon_dim",
        "anharmonicity_hz", "tau_ns", "switch_check", "wigner_extent",
        "wigner_points",
    },
    "sweep": {
        "P", "e1_hz", "n_target", "kappa_list_hz", "gamma_list_hz",
        "e1_list_hz", "variant", "n_cav_dim", "n_mech_dim", "tau_ns",
        "switch_check",
    },
    "oracle": {"n_over_ncrit", "n_crit_list", "n_target", "e_c_hz", "delta_c_hz"},
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="framesim",
        description="Displaced-frame simulator for driven cavity-QED/optomechanics",
    )
    ap.add_argument("--scenario", required=True, choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="JSON or TOML configuration file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--tau-ns", type=float, default=None, help="frame interval override")
    ap.add_argument("--ncav-dim", type=int, default=None, help="cavity truncation override")
    ap.add_argument("--nmech-dim", type=int, default=None, help="mechanics truncation override")
    return ap


def load_config_document(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError([f"config file not found: {path}"])
    with open(path, "rb") as f:
        raw = f.read()
    if path.endswith(".toml"):
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(raw.decode())
        except Exception as exc:
            raise ConfigError([f"TOML parse error: {exc}"]) from exc
    try:
        return json.loads(raw.decode())
    except Exception as exc:
        raise ConfigError([f"JSON parse error: {exc}"]) from exc


def validate_config(doc: dict, scenario: str) -> tuple[ModelParams, dict]:
    """Validate the full document; returns (params, scenario settings)."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ConfigError(["config root must be a table/object"])
    for key in doc:
        if key not in ("model", "scenario"):
            errors.append(f"{key}: unknown top-level key (expected 'model', 'scenario')")
    params, model_errors = models.validate_model_config(doc.get("model", {}))
    errors.extend(model_errors)
    settings = doc.get("scenario", {})
    if not isinstance(settings, dict):
        errors.append("scenario: must be a table/object")
        settings = {}
    allowed = _SCENARIO_KEYS[scenario]
    for key in settings:
        if key not in allowed:
            errors.append(f"scenario.{key}: unknown key for scenario '{scenario}'")
    if scenario in ("transfer", "sweep"):
        if params is not None and not params.drive.segments and not (
            {"e1_hz", "n_target"} & set(settings)
            or {"e1_hz", "t_ringup_s"} & set(settings)
        ):
            errors.append(
                "scenario: transfer needs drive_segments in the model or "
                "e1_hz plus n_target/t_ringup_s in the scenario section"
            )
    if errors:
        raise ConfigError(errors)
    return params, settings


def config_hash(doc: dict, overrides: dict) -> str:
    blob = json.dumps({"doc": doc, "overrides": overrides}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header_lines(tag: str) -> list[str]:
    return [f"framesim v{__version__}", f"config_sha256={tag}"]


def _write_json(path: str, tag: str, payload: dict):
    doc = {"framesim_version": __version__, "config_sha256": tag}
    doc.update(payload)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _fmt(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------


def _protocol_config(params: ModelParams, settings: dict, args) -> ProtocolConfig:
    e1 = settings.get("e1_hz")
    t_r = settings.get("t_ringup_s")
    if params.drive.segments:
        seg = params.drive.segments[0]
        if e1 is None:
            e1 = abs(seg.amplitude)
        if t_r is None:
            t_r = seg.t_end - seg.t_start
    if t_r is None:
        if "n_target" not in settings:
            raise ConfigError(["scenario: need n_target or t_ringup_s for the ring-up"])
        t_r = protocol.ringup_time(float(settings["n_target"]), float(e1))
    tau = 1e-9 if args.tau_ns is None else args.tau_ns * 1e-9
    if "tau_ns" in settings and args.tau_ns is None:
        tau = float(settings["tau_ns"]) * 1e-9
    n_cav_dim = args.ncav_dim or int(settings.get("n_cav_dim", 12))
    n_mech_dim = args.nmech_dim or int(settings.get("n_mech_dim", 10))
    dur = settings.get("transfer_duration_s")
    leak = protocol.protocol_leak_tol(params.gamma, float(t_r) + 3e-6)
    return ProtocolConfig(
        model=params,
        P=str(settings.get("P", "1")),
        e1=float(e1),
        t_ringup=float(t_r),
        stepper=StepperConfig(tau=tau, leak_tol=leak),
        transfer_duration=None if dur is None else float(dur),
        n_cav_dim=n_cav_dim,
        n_mech_dim=n_mech_dim,
        qubit_kind=str(settings.get("qubit_kind", "qubit")),
        transmon_dim=int(settings.get("transmon_dim", 10)),
        transmon_anharmonicity=float(settings.get("anharmonicity_hz", 200e6)),
        switch_check=bool(settings.get("switch_check", True)),
    )


def _run_transfer(params, settings, args, out, tag) -> dict:
    cfg = _protocol_config(params, settings, args)
    res = protocol.run_protocol(cfg)
    res.trajectory.to_csv(os.path.join(out, "trajectory.csv"), _header_lines(tag))
    res.observables.to_csv(os.path.join(out, "observables.csv"), _header_lines(tag))
    extent = float(settings.get("wigner_extent", 3.0))
    npts = int(settings.get("wigner_points", 61))
    axis = np.linspace(-extent, extent, npts)
    wig = analysis.wigner(res.mech_state, analysis.wigner_grid(axis, axis))
    analysis.write_wigner_csv(
        os.path.join(out, "wigner_mech.csv"), axis, axis, wig, _header_lines(tag)
    )
    rc = partial_trace(res.final.rho, "cavity")
    wig_c = analysis.wigner(rc, analysis.wigner_grid(axis, axis))
    analysis.write_wigner_csv(
        os.path.join(out, "wigner_cavity.csv"), axis, axis, wig_c, _header_lines(tag)
    )
    summary = {
        "scenario": "transfer",
        "P": cfg.P,
        "mech_fidelity": _fmt(res.mech_fidelity),
        "n_cav_at_switch": _fmt(res.n_cav_at_switch),
        "t_switch_s": _fmt(res.t_switch),
        "t_swap_s": _fmt(res.t_swap),
        "e2_re_hz": _fmt(res.e2.real),
        "e2_im_hz": _fmt(res.e2.imag),
        "alpha_final_re": _fmt(res.final.alpha.real),
        "alpha_final_im": _fmt(res.final.alpha.imag),
        "beta_final_re": _fmt(res.final.beta.real),
        "beta_final_im": _fmt(res.final.beta.imag),
        "model": models.model_config_dict(params),
    }
    if res.transmon_excitation_max is not None:
        summary["transmon_excitation_max"] = _fmt(res.transmon_excitation_max)
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_benchmark(params, settings, args, out, tag) -> dict:
    del params
    e_list = settings.get(
        "e_c_list_hz",
        [50e6, 100e6, 200e6, 400e6, 800e6, 1200e6, 1600e6, 2000e6],
    )
    n_dim = args.ncav_dim or int(settings.get("n_cav_dim", 20))
    tau = 1e-9 if args.tau_ns is None else args.tau_ns * 1e-9
    rows = protocol.run_benchmark(
        [float(e) for e in e_list],
        n_cav_dim=n_dim,
        tau=tau,
        duration=float(settings.get("duration_s", 100e-9)),
    )
    protocol.write_benchmark_csv(os.path.join(out, "benchmark.csv"), rows,
                                 _header_lines(tag))
    ok = [r for r in rows if r.u < 10**-2.5]
    summary = {
        "scenario": "benchmark",
        "n_cav_dim": n_dim,
        "tau_s": tau,
        "worst_r_eps_safe": _fmt(max((r.r_eps for r in ok), default=0.0)),
        "worst_r_disp_safe": _fmt(max((r.r_disp for r in ok), default=0.0)),
        "points": len(rows),
    }
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_displaced_jc(params, settings, args, out, tag) -> dict:
    P = str(settings.get("P", "+"))
    n_cav = float(settings.get("n_cav", 100.0))
    tau = 1e-9 if args.tau_ns is None else args.tau_ns * 1e-9
    series = protocol.run_displaced_jc_experiment(
        params,
        P,
        n_cav,
        duration=settings.get("duration_s"),
        n_cav_dim=args.ncav_dim or int(settings.get("n_cav_dim", 20)),
        tau=tau,
    )
    obs = protocol.ObservableSeries()
    for t, rep in zip(series.t, series.reports):
        obs.append(
            t,
            rep.delta_n if rep.squeeze is not None else float("nan"),
            0.0,
            rep.squeeze.ratio if rep.squeeze is not None else float("nan"),
            rep.delta_phi,
            rep.fidelity,
        )
    obs.to_csv(os.path.join(out, "observables.csv"), _header_lines(tag))
    if series.trajectory is not None:
        series.trajectory.to_csv(os.path.join(out, "trajectory.csv"), _header_lines(tag))
    scales = models.derived_scales(params)
    summary = {
        "scenario": "displaced-jc",
        "P": P,
        "n_cav": n_cav,
        "chi_fit_hz": _fmt(series.fit_chi() / (2 * math.pi)),
        "j_fit_hz": _fmt(series.fit_j() / (2 * math.pi)),
        "chi_theory_hz": _fmt(theory.chi_of_n(n_cav, scales.chi0, scales.n_crit)),
        "j_theory_hz": _fmt(abs(theory.j_of_n(n_cav, scales.chi0, scales.n_crit))),
    }
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_driven_jc(params, settings, args, out, tag) -> dict:
    P = str(settings.get("P", "0"))
    e_c = float(settings.get("e_c_hz", 200e6))
    n_targets = [float(x) for x in settings.get("n_targets", [1e4, 1e5, 1e6])]
    tau = 1e-9 if args.tau_ns is None else args.tau_ns * 1e-9
    res = protocol.run_driven_jc_experiment(
        params,
        P,
        e_c,
        n_targets,
        n_cav_dim=args.ncav_dim or int(settings.get("n_cav_dim", 20)),
        tau=tau,
    )
    res.trajectory.to_csv(os.path.join(out, "trajectory.csv"), _header_lines(tag))
    scales = models.derived_scales(params)
    crossings = []
    for c in res.crossings:
        xi_th = theory.cumulative_squeeze(
            c["n_target"], scales.n_crit, 2 * math.pi * abs(scales.chi0),
            2 * math.pi * e_c
        )
        crossings.append(
            {
                "n_target": c["n_target"],
                "t_s": c["t"],
                "r_sim": c["r"],
                "ratio_sim": c["ratio"],
                "ratio_theory": math.exp(4.0 * xi_th),
            }
        )
    summary = {
        "scenario": "driven-jc",
        "P": P,
        "e_c_hz": e_c,
        "reached_all": res.reached_all,
        "max_n_reached": _fmt(res.max_n_reached),
        "crossings": crossings,
    }
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_forced_jc(params, settings, args, out, tag) -> dict:
    n_cav = float(settings.get("n_cav", 1e4))
    duration = float(settings.get("duration_s", 5e-6))
    tau = 1e-9 if args.tau_ns is None else args.tau_ns * 1e-9
    res = protocol.run_forced_jc_experiment(
        params,
        n_cav,
        duration,
        gamma_hz=params.gamma,
        n_cav_dim=args.ncav_dim or int(settings.get("n_cav_dim", 12)),
        tau=tau,
        stride=int(settings.get("stride", 5)),
    )
    obs = protocol.ObservableSeries()
    for t, r in zip(res.t, res.r):
        obs.append(t, float("nan"), 0.0, math.exp(4.0 * r), float("nan"), float("nan"))
    obs.to_csv(os.path.join(out, "observables.csv"), _header_lines(tag))
    scales = models.derived_scales(params)
    amp_th = theory.transfer_squeeze(
        theory.transfer_squeeze_period(n_cav, scales.n_crit,
                                       2 * math.pi * scales.chi0,
                                       2 * math.pi * params.omega_m) / 2.0,
        n_cav, scales.n_crit, 2 * math.pi * scales.chi0, 2 * math.pi * params.omega_m,
    )
    summary = {
        "scenario": "forced-jc",
        "n_cav": n_cav,
        "oscillation_amplitude_sim": _fmt(res.oscillation_amplitude()),
        "oscillation_amplitude_theory": _fmt(amp_th),
        "period_sim_s": _fmt(res.period()),
        "period_theory_s": _fmt(
            theory.transfer_squeeze_period(
                n_cav, scales.n_crit, 2 * math.pi * scales.chi0,
                2 * math.pi * params.omega_m
            )
        ),
    }
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_sweep(params, settings, args, out, tag) -> dict:
    base = _protocol_config(params, settings, args)
    kappas = [float(x) for x in settings.get("kappa_list_hz", [params.kappa])]
    gammas = [float(x) for x in settings.get("gamma_list_hz", [params.gamma])]
    e1s = [float(x) for x in settings.get("e1_list_hz", [base.e1])]
    variant = str(settings.get("variant", "jc"))
    points = [
        protocol.SweepPoint(k, g, e, variant)
        for k in kappas
        for g in gammas
        for e in e1s
    ]
    rows = protocol.sweep(base, points)
    protocol.write_sweep_csv(os.path.join(out, "sweep.csv"), rows, _header_lines(tag))
    summary = {
        "scenario": "sweep",
        "points": len(points),
        "failed": sum(1 for r in rows if r["error"]),
        "fidelities": [
            {k: r[k] for k in ("kappa_hz", "gamma_hz", "e1_hz", "mech_fidelity")}
            for r in rows
        ],
    }
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


def _run_oracle(params, settings, args, out, tag) -> dict:
    del args
    scales = models.derived_scales(params)
    xs = settings.get(
        "n_over_ncrit",
        list(np.round(np.logspace(-2, 3, 41), 12)),
    )
    path = os.path.join(out, "chi_j_curves.csv")
    with open(path, "w") as f:
        for line in _header_lines(tag):
            f.write(f"# {line}\n")
        f.write("n_over_ncrit,chi_ratio,j_ratio\n")
        j0 = abs(scales.chi0) / (6.0 * math.sqrt(3.0))
        for x in xs:
            n = float(x) * scales.n_crit
            chi = theory.chi_of_n(n, scales.chi0, scales.n_crit)
            j = theory.j_of_n(n, scales.chi0, scales.n_crit)
            f.write(f"{float(x):.16e},{chi / scales.chi0:.16e},{abs(j) / j0:.16e}\n")
    n_target = float(settings.get("n_target", 1e6))
    e_c = 2 * math.pi * float(settings.get("e_c_hz", 200e6))
    delta_c = 2 * math.pi * float(settings.get("delta_c_hz", 1e6))
    chi0_ang = 2 * math.pi * abs(scales.chi0)
    ncrits = settings.get("n_crit_list", list(np.round(np.logspace(0, 8, 33), 12)))
    path2 = os.path.join(out, "tradeoff.csv")
    with open(path2, "w") as f:
        for line in _header_lines(tag):
            f.write(f"# {line}\n")
        f.write("n_crit,ringup_ratio,transfer_ratio_max\n")
        for nc in ncrits:
            nc = float(nc)
            xi_r = theory.cumulative_squeeze(n_target, nc, chi0_ang, e_c)
            chi = theory.chi_of_n(n_target, chi0_ang, nc)
            j = theory.j_of_n(n_target, chi0_ang, nc)
            xi_t = abs(2.0 * j / (delta_c - chi))
            f.write(f"{nc:.16e},{math.exp(4 * xi_r):.16e},{math.exp(4 * xi_t):.16e}\n")
    summary = {"scenario": "oracle", "chi0_hz": _fmt(scales.chi0),
               "n_crit": _fmt(scales.n_crit)}
    _write_json(os.path.join(out, "summary.json"), tag, summary)
    return summary


_RUNNERS = {
    "transfer": _run_transfer,
    "benchmark": _run_benchmark,
    "displaced-jc": _run_displaced_jc,
    "driven-jc": _run_driven_jc,
    "forced-jc": _run_forced_jc,
    "sweep": _run_sweep,
    "oracle": _run_oracle,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    t_start = time.monotonic()
    try:
        doc = load_config_document(args.config)
        params, settings = validate_config(doc, args.scenario)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    overrides = {
        "tau_ns": args.tau_ns,
        "ncav_dim": args.ncav_dim,
        "nmech_dim": args.nmech_dim,
        "scenario": args.scenario,
    }
    tag = config_hash(doc, overrides)
    os.makedirs(args.out, exist_ok=True)
    try:
        summary = _RUNNERS[args.scenario](params, settings, args, args.out, tag)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except _GUARD_ERRORS as exc:
        print(f"numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    dt = time.monotonic() - t_start
    print(f"[framesim] {args.scenario} finished in {dt:.1f} s", file=sys.stderr)
    key = "mech_fidelity" if "mech_fidelity" in summary else "scenario"
    print(f"{args.scenario}: ok ({key}={summary.get(key)}) -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
