"""Command-line entry point: wave | certify | kinetic | fluid | sweep | report.

A single JSON configuration file drives every subcommand; flags override file
keys.  The fully resolved configuration (all defaults materialized) is echoed
to the output directory as resolved_config.json and its hash is embedded in
every artifact, so runs are reproducible and artifacts are self-describing.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .collision import (
    CollisionModel,
    certify_operator_properties,
    transport_tables,
)
from .contact_wave import (
    build_wave,
    euler_riemann_contact,
    lagrangian_to_eulerian,
    solve_selfsimilar,
    wave_residuals,
)
from .diagnostics import (
    build_energy_report,
    convergence_sweep,
    growth_check,
)
from .fluid_solver import FluidField, ns_run
from .kinetic_solver import KineticConfig, init_from_wave, kinetic_run
from .micromacro import mstar_window_ok
from .persist import config_hash, write_csv, write_json, write_snapshot
from .velocity_space import SpatialGrid, build_velocity_grid, field_moments


class ConfigError(ValueError):
    """Config validation failure; the message names the key and constraint."""


DEFAULTS = {
    "physics": {"theta_minus": 1.0, "theta_plus": 1.2, "v_minus": 1.0},
    "mstar": {"rho": None, "u": [0.0, 0.0, 0.0], "theta": None},
    "model": {"kind": "bgk", "nu0": 1.0, "angular": [8, 8]},
    "wave": {"L": 10.0, "n_eta": 2001, "tol": 1e-10, "epsilon": 0.01,
             "times": [0.0, 1.0, 3.0], "x_max": 3.0, "nx": 2001},
    "certify": {"trials": 100, "quad_bound_trials": 8, "counts": [16, 16, 16],
                "extent_multiplier": 6.0},
    "kinetic": {"epsilon": 0.05, "nx": 400, "x_max": 6.0, "counts": [16, 12, 12],
                "extent_multiplier": 6.0, "t_final": 2.0,
                "snapshots": [0.25, 0.5, 1.0, 2.0], "transport": "minmod2",
                "cfl": 0.9},
    "fluid": {"epsilon": 0.01, "nx": 1000, "x_max": 5.0, "t_final": 1.0,
              "snapshots": [0.5, 1.0], "safety": 0.9},
    "sweep": {"epsilons": [0.1, 0.05, 0.025, 0.0125], "h": 0.5,
              "energy_for": "all"},
    "seed": 0,
    "threads": 1,
    "out": "out",
}


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in out:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def parse_config(path=None, overrides=None) -> dict:
    """Load, override, materialize defaults, and validate."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)

    ph = cfg["physics"]
    for key in ("theta_minus", "theta_plus", "v_minus"):
        if ph[key] <= 0:
            raise ConfigError(f"physics.{key} must be positive, got {ph[key]}")
    rho_minus = 1.0 / ph["v_minus"]
    rho_plus = rho_minus * ph["theta_minus"] / ph["theta_plus"]
    if cfg["mstar"]["rho"] is None:
        cfg["mstar"]["rho"] = 0.5 * (rho_minus + rho_plus)
    theta_min = min(ph["theta_minus"], ph["theta_plus"])
    if cfg["mstar"]["theta"] is None:
        cfg["mstar"]["theta"] = 0.9 * theta_min
    ts = cfg["mstar"]["theta"]
    # the dissipation window must hold cell-wise over the whole run; the wave
    # temperature stays inside [min theta, max theta] by the maximum principle
    if not (mstar_window_ok(theta_min, ts)
            and mstar_window_ok(max(ph["theta_minus"], ph["theta_plus"]), ts)):
        raise ConfigError(
            f"mstar.theta={ts} violates the window theta/2 < theta* < theta "
            f"for run temperatures in [{theta_min}, "
            f"{max(ph['theta_minus'], ph['theta_plus'])}]")

    mk = cfg["model"]
    if mk["kind"] not in ("bgk", "hard_sphere"):
        raise ConfigError(f"model.kind must be 'bgk' or 'hard_sphere', got {mk['kind']!r}")
    if mk["nu0"] <= 0:
        raise ConfigError(f"model.nu0 must be positive, got {mk['nu0']}")
    if min(mk["angular"]) < 8:
        raise ConfigError(f"model.angular must be >= (8, 8), got {mk['angular']}")

    for section in ("kinetic", "certify"):
        counts = cfg[section]["counts"]
        if len(counts) != 3 or min(counts) < 8:
            raise ConfigError(f"{section}.counts must be 3 values >= 8, got {counts}")
        if cfg[section]["extent_multiplier"] < 4:
            raise ConfigError(
                f"{section}.extent_multiplier must be >= 4, got "
                f"{cfg[section]['extent_multiplier']}")

    eps_list = cfg["sweep"]["epsilons"]
    if len(eps_list) < 3:
        raise ConfigError(f"sweep.epsilons needs >= 3 entries, got {len(eps_list)}")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError(f"sweep.epsilons must be strictly decreasing, got {eps_list}")
    if not 0 < cfg["sweep"]["h"] < cfg["kinetic"]["x_max"]:
        raise ConfigError(
            f"sweep.h={cfg['sweep']['h']} must lie inside (0, kinetic.x_max)")
    for key in ("epsilon",):
        if cfg["kinetic"][key] <= 0:
            raise ConfigError(f"kinetic.{key} must be positive")
        if cfg["fluid"][key] <= 0:
            raise ConfigError(f"fluid.{key} must be positive")
        if cfg["wave"][key] <= 0:
            raise ConfigError(f"wave.{key} must be positive")
    for sec in ("kinetic", "fluid"):
        bad = [t for t in cfg[sec]["snapshots"] if t > cfg[sec]["t_final"] + 1e-12]
        if bad:
            raise ConfigError(f"{sec}.snapshots {bad} exceed {sec}.t_final")
    return cfg


# ---------------------------------------------------------------------------
# shared builders

def _model(cfg) -> CollisionModel:
    mk = cfg["model"]
    return CollisionModel(kind=mk["kind"], nu0=mk["nu0"], angular=tuple(mk["angular"]))


def _mstar_state(cfg):
    ms = cfg["mstar"]
    return (ms["rho"], np.array(ms["u"], dtype=float), ms["theta"])


def _riemann(cfg):
    ph = cfg["physics"]
    return euler_riemann_contact(ph["v_minus"], ph["theta_minus"], ph["theta_plus"])


def _coefficient_tables(cfg, rc):
    ph = cfg["physics"]
    model = _model(cfg)
    grid = build_velocity_grid(tuple(cfg["kinetic"]["counts"]),
                               cfg["kinetic"]["extent_multiplier"],
                               max(ph["theta_minus"], ph["theta_plus"]))
    return transport_tables(ph["theta_minus"], ph["theta_plus"], rc.p_plus,
                            grid, model)


def _profile(cfg, rc, lam_fn):
    ph = cfg["physics"]
    wv = cfg["wave"]
    return solve_selfsimilar(ph["theta_minus"], ph["theta_plus"], rc.p_plus,
                             lam_fn, L=wv["L"], n_eta=wv["n_eta"], tol=wv["tol"])


def _science_config(cfg):
    """The configuration minus volatile execution keys (out dir, threads)."""
    return {k: v for k, v in cfg.items() if k not in ("out", "threads")}


def _meta(cfg):
    return {"config_hash": config_hash(_science_config(cfg)), "version": __version__}


# ---------------------------------------------------------------------------
# subcommands

def run_wave(cfg, outdir: Path) -> int:
    rc = _riemann(cfg)
    mu_fn, lam_fn = _coefficient_tables(cfg, rc)
    prof = _profile(cfg, rc, lam_fn)
    meta = _meta(cfg)
    write_csv(outdir / "profile.csv", ["eta", "theta_hat", "dtheta_hat"],
              zip(prof.eta, prof.theta_hat, prof.dtheta_hat), meta=meta)
    x = np.linspace(-cfg["wave"]["x_max"], cfg["wave"]["x_max"], cfg["wave"]["nx"])
    eps = cfg["wave"]["epsilon"]
    for t in cfg["wave"]["times"]:
        w = build_wave(prof, eps, t, x)
        r1, r2 = wave_residuals(w, mu_fn, lam_fn)
        write_csv(outdir / f"wave_t{t:g}.csv",
                  ["x", "vbar", "u1bar", "thetabar", "R1", "R2"],
                  zip(w.x, w.vbar, w.u1bar, w.thetabar, r1, r2), meta=meta)
    write_json(outdir / "profile_info.json", {
        "residual_norm": prof.residual_norm,
        "monotone": prof.monotone,
        "tail_constant": prof.tail_constant,
        "delta": prof.delta,
        "p_plus": prof.p_plus,
    }, meta=meta)
    return 0


def run_certify(cfg, outdir: Path) -> int:
    ph = cfg["physics"]
    ct = cfg["certify"]
    model = _model(cfg)
    grid = build_velocity_grid(tuple(ct["counts"]), ct["extent_multiplier"],
                               ph["theta_minus"])
    state = (1.0 / ph["v_minus"], np.zeros(3), ph["theta_minus"])
    rep = certify_operator_properties(model, state, _mstar_state(cfg),
                                      trials=ct["trials"], grid=grid,
                                      seed=cfg["seed"],
                                      quad_bound_trials=ct["quad_bound_trials"])
    write_json(outdir / "certification.json", rep.to_json_dict(), meta=_meta(cfg))
    return 0 if rep.passed else 3


def _kinetic_one(cfg, rc, prof, epsilon):
    kn = cfg["kinetic"]
    ph = cfg["physics"]
    vgrid = build_velocity_grid(tuple(kn["counts"]), kn["extent_multiplier"],
                                max(ph["theta_minus"], ph["theta_plus"]))
    xgrid = SpatialGrid(-kn["x_max"], kn["x_max"], kn["nx"])
    xl = np.linspace(-kn["x_max"] * 1.5, kn["x_max"] * 1.5, 4 * kn["nx"] + 1)
    weul = lagrangian_to_eulerian(build_wave(prof, epsilon, 0.0, xl))
    finit = init_from_wave(weul, xgrid, vgrid)
    kcfg = KineticConfig(
        epsilon=epsilon, xgrid=xgrid, vgrid=vgrid, model=_model(cfg),
        t_final=kn["t_final"], snapshot_times=tuple(kn["snapshots"]),
        transport=kn["transport"], cfl=kn["cfl"],
        bc_left=(rc.rho_minus, np.zeros(3), ph["theta_minus"]),
        bc_right=(rc.rho_plus, np.zeros(3), ph["theta_plus"]))
    return kinetic_run(kcfg, finit, mstar_state=_mstar_state(cfg))


def run_kinetic(cfg, outdir: Path) -> int:
    rc = _riemann(cfg)
    _, lam_fn = _coefficient_tables(cfg, rc)
    prof = _profile(cfg, rc, lam_fn)
    traj = _kinetic_one(cfg, rc, prof, cfg["kinetic"]["epsilon"])
    meta = {**_meta(cfg), "vgrid": traj.config.vgrid.metadata(),
            "xgrid": traj.config.xgrid.metadata()}
    for f in traj.snapshots:
        write_snapshot(outdir / f"snapshot_t{f.time:g}.bin", f, meta=meta)
        rho, mom, etot = field_moments(f.values, f.vgrid)
        u = mom / rho[:, None]
        theta = etot / rho - 0.5 * np.sum(u**2, axis=1)
        write_csv(outdir / f"moments_t{f.time:g}.csv",
                  ["x", "rho", "u1", "u2", "u3", "theta"],
                  zip(f.xgrid.x, rho, u[:, 0], u[:, 1], u[:, 2], theta),
                  meta=meta)
    write_json(outdir / "kinetic_ledger.json", {
        "times": traj.times,
        "invariants": [[inv[0], list(inv[1]), inv[2]] for inv in traj.invariants],
        "micro_trace": traj.micro_trace,
        "negative_fraction": traj.negative_fraction,
        "mass_drift": traj.mass_drift(),
        "steps": traj.steps,
    }, meta=meta)
    return 0


def run_fluid(cfg, outdir: Path) -> int:
    rc = _riemann(cfg)
    mu_fn, lam_fn = _coefficient_tables(cfg, rc)
    prof = _profile(cfg, rc, lam_fn)
    fl = cfg["fluid"]
    x = np.linspace(-fl["x_max"], fl["x_max"], fl["nx"])
    w0 = build_wave(prof, fl["epsilon"], 0.0, x)
    state = FluidField(x=x, dx=float(x[1] - x[0]), v=w0.vbar.copy(),
                       u=w0.ubar.copy(), theta=w0.thetabar.copy(),
                       epsilon=fl["epsilon"], mu_fn=mu_fn, lam_fn=lam_fn)
    traj = ns_run(state, fl["t_final"], snapshot_times=fl["snapshots"],
                  safety=fl["safety"])
    meta = _meta(cfg)
    for st, t in zip(traj.snapshots, traj.times):
        write_csv(outdir / f"fluid_t{t:g}.csv",
                  ["x", "v", "u1", "u2", "u3", "theta"],
                  zip(st.x, st.v, st.u[:, 0], st.u[:, 1], st.u[:, 2], st.theta),
                  meta=meta)
    write_json(outdir / "fluid_ledger.json", {
        "times": traj.times,
        "totals": [list(t) for t in traj.ledger],
        "max_drift": traj.conservation_drift,
    }, meta=meta)
    return 0


def run_sweep(cfg, outdir: Path) -> int:
    rc = _riemann(cfg)
    model = _model(cfg)
    mu_fn, lam_fn = _coefficient_tables(cfg, rc)
    prof = _profile(cfg, rc, lam_fn)
    ph = cfg["physics"]
    ct = cfg["certify"]
    cert_grid = build_velocity_grid(tuple(ct["counts"]) if model.kind != "bgk"
                                    else tuple(cfg["kinetic"]["counts"]),
                                    ct["extent_multiplier"], ph["theta_minus"])
    cert = certify_operator_properties(
        model, (1.0 / ph["v_minus"], np.zeros(3), ph["theta_minus"]),
        _mstar_state(cfg), trials=ct["trials"], grid=cert_grid,
        seed=cfg["seed"], quad_bound_trials=ct["quad_bound_trials"])
    if not cert.passed:
        print("certification failed; aborting sweep", file=sys.stderr)
        return 3

    sw = cfg["sweep"]
    meta = _meta(cfg)
    trajectories = {}

    def run_one(eps):
        kn = dict(cfg["kinetic"])
        # include the diffusive-time snapshot where the tail bound binds
        t_diff = min(sw["h"] ** 2 / eps, kn["t_final"])
        snaps = sorted(set(kn["snapshots"] + [t_diff]))
        sub = copy.deepcopy(cfg)
        sub["kinetic"]["snapshots"] = snaps
        traj = _kinetic_one(sub, rc, prof, eps)
        trajectories[eps] = traj
        return traj

    report = convergence_sweep(sw["epsilons"], run_one, sw["h"], rc,
                               _mstar_state(cfg),
                               certification=cert.to_json_dict())
    rep_dict = report.to_json_dict()
    write_json(outdir / "convergence_report.json", rep_dict, meta=meta)
    write_csv(outdir / "convergence.csv",
              ["epsilon", "sup_error", "slope", "fit_residual"],
              [(e, v, report.slope, report.fit_residual)
               for e, v in zip(report.epsilons, report.sup_errors)],
              meta=meta)

    wanted = sw["energy_for"]
    for eps, traj in trajectories.items():
        if wanted != "all" and not np.isclose(eps, float(wanted)):
            continue
        er = build_energy_report(traj, prof, _mstar_state(cfg), model)
        gc = growth_check(er)
        write_csv(outdir / f"energy_eps{eps:g}.csv",
                  ["tau", "E6"] + list(er.components) + ["growth_ratio"],
                  [(er.tau[i], er.e6[i],
                    *[er.components[k][i] for k in er.components],
                    er.growth_ratio[i]) for i in range(len(er.tau))],
                  meta=meta)
        write_json(outdir / f"growth_eps{eps:g}.json", {
            "passed": gc.passed, "max_ratio": gc.max_ratio,
            "fitted_exponent": gc.fitted_exponent, "slack": gc.slack,
            "degenerate": gc.degenerate,
        }, meta=meta)
    return 0


def run_report(cfg, outdir: Path) -> int:
    """Summarize the JSON artifacts found in the output directory."""
    found = sorted(outdir.glob("*.json"))
    if not found:
        print(f"no JSON artifacts in {outdir}", file=sys.stderr)
        return 2
    status = 0
    for p in found:
        obj = json.loads(p.read_text())
        line = f"{p.name}:"
        for key in ("passed", "slope", "sup_errors", "max_drift", "mass_drift",
                    "sigma", "residual_norm", "max_ratio"):
            if key in obj:
                line += f" {key}={obj[key]}"
        print(line)
        if obj.get("passed") is False:
            status = 3
    return status


COMMANDS = {
    "wave": run_wave,
    "certify": run_certify,
    "kinetic": run_kinetic,
    "fluid": run_fluid,
    "sweep": run_sweep,
    "report": run_report,
}


def orchestrate(command: str, cfg: dict) -> int:
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg["seed"] % 2**32)
    resolved = copy.deepcopy(cfg)
    write_json(outdir / "resolved_config.json", resolved, meta=_meta(cfg))
    try:
        return COMMANDS[command](cfg, outdir)
    except (ConfigError, ValueError, RuntimeError) as e:
        write_json(outdir / "error.json",
                   {"error": str(e), "command": command})
        print(f"error: {e}", file=sys.stderr)
        return 1


def _add_common(p):
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kineticlab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name in ("wave", "kinetic", "fluid"):
            p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--theta-plus", type=float, default=None)
        p.add_argument("--theta-minus", type=float, default=None)
        p.add_argument("--model", type=str, default=None, choices=("bgk", "hard_sphere"))
    args = ap.parse_args(argv)

    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "epsilon", None) is not None:
        overrides[args.command] = {"epsilon": args.epsilon}
    if args.theta_plus is not None:
        overrides.setdefault("physics", {})["theta_plus"] = args.theta_plus
    if args.theta_minus is not None:
        overrides.setdefault("physics", {})["theta_minus"] = args.theta_minus
    if args.model is not None:
        overrides.setdefault("model", {})["kind"] = args.model

    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return orchestrate(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
