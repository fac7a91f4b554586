"""Command-line interface: simulation, analysis and experiment subcommands
with reproducible, manifest-stamped artifact directories."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__
from .experiments import (ExperimentConfig, records_to_csv, report,
                          report_to_json, run_paired_trials,
                          run_single_init_trials,
                          sample_filtered_policy_inits)
from .landscape import (Axis, LandscapeSpec, compute_landscape, default_axes,
                        sgs_area)
from .learning import (Feasible, FeasibleThenViable, LearnerConfig, Viable,
                       train)
from .policy import PolicyParams, sigma_from_variance_deg2
from .slip import (IntegratorConfig, ModelParams, Outcome, simulate_trajectory)
from .viability import (GridSpec, compute_transition_grid,
                        compute_viability_kernel, fit_reference_policy,
                        min_feasible_s, neutral_curve)


# ---------------------------------------------------------------------------
# config resolution

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        tree = json.load(fh)
    if not isinstance(tree, dict):
        raise click.ClickException("config file must hold a JSON object")
    return tree


def _model(tree: dict) -> ModelParams:
    return ModelParams(**tree.get("model", {}))


def _integrator(tree: dict) -> IntegratorConfig:
    return IntegratorConfig(**tree.get("integrator", {}))


def _grid_spec(tree: dict) -> GridSpec:
    return GridSpec(**tree.get("grid", {}))


def _learner(tree: dict) -> LearnerConfig:
    d = dict(tree.get("learner", {}))
    if "variance_schedule" in d:
        d["variance_schedule"] = tuple(
            (float(thr), math.radians(float(sig_deg)))
            for thr, sig_deg in d["variance_schedule"])
    return LearnerConfig(**d)


def _experiment(tree: dict, seed: int | None) -> ExperimentConfig:
    d = dict(tree.get("experiment", {}))
    if seed is not None:
        d["master_seed"] = seed
    return ExperimentConfig(**d)


def _resolved_config(p, cfg, extra: dict) -> dict:
    lc = extra.pop("learner", None)
    out = {"model": asdict(p), "integrator": asdict(cfg)}
    if lc is not None:
        out["learner"] = dict(
            asdict(lc),
            variance_schedule=[(thr, math.degrees(sig))
                               for thr, sig in lc.variance_schedule])
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# artifact output

def write_run(out_dir: str, files: dict[str, str], config: dict,
              seed: int) -> None:
    """Write artifact files plus a manifest with content digests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for name, content in sorted(files.items()):
        data = content.encode()
        (out / name).write_bytes(data)
        artifacts.append({"file": name,
                          "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {"tool": "sliprl", "version": __version__, "seed": seed,
                "config": config, "artifacts": artifacts}
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv(fieldnames: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# shared analysis plumbing

def _kernel_artifacts(tree: dict, p, cfg, n_jobs: int):
    """Transition grid, kernel, neutral curve and reference fit."""
    spec = _grid_spec(tree)
    grid = compute_transition_grid(spec, p, cfg, n_jobs=n_jobs)
    kernel = compute_viability_kernel(grid)
    curve = neutral_curve(grid, cfg)
    fit = fit_reference_policy(curve)
    return grid, kernel, curve, fit


common_options = [
    click.option("--seed", type=int, default=0, show_default=True,
                 help="Master RNG seed."),
    click.option("--config", "config_path", type=click.Path(exists=True),
                 default=None, help="JSON config tree; flags override it."),
    click.option("--out", "out_dir", type=click.Path(), required=True,
                 help="Output directory for artifacts + manifest.json."),
    click.option("--threads", type=int, default=1, show_default=True,
                 help="Worker processes for parallel sections."),
]


def with_common(f):
    for opt in reversed(common_options):
        f = opt(f)
    return f


@click.group()
@click.version_option(__version__)
def main():
    """SLIP-hopper return-map simulation, viability analysis and
    policy-gradient learning experiments."""


# ---------------------------------------------------------------------------
# subcommands

@main.command("transition-map")
@with_common
def transition_map_cmd(seed, config_path, out_dir, threads):
    """Evaluate the apex return map on the (s_bar, alpha) grid."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    spec = _grid_spec(tree)
    grid = compute_transition_grid(spec, p, cfg, n_jobs=threads)
    rows = []
    for i, s in enumerate(grid.s_values):
        for j, a in enumerate(grid.alpha_values):
            code = int(grid.outcome_codes[i, j])
            nxt = grid.s_next[i, j]
            rows.append({"s_bar": _fmt(s), "alpha_deg": _fmt(math.degrees(a)),
                         "outcome": Outcome(code).name.lower(),
                         "s_next": "" if math.isnan(nxt) else _fmt(nxt)})
    counts = {Outcome(c).name.lower(): int(np.sum(grid.outcome_codes == c))
              for c in Outcome}
    summary = {"grid": asdict(spec), "outcome_counts": counts}
    write_run(out_dir, {
        "transition_map.csv": _csv(["s_bar", "alpha_deg", "outcome",
                                    "s_next"], rows),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"grid": asdict(spec)}), seed)
    click.echo(f"transition map written to {out_dir}")


@main.command("kernel")
@with_common
def kernel_cmd(seed, config_path, out_dir, threads):
    """Compute the viability kernel, neutral curve and reference fit."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    grid, kernel, curve, fit = _kernel_artifacts(tree, p, cfg, threads)
    k_rows = [{"s_bar": _fmt(s), "viable": int(m)}
              for s, m in zip(kernel.s_values, kernel.member)]
    c_rows = [{"s_bar": _fmt(s), "alpha_deg": _fmt(math.degrees(a))}
              for s, a in curve]
    summary = {
        "s_low": kernel.s_low,
        "min_feasible_s": min_feasible_s(p),
        "reference_fit": {"theta0_deg_per_s": math.degrees(fit.theta0),
                          "theta1_deg": math.degrees(fit.theta1),
                          "rms_residual_deg": math.degrees(fit.rms_residual)},
    }
    write_run(out_dir, {
        "kernel.csv": _csv(["s_bar", "viable"], k_rows),
        "neutral_curve.csv": _csv(["s_bar", "alpha_deg"], c_rows),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"grid": asdict(grid.spec)}), seed)
    click.echo(f"kernel: s_low={kernel.s_low:.5f} -> {out_dir}")


@main.command("landscape")
@with_common
@click.option("--strategy", type=click.Choice(["viable", "feasible"]),
              default="viable", show_default=True)
@click.option("--variance", type=float, default=8.0, show_default=True,
              help="Exploration variance in deg^2.")
def landscape_cmd(seed, config_path, out_dir, threads, strategy, variance):
    """Monte-Carlo reward landscape over the policy-parameter grid."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    land = dict(tree.get("landscape", {}))
    n = int(land.get("n", 61))
    n_rollouts = int(land.get("n_rollouts", 100))
    eps = float(land.get("eps", 0.005))
    _, kernel, _, fit = _kernel_artifacts(tree, p, cfg, threads)
    t0ax, t1ax = default_axes(fit, kernel, n)
    strat = (Viable.from_kernel(kernel) if strategy == "viable"
             else Feasible.from_params(p))
    spec = LandscapeSpec(t0ax, t1ax, sigma_from_variance_deg2(variance),
                         strat, n_rollouts=n_rollouts)
    grid = compute_landscape(spec, p, cfg, seed, n_jobs=threads)
    rot = math.radians(45.0)
    rows = []
    for i, t0 in enumerate(t0ax.values):
        for j, t1 in enumerate(t1ax.values):
            u = t0 * math.cos(rot) - t1 * math.sin(rot)
            v = t0 * math.sin(rot) + t1 * math.cos(rot)
            rows.append({
                "theta0_deg_per_s": _fmt(math.degrees(t0)),
                "theta1_deg": _fmt(math.degrees(t1)),
                "rot_u": _fmt(u), "rot_v": _fmt(v),
                "mean_steps": _fmt(grid.mean_steps[i, j]),
                "capped": _fmt(grid.capped[i, j]),
            })
    summary = {"strategy": strategy, "variance_deg2": variance,
               "n_rollouts": n_rollouts, "seed": seed,
               "sgs_area": sgs_area(grid, eps), "eps": eps,
               "axes": {"theta0": asdict(t0ax), "theta1": asdict(t1ax)}}
    write_run(out_dir, {
        "landscape.csv": _csv(["theta0_deg_per_s", "theta1_deg", "rot_u",
                               "rot_v", "mean_steps", "capped"], rows),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"landscape": summary}), seed)
    click.echo(f"landscape sgs_area={summary['sgs_area']:.4f} -> {out_dir}")


@main.command("learn")
@with_common
@click.option("--strategy", type=click.Choice(
    ["viable", "feasible", "feasible-then-viable"]),
    default="viable", show_default=True)
@click.option("--theta0", type=float, default=None,
              help="Initial slope, deg per unit s_bar (default: fit).")
@click.option("--theta1", type=float, default=None,
              help="Initial offset, deg (default: fit).")
def learn_cmd(seed, config_path, out_dir, threads, strategy, theta0, theta1):
    """Run one learning trial and emit the learning curve."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    lc = _learner(tree)
    ec = _experiment(tree, seed)
    _, kernel, _, fit = _kernel_artifacts(tree, p, cfg, threads)
    strat = {
        "viable": Viable.from_kernel(kernel),
        "feasible": Feasible.from_params(p),
        "feasible-then-viable": FeasibleThenViable(
            min_feasible_s(p), kernel.s_low, ec.switch_threshold),
    }[strategy]
    t0 = math.radians(theta0) if theta0 is not None else fit.theta0
    t1 = math.radians(theta1) if theta1 is not None else fit.theta1
    pp = PolicyParams(t0, t1, lc.sigma_for(0.0))
    result = train(pp, strat, lc, p, cfg, seed)
    rows = [{"episode": i, "steps": int(v)}
            for i, v in enumerate(result.learning_curve)]
    summary = {"success": result.success,
               "episodes_used": result.episodes_used,
               "strategy": strategy, "seed": seed,
               "initial_policy": pp.to_json_dict(),
               "final_policy": result.final_policy.to_json_dict()}
    write_run(out_dir, {
        "learning_curve.csv": _csv(["episode", "steps"], rows),
        "train_result.json": json.dumps(summary, indent=2,
                                        sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"learner": lc, "strategy": strategy}), seed)
    click.echo(f"learn: success={result.success} "
               f"episodes={result.episodes_used} -> {out_dir}")


@main.command("experiment")
@with_common
@click.option("--mode", type=click.Choice(["random50", "single"]),
              default="random50", show_default=True,
              help="random50: paired trials over filtered inits; "
                   "single: repeated trials from one filtered init.")
def experiment_cmd(seed, config_path, out_dir, threads, mode):
    """Paired learning-reliability experiment (viable vs feasible)."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    lc = _learner(tree)
    ec = _experiment(tree, seed)
    _, kernel, _, fit = _kernel_artifacts(tree, p, cfg, threads)
    t0ax, t1ax = default_axes(fit, kernel)
    viable = Viable.from_kernel(kernel)
    ftv = FeasibleThenViable(min_feasible_s(p), kernel.s_low,
                             ec.switch_threshold)
    n_inits = ec.n_policy_inits if mode == "random50" else 1
    inits = sample_filtered_policy_inits(
        t0ax, t1ax, lc.sigma_for(0.0),
        viable, ExperimentConfig(
            n_policy_inits=n_inits, filter_threshold=ec.filter_threshold,
            filter_rollouts=ec.filter_rollouts,
            n_repeats_single=ec.n_repeats_single,
            switch_threshold=ec.switch_threshold,
            master_seed=ec.master_seed),
        p, cfg, max_steps=lc.max_steps_per_episode, n_jobs=threads)
    if mode == "random50":
        records = run_paired_trials(inits, viable, ftv, lc, ec, p, cfg,
                                    n_jobs=threads)
    else:
        records = run_single_init_trials(inits[0], viable, ftv, lc, ec, p,
                                         cfg, n_jobs=threads)
    rep = report(records)
    rep.update(mode=mode, master_seed=ec.master_seed)
    kernel_summary = {"s_low": kernel.s_low,
                      "min_feasible_s": min_feasible_s(p),
                      "reference_fit": {
                          "theta0_deg_per_s": math.degrees(fit.theta0),
                          "theta1_deg": math.degrees(fit.theta1)}}
    write_run(out_dir, {
        "records.csv": records_to_csv(records),
        "summary.json": report_to_json(rep),
        "kernel.json": json.dumps(kernel_summary, indent=2,
                                  sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"learner": lc, "experiment": asdict(ec),
                                 "mode": mode}), seed)
    click.echo(
        f"experiment[{mode}]: viable {rep['success_rate_viable']:.2f} vs "
        f"feasible-then-viable "
        f"{rep['success_rate_feasible_then_viable']:.2f} -> {out_dir}")


@main.command("trajectory")
@with_common
@click.option("--s-bar", type=float, required=True,
              help="Initial normalized apex height in (0, 1].")
@click.option("--alpha", type=float, required=True,
              help="Angle of attack in degrees.")
def trajectory_cmd(seed, config_path, out_dir, threads, s_bar, alpha):
    """Dense simulation of one apex-to-apex step."""
    tree = _load_config(config_path)
    p, cfg = _model(tree), _integrator(tree)
    traj = simulate_trajectory(s_bar, math.radians(alpha), p, cfg)
    rows = []
    for i in range(len(traj.t)):
        rows.append({"t": _fmt(traj.t[i]), "x": _fmt(traj.x[i]),
                     "y": _fmt(traj.y[i]), "vx": _fmt(traj.vx[i]),
                     "vy": _fmt(traj.vy[i]),
                     "phase": traj.phase[i].value,
                     "x_foot": ("" if math.isnan(traj.x_f[i])
                                else _fmt(traj.x_f[i]))})
    energy = traj.energy(p)
    summary = {"s_bar": s_bar, "alpha_deg": alpha,
               "outcome": Outcome(traj.outcome.outcome).name.lower(),
               "s_next": (None if math.isnan(traj.outcome.s_next)
                          else traj.outcome.s_next),
               "event_times": traj.event_times,
               "max_rel_energy_error": float(
                   np.max(np.abs(energy - p.e_total)) / p.e_total)}
    write_run(out_dir, {
        "trajectory.csv": _csv(["t", "x", "y", "vx", "vy", "phase",
                                "x_foot"], rows),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }, _resolved_config(p, cfg, {"s_bar": s_bar, "alpha_deg": alpha}), seed)
    click.echo(f"trajectory: outcome={summary['outcome']} -> {out_dir}")


if __name__ == "__main__":
    main()
