"""Command-line interface: ``spdcring simulate | sweep | verify | estimate``.

Exit codes: 0 success, 1 invalid input, 2 numerical accuracy failure,
3 resource limit. Every option can also be set through an environment
variable (``SPDCRING_CONFIG``, ``SPDCRING_OUT``, ``SPDCRING_THREADS``,
``SPDCRING_TOLERANCE``).
"""

from __future__ import annotations

import math
import sys
import warnings
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import config as config_mod
from .dynamics import integrate_amplitudes, quasi_steady_ratio
from .errors import AccuracyError, ResourceError, SpdcError, ValidationError
from .estimate import estimate_g, kappa_from_omega
from .flux import (
    DegenerateRidge,
    optimal_g,
    optimal_joint,
    optimal_kappa,
    pair_flux,
    steady_flux_ratio,
    waveguide_flux,
)
from .lindblad import MAX_ORACLE_MODES, compare_with_sse
from .model import grid_from_count, omega_kd_from_kappa
from .output import write_csv, write_json
from .sweep import run_sweep

ENV_PREFIX = "SPDCRING"
KEEP_MODES_LIMIT = 256
VERIFY_THRESHOLD = 1e-6


def _params_dict(params) -> dict:
    return {
        "kappa_per_s": params.kappa,
        "kappa_1_per_s": params.kappa_1,
        "kappa_2_per_s": params.kappa_2,
        "g_per_s": params.g,
        "g_phase_rad": params.g_phase,
        "gamma_1_per_s": params.gamma_1,
        "gamma_2_per_s": params.gamma_2,
        "mu_d_per_s": params.mu_d,
        "delta_12_rad_per_s": params.delta_12,
        "omega_d_rad_per_s": params.omega_d,
    }


def _out_dir(cfg, out: Optional[str]) -> Path:
    return Path(out or cfg.section("output").get("directory", "."))


def _default_horizon(params, grid, packet_bw: Optional[float]) -> float:
    if packet_bw is not None and packet_bw < grid.span / 4:
        t = 1.05 * 0.4769362762044699 / packet_bw
    else:
        rate = params.kappa_sigma + params.pair_decay + params.g
        t = 20 / rate if rate > 0 else grid.revival_time / 2
    return min(t, 0.95 * grid.revival_time)


# -- library-level commands -------------------------------------------------


def cmd_simulate(cfg, out=None, tolerance=None) -> dict:
    params = cfg.physics()
    grid = cfg.grid(params)
    packet = cfg.packet(grid)
    sim = cfg.section("simulate")
    is_gaussian = cfg.section("pulse").get("shape", "gaussian") == "gaussian"
    t_final = sim.get("t_final_s") or _default_horizon(
        params, grid, packet.bandwidth if is_gaussian else None)
    dt = sim.get("dt_s", t_final / 1000)
    rtol = tolerance or sim.get("rtol", 1e-9)
    keep = sim.get("keep_modes", grid.n_modes <= KEEP_MODES_LIMIT)
    traj = integrate_amplitudes(params, grid, packet, t_final, dt, rtol=rtol,
                                frame=sim.get("frame", "mode"), keep_modes=keep)

    c12_sq = np.abs(traj.c_12) ** 2
    pi_1, pi_2 = pair_flux(np.minimum(c12_sq, 1.0), params.kappa_1, params.kappa_2)
    pi_wg = waveguide_flux(grid, packet, traj.times)

    columns = ["time_s", "re_c_d", "im_c_d", "re_c_12", "im_c_12"]
    blocks = [traj.times[:, None], traj.c_d.real[:, None], traj.c_d.imag[:, None],
              traj.c_12.real[:, None], traj.c_12.imag[:, None]]
    if keep:
        for j, label in enumerate(traj.labels):
            columns += [f"re_c_{label}", f"im_c_{label}"]
        inter = np.empty((traj.times.size, 2 * grid.n_modes))
        inter[:, 0::2] = traj.c_k.real
        inter[:, 1::2] = traj.c_k.imag
        blocks.append(inter)
    columns += ["waveguide_pop", "vacuum_pop", "pi_1_per_s", "pi_2_per_s", "pi_wg_per_s"]
    blocks += [traj.waveguide_pop[:, None], traj.vacuum_pop[:, None], pi_1[:, None],
               pi_2[:, None], pi_wg[:, None]]
    table = np.hstack(blocks)

    summary = {
        "command": "simulate",
        "physics": _params_dict(params),
        "grid": {"length_m": grid.L, "group_velocity_m_per_s": grid.v_g,
                 "n_modes": grid.n_modes, "spacing_rad_per_s": grid.spacing},
        "pulse_bandwidth_rad_per_s": packet.bandwidth,
        "t_final_s": float(traj.times[-1]),
        "rtol": rtol,
        "peak_c12_sq": float(c12_sq.max()),
        "peak_pi_1_per_s": float(pi_1.max()),
        "peak_pi_2_per_s": float(pi_2.max()),
        "peak_pi_wg_per_s": float(pi_wg.max()),
        "vacuum_pop_final": float(traj.vacuum_pop[-1]),
        "closed_form_ratio_1": steady_flux_ratio(params)[0],
        "closed_form_ratio_2": steady_flux_ratio(params)[1],
        "quasi_steady": None,
    }
    if is_gaussian:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                res = quasi_steady_ratio(traj, params, grid, packet)
            summary["quasi_steady"] = {
                "ratio_1": res.ratio_1, "ratio_2": res.ratio_2,
                "relative_spread": res.spread, "window_s": list(res.window),
                "settled": res.settled,
                "warnings": [str(w.message) for w in caught],
            }
        except ValidationError:
            pass

    out_dir = _out_dir(cfg, out)
    prefix = cfg.prefix
    write_csv(out_dir / f"{prefix}_trajectory.csv", columns, table.tolist(),
              header={**_params_dict(params), "n_modes": grid.n_modes, "length_m": grid.L},
              config_sha256=cfg.sha256, precision=cfg.precision)
    write_json(out_dir / f"{prefix}_summary.json", summary, config_sha256=cfg.sha256)
    return summary


def cmd_sweep(cfg, out=None, threads=1, tolerance=None) -> dict:
    spec = cfg.sweep_spec(rtol=tolerance)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = run_sweep(spec, threads=threads)
    columns = list(result.names) + ["ratio_1", "ratio_2"]
    if result.quality is not None:
        columns.append("window_spread")
    rows = []
    flat_q = result.quality.ravel() if result.quality is not None else None
    for idx, (coords, r1, r2) in enumerate(result.rows()):
        row = list(coords) + [r1, r2]
        if flat_q is not None:
            row.append(flat_q[idx])
        rows.append(row)
    header = {**_params_dict(spec.base), "mode": spec.mode, "symmetric": spec.symmetric,
              "refinement": result.method}
    for k, ax in enumerate(spec.axes, start=1):
        header[f"axis{k}"] = f"{ax.name} {ax.start!r} {ax.stop!r} {ax.num} {ax.scale}"

    reference = {}
    for name, fn in (("optimal_g_per_s", optimal_g), ("optimal_kappa_per_s", optimal_kappa)):
        try:
            reference[name] = fn(spec.base)
        except ValidationError:
            reference[name] = None
    try:
        reference["optimal_joint_per_s"] = list(optimal_joint(spec.base))
    except DegenerateRidge as ridge:
        reference["optimal_joint_per_s"] = None
        reference["ridge_product_per_s2"] = ridge.product
    except ValidationError:
        reference["optimal_joint_per_s"] = None

    meta = {
        "command": "sweep",
        "physics": _params_dict(spec.base),
        "mode": spec.mode,
        "axes": [{"name": a.name, "start": a.start, "stop": a.stop, "num": a.num,
                  "scale": a.scale} for a in spec.axes],
        "argmax": result.argmax,
        "argmax_value": result.argmax_value,
        "refinement": result.method,
        "closed_form_reference": reference,
        "warnings": [str(w.message) for w in caught],
    }
    out_dir = _out_dir(cfg, out)
    write_csv(out_dir / f"{cfg.prefix}_sweep.csv", columns, rows, header=header,
              config_sha256=cfg.sha256, precision=cfg.precision)
    write_json(out_dir / f"{cfg.prefix}_sweep.json", meta, config_sha256=cfg.sha256)
    return meta


def cmd_verify(cfg, out=None, tolerance=None) -> dict:
    """Compare amplitude and master-equation populations for each configured case.

    The report is always written; an exceedance raises :class:`AccuracyError`
    naming the worst state and time.
    """
    ver = cfg.section("verify")
    threshold = ver.get("threshold", VERIFY_THRESHOLD)
    rtol = tolerance or ver.get("rtol", 1e-10)
    cases = ver.get("cases") or [{"name": "base"}]
    rows, summaries = [], []
    worst = None
    for case in cases:
        params = cfg.physics(case.get("physics"))
        oracle = None
        if "oracle_physics" in case:
            oracle = cfg.physics({**case.get("physics", {}), **case["oracle_physics"]})
        grid = cfg.grid(params)
        if grid.n_modes > MAX_ORACLE_MODES:
            raise ResourceError(
                f"case {case['name']}: {grid.n_modes} modes exceed the oracle limit "
                f"of {MAX_ORACLE_MODES}")
        packet = cfg.packet(grid)
        rate = params.kappa_sigma + params.pair_decay + params.g
        t_final = ver.get("t_final_s") or min(
            20 / rate if rate > 0 else grid.revival_time / 2, 0.95 * grid.revival_time)
        dt = ver.get("dt_s", t_final / 200)
        report = compare_with_sse(params, grid, packet, t_final, dt,
                                  oracle_params=oracle, rtol=rtol)
        label, t_worst, diff = report.worst
        summaries.append({"name": case["name"], "physics": _params_dict(params),
                          "n_modes": grid.n_modes, "max_discrepancy": diff,
                          "worst_state": label, "worst_time_s": t_worst,
                          "passed": diff <= threshold})
        if worst is None or diff > worst[2]:
            worst = (case["name"], label, diff, t_worst)
        rows.extend([case["name"], *r] for r in report.rows())

    out_dir = _out_dir(cfg, out)
    write_csv(out_dir / f"{cfg.prefix}_verify.csv",
              ["case", "time_s", "state", "population_sse", "population_lindblad", "abs_diff"],
              rows, header={"threshold": threshold, "rtol": rtol},
              config_sha256=cfg.sha256, precision=cfg.precision)
    passed = worst[2] <= threshold
    result = {"command": "verify", "threshold": threshold, "passed": passed,
              "max_discrepancy": worst[2], "cases": summaries}
    write_json(out_dir / f"{cfg.prefix}_verify.json", result, config_sha256=cfg.sha256)
    if not passed:
        raise AccuracyError(
            f"SSE/Lindblad discrepancy {worst[2]:.3g} > {threshold:g} in case {worst[0]}, "
            f"state {worst[1]} at t={worst[3]:.6g} s")
    return result


def cmd_estimate(cfg, out=None) -> dict:
    geom = cfg.device()
    g = estimate_g(geom)
    result = {"command": "estimate", "g_per_s": g, "mode_volume_m3": geom.volume}
    grid_sec = cfg.section("grid")
    if "length_m" in grid_sec:
        grid = grid_from_count(grid_sec["length_m"],
                               grid_sec.get("group_velocity_m_per_s", config_mod.DEFAULT_V_G), 1)
        if "physics" in cfg.raw and "kappa_per_s" in cfg.raw["physics"]:
            kappa = cfg.raw["physics"]["kappa_per_s"]
            result["kappa_per_s"] = kappa
            result["omega_kd_from_kappa_rad_per_s"] = omega_kd_from_kappa(grid, kappa)
        omega = cfg.section("device").get("omega_kd_rad_per_s")
        if omega is not None:
            result["omega_kd_rad_per_s"] = omega
            result["kappa_from_omega_per_s"] = kappa_from_omega(omega, grid)
    write_json(_out_dir(cfg, out) / f"{cfg.prefix}_estimate.json", result,
               config_sha256=cfg.sha256)
    return result


# -- click wrappers -----------------------------------------------------------


class _Group(click.Group):
    """Maps package errors onto the exit-code contract."""

    def main(self, args=None, prog_name=None, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(args=args, prog_name=prog_name, **kwargs)
        except click.ClickException as exc:
            exc.show()
            sys.exit(ValidationError.exit_code)
        except click.Abort:
            click.echo("aborted", err=True)
            sys.exit(1)
        except SpdcError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except MemoryError:
            click.echo("error: out of memory; reduce n_modes or the output sampling", err=True)
            sys.exit(ResourceError.exit_code)
        sys.exit(rv if isinstance(rv, int) else 0)


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(dir_okay=False), envvar=f"{ENV_PREFIX}_CONFIG",
                           show_envvar=True, help="JSON run configuration.")
_out_opt = click.option("--out", "out", type=click.Path(file_okay=False),
                        envvar=f"{ENV_PREFIX}_OUT", show_envvar=True,
                        help="Output directory (overrides output.directory).")
_tol_opt = click.option("--tolerance", type=float, envvar=f"{ENV_PREFIX}_TOLERANCE",
                        show_envvar=True, help="Integrator relative tolerance.")
_threads_opt = click.option("--threads", type=click.IntRange(min=1), default=1,
                            envvar=f"{ENV_PREFIX}_THREADS", show_envvar=True,
                            help="Worker threads for sweeps.")


def _check_tol(tolerance):
    if tolerance is not None and not (0 < tolerance < 1 and math.isfinite(tolerance)):
        raise ValidationError(f"--tolerance must lie in (0, 1), got {tolerance}")


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Single-photon driven SPDC in a waveguide-coupled microring."""


@main.command()
@_config_opt
@_out_opt
@_threads_opt
@_tol_opt
def simulate(config_path, out, threads, tolerance):
    """Integrate the amplitude equations; write trajectory CSV and summary JSON."""
    _check_tol(tolerance)
    s = cmd_simulate(config_mod.load(config_path), out, tolerance)
    click.echo(f"peak |C12|^2 = {s['peak_c12_sq']:.6g}")
    click.echo(f"vacuum_pop_final = {s['vacuum_pop_final']:.6g}")
    if s["quasi_steady"]:
        click.echo(f"quasi-steady Pi_1/Pi_wg = {s['quasi_steady']['ratio_1']:.6g} "
                   f"(closed form {s['closed_form_ratio_1']:.6g})")


@main.command()
@_config_opt
@_out_opt
@_threads_opt
@_tol_opt
def sweep(config_path, out, threads, tolerance):
    """Evaluate the signal flux ratio on a 1-D or 2-D parameter grid."""
    _check_tol(tolerance)
    meta = cmd_sweep(config_mod.load(config_path), out, threads, tolerance)
    coords = ", ".join(f"{k}={v:.9g}" for k, v in meta["argmax"].items())
    click.echo(f"argmax {coords}: Pi_1/Pi_wg = {meta['argmax_value']:.12g} ({meta['refinement']})")
    for w in meta["warnings"]:
        click.echo(f"warning: {w}", err=True)


@main.command()
@_config_opt
@_out_opt
@_threads_opt
@_tol_opt
def verify(config_path, out, threads, tolerance):
    """Cross-check amplitude dynamics against the master-equation oracle."""
    _check_tol(tolerance)
    res = cmd_verify(config_mod.load(config_path), out, tolerance)
    for case in res["cases"]:
        click.echo(f"{case['name']}: max discrepancy {case['max_discrepancy']:.3g} "
                   f"({'pass' if case['passed'] else 'FAIL'})")


@main.command()
@_config_opt
@_out_opt
@_threads_opt
@_tol_opt
def estimate(config_path, out, threads, tolerance):
    """Nonlinear coupling g from device geometry and kappa/Omega conversions."""
    res = cmd_estimate(config_mod.load(config_path), out)
    click.echo(f"g = {res['g_per_s']:.6g} 1/s")
    click.echo(f"mode volume = {res['mode_volume_m3']:.6g} m^3")
    if "omega_kd_from_kappa_rad_per_s" in res:
        click.echo(f"kappa = {res['kappa_per_s']:.6g} 1/s -> |Omega_kd| = "
                   f"{res['omega_kd_from_kappa_rad_per_s']:.6g} rad/s")
    if "kappa_from_omega_per_s" in res:
        click.echo(f"|Omega_kd| = {res['omega_kd_rad_per_s']:.6g} rad/s -> kappa = "
                   f"{res['kappa_from_omega_per_s']:.6g} 1/s")


if __name__ == "__main__":
    main()
