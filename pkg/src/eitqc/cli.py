"""Command line scenario runner.

    eitqc run CONFIG [--seed N] [--out DIR]
    eitqc validate CONFIG

``run`` writes ``params.json`` (config echo, resolved parameters and a
timestamp), ``summary.json`` and the scenario's CSV files into the output
directory.  Everything except ``params.json`` is byte-identical for a fixed
config and seed.  Exit codes: 0 ok, 2 config error, 3 precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np

from . import blockade, circuit, config, detector, medium, polariton, qmemory, xpm
from .checks import Check, Report
from .config import ConfigError, Section

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION = 0, 2, 3


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    if dataclasses.is_dataclass(v):
        return _num(dataclasses.asdict(v))
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_num(obj), indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _gaussian(center, sigma):
    return lambda z: np.exp(-((np.asarray(z) - center) ** 2) / (4 * sigma**2))


# --- scenarios ----------------------------------------------------------------
# each returns (resolved parameters, summary) and writes its data files into out


def run_spectra(cfg, out: Path):
    p, refs = config.medium(cfg)
    s = cfg.section("scan", refs) if cfg.has("scan") else Section("scan", {}, refs)
    span = s.quantity("span", 3 * p.gamma_ge)
    points = s.integer("points", 2001)
    s.finish()
    if points < 3 or points % 2 == 0:
        raise s.error("points", "need an odd count of at least 3 so the scan contains delta_R = 0")
    half = np.linspace(0.0, span, points // 2 + 1)
    delta_R = np.concatenate([-half[:0:-1], half])
    resp = medium.spectrum(p, delta_R)
    chi = np.asarray(medium.susceptibility(p, resp.delta, delta_R, normalized=True))
    two = np.asarray(medium.two_level_susceptibility(p, resp.delta, normalized=True))
    rows = zip(delta_R, delta_R / p.gamma_ge, chi.real, chi.imag, two.imag, resp.transmission, resp.phase)
    _write_csv(out / "spectra.csv",
               ["delta_R", "delta_R_over_gamma", "re_chi", "im_chi", "im_chi_two_level", "transmission", "phase"],
               rows)
    mid = points // 2
    im = chi.imag
    peaks = [float(delta_R[i] / p.gamma_ge) for i in range(1, points - 1) if im[i] > im[i - 1] and im[i] >= im[i + 1]]
    summary = {
        "im_chi_ratio_at_zero": float(im[mid] / two.imag[mid]),
        "predicted_ratio": p.gamma_R * p.gamma_ge / (p.gamma_R * p.gamma_ge + p.rabi_sq),
        "peaks_over_gamma": peaks,
        "transmission_at_zero": float(resp.transmission[mid]),
        "optical_depth": p.optical_depth,
    }
    return {"medium": p}, summary


def _pulse(cfg, p, refs, default_grid):
    T, s = config.pulse_duration(cfg, p, refs)
    grid = s.integer("grid", default_grid)
    steps = s.integer("steps", 1000)
    s.used.update({"hold", "ramp"} & set(s.raw))
    s.finish()
    try:
        pulse = polariton.PulseEnvelope.gaussian(T, grid)
    except ValueError as e:
        raise s.error("grid", str(e)) from None
    return pulse, s, steps


def _envelope_rows(a: polariton.PulseEnvelope, b: polariton.PulseEnvelope):
    z = a.z
    gb = b.at(z)
    return zip(z, a.samples.real, a.samples.imag, gb.real, gb.imag)


def run_slowlight(cfg, out: Path):
    p, refs = config.medium(cfg)
    pulse, _, steps = _pulse(cfg, p, refs, 1024)
    res = polariton.transmit(pulse, p, grid_size=pulse.grid_size, steps=steps)
    _write_csv(out / "envelopes.csv", ["z", "in_re", "in_im", "out_re", "out_im"], _envelope_rows(pulse, res))
    vg = medium.group_velocity(p)
    summary = {
        "pulse_duration": polariton.pulse_duration(pulse),
        "group_velocity": vg,
        "delay": polariton.measured_delay(pulse, res, p.length),
        "predicted_delay": p.length / vg,
        "output_norm": res.norm(),
    }
    return {"medium": p}, summary


def run_store(cfg, out: Path):
    p, refs = config.medium(cfg)
    s = cfg.section("pulse", refs) if cfg.has("pulse") else Section("pulse", {}, refs)
    hold_time = s.quantity("hold", 0.0)
    ramp = s.quantity("ramp") if "ramp" in s else None
    if hold_time < 0:
        raise s.error("hold", "must be non-negative")
    pulse, _, steps = _pulse(cfg, p, refs, 4096)
    rt = polariton.round_trip(pulse, p, hold_time, ramp, grid_size=pulse.grid_size, steps=steps)
    _write_csv(out / "envelopes.csv", ["z", "in_re", "in_im", "out_re", "out_im"], _envelope_rows(pulse, rt.output))
    summary = {k: v for k, v in dataclasses.asdict(rt).items() if k != "output"}
    summary["predicted_efficiency"] = math.exp(-2 * p.gamma_R * hold_time)
    return {"medium": p, "hold": hold_time, "ramp": ramp}, summary


def run_memory(cfg, out: Path):
    s = cfg.section("memory")
    alpha = s.complex_("alpha", 1 / math.sqrt(2))
    beta = s.complex_("beta", 1j / math.sqrt(2))
    gamma_R = s.quantity("gamma_R")
    holds = s.quantities("holds")
    s.finish()
    try:
        q = qmemory.PolarizationQubit(alpha, beta)
    except ValueError as e:
        raise s.error("alpha", str(e)) from None
    if gamma_R < 0 or any(t < 0 for t in holds):
        raise s.error("holds", "gamma_R and hold times must be non-negative")
    stored = qmemory.store_qubit(q, 0.0, gamma_R)
    rows = []
    for t in holds:
        sq = qmemory.hold(stored, t)
        try:
            back, p = qmemory.retrieve_qubit(sq)
            fid = back.fidelity(q)
            a, b = back.alpha, back.beta
        except ValueError:
            p, fid, a, b = sq.norm_remaining, math.nan, math.nan, math.nan
        rows.append([t, p, qmemory.success_probability(gamma_R, t), fid,
                     complex(a).real, complex(a).imag, complex(b).real, complex(b).imag])
    _write_csv(out / "memory.csv",
               ["hold", "success_prob", "predicted", "fidelity", "alpha_re", "alpha_im", "beta_re", "beta_im"], rows)
    summary = {"min_fidelity": float(np.nanmin([r[3] for r in rows])) if rows else math.nan,
               "max_success_error": max((abs(r[1] - r[2]) for r in rows), default=0.0)}
    return {"qubit": q, "gamma_R": gamma_R, "holds": holds}, summary


def run_source(cfg, out: Path):
    trap, samples, workers = config.trap(cfg)
    rep = blockade.source_fidelity(trap, samples, workers)
    _write_csv(out / "checks.csv", ["name", "lhs", "rhs", "ratio", "passed"],
               [[c.name, c.lhs, c.rhs, c.ratio, c.passed] for c in rep.checks.checks])
    return {"trap": trap, "samples": samples, "workers": workers}, rep.to_dict()


def run_xpm(cfg, out: Path):
    tp = config.tripod(cfg)
    s = cfg.section("twophoton") if cfg.has("twophoton") else Section("twophoton", {})
    n = s.integer("n", 128)
    box = s.quantity("box", 200.0) / tp.delta_q
    sigma = s.quantity("sigma", 5.0) / tp.delta_q
    offset = s.quantity("offset", 0.0) / tp.delta_q
    distance = s.quantity("distance", tp.length)
    s.finish()
    if n < 4:
        raise s.error("n", "need at least 4 grid points")
    z = -box / 2 + np.arange(n) * box / n
    try:
        state = xpm.product_state(_gaussian(-offset / 2, sigma)(z), _gaussian(offset / 2, sigma)(z), box, tp.delta_q)
    except ValueError as e:
        raise s.error("n", f"{e} (n={n}, box={box:g} m)") from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        co = xpm.xpm_coefficients(tp)
    out_state = xpm.evolve_two_photon(state, tp, distance)
    ref = xpm.translate(state, distance, distance / tp.group_velocity)
    ov = ref.overlap(out_state)
    xpm.dump_psi(state, out / "psi_in.csv", tp)
    xpm.dump_psi(out_state, out / "psi_out.csv", tp)
    cond = xpm.pi_condition(tp)
    coeffs = {k: v for k, v in dataclasses.asdict(co).items() if k != "checks"}
    summary = {
        "coefficients": coeffs,
        "checks": co.checks.to_dict(),
        "warnings": [str(w.message) for w in caught],
        "conditional_phase": xpm.conditional_phase(tp) * distance / tp.length,
        "pi_condition": {"holds": cond.holds, "lhs": cond.lhs, "rhs": cond.rhs, "ratio": cond.ratio},
        "modes_in_band": state.modes_in_band,
        "overlap_with_free": ov,
        "output_phase": float(np.angle(ov)),
        "output_norm": out_state.norm(),
    }
    return {"tripod": tp, "n": n, "box": box, "sigma": sigma, "offset": offset, "distance": distance}, summary


def run_detect(cfg, out: Path):
    d = config.detector_params(cfg)
    s = cfg.section("detector")
    trials = s.integer("trials", 10_000)
    alpha = s.complex_("alpha", 1 / math.sqrt(2))
    beta = s.complex_("beta", 1 / math.sqrt(2))
    if trials < 1:
        raise s.error("trials", "must be at least 1")
    try:
        q = qmemory.PolarizationQubit(alpha, beta)
    except ValueError as e:
        raise s.error("alpha", str(e)) from None
    rng = np.random.default_rng(cfg.seed)
    outcomes = [detector.measure_polarization(q, d, rng).outcome for _ in range(trials)]
    detector.write_records(out / "records.csv", outcomes)
    rep = detector.reliability(d)
    summary = {
        "fluorescence_rate": detector.fluorescence_rate(d),
        "integration_time": d.t,
        "signal": detector.signal(d),
        "signal_saturated": detector.signal(d, saturated=True),
        "click_probability": detector.click_probability(d),
        "dark_click_probability": detector.click_probability(d, False),
        "counts": {k: outcomes.count(k) for k in ("V", "H", "none")},
        "checks": rep.to_dict(),
    }
    return {"detector": d, "trials": trials, "qubit": q}, summary


def _program(cfg):
    s = cfg.section("circuit")
    if ("program" in s) == ("program_file" in s):
        raise s.error("program", "give exactly one of program or program_file")
    try:
        if "program" in s:
            prog = circuit.GateProgram.parse(s.text("program"))
        else:
            path = Path(s.text("program_file"))
            if not path.is_absolute() and cfg.path is not None:
                path = cfg.path.parent / path
            prog = circuit.GateProgram.load(path)
    except OSError as e:
        raise s.error("program_file", e.strerror) from None
    except ValueError as e:
        raise s.error("program", str(e)) from None
    n = s.integer("qubits", prog.n_qubits())
    trials = s.integer("trials", 1000)
    tol = s.quantity("cz_tol", xpm.PHASE_TOL)
    s.finish()
    if not 1 <= n <= circuit.MAX_QUBITS:
        raise s.error("qubits", f"must lie in 1..{circuit.MAX_QUBITS}")
    if trials < 1:
        raise s.error("trials", "must be at least 1")
    d = config.detector_params(cfg) if cfg.has("detector") else None
    tp = config.tripod(cfg) if cfg.has("tripod") else None
    try:
        prog.validate(n, tp)
    except (IndexError, ValueError) as e:
        raise s.error("program", str(e)) from None
    return prog, n, trials, tol, d, tp


def run_circuit(cfg, out: Path):
    prog, n, trials, tol, d, tp = _program(cfg)
    rows = circuit.run_trials(prog, n, trials, cfg.seed, detector=d, tripod=tp, tol=tol)
    circuit.write_results(out / "results.csv", prog, rows)
    counts: dict[str, int] = {}
    for r in rows:
        key = "".join(str(o) for o in r[1:-1])
        counts[key] = counts.get(key, 0) + 1
    summary = {
        "trials": trials,
        "counts": dict(sorted(counts.items())),
        "mean_success_prob": float(np.mean([r[-1] for r in rows])),
    }
    return {"qubits": n, "trials": trials, "cz_tol": tol, "detector": d, "tripod": tp}, summary


SCENARIO_RUNNERS = {
    "spectra": run_spectra,
    "slowlight": run_slowlight,
    "store": run_store,
    "memory": run_memory,
    "source": run_source,
    "xpm": run_xpm,
    "detect": run_detect,
    "circuit": run_circuit,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def run_scenario(cfg: config.ScenarioConfig) -> dict:
    """Execute one scenario; returns the summary.  Raises ConfigError or a precondition error."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    resolved, summary = SCENARIO_RUNNERS[cfg.name](cfg, out)
    _write_json(out / "summary.json", summary)
    echo = cfg.echo()
    echo["resolved"] = resolved
    echo["version"] = _version()
    echo["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _write_json(out / "params.json", echo)
    return summary


# --- validate -----------------------------------------------------------------


def _prefixed(rep: Report, prefix: str, into: Report) -> None:
    for c in rep.checks:
        into.add(dataclasses.replace(c, name=f"{prefix}.{c.name}"))


def validate(cfg: config.ScenarioConfig) -> Report:
    """All diagnostics the config's sections allow, without simulating."""
    rep = Report()
    if cfg.has("medium"):
        p, refs = config.medium(cfg)
        T = None
        if cfg.has("pulse") or cfg.name in ("slowlight", "store"):
            if medium.group_velocity(p) > 0 or (cfg.has("pulse") and "duration" in cfg.sections["pulse"]):
                T, _ = config.pulse_duration(cfg, p, refs)
        _prefixed(medium.eit_validity(p, T), "medium", rep)
    if cfg.has("tripod"):
        tp = config.tripod(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _prefixed(xpm.xpm_coefficients(tp).checks, "tripod", rep)
            _prefixed(xpm.absorption_regime(tp), "tripod", rep)
        cond = xpm.pi_condition(tp)
        rep.add(Check("tripod.pi_condition", cond.lhs, cond.rhs, cond.ratio, cond.holds,
                      "(delta_q L / 2 pi)^2 > (v_g / c) |Omega_d|^2 / g^2"))
        tol = xpm.PHASE_TOL
        if cfg.has("circuit") and "cz_tol" in cfg.sections["circuit"]:
            tol = Section("circuit", cfg.sections["circuit"]).quantity("cz_tol")
        err = abs(xpm.conditional_phase(tp) - math.pi)
        rep.add(Check("tripod.phase_near_pi", err, tol, err / tol, bool(err < tol), "|phi - pi| < tol"))
    if cfg.has("trap"):
        trap, _, _ = config.trap(cfg)
        _prefixed(blockade.blockade_checks(trap), "trap", rep)
    if cfg.has("detector"):
        _prefixed(detector.reliability(config.detector_params(cfg)), "detector", rep)
    if cfg.has("circuit"):
        _program(cfg)
    return rep


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eitqc", description="Run or validate an EIT quantum optics scenario.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the scenario and write its data files"),
                        ("validate", "print the validity checks without simulating")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="INI scenario file")
        sp.add_argument("--seed", type=int, help="override [scenario] seed")
        sp.add_argument("--out", help="override [scenario] out directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        cfg = config.load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = Path(args.out)
        if args.command == "validate":
            rep = validate(cfg)
            print(rep.table())
            print("all checks pass" if rep.ok else f"{len(rep.failed())} check(s) fail")
            return EXIT_OK if rep.ok else EXIT_PRECONDITION
        summary = run_scenario(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(json.dumps(_num(summary), indent=2))
    print(f"wrote {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
