"""Command-line front end: ``quasifeff {curvature,check,invariance}``.

Exit codes: 0 success or criterion satisfied, 1 criterion failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import product

import numpy as np

from . import __version__
from . import bundle as B
from . import embeddability as E
from .config import PARAMETER_KEYS, ConfigError, RunConfig, load_config
from .cr import GaugeTransform, GaugedCoordinateCR
from .curvature import alpha_plane_ricci, curvature, levi_civita
from .kernel import GENERIC, HEISENBERG, MU_EXACT, ParseError, evaluate, normalize, to_latex, to_text
from .kernel.evaluate import MissingAssignment

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
FORMATS = ("text", "json", "latex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--structure", help="builtin structure, e.g. heisenberg or heisenberg-gauged(tau=x1,theta=0)")
    common.add_argument("--config", help="TOML run configuration")
    for k in ("P", "a", "s", "x", "H"):
        common.add_argument(f"--{k}", dest=k, help=f"quasi-Fefferman parameter {k} (expression)")
    common.add_argument("--psi", help="closed canonical section for the converse construction")
    common.add_argument("--gauge-tau", dest="gauge_tau", help="gauge parameter tau (expression)")
    common.add_argument("--gauge-theta", dest="gauge_theta", help="gauge parameter theta (expression)")
    common.add_argument("--samples", type=int, help="number of random sample points")
    common.add_argument("--seed", type=int, help="random seed for sample points")
    common.add_argument("--tolerance", type=float, help="pass/fail tolerance")
    common.add_argument("--format", choices=FORMATS, help="output format")
    common.add_argument("--out", help="write the report to this file")

    p = _Parser(prog="quasifeff", description="Quasi-Fefferman metrics and the embeddability criterion.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("curvature", parents=[common], help="connection forms, curvature and Weyl scalars")
    sub.add_parser("check", parents=[common], help="embeddability report")
    inv = sub.add_parser("invariance", parents=[common], help="CR invariance under a gauge")
    inv.add_argument("--fefferman", action="store_true", help="check the conformal factor of the Fefferman metric")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.structure:
        cfg.structure = args.structure
    params = {k: getattr(args, k) for k in PARAMETER_KEYS if getattr(args, k) is not None}
    if params:
        cfg.parameters.update(params)
    if args.gauge_tau is not None or args.gauge_theta is not None:
        g = dict(cfg.gauge or {"tau": "0", "theta": "0"})
        if args.gauge_tau is not None:
            g["tau"] = args.gauge_tau
        if args.gauge_theta is not None:
            g["theta"] = args.gauge_theta
        cfg.gauge = g
    if args.samples is not None:
        cfg.count = args.samples
        cfg.points = None
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tolerance is not None:
        cfg.tolerances[args.command] = args.tolerance
    if args.format:
        cfg.format = args.format
    if args.out:
        cfg.out = args.out
    if cfg.format not in FORMATS:
        raise ConfigError(f"unknown output format {cfg.format!r}")
    if cfg.count < 1:
        raise ConfigError("--samples must be positive")
    return cfg


def sample_points(cfg: RunConfig):
    if cfg.points:
        return list(cfg.points)
    return E.random_points(cfg.count, cfg.seed, cfg.box)


def build_data(cfg: RunConfig, s, points):
    p = dict(cfg.parameters)
    if "psi" in p:
        extra = set(p) - {"psi", "H"}
        if extra:
            raise ConfigError(f"--psi determines {', '.join(sorted(extra))}; do not pass them too")
        return E.build_embeddable_metric(p["psi"], s, p.get("H", "0"), points=[q[:3] for q in points])
    if "P" in p and ("a" in p or "s" in p):
        raise ConfigError("give either P or the profile a, s, not both")
    kw = {k: p[k] for k in ("P", "a", "s", "x", "H") if k in p}
    if "a" in kw or "s" in kw:
        kw.setdefault("a", "1")
        kw.setdefault("s", "0")
    kw.setdefault("x", "0")
    kw.setdefault("H", "0")
    return B.QuasiFeffermanData(**kw)


def _algebra_for(s):
    name = getattr(s, "name", "")
    if name == "heisenberg":
        return HEISENBERG
    if name.startswith("heisenberg-deformed"):
        return MU_EXACT
    return GENERIC


def _c(z: complex):
    return [float(f"{z.real:.12g}"), float(f"{z.imag:.12g}")]


def _r(v: float) -> float:
    return float(f"{v:.6e}")


# commands -------------------------------------------------------------------------------------


def _symbolic_data(d: B.QuasiFeffermanData, ctx):
    """Data normalized in ``ctx`` if it only involves ``r`` and constants, else ``None``."""
    try:
        polys = [normalize(getattr(d, k), ctx) for k in ("P", "H", "x")]
    except Exception:
        return None
    allowed = {"r"}
    for p in polys:
        if not set(p.atoms()) <= allowed:
            return None
    return B.QuasiFeffermanData(P=polys[0], H=polys[1], x=polys[2])


def cmd_curvature(cfg: RunConfig, s, d, points) -> tuple:
    ctx = _algebra_for(s)
    sd = _symbolic_data(d, ctx)
    generic = sd is None
    b = B.build_quasi_fefferman(ctx if not generic else GENERIC, sd)
    G = levi_civita(b)
    cs = curvature(G, b)
    printer = to_latex if cfg.format == "latex" else to_text
    conn = {}
    for i, j in product(range(4), repeat=2):
        comps = [(k, G[(i, j, k)]) for k in range(4) if not G[(i, j, k)].is_zero()]
        conn[f"Gamma^{i + 1}_{j + 1}"] = [[k + 1, printer(v)] for k, v in comps]
    names = {"R22": (1, 1), "R24": (1, 3), "R44": (3, 3)}
    curv = {k: printer(cs.ricci(*v)) for k, v in names.items()}
    curv["Psi0"] = printer(cs.psi0)
    curv["Psi1"] = printer(cs.psi1)
    curv["scalar"] = printer(cs.scalar())
    tol = cfg.tolerance("curvature")
    samples = []
    gen_b, gen_G, gen_cs = E._generic_curvature()
    ric = dict(zip(("R22", "R24", "R44"), alpha_plane_ricci(gen_cs)))
    for y in points:
        smp = E._profile_sample(s, d, y[:3], y[3])
        vals = {k: _c(evaluate(v, smp)) for k, v in ric.items()}
        vals["Psi0"] = _c(evaluate(gen_cs.psi0, smp))
        vals["Psi1"] = _c(evaluate(gen_cs.psi1, smp))
        vals["scalar"] = _c(evaluate(gen_cs.scalar(), smp))
        samples.append({"point": [_r(v) for v in y], "values": vals})
    report = {
        "command": "curvature",
        "version": __version__,
        "structure": getattr(s, "name", "custom"),
        "parameters": d.describe(),
        "symbolic_in": "generic P, H, x" if generic else "configured parameters",
        "connection": conn,
        "curvature": curv,
        "samples": samples,
        "tolerance": tol,
    }
    return report, EXIT_OK


def cmd_check(cfg: RunConfig, s, d, points) -> tuple:
    rep = E.check_embeddability(s, d, points, cfg.tolerance("check"))
    out = {"command": "check", "version": __version__, "structure": getattr(s, "name", "custom")}
    out.update(rep.as_dict())
    if not rep.satisfied:
        out["failed"] = rep.failed_components("alpha_plane_ricci") or rep.failed_components("shear_free")
    return out, EXIT_OK if rep.satisfied else EXIT_FAILED


def cmd_invariance(cfg: RunConfig, s, d, points, fefferman=False) -> tuple:
    if not cfg.gauge:
        raise ConfigError("invariance needs a gauge: --gauge-tau/--gauge-theta or a [gauge] block")
    g = GaugeTransform(cfg.gauge["tau"], cfg.gauge["theta"])
    tol = cfg.tolerance("invariance")
    rows = []
    if fefferman:
        gs = GaugedCoordinateCR(s, g.tau, g.theta)
        for y in points:
            G0 = B.fefferman_coordinate_metric(s, y[:3])
            G1 = B.fefferman_coordinate_metric(gs, y[:3], theta=g.theta)
            k = np.vdot(G0.ravel(), G1.ravel()) / np.vdot(G0.ravel(), G0.ravel())
            tau = gs.gauge_jets(y[:3], 0)["tau"].value
            fit = np.abs(G1 - k * G0).max()
            factor = abs(k - np.exp(2 * tau))
            rows.append(
                {
                    "point": [_r(v) for v in y],
                    "residuals": {"fit": _r(fit), "factor_minus_exp_2tau": _r(factor)},
                    "pass": bool(fit <= tol and factor <= tol),
                }
            )
        mode = "fefferman"
    else:
        Gp = B.gauged_metric_function(s, g, d)
        Gu = B.metric_function(s, B.transform_parameters(g, d))
        for y in points:
            dev = float(np.abs(Gp(np.array(y)) - Gu(np.array(y))).max())
            rows.append({"point": [_r(v) for v in y], "residuals": {"deviation": _r(dev)}, "pass": dev <= tol})
        mode = "quasi-fefferman"
    worst = max(max(r["residuals"].values()) for r in rows)
    ok = all(r["pass"] for r in rows)
    report = {
        "command": "invariance",
        "version": __version__,
        "structure": getattr(s, "name", "custom"),
        "mode": mode,
        "gauge": dict(cfg.gauge),
        "parameters": d.describe(),
        "samples": rows,
        "max_deviation": worst,
        "tolerance": tol,
        "verdict": "pass" if ok else "fail",
    }
    return report, EXIT_OK if ok else EXIT_FAILED


# output -------------------------------------------------------------------------------------


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    if fmt == "latex":
        return _render_latex(report)
    return _render_text(report)


def _render_text(rep: dict) -> str:
    lines = [f"# {rep['command']} on {rep['structure']}"]
    for k, v in rep.get("parameters", {}).items():
        lines.append(f"  {k} = {v}")
    if rep["command"] == "curvature":
        lines.append(f"connection forms (symbolic in {rep['symbolic_in']}):")
        for name, comps in rep["connection"].items():
            if comps:
                rhs = " + ".join(f"({v})*theta^{k}" for k, v in comps)
                lines.append(f"  {name} = {rhs}")
        lines.append("curvature:")
        for name, v in rep["curvature"].items():
            lines.append(f"  {name} = {v}")
        for smp in rep["samples"]:
            vals = ", ".join(f"{k}={complex(*v):.3e}" for k, v in sorted(smp["values"].items()))
            lines.append(f"  at {smp['point']}: {vals}")
    elif rep["command"] == "check":
        for c in rep["checks"]:
            worst = max((max(s["residuals"].values()) for s in c["samples"]), default=0.0)
            lines.append(f"  {c['name']:<18} {c['verdict']:<20} max residual {worst:.3e}")
        if rep.get("branch"):
            lines.append(f"  branch: {rep['branch']}")
        if rep.get("phi_form"):
            lines.append(f"  {rep['phi_form']}")
        for w in rep.get("warnings", []):
            lines.append(f"  warning: {w}")
        tail = rep["verdict"]
        if rep.get("failed"):
            tail += " at " + ", ".join(rep["failed"])
        lines.append(tail)
    else:
        lines.append(f"  mode {rep['mode']}, gauge tau = {rep['gauge']['tau']}, theta = {rep['gauge']['theta']}")
        lines.append(f"  max deviation {rep['max_deviation']:.3e} (tolerance {rep['tolerance']:.1e}): {rep['verdict']}")
    return "\n".join(lines) + "\n"


def _render_latex(rep: dict) -> str:
    lines = [f"% {rep['command']} on {rep['structure']}"]
    if rep["command"] == "curvature":
        lines.append(r"\begin{align*}")
        for name, comps in rep["connection"].items():
            if not comps:
                continue
            i, j = name.split("^")[1].split("_")
            rhs = " + ".join(f"\\left({v}\\right)\\theta^{k}" for k, v in comps)
            lines.append(f"\\Gamma^{i}_{j} &= {rhs}\\\\")
        for name, v in rep["curvature"].items():
            label = {"Psi0": r"\Psi_0", "Psi1": r"\Psi_1", "scalar": "R"}.get(name, f"R_{{{name[1:]}}}")
            lines.append(f"{label} &= {v}\\\\")
        lines.append(r"\end{align*}")
    else:
        lines.append(r"\begin{tabular}{ll}")
        if rep["command"] == "check":
            for c in rep["checks"]:
                lines.append(f"{c['name'].replace('_', ' ')} & {c['verdict']}\\\\")
            lines.append(f"verdict & {rep['verdict']}\\\\")
        else:
            lines.append(f"max deviation & {rep['max_deviation']:.3e}\\\\")
            lines.append(f"verdict & {rep['verdict']}\\\\")
        lines.append(r"\end{tabular}")
    return "\n".join(lines) + "\n"


def run(argv=None) -> tuple:
    """Parse ``argv`` and run; returns ``(exit_code, output_text)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return EXIT_USAGE, f"quasifeff: error: {e}\n"
    try:
        cfg = resolve_config(args)
        s = cfg.build_structure()
        points = sample_points(cfg)
        d = build_data(cfg, s, points)
        if args.command == "curvature":
            report, code = cmd_curvature(cfg, s, d, points)
        elif args.command == "check":
            report, code = cmd_check(cfg, s, d, points)
        else:
            report, code = cmd_invariance(cfg, s, d, points, fefferman=args.fefferman)
    except (ConfigError, ParseError, MissingAssignment, E.DomainError) as e:
        return EXIT_USAGE, f"quasifeff: error: {e}\n"
    except (KeyError, ValueError) as e:
        msg = e.args[0] if e.args else repr(e)
        return EXIT_USAGE, f"quasifeff: error: {msg}\n"
    text = render(report, cfg.format)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        return code, ""
    return code, text


def main(argv=None) -> int:
    code, text = run(argv)
    stream = sys.stderr if code == EXIT_USAGE else sys.stdout
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
