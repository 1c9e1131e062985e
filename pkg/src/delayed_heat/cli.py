"""Command-line front end: ``delayed-heat {density,solve,simulate,msd,verify}``.

All subcommands read one INI-style run config (``--config``); flags override
file keys. Outputs are CSV (data) and JSON (metadata and reports) in the
output directory, taken from ``--out``, the config, ``$DELAYED_HEAT_OUT`` or
``./delayed_heat_out`` in that order. Every output carries the config hash.

Exit codes: 0 pass, 1 runtime error, 2 validation or config error, 3 check failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .bernstein import DomainError, RelativisticStable, Stable, orey_lower_bound, parse_model
from .boundary import ContractError, parse_boundary
from .densities import DensityError, build_table, chernoff_s_max, laplace_oracle_fL
from .heatkernel import KernelEvaluator, governing_equation_residual
from .mc import (MCConfig, PathEnsemble, SimulationError, first_crossing, inverse_time_mean,
                 killed_density_histogram, msd_estimate, reflection_estimate)
from .msd import msd_formula, scaling_verdict, write_msd_csv
from .nonlocal_op import TimeGridFunction, extremal_sign_check
from .solver import (Bump, SolverError, _y_nodes, data_continuity_check, dynkin_hunt_bin_masses,
                     fd_solve, max_principle_check, solve_via_representation)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3
OUT_ENV = "DELAYED_HEAT_OUT"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# run configuration

def _opt(section, default, kind=float):
    return dataclasses.field(default=default, metadata={"section": section, "kind": kind})


@dataclass
class RunConfig:
    """Every knob of a run, grouped into INI sections by the ``section`` metadata."""

    model: str = _opt("model", "stable:0.5", str)
    p0: Optional[float] = _opt("model", None)
    p_inf: Optional[float] = _opt("model", None)
    boundary: str = _opt("boundary", "constant:1", str)
    # initial data as ``shape:center,width,height``
    datum: str = _opt("datum", "cosine:-1,0.5,1", str)
    datum2: str = _opt("datum", "triangle:-1,0.5,1", str)
    s_max: float = _opt("density", 10.0)
    n_s: int = _opt("density", 201, int)
    t_values: tuple = _opt("density", (0.5, 1.0, 2.0), tuple)
    T: float = _opt("solve", 1.0)
    n_t: int = _opt("solve", 200, int)
    dx: float = _opt("solve", 0.01)
    x_min: Optional[float] = _opt("solve", None)
    t_out: tuple = _opt("solve", (0.25, 0.5, 1.0), tuple)
    x_lo: float = _opt("solve", -4.0)
    x_hi: float = _opt("solve", 1.2)
    n_x: int = _opt("solve", 27, int)
    n_y: int = _opt("solve", 24, int)
    n_paths: Optional[int] = _opt("mc", None, int)
    seed: int = _opt("mc", 0, int)
    s_mesh: float = _opt("mc", 1e-3)
    horizon: Optional[float] = _opt("mc", None)
    epsilon_smalljump: Optional[float] = _opt("mc", None)
    workers: int = _opt("mc", 1, int)
    msd_t_lo: float = _opt("msd", 100.0)
    msd_t_hi: float = _opt("msd", 1000.0)
    msd_points: int = _opt("msd", 7, int)
    route_tol: float = _opt("tolerances", 1e-2)
    max_principle_rel: float = _opt("tolerances", 1e-6)
    continuity_tol: float = _opt("tolerances", 1e-6)
    laplace_rel: float = _opt("tolerances", 1e-3)
    scaling_slack: float = _opt("tolerances", 0.1)
    out_dir: Optional[str] = _opt("output", None, str)

    # keys that do not change any result and stay out of the hash
    _unhashed = ("workers", "out_dir")

    # -- text form ---------------------------------------------------------
    @staticmethod
    def _fmt(v) -> str:
        if v is None:
            return ""
        if isinstance(v, tuple):
            return ",".join(repr(float(x)) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    @staticmethod
    def _parse(kind, text: str):
        text = text.strip()
        if text == "" or text.lower() == "none":
            return None
        if kind is tuple:
            return tuple(float(x) for x in text.split(",") if x.strip())
        if kind is int:
            return int(float(text))
        return kind(text)

    def to_ini(self, hashed_only: bool = False) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for f in dataclasses.fields(self):
            if hashed_only and f.name in self._unhashed:
                continue
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, self._fmt(getattr(self, f.name)))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        by_name = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for sec in cp.sections():
            for key, val in cp.items(sec):
                f = by_name.get(key)
                if f is None or f.metadata["section"] != sec:
                    raise ConfigError(f"unknown config key [{sec}] {key}")
                try:
                    kw[key] = cls._parse(f.metadata["kind"], val)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {val!r}") from exc
        for key, f in by_name.items():
            if kw.get(key, 0) is None and f.default is not None:
                kw[key] = f.default
        return cls(**kw)

    def with_overrides(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})

    def hash(self) -> str:
        return hashlib.sha256(self.to_ini(hashed_only=True).encode()).hexdigest()[:16]

    # -- typed objects -----------------------------------------------------
    def build_model(self):
        try:
            model = parse_model(self.model, self.p0, self.p_inf)
        except (DomainError, ValueError, OSError) as exc:
            raise ConfigError(f"model {self.model!r}: {exc}") from exc
        ob = orey_lower_bound(model)
        if not ob.verified:
            raise ConfigError(f"A3 (Orey condition) unverified for {model.describe()}: {ob.note}")
        return model

    def build_boundary(self, horizon: float):
        try:
            b = parse_boundary(self.boundary)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"boundary {self.boundary!r}: {exc}") from exc
        rep = b.validate(horizon)
        if not (rep.A2a and rep.A2b):
            raise ConfigError("boundary fails A2: " + "; ".join(rep.messages))
        return b

    def build_datum(self, which: str = "datum") -> Bump:
        text = getattr(self, which)
        shape, _, arg = text.partition(":")
        try:
            vals = [float(v) for v in arg.split(",")]
            return Bump(vals[0], vals[1], vals[2] if len(vals) > 2 else 1.0, shape.strip())
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{which} {text!r}: expected shape:center,width[,height]") from exc

    def mc_config(self, horizon: float) -> MCConfig:
        try:
            return MCConfig(n_paths=self.n_paths or 10_000, s_mesh=self.s_mesh,
                            horizon=self.horizon or horizon, seed=self.seed,
                            epsilon_smalljump=self.epsilon_smalljump, workers=self.workers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def output_dir(self) -> Path:
        d = Path(self.out_dir or os.environ.get(OUT_ENV) or "delayed_heat_out")
        d.mkdir(parents=True, exist_ok=True)
        return d


# ---------------------------------------------------------------------------
# output helpers

def _write_json(path: Path, cfg: RunConfig, payload: dict):
    doc = {"config_hash": cfg.hash(), "config": cfg.to_ini(hashed_only=True), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def _write_csv(path: Path, cfg: RunConfig, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg.hash()}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# subcommands

def cmd_density(cfg: RunConfig) -> int:
    model = cfg.build_model()
    if not cfg.t_values:
        raise ConfigError("t_values is empty")
    out = cfg.output_dir()
    s_grid = np.linspace(0.0, math.sqrt(cfg.s_max), cfg.n_s) ** 2
    t_grid = np.asarray(sorted(cfg.t_values), dtype=float)
    table = build_table(model, s_grid, t_grid)
    rep = table.check_invariants(model)
    checks = {"invariants": {"ok": rep.ok, "failures": rep.failures(),
                             "mass": rep.mass, "edge_ratio": rep.edge_ratio}}
    probes = []
    for s in (0.25, 1.0):
        for lam in (0.5, 1.0, 2.0):
            num, ana = laplace_oracle_fL(model, s, lam)
            probes.append({"s": s, "lam": lam, "numeric": num, "analytic": ana,
                           "rel": abs(num - ana) / abs(ana)})
    lap_ok = all(p["rel"] <= cfg.laplace_rel for p in probes)
    checks["laplace_oracle"] = {"ok": lap_ok, "probes": probes}
    _write_csv(out / "density.csv", cfg, ["s"] + [f"t={t!r}" for t in t_grid],
               np.column_stack((s_grid, table.values)))
    _write_json(out / "density.json", cfg, {"model": model.describe(), "route": table.provenance,
                                            "checks": checks})
    print(f"invariants: {_status(rep.ok)}" + ("" if rep.ok else " (" + "; ".join(rep.failures()) + ")"))
    print(f"laplace_oracle: {_status(lap_ok)}")
    return EXIT_OK if rep.ok and lap_ok else EXIT_CHECK


def cmd_solve(cfg: RunConfig, fd_only: bool = False) -> int:
    model = cfg.build_model()
    boundary = cfg.build_boundary(cfg.T)
    f1, f2 = cfg.build_datum("datum"), cfg.build_datum("datum2")
    for f in (f1, f2):
        if f.support[1] >= float(boundary.eval(0.0)):
            raise ConfigError(f"initial datum {f.ident()} reaches the boundary phi(0)")
    out = cfg.output_dir()
    report: dict = {"model": model.describe(), "boundary": boundary.ident()}
    ok = True

    fd1 = fd_solve(model, boundary, f1, cfg.T, cfg.n_t, cfg.dx, x_min=cfg.x_min)
    fd2 = fd_solve(model, boundary, f2, cfg.T, cfg.n_t, cfg.dx, x_min=cfg.x_min)
    fd1.to_csv(out / "solve_fd.csv", {"config_hash": cfg.hash()})
    mp = max_principle_check(fd1, boundary, rel_tol=cfg.max_principle_rel)
    dc = data_continuity_check(fd1, fd2, f1, f2, tol=cfg.continuity_tol)
    report["fd"] = {"max_principle": dataclasses.asdict(mp), "data_continuity": dataclasses.asdict(dc)}
    ok &= mp.ok and dc.ok
    print(f"fd max_principle: {_status(mp.ok)}")
    print(f"fd data_continuity: {_status(dc.ok)}")

    if cfg.n_paths and not fd_only:
        ev = KernelEvaluator.from_model(model, cfg.T, s_max=_kernel_s_max(model, cfg.T))
        t_out = np.asarray(cfg.t_out, dtype=float)
        xs = np.linspace(cfg.x_lo, cfg.x_hi, cfg.n_x)
        mcc = cfg.mc_config(cfg.T)
        specs = [(boundary, float(y)) for y in _y_nodes(f1, cfg.n_y)[0]]
        ens = PathEnsemble(model, mcc).run(t_out, specs)
        r1 = solve_via_representation(ev, boundary, f1, t_out, xs, mcc, n_y=cfg.n_y, ensemble=ens)
        r2 = solve_via_representation(ev, boundary, f2, t_out, xs, mcc, n_y=cfg.n_y, ensemble=ens)
        r1.to_csv(out / "solve_representation.csv", {"config_hash": cfg.hash()})
        diff = 0.0
        for i, t in enumerate(t_out):
            j = int(np.argmin(np.abs(fd1.t_grid - t)))
            diff = max(diff, float(np.max(np.abs(np.interp(xs, fd1.x_grid, fd1.values[j]) - r1.values[i]))))
        se = float(r1.se.max())
        tol = max(cfg.route_tol, 3.0 * se)
        agree = diff <= tol
        mc_tol = 3.0 * float(np.max(np.hypot(r1.se, r2.se)))
        mp_r = max_principle_check(r1, boundary, rel_tol=cfg.max_principle_rel, abs_tol=3.0 * se)
        dc_r = data_continuity_check(r1, r2, f1, f2, tol=cfg.continuity_tol + mc_tol)
        report["representation"] = {"max_principle": dataclasses.asdict(mp_r),
                                    "data_continuity": dataclasses.asdict(dc_r),
                                    "max_clamped": r1.meta["max_clamped"]}
        report["route_agreement"] = {"sup_diff": diff, "max_se": se, "tol": tol, "ok": agree}
        ok &= agree and mp_r.ok and dc_r.ok
        print(f"representation max_principle: {_status(mp_r.ok)}")
        print(f"representation data_continuity: {_status(dc_r.ok)}")
        print(f"route_agreement: {_status(agree)} (sup diff {diff:.3g}, tol {tol:.3g})")
    else:
        report["representation"] = "skipped"
        print("representation route: skipped")
    _write_json(out / "solve_report.json", cfg, report)
    return EXIT_OK if ok else EXIT_CHECK


def _kernel_s_max(model, T: float) -> float:
    return chernoff_s_max(model, T, tol=1e-12)


def cmd_simulate(cfg: RunConfig) -> int:
    model = cfg.build_model()
    horizon = cfg.horizon or max(cfg.t_out)
    boundary = cfg.build_boundary(horizon)
    mcc = cfg.mc_config(horizon)
    t_out = np.asarray(cfg.t_out, dtype=float)
    res = PathEnsemble(model, mcc).run(t_out, [(boundary, 0.0)])
    law = first_crossing(res, boundary, 0.0)
    _, msd, msd_se = msd_estimate(res, boundary, 0.0)
    rows = []
    for i, t in enumerate(res.t_out):
        mean_l, se_l = inverse_time_mean(res, t)
        rows.append((t, mean_l, se_l, float(law.cdf(t)), msd[i], msd_se[i]))
    out = cfg.output_dir()
    _write_csv(out / "simulate.csv", cfg, ["t", "mean_L", "se_L", "crossed", "msd", "msd_se"], rows)
    _write_json(out / "simulate.json", cfg, {"model": model.describe(), "boundary": boundary.ident(),
                                             "n_paths": res.n, "seed": mcc.seed,
                                             "crossed_fraction": law.metadata["crossed_fraction"]})
    print(f"simulated {res.n} paths; estimates in {out / 'simulate.csv'}")
    return EXIT_OK


def cmd_msd(cfg: RunConfig) -> int:
    model = cfg.build_model()
    boundary = cfg.build_boundary(cfg.msd_t_hi)
    t_grid = np.geomspace(cfg.msd_t_lo, cfg.msd_t_hi, cfg.msd_points)
    mcc = cfg.mc_config(cfg.msd_t_hi)
    mcc = dataclasses.replace(mcc, horizon=max(mcc.horizon, cfg.msd_t_hi))
    res = PathEnsemble(model, mcc).run(t_grid, [(boundary, 0.0)])
    t, msd, se = msd_estimate(res, boundary, 0.0)
    law = first_crossing(res, boundary, 0.0)
    formula = msd_formula(model, boundary, law, t)
    rep = scaling_verdict(model, t, msd, se, slack=cfg.scaling_slack)
    out = cfg.output_dir()
    write_msd_csv(out / "msd.csv", rep)
    _write_json(out / "msd.json", cfg, {
        "model": model.describe(), "boundary": boundary.ident(), "gamma": model.gamma0,
        "verdict": rep.verdict, "in_band": rep.in_band, "band": [rep.lower, rep.upper],
        "slope": rep.slope, "slope_se": rep.slope_se, "slope_ok": rep.slope_ok,
        "phi_scaled": rep.scaled, "msd_formula": formula, "notes": rep.notes})
    print(f"slope {rep.slope:.4f} +- {rep.slope_se:.2g} (expected {model.gamma0:g}); "
          f"band [{rep.lower:.4g}, {rep.upper:.4g}]; verdict {rep.verdict}")
    return EXIT_OK if rep.verdict == "pass" else EXIT_CHECK


def _extremal_suite(model, n_funcs: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_funcs):
        t = np.linspace(0.0, 1.0, 201)
        a = rng.normal(size=4)
        fr = rng.uniform(0.5, 6.0, size=4)
        v = sum(a[k] * np.sin(fr[k] * t + k) for k in range(4))
        rep = extremal_sign_check(model, TimeGridFunction(t, v))
        bad += 0 if rep.sign_ok else 1
    return {"ok": bad == 0, "functions": n_funcs, "violations": bad}


def cmd_verify(cfg: RunConfig, quick: bool = False) -> int:
    model = cfg.build_model()
    boundary = cfg.build_boundary(2.0)
    n_paths = cfg.n_paths or (20_000 if quick else 100_000)
    checks: dict = {}

    def run(name, fn):
        t0 = time.perf_counter()
        try:
            checks[name] = fn()
        except (DensityError, SimulationError, SolverError, ContractError, ValueError) as exc:
            checks[name] = {"ok": False, "error": str(exc)}
        checks[name]["seconds"] = round(time.perf_counter() - t0, 2)
        print(f"{name}: {_status(checks[name]['ok'])}")

    def laplace():
        probes = [(s, lam) for s in (0.25, 1.0) for lam in ((1.0,) if quick else (0.5, 1.0, 2.0))]
        rel = []
        for s, lam in probes:
            num, ana = laplace_oracle_fL(model, s, lam)
            rel.append(abs(num - ana) / ana)
        return {"ok": max(rel) <= cfg.laplace_rel, "max_rel": max(rel)}

    ev_holder = {}

    def evaluator():
        if "ev" not in ev_holder:
            ev_holder["ev"] = KernelEvaluator.from_model(model, 2.0, s_max=_kernel_s_max(model, 2.0))
        return ev_holder["ev"]

    def residual():
        ev = evaluator()
        t_eval = [0.2, 1.0, 2.0]
        d = [0.5, 1.0, 2.0]
        r1 = governing_equation_residual(ev, t_eval, d, 0.01)
        r2 = governing_equation_residual(ev, t_eval, d, 0.005)
        ratio = r1.relative / max(r2.relative, 1e-300)
        return {"ok": r2.relative <= 1e-2 and ratio >= 1.5, "relative": [r1.relative, r2.relative],
                "ratio": ratio}

    mcc = cfg.mc_config(2.0)
    mcc = dataclasses.replace(mcc, n_paths=n_paths, horizon=2.0)
    ens_holder = {}

    def ensemble():
        if "ens" not in ens_holder:
            ens_holder["ens"] = PathEnsemble(model, mcc).run([1.0, 2.0], [(boundary, 0.0)])
        return ens_holder["ens"]

    def reflection():
        res = ensemble()
        rows = []
        for c, t in ((0.5, 1.0), (1.0, 1.0), (1.0, 2.0)):
            lhs, rhs, se = reflection_estimate(res, c, t)
            rows.append({"c": c, "t": t, "sup": lhs, "twice_tail": rhs, "se": se,
                         "ok": abs(lhs - rhs) <= 3.0 * se})
        return {"ok": all(r["ok"] for r in rows), "pairs": rows}

    def dynkin_hunt():
        res = ensemble()
        phi0 = float(boundary.eval(0.0))
        edges = np.linspace(phi0 - 5.0, phi0, 41)
        _, mc_mass, _ = killed_density_histogram(res, boundary, 0.0, 1.0, edges)
        law = first_crossing(res, boundary, 0.0)
        mass, qerr = dynkin_hunt_bin_masses(evaluator(), law, boundary, 1.0, edges, 0.0)
        dkw = math.sqrt(math.log(2.0 / 0.05) / (2.0 * res.n))
        tol = 3.0 * (dkw + float(np.max(qerr)))
        sup = float(np.max(np.abs(mc_mass - mass)))
        return {"ok": sup <= tol, "sup_diff": sup, "tol": tol}

    def extremal():
        return _extremal_suite(model, 20 if quick else 100, cfg.seed)

    if isinstance(model, (Stable, RelativisticStable)):
        run("laplace_oracle", laplace)
    run("governing_equation", residual)
    run("reflection", reflection)
    run("dynkin_hunt", dynkin_hunt)
    run("extremal_sign", extremal)
    failed = sorted(k for k, v in checks.items() if not v["ok"])
    out = cfg.output_dir()
    _write_json(out / "verify.json", cfg, {"model": model.describe(), "quick": quick,
                                           "n_paths": n_paths, "checks": checks, "failed": failed})
    print(f"verify: {len(checks) - len(failed)}/{len(checks)} passed" +
          (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_OK if not failed else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing

def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delayed-heat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI run config; flags override its keys")
        sp.add_argument("--out", dest="out_dir", help="output directory")
        sp.add_argument("--model", help="stable:B, relativistic:B,M or tabulated:path.csv")
        sp.add_argument("--p0", type=float, help="tabulated extrapolation exponent at 0")
        sp.add_argument("--p-inf", dest="p_inf", type=float, help="tabulated exponent at infinity")
        sp.add_argument("--boundary", help="constant:C, affine:a,b[,cap] or piecewise:path.csv")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n-paths", dest="n_paths", type=int)
        sp.add_argument("--s-mesh", dest="s_mesh", type=float)
        sp.add_argument("--horizon", type=float)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--dump-config", action="store_true", help="print the merged config and exit")
        return sp

    d = common(sub.add_parser("density", help="tabulate f_L and run its checks"))
    d.add_argument("--t", dest="t_values", type=_floats, help="comma-separated times")
    d.add_argument("--s-max", dest="s_max", type=float)
    d.add_argument("--n-s", dest="n_s", type=int)
    s = common(sub.add_parser("solve", help="solve the moving-boundary problem"))
    s.add_argument("--fd-only", action="store_true", help="skip the Monte Carlo route")
    s.add_argument("--T", dest="T", type=float)
    s.add_argument("--n-t", dest="n_t", type=int)
    s.add_argument("--dx", type=float)
    s.add_argument("--datum")
    m = common(sub.add_parser("simulate", help="simulate paths and export estimates"))
    m.add_argument("--t-out", dest="t_out", type=_floats)
    common(sub.add_parser("msd", help="mean square displacement and scaling verdict"))
    v = common(sub.add_parser("verify", help="run the invariant battery"))
    v.add_argument("--quick", action="store_true", help="reduced battery")
    return p


_NON_CONFIG = {"command", "config", "fd_only", "quick", "dump_config"}


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = RunConfig.from_ini(text)
    over = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    return cfg.with_overrides(**over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.to_ini())
            return EXIT_OK
        if args.command == "density":
            return cmd_density(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, fd_only=args.fd_only)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "msd":
            return cmd_msd(cfg)
        return cmd_verify(cfg, quick=args.quick)
    except (ConfigError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
