"""Command line entry point.

Configuration comes from key = value lines or a JSON object (``--config``),
positional ``key=value`` tokens and ``--flag`` options, applied in that
order.  Exit status: 0 all checks pass, 1 a check failed, 2 bad
configuration, 3 numerical failure.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import __version__
from .dissipative import (
    check_dissipativity,
    dissipation_factor,
    extend_system,
    lure_residual,
)
from .errors import (
    ConditioningError,
    ConfigError,
    DivergedError,
    NoConvergenceError,
    NotPSDError,
    NotStableError,
    UnsolvableError,
    UnstabilizableError,
)
from .lure_lq import (
    DEFAULT_EPS_SCHEDULE,
    combined_lure_check,
    optimal_feedback,
    solve_singular_lq,
    value_functions,
)
from .models import build_model, initial_state, state_grid
from .serialize import atomic_write, dumps_bundle, dumps_solution, loads_bundle
from .simulate import (
    auto_horizon,
    cost_quadrature,
    dissipation_balance,
    gain_policy,
    simulate_lti,
    trajectory_csv,
    zero_policy,
)

COMMANDS = ("check", "factorize", "solve", "simulate", "values", "sweep", "report")
MODELS = ("transport", "wave", "heat", "file")
X0_KINDS = ("sine", "indicator", "random")
POLICIES = ("optimal", "zero")
OUT_ENV = "LQDISSIP_OUT"
NUMERICAL_ERRORS = (ConditioningError, DivergedError, NoConvergenceError, NotPSDError,
                    NotStableError, UnsolvableError, UnstabilizableError, np.linalg.LinAlgError)


def default_out_dir():
    return os.environ.get(OUT_ENV, "lqdissip_out")


@dataclass
class RunConfig:
    command: str
    model: str
    n: int = 50
    dt: float = 1e-3
    T: float = None  # None means automatic horizon
    eps_schedule: tuple = DEFAULT_EPS_SCHEDULE
    seed: int = 0
    out_dir: str = field(default_factory=default_out_dir)
    input_bundle: str = None
    x0: str = "sine"
    policy: str = "optimal"


_KEYS = ("command", "model", "n", "dt", "T", "eps_schedule", "seed", "out_dir",
         "input_bundle", "x0", "policy")
_ALIASES = {"eps": "eps_schedule", "out": "out_dir", "bundle": "input_bundle"}


def _to_int(key, val):
    if isinstance(val, bool):
        raise ConfigError(f"{key} must be an integer", key)
    if isinstance(val, (int, np.integer)):
        return int(val)
    if isinstance(val, float) and val.is_integer():
        return int(val)
    try:
        return int(str(val).strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {val!r}", key) from None


def _to_float(key, val):
    if isinstance(val, bool):
        raise ConfigError(f"{key} must be a number", key)
    try:
        out = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {val!r}", key) from None
    if not np.isfinite(out):
        raise ConfigError(f"{key} must be finite", key)
    return out


def _to_choice(key, val, choices):
    val = str(val).strip()
    if val not in choices:
        raise ConfigError(f"{key} must be one of {', '.join(choices)}, got {val!r}", key)
    return val


def _to_schedule(val):
    if isinstance(val, str):
        parts = [p for p in val.replace(";", ",").split(",") if p.strip()]
    elif isinstance(val, (list, tuple)):
        parts = list(val)
    else:
        raise ConfigError("eps_schedule must be a list of numbers", "eps_schedule")
    sched = tuple(_to_float("eps_schedule", p) for p in parts)
    if not sched:
        raise ConfigError("eps_schedule is empty", "eps_schedule")
    if any(e <= 0 for e in sched) or any(a <= b for a, b in zip(sched, sched[1:])):
        raise ConfigError("eps_schedule must be positive and strictly descending", "eps_schedule")
    return sched


def config_from_mapping(raw):
    """Validate a mapping of raw values (strings or JSON scalars)."""
    vals = {}
    for key, val in raw.items():
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", key)
        vals[key] = val
    for key in ("command", "model"):
        if vals.get(key) in (None, ""):
            raise ConfigError(f"missing required field {key!r}", key)
    cfg = {
        "command": _to_choice("command", vals["command"], COMMANDS),
        "model": _to_choice("model", vals["model"], MODELS),
    }
    if "n" in vals:
        cfg["n"] = _to_int("n", vals["n"])
    minimum = 3 if cfg["model"] == "heat" else 2
    if cfg.get("n", 50) < minimum:
        raise ConfigError(f"n must be >= {minimum}", "n")
    if "dt" in vals:
        cfg["dt"] = _to_float("dt", vals["dt"])
        if cfg["dt"] <= 0:
            raise ConfigError("dt must be positive", "dt")
    if vals.get("T") not in (None, "auto"):
        cfg["T"] = _to_float("T", vals["T"])
        if cfg["T"] < cfg.get("dt", 1e-3):
            raise ConfigError("T must be at least dt", "T")
    if "eps_schedule" in vals:
        cfg["eps_schedule"] = _to_schedule(vals["eps_schedule"])
    if "seed" in vals:
        cfg["seed"] = _to_int("seed", vals["seed"])
    if vals.get("out_dir") not in (None, ""):
        cfg["out_dir"] = str(vals["out_dir"])
    if vals.get("input_bundle") not in (None, ""):
        cfg["input_bundle"] = str(vals["input_bundle"])
    if "x0" in vals:
        cfg["x0"] = _to_choice("x0", vals["x0"], X0_KINDS)
    if "policy" in vals:
        cfg["policy"] = _to_choice("policy", vals["policy"], POLICIES)
    if cfg["model"] == "file" and "input_bundle" not in cfg:
        raise ConfigError("model=file needs input_bundle", "input_bundle")
    return RunConfig(**cfg)


def _parse_pairs(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value", None)
        key, val = line.split("=", 1)
        raw[key.strip()] = val.strip()
    return raw


def parse_raw(text):
    text = text or ""
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", None) from None
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object", None)
        return raw
    return _parse_pairs(text)


def parse_config(text, overrides=None):
    """Parse key = value lines or a JSON object into a validated RunConfig."""
    raw = parse_raw(text)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(raw)


def serialize_config(cfg):
    lines = []
    for key in _KEYS:
        val = getattr(cfg, key)
        if val is None:
            continue
        if key == "eps_schedule":
            val = ",".join(repr(float(e)) for e in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


@dataclass
class RunReport:
    records: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def add(self, name, value, tolerance, passed):
        if any(r["name"] == name for r in self.records):
            raise ValueError(f"check {name!r} recorded twice")
        self.records.append({"name": name, "value": float(value), "tolerance": float(tolerance),
                             "pass": bool(passed)})

    def add_max(self, name, value, tolerance):
        self.add(name, value, tolerance, value <= tolerance)

    @property
    def passed(self):
        return all(r["pass"] for r in self.records)

    def to_dict(self):
        return {"pass": self.passed, "checks": self.records, "environment": self.environment,
                "files": self.files}


# --- model plumbing -----------------------------------------------------


def load_bundle(cfg):
    if cfg.model == "file":
        with open(cfg.input_bundle) as fh:
            return loads_bundle(fh.read())
    try:
        return build_model(cfg.model, cfg.n)
    except ValueError as exc:
        raise ConfigError(str(exc), "n") from None


def _x0(cfg, bundle):
    rng = np.random.default_rng(cfg.seed)
    if bundle.meta.get("model") == "file":
        if cfg.x0 == "random":
            return rng.standard_normal(bundle.sys.n)
        return np.ones(bundle.sys.n)
    return initial_state(bundle, cfg.x0, rng)


def _solve(cfg, bundle):
    cert = dissipation_factor(bundle.sys, bundle.sr, bundle.P)
    ext = extend_system(bundle.sys, cert)
    sol = solve_singular_lq(ext, cfg.eps_schedule)
    fb, solvable = optimal_feedback(sol)
    return cert, ext, sol, fb, solvable


def _stem(cfg, bundle):
    return f"{cfg.command}_{bundle.meta.get('model', cfg.model)}_n{bundle.meta.get('n', bundle.sys.n)}"


def _emit(cfg, report, name, text):
    path = os.path.join(cfg.out_dir, name)
    atomic_write(path, text)
    report.files.append(path)
    return path


# --- commands -----------------------------------------------------------


def cmd_check(cfg, bundle, report):
    ok, min_eig = check_dissipativity(bundle.sys, bundle.sr, bundle.P)
    W = lure_residual(bundle.sys, bundle.sr, bundle.P)
    scale = max(1.0, float(np.linalg.norm(W, 2)))
    report.add("lmi_min_eig", min_eig, -1e-9 * scale, min_eig >= -1e-9 * scale)
    report.add("dissipative", float(ok), 1.0, ok)


def cmd_factorize(cfg, bundle, report):
    cert = dissipation_factor(bundle.sys, bundle.sr, bundle.P)
    W = lure_residual(bundle.sys, bundle.sr, bundle.P)
    KL = np.hstack([cert.K, cert.L])
    res = np.linalg.norm(W - KL.T @ KL, "fro") / (1.0 + np.linalg.norm(W, "fro"))
    report.add_max("factor_residual", res, 1e-9)
    report.add("rank_w", cert.rank_w, 1.0, cert.rank_w >= 1)
    _emit(cfg, report, _stem(cfg, bundle) + ".json", dumps_bundle(bundle, cert))


def cmd_solve(cfg, bundle, report):
    cert, ext, sol, fb, solvable = _solve(cfg, bundle)
    report.add_max("combined_lure_residual", combined_lure_check(bundle.sys, bundle.sr, bundle.P, sol), 1e-7)
    last = sol.increments[-1] if sol.increments else float("inf")
    report.add("eps_cauchy_increment", last, 1e-7, sol.converged)
    spec_max = float(np.max(fb.closed_loop_spectrum.real)) if fb.closed_loop_spectrum.size else -np.inf
    report.add("closed_loop_max_re", spec_max, 0.0, fb.stabilizing)
    report.add("pointwise_solvable", float(solvable), 1.0, True)
    text = dumps_solution(sol, {"Fgain": fb.Fgain, "pointwise_solvable": solvable,
                                "closed_loop_stabilizing": fb.stabilizing})
    _emit(cfg, report, _stem(cfg, bundle) + ".json", text)


def _exact_values(bundle, x0):
    model = bundle.meta.get("model")
    h = bundle.meta.get("h")
    if model == "transport":
        val_Jw = h * float(x0 @ x0)
        return 2.0 * val_Jw, val_Jw
    if model == "wave":
        n = bundle.meta["n"]
        a, b = x0[:n], x0[n:]
        return -0.5 * h * float(np.sum((a - b) ** 2)), 0.5 * h * float(np.sum((a + b) ** 2))
    return None


def cmd_values(cfg, bundle, report):
    cert, ext, sol, fb, solvable = _solve(cfg, bundle)
    x0 = _x0(cfg, bundle)
    vr = value_functions(bundle.P, sol, x0)
    scale = 1.0 + abs(vr.val_J) + abs(vr.val_Jw)
    report.add_max("identity_gap", vr.identity_gap / scale, 1e-10)
    report.add("val_J", vr.val_J, 0.0, True)
    report.add("val_Jw", vr.val_Jw, 0.0, True)
    exact = _exact_values(bundle, x0)
    if exact is not None:
        sc = max(1.0, abs(exact[0]))
        report.add_max("val_J_error_vs_closed_form", abs(vr.val_J - exact[0]) / sc, 0.02)
        report.add_max("val_Jw_error_vs_closed_form", abs(vr.val_Jw - exact[1]) / max(1.0, abs(exact[1])), 0.02)
    doc = {"val_J": vr.val_J, "val_Jw": vr.val_Jw, "storage_at_x0": vr.storage_at_x0,
           "identity_gap": vr.identity_gap, "x0": cfg.x0}
    _emit(cfg, report, _stem(cfg, bundle) + ".json", json.dumps(doc, indent=1))


PLOT_SCRIPT = '''"""Plot a trajectory CSV written by lqdissip (run manually)."""
import sys

import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
with open(path) as fh:
    header = fh.readline().strip().split(",")
data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
t = data[:, 0]
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
for prefix, ax in zip(("u_", "y_", "w_"), axes):
    cols = [i for i, name in enumerate(header) if name.startswith(prefix)]
    for i in cols[:8]:
        ax.plot(t, data[:, i], label=header[i])
    ax.set_ylabel(prefix.rstrip("_"))
    if cols:
        ax.legend(loc="upper right", fontsize="small")
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
'''


def cmd_simulate(cfg, bundle, report):
    cert, ext, sol, fb, solvable = _solve(cfg, bundle)
    x0 = _x0(cfg, bundle)
    if cfg.policy == "optimal" and fb.stabilizing:
        policy, Acl = gain_policy(fb.Fgain), bundle.sys.A + bundle.sys.B @ fb.Fgain
    else:
        policy, Acl = zero_policy(), bundle.sys.A
    if cfg.T is None:
        T, ratio = auto_horizon(Acl, bundle.sys.gram, x0, dt=cfg.dt)
    else:
        T, ratio = cfg.T, float("nan")
    traj = simulate_lti(ext, x0, policy, T, cfg.dt)
    bal = dissipation_balance(traj, bundle.sr, bundle.P)
    report.add_max("balance_relative_gap", bal.relative_gap, 1e-4)
    report.add("dissipation_inequality_lhs", bal.lhs, -1e-4 * (1.0 + abs(bal.lhs)), bal.lhs_ineq)
    if ratio == ratio:
        report.add_max("terminal_state_ratio", ratio, 1e-4)
    stem = _stem(cfg, bundle)
    csv = _emit(cfg, report, stem + ".csv", trajectory_csv(traj))
    doc = {"lhs": bal.lhs, "rhs": bal.rhs, "gap": bal.gap, "T": bal.T, "lhs_ineq": bal.lhs_ineq,
           "cost": cost_quadrature(traj, bundle.sr), "policy": policy.name, "horizon": "auto" if cfg.T is None else "fixed"}
    _emit(cfg, report, stem + "_balance.json", json.dumps(doc, indent=1))
    _emit(cfg, report, stem + "_plot.py", PLOT_SCRIPT.format(csv=os.path.basename(csv)))


def _profile_functions(cfg):
    rng = np.random.default_rng(cfg.seed)
    if cfg.x0 == "sine":
        f1, f2 = (lambda s: np.sin(np.pi * s)), (lambda s: 0.0 * s)
    elif cfg.x0 == "indicator":
        f1, f2 = (lambda s: np.ones_like(s)), (lambda s: 0.0 * s)
    else:
        k = np.arange(1, 9)
        c1 = rng.standard_normal(8) / k**3
        c2 = rng.standard_normal(8) / k**3
        f1 = lambda s: np.sin(np.pi * np.outer(np.atleast_1d(s), k)) @ c1  # noqa: E731
        f2 = lambda s: np.sin(np.pi * np.outer(np.atleast_1d(s), k)) @ c2  # noqa: E731
    return f1, f2


def _quad(fn):
    def scalar(s):
        return float(np.ravel(fn(np.array([s])))[0])

    return float(integrate.quad(scalar, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)[0])


def cmd_sweep(cfg, bundle_unused, report):
    if cfg.model not in ("transport", "wave"):
        raise ConfigError("sweep needs a model with closed-form values (transport or wave)", "model")
    f1, f2 = _profile_functions(cfg)
    if cfg.model == "transport":
        nrm = _quad(lambda s: f1(s) ** 2)
        exact = (2.0 * nrm, nrm)
    else:
        exact = (-0.5 * _quad(lambda s: (f1(s) - f2(s)) ** 2), 0.5 * _quad(lambda s: (f1(s) + f2(s)) ** 2))
    grid = [n for n in (25, 50, 100, 200) if n <= max(cfg.n, 25)] or [25]
    rows = []
    for n in grid:
        b = build_model(cfg.model, n)
        sub = RunConfig(**{**cfg.__dict__, "n": n})
        cert, ext, sol, fb, solvable = _solve(sub, b)
        xi = state_grid(b)
        x0 = f1(xi) if cfg.model == "transport" else np.concatenate([f1(xi), f2(xi)])
        vr = value_functions(b.P, sol, x0)
        rows.append((n, abs(vr.val_J - exact[0]), abs(vr.val_Jw - exact[1]),
                     combined_lure_check(b.sys, b.sr, b.P, sol)))
    for n, eJ, eJw, lr in rows:
        report.add_max(f"lure_residual_n{n}", lr, 1e-7)
    for col, name in ((1, "val_err_J"), (2, "val_err_Jw")):
        errs = [r[col] for r in rows]
        # monotone decrease up to 10 % noise, or already at round-off
        worst = max([e1 / max(e0, 1e-300) for e0, e1 in zip(errs, errs[1:]) if e1 > 1e-10] or [0.0])
        report.add_max(f"{name}_trend_ratio", worst, 1.1)
    lines = ["n,val_err_J,val_err_Jw,lure_residual"]
    lines += [f"{n},{eJ:.17g},{eJw:.17g},{lr:.17g}" for n, eJ, eJw, lr in rows]
    _emit(cfg, report, f"sweep_{cfg.model}.csv", "\n".join(lines) + "\n")


def cmd_report(cfg, bundle, report):
    for name, fn in (("check", cmd_check), ("solve", cmd_solve), ("values", cmd_values)):
        sub = RunReport()
        fn(RunConfig(**{**cfg.__dict__, "command": name}), bundle, sub)
        for r in sub.records:
            report.add(f"{name}.{r['name']}", r["value"], r["tolerance"], r["pass"])
        report.files.extend(sub.files)


DISPATCH = {"check": cmd_check, "factorize": cmd_factorize, "solve": cmd_solve,
            "simulate": cmd_simulate, "values": cmd_values, "sweep": cmd_sweep,
            "report": cmd_report}


def run(cfg):
    """Execute one command; returns ``(exit_status, RunReport)``."""
    report = RunReport(environment={"version": __version__, "seed": cfg.seed,
                                    "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                                    "config": serialize_config(cfg)})
    try:
        bundle = None if cfg.command == "sweep" else load_bundle(cfg)
        DISPATCH[cfg.command](cfg, bundle, report)
    except NUMERICAL_ERRORS as exc:
        report.environment["error"] = f"{type(exc).__name__}: {exc}"
        _emit(cfg, report, f"{cfg.command}_{cfg.model}_error.json",
              json.dumps(report.to_dict(), indent=1))
        return 3, report
    _emit(cfg, report, f"report_{cfg.command}_{cfg.model}.json", json.dumps(report.to_dict(), indent=1))
    return (0 if report.passed else 1), report


def build_parser():
    p = argparse.ArgumentParser(prog="lqdissip", description=__doc__.splitlines()[0])
    p.add_argument("pairs", nargs="*", help="key=value settings")
    p.add_argument("--config", help="file with key = value lines or a JSON object")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--n")
    p.add_argument("--dt")
    p.add_argument("--T")
    p.add_argument("--eps", help="comma separated descending regularization schedule")
    p.add_argument("--seed")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./lqdissip_out)")
    p.add_argument("--bundle", help="system bundle JSON for model=file")
    p.add_argument("--x0", choices=X0_KINDS)
    p.add_argument("--policy", choices=POLICIES)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        raw = parse_raw(text)
        raw.update(parse_raw("\n".join(args.pairs)))
        flags = {"command": args.command, "model": args.model, "n": args.n, "dt": args.dt,
                 "T": args.T, "eps_schedule": args.eps, "seed": args.seed, "out_dir": args.out,
                 "input_bundle": args.bundle, "x0": args.x0, "policy": args.policy}
        raw.update({k: v for k, v in flags.items() if v is not None})
        cfg = config_from_mapping(raw)
    except (ConfigError, OSError) as exc:
        key = getattr(exc, "key", None)
        print(f"config error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return 2
    try:
        status, report = run(cfg)
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    for r in report.records:
        flag = "PASS" if r["pass"] else "FAIL"
        print(f"{flag} {r['name']} = {r['value']:.6g} (tol {r['tolerance']:.3g})")
    if "error" in report.environment:
        print(f"numerical failure: {report.environment['error']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
