"""Command-line driver: scenario configuration, verification runs and
deterministic figure-data files.

Subcommands: seed-check, figure1, figure2, infdim, verify, dress.
Numeric output uses 17 significant digits and carries no timestamps; run
metadata goes to an optional ``--manifest`` sidecar so data files stay
byte-identical across runs. Exit codes: 0 all checks passed, 1 checks ran
and failed, 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from . import blocks as bl
from . import darboux as dx
from . import linalg as la
from . import oracle as orc
from . import seeds as sd
from . import selfscatter as ss
from .errors import ConfigError, NlvnError
from .nonlinearity import Nonlinearity

FIGURE1_DEFAULT_Q = (1.0, math.sqrt(2.0), math.pi, -2.0)
VERIFY_DEFAULT_Q = (-2.0, 0.5, 2.0)


# ---------------------------------------------------------------------------
# Pure computations (used by the commands and directly by tests)
# ---------------------------------------------------------------------------

def figure1_table(qs, omega: float, t_grid) -> tuple[list[str], np.ndarray]:
    """Mean oscillator position per q over the grid; column names carry q."""
    t_grid = np.asarray(t_grid, dtype=float)
    cols = [f"x[q={la.format_float(q)}]" for q in qs]
    data = np.empty((t_grid.size, 1 + len(qs)))
    data[:, 0] = t_grid
    for j, q in enumerate(qs):
        for i, t in enumerate(t_grid):
            data[i, 1 + j] = ss.mean_position(ss.rho1_explicit(q, omega, float(t)))
    return ["t", *cols], data


def figure2_grid(q: float, omega: float, t_grid, x_grid,
                 level_shift: int = 0) -> np.ndarray:
    """Long-format rows (t, x, density) of the position-space density."""
    t_grid = np.asarray(t_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    rows = np.empty((t_grid.size * x_grid.size, 3))
    k = 0
    for t in t_grid:
        r1 = ss.rho1_explicit(q, omega, float(t))
        dens = ss.position_density(r1, x_grid, level_offset=level_shift)
        m = x_grid.size
        rows[k:k + m, 0] = t
        rows[k:k + m, 1] = x_grid
        rows[k:k + m, 2] = dens
        k += m
    return rows


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.asarray(rows):
            fh.write(",".join(la.format_float(v) for v in row) + "\n")


class CheckList:
    """Accumulates (name, value, threshold, comparator) check results."""

    def __init__(self):
        self.checks: list[dict] = []

    def add(self, name: str, value: float, threshold: float, kind: str = "le") -> None:
        value = float(value)
        ok = value <= threshold if kind == "le" else value > threshold
        self.checks.append({
            "name": name,
            "value": value,
            "threshold": float(threshold),
            "comparator": kind,
            "pass": bool(ok),
        })

    @property
    def all_pass(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def report(self) -> dict:
        return {"checks": self.checks, "pass": self.all_pass}


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def run_seed_check(q: float, omega: float, seed_file: str | None) -> dict:
    if seed_file is not None:
        fields = sd.load_bundle_fields(seed_file)
        rho0, ham, f, a = fields["rho0"], fields["hamiltonian"], fields["f"], fields["a"]
    else:
        if abs(q - 1.0) < 1e-12:
            f = Nonlinearity.qfamily(1.0)
            rho0 = np.array([[1.5, 0, -0.5], [0, 1.75, 0], [-0.5, 0, 1.5]], dtype=complex)
            ham = omega * np.diag([0.0, 1.0, 2.0]).astype(complex)
            a = 1.0
        else:
            b = sd.build_three_level_seed(q, omega)
            rho0, ham, f, a = b.rho0, b.hamiltonian, b.f, b.a
    rep = sd.validate_seed(rho0, ham, f, a)
    return {
        "commutes": rep.commutes,
        "nontrivial_offset": rep.nontrivial_offset,
        "noncommuting_rho": rep.noncommuting_rho,
        "offset_commutator_norm": rep.offset_commutator_norm,
        "offset_spread": rep.offset_spread,
        "rho_commutator_norm": rep.rho_commutator_norm,
        "pass": rep.all_ok,
    }


def run_verify_three_level(qs, omega: float, t_span: float, dt: float,
                           fd_step: float, checks: CheckList) -> None:
    grid41 = np.linspace(-60.0, 60.0, 41)
    sample21 = np.linspace(-5.0, 5.0, 21)
    target_spec = np.array([1.0, 1.75, 2.0])
    for q in qs:
        bundle = sd.build_three_level_seed(q, omega)
        sol = ss.SelfScatteringSolution(bundle)
        gap = max(la.frobenius(sol.rho1(t) - ss.rho1_explicit(q, omega, t))
                  for t in grid41)
        checks.add(f"closed-form agreement q={q:g}", gap, 1e-9)

        resid = max(orc.residual_meter(lambda t: ss.rho1_explicit(q, omega, t),
                                       bundle.hamiltonian, bundle.f, float(t), fd_step)
                    for t in sample21)
        checks.add(f"flow residual q={q:g}", resid, 1e-5)

        spec_drift = 0.0
        trace_drift = 0.0
        for t in sample21:
            r1 = ss.rho1_explicit(q, omega, float(t))
            eigs = la.spectral_decompose(r1).eigenvalues
            spec_drift = max(spec_drift, float(np.max(np.abs(eigs - target_spec))))
            trace_drift = max(trace_drift, abs(float(np.trace(r1).real) - 4.75))
        checks.add(f"isospectrality q={q:g}", spec_drift, 1e-9)
        checks.add(f"trace q={q:g}", trace_drift, 1e-9)

        start = ss.rho1_explicit(q, omega, -t_span)
        traj = orc.integrate_rk4(start, bundle.hamiltonian, bundle.f,
                                 t_end=t_span, dt=dt, t0=-t_span)
        gap_oracle = la.frobenius(traj.states[-1] - ss.rho1_explicit(q, omega, t_span))
        checks.add(f"rk4 oracle q={q:g}", gap_oracle, 1e-5)


def run_verify_infdim(k_blocks: int, fd_step: float, checks: CheckList) -> None:
    model = bl.default_block_model(k_blocks)
    sol = bl.make_block_solution(model)
    gap = max(la.frobenius(bl.rho1_block_closed_form(sol, t)
                           - bl.rho1_block_darboux(model, sol.nu, t))
              for t in (-3.0, 0.0, 2.0))
    checks.add("block closed vs dressing form", gap, 1e-8)

    rep = bl.irreducibility_report(sol, [-3.0, 0.0, 2.0])
    checks.add("block isospectrality", rep.spectrum_drift, 1e-8)
    checks.add("block off-diagonal coupling at t=0",
               float(np.min(rep.min_off_block)), 0.0, kind="gt")

    rho0, ham = bl.build_block_operators(model)
    resid = max(orc.residual_meter(lambda t: bl.rho1_block_closed_form(sol, t),
                                   ham, model.f, float(t), fd_step)
                for t in (-1.0, 0.0, 0.5))
    checks.add("block flow residual", resid, 1e-4)

    fv = np.sort(model.f_values())[::-1]
    t_asym = 42.0 / (model.beta * max(fv[0] - fv[1], 1e-6))
    rep2 = bl.irreducibility_report(sol, [t_asym])
    checks.add("block asymptotic reducibility", float(rep2.max_off_block[0]), 1e-8)


def run_verify_seed_file(path: str, fd_step: float, checks: CheckList) -> None:
    fields = sd.load_bundle_fields(path)
    rep = sd.validate_seed(fields["rho0"], fields["hamiltonian"], fields["f"], fields["a"])
    checks.add("seed offset commutes with H", rep.offset_commutator_norm, sd.OFFSET_COMMUTE_TOL)
    checks.add("seed offset spread", rep.offset_spread, sd.OFFSET_SPREAD_MIN, kind="gt")
    checks.add("seed rho does not commute with H", rep.rho_commutator_norm,
               sd.RHO_NONCOMMUTE_MIN, kind="gt")
    if not checks.all_pass:
        return
    bundle = sd.make_seed_bundle(**fields)
    sol = ss.SelfScatteringSolution(bundle)
    resid = max(orc.residual_meter(sol.rho1, bundle.hamiltonian, bundle.f, float(t), fd_step)
                for t in np.linspace(-2.0, 2.0, 9))
    checks.add("dressed flow residual", resid, 1e-5)
    spec0 = la.spectral_decompose(bundle.rho0).eigenvalues
    drift = max(float(np.max(np.abs(la.spectral_decompose(sol.rho1(float(t))).eigenvalues - spec0)))
                for t in np.linspace(-2.0, 2.0, 9))
    checks.add("dressed isospectrality", drift, 1e-9)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _parse_q_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad q list {text!r}") from exc


def _load_config_defaults(path: str) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln in fh:
                ln = ln.strip()
                if not ln or ln.startswith("#"):
                    continue
                if "=" not in ln:
                    raise ConfigError(f"bad config line {ln!r}")
                key, _, val = ln.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; keys match flag names")
    p.add_argument("--out", help="output path")
    p.add_argument("--manifest", action="store_true",
                   help="write a <out>.manifest.json sidecar with run metadata")
    p.add_argument("--tol", type=float, default=1e-12, help="eigensolver tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlvn",
                                 description="nonlinear von Neumann dressing toolkit")
    ap.add_argument("--version", action="version", version=f"nlvn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed-check", help="validate the seed construction conditions")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--seed-file")
    _add_common(p)

    p = sub.add_parser("figure1", help="mean position vs time per q (CSV)")
    p.add_argument("--q", type=str, default=None,
                   help="comma-separated q list (default 1, sqrt2, pi, -2)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=-40.0)
    p.add_argument("--t-max", type=float, default=40.0)
    p.add_argument("--t-samples", type=int, default=321)
    _add_common(p)

    p = sub.add_parser("figure2", help="position density over (t, x) (CSV)")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--t-min", type=float, default=-60.0)
    p.add_argument("--t-max", type=float, default=60.0)
    p.add_argument("--t-samples", type=int, default=241)
    p.add_argument("--x-min", type=float, default=-6.0)
    p.add_argument("--x-max", type=float, default=6.0)
    p.add_argument("--x-samples", type=int, default=481)
    p.add_argument("--level-shift", type=int, default=2,
                   help="also emit a variant supported on levels shifted up by this "
                        "many oscillator states (0 disables the companion file)")
    _add_common(p)

    p = sub.add_parser("infdim", help="block-model irreducibility table (CSV + JSON)")
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--block-q", type=float, default=2.0 / 3.0)
    p.add_argument("--model-file")
    p.add_argument("--t-min", type=float, default=-10.0)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-samples", type=int, default=41)
    _add_common(p)

    p = sub.add_parser("verify", help="run the verification suite (JSON report)")
    p.add_argument("--scenario", choices=("three-level", "infdim", "seed-file"),
                   default="three-level")
    p.add_argument("--q", type=str, default=None,
                   help="comma-separated q list (default -2, 0.5, 2)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--seed-file")
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--t-max", type=float, default=2.0,
                   help="half-width of the RK4 comparison window")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--fd-step", type=float, default=1e-4)
    _add_common(p)

    p = sub.add_parser("dress", help="one-shot dressing of user matrices")
    p.add_argument("--rho", required=True, help="matrix file")
    p.add_argument("--hamiltonian", required=True, help="matrix file")
    p.add_argument("--mu", required=True, help="complex, re+imi form")
    p.add_argument("--nu", help="complex; default conj(mu)")
    p.add_argument("--phi", help="ket vector file (eigenvector of rho - mu H)")
    p.add_argument("--z", help="pencil eigenvalue; pick the eigenvector closest to it")
    p.add_argument("--chi", help="second vector file; default phi (Hermitian mode)")
    _add_common(p)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    # pre-scan for --config so file values become defaults, flags still win
    if "--config" in argv:
        idx = argv.index("--config")
        if idx + 1 >= len(argv):
            raise ConfigError("--config needs a path")
        raw = _load_config_defaults(argv[idx + 1])
        ns = ap.parse_args(argv)
        parsed = vars(ns)
        for key, val in raw.items():
            if key not in parsed:
                raise ConfigError(f"unknown config key {key!r}")
            default = ap.get_default(key)
            if parsed[key] == default or parsed[key] is None:
                if isinstance(default, bool):
                    parsed[key] = bool(int(val))
                elif isinstance(default, int) and not isinstance(default, bool):
                    parsed[key] = int(val)
                elif isinstance(default, float):
                    parsed[key] = float(val)
                else:
                    parsed[key] = val
        return ns
    return ap.parse_args(argv)


def _write_manifest(out_path: str, args: argparse.Namespace, wall: float) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in ("manifest",)}
    write_json(f"{out_path}.manifest.json", {
        "tool": "nlvn",
        "version": __version__,
        "config": {k: (v if isinstance(v, (int, float, bool, str, type(None))) else str(v))
                   for k, v in cfg.items()},
        "wall_seconds": wall,
    })


def _shifted_path(path: str, shift: int) -> str:
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return f"{path}_shift{shift}"
    return f"{stem}_shift{shift}.{ext}"


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def cmd_seed_check(args) -> int:
    report = run_seed_check(args.q, args.omega, args.seed_file)
    out = args.out or "seed_check.json"
    write_json(out, report)
    print(f"seed-check: {'PASS' if report['pass'] else 'FAIL'} -> {out}")
    return 0 if report["pass"] else 1


def cmd_figure1(args) -> int:
    qs = _parse_q_list(args.q) if args.q else list(FIGURE1_DEFAULT_Q)
    if args.t_samples < 2 or args.t_max <= args.t_min:
        raise ConfigError("need t_max > t_min and at least 2 samples")
    grid = np.linspace(args.t_min, args.t_max, args.t_samples)
    header, rows = figure1_table(qs, args.omega, grid)
    out = args.out or "figure1.csv"
    write_csv(out, header, rows)
    print(f"figure1: {len(qs)} columns x {grid.size} samples -> {out}")
    return 0


def cmd_figure2(args) -> int:
    if args.t_samples < 2 or args.x_samples < 2:
        raise ConfigError("need at least 2 samples per axis")
    t_grid = np.linspace(args.t_min, args.t_max, args.t_samples)
    x_grid = np.linspace(args.x_min, args.x_max, args.x_samples)
    out = args.out or "figure2.csv"
    rows = figure2_grid(args.q, args.omega, t_grid, x_grid, level_shift=0)
    write_csv(out, ["t", "x", "density"], rows)
    dens = rows[:, 2].reshape(t_grid.size, x_grid.size)
    integrals = np.trapezoid(dens, x_grid, axis=1)
    print(f"figure2: slice integrals in [{integrals.min():.6f}, {integrals.max():.6f}] "
          f"(trace 4.75) -> {out}")
    if args.level_shift > 0:
        alt = _shifted_path(out, args.level_shift)
        rows_alt = figure2_grid(args.q, args.omega, t_grid, x_grid,
                                level_shift=args.level_shift)
        write_csv(alt, ["t", "x", "density"], rows_alt)
        print(f"figure2: level-shifted variant -> {alt}")
    return 0


def cmd_infdim(args) -> int:
    if args.model_file:
        model = bl.load_model(args.model_file)
    else:
        model = bl.default_block_model(args.K, args.alpha, args.beta, args.block_q)
    sol = bl.make_block_solution(model)
    t_grid = np.linspace(args.t_min, args.t_max, args.t_samples)
    rep = bl.irreducibility_report(sol, t_grid)
    out = args.out or "infdim.csv"
    table = np.column_stack([rep.t_samples, rep.min_off_block, rep.max_off_block])
    write_csv(out, ["t", "min_off_block", "max_off_block"], table)
    report = {
        "k_blocks": model.k_blocks,
        "nu": la.format_complex(sol.nu),
        "spectrum_drift": rep.spectrum_drift,
        "normalization_defect": rep.normalization_defect,
        "min_off_block_at_t0": float(rep.min_off_block[np.argmin(np.abs(rep.t_samples))]),
        "pass": bool(rep.spectrum_drift <= 1e-8 and np.all(rep.min_off_block >= 0.0)),
    }
    write_json(f"{out}.report.json", report)
    print(f"infdim: K={model.k_blocks} spectrum drift {rep.spectrum_drift:.3e} -> {out}")
    return 0 if report["pass"] else 1


def cmd_verify(args) -> int:
    qs = _parse_q_list(args.q) if args.q else list(VERIFY_DEFAULT_Q)
    checks = CheckList()
    if args.scenario == "three-level":
        run_verify_three_level(qs, args.omega, args.t_max, args.dt, args.fd_step, checks)
    elif args.scenario == "infdim":
        run_verify_infdim(args.K, args.fd_step, checks)
    else:
        if not args.seed_file:
            raise ConfigError("scenario seed-file requires --seed-file")
        run_verify_seed_file(args.seed_file, args.fd_step, checks)
    out = args.out or "verify.json"
    write_json(out, checks.report())
    for c in checks.checks:
        mark = "PASS" if c["pass"] else "FAIL"
        print(f"[{mark}] {c['name']}: {c['value']:.3e} vs {c['threshold']:.1e}")
    print(f"verify: {'PASS' if checks.all_pass else 'FAIL'} -> {out}")
    return 0 if checks.all_pass else 1


def cmd_dress(args) -> int:
    rho = la.as_hermitian(la.read_matrix(args.rho), name="rho")
    ham = la.as_hermitian(la.read_matrix(args.hamiltonian), name="hamiltonian")
    mu = la.parse_complex(args.mu)
    nu = la.parse_complex(args.nu) if args.nu else np.conj(mu)
    if args.phi:
        phi = la.read_vector(args.phi)
    elif args.z:
        z_want = la.parse_complex(args.z)
        pairs = la.eig_general(rho - mu * ham)
        phi = min(pairs, key=lambda p: abs(p[0] - z_want))[1]
    else:
        raise ConfigError("dress needs --phi or --z")
    chi = la.read_vector(args.chi) if args.chi else phi
    p = dx.make_projector(phi, chi)
    rho1 = dx.dress_rho(rho, ham, p, mu, complex(nu))
    out = args.out or "rho1.mat"
    la.write_matrix(out, rho1)
    print(f"dress: wrote {out}")
    return 0


COMMANDS = {
    "seed-check": cmd_seed_check,
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "infdim": cmd_infdim,
    "verify": cmd_verify,
    "dress": cmd_dress,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    started = time.monotonic()
    try:
        args = _apply_config(ap, argv)
        code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NlvnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if getattr(args, "manifest", False) and getattr(args, "out", None):
        _write_manifest(args.out, args, time.monotonic() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
