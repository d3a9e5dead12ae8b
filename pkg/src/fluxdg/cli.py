"""Batch driver: convergence studies, grid dumps, and diagnostic reports.

Configuration comes from a flat key-value text file plus command-line
overrides.  The file grammar is one ``key = value`` pair per line, ``#``
starts a comment, and list values are comma separated::

    case   = paper          # paper | sine
    p      = 1,2,3,4
    levels = 4,8,16,32      # elements per side, each double the previous
    sigma  = 1.0
    lambda = 1.0
    zeta   = 2.0
    nu     = 1.0
    theta  = 2.0
    out    = results
    seed   = 20260801
    solver = direct         # direct | iterative
    tol    = 1e-12

Precedence: command-line flag > FLUXDG_OUT (output directory only) >
config file > built-in default.  All files are written atomically
(temp + rename) with floats at 17 significant digits, so reruns with the
same config and seed are byte-identical.

Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (
    ErrorReport,
    LevelRecord,
    NormWeights,
    broken_h1_error,
    build_error_report,
    coercivity_defect,
    error_field,
    inequality_probes,
    infsup_gamma,
    l2_error,
    local_conservation_residuals,
    triple_norm_surrogate,
    DENSE_DOF_LIMIT,
)
from .forms import FormParams
from .mesh import build_uniform_quad_mesh
from .refelem import MAX_DEGREE, make_basis, make_volume_rule
from .system import CASES, SolverError, assemble, solve

GRID_EDGE_NUDGE = 1e-9


class ConfigError(ValueError):
    """Invalid configuration file or command-line arguments."""


@dataclass(frozen=True)
class StudyConfig:
    case: str = "paper"
    p_values: tuple = (1, 2, 3, 4)
    levels: tuple = (4, 8, 16, 32)
    sigma: float = 1.0
    lam: float = 1.0
    zeta: float = 2.0
    nu: float = 1.0
    theta: float = 2.0
    out: str = "results"
    seed: int = 20260801
    solver: str = "direct"
    tol: float = 1e-12

    def validate(self) -> "StudyConfig":
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; choices: {sorted(CASES)}")
        if not self.p_values:
            raise ConfigError("at least one p value is required")
        for p in self.p_values:
            if not 1 <= p <= MAX_DEGREE:
                raise ConfigError(f"p must be in [1, {MAX_DEGREE}], got {p}")
        if not self.levels:
            raise ConfigError("at least one mesh level is required")
        if any(n < 1 for n in self.levels):
            raise ConfigError(f"levels must be positive, got {self.levels}")
        for a, b in zip(self.levels[:-1], self.levels[1:]):
            if b != 2 * a:
                raise ConfigError(
                    f"levels must double (got {a} then {b}); rates need h ratio 2"
                )
        if self.solver not in ("direct", "iterative"):
            raise ConfigError(f"solver must be direct or iterative, got {self.solver!r}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        try:
            self.form_params(self.p_values[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def form_params(self, p: int) -> FormParams:
        return FormParams(
            sigma=self.sigma, lam=self.lam, zeta=self.zeta,
            nu=self.nu, theta=self.theta, p=p,
        )

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


_CONFIG_KEYS = {
    "case": ("case", str),
    "p": ("p_values", "int_list"),
    "levels": ("levels", "int_list"),
    "sigma": ("sigma", float),
    "lambda": ("lam", float),
    "zeta": ("zeta", float),
    "nu": ("nu", float),
    "theta": ("theta", float),
    "out": ("out", str),
    "seed": ("seed", int),
    "solver": ("solver", str),
    "tol": ("tol", float),
}


def _parse_int_list(text: str):
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}")


def parse_config_file(path) -> dict:
    """Read the flat key = value grammar into override kwargs."""
    overrides = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(
                f"{path}:{lineno}: unknown key {key!r}; known: {sorted(_CONFIG_KEYS)}"
            )
        attr, conv = _CONFIG_KEYS[key]
        if conv == "int_list":
            overrides[attr] = _parse_int_list(value)
        else:
            try:
                overrides[attr] = conv(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}")
    return overrides


def load_config(args) -> StudyConfig:
    overrides = {}
    if args.config:
        overrides.update(parse_config_file(args.config))
    env_out = os.environ.get("FLUXDG_OUT")
    if env_out:
        overrides["out"] = env_out
    for key, (attr, conv) in _CONFIG_KEYS.items():
        cli_value = getattr(args, attr, None)
        if cli_value is None:
            continue
        if conv == "int_list" and isinstance(cli_value, str):
            overrides[attr] = _parse_int_list(cli_value)
        else:
            overrides[attr] = cli_value
    try:
        config = replace(StudyConfig(), **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    return f"{value:.17g}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _solve_level(config: StudyConfig, case, p: int, n: int):
    mesh = build_uniform_quad_mesh(n)
    basis = make_basis(p)
    params = config.form_params(p)
    system = assemble(mesh, basis, case.coefficient, case.source, params)
    u_h = solve(system, strategy=config.solver, tol=config.tol)
    return mesh, basis, params, system, u_h


def study_error_report(config: StudyConfig, p: int) -> ErrorReport:
    """Solve every level of the study at degree p and collect errors/rates."""
    case = CASES[config.case]()
    records = []
    for n in config.levels:
        try:
            mesh, basis, params, system, u_h = _solve_level(config, case, p, n)
        except SolverError as exc:
            raise SolverError(
                f"solver failed at case={config.case} p={p} n={n}: {exc}"
            ) from exc
        err = error_field(u_h, case)
        weights = NormWeights.from_params(params, mesh.h)
        records.append(
            LevelRecord(
                n=n,
                h=mesh.h,
                dofs=system.dof_map.total_dofs,
                l2_error=l2_error(u_h, case.exact),
                h1_error=broken_h1_error(u_h, case.exact, case.exact_gradient),
                triple_error=triple_norm_surrogate(
                    mesh, case.coefficient, err, weights
                ),
            )
        )
    return build_error_report(config.case, p, records)


def run_convergence(config: StudyConfig):
    """One CSV of errors and rates per polynomial degree.

    Returns the written paths; on solver failure all CSVs from this run are
    removed and the error names the failing level.
    """
    written = []
    try:
        for p in config.p_values:
            report = study_error_report(config, p)
            path = config.out_dir / f"errors_{config.case}_p{p}.csv"
            _atomic_write(path, render_error_csv(report))
            written.append(path)
    except SolverError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def render_error_csv(report: ErrorReport) -> str:
    header = "n,h,dofs,l2_error,h1_error,triple_surrogate,beta_l2,beta_h1,beta_triple"
    lines = [header]
    for i, rec in enumerate(report.levels):
        if i == 0:
            betas = ["", "", ""]
        else:
            betas = [
                _fmt(report.beta_l2[i - 1]),
                _fmt(report.beta_h1[i - 1]),
                _fmt(report.beta_triple[i - 1]),
            ]
        lines.append(
            ",".join(
                [
                    str(rec.n),
                    _fmt(rec.h),
                    str(rec.dofs),
                    _fmt(rec.l2_error),
                    _fmt(rec.h1_error),
                    _fmt(rec.triple_error),
                ]
                + betas
            )
        )
    return "\n".join(lines) + "\n"


def dump_solution_grid(config: StudyConfig, p: int, n: int, resolution: int) -> Path:
    """Sample u_h and u_exact on a uniform grid and write x,y,u_h,u_exact.

    Sample coordinates landing on inter-element lines (or the domain
    boundary) are nudged inward by 1e-9 so the evaluated element side is
    deterministic.
    """
    if resolution < 2:
        raise ConfigError(f"resolution must be >= 2, got {resolution}")
    case = CASES[config.case]()
    try:
        mesh, basis, params, system, u_h = _solve_level(config, case, p, n)
    except SolverError as exc:
        raise SolverError(f"solver failed at case={config.case} p={p} n={n}: {exc}") from exc

    axis = np.linspace(0.0, 1.0, resolution)
    nudged = _nudge_off_mesh_lines(axis, mesh.h)
    X, Y = np.meshgrid(nudged, nudged, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    values, _ = u_h.evaluate(pts)
    exact = case.exact(pts[:, 0], pts[:, 1])

    lines = ["x,y,u_h,u_exact"]
    for k in range(pts.shape[0]):
        lines.append(
            ",".join(
                [_fmt(pts[k, 0]), _fmt(pts[k, 1]), _fmt(values[k]), _fmt(exact[k])]
            )
        )
    path = config.out_dir / f"grid_{config.case}_p{p}_n{n}.csv"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _nudge_off_mesh_lines(coords: np.ndarray, h: float) -> np.ndarray:
    out = coords.copy()
    on_line = np.abs(out / h - np.round(out / h)) * h < 1e-12
    low = on_line & (out < 0.5 * h)
    out[low] += GRID_EDGE_NUDGE
    out[on_line & ~low] -= GRID_EDGE_NUDGE
    return out


def run_diagnostics(config: StudyConfig) -> Path:
    """Stability and identity diagnostics per (p, level), written as JSON.

    Reports the inf-sup constant (dense path, skipped with a note above the
    dof limit), the probe maxima R1-R3, the worst local-conservation
    residual, and the coercivity-identity defect for seeded random vectors.
    """
    case = CASES[config.case]()
    rng = np.random.default_rng(config.seed)
    report = {
        "case": config.case,
        "seed": config.seed,
        "params": {
            "sigma": config.sigma, "lambda": config.lam, "zeta": config.zeta,
            "nu": config.nu, "theta": config.theta,
        },
        "entries": [],
    }
    for p in config.p_values:
        for n in config.levels:
            entry = {"p": p, "n": n, "h": 1.0 / n}
            mesh, basis, params, system, u_h = _solve_level(config, case, p, n)
            entry["dofs"] = system.dof_map.total_dofs

            residuals = local_conservation_residuals(system, u_h.coefficients)
            rule = make_volume_rule(p + 5)
            from .analysis import _element_samples  # shared sampling helper

            phys, wdet = _element_samples(mesh, rule)
            f_norm = float(
                np.sqrt(np.sum(wdet * case.source(phys[:, :, 0], phys[:, :, 1]) ** 2))
            )
            entry["max_conservation_residual"] = float(residuals.max())
            entry["source_l2_norm"] = f_norm

            defects = [
                coercivity_defect(
                    system,
                    case.coefficient,
                    rng.uniform(-1.0, 1.0, system.dof_map.total_dofs),
                )
                for _ in range(5)
            ]
            entry["max_coercivity_defect"] = float(max(defects))

            # per-level sub-seed keeps the h-independence check an actual
            # sampling experiment rather than a replay of one draw
            probes = inequality_probes(mesh, basis, samples=200, seed=config.seed + n)
            entry["probes"] = {
                "r1_max": probes.r1_max,
                "r2_max": probes.r2_max,
                "r3_max": probes.r3_max,
                "skipped": probes.skipped,
            }

            if system.dof_map.total_dofs <= DENSE_DOF_LIMIT:
                try:
                    entry["gamma"] = infsup_gamma(mesh, basis, params, case.coefficient)
                except (RuntimeError, np.linalg.LinAlgError) as exc:
                    entry["gamma"] = None
                    entry["gamma_error"] = str(exc)
            else:
                entry["gamma"] = None
                entry["gamma_error"] = (
                    f"dense path skipped: {system.dof_map.total_dofs} dofs "
                    f"exceed limit {DENSE_DOF_LIMIT}"
                )
            report["entries"].append(entry)

    path = config.out_dir / f"diagnostics_{config.case}.json"
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxdg",
        description="Flux-jump stabilized DG solver: convergence studies and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--case", choices=sorted(CASES))
        sp.add_argument("--p", dest="p_values", metavar="P[,P...]",
                        help="comma-separated polynomial degrees")
        sp.add_argument("--levels", dest="levels", metavar="N[,N...]",
                        help="comma-separated elements-per-side, each double the last")
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--zeta", type=float)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--solver", choices=("direct", "iterative"))
        sp.add_argument("--tol", type=float)

    sp = sub.add_parser("convergence", help="run the error/rate study, one CSV per p")
    add_common(sp)

    sp = sub.add_parser("grid", help="dump u_h and u_exact on a uniform sample grid")
    add_common(sp)
    sp.add_argument("--grid-p", type=int, required=True, help="polynomial degree")
    sp.add_argument("--n", type=int, required=True, help="elements per side")
    sp.add_argument("--resolution", type=int, default=65)

    sp = sub.add_parser("diagnostics", help="inf-sup, probes, conservation, coercivity")
    add_common(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "convergence":
            for path in run_convergence(config):
                print(path)
        elif args.command == "grid":
            print(dump_solution_grid(config, args.grid_p, args.n, args.resolution))
        elif args.command == "diagnostics":
            print(run_diagnostics(config))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
