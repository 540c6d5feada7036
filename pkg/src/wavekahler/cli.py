"""Command-line front end: identity suites, solvers and machine-readable reports.

Subcommands::

    wavekahler check identities --structure kahler-flat
    wavekahler check wave --base torus4 --H "sin(theta)*cos(z1)" --points 100 --seed 7
    wavekahler check extremal --base sphere --H z
    wavekahler solve sphere --H "sqrt(6)*z" --grid 400
    wavekahler solve hirzebruch --h0 1 --grid 200
    wavekahler report

Every check produces records ``{check, structure, points, max_residual,
tolerance, pass}`` and the exit status is 0 exactly when all of them pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Callable

import numpy as np

from . import dim4, hirzebruch, wavebuild
from .fieldexpr import FieldSyntaxError, PhiDependenceError
from .wavebuild import BaseAK, WaveStructure

# default tolerances, by check name
TOLERANCES = {
    "ak_relation": 1e-9,
    "torsion_equals_nijenhuis": 1e-9,
    "nijenhuis_J_anti": 1e-10,
    "chern_metricity": 1e-10,
    "chern_J_parallel": 1e-10,
    "second_chern_formula": 1e-9,
    "r_J_invariance": 1e-10,
    "trace_rho_vs_trace_r": 1e-9,
    "d_omega": 1e-9,
    "d_rho": 1e-8,
    "omega_g_compatible": 1e-12,
    "bianchi": 1e-9,
    "kahler_nijenhuis": 1e-10,
    "kahler_rho_r": 1e-10,
    "kahler_rho_rho_star": 1e-10,
    "kahler_sH_sg": 1e-10,
    "h_T_T_plus_one": 1e-12,
    "duality": 1e-12,
    "T_flat": 1e-12,
    "JT_flat": 1e-12,
    "minus_dtheta": 1e-12,
    "display_metric": 1e-12,
    "omega": 1e-12,
    "g_split": 1e-12,
    "theta_periodicity": 1e-9,
    "prop_darboux": 1e-9,
    "scalar_equality": 1e-9,
    "kahler_iff_base_constant": 1e-10,
    "precondition": 1e-9,
    "base_killing": 1e-9,
    "total_killing": 1e-9,
    "cartan_step": 1e-9,
    "g_K_T": 1e-12,
    "g_K_JT": 1e-12,
    "normalization": 1e-8,
    "reference_f": 1e-6,
    "convergence_deficit": 1e-12,
    "surface_constraint": 1e-6,
    "sce_residual": 1e-6,
    "profile_ratio": 1e-12,
    "y_boundary": 1e-12,
    "ode_t_form": 1e-10,
    "ode_y_form": 1e-10,
    "condition_gap": 1e-10,
    "coefficient_spread": 1e-8,
    "generic_vs_printed": 1e-8,
    "lambda0": 1e-10,
}
DEFAULT_TOL = 1e-9

# (sub-)commands and the structures `check identities` knows by name
STRUCTURES = ("kahler-flat", "torus2", "torus4", "sphere", "sphere-south", "hirzebruch",
              "hirzebruch-quaternion", "wave-torus4", "wave-sphere", "wave-isothermal",
              "wave-hirzebruch", "wave-sphere-solved")

DEFAULTS = {
    "structure": "kahler-flat",
    "base": None,
    "H": None,
    "u": None,
    "h0": 1.0,
    "points": 20,
    "seed": 0,
    "tol": None,
    "grid": None,
    "order": 3,
    "format": None,
    "out": None,
    "per_point": False,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: str | None = None
    structure: str = "kahler-flat"
    base: str | None = None
    H: str | None = None
    u: str | None = None
    h0: float = 1.0
    points: int = 20
    seed: int = 0
    tol: float | None = None
    grid: int | None = None
    order: int = 3
    format: str | None = None
    out: str | None = None
    per_point: bool = False

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tolerances must be positive")
        if self.grid is not None and self.grid < 8:
            raise ConfigError("grid must be >= 8")

    def tolerance(self, check: str) -> float:
        return self.tol if self.tol is not None else TOLERANCES.get(check, DEFAULT_TOL)


@dataclass
class Record:
    check: str
    structure: str
    residuals: np.ndarray
    tolerance: float
    note: str = ""

    @property
    def max_residual(self) -> float:
        r = np.asarray(self.residuals, dtype=float)
        return float(np.max(r)) if r.size else 0.0

    @property
    def passed(self) -> bool:
        r = np.asarray(self.residuals, dtype=float)
        return bool(np.all(np.isfinite(r)) and self.max_residual <= self.tolerance)

    def as_dict(self, per_point: bool = False) -> dict:
        m = self.max_residual
        out = {"check": self.check, "structure": self.structure,
               "points": int(np.asarray(self.residuals).size),
               "max_residual": m if np.isfinite(m) else None, "tolerance": self.tolerance,
               "pass": self.passed}
        if self.note:
            out["note"] = self.note
        if per_point:
            out["per_point"] = [float(v) if np.isfinite(v) else None
                                for v in np.ravel(self.residuals)]
        return out


# -- config -------------------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip('"').strip("'")
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    kind = {f.name: f.type for f in fields(RunConfig)}[key]
    if "bool" in kind:
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return str(value)


def make_config(ns: argparse.Namespace) -> RunConfig:
    """Flags override the config file, which overrides the defaults."""
    from_file = read_config(ns.config) if getattr(ns, "config", None) else {}
    values = {}
    for key, default in DEFAULTS.items():
        flag = getattr(ns, key, None)
        if flag is not None and flag is not False:
            values[key] = _coerce(key, flag)
        elif key in from_file:
            values[key] = _coerce(key, from_file[key])
        else:
            values[key] = default
    return RunConfig(command=ns.command, target=getattr(ns, "target", None), **values)


def thread_count() -> int:
    raw = os.environ.get("WAVEKAHLER_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ConfigError("WAVEKAHLER_THREADS must be >= 0")
    return n if n > 0 else min(8, os.cpu_count() or 1)


def parallel_map(fn: Callable[[np.ndarray], dict], points: np.ndarray,
                 threads: int | None = None) -> dict[str, np.ndarray]:
    """Evaluate ``fn`` on chunks of points and concatenate the per-point results in order."""
    points = np.atleast_2d(points)
    threads = thread_count() if threads is None else threads
    chunks = [c for c in np.array_split(points, min(threads, len(points))) if len(c)]
    if len(chunks) == 1:
        results = [fn(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(fn, chunks))
    return {k: np.concatenate([np.atleast_1d(r[k]) for r in results]) for k in results[0]}


# -- structures -----------------------------------------------------------------------

@dataclass
class Structure:
    name: str
    obj: BaseAK | WaveStructure
    kahler: bool
    darboux: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def patch(self):
        return self.obj.patch

    def at(self, points, order: int):
        return self.obj.at(points, order)

    def sample(self, n: int, seed: int) -> np.ndarray:
        from .framegeo import sample_box
        return sample_box(self.patch.domain, n, seed, 0.01)


def _constant_on_base(H) -> bool:
    """True when ``H`` does not vary along the base (it may still depend on ``theta``)."""
    if H is None:
        return False
    try:
        float(H)
        return True
    except (TypeError, ValueError):
        from .fieldexpr import parse_field
        return parse_field(str(H)).variables <= {"theta"}


def _base(name: str, cfg: RunConfig) -> BaseAK:
    if name == "isothermal":
        if cfg.u is None:
            raise ConfigError("base 'isothermal' needs --u")
        return dim4.IsothermalSurface.from_u(cfg.u).base
    if name.startswith("hirzebruch"):
        return wavebuild.base_preset(name, h0=cfg.h0)
    return wavebuild.base_preset(name)


def resolve_structure(cfg: RunConfig) -> Structure:
    if cfg.base is not None:
        base = _base(cfg.base, cfg)
        if cfg.H is None:
            return Structure(base.name, base, base.kahler, base.darboux)
        W = wavebuild.build(base, cfg.H)
        return Structure(f"{base.name}+H", W, base.kahler and _constant_on_base(cfg.H), base.darboux,
                         {"H": cfg.H})
    name = cfg.structure
    if name == "kahler-flat":
        W = wavebuild.build("torus2", 0.5)
        return Structure(name, W, True, True)
    if name in ("torus2", "torus4", "sphere", "sphere-south", "hirzebruch",
                "hirzebruch-quaternion"):
        base = _base(name, cfg)
        return Structure(name, base, base.kahler, base.darboux)
    if name == "wave-torus4":
        H = cfg.H or "sin(theta)*cos(z1)"
        return Structure(name, wavebuild.build("torus4", H), False, True, {"H": H})
    if name == "wave-sphere":
        H = cfg.H or "sqrt(6)*z"
        return Structure(name, wavebuild.build("sphere", H), _constant_on_base(H), False, {"H": H})
    if name == "wave-isothermal":
        return Structure(name, dim4.random_wave(cfg.seed), False)
    if name == "wave-hirzebruch":
        prof = hirzebruch.solve_profile(cfg.h0)
        return Structure(name, hirzebruch.wave(prof), False)
    if name == "wave-sphere-solved":
        sol = dim4.solve_conformal_factor(cfg.H or "sqrt(6)*z", cfg.grid or 400)
        return Structure(name, sol.wave("north"), False)
    raise ConfigError(f"unknown structure {name!r}; choose from {', '.join(STRUCTURES)}")


# -- checks -----------------------------------------------------------------------------

def identity_residuals(geo, kahler: bool) -> dict[str, np.ndarray]:
    """Pointwise residuals of the almost-Kähler identity suite."""
    tr = geo.trace_residuals()
    out = {
        "ak_relation": geo.ak_relation_residual(),
        "torsion_equals_nijenhuis": geo.torsion_minus_nijenhuis(),
        "nijenhuis_J_anti": geo.nijenhuis_J_residual(),
        "chern_metricity": geo.chern_metricity_residual(),
        "chern_J_parallel": geo.chern_J_residual(),
        "second_chern_formula": geo.second_chern_formula_residual(),
        "r_J_invariance": geo.r_J_invariance_residual(),
        "d_omega": geo.d_omega_residual(),
        "d_rho": geo.d_rho_residual(),
        "omega_g_compatible": geo.omega_g_residual(),
        "bianchi": geo.bianchi_residual(),
    }
    out.update(tr)
    if kahler:
        npts = len(geo.points)
        flat = lambda a: np.abs(a).reshape(npts, -1).max(axis=1)  # noqa: E731
        out["kahler_nijenhuis"] = flat(geo.nijenhuis.value)
        out["kahler_rho_r"] = flat(geo.rho.value - geo.r.value)
        out["kahler_rho_rho_star"] = flat(geo.rho.value - geo.rho_star.value)
        out["kahler_sH_sg"] = np.abs(geo.hermitian_scalar.value - geo.scalar_curvature.value)
    return out


def check_identities(cfg: RunConfig) -> list[Record]:
    s = resolve_structure(cfg)
    pts = s.sample(cfg.points, cfg.seed)
    res = parallel_map(lambda p: identity_residuals(s.at(p, cfg.order), s.kahler), pts)
    return [Record(k, s.name, v, cfg.tolerance(k)) for k, v in res.items()]


def check_wave(cfg: RunConfig) -> list[Record]:
    if cfg.base is None and cfg.structure in ("kahler-flat",):
        cfg = replace(cfg, base="torus2", H=cfg.H or "0.5")
    if cfg.base is None:
        raise ConfigError("check wave needs --base")
    if cfg.H is None:
        raise ConfigError("check wave needs --H")
    base = _base(cfg.base, cfg)
    W = wavebuild.build(base, cfg.H)
    name = f"{base.name}+H"
    pts = W.sample(cfg.points, cfg.seed)
    # integrable exactly when H is constant along the base
    constant = _constant_on_base(cfg.H)

    def fn(p):
        out = dict(W.invariant_residuals(p))
        geo = W.at(p, cfg.order)
        if base.darboux:
            out["prop_darboux"] = np.abs(geo.rho.value - wavebuild.darboux_rho_rhs(W, geo)
                                         ).reshape(len(p), -1).max(axis=1)
        sM = base.at(W.project(p), cfg.order).hermitian_scalar.value
        out["scalar_equality"] = np.abs(geo.hermitian_scalar.value - sM)
        out["d_omega"] = geo.d_omega_residual()
        if base.kahler:
            N = np.sqrt(np.abs(geo.nijenhuis_norm2().value))
            out["kahler_iff_base_constant" if constant else "_N"] = N
        return out

    res = parallel_map(fn, pts)
    records = [Record(k, name, v, cfg.tolerance(k)) for k, v in res.items() if not k.startswith("_")]
    if "_N" in res:
        # H varying along the base must break integrability somewhere
        deficit = np.array([0.0 if np.max(res["_N"]) > 1e-8 else 1.0])
        records.append(Record("non_kahler_if_base_varying", name, deficit,
                              cfg.tolerance("kahler_iff_base_constant"),
                              note="1 when N vanishes on every sample"))
    return records


def check_extremal(cfg: RunConfig) -> list[Record]:
    base_name = cfg.base or "sphere"
    H = cfg.H or "z"
    base = _base(base_name, cfg)
    W = wavebuild.build(base, H)
    name = f"{base.name}+H"
    pts = W.sample(cfg.points, cfg.seed)
    try:
        rep = wavebuild.extremal_mechanism_check(W, pts, cfg.order, cfg.tolerance("base_killing"))
    except wavebuild.PreconditionError as exc:
        return [Record("precondition", name, np.array([np.inf]), cfg.tolerance("precondition"),
                       note=str(exc))]
    out = [Record("base_killing", name, rep.base_killing, cfg.tolerance("base_killing")),
           Record("total_killing", name, rep.total_killing, cfg.tolerance("total_killing"))]
    for k, v in rep.identities.items():
        out.append(Record(f"identity {k}", name, v, cfg.tolerance("total_killing")))
    out += [Record("cartan_step", name, rep.cartan_step, cfg.tolerance("cartan_step")),
            Record("g_K_T", name, rep.g_K_T, cfg.tolerance("g_K_T")),
            Record("g_K_JT", name, rep.g_K_JT, cfg.tolerance("g_K_JT"))]
    return out


# -- solvers ------------------------------------------------------------------------------

@dataclass
class Table:
    columns: tuple[str, ...]
    rows: np.ndarray


def solve_sphere(cfg: RunConfig) -> tuple[list[Record], Table]:
    src = cfg.H or "sqrt(6)*z"
    grid = cfg.grid or 400
    sol = dim4.solve_conformal_factor(src, grid)
    name = f"sphere:{src}"
    rel = abs(sol.energy - 16 * np.pi) / (16 * np.pi)
    rep = dim4.sphere_pipeline(sol, n=max(cfg.points, 2), order=cfg.order)
    records = [Record("normalization", name, np.array([rel]), cfg.tolerance("normalization")),
               Record("surface_constraint", name, np.abs(rep.surface_residual),
                      cfg.tolerance("surface_constraint")),
               Record("sce_residual", name, rep.sce_residual, cfg.tolerance("sce_residual"))]
    # the closed form is available when the normalised profile is +-sqrt(6) z
    z = np.linspace(-1, 1, 7)
    if np.max(np.abs(np.abs(sol.field.H(z) - sol.field.H(0 * z)) - np.sqrt(6) * np.abs(z))) < 1e-9:
        records.append(Record("reference_f", name, np.abs(sol.f - dim4.reference_f(sol.zeta)),
                              cfg.tolerance("reference_f")))
        _, ratios = dim4.convergence(src, grids=(grid // 4, grid // 2, grid))
        records.append(Record("convergence_deficit", name, np.maximum(0.0, 3.5 - ratios),
                              cfg.tolerance("convergence_deficit"),
                              note="max(0, 3.5 - error ratio per grid doubling)"))
    # residual column: the constraint on the solved metric at each grid point
    zeta = sol.zeta
    inner = np.clip(zeta, -0.999, 0.999)
    north = inner >= 0
    x = np.where(north, np.sqrt((1 - inner) / (1 + inner)), np.sqrt((1 + inner) / (1 - inner)))
    resid = np.empty_like(zeta)
    H = sol.H_field()
    for chart, mask in (("north", north), ("south", ~north)):
        if np.any(mask):
            pts = np.column_stack([x[mask], np.zeros(mask.sum())])
            resid[mask] = dim4.sce_constraint_residual(sol.surface(chart).base, H, pts, cfg.order)
    return records, Table(("zeta", "f", "residual"), np.column_stack([zeta, sol.f, resid]))


def solve_hirzebruch(cfg: RunConfig) -> tuple[list[Record], Table]:
    p = hirzebruch.solve_profile(cfg.h0)
    name = f"hirzebruch:h0={cfg.h0:g}"
    inv = hirzebruch.profile_invariants(p)
    t_int = hirzebruch.interior_t(p, 50)
    ode = hirzebruch.ode_residual(p, t_int)
    recon = hirzebruch.reconstruct_H(p, 50)
    sce = hirzebruch.sce_check_dim6(p, hirzebruch.interior_t(p, cfg.points if cfg.points > 1 else 2),
                                    cfg.order)
    tab = p.table(cfg.grid or 200)
    lam0 = float(tab["lambda"][0])
    h, y, dy, d2y = tab["h"], p.y(tab["h"]), p.dy(tab["h"]), p.d2y(tab["h"])
    y_form = np.abs(-0.5 * d2y - dy / (2 * h) + 8 * y / h ** 2 - 8 / h ** 2)
    first, second = p.condition_terms(h)
    records = [
        Record("profile_ratio", name, np.array([inv["ratio"]]), cfg.tolerance("profile_ratio")),
        Record("y_boundary", name, np.array([inv["y(h0)"], inv["y(hl)"], inv["y'(h0)-2/h0"],
                                             inv["y'(hl)+2/hl"]]), cfg.tolerance("y_boundary")),
        Record("ode_t_form", name, np.array([ode["t_form"]]), cfg.tolerance("ode_t_form")),
        Record("ode_y_form", name, np.array([ode["y_form"]]), cfg.tolerance("ode_y_form")),
        Record("condition_gap", name, np.array([recon.condition_gap]), cfg.tolerance("condition_gap")),
        Record("coefficient_spread", name, sce.coefficient_spread, cfg.tolerance("coefficient_spread")),
        Record("generic_vs_printed", name, sce.generic_vs_printed, cfg.tolerance("generic_vs_printed")),
        Record("sce_residual", name, sce.sce_residual, cfg.tolerance("generic_vs_printed")),
        Record("lambda0", name, np.array([abs(lam0 - 2.0 / p.h0 ** 2)]), cfg.tolerance("lambda0"),
               note=f"lambda(0) = {lam0!r}"),
    ]
    cols = ("t", "h", "hp", "Hp", "lambda", "ode_residual", "condition_gap")
    rows = np.column_stack([tab["t"], h, tab["hp"], tab["Hp"], tab["lambda"], y_form,
                            np.abs(first - second)])
    return records, Table(cols, rows)


# -- output ---------------------------------------------------------------------------------

def schema() -> dict:
    return json.loads(resources.files("wavekahler").joinpath("report_schema.json").read_text())


def records_json(records: list[Record], per_point: bool) -> str:
    return json.dumps([r.as_dict(per_point) for r in records], indent=2) + "\n"


def records_csv(records: list[Record]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["check", "structure", "points", "max_residual", "tolerance", "pass"])
    for r in records:
        d = r.as_dict()
        w.writerow([d["check"], d["structure"], d["points"], repr(d["max_residual"]),
                    repr(d["tolerance"]), "true" if d["pass"] else "false"])
    return buf.getvalue()


def table_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _summary(records: list[Record]) -> str:
    return "".join(f"{'PASS' if r.passed else 'FAIL'} {r.check} [{r.structure}] "
                   f"max={r.max_residual:.3e} tol={r.tolerance:.1e}\n" for r in records)


def run(cfg: RunConfig) -> int:
    if cfg.command == "report":
        _emit(json.dumps(schema(), indent=2) + "\n", cfg.out)
        return 0
    table = None
    if cfg.command == "check":
        records = {"identities": check_identities, "wave": check_wave,
                   "extremal": check_extremal}[cfg.target](cfg)
        fmt = cfg.format or "json"
    else:
        records, table = {"sphere": solve_sphere, "hirzebruch": solve_hirzebruch}[cfg.target](cfg)
        fmt = cfg.format or "csv"
    if fmt == "json":
        _emit(records_json(records, cfg.per_point), cfg.out)
    elif table is not None:
        _emit(table_csv(table), cfg.out)
        sys.stderr.write(_summary(records))
    else:
        _emit(records_csv(records), cfg.out)
    failed = [r for r in records if not r.passed]
    if failed and fmt != "json":
        sys.stderr.write(records_json(failed, False))
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--tol", type=float, help="override every tolerance")
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int, help="number of sample points")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--config", help="flat key = value file; flags take precedence")
    common.add_argument("--structure", help=f"named structure: {', '.join(STRUCTURES)}")
    common.add_argument("--base", help=f"base preset: {', '.join(wavebuild.BASE_PRESETS)}, isothermal")
    common.add_argument("--H", help="wave profile expression")
    common.add_argument("--u", help="conformal factor of an isothermal base")
    common.add_argument("--h0", type=float)
    common.add_argument("--grid", type=int)
    common.add_argument("--order", type=int, help="jet order")
    common.add_argument("--per-point", dest="per_point", action="store_true", default=None)

    parser = argparse.ArgumentParser(prog="wavekahler", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="run an identity suite")
    check.add_argument("target", choices=("identities", "wave", "extremal"))
    for a in common._actions:
        if a.dest != "help":
            check._add_action(a)
    solve = sub.add_parser("solve", help="run a solver pipeline")
    solve.add_argument("target", choices=("sphere", "hirzebruch"))
    for a in common._actions:
        if a.dest != "help":
            solve._add_action(a)
    report = sub.add_parser("report", help="print the JSON report schema")
    report.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = make_config(ns)
        return run(cfg)
    except (ConfigError, FieldSyntaxError, PhiDependenceError, wavebuild.ConstructionError,
            wavebuild.UnsupportedBaseError, dim4.DegenerateInputError,
            dim4.NormalizationError, hirzebruch.ConditionViolatedError) as exc:
        sys.stderr.write(f"wavekahler: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
