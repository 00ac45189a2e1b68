"""Command-line runner: ``pdegp {poisson-fem, cpu-1d, solve}``.

Configuration files are TOML with a ``schema_version`` field.  Results go to
CSV files (UTF-8, LF line endings) in the ``--out`` directory plus a
``*_summary.json`` with scalar diagnostics.

Exit codes
----------
0 success, 2 parse error (malformed TOML or command line), 3 invalid
configuration, 4 I/O error, 5 numerical failure.  On failure a single JSON
object ``{"category": ..., "message": ...}`` is written to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .bases import LagrangeBasis1D
from .errors import ContractError, DomainError, NumericalError, UnsupportedOrderError
from .gp import GaussianProcess
from .information import (
    BoundaryCondition,
    boundary_block,
    measurement_block,
    mwr_block,
    pde_collocation_block,
    weak_galerkin_block,
)
from .kernels import MaternKernel1D, build_recovery_prior
from .means import ConstantMean, PolynomialMean
from .operators import (
    DiffOp,
    FunctionalSet,
    Interval,
    StiffnessForm,
    TrialProjection,
    integral_functional,
    point_evaluation,
)
from .problems import CPU_STAGES, QV, U, CpuSetup, PoissonFemSetup, solve_cpu, solve_poisson_fem
from .solver import Policy, run

SCHEMA_VERSION = 1
DEFAULT_PROBES = 257
DEFAULT_SEED = 0

EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4, 5

POISSON_COLUMNS = ("x", "mean", "std", "u_mwr", "residual")
CPU_COLUMNS = (
    "x", "mean", "std",
    *(f"std_{s.lower()}" for s in ("prior", *CPU_STAGES)),
    "qv_mean", "qv_std", "residual",
)
SOLVE_COLUMNS = ("x", "mean", "std", "residual")
TOP_LEVEL = ("schema_version", "problem", "prior", "schedule", "output")


class ParseError(ValueError):
    category = "parse"


class ConfigError(ValueError):
    category = "config"


# ---------------------------------------------------------------------------------------
# configuration handling
# ---------------------------------------------------------------------------------------


class _Section:
    """Read-once view of a config table that rejects unknown keys."""

    def __init__(self, data: dict, path: str, text: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{_where(text, path)}'{path}' must be a table")
        self.data, self.path, self.text = data, path, text
        self.used: set[str] = set()

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=None, kind=None, required=False):
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(f"{_where(self.text, self.path)}missing required key '{self._name(key)}'")
            return default
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not None and not isinstance(value, kind) or isinstance(value, bool) and kind in (int, float):
            raise ConfigError(
                f"{_where(self.text, key)}'{self._name(key)}' must be of type "
                f"{getattr(kind, '__name__', kind)}, got {type(value).__name__}"
            )
        return value

    def floats(self, key, default=None, required=False, length=None):
        value = self.get(key, default, list, required)
        if value is None:
            return None
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{_where(self.text, key)}'{self._name(key)}' must be a list of numbers")
        if arr.ndim != 1 or (length is not None and arr.size != length):
            want = f" of length {length}" if length is not None else ""
            raise ConfigError(f"{_where(self.text, key)}'{self._name(key)}' must be a flat list{want}")
        return arr

    def sub(self, key, required=False):
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(f"missing required table '{self._name(key)}'")
            return _Section({}, self._name(key), self.text)
        return _Section(self.data[key], self._name(key), self.text)

    def expect(self, keys) -> "_Section":
        self._reject(sorted(set(self.data) - set(keys)))
        return self

    def close(self):
        self._reject(sorted(set(self.data) - self.used))

    def _reject(self, unknown):
        if unknown:
            raise ConfigError(f"{_where(self.text, unknown[0])}unknown key '{self._name(unknown[0])}'")


def _where(text: str, key: str) -> str:
    """``"line N: "`` for the first line defining ``key`` (or its table)."""
    if not text or not key:
        return ""
    leaf = key.split(".")[-1]
    pattern = re.compile(rf"^\s*(\[+\s*{re.escape(key)}\s*\]+|{re.escape(leaf)}\s*=)")
    for n, line in enumerate(text.splitlines(), 1):
        if pattern.match(line):
            return f"line {n}: "
    return ""


def load_config(path: str | Path | None) -> tuple[dict, str]:
    if path is None:
        return {"schema_version": SCHEMA_VERSION}, ""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{_where(text, 'schema_version')}unsupported schema_version {version!r} "
            f"(expected {SCHEMA_VERSION})"
        )
    return data, text


def _rhs(spec: _Section):
    kind = spec.get("kind", "constant", str)
    if kind == "constant":
        value = spec.get("value", 0.0, float)
        spec.close()
        return PolynomialMean([value])
    if kind == "polynomial":
        coef = spec.floats("coefficients", required=True)
        spec.close()
        return PolynomialMean(coef)
    raise ConfigError(f"{_where(spec.text, 'kind')}unknown rhs kind {kind!r} (constant, polynomial)")


def _output(root: _Section, args) -> tuple[np.ndarray | int, int]:
    out = root.sub("output")
    probes = out.get("probes", DEFAULT_PROBES, int)
    points = out.floats("probe_points")
    seed = out.get("seed", DEFAULT_SEED, int)
    out.close()
    if args.probes is not None:
        probes, points = args.probes, None
    if args.seed is not None:
        seed = args.seed
    if points is None and probes < 2:
        raise ConfigError("the probe grid needs at least 2 points")
    return (points if points is not None else probes), seed


def _grid(probes, a: float, b: float) -> np.ndarray:
    if isinstance(probes, np.ndarray):
        if np.any(probes < a) or np.any(probes > b):
            raise ConfigError(f"probe points must lie in [{a}, {b}]")
        return probes
    return np.linspace(a, b, probes)


def _domain(sec: _Section, default=None) -> tuple[float, float]:
    dom = sec.floats("domain", default, required=default is None, length=2)
    a, b = float(dom[0]), float(dom[1])
    if not a < b:
        raise ConfigError(f"{_where(sec.text, 'domain')}domain must satisfy a < b")
    return a, b


# ---------------------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(path: Path, columns, data: dict) -> None:
    n = len(data[columns[0]])
    if any(len(data[c]) != n for c in columns):
        raise ContractError("CSV columns have different lengths")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for i in range(n):
            w.writerow([_fmt(data[c][i]) for c in columns])


def write_summary(path: Path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------------------


def cmd_poisson_fem(args) -> dict:
    data, text = load_config(args.config)
    root = _Section(data, "", text).expect(TOP_LEVEL)
    root.get("schema_version")
    prob = root.sub("problem")
    domain = _domain(prob, [-1.0, 1.0])
    kappa = prob.get("kappa", 1.0, float)
    rhs = _rhs(prob.sub("rhs")) if "rhs" in prob.data else PolynomialMean([1.0, 1.0])
    bc = prob.sub("bc")
    bcs = (bc.get("left", 0.0, float), bc.get("right", 0.0, float))
    bc.close()
    prob.close()
    prior = root.sub("prior")
    kw = dict(
        nu=prior.get("nu", 1.5, float),
        lengthscale=prior.get("lengthscale", 0.5, float),
        output_scale_sq=prior.get("output_scale_sq", 1.0, float),
        prior_mean=prior.get("mean", 0.0, float),
    )
    prior.close()
    sched = root.sub("schedule")
    m = sched.get("num_basis", 3, int)
    sched.close()
    probes, _ = _output(root, args)
    root.close()
    if m < 1:
        raise ConfigError("num_basis must be at least 1")

    setup = PoissonFemSetup(rhs=rhs, domain=domain, bc=bcs, kappa=kappa, num_basis=m, **kw)
    x = _grid(probes, *domain)
    res = solve_poisson_fem(setup, x)
    out = Path(args.out)
    for name in ("matern", "recovery"):
        r = res[name]
        write_csv(
            out / f"poisson_fem_{name}.csv",
            POISSON_COLUMNS,
            {"x": x, "mean": r["mean"], "std": r["std"], "u_mwr": res["u_mwr"],
             "residual": r["mean"] - res["u_mwr"]},
        )
    summary = {
        "command": "poisson-fem",
        "num_basis": m,
        "c_mwr": res["c_mwr"].tolist(),
        "coordinate_discrepancy": {n: res[n]["coord_error"] for n in ("matern", "recovery")},
        "coordinate_cov_norm": {n: res[n]["coord_cov_norm"] for n in ("matern", "recovery")},
    }
    write_summary(out / "poisson_fem_summary.json", summary)
    return summary


def cmd_cpu_1d(args) -> dict:
    data, text = load_config(args.config)
    root = _Section(data, "", text).expect(TOP_LEVEL)
    root.get("schema_version")
    kw = {}
    prob = root.sub("problem")
    for key in ("width", "height", "kappa", "ambient"):
        if key in prob.data:
            kw[key] = prob.get(key, kind=float)
    src = prob.sub("heat_source")
    for key in ("core_power", "core_spread", "cooling"):
        if key in src.data:
            kw[key] = src.get(key, kind=float)
    src.close()
    prob.close()
    prior = root.sub("prior")
    for key in ("lengthscale", "output_scale_sq", "rhs_lengthscale", "rhs_output_scale_sq",
                "flux_output_scale_sq", "nu"):
        if key in prior.data:
            kw[key] = prior.get(key, kind=float)
    prior.close()
    sched = root.sub("schedule")
    if "num_collocation" in sched.data:
        kw["num_collocation"] = sched.get("num_collocation", kind=int)
    if "dts_sites" in sched.data:
        kw["dts_sites"] = tuple(sched.floats("dts_sites"))
    if "dts_noise_std" in sched.data:
        kw["dts_noise_std"] = sched.get("dts_noise_std", kind=float)
    sched.close()
    probes, seed = _output(root, args)
    root.close()
    for key in ("width", "height", "kappa", "core_spread", "lengthscale", "output_scale_sq"):
        if key in kw and kw[key] <= 0:
            raise ConfigError(f"{_where(text, key)}'{key}' must be positive")

    setup = CpuSetup(**kw)
    x = _grid(probes, 0.0, setup.width)
    res = solve_cpu(setup, x, seed)
    post = res["posterior"]
    pde = point_evaluation(x).compose(setup.operator) - point_evaluation(x, output=QV)
    cols = {
        "x": x, "mean": res["mean"], "std": res["std"],
        "qv_mean": res["qv_mean"], "qv_std": res["qv_std"],
        "residual": post.mean_functional(pde),
    }
    for stage, std in res["stage_std"].items():
        cols[f"std_{stage.lower()}"] = std
    out = Path(args.out)
    write_csv(out / "cpu_1d.csv", CPU_COLUMNS, cols)
    summary = {
        "command": "cpu-1d",
        "seed": seed,
        "stationarity": {"mean": res["stat_mean"], "var": res["stat_var"]},
        "dts_sites": list(setup.dts_sites),
        "dts_values": setup.measurements(seed).tolist(),
    }
    write_summary(out / "cpu_1d_summary.json", summary)
    return summary


def _solve_blocks(root: _Section, text: str):
    """Parse ``[problem]``, ``[prior]`` and ``[[schedule]]`` of a generic run."""
    prob = root.sub("problem", required=True)
    a, b = _domain(prob)
    op = prob.sub("operator")
    kappa = op.get("kappa", 1.0, float)
    reaction = op.get("reaction", 0.0, float)
    op.close()
    rhs = _rhs(prob.sub("rhs"))
    bcs = prob.get("bc", [], list)
    prob.close()
    interval = Interval(a, b)
    D = DiffOp.laplacian(1, -kappa) + reaction * DiffOp.identity(1)

    prior = root.sub("prior")
    family = prior.get("family", "matern", str)
    if family != "matern":
        raise ConfigError(f"{_where(text, 'family')}unknown kernel family {family!r} (matern)")
    kernel = MaternKernel1D(
        prior.get("nu", 2.5, float),
        prior.get("lengthscale", 0.3 * (b - a), float),
        prior.get("output_scale_sq", 1.0, float),
    )
    mean = ConstantMean(prior.get("mean", 0.0, float))
    recovery = prior.get("recovery_basis", None, int)
    prior.close()
    projection = None
    if recovery is not None:
        trial = LagrangeBasis1D(np.linspace(a, b, recovery + 2), boundary="include")
        projection = TrialProjection(trial)
        mean, kernel = build_recovery_prior(mean, kernel, projection)
    gp = GaussianProcess(mean, kernel)

    steps = root.get("schedule", None, list, required=True)
    actions = []
    collocation = []
    for i, raw in enumerate(steps):
        s = _Section(raw, f"schedule[{i}]", text)
        kind = s.get("kind", kind=str, required=True)
        project = s.get("project", False, bool)
        if project and projection is None:
            raise ConfigError(f"schedule[{i}]: 'project = true' needs prior.recovery_basis")
        P = projection if project else None
        if kind == "boundary":
            s.close()
            for j, raw_bc in enumerate(bcs):
                c = _Section(raw_bc, f"problem.bc[{j}]", text)
                bkind = c.get("kind", "dirichlet", str)
                site = c.get("site", kind=float, required=True)
                value = c.get("value", 0.0, float)
                c.close()
                if bkind == "dirichlet" and P is not None:
                    actions.append(mwr_block(point_evaluation([site]), P, None, [value], label="BC"))
                else:
                    actions.append(
                        boundary_block(BoundaryCondition(bkind, (site,), interval, (value,), kappa=kappa))
                    )
            if not bcs:
                raise ConfigError(f"schedule[{i}]: boundary step without problem.bc entries")
            continue
        if kind == "collocation":
            pts = s.get("points", kind=(int, list), required=True)
            s.close()
            X = np.linspace(a, b, pts + 2)[1:-1] if isinstance(pts, int) else np.asarray(pts, float)
            collocation.append(X)
            block = pde_collocation_block(D, rhs, X, domain=interval)
            if P is not None:
                block = mwr_block(point_evaluation(X), P, D, rhs, domain=interval)
            actions.append(block)
        elif kind == "galerkin":
            m = s.get("num_basis", kind=int, required=True)
            s.close()
            tests = LagrangeBasis1D(np.linspace(a, b, m + 2), boundary="clamped")
            form = StiffnessForm(kappa, reaction)
            actions.append(mwr_block(tests, P, form, rhs) if P is not None
                           else weak_galerkin_block(form, rhs, tests, domain=interval))
        elif kind == "subdomain":
            n = s.get("num_cells", kind=int, required=True)
            s.close()
            edges = np.linspace(a, b, n + 1)
            rows = [integral_functional(None, (lo, hi), breakpoints=(), domain=interval)
                    for lo, hi in zip(edges[:-1], edges[1:])]
            tests = FunctionalSet.stack(*rows)
            actions.append(mwr_block(tests, P, D, rhs))
        elif kind == "measurement":
            sites = s.floats("sites", required=True)
            values = s.floats("values", required=True, length=sites.size)
            noise = s.get("noise_std", 0.0, float)
            s.close()
            actions.append(measurement_block(sites, values, noise))
        else:
            raise ConfigError(
                f"{_where(text, 'kind')}schedule[{i}]: unknown kind {kind!r} "
                "(boundary, collocation, galerkin, subdomain, measurement)"
            )
    if not actions:
        raise ConfigError("the schedule is empty")
    return gp, Policy(actions), D, rhs, (a, b), collocation


def cmd_solve(args) -> dict:
    if args.config is None:
        raise ParseError("solve requires --config")
    data, text = load_config(args.config)
    root = _Section(data, "", text).expect(TOP_LEVEL)
    root.get("schema_version")
    gp, policy, D, rhs, (a, b), collocation = _solve_blocks(root, text)
    probes, seed = _output(root, args)
    root.close()
    x = _grid(probes, a, b)
    post = run(gp, policy)
    try:
        residual = post.mean_functional(point_evaluation(x).compose(D)) - rhs(x)
    except UnsupportedOrderError:
        residual = np.full(x.size, np.nan)
    write_csv(
        Path(args.out) / "solution.csv",
        SOLVE_COLUMNS,
        {"x": x, "mean": post.mean_at(x), "std": post.std_at(x), "residual": residual},
    )
    summary = {"command": "solve", "seed": seed, "num_observations": int(post.evidence.gram.shape[0])}
    if collocation:
        X = np.concatenate(collocation)
        r = post.mean_functional(point_evaluation(X).compose(D)) - rhs(X)
        summary["max_collocation_residual"] = float(np.max(np.abs(r)))
    write_summary(Path(args.out) / "solution_summary.json", summary)
    return summary


# ---------------------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdegp", description="Gaussian-process PDE solver and worked examples.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, helptext in (
        ("poisson-fem", cmd_poisson_fem, "weak 1D Poisson problem versus classical FEM"),
        ("cpu-1d", cmd_cpu_1d, "staged heat-conduction inference on a 1D CPU slice"),
        ("solve", cmd_solve, "generic 1D problem from a configuration file"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=str, default=None, help="TOML configuration file")
        p.add_argument("--out", type=str, default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
        p.add_argument("--probes", type=int, default=None, help=f"probe grid size (default {DEFAULT_PROBES})")
        p.set_defaults(func=fn)
    return parser


def _fail(category: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"category": category, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        summary = args.func(args)
    except ParseError as exc:
        return _fail("parse", str(exc), EXIT_PARSE)
    except (ConfigError, ContractError, DomainError, UnsupportedOrderError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
