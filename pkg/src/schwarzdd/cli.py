"""Config-driven experiment harness.

Subcommands
-----------
solve           one pipeline run; writes the solution, residual history,
                setup report and decomposition next to the result row
scaling-study   weak scaling: refinement r pairs with 2^r x 2^r more subdomains
overlap-study   fixed subdomain count, sweep the overlap layers
compare         fixed subdomain count, every (variant, levels) pair per overlap

Configs are INI files (see ``schwarzdd/presets``); ``--config`` also takes
the name of a bundled preset. Exit status is 0 when every run converged,
2 when some run hit maxit and 1 on errors.
"""
import argparse
import configparser
import contextlib
import csv
import io
import itertools
import logging
import sys
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .assembly import robin_local_builder
from .krylov import DEFAULT_MAXIT, DEFAULT_TOL, estimate_condition, gmres, pcg
from .mesh import SIDES, dual_graph, node_graph
from .partition import (RESTRICTED, extend_overlap_elements, extend_overlap_nodes,
                        node_partition_from_elements, partition_geometric,
                        partition_graph_greedy, write_decomposition_csv)
from .problems import poisson_problem, waveguide_problem
from .schwarz import OPTIMIZED, VARIANTS, build_one_level, build_two_level

logger = logging.getLogger("schwarzdd")

COLUMNS = ["ranks", "dofs", "k", "delta_over_H_pct", "variant", "levels",
           "iterations", "converged", "kappa", "walltime_s"]
PRESETS = ("poisson-scaling", "poisson-two-level", "helmholtz-waveguide-2d", "helmholtz-oras-vs-ras")

EXIT_OK, EXIT_ERROR, EXIT_MAXIT = 0, 1, 2


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage} stage failed: {type(exc).__name__}: {exc}")
        self.stage = stage


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _list(text, conv=str):
    return [conv(t.strip()) for t in text.replace(";", ",").split(",") if t.strip()]


@dataclass
class ExperimentConfig:
    kind: str = "poisson"
    source: float = 1.0
    dirichlet: tuple = SIDES
    nx: int = 16
    ny: int = 16
    lx: float = 1.0
    ly: float = 1.0
    h: float = 0.05
    refinements: int = 0
    method: str = "geometric"
    px: int = 2
    py: int = 2
    parts: int = 4
    seed: int = None
    overlap_layers: tuple = (1,)
    overlap_mode: str = "element"
    variants: tuple = ("RAS",)
    levels: tuple = (1,)
    alpha: complex = 1.0
    interface: str = "robin"
    scaling: str = RESTRICTED
    solver: str = "gmres"
    tol: float = DEFAULT_TOL
    maxit: int = DEFAULT_MAXIT
    restart: int = None
    out: str = "results"

    def validate(self):
        if self.kind not in ("poisson", "helmholtz"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.method not in ("geometric", "graph"):
            raise ValueError(f"unknown decomposition method {self.method!r}")
        if self.overlap_mode not in ("element", "node"):
            raise ValueError(f"unknown overlap mode {self.overlap_mode!r}")
        if self.solver not in ("gmres", "pcg"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.interface not in ("robin", "impedance"):
            raise ValueError(f"unknown interface condition {self.interface!r}")
        for axis in ("overlap_layers", "variants", "levels"):
            if not getattr(self, axis):
                raise ValueError(f"sweep axis {axis} is empty")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"unknown variants {bad}")
        if any(lv not in (1, 2) for lv in self.levels):
            raise ValueError("levels must be 1 or 2")
        if any(k < 0 for k in self.overlap_layers) or self.refinements < 0:
            raise ValueError("overlap layers and refinements must be non-negative")
        return self

    def pairs(self):
        return list(itertools.product(self.variants, self.levels))

    def echo(self):
        return ", ".join(f"{k}={v!r}" for k, v in asdict(self).items())


def _read_ini(source):
    """Parse a config path or bundled preset name into a ConfigParser."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    path = Path(source)
    if path.is_file():
        cp.read_string(path.read_text())
    elif source in PRESETS:
        cp.read_string(resources.files("schwarzdd").joinpath("presets", f"{source}.ini").read_text())
    else:
        raise FileNotFoundError(f"no config file or preset named {source!r}")
    return cp


def load_config(source, seed=None, out=None):
    cp = _read_ini(source)
    c = ExperimentConfig()
    get = cp.get
    if cp.has_section("problem"):
        c.kind = get("problem", "kind", fallback=c.kind)
        c.source = cp.getfloat("problem", "source", fallback=c.source)
        if cp.has_option("problem", "dirichlet"):
            c.dirichlet = tuple(_list(get("problem", "dirichlet")))
    if cp.has_section("mesh"):
        for key in ("nx", "ny", "refinements"):
            setattr(c, key, cp.getint("mesh", key, fallback=getattr(c, key)))
        for key in ("lx", "ly", "h"):
            setattr(c, key, cp.getfloat("mesh", key, fallback=getattr(c, key)))
    if cp.has_section("decomposition"):
        s = "decomposition"
        c.method = get(s, "method", fallback=c.method)
        for key in ("px", "py", "parts"):
            setattr(c, key, cp.getint(s, key, fallback=getattr(c, key)))
        if cp.has_option(s, "seed"):
            c.seed = cp.getint(s, "seed")
        if cp.has_option(s, "overlap_layers"):
            c.overlap_layers = tuple(_list(get(s, "overlap_layers"), int))
        c.overlap_mode = get(s, "overlap_mode", fallback=c.overlap_mode)
    if cp.has_section("preconditioner"):
        s = "preconditioner"
        if cp.has_option(s, "variants"):
            c.variants = tuple(v.upper() for v in _list(get(s, "variants")))
        if cp.has_option(s, "levels"):
            c.levels = tuple(_list(get(s, "levels"), int))
        if cp.has_option(s, "alpha"):
            a = complex(get(s, "alpha").replace(" ", ""))
            c.alpha = a.real if a.imag == 0 else a
        c.interface = get(s, "interface", fallback=c.interface)
        c.scaling = get(s, "scaling", fallback=c.scaling)
    if cp.has_section("solver"):
        c.solver = get("solver", "method", fallback=c.solver)
        c.tol = cp.getfloat("solver", "tol", fallback=c.tol)
        c.maxit = cp.getint("solver", "maxit", fallback=c.maxit)
        if cp.has_option("solver", "restart"):
            c.restart = cp.getint("solver", "restart")
    if cp.has_section("output"):
        c.out = get("output", "path", fallback=c.out)
    if seed is not None:
        c.seed = seed
    if out is not None:
        c.out = out
    return c.validate()


@dataclass
class ExperimentRow:
    ranks: int
    dofs: int
    k: int
    delta_over_H_pct: float
    variant: str
    levels: int
    iterations: int
    converged: bool
    kappa: float
    walltime_s: float

    def csv_fields(self, timings):
        kappa = "" if self.kappa is None else f"{self.kappa:.6g}"
        wall = f"{self.walltime_s:.3f}" if timings else ""
        return [self.ranks, self.dofs, self.k, f"{self.delta_over_H_pct:.1f}", self.variant,
                self.levels, self.iterations, str(self.converged).lower(), kappa, wall]


@dataclass
class RunArtifacts:
    row: ExperimentRow
    x: np.ndarray
    stats: object
    preconditioner: object
    decomposition: object
    problem: object


def build_problem(cfg, r=0):
    with stage("mesh/assembly"):
        if cfg.kind == "poisson":
            f = 2 ** r
            return poisson_problem(cfg.nx * f, cfg.ny * f, cfg.lx, cfg.ly, cfg.source, cfg.dirichlet)
        return waveguide_problem(cfg.h / 2 ** r)


def decompose(cfg, problem, k, r=0):
    mesh = problem.mesh
    with stage("partition"):
        if cfg.method == "geometric":
            part = partition_geometric(mesh, cfg.px * 2 ** r, cfg.py * 2 ** r)
        else:
            part = partition_graph_greedy(dual_graph(mesh), cfg.parts * 4 ** r, seed=cfg.seed)
    with stage("overlap"):
        if cfg.overlap_mode == "element":
            return extend_overlap_elements(part, dual_graph(mesh), k, problem.dofmap, mesh)
        nodes = node_partition_from_elements(part, problem.dofmap)
        return extend_overlap_nodes(nodes, node_graph(problem.A), k, problem.dofmap.dof_coords, mesh.h)


def run_one(cfg, problem, decomp, variant, levels, threads=1):
    t0 = time.perf_counter()
    with stage("preconditioner"):
        builder = None
        if variant in OPTIMIZED:
            builder = robin_local_builder(problem.spec, cfg.alpha, cfg.interface == "impedance")
        M = build_one_level(problem.A, decomp, variant, builder, problem.dirichlet_dofs,
                            oras_scaling=cfg.scaling, threads=threads)
        if levels == 2:
            M = build_two_level(M, problem.A)
    with stage("solver"):
        kappa = None
        if cfg.solver == "pcg":
            x, stats = pcg(problem.A, problem.b, M, cfg.tol, cfg.maxit)
            kappa = estimate_condition(stats)
        else:
            x, stats = gmres(problem.A, problem.b, M, cfg.tol, cfg.maxit, cfg.restart)
    wall = time.perf_counter() - t0
    row = ExperimentRow(decomp.n_subdomains, problem.n_dofs, decomp.k, decomp.delta_over_H_pct(),
                        variant, levels, stats.iterations, stats.converged, kappa, wall)
    logger.info("N=%d dofs=%d k=%d %s L%d: %d iterations%s", row.ranks, row.dofs, row.k,
                variant, levels, row.iterations, "" if row.converged else " (not converged)")
    return RunArtifacts(row, x, stats, M, decomp, problem)


def run_solve(cfg, threads=1):
    problem = build_problem(cfg)
    decomp = decompose(cfg, problem, cfg.overlap_layers[0])
    variant, levels = cfg.pairs()[0]
    return run_one(cfg, problem, decomp, variant, levels, threads)


def _sweep(cfg, points, ks, pairs_outer, threads):
    rows = []
    for r in points:
        problem = build_problem(cfg, r)
        decomps = {k: decompose(cfg, problem, k, r) for k in ks}
        if pairs_outer:
            combos = [(k, p) for p in cfg.pairs() for k in ks]
        else:
            combos = [(k, p) for k in ks for p in cfg.pairs()]
        for k, (variant, levels) in combos:
            rows.append(run_one(cfg, problem, decomps[k], variant, levels, threads).row)
    return rows


def run_scaling_study(cfg, threads=1):
    """One row per (refinement, N) point, overlap value and (variant, levels)."""
    return _sweep(cfg, range(cfg.refinements + 1), cfg.overlap_layers, False, threads)


def run_overlap_study(cfg, threads=1):
    return _sweep(cfg, [0], cfg.overlap_layers, True, threads)


def run_compare(cfg, threads=1):
    return _sweep(cfg, [0], cfg.overlap_layers, False, threads)


def format_csv(rows, timings=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.csv_fields(timings))
    return buf.getvalue()


def format_table(rows):
    """Aligned text table (wall times always shown here)."""
    body = [[str(v) for v in row.csv_fields(True)] for row in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c)
              for i, c in enumerate(COLUMNS)]
    lines = ["  ".join(c.rjust(wd) for c, wd in zip(COLUMNS, widths))]
    lines += ["  ".join(v.rjust(wd) for v, wd in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def write_solution(path, x):
    """Plain text, one dof per line (real and imaginary columns if complex)."""
    data = np.column_stack([x.real, x.imag]) if np.iscomplexobj(x) else x
    np.savetxt(path, data, fmt="%.17g")


def _write_rows(out, name, rows, timings):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(format_csv(rows, timings))
    (out / f"{name}.txt").write_text(format_table(rows))


def _parser():
    p = argparse.ArgumentParser(prog="schwarzdd", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "scaling-study", "overlap-study", "compare"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI file or preset name")
        sp.add_argument("--out", help="output directory (overrides [output] path)")
        sp.add_argument("--seed", type=int, help="seed for the graph partitioner")
        sp.add_argument("--threads", type=int, default=1, help="threads for local solves")
        sp.add_argument("--timings", action="store_true",
                        help="fill walltime_s in the CSV (makes it run-dependent)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = None
    try:
        with stage("config"):
            cfg = load_config(args.config, args.seed, args.out)
        out = Path(cfg.out)
        if args.command == "solve":
            art = run_solve(cfg, args.threads)
            with stage("output"):
                _write_rows(out, "solve", [art.row], args.timings)
                write_solution(out / "solution.txt", art.x)
                art.stats.write_csv(out / "residuals.csv")
                art.preconditioner.write_report(out / "setup_report.csv")
                write_decomposition_csv(out / "decomposition.csv", art.decomposition,
                                        art.problem.dofmap.dof_coords)
            rows = [art.row]
        else:
            runner = {"scaling-study": run_scaling_study, "overlap-study": run_overlap_study,
                      "compare": run_compare}[args.command]
            rows = runner(cfg, args.threads)
            with stage("output"):
                _write_rows(out, args.command.replace("-", "_"), rows, args.timings)
    except StageError as exc:
        print(f"schwarzdd: {exc}", file=sys.stderr)
        print(f"config: {cfg.echo() if cfg else args.config}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(format_table(rows))
    return EXIT_OK if all(r.converged for r in rows) else EXIT_MAXIT


if __name__ == "__main__":
    sys.exit(main())
