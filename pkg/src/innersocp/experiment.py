"""Monte Carlo experiment runner and CSV output."""

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .beamformer import (derive_params, factorize_presumed, solve_direct_form,
                         solve_inner_socp)
from .errors import InfeasibleProblemError, SubproblemFailure, ValidationError
from .oracle import multistart_minimize
from .scenario import (ScenarioConfig, derive_seed, evaluate_output_sinr,
                       parse_key_values, scenario_from_mapping, scenario_to_text,
                       simulate_run)

ALGORITHMS = ("inner_socp", "direct_form", "oracle")
CSV_HEADER = ("snr_db", "run", "algorithm", "v14", "val13", "output_sinr_db",
              "outer_iters", "wall_ms", "status", "gamma", "eta")
DEFAULT_SNR_GRID = tuple(float(s) for s in range(-10, 31, 5))


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition.

    ``record_timing=False`` writes ``wall_ms = 0`` so that repeated runs
    produce identical bytes.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    algorithms: tuple = ("inner_socp",)
    output_path: str = "results.csv"
    oracle_starts: int = 200
    record_timing: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.snr_grid_db:
            raise ValidationError("snr_grid_db must be nonempty")
        if not self.algorithms:
            raise ValidationError("algorithms must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValidationError(f"unknown algorithms: {sorted(unknown)}")
        if self.oracle_starts < 1 or self.workers < 1:
            raise ValidationError("oracle_starts and workers must be >= 1")


@dataclass
class ResultRow:
    snr_db: float
    run: int
    algorithm: str
    v14: float
    val13: float
    output_sinr_db: float
    outer_iters: int
    wall_ms: float
    status: str
    gamma: float = float("nan")
    eta: float = float("nan")
    result: object = field(default=None, repr=False, compare=False)

    def sort_key(self):
        return (self.snr_db, self.run, self.algorithm)


# -- config file --------------------------------------------------------------

def parse_snr_grid(text):
    """``"-10:5:30"`` (inclusive range) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        lo, st, hi = (float(x) for x in text.split(":"))
        if st <= 0:
            raise ValidationError("SNR grid step must be positive")
        n = int(math.floor((hi - lo) / st + 1e-9)) + 1
        return tuple(lo + st * i for i in range(n))
    return tuple(float(x) for x in text.replace(",", " ").split())


def load_experiment_config(path):
    text = Path(path).read_text()
    return experiment_from_text(text)


def experiment_from_text(text):
    values = parse_key_values(text)
    scenario = scenario_from_mapping(values)
    kw = {"scenario": scenario}
    if "snr_grid_db" in values:
        kw["snr_grid_db"] = parse_snr_grid(values["snr_grid_db"])
    if "algorithms" in values:
        kw["algorithms"] = tuple(a.strip() for a in values["algorithms"].replace(",", " ").split())
    if "output_path" in values:
        kw["output_path"] = values["output_path"]
    if "oracle_starts" in values:
        kw["oracle_starts"] = int(values["oracle_starts"])
    if "record_timing" in values:
        kw["record_timing"] = values["record_timing"].strip().lower() in ("1", "true", "yes")
    if "workers" in values:
        kw["workers"] = int(values["workers"])
    return ExperimentConfig(**kw)


def experiment_to_text(cfg):
    grid = ", ".join(repr(s) for s in cfg.snr_grid_db)
    return scenario_to_text(cfg.scenario) + (
        f"snr_grid_db = {grid}\n"
        f"algorithms = {', '.join(cfg.algorithms)}\n"
        f"output_path = {cfg.output_path}\n"
        f"oracle_starts = {cfg.oracle_starts}\n"
        f"record_timing = {cfg.record_timing}\n"
        f"workers = {cfg.workers}\n"
    )


# -- running ------------------------------------------------------------------

def _nan_row(snr, run, alg, ms, status, params):
    nan = float("nan")
    return ResultRow(snr, run, alg, nan, nan, nan, 0, ms, status, params.gamma, params.eta)


def _sinr_db(w, R_s, R_ipn):
    return 10.0 * math.log10(evaluate_output_sinr(w, R_s, R_ipn))


def _run_cell(cfg, snr_index, run, keep_results):
    snr = cfg.snr_grid_db[snr_index]
    scen = replace(cfg.scenario, snr_db=snr)
    seed = derive_seed(scen.seed, snr_index, run)
    R_s, R_ipn, Rhat, Rs_pre = simulate_run(scen, seed)
    params = derive_params(Rhat, Rs_pre)
    Q = factorize_presumed(Rs_pre)
    rows = []
    for alg in cfg.algorithms:
        t0 = time.perf_counter()
        try:
            if alg == "oracle":
                rep = multistart_minimize(Rhat, params.gamma, Q, params.eta,
                                          cfg.oracle_starts, seed=seed)
                ms = 1e3 * (time.perf_counter() - t0)
                w13 = rep.best_w
                row = ResultRow(snr, run, alg, rep.best_value, 1.0 / math.sqrt(rep.best_value),
                                _sinr_db(w13, R_s, R_ipn), rep.iterations, ms,
                                "Optimal" if rep.n_converged else "Unconverged",
                                params.gamma, params.eta, rep if keep_results else None)
            else:
                solver = solve_inner_socp if alg == "inner_socp" else solve_direct_form
                res = solver(Rhat, Q, params)
                ms = 1e3 * (time.perf_counter() - t0)
                row = ResultRow(snr, run, alg, res.v14, res.val13,
                                _sinr_db(res.w13, R_s, R_ipn), res.outer_iterations, ms,
                                "Optimal" if res.converged else "MaxOuter",
                                params.gamma, params.eta, res if keep_results else None)
        except InfeasibleProblemError:
            row = _nan_row(snr, run, alg, 1e3 * (time.perf_counter() - t0), "Infeasible", params)
        except SubproblemFailure as exc:
            status = exc.status.value if exc.status is not None else "Error"
            row = _nan_row(snr, run, alg, 1e3 * (time.perf_counter() - t0),
                           f"SubproblemFailure:{status}", params)
        if not cfg.record_timing:
            row.wall_ms = 0.0
        rows.append(row)
    return rows


def _run_cells(args):
    cfg, cells = args
    return [r for i, k in cells for r in _run_cell(cfg, i, k, False)]


def run_experiment(cfg, keep_results=False, progress=None):
    """Run every (SNR, run, algorithm) cell and return rows in sorted order.

    Each (SNR index, run) cell draws its data from an independent sub-seed,
    so results do not depend on execution order or on ``cfg.workers``.
    ``keep_results`` attaches the full solver output to each row (serial
    execution only).
    """
    cells = [(i, k) for i in range(len(cfg.snr_grid_db)) for k in range(cfg.scenario.runs)]
    rows = []
    if cfg.workers > 1 and not keep_results:
        chunks = [cells[j::cfg.workers] for j in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            for part in pool.map(_run_cells, [(cfg, c) for c in chunks]):
                rows.extend(part)
    else:
        for n, (i, k) in enumerate(cells):
            rows.extend(_run_cell(cfg, i, k, keep_results))
            if progress is not None:
                progress(n + 1, len(cells))
    rows.sort(key=ResultRow.sort_key)
    return rows


# -- output -------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def format_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(rows, key=ResultRow.sort_key):
        writer.writerow([_fmt(float(r.snr_db)), r.run, r.algorithm, _fmt(float(r.v14)),
                         _fmt(float(r.val13)), _fmt(float(r.output_sinr_db)),
                         r.outer_iters, _fmt(float(r.wall_ms)), r.status,
                         _fmt(float(r.gamma)), _fmt(float(r.eta))])
    return buf.getvalue()


def emit_csv(rows, path):
    path = Path(path)
    try:
        path.write_text(format_csv(rows))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_csv(text):
    """Parse CSV text produced by :func:`format_csv` back into rows."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(ResultRow(float(rec["snr_db"]), int(rec["run"]), rec["algorithm"],
                              float(rec["v14"]), float(rec["val13"]),
                              float(rec["output_sinr_db"]), int(rec["outer_iters"]),
                              float(rec["wall_ms"]), rec["status"],
                              float(rec["gamma"]), float(rec["eta"])))
    return rows


def aggregate(rows):
    """Per (algorithm, snr_db) means of v14, val13 and output SINR over
    successful rows, summed in sorted order with ``math.fsum``."""
    groups = {}
    for r in sorted(rows, key=ResultRow.sort_key):
        if r.status != "Optimal":
            continue
        groups.setdefault((r.algorithm, r.snr_db), []).append(r)
    out = {}
    for key, rs in groups.items():
        n = len(rs)
        out[key] = {
            "n": n,
            "v14": math.fsum(r.v14 for r in rs) / n,
            "val13": math.fsum(r.val13 for r in rs) / n,
            "output_sinr_db": math.fsum(r.output_sinr_db for r in rs) / n,
            "outer_iters": math.fsum(r.outer_iters for r in rs) / n,
        }
    return out


def summary_table(rows):
    agg = aggregate(rows)
    lines = [f"{'algorithm':<12} {'snr_db':>7} {'n':>4} {'val13':>12} {'sinr_db':>9} {'iters':>6}"]
    for (alg, snr), a in sorted(agg.items()):
        lines.append(f"{alg:<12} {snr:>7.1f} {a['n']:>4d} {a['val13']:>12.6g} "
                     f"{a['output_sinr_db']:>9.3f} {a['outer_iters']:>6.1f}")
    return "\n".join(lines)

