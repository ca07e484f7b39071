"""Config-driven experiment runner.

Subcommands:

* ``simulate <config.json>`` — run OTOC / MI / TMI / fit tasks, write CSV and
  JSON artifacts plus a run manifest into the output directory.
* ``fit <otoc.csv>`` — refit a previously written OTOC trace.
* ``presets list`` — the built-in lattices with their operator pairs.
* ``oracle-check`` — dense brute-force self-checks, pass/fail JSON.

Exit codes: 0 success; 1 task failure or strict-mode bound violation;
2 config error (message carries a JSON-pointer path); 3 resource refusal.

numpy, scipy, and the compute modules are imported inside the command
handlers on purpose: ``--threads`` / ``HEXOTOC_THREADS`` work by setting the
BLAS thread environment variables, which only take effect if they are set
before numpy first loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

DEFAULT_J = 4.0
DEFAULT_U_OVER_J = 4.0
DEFAULT_GRID_END_JT = 10.0
DEFAULT_GRID_POINTS = 201
DEFAULT_MAX_DIM = 1_000_000
TASK_NAMES = ("otoc", "mi", "tmi", "fit", "oracle_check")
FIT_MODEL_NAMES = ("exponential", "gaussian", "convolution")


class ConfigError(Exception):
    """Config rejection with a JSON-pointer path to the offending field."""

    def __init__(self, pointer: str, message: str) -> None:
        super().__init__(f"config error at {pointer or '/'}: {message}")
        self.pointer = pointer


class ResourceRefusal(Exception):
    def __init__(self, dim: int, budget: int) -> None:
        super().__init__(
            f"resource refusal: sector dimension {dim:,} exceeds budget "
            f"{budget:,} (pass --allow-heavy to proceed)"
        )
        self.dim = dim


def _set_threads(cli_value: int | None) -> int | None:
    """HEXOTOC_THREADS overrides --threads; unset means library defaults."""
    env = os.environ.get("HEXOTOC_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError as exc:
            raise ConfigError("", f"HEXOTOC_THREADS must be an integer, got {env!r}") from exc
    else:
        threads = cli_value
    if threads is not None:
        if threads < 1:
            raise ConfigError("", f"thread count must be >= 1, got {threads}")
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ[var] = str(threads)
    return threads


# ---------------------------------------------------------------------------
# config resolution


def _expect(cond: bool, pointer: str, message: str) -> None:
    if not cond:
        raise ConfigError(pointer, message)


def _as_int(value, pointer: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), pointer, f"expected an integer, got {value!r}")
    return value


def _as_number(value, pointer: str) -> float:
    _expect(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        pointer,
        f"expected a number, got {value!r}",
    )
    return float(value)


def _check_keys(obj: dict, pointer: str, allowed: set[str]) -> None:
    for key in obj:
        _expect(key in allowed, f"{pointer}/{key}", f"unknown field (allowed: {sorted(allowed)})")


def _resolve_lattice(raw: dict) -> tuple:
    """Returns (graph, preset_entry_or_None, resolved_lattice_block)."""
    from . import lattice

    block = raw.get("lattice")
    _expect(isinstance(block, dict), "/lattice", "required object with 'preset' or 'graph'")
    _check_keys(block, "/lattice", {"preset", "variant", "graph"})
    if "preset" in block:
        _expect("graph" not in block, "/lattice", "give either 'preset' or 'graph', not both")
        name = block["preset"]
        _expect(isinstance(name, str), "/lattice/preset", f"expected a string, got {name!r}")
        variant = block.get("variant")
        if variant is None:
            variant = 6 if name == "chain_pbc" else 1
        else:
            variant = _as_int(variant, "/lattice/variant")
        try:
            entry = lattice.preset_entry(name, variant)
        except (KeyError, ValueError) as exc:
            raise ConfigError("/lattice/preset", str(exc)) from exc
        return entry.graph, entry, {"preset": entry.name, "variant": entry.variant}
    _expect("graph" in block, "/lattice", "required object with 'preset' or 'graph'")
    try:
        graph = lattice.load_graph(block["graph"])
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError("/lattice/graph", str(exc)) from exc
    return graph, None, {
        "graph": {"site_count": graph.site_count, "edges": [list(e) for e in graph.edges]}
    }


def _resolve_params(raw: dict) -> dict:
    block = raw.get("params", {})
    _expect(isinstance(block, dict), "/params", "expected an object")
    _check_keys(block, "/params", {"J", "U", "U_over_J"})
    j = _as_number(block.get("J", DEFAULT_J), "/params/J")
    _expect(j > 0, "/params/J", f"hopping must be > 0, got {j}")
    _expect(
        not ("U" in block and "U_over_J" in block),
        "/params",
        "give either 'U' or 'U_over_J', not both",
    )
    if "U" in block:
        u = _as_number(block["U"], "/params/U")
    else:
        u = j * _as_number(block.get("U_over_J", DEFAULT_U_OVER_J), "/params/U_over_J")
    return {"J": j, "U": u}


def _resolve_operators(raw: dict, graph, entry) -> dict:
    block = raw.get("operators")
    if block is None:
        _expect(
            entry is not None,
            "/operators",
            "inline graphs need explicit operator sites {'i': ..., 'j': ...}",
        )
        pair = entry.pair
        return {"i": pair.i, "j": pair.j, "pair": entry.default_pair}
    _expect(isinstance(block, dict), "/operators", "expected an object")
    _check_keys(block, "/operators", {"i", "j", "pair"})
    if "pair" in block:
        _expect(
            "i" not in block and "j" not in block,
            "/operators",
            "give either a named 'pair' or explicit 'i'/'j', not both",
        )
        _expect(entry is not None, "/operators/pair", "named pairs need a preset lattice")
        name = block["pair"]
        _expect(
            name in entry.operator_pairs,
            "/operators/pair",
            f"unknown pair {name!r}; preset offers {sorted(entry.operator_pairs)}",
        )
        pair = entry.operator_pairs[name]
        return {"i": pair.i, "j": pair.j, "pair": name}
    _expect("i" in block and "j" in block, "/operators", "need both 'i' and 'j'")
    i = _as_int(block["i"], "/operators/i")
    j = _as_int(block["j"], "/operators/j")
    for ptr, site in (("/operators/i", i), ("/operators/j", j)):
        _expect(0 <= site < graph.site_count, ptr, f"site {site} out of range [0, {graph.site_count})")
    _expect(i != j, "/operators", "operator sites must differ")
    return {"i": i, "j": j}


def _resolve_initial_state(raw: dict, graph) -> list[int]:
    value = raw.get("initial_state", "all_ones")
    if value == "all_ones":
        return [1] * graph.site_count
    _expect(
        isinstance(value, list),
        "/initial_state",
        f"expected \"all_ones\" or an occupation list, got {value!r}",
    )
    _expect(
        len(value) == graph.site_count,
        "/initial_state",
        f"occupation list has {len(value)} entries for {graph.site_count} sites",
    )
    occ = [_as_int(n, f"/initial_state/{k}") for k, n in enumerate(value)]
    for k, n in enumerate(occ):
        _expect(n >= 0, f"/initial_state/{k}", f"occupation must be >= 0, got {n}")
    _expect(sum(occ) >= 1, "/initial_state", "total boson number must be >= 1")
    return occ


def _resolve_sites(value, pointer: str, graph) -> list[int]:
    _expect(isinstance(value, list) and value, pointer, "expected a non-empty site list")
    sites = [_as_int(s, f"{pointer}/{k}") for k, s in enumerate(value)]
    for k, s in enumerate(sites):
        _expect(0 <= s < graph.site_count, f"{pointer}/{k}", f"site {s} out of range [0, {graph.site_count})")
    _expect(len(set(sites)) == len(sites), pointer, "site list has duplicates")
    return sites


def resolve_config(raw: dict) -> dict:
    """Validate a raw config mapping and fill in every default."""
    from . import entropy

    _expect(isinstance(raw, dict), "", "top-level config must be a JSON object")
    _check_keys(
        raw,
        "",
        {
            "lattice",
            "params",
            "initial_state",
            "operators",
            "grid",
            "krylov",
            "n_max",
            "tasks",
            "fit",
            "mi",
            "tmi",
            "output_dir",
            "max_dim",
        },
    )
    graph, entry, lattice_block = _resolve_lattice(raw)
    params = _resolve_params(raw)
    occupation = _resolve_initial_state(raw, graph)
    operators = _resolve_operators(raw, graph, entry)

    grid_block = raw.get("grid", {})
    _expect(isinstance(grid_block, dict), "/grid", "expected an object")
    _check_keys(grid_block, "/grid", {"t_end_Jt", "points"})
    t_end = _as_number(grid_block.get("t_end_Jt", DEFAULT_GRID_END_JT), "/grid/t_end_Jt")
    _expect(t_end > 0, "/grid/t_end_Jt", f"must be > 0, got {t_end}")
    points = _as_int(grid_block.get("points", DEFAULT_GRID_POINTS), "/grid/points")
    _expect(points >= 2, "/grid/points", f"must be >= 2, got {points}")

    krylov_block = raw.get("krylov", {})
    _expect(isinstance(krylov_block, dict), "/krylov", "expected an object")
    _check_keys(krylov_block, "/krylov", {"m", "tol", "max_step"})
    krylov = {
        "m": _as_int(krylov_block.get("m", 30), "/krylov/m"),
        "tol": _as_number(krylov_block.get("tol", 1e-10), "/krylov/tol"),
        "max_step": _as_number(krylov_block.get("max_step", 1.0), "/krylov/max_step"),
    }
    _expect(krylov["m"] >= 2, "/krylov/m", f"must be >= 2, got {krylov['m']}")
    _expect(krylov["tol"] > 0, "/krylov/tol", f"must be > 0, got {krylov['tol']}")
    _expect(krylov["max_step"] > 0, "/krylov/max_step", f"must be > 0, got {krylov['max_step']}")

    n_max = raw.get("n_max")
    total = sum(occupation)
    if n_max is not None:
        n_max = _as_int(n_max, "/n_max")
        _expect(n_max >= 1, "/n_max", f"must be >= 1, got {n_max}")
        _expect(
            max(occupation) <= n_max,
            "/n_max",
            f"initial state has occupancy {max(occupation)} above the cap {n_max}",
        )

    tasks = raw.get("tasks")
    _expect(isinstance(tasks, list) and tasks, "/tasks", f"required non-empty list from {TASK_NAMES}")
    for k, t in enumerate(tasks):
        _expect(t in TASK_NAMES, f"/tasks/{k}", f"unknown task {t!r}; one of {TASK_NAMES}")
    _expect(len(set(tasks)) == len(tasks), "/tasks", "duplicate tasks")
    if "otoc" in tasks or "fit" in tasks:
        _expect(total >= 2, "/initial_state", "OTOC needs at least two bosons in total")

    fit_block = raw.get("fit", {})
    _expect(isinstance(fit_block, dict), "/fit", "expected an object")
    _check_keys(fit_block, "/fit", {"models", "window", "quantity", "time_units"})
    models = fit_block.get("models", list(FIT_MODEL_NAMES))
    _expect(isinstance(models, list) and models, "/fit/models", "expected a non-empty list")
    for k, m in enumerate(models):
        _expect(m in FIT_MODEL_NAMES, f"/fit/models/{k}", f"unknown model {m!r}; one of {FIT_MODEL_NAMES}")
    window = fit_block.get("window")
    if window is not None:
        if isinstance(window, list):
            _expect(
                len(window) == 2,
                "/fit/window",
                f"expected [t_lo, t_w], got {len(window)} entries",
            )
            lo = _as_number(window[0], "/fit/window/0")
            hi = _as_number(window[1], "/fit/window/1")
            _expect(
                0 <= lo < hi,
                "/fit/window",
                f"must satisfy 0 <= t_lo < t_w, got [{lo}, {hi}]",
            )
            window = [lo, hi]
        else:
            window = _as_number(window, "/fit/window")
            _expect(window > 0, "/fit/window", f"must be > 0, got {window}")
    quantity = fit_block.get("quantity", "re")
    _expect(quantity in ("re", "abs"), "/fit/quantity", f"one of 're', 'abs', got {quantity!r}")
    time_units = fit_block.get("time_units", "physical")
    _expect(
        time_units in ("physical", "jt"),
        "/fit/time_units",
        f"one of 'physical', 'jt', got {time_units!r}",
    )

    mi_block = raw.get("mi", {})
    _expect(isinstance(mi_block, dict), "/mi", "expected an object")
    _check_keys(mi_block, "/mi", {"subset_a", "subset_b"})
    if "subset_a" in mi_block or "subset_b" in mi_block:
        _expect(
            "subset_a" in mi_block and "subset_b" in mi_block,
            "/mi",
            "give both 'subset_a' and 'subset_b' or neither",
        )
        subset_a = _resolve_sites(mi_block["subset_a"], "/mi/subset_a", graph)
        subset_b = _resolve_sites(mi_block["subset_b"], "/mi/subset_b", graph)
        _expect(
            not set(subset_a) & set(subset_b),
            "/mi",
            f"subsets overlap: {sorted(set(subset_a) & set(subset_b))}",
        )
    elif "mi" in tasks:
        _expect(
            graph.site_count % 2 == 0,
            "/mi",
            "odd site count: give 'subset_a' and 'subset_b' explicitly",
        )
        a, b = entropy.equal_bipartition(graph.site_count, start=operators["i"])
        subset_a, subset_b = list(a), list(b)
    else:
        subset_a, subset_b = [], []

    tmi_block = raw.get("tmi", {})
    _expect(isinstance(tmi_block, dict), "/tmi", "expected an object")
    _check_keys(tmi_block, "/tmi", {"b", "c"})
    if "b" in tmi_block or "c" in tmi_block:
        _expect("b" in tmi_block and "c" in tmi_block, "/tmi", "give both 'b' and 'c' or neither")
        tmi_b = _resolve_sites(tmi_block["b"], "/tmi/b", graph)
        tmi_c = _resolve_sites(tmi_block["c"], "/tmi/c", graph)
        _expect(
            not set(tmi_b) & set(tmi_c),
            "/tmi",
            f"subsets overlap: {sorted(set(tmi_b) & set(tmi_c))}",
        )
    elif "tmi" in tasks:
        part = entropy.ring_tmi_partition(graph.site_count, start=operators["i"])
        tmi_b, tmi_c = list(part.subset_b), list(part.subset_c)
    else:
        tmi_b, tmi_c = [], []
    if "tmi" in tasks:
        _expect(
            occupation[tmi_b[0]] >= 1,
            "/tmi/b",
            f"ancilla hole site {tmi_b[0]} is empty in the initial state",
        )

    output_dir = raw.get("output_dir", "out")
    _expect(isinstance(output_dir, str) and output_dir, "/output_dir", "expected a non-empty string")
    max_dim = _as_int(raw.get("max_dim", DEFAULT_MAX_DIM), "/max_dim")
    _expect(max_dim >= 1, "/max_dim", f"must be >= 1, got {max_dim}")

    return {
        "lattice": lattice_block,
        "params": params,
        "initial_state": occupation,
        "operators": operators,
        "grid": {"t_end_Jt": t_end, "points": points},
        "krylov": krylov,
        "n_max": n_max,
        "tasks": list(tasks),
        "fit": {
            "models": list(models),
            "window": window,
            "quantity": quantity,
            "time_units": time_units,
        },
        "mi": {"subset_a": subset_a, "subset_b": subset_b},
        "tmi": {"b": tmi_b, "c": tmi_c},
        "output_dir": output_dir,
        "max_dim": max_dim,
        "_graph": graph,  # stripped before the manifest is written
    }


# ---------------------------------------------------------------------------
# artifact writers


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, columns: dict) -> None:
    """Comma-separated, LF endings, header row, shortest round-trip floats."""
    names = list(columns)
    length = len(next(iter(columns.values())))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for k in range(length):
            fh.write(",".join(_fmt(columns[name][k]) for name in names) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _versions() -> dict:
    import platform

    import numpy
    import scipy

    from . import __version__

    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "hexotoc": __version__,
    }


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args: argparse.Namespace) -> int:
    from . import entropy, fitting, fock, hamiltonian, observables, propagator

    config_path = Path(args.config)
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {config_path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {config_path}: {exc}")
    config = resolve_config(raw)
    graph = config.pop("_graph")

    occupation = tuple(config["initial_state"])
    total = sum(occupation)
    cap = config["n_max"] if config["n_max"] is not None else total
    dim = fock.sector_dimension(graph.site_count, total, cap)
    if dim > config["max_dim"] and not args.allow_heavy:
        raise ResourceRefusal(dim, config["max_dim"])

    params = hamiltonian.BoseHubbardParams(config["params"]["J"], config["params"]["U"])
    import numpy as np

    grid = observables.TimeGrid(
        np.linspace(0.0, config["grid"]["t_end_Jt"], config["grid"]["points"])
    )
    krylov = propagator.KrylovConfig(
        krylov_dim=config["krylov"]["m"],
        tolerance=config["krylov"]["tol"],
        max_step=config["krylov"]["max_step"],
    )
    pair = None
    ops = config["operators"]

    out_dir = Path(args.out) if args.out else Path(config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = config["tasks"]
    wall: dict[str, float] = {}
    truncated: dict[str, bool] = {}
    outputs: list[str] = []
    otoc_series = None
    mi_cols = None
    summary: list[str] = []

    if "otoc" in tasks or "fit" in tasks:
        from .lattice import OperatorSitePair

        pair = OperatorSitePair(ops["i"], ops["j"])
        t0 = time.perf_counter()
        otoc_series = observables.compute_otoc_series(
            graph, params, occupation, pair, grid, config["n_max"], krylov
        )
        wall["otoc"] = time.perf_counter() - t0
        truncated["otoc"] = otoc_series.truncated
        if "otoc" in tasks:
            _write_csv(out_dir / "otoc.csv", observables.otoc_table(otoc_series))
            outputs.append("otoc.csv")
            summary.append(
                f"otoc: {len(grid)} points, Re F({grid.jt[-1]:g}) = {otoc_series.values[-1].real:.6f}"
            )

    if "mi" in tasks:
        t0 = time.perf_counter()
        mi_cols = entropy.compute_mi_series(
            graph,
            params,
            occupation,
            config["mi"]["subset_a"],
            config["mi"]["subset_b"],
            grid,
            config["n_max"],
            krylov,
        )
        wall["mi"] = time.perf_counter() - t0
        truncated["mi"] = cap < total
        _write_csv(out_dir / "mi.csv", mi_cols)
        outputs.append("mi.csv")
        final = mi_cols["mi"][-1]
        shown = entropy.nats_to_bits(final) if args.bits else final
        unit = "bits" if args.bits else "nats"
        summary.append(f"mi: final I(A:B) = {shown:.6f} {unit}")

    if "tmi" in tasks:
        partition = entropy.SubsystemPartition(
            graph.site_count,
            (),
            tuple(config["tmi"]["b"]),
            tuple(config["tmi"]["c"]),
            ancilla_a=True,
        )
        t0 = time.perf_counter()
        tmi_cols = entropy.compute_tmi_series(
            graph, params, occupation, partition, grid, config["n_max"], krylov
        )
        wall["tmi"] = time.perf_counter() - t0
        truncated["tmi"] = cap < total
        _write_csv(out_dir / "tmi.csv", tmi_cols)
        outputs.append("tmi.csv")
        tmin = tmi_cols["tmi"].min()
        shown = entropy.nats_to_bits(tmin) if args.bits else tmin
        unit = "bits" if args.bits else "nats"
        summary.append(f"tmi: minimum I3 = {shown:.6f} {unit}")

    if "fit" in tasks:
        t0 = time.perf_counter()
        fit_conf = config["fit"]
        results = fitting.model_select(
            otoc_series,
            kinds=tuple(fit_conf["models"]),
            window=fit_conf["window"],
            quantity=fit_conf["quantity"],
            time_units=fit_conf["time_units"],
        )
        wall["fit"] = time.perf_counter() - t0
        payload = {
            "fits": [fitting.result_to_json(r) for r in results],
            "ranking": [r.model.kind for r in results],
            "window": list(results[0].window),
            "time_units": fit_conf["time_units"],
            "quantity": fit_conf["quantity"],
        }
        _write_json(out_dir / "fits.json", payload)
        outputs.append("fits.json")
        summary.append("fit ranking: " + " > ".join(payload["ranking"]))

    if "oracle_check" in tasks:
        t0 = time.perf_counter()
        report = _oracle_report()
        wall["oracle_check"] = time.perf_counter() - t0
        _write_json(out_dir / "oracle_check.json", report)
        outputs.append("oracle_check.json")
        summary.append(f"oracle_check: all_passed = {report['all_passed']}")

    bound_violated = False
    if otoc_series is not None and mi_cols is not None and "otoc" in tasks and "mi" in tasks:
        report = entropy.otoc_mi_bound_check(otoc_series, mi_cols["jt"], mi_cols["mi"])
        rows = {
            "jt": [r.jt for r in report.rows],
            "delta_otoc": [r.delta_otoc for r in report.rows],
            "delta_mi": [r.delta_mi for r in report.rows],
            "satisfied": [r.satisfied for r in report.rows],
        }
        names = list(rows)
        with open(out_dir / "bound_check.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            for k in range(len(report.rows)):
                cells = [
                    _fmt(rows["jt"][k]),
                    _fmt(rows["delta_otoc"][k]),
                    _fmt(rows["delta_mi"][k]),
                    "true" if rows["satisfied"][k] else "false",
                ]
                fh.write(",".join(cells) + "\n")
        outputs.append("bound_check.csv")
        n_bad = len(report.violations())
        summary.append(
            "bound_check: all rows satisfied"
            if report.all_satisfied
            else f"bound_check: {n_bad} row(s) violate the MI bound"
        )
        bound_violated = not report.all_satisfied

    manifest = {
        "config": config,
        "versions": _versions(),
        "sector_dimension": dim,
        "truncated": truncated,
        "wall_times_s": wall,
        "threads": args.threads_resolved,
        "outputs": outputs,
    }
    _write_json(out_dir / "run_manifest.json", manifest)

    for line in summary:
        print(line)
    print(f"wrote {', '.join(outputs + ['run_manifest.json'])} to {out_dir}")
    if bound_violated and args.strict_bound:
        print("strict mode: OTOC-MI bound violated", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# fit


def _window_arg(text: str):
    """Parse --window: a bare cutoff 't_w' or a two-sided 't_lo:t_w'."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return (float(lo), float(hi))
    return float(text)


def _cmd_fit(args: argparse.Namespace) -> int:
    import csv as csv_mod

    import numpy as np

    from . import fitting, hamiltonian, observables
    from .lattice import OperatorSitePair

    path = Path(args.csv)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return 1
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv_mod.DictReader(fh)
        needed = {"jt", "re_otoc", "im_otoc"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            print(
                f"error: {path} must carry columns {sorted(needed)}, "
                f"found {reader.fieldnames}",
                file=sys.stderr,
            )
            return 1
        rows = list(reader)
    jt = np.array([float(r["jt"]) for r in rows])
    values = np.array(
        [float(r["re_otoc"]) + 1j * float(r["im_otoc"]) for r in rows]
    )
    series = observables.OTOCSeries(
        observables.TimeGrid(jt),
        values,
        OperatorSitePair(0, 1),  # placeholder; the trace is already computed
        hamiltonian.BoseHubbardParams(args.hopping, 0.0),
        (),
        np.zeros(len(jt)),
        hop_distance=args.distance,
    )
    kinds = tuple(args.models.split(","))
    for kind in kinds:
        if kind not in FIT_MODEL_NAMES:
            print(
                f"error: unknown model {kind!r}; one of {FIT_MODEL_NAMES}",
                file=sys.stderr,
            )
            return 1
    needs_distance = any(k in ("exponential", "gaussian") for k in kinds)
    if needs_distance and args.distance is None:
        print(
            "error: --distance (operator hop distance) is required for "
            "exponential/gaussian fits",
            file=sys.stderr,
        )
        return 1
    results = fitting.model_select(
        series,
        kinds=kinds,
        window=args.window,
        quantity=args.quantity,
        time_units=args.units,
    )
    payload = {
        "fits": [fitting.result_to_json(r) for r in results],
        "ranking": [r.model.kind for r in results],
        "window": list(results[0].window),
        "time_units": args.units,
        "quantity": args.quantity,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# presets


def _cmd_presets(args: argparse.Namespace) -> int:
    from . import lattice

    header = f"{'name':<14}{'variant':<9}{'sites':<7}{'edges':<7}{'default pair':<14}pairs"
    print(header)
    print("-" * len(header))
    for entry in lattice.preset_registry():
        pairs = ", ".join(
            f"{name}=({pair.i},{pair.j})"
            for name, pair in sorted(entry.operator_pairs.items())
        )
        default = entry.pair
        print(
            f"{entry.name:<14}{entry.variant:<9}{entry.graph.site_count:<7}"
            f"{len(entry.graph.edges):<7}{f'({default.i},{default.j})':<14}{pairs}"
        )
    return 0


# ---------------------------------------------------------------------------
# oracle-check


def _oracle_report() -> dict:
    """Dense brute-force self-checks; small systems only, runs in seconds."""
    import numpy as np

    from . import entropy, fock, hamiltonian, lattice, observables, oracle, propagator, special

    checks = []

    def record(name: str, passed: bool, detail: str) -> None:
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    # 1. analytic single-hop rotation: exp(-iHt)|1,0> at Jt = pi/2 -> i|0,1>
    two_site = lattice.LatticeGraph(2, ((0, 1),))
    params = hamiltonian.BoseHubbardParams(1.0, 0.0)
    H2 = oracle.dense_hamiltonian(two_site, 1, 1, params)
    evolver = oracle.DenseEvolver.from_matrix(H2)
    states = oracle.dense_basis(2, 1, 1)
    psi0 = np.zeros(2, dtype=complex)
    psi0[states.index((1, 0))] = 1.0
    out = evolver.evolve(psi0, np.pi / 2)
    target = np.zeros(2, dtype=complex)
    target[states.index((0, 1))] = 1j
    err = float(np.max(np.abs(out - target)))
    record("dense_single_hop_rotation", err < 1e-12, f"max deviation {err:.2e}")

    # 2. unitarity of dense evolution
    rng = np.random.default_rng(7)
    vec = rng.normal(size=2) + 1j * rng.normal(size=2)
    drift = abs(np.linalg.norm(evolver.evolve(vec, 2.31)) - np.linalg.norm(vec))
    record("dense_evolve_unitarity", drift < 1e-13, f"norm drift {drift:.2e}")

    # 3. two algebraic orderings of the correlator agree
    tri = lattice.build_preset("chain_pbc", 3)
    p4 = hamiltonian.BoseHubbardParams(4.0, 16.0)
    fa = oracle.dense_otoc(tri, (1, 1, 1), 0, 1, p4, 0.7331, form="heisenberg")
    fb = oracle.dense_otoc(tri, (1, 1, 1), 0, 1, p4, 0.7331, form="states")
    gap = abs(fa - fb)
    record("dense_otoc_form_consistency", gap < 1e-12, f"|heisenberg - states| = {gap:.2e}")

    # 4. Krylov pipeline vs dense correlator on the 3-ring
    grid = observables.TimeGrid(np.linspace(0.0, 3.0, 7))
    series = observables.compute_otoc_series(
        tri, p4, (1, 1, 1), lattice.OperatorSitePair(0, 1), grid
    )
    ref = oracle.dense_otoc_series(tri, (1, 1, 1), 0, 1, p4, grid.times(4.0))
    gap = float(np.max(np.abs(series.values - ref)))
    record("krylov_vs_dense_otoc", gap < 1e-8, f"max |F_krylov - F_dense| = {gap:.2e}")

    # 5. grouped partial trace vs dict-based dense partial trace
    hexa = lattice.build_preset("hex_strip", 1)
    sectors = observables.SectorSet.build(hexa, p4, 6)
    psi = fock.basis_state(sectors.bases[0], (1, 1, 1, 1, 1, 1))
    psi = propagator.evolve(sectors.hams[0], psi, 0.25)
    rho, labels = entropy.reduced_density_matrix(psi, (0, 1, 2))
    rho_ref, labels_ref = oracle.dense_partial_trace(
        psi.amplitudes, [tuple(s) for s in sectors.bases[0].states.tolist()], (0, 1, 2)
    )
    same_labels = [tuple(l) for l in labels.tolist()] == labels_ref
    gap = float(np.max(np.abs(rho - rho_ref)))
    record(
        "partial_trace_cross_check",
        same_labels and gap < 1e-12,
        f"max entry gap {gap:.2e}, labels match: {same_labels}",
    )
    s_fast = entropy.von_neumann_entropy(rho)
    s_ref = oracle.dense_entropy(rho_ref)
    record(
        "entropy_cross_check",
        abs(s_fast - s_ref) < 1e-10,
        f"|S_fast - S_dense| = {abs(s_fast - s_ref):.2e}",
    )

    # 6. error-function spot values and reflection identity
    worst = 0.0
    for x in (0.25, 0.5, 1.5, 3.0, 7.0):
        worst = max(worst, abs(special.erfc(-x) - (2.0 - special.erfc(x))))
    spot = abs(special.erfc(1.0) - 0.15729920705028513) / 0.15729920705028513
    record(
        "erfc_identities",
        special.erfc(0.0) == 1.0 and special.erfcx(0.0) == 1.0 and worst < 1e-15 and spot < 1e-12,
        f"reflection residual {worst:.2e}, erfc(1) relative error {spot:.2e}",
    )

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    report = _oracle_report()
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if report["all_passed"] else 1


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexotoc",
        description="OTOC and entanglement dynamics on finite Bose-Hubbard lattices",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="BLAS/OpenMP thread budget (HEXOTOC_THREADS overrides; default: library choice)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment described by a JSON config")
    sim.add_argument("config", help="path to the experiment config (JSON)")
    sim.add_argument("--out", default=None, help="output directory (overrides config output_dir)")
    sim.add_argument(
        "--allow-heavy",
        action="store_true",
        help="proceed even when the sector dimension exceeds the configured budget",
    )
    sim.add_argument(
        "--strict-bound",
        action="store_true",
        help="exit nonzero if any OTOC-MI bound row is violated",
    )
    sim.add_argument("--bits", action="store_true", help="print entropies in bits instead of nats")
    sim.set_defaults(handler=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit decay models to a previously written otoc.csv")
    fit.add_argument("csv", help="path to an otoc.csv written by simulate")
    fit.add_argument("--hopping", type=float, default=DEFAULT_J, help="J used for the run (default 4)")
    fit.add_argument("--distance", type=float, default=None, help="operator hop distance |x|")
    fit.add_argument(
        "--models",
        default=",".join(FIT_MODEL_NAMES),
        help="comma-separated list of models to fit",
    )
    fit.add_argument(
        "--window",
        type=_window_arg,
        default=None,
        help="fit window: upper edge t_w, or t_lo:t_w for a two-sided window",
    )
    fit.add_argument("--quantity", choices=("re", "abs"), default="re")
    fit.add_argument("--units", choices=("physical", "jt"), default="physical")
    fit.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    fit.set_defaults(handler=_cmd_fit)

    presets = sub.add_parser("presets", help="preset lattice catalogue")
    presets_sub = presets.add_subparsers(dest="presets_command", required=True)
    plist = presets_sub.add_parser("list", help="list presets with sizes and operator pairs")
    plist.set_defaults(handler=_cmd_presets)

    oracle_p = sub.add_parser("oracle-check", help="dense brute-force self checks (JSON report)")
    oracle_p.set_defaults(handler=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.threads_resolved = _set_threads(args.threads)
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceRefusal as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
