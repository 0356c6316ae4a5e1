# pipeline.py
"""
Command-line front end of the sticky toolkit.

Commands:
1. kernel    - density / cdf rows of p_t(x, .) on a y-grid, atom in the header
2. simulate  - path ensembles from the exact, time-change or euler sampler
3. girsanov  - weighted estimate of the distorted semigroup p_t f(x)
4. validate  - run a diagnostics suite, exit 0 iff every check passes
5. wetting   - long euler run of the wetting model, boundary occupation per site

A run is one JSON document (--config) with flag overrides. Identical config
and seed give byte-identical artifacts; every artifact embeds the resolved
config and the toolkit version.

Exit codes: 0 success, 1 failed checks, 2 usage or configuration error.
"""

import argparse
import json
import logging
import os
import sys
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from analysis.diagnostics import print_report_summary, save_report
from analysis.suites import run_suite, suite_names
from errors import DomainError, StickyError
from girsanov import weighted_expectation
from kernel import StickyParams, transition_atom, transition_cdf, transition_density, transition_mass
from measure import ProductMeasureSpec, stationary_expectation, wetting_tail_radius
from models import ModelSpec, build_model, build_potential
from paths import (
    PathSample,
    sample_euler_distorted,
    sample_exact_grid,
    sample_timechange,
    simulate_batches,
    uniform_grid,
)
from utils import TOOLKIT_VERSION, format_float, get_artifact_path, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

WETTING_CHUNK = 10_000
DEFAULT_FORMAT = {"kernel": "csv", "simulate": "csv", "girsanov": "json", "validate": "json", "wetting": "json"}
MAX_STATIONARY_DIMENSION = 4


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str | None = None
    format: Literal["csv", "json"] = "json"


class RunConfig(BaseModel):
    """Everything a run depends on; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["kernel", "simulate", "girsanov", "validate", "wetting"]
    params: StickyParams = StickyParams(beta=1.0)
    model: ModelSpec = ModelSpec()
    t: float = Field(default=1.0, gt=0)
    x: float = Field(default=0.0, ge=0)
    grid: str = "0:5:0.01"
    horizon: float = Field(default=1.0, gt=0)
    dt: float = Field(default=1e-2, gt=0)
    sampler: Literal["exact", "timechange", "euler"] = "exact"
    paths: int = Field(default=1000, ge=1)
    f: Literal["one", "exp", "indicator"] = "exp"
    suite: str = "kernel-invariants"
    seed: int = Field(default=42, ge=0, lt=2**64)
    threads: int | None = Field(default=None, ge=1)
    include_runtime: bool = False
    output: OutputSpec = OutputSpec()


def parse_grid(text: str) -> np.ndarray:
    """
    "start:stop:step" -> start, start+step, ..., stop (inclusive).

    Example:
        "0:5:0.01" -> 501 points
    """
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise DomainError(f"grid must look like start:stop:step, got {text!r}")
    if step <= 0.0 or stop < start:
        raise DomainError(f"grid needs step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


def _selected_f(name: str):
    if name == "one":
        return lambda x: np.ones(len(x))
    if name == "indicator":
        return lambda x: (x[:, 0] <= 1.0).astype(float)
    return lambda x: np.exp(-x[:, 0])


class ToolkitRun:
    """
    Executes one RunConfig.

    Each command writes one artifact and returns (exit_code, summary_line).
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.config_dump = config.model_dump(mode="json")

    def _artifact_path(self, slug: str) -> str:
        out = self.config.output
        if out.path is None:
            return get_artifact_path(self.config.command, slug, out.format)
        directory = os.path.dirname(out.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        return out.path

    def _write_json(self, path: str, payload: dict) -> None:
        document = {"config": self.config_dump, "version": TOOLKIT_VERSION, **payload}
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(document, f, indent=2, sort_keys=True)
            f.write("\n")

    def _write_csv(self, path: str, header: list[str], rows, comments: dict[str, str]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"# version={TOOLKIT_VERSION}\n")
            f.write(f"# config={json.dumps(self.config_dump, sort_keys=True)}\n")
            for key, value in comments.items():
                f.write(f"# {key}={value}\n")
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row) + "\n")

    # =========================================================================
    # kernel
    # =========================================================================
    def run_kernel(self) -> tuple[int, str]:
        cfg = self.config
        ys = parse_grid(cfg.grid)
        if ys[0] < 0.0:
            raise DomainError(f"kernel grid must start at y >= 0, got {ys[0]}")
        atom = transition_atom(cfg.t, cfg.x, cfg.params)
        density = np.atleast_1d(transition_density(cfg.t, cfg.x, ys, cfg.params))
        cdf = np.atleast_1d(transition_cdf(cfg.t, cfg.x, ys, cfg.params))

        slug = f"t{cfg.t:g}_x{cfg.x:g}_beta{cfg.params.beta:g}"
        path = self._artifact_path(slug)
        if cfg.output.format == "csv":
            mass = transition_mass(cfg.t, cfg.x, cfg.params)
            rows = [
                (float(cfg.t), float(cfg.x), float(y), float(d), atom, mass, float(c))
                for y, d, c in zip(ys, density, cdf)
            ]
            header = ["t", "x", "y", "density", "atom", "mass", "cdf"]
            self._write_csv(path, header, rows, {"atom": format_float(atom)})
        else:
            self._write_json(path, {"atom": atom, "y": ys.tolist(), "density": density.tolist(), "cdf": cdf.tolist()})
        return EXIT_OK, f"kernel: atom={format_float(atom)} rows={ys.size} -> {path}"

    # =========================================================================
    # simulate
    # =========================================================================
    def _simulate(self) -> PathSample:
        cfg = self.config
        x0 = [cfg.x] * cfg.params.n
        if cfg.sampler == "timechange":
            return simulate_batches(
                sample_timechange,
                cfg.paths,
                cfg.seed,
                batch_size=1000,
                max_workers=cfg.threads,
                x0=cfg.x,
                horizon=cfg.horizon,
                dt=cfg.dt,
                params=cfg.params,
            )
        grid = uniform_grid(cfg.horizon, max(1, round(cfg.horizon / cfg.dt)))
        if cfg.sampler == "euler":
            return simulate_batches(
                sample_euler_distorted,
                cfg.paths,
                cfg.seed,
                max_workers=cfg.threads,
                x0=x0,
                grid=grid,
                params=cfg.params,
                model=build_model(cfg.model, cfg.params.n),
            )
        return simulate_batches(
            sample_exact_grid, cfg.paths, cfg.seed, max_workers=cfg.threads, x0=x0, grid=grid, params=cfg.params
        )

    def run_simulate(self) -> tuple[int, str]:
        cfg = self.config
        sample = self._simulate()
        n = sample.n
        slug = f"{cfg.sampler}_n{n}_beta{cfg.params.beta:g}_seed{cfg.seed}"
        path = self._artifact_path(slug)
        final_occupation = sample.boundary_occupation[-1]
        if cfg.output.format == "csv":
            header = ["path", "t", *[f"x_{i + 1}" for i in range(n)], *[f"occ_{i + 1}" for i in range(n)]]
            rows = (
                (p, float(t), *map(float, sample.states[k, p]), *map(float, sample.boundary_occupation[k, p]))
                for p in range(sample.n_paths)
                for k, t in enumerate(sample.grid.times)
            )
            self._write_csv(path, header, rows, {"noise_exact": str(sample.noise_exact).lower()})
        else:
            self._write_json(
                path,
                {
                    "paths": sample.n_paths,
                    "mean_final": np.mean(sample.final(), axis=0).tolist(),
                    "atom_fraction": np.mean(sample.final() == 0.0, axis=0).tolist(),
                    "mean_local_time": (np.mean(final_occupation, axis=0) / sample.beta).tolist(),
                },
            )
        return EXIT_OK, f"simulate: {sample.n_paths} paths x {len(sample.grid)} times -> {path}"

    # =========================================================================
    # girsanov
    # =========================================================================
    def run_girsanov(self) -> tuple[int, str]:
        cfg = self.config
        model = build_model(cfg.model, cfg.params.n)
        steps = max(1, round(cfg.t / cfg.dt))
        estimate = weighted_expectation(
            _selected_f(cfg.f),
            cfg.t,
            [cfg.x] * cfg.params.n,
            model,
            cfg.params,
            cfg.paths,
            np.random.default_rng(cfg.seed),
            n_steps=steps,
        )
        slug = f"{model.name}_{cfg.f}_t{cfg.t:g}_seed{cfg.seed}"
        path = self._artifact_path(slug)
        if cfg.output.format == "csv":
            self._write_csv(path, ["estimate", "stderr", "ess"], [tuple(map(float, estimate))], {})
        else:
            self._write_json(path, estimate._asdict())
        return EXIT_OK, (
            f"girsanov: estimate={format_float(estimate.estimate)} stderr={format_float(estimate.stderr)} -> {path}"
        )

    # =========================================================================
    # validate
    # =========================================================================
    def run_validate(self) -> tuple[int, str]:
        cfg = self.config
        if cfg.suite not in suite_names():
            raise DomainError(f"unknown suite {cfg.suite!r}; choose one of {suite_names()}")
        if cfg.output.format != "json":
            raise DomainError("validate writes JSON reports only")
        report = run_suite(cfg.suite, seed=cfg.seed, max_workers=cfg.threads, include_runtime=cfg.include_runtime)
        print_report_summary(report)
        path = self._artifact_path(f"{cfg.suite}_seed{cfg.seed}")
        save_report(report, path, config={**self.config_dump, "version": TOOLKIT_VERSION})
        passed = sum(c.passed for c in report.checks)
        code = EXIT_OK if report.passed else EXIT_FAILED
        return code, f"validate: {cfg.suite} {passed}/{len(report.checks)} passed -> {path}"

    # =========================================================================
    # wetting
    # =========================================================================
    def _stationary_fractions(self, model) -> list[float] | None:
        cfg = self.config
        n = cfg.params.n
        if n > MAX_STATIONARY_DIMENSION:
            return None
        V = build_potential(cfg.model)
        spec = ProductMeasureSpec(n=n, beta=cfg.params.beta, R=wetting_tail_radius(n, V.c_minus), resolution=32)
        return [
            stationary_expectation(lambda x, i=i: (x[:, i] == 0.0).astype(float), model, spec, cfg.threads)
            for i in range(n)
        ]

    def run_wetting(self) -> tuple[int, str]:
        cfg = self.config
        n = cfg.params.n
        model = build_model(cfg.model.model_copy(update={"name": "wetting"}), n)
        rng = np.random.default_rng(cfg.seed)

        logger.info(f"\n{'=' * 60}\nWetting run: n={n}, horizon={cfg.horizon:g}, dt={cfg.dt:g}\n{'=' * 60}")
        steps_total = max(1, round(cfg.horizon / cfg.dt))
        x = np.zeros((cfg.paths, n))
        occupation = np.zeros((cfg.paths, n))
        height = np.zeros((cfg.paths, n))
        done = 0
        while done < steps_total:
            steps = min(WETTING_CHUNK, steps_total - done)
            grid = uniform_grid(steps * cfg.dt, steps)
            chunk = sample_euler_distorted(x, grid, cfg.params, model, rng, n_paths=cfg.paths)
            occupation += chunk.boundary_occupation[-1]
            height += np.sum(chunk.states[:-1] * grid.steps[:, None, None], axis=0)
            x = chunk.final()
            done += steps
            logger.debug(f"wetting: {done}/{steps_total} steps")

        horizon = steps_total * cfg.dt
        fractions = (np.mean(occupation, axis=0) / horizon).tolist()
        stationary = self._stationary_fractions(model)
        path = self._artifact_path(f"{model.name}_n{n}_beta{cfg.params.beta:g}_seed{cfg.seed}")
        payload = {
            "occupation_fraction": fractions,
            "stationary_fraction": stationary,
            "mean_height": (np.mean(height, axis=0) / horizon).tolist(),
            "horizon": horizon,
        }
        if cfg.output.format == "csv":
            rows = [
                (i + 1, fractions[i], stationary[i] if stationary else float("nan"), payload["mean_height"][i])
                for i in range(n)
            ]
            self._write_csv(path, ["site", "occupation_fraction", "stationary_fraction", "mean_height"], rows, {})
        else:
            self._write_json(path, payload)
        logger.info("✓ Wetting run complete")
        return EXIT_OK, f"wetting: occupation {[round(v, 4) for v in fractions]} -> {path}"

    def run(self) -> int:
        handler = getattr(self, f"run_{self.config.command}")
        code, summary = handler()
        print(summary)
        return code


# =========================================================================
# Argument handling
# =========================================================================
# flag -> path inside the config document
OVERRIDES = {
    "beta": ("params", "beta"),
    "n": ("params", "n"),
    "model": ("model", "name"),
    "potential": ("model", "potential"),
    "epsilon": ("model", "epsilon"),
    "c": ("model", "c"),
    "t": ("t",),
    "x": ("x",),
    "grid": ("grid",),
    "horizon": ("horizon",),
    "dt": ("dt",),
    "sampler": ("sampler",),
    "paths": ("paths",),
    "f": ("f",),
    "suite": ("suite",),
    "seed": ("seed",),
    "threads": ("threads",),
    "include_runtime": ("include_runtime",),
    "output": ("output", "path"),
    "format": ("output", "format"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Sticky reflected Brownian motion toolkit")
    parser.add_argument("command", choices=["kernel", "simulate", "girsanov", "validate", "wetting"])
    parser.add_argument("--config", help="JSON run configuration; flags override its fields")
    parser.add_argument("--beta", type=float, help="Stickiness beta > 0")
    parser.add_argument("--n", type=int, help="Dimension")
    parser.add_argument("--model", help="Density model: flat, gaussian, wetting, bounded-drift")
    parser.add_argument("--potential", help="Wetting pair potential: quadratic, soft-convex")
    parser.add_argument("--epsilon", type=float, help="Soft-convex potential parameter")
    parser.add_argument("--c", type=float, help="Bounded-drift strength")
    parser.add_argument("--t", type=float, help="Time for kernel / girsanov")
    parser.add_argument("--x", type=float, help="Starting point (every coordinate)")
    parser.add_argument("--grid", help="Kernel y-grid start:stop:step")
    parser.add_argument("--horizon", type=float, help="Simulation horizon")
    parser.add_argument("--dt", type=float, help="Time step")
    parser.add_argument("--sampler", help="exact, timechange or euler")
    parser.add_argument("--paths", type=int, help="Number of paths")
    parser.add_argument("--f", help="Test function for girsanov: one, exp, indicator")
    parser.add_argument("--suite", help=f"Diagnostics suite: {', '.join(suite_names())}")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--threads", type=int, help="Cap on worker threads")
    parser.add_argument("--include-runtime", action="store_true", default=None, help="Store runtimes in reports")
    parser.add_argument("--output", help="Artifact path (default: runs/<command>/<slug>.<format>)")
    parser.add_argument("--format", help="csv or json")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the --config document with flag overrides and validate.

    Raises:
        ValidationError: a field is malformed or unknown
        DomainError: the config file cannot be read
    """
    document: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                document = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise DomainError(f"cannot read config {args.config}: {e}")
    document["command"] = args.command
    document.setdefault("output", {}).setdefault("format", DEFAULT_FORMAT[args.command])
    if args.command == "wetting":
        document.setdefault("model", {})["name"] = "wetting"
        document.setdefault("paths", 1)

    for flag, path in OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        node = document
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return RunConfig.model_validate(document)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = resolve_config(args)
    except ValidationError as e:
        fields = ", ".join(".".join(map(str, err["loc"])) for err in e.errors())
        print(f"✗ Invalid configuration ({fields}):\n{e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return ToolkitRun(config).run()
    except DomainError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except StickyError as e:
        print(f"✗ Run failed: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
