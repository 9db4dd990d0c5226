"""Scenario presets, Monte Carlo sweeps, and CSV emission."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import (baseline_multicast_solve, conventional_array,
                        fixed_array_channels, massive_array)
from .config import ConfigError, SystemConfig, dbm_to_watts, load_config
from .geometry import UserSet, make_users
from .radiation import PROPORTIONAL, RADIATION_MODELS
from .wd import wd_alternating_optimize
from .wm import wm_alternating_optimize

ARCH_WD = "wd"
ARCH_WM = "wm"
ARCH_CONV = "conv"
ARCH_MASSIVE = "massive"
ARCHITECTURES = (ARCH_WD, ARCH_WM, ARCH_CONV, ARCH_MASSIVE)
PASS_ARCHITECTURES = (ARCH_WD, ARCH_WM)

UNIFORM = "uniform"
SEPARATED = "separated"

SWEEP_POWER = "power"
SWEEP_NUM_PAS = "num_pas"
SWEEP_NUM_USERS = "num_users"
SWEEP_NUM_GROUPS = "num_groups"
SWEEP_REGION_X = "region_x"
SWEEP_ITERATIONS = "iterations"
SWEEP_VARIABLES = (SWEEP_POWER, SWEEP_NUM_PAS, SWEEP_NUM_USERS,
                   SWEEP_NUM_GROUPS, SWEEP_REGION_X, SWEEP_ITERATIONS)

CSV_HEADER = ("scenario,sweep_value,architecture,radiation_model,trial,"
              "objective_bps_hz,group_min_rates,iterations,wall_ms")


@dataclass(frozen=True)
class Scenario:
    """One experiment: a sweep over a single variable, averaged over trials."""

    name: str
    sweep_variable: str
    sweep_values: tuple
    architectures: tuple[str, ...]
    radiation_models: tuple[str, ...]
    user_distribution: str = UNIFORM
    trials: int = 20
    seed: int = 0
    random_init: bool = False
    base: SystemConfig = field(default_factory=SystemConfig)

    def validate(self) -> None:
        if not self.sweep_values:
            raise ConfigError("sweep_values must be non-empty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise ConfigError("sweep_values must be sorted")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        for arch in self.architectures:
            if arch not in ARCHITECTURES:
                raise ConfigError(f"unknown architecture {arch!r}")
        for model in self.radiation_models:
            if model not in RADIATION_MODELS:
                raise ConfigError(f"unknown radiation model {model!r}")
        if self.user_distribution not in (UNIFORM, SEPARATED):
            raise ConfigError(f"unknown user distribution {self.user_distribution!r}")
        self.base.validate()


@dataclass(frozen=True)
class ResultRow:
    """One optimizer run: a single point of a sweep for one trial."""

    scenario: str
    sweep_value: float
    architecture: str
    radiation_model: str
    trial: int
    objective: float
    group_min_rates: tuple[float, ...]
    iterations: int     # -1 flags a failed trial
    wall_ms: float

    @property
    def failed(self) -> bool:
        return self.iterations < 0


def scenario_presets() -> dict[str, Scenario]:
    """The built-in sweeps mirroring the standard evaluation set."""
    base = SystemConfig()
    all_arch = ARCHITECTURES
    return {
        "fig3": Scenario(name="fig3", sweep_variable=SWEEP_ITERATIONS,
                         sweep_values=tuple(range(1, 31)),
                         architectures=PASS_ARCHITECTURES,
                         radiation_models=(PROPORTIONAL,),
                         random_init=True, base=base),
        "fig4": Scenario(name="fig4", sweep_variable=SWEEP_POWER,
                         sweep_values=(-10.0, -5.0, 0.0, 5.0, 10.0),
                         architectures=all_arch,
                         radiation_models=tuple(RADIATION_MODELS), base=base),
        "fig5": Scenario(name="fig5", sweep_variable=SWEEP_NUM_PAS,
                         sweep_values=(2, 4, 6, 8, 10),
                         architectures=all_arch,
                         radiation_models=(PROPORTIONAL,), base=base),
        "fig6": Scenario(name="fig6", sweep_variable=SWEEP_NUM_USERS,
                         sweep_values=(1, 2, 3, 4, 5),
                         architectures=all_arch,
                         radiation_models=(PROPORTIONAL,), base=base),
        "fig7": Scenario(name="fig7", sweep_variable=SWEEP_NUM_GROUPS,
                         sweep_values=(2, 3, 4, 5, 6),
                         architectures=all_arch,
                         radiation_models=(PROPORTIONAL,), base=base),
        "fig8": Scenario(name="fig8", sweep_variable=SWEEP_REGION_X,
                         sweep_values=(5.0, 10.0, 15.0, 20.0),
                         architectures=all_arch,
                         radiation_models=(PROPORTIONAL,), base=base),
        "fig9": Scenario(name="fig9", sweep_variable=SWEEP_REGION_X,
                         sweep_values=(5.0, 10.0, 15.0, 20.0),
                         architectures=all_arch,
                         radiation_models=(PROPORTIONAL,),
                         user_distribution=SEPARATED, base=base),
    }


def apply_sweep(base: SystemConfig, variable: str, value) -> SystemConfig:
    """Specialize the base configuration for one sweep point."""
    if variable == SWEEP_POWER:
        return base.with_updates(total_power=dbm_to_watts(float(value)))
    if variable == SWEEP_NUM_PAS:
        return base.with_updates(num_pas_per_waveguide=int(value))
    if variable == SWEEP_NUM_USERS:
        return base.with_updates(users_per_group=(int(value),) * base.num_groups)
    if variable == SWEEP_NUM_GROUPS:
        g = int(value)
        per_group = base.users_per_group[0]
        return base.with_updates(num_groups=g, num_waveguides=g,
                                 users_per_group=(per_group,) * g)
    if variable == SWEEP_REGION_X:
        return base.with_updates(region_x=float(value))
    if variable == SWEEP_ITERATIONS:
        return base
    raise ConfigError(f"unknown sweep variable {variable!r}")


def sample_users(config: SystemConfig, distribution: str,
                 rng: np.random.Generator) -> UserSet:
    """Draw user positions: i.i.d. uniform, or per-group x-axis slabs."""
    positions = []
    groups = []
    if distribution == UNIFORM:
        k = config.num_users
        x = rng.uniform(0.0, config.region_x, size=k)
        y = rng.uniform(0.0, config.region_y, size=k)
        positions = np.column_stack([x, y, np.zeros(k)])
        groups = np.repeat(np.arange(config.num_groups), config.users_per_group)
    elif distribution == SEPARATED:
        slab = config.region_x / config.num_groups
        rows = []
        for g, kg in enumerate(config.users_per_group):
            x = rng.uniform(g * slab, (g + 1) * slab, size=kg)
            y = rng.uniform(0.0, config.region_y, size=kg)
            rows.append(np.column_stack([x, y, np.zeros(kg)]))
            groups.extend([g] * kg)
        positions = np.vstack(rows)
        groups = np.asarray(groups)
    else:
        raise ConfigError(f"unknown user distribution {distribution!r}")
    return make_users(positions, groups, config.noise_power)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _run_architecture(arch: str, radiation: str, config: SystemConfig,
                      users: UserSet, rng: np.random.Generator,
                      random_init: bool):
    """Run one optimizer; returns (objective, group mins, rounds, traces)."""
    if arch == ARCH_WD:
        state, report = wd_alternating_optimize(config, users, radiation,
                                                rng=rng, random_init=random_init)
        return (report.objective, tuple(report.group_min), state.iterations,
                state.objective_trace, state.group_min_trace)
    if arch == ARCH_WM:
        state, report = wm_alternating_optimize(config, users, radiation,
                                                rng=rng, random_init=random_init)
        return (report.objective, tuple(report.group_min), state.iterations,
                state.objective_trace, state.group_min_trace)
    if arch in (ARCH_CONV, ARCH_MASSIVE):
        array = conventional_array(config) if arch == ARCH_CONV else massive_array(config)
        channels = fixed_array_channels(array, users, config)
        _, report, info = baseline_multicast_solve(
            channels.hhat, users.group_of, users.noise_power,
            config.total_power, config, config.num_groups)
        return (report.objective, tuple(report.group_min), info["iterations"],
                info["objective_trace"], info["group_min_trace"])
    raise ConfigError(f"unknown architecture {arch!r}")


def _run_task(scenario: Scenario, sweep_value, arch: str, radiation: str,
              trial: int, measure_time: bool) -> list[ResultRow]:
    """One independent unit of work; returns its rows (several for traces)."""
    config = apply_sweep(scenario.base, scenario.sweep_variable, sweep_value)
    rng = _trial_rng(scenario.seed, trial)
    start = time.perf_counter()
    rad_label = radiation if arch in PASS_ARCHITECTURES else "none"
    try:
        users = sample_users(config, scenario.user_distribution, rng)
        objective, gmins, rounds, trace, gmin_trace = _run_architecture(
            arch, radiation, config, users, rng, scenario.random_init)
    except Exception:
        wall = (time.perf_counter() - start) * 1e3 if measure_time else 0.0
        return [ResultRow(scenario.name, float(sweep_value), arch, rad_label,
                          trial, float("nan"), (), -1, wall)]
    wall = (time.perf_counter() - start) * 1e3 if measure_time else 0.0

    if scenario.sweep_variable == SWEEP_ITERATIONS:
        rows = []
        for value in scenario.sweep_values:
            idx = min(int(value), len(trace)) - 1
            rows.append(ResultRow(scenario.name, float(value), arch, rad_label,
                                  trial, float(trace[idx]),
                                  tuple(float(v) for v in gmin_trace[idx]),
                                  rounds, wall))
        return rows
    return [ResultRow(scenario.name, float(sweep_value), arch, rad_label,
                      trial, float(objective), tuple(float(v) for v in gmins),
                      rounds, wall)]


def _task_list(scenario: Scenario) -> list[tuple]:
    """Independent task keys in deterministic order."""
    if scenario.sweep_variable == SWEEP_ITERATIONS:
        sweep_points = [None]   # one run per trial covers every iteration count
    else:
        sweep_points = list(scenario.sweep_values)
    tasks = []
    for si, sv in enumerate(sweep_points):
        for ai, arch in enumerate(scenario.architectures):
            radiations = (scenario.radiation_models if arch in PASS_ARCHITECTURES
                          else scenario.radiation_models[:1])
            for ri, radiation in enumerate(radiations):
                for trial in range(scenario.trials):
                    tasks.append((si, ai, ri, trial, sv, arch, radiation))
    return tasks


def run_scenario(scenario: Scenario, workers: int = 1,
                 measure_time: bool = False) -> list[ResultRow]:
    """Execute every (sweep value, architecture, trial) combination.

    Trials are independent and may run in parallel; each derives its own
    random stream from (scenario seed, trial index), and rows come back
    ordered by (sweep value, architecture, radiation model, trial)
    regardless of completion order, so output is reproducible bit for bit
    at any worker count.
    """
    scenario.validate()
    tasks = _task_list(scenario)

    def resolve(sv):
        return scenario.sweep_values[0] if sv is None else sv

    if workers <= 1 or len(tasks) <= 1:
        chunks = [_run_task(scenario, resolve(t[4]), t[5], t[6], t[3], measure_time)
                  for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_task, scenario, resolve(t[4]),
                                   t[5], t[6], t[3], measure_time)
                       for t in tasks]
            chunks = [f.result() for f in futures]

    rows = [row for chunk in chunks for row in chunk]
    arch_order = {a: i for i, a in enumerate(scenario.architectures)}
    rad_order = {r: i for i, r in enumerate(scenario.radiation_models)}
    rad_order["none"] = -1
    sweep_order = {float(v): i for i, v in enumerate(scenario.sweep_values)}
    rows.sort(key=lambda r: (sweep_order.get(r.sweep_value, 0),
                             arch_order.get(r.architecture, 0),
                             rad_order.get(r.radiation_model, 0), r.trial))
    return rows


# --- CSV ---------------------------------------------------------------------

def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def format_row(row: ResultRow) -> str:
    gmins = ";".join(_fmt(v) for v in row.group_min_rates)
    return ",".join([row.scenario, _fmt(row.sweep_value), row.architecture,
                     row.radiation_model, str(row.trial), _fmt(row.objective),
                     gmins, str(row.iterations), _fmt(row.wall_ms)])


def write_csv(rows: list[ResultRow], path: str) -> None:
    """Emit rows under the fixed header; UTF-8, LF endings, 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(CSV_HEADER + "\n")
        for row in rows:
            handle.write(format_row(row) + "\n")


def read_csv(path: str) -> list[ResultRow]:
    """Parse a results file back into rows; the format is the write_csv contract."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"unexpected results header in {path}")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ConfigError(f"malformed results line: {line!r}")
        gmins = tuple(float(v) for v in parts[6].split(";") if v)
        rows.append(ResultRow(scenario=parts[0], sweep_value=float(parts[1]),
                              architecture=parts[2], radiation_model=parts[3],
                              trial=int(parts[4]), objective=float(parts[5]),
                              group_min_rates=gmins, iterations=int(parts[7]),
                              wall_ms=float(parts[8])))
    return rows


# --- scenario files ----------------------------------------------------------

def scenario_from_file(path: str) -> Scenario:
    """Load a scenario (plus base system overrides) from a key-value file."""
    base, block = load_config(path)
    if "name" not in block:
        raise ConfigError("scenario file needs a scenario.name entry")
    presets = scenario_presets()
    defaults = presets.get(block["name"])
    values_text = block.get("sweep_values")
    try:
        scenario = Scenario(
            name=block["name"],
            sweep_variable=block.get(
                "sweep_variable",
                defaults.sweep_variable if defaults else SWEEP_POWER),
            sweep_values=(tuple(float(v) for v in values_text.split(","))
                          if values_text else
                          (defaults.sweep_values if defaults else ())),
            architectures=tuple(block.get(
                "architectures",
                ",".join(defaults.architectures if defaults else ARCHITECTURES)
            ).split(",")),
            radiation_models=tuple(block.get(
                "radiation_models",
                ",".join(defaults.radiation_models if defaults else (PROPORTIONAL,))
            ).split(",")),
            user_distribution=block.get(
                "user_distribution",
                defaults.user_distribution if defaults else UNIFORM),
            trials=int(block.get("trials", defaults.trials if defaults else 20)),
            seed=int(block.get("seed", defaults.seed if defaults else 0)),
            random_init=block.get(
                "random_init",
                str(defaults.random_init if defaults else False)
            ) in ("True", "true", "1", "yes"),
            base=base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario block: {exc}") from exc
    scenario.validate()
    return scenario


def customize(scenario: Scenario, trials=None, seed=None, architectures=None,
              radiation_models=None) -> Scenario:
    """Apply CLI overrides to a preset."""
    updates = {}
    if trials is not None:
        updates["trials"] = trials
    if seed is not None:
        updates["seed"] = seed
    if architectures is not None:
        updates["architectures"] = tuple(architectures)
    if radiation_models is not None:
        updates["radiation_models"] = tuple(radiation_models)
    out = replace(scenario, **updates)
    out.validate()
    return out
