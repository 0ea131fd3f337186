"""Labelled experiments over the detector's parameter grid."""
from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..autoscaler import ClusterConfig
from ..engine import ServiceModelConfig, run_simulation
from ..workload import Jitter, WorkloadKind, WorkloadSchedule
from .features import ATTACK, FEATURE_NAMES, REGULAR, extract_features

TIMERS = {
    "constant": Jitter("constant", delay=0.3),
    "random": Jitter("random", lo=0.8, hi=1.2),
}


@dataclass(frozen=True)
class DatasetGrid:
    regular_ramp_up: tuple = (30, 60, 120)
    regular_k: tuple = (1, 3, 5, 7)
    regular_timers: tuple = ("constant", "random")
    # continuous load is observed for as long as three default attack cycles
    regular_duration: int = 3 * 1800
    attack_ramp_up: tuple = (30, 60, 120)
    attack_on_off_min: tuple = ((7, 14), (10, 20), (12, 24))
    attack_k: tuple = (15, 20, 30)
    attack_timers: tuple = ("constant",)
    attack_cycles: int = 3
    base_rate_r: float = 30.0


@dataclass(frozen=True)
class Cell:
    label: int
    schedule: WorkloadSchedule
    duration: int
    cycle: int
    name: str


def grid_cells(grid: DatasetGrid = DatasetGrid()) -> list:
    cells = []
    for ramp, k, timer in itertools.product(grid.regular_ramp_up, grid.regular_k,
                                            grid.regular_timers):
        sched = WorkloadSchedule(WorkloadKind.FLAT_DDOS, grid.base_rate_r, k,
                                 ramp_up=ramp, jitter=TIMERS[timer])
        cells.append(Cell(REGULAR, sched, grid.regular_duration,
                          grid.regular_duration // grid.attack_cycles,
                          f"regular_ramp{ramp}_k{k}_{timer}"))
    for ramp, (on, off), k, timer in itertools.product(grid.attack_ramp_up,
                                                       grid.attack_on_off_min,
                                                       grid.attack_k, grid.attack_timers):
        sched = WorkloadSchedule(WorkloadKind.YOYO, grid.base_rate_r, k, on * 60, off * 60,
                                 grid.attack_cycles, ramp_up=ramp, jitter=TIMERS[timer])
        cells.append(Cell(ATTACK, sched, grid.attack_cycles * sched.period, sched.period,
                          f"attack_ramp{ramp}_{on}-{off}_k{k}_{timer}"))
    return cells


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], [self.names[i] for i in idx])

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*FEATURE_NAMES, "label"])
        for row, label in zip(self.X, self.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != (*FEATURE_NAMES, "label"):
                raise ValueError(f"{path}: expected columns {', '.join(FEATURE_NAMES)}, label")
            rows = [r for r in reader if r]
        if not rows:
            raise ValueError(f"{path}: no samples")
        X = np.array([[float(v) for v in r[:-1]] for r in rows])
        y = np.array([int(r[-1]) for r in rows])
        return cls(X, y, [f"row{i}" for i in range(len(y))])


def run_seed(seed: int, cell_index: int, run: int) -> int:
    return int(np.random.SeedSequence([seed, cell_index, run]).generate_state(1)[0])


def _simulate(job):
    cell, run_seed_, config, service = job
    trace = run_simulation(config, service, cell.schedule, cell.duration, seed=run_seed_)
    return extract_features(trace, cycle=cell.cycle, label=cell.label).values


def build_dataset(grid: DatasetGrid = DatasetGrid(), runs_per_cell: int = 1, seed: int = 0,
                  config: ClusterConfig = ClusterConfig(),
                  service: ServiceModelConfig = ServiceModelConfig(),
                  jobs: int = 1) -> Dataset:
    """One simulated experiment per grid cell per run, Regular cells first.

    Parallel runs (``jobs > 1``) are merged in grid order, so the result does
    not depend on ``jobs``.
    """
    if runs_per_cell < 1:
        raise ValueError("runs_per_cell must be >= 1")
    cells = grid_cells(grid)
    work = [(cell, run_seed(seed, i, r), config, service)
            for i, cell in enumerate(cells) for r in range(runs_per_cell)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_simulate, work, chunksize=4))
    else:
        rows = [_simulate(job) for job in work]
    names = [f"{cell.name}#{r}" for cell in cells for r in range(runs_per_cell)]
    y = np.array([cell.label for cell in cells for _ in range(runs_per_cell)])
    return Dataset(np.vstack(rows), y, names)


def train_test_split(data: Dataset, test_fraction: float = 0.3, seed: int = 0):
    """Seeded stratified split; each class contributes round(n_c * test_fraction) to test."""
    rng = np.random.default_rng(seed)
    test = []
    for label in np.unique(data.y):
        members = np.flatnonzero(data.y == label)
        rng.shuffle(members)
        test.extend(members[:int(round(len(members) * test_fraction))])
    test = np.sort(np.asarray(test, dtype=np.int64))
    train = np.setdiff1d(np.arange(len(data)), test)
    return data.subset(train), data.subset(test)
