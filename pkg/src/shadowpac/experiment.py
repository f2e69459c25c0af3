"""Config-driven PAC experiments with reproducible CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .concepts import extreme_points
from .ensembles import make_ensemble
from .errors import ConfigError
from .learners import run_trial, theorem1_sample_size
from .loss import expected_loss
from .shadow_norm import class_constant_v
from .tasks import TASK_NAMES, Task, build_task

OUTPUT_ROOT_ENV = "SHADOWPAC_OUTPUT_ROOT"
MAX_QUBITS = 6
LEARNERS = ("qsrm", "naive")
ENSEMBLE_KINDS = ("pauli", "clifford", "clifford_sampled")
RESULT_COLUMNS = (
    "config_hash",
    "learner",
    "n",
    "trial",
    "chosen_id",
    "exact_loss",
    "opt",
    "excess",
    "success",
    "wall_time_ms",
)
MASKED_COLUMNS = ("wall_time_ms",)


@dataclass
class ExperimentConfig:
    task: dict
    ensemble: str = "pauli"
    learner: str = "both"
    n_grid: list = field(default_factory=lambda: [50])
    epsilon: float = 0.1
    delta: float = 0.1
    trials: int = 10
    seed: int = 0
    output_dir: str | None = None
    sample_size_constant: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.task, dict) or self.task.get("name") not in TASK_NAMES:
            name = self.task.get("name") if isinstance(self.task, dict) else self.task
            raise ConfigError(f"unknown task {name!r}; expected one of {', '.join(TASK_NAMES)}")
        qubits = self.task.get("qubits", 1)
        if not isinstance(qubits, int) or not 1 <= qubits <= MAX_QUBITS:
            raise ConfigError(f"qubits must be an integer in [1, {MAX_QUBITS}]")
        kind = self.ensemble.split(":")[0] if isinstance(self.ensemble, str) else None
        if kind not in ENSEMBLE_KINDS:
            raise ConfigError(f"ensemble must be one of {', '.join(ENSEMBLE_KINDS)}, not {self.ensemble!r}")
        if self.learner not in (*LEARNERS, "both"):
            raise ConfigError(f"learner must be qsrm, naive or both, not {self.learner!r}")
        if not self.n_grid or any(not isinstance(n, int) or isinstance(n, bool) or n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a nonempty list of positive integers")
        for name in ("epsilon", "delta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.sample_size_constant <= 0:
            raise ConfigError("sample_size_constant must be positive")

    @property
    def learners(self) -> tuple:
        return LEARNERS if self.learner == "both" else (self.learner,)

    def ensemble_spec(self) -> str:
        kind = self.ensemble
        return kind if ":" in kind else f"{kind}:{self.task.get('qubits', 1)}"

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """Digest of everything that affects results (output location excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "task" not in d:
            raise ConfigError("config needs a task section")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read a JSON config. OSError propagates (IO failure); bad content is ConfigError."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def resolve_output_dir(config: ExperimentConfig, out=None) -> Path:
    if out is not None:
        return Path(out)
    if config.output_dir:
        return Path(config.output_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / config.hash()


@dataclass
class Prepared:
    task: Task
    cstar: object
    exact: dict
    opt: float
    v_cstar: float
    n_guarantee: int


def prepare(config: ExperimentConfig) -> Prepared:
    task = build_task(config.task)
    ens = make_ensemble(config.ensemble_spec())
    cstar = extreme_points(task.concept_class)
    exact = {cid: expected_loss(m, task.loss, task.source) for cid, m in task.concept_class.items()}
    opt = min(exact[cid] for cid in cstar.ids)
    v = class_constant_v(ens, cstar, task.loss)
    n1 = theorem1_sample_size(v, len(cstar), config.epsilon, config.delta, config.sample_size_constant)
    return Prepared(task, cstar, exact, opt, v, n1)


def run_experiment(config: ExperimentConfig, out=None, threads: int = 1) -> Path:
    """Write results.csv, summary.json and meta.json; return the output directory.

    Rows are ordered by (learner, n, trial) whatever the thread count, so
    reruns agree byte for byte outside the wall-time column.
    """
    prep = prepare(config)
    ens = make_ensemble(config.ensemble_spec())
    task = prep.task
    chash = config.hash()
    jobs = [(learner, n, t) for learner in config.learners for n in config.n_grid for t in range(config.trials)]

    def one(job):
        learner, n, t = job
        start = time.perf_counter()
        out_ = run_trial(learner, task.concept_class, prep.cstar, task.source, task.loss, ens, n, config.seed, t)
        ms = (time.perf_counter() - start) * 1e3
        loss = prep.exact[out_.chosen_id]
        excess = loss - prep.opt
        return (chash, learner, n, t, out_.chosen_id, loss, prep.opt, excess, int(excess <= config.epsilon), ms)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]

    success = {}
    for row in rows:
        success.setdefault(row[1], {}).setdefault(str(row[2]), []).append(row[8])
    summary = {
        "config_hash": chash,
        "success_fraction": {lr: {n: sum(v) / len(v) for n, v in by_n.items()} for lr, by_n in success.items()},
        "v_cstar": prep.v_cstar,
        "class_size": len(task.concept_class),
        "cstar_size": len(prep.cstar),
        "cstar_ids": list(prep.cstar.ids),
        "opt": prep.opt,
        "theorem1_sample_size": prep.n_guarantee,
        "epsilon": config.epsilon,
        "delta": config.delta,
    }
    meta = {"config": config.to_dict(), "version": __version__, "seed": config.seed, "config_hash": chash}

    outdir = resolve_output_dir(config, out)
    outdir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    writer.writerows([fmt(x) for x in row] for row in rows)
    (outdir / "results.csv").write_text(buf.getvalue())
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return outdir


def masked_rows(path, masked=MASKED_COLUMNS) -> list[list[str]]:
    """CSV rows with the masked columns blanked."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    drop = {i for i, name in enumerate(rows[0]) if name in masked}
    return [[("" if i in drop else v) for i, v in enumerate(r)] for r in rows]


def results_identical(a, b, masked=MASKED_COLUMNS) -> bool:
    """Compare two results.csv files ignoring the wall-time column."""
    return masked_rows(a, masked) == masked_rows(b, masked)


def success_by_n(outdir) -> dict:
    return json.loads((Path(outdir) / "summary.json").read_text())["success_fraction"]


