"""Python front end for the sipkit C++ core."""

import json
import os

from ._sipkit import (
    SpecError,
    __version__,
    config_hash as _config_hash,
    feasibility,
    feasibility_grid_search,
    feasibility_quadratic,
    format_double,
    kappa,
    kmt_schedule,
    linear_thresholds,
    rosenthal_constants,
    run_experiment as _run_experiment,
    tau,
)

__all__ = [
    "SpecError",
    "RunResult",
    "__version__",
    "config_hash",
    "feasibility",
    "feasibility_grid_search",
    "feasibility_quadratic",
    "format_double",
    "kappa",
    "kmt_schedule",
    "linear_thresholds",
    "load_config",
    "rosenthal_constants",
    "run",
    "tau",
]


class RunResult:
    """Outcome of one experiment: exit code, parsed summary and in-memory artifacts."""

    def __init__(self, raw):
        self.exit_code = raw["exit_code"]
        self.summary = json.loads(raw["summary"]) if raw["summary"] else {}
        self.failing_record = raw["failing_record"]
        self.artifacts = dict(raw["artifacts"])
        self.error = raw["error"]

    @property
    def ok(self):
        return self.exit_code == 0

    def __repr__(self):
        return f"RunResult(exit_code={self.exit_code}, kind={self.summary.get('kind')!r})"


def load_config(source):
    """Accepts a dict, a JSON string or a path to a JSON file."""
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(source)


def config_hash(config):
    return _config_hash(json.dumps(load_config(config)))


def run(config, seed=None, workers=None, out=None):
    """Runs an experiment config; artifacts are written only when `out` is given."""
    raw = _run_experiment(json.dumps(load_config(config)), seed, workers,
                          None if out is None else os.fspath(out))
    return RunResult(raw)
