"""Monte Carlo coverage studies over a grid of (C*, kappa, lambda, n) cells."""
from __future__ import annotations

import functools
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .el import Status
from .estimating import (Autocorrelation, ExponentialVariogram, GaussianVariogram, SpectralCDF,
                         VariogramLS)
from .fields import (ChiSqShifted, ExponentialSeparable, FactorizationError, FieldSpec,
                     GaussianIdentity, GaussianIsotropic, simulate_field)
from .inference import EmptyRegion, confidence_region, test
from .sampling import PrototypeRegion, Seed, TruncatedGaussianMixture, Uniform, draw_sites, default_mixture
from .spectral import build_grid, periodogram

__all__ = ["StudyConfig", "CoverageRow", "run_coverage", "replicate", "make_estimating_function",
           "WORKERS_ENV"]

log = logging.getLogger(__name__)

WORKERS_ENV = "SFDEL_WORKERS"
MODELS = ("exp", "gauss", "acf", "cdf")


def make_estimating_function(model: str, lags):
    """Estimating function by short name; ``lags`` doubles as thresholds for ``cdf``."""
    if model == "exp":
        return VariogramLS(ExponentialVariogram(), lags)
    if model == "gauss":
        return VariogramLS(GaussianVariogram(), lags)
    if model == "acf":
        return Autocorrelation(lags)
    if model == "cdf":
        return SpectralCDF(lags)
    raise ValueError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")


def _design(spec):
    if spec == "uniform":
        return Uniform()
    if spec == "mixture":
        return default_mixture()
    if isinstance(spec, dict):
        return TruncatedGaussianMixture(spec["weights"], spec["means"], spec["covariances"])
    raise ValueError(f"unknown design {spec!r}")


def _field(spec: dict) -> FieldSpec:
    kind = spec.get("model", "exp")
    if kind == "exp":
        model = ExponentialSeparable(*[float(t) for t in spec.get("theta", (1.0, 1.0))])
    elif kind == "gauss":
        model = GaussianIsotropic(float(spec.get("range", 1.0)))
    else:
        raise ValueError(f"unknown field model {kind!r}")
    transform = spec.get("transform")
    if transform is None:
        tr = GaussianIdentity()
    elif transform.get("kind") == "chisq":
        tr = ChiSqShifted(float(transform.get("theta1", 7.5)), float(transform.get("shift", 40.23)))
    else:
        raise ValueError(f"unknown transform {transform!r}")
    return FieldSpec(model, float(spec.get("mean", 0.0)), float(spec.get("variance", 1.0)), tr)


def _positive_list(cfg, key, kind=float):
    values = cfg.get(key)
    if not isinstance(values, list):
        values = [values]
    if not values or any(v is None for v in values):
        raise ValueError(f"{key} must be a nonempty list")
    out = [kind(v) for v in values]
    if any(v <= 0 for v in out):
        raise ValueError(f"{key} entries must be positive")
    return out


@dataclass(frozen=True)
class StudyConfig:
    """One coverage study; every list-valued field spans a factor of the cell grid.

    ``mode`` selects how a replicate counts as covering the truth: ``test``
    (the test at ``truth`` does not reject) or ``interval`` (the confidence
    region, searched over ``bounds``, contains ``truth``).
    """

    lags: list
    truth: list
    lam: list = field(default_factory=lambda: [24.0])
    n: list = field(default_factory=lambda: [400])
    cstar: list = field(default_factory=lambda: [2.0])
    kappa: list = field(default_factory=lambda: [0.1])
    eta: float = 1.0
    design: object = "uniform"
    field_spec: dict = field(default_factory=lambda: {"model": "exp", "theta": [1.0, 1.0]})
    model: str = "exp"
    alpha: float = 0.1
    replicates: int = 100
    seed: int = 0
    parallelism: Optional[int] = None
    mode: str = "test"
    bounds: Optional[list] = None

    @classmethod
    def from_dict(cls, cfg: dict) -> "StudyConfig":
        known = {"lags", "truth", "lambda", "n", "cstar", "kappa", "eta", "design", "field",
                 "model", "alpha", "replicates", "seed", "parallelism", "mode", "bounds"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in ("lags", "truth"):
            if key not in cfg:
                raise ValueError(f"config is missing {key!r}")
        out = cls(
            lags=[[float(x) for x in h] for h in cfg["lags"]],
            truth=[float(t) for t in cfg["truth"]],
            lam=_positive_list(cfg, "lambda") if "lambda" in cfg else [24.0],
            n=_positive_list(cfg, "n", int) if "n" in cfg else [400],
            cstar=_positive_list(cfg, "cstar") if "cstar" in cfg else [2.0],
            kappa=_positive_list(cfg, "kappa") if "kappa" in cfg else [0.1],
            eta=float(cfg.get("eta", 1.0)),
            design=cfg.get("design", "uniform"),
            field_spec=dict(cfg.get("field", {"model": "exp", "theta": [1.0, 1.0]})),
            model=str(cfg.get("model", "exp")),
            alpha=float(cfg.get("alpha", 0.1)),
            replicates=int(cfg.get("replicates", 100)),
            seed=int(cfg.get("seed", 0)),
            parallelism=None if cfg.get("parallelism") is None else int(cfg["parallelism"]),
            mode=str(cfg.get("mode", "test")),
            bounds=cfg.get("bounds"),
        )
        out.validate()
        return out

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def validate(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 1/2]")
        if self.mode not in ("test", "interval"):
            raise ValueError("mode must be 'test' or 'interval'")
        if self.parallelism is not None and self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if any(not 0 < k < 1 for k in self.kappa) or any(k >= self.eta for k in self.kappa):
            raise ValueError("kappa must satisfy 0 < kappa < eta")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if any(lam < 1 for lam in self.lam):
            raise ValueError("lambda must be at least 1")
        fn = make_estimating_function(self.model, self.lags)
        if len(self.truth) != fn.p:
            raise ValueError(f"truth has {len(self.truth)} entries, model needs {fn.p}")
        if self.mode == "interval":
            if self.bounds is None:
                raise ValueError("interval mode needs bounds")
            b = np.asarray(self.bounds, dtype=float)
            if b.shape != (fn.p, 2) or np.any(b[:, 0] >= b[:, 1]):
                raise ValueError("bounds must be one increasing [lo, hi] pair per parameter")
        _design(self.design)
        _field(self.field_spec)

    def to_dict(self) -> dict:
        return {
            "lags": self.lags, "truth": self.truth, "lambda": self.lam, "n": self.n,
            "cstar": self.cstar, "kappa": self.kappa, "eta": self.eta, "design": self.design,
            "field": self.field_spec, "model": self.model, "alpha": self.alpha,
            "replicates": self.replicates, "seed": self.seed, "mode": self.mode,
            "bounds": self.bounds,
        }

    def cells(self) -> list:
        """``(cstar, kappa, lambda, n)`` in row-major order."""
        return list(itertools.product(self.cstar, self.kappa, self.lam, self.n))


@dataclass(frozen=True)
class CoverageRow:
    cstar: float
    kappa: float
    lam: float
    n: int
    coverage: float
    replicates_used: int
    covered: int
    infeasible: int
    nonconverged: int
    factorization_failures: int

    @property
    def failures(self) -> int:
        return self.nonconverged + self.factorization_failures

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["failures"] = self.failures
        if math.isnan(self.coverage):
            out["coverage"] = None  # every replicate failed
        return out


# replicate outcomes
COVERED, MISSED, INFEASIBLE, NONCONVERGED, FACTORIZATION = (
    "covered", "missed", "infeasible", "nonconverged", "factorization")


@functools.lru_cache(maxsize=16)
def _grid(lam, kappa, eta, cstar):
    return build_grid(lam, kappa, eta, cstar, 2)


def replicate(config: StudyConfig, cell: tuple, stream: int) -> str:
    """Outcome of one replicate at ``cell = (cstar, kappa, lambda, n)``."""
    cstar, kappa, lam, n = cell
    seed = Seed(config.seed, stream)
    fn = make_estimating_function(config.model, config.lags)
    sample = draw_sites(_design(config.design), PrototypeRegion.unit(2), lam, n, seed)
    try:
        values = simulate_field(_field(config.field_spec), sample, seed)
    except FactorizationError:
        return FACTORIZATION
    pgram = periodogram(sample.with_values(values), _grid(lam, kappa, config.eta, cstar))
    if config.mode == "test":
        res = test(config.truth, fn, pgram, config.alpha)
        if res.status is Status.MAX_ITERATIONS:
            return NONCONVERGED
        if res.status is Status.INFEASIBLE:
            return INFEASIBLE
        return MISSED if res.reject else COVERED
    try:
        region = confidence_region(fn, pgram, config.alpha, config.bounds, init=config.truth)
    except EmptyRegion:
        return MISSED
    return COVERED if region.contains(config.truth) else MISSED


def _task(args):
    config, cell, stream = args
    return replicate(config, cell, stream)


def _workers(config: StudyConfig, workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, int(workers))
    if config.parallelism is not None:
        return config.parallelism
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", WORKERS_ENV, env)
    return 1


def _row(cell, outcomes) -> CoverageRow:
    counts = {k: outcomes.count(k) for k in (COVERED, MISSED, INFEASIBLE, NONCONVERGED, FACTORIZATION)}
    # infeasible truth means R_n = 0, i.e. a rejection; solver and
    # factorization failures carry no verdict and leave the denominator
    used = counts[COVERED] + counts[MISSED] + counts[INFEASIBLE]
    coverage = 100.0 * counts[COVERED] / used if used else math.nan
    cstar, kappa, lam, n = cell
    return CoverageRow(cstar, kappa, lam, n, coverage, used, counts[COVERED],
                       counts[INFEASIBLE], counts[NONCONVERGED], counts[FACTORIZATION])


def run_coverage(config: StudyConfig, workers: Optional[int] = None) -> list:
    """Coverage percentages per cell.

    Replicate ``r`` of cell ``c`` uses stream ``c * replicates + r`` of the
    base seed, so results do not depend on ``workers``.
    """
    config.validate()
    cells = config.cells()
    tasks = [(config, cell, c * config.replicates + r)
             for c, cell in enumerate(cells) for r in range(config.replicates)]
    nworkers = min(_workers(config, workers), len(tasks))
    if nworkers == 1:
        outcomes = [_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * nworkers))
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            outcomes = list(pool.map(_task, tasks, chunksize=chunk))
    rows = []
    for c, cell in enumerate(cells):
        rows.append(_row(cell, outcomes[c * config.replicates:(c + 1) * config.replicates]))
    return rows


def rows_to_json(config: StudyConfig, rows: list) -> str:
    doc = {"config": config.to_dict(), "rows": [r.to_dict() for r in rows]}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


ROW_FIELDS = ("cstar", "kappa", "lambda", "n", "coverage", "replicates_used", "covered",
              "infeasible", "nonconverged", "factorization_failures", "failures")


def rows_to_csv(rows: list) -> str:
    lines = [",".join(ROW_FIELDS)]
    for r in rows:
        d = r.to_dict()
        lines.append(",".join(_fmt(d[k]) for k in ROW_FIELDS))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)
