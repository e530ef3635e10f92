"""Session engine and file store for live preference elicitation.

A session walks calibrating -> learning -> stopped. Every query it serves is
a deterministic function of the session config and the answers so far, so a
persisted transcript can be replayed through a fresh engine to reproduce the
stored posterior byte for byte. Files are written atomically (temp + rename)
in canonical JSON.
"""

from __future__ import annotations

import os
import threading
import uuid
from datetime import datetime, timezone

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    StoppingConfig,
    select_next_query,
    should_stop,
)
from .calibration import (
    CalibrationSession,
    DEFAULT_QUERY_COUNT,
    DEFAULT_RHO,
    calibrate_user,
    default_curve,
    default_uncertainty_factors,
    generate_calibration_queries,
)
from .domain import Domain
from .exceptions import (
    CorruptSessionFileError,
    DomainError,
    PendingQueryConflictError,
    SchemaVersionError,
    SessionStoppedError,
    StaleQueryError,
    UnknownSessionError,
    ValidationError,
)
from .gmm import (
    DEFAULT_BANDWIDTH_FRACTION,
    DEFAULT_WEIGHTS,
    bandwidth_for_domain,
    build_gmm,
    gmm_density_batch,
)
from .numerics import KernelConfig, median_heuristic_gamma
from .preference import (
    LEVELS,
    PreferenceDataset,
    UncertaintyFactors,
    fit_posterior,
    predict_marginals,
)
from .serialize import canonical_dumps
from .simulation import get_task, thermal_task

SCHEMA_VERSION = 1

PHASES = ("calibrating", "learning", "stopped")

_SEED_STREAM_ACQ = 1
_SEED_STREAM_CALIB = 3


def _derived_seed(seed: int, stream: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, stream, index]).generate_state(1)[0])


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def normalize_config(raw: dict) -> dict:
    """Validate a creation request and resolve every default to a stored value.

    The normalized config fully determines all later engine behavior, which
    is what makes transcript replay deterministic.
    """
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    task_name = raw.get("task")
    if task_name is not None and task_name not in ("thermal", "tabletop", "driving"):
        raise ValidationError(f"unknown task {task_name!r}")
    task_gamma = None
    if task_name is not None:
        task = get_task(task_name)
        domain = task.domain
        task_gamma = task.default_gamma
        bounds = domain.bounds.tolist()
    else:
        bounds = raw.get("bounds")
        if bounds is None:
            raise ValidationError("config needs either 'task' or 'bounds'")
        try:
            domain = Domain(np.asarray(bounds, dtype=float))
        except (DomainError, ValueError) as exc:
            raise ValidationError(f"invalid bounds: {exc}") from exc
        bounds = domain.bounds.tolist()

    seed = int(raw.get("seed", 0))
    rho = float(raw.get("rho", DEFAULT_RHO))
    factors = default_uncertainty_factors(default_curve(rho))

    kernel_raw = raw.get("kernel", {})
    gamma = kernel_raw.get("gamma")
    if gamma is None and task_gamma is not None:
        gamma = task_gamma
    if gamma is None:
        per_dim = 101 if domain.dim <= 2 else 9
        gamma = median_heuristic_gamma(domain.grid(per_dim))
    jitter = float(kernel_raw.get("jitter", 1e-6))

    acq_raw = raw.get("acquisition", {})
    u_acq = float(acq_raw.get("u_acq", factors.u2))
    gmm_raw = raw.get("gmm", {})
    weights = {
        int(k): float(v)
        for k, v in gmm_raw.get("weights", DEFAULT_WEIGHTS).items()
    }
    stop_raw = raw.get("stopping", {})
    var_grid_default = 101 if domain.dim <= 2 else 9

    cfg = {
        "task": task_name,
        "bounds": bounds,
        "calibrate": bool(raw.get("calibrate", False)),
        "calibration_count": int(raw.get("calibration_count", DEFAULT_QUERY_COUNT)),
        "seed": seed,
        "rho": rho,
        "kernel": {"gamma": float(gamma), "jitter": jitter},
        "gmm": {
            "weights": weights,
            "bandwidth_fraction": float(
                gmm_raw.get("bandwidth_fraction", DEFAULT_BANDWIDTH_FRACTION)
            ),
        },
        "acquisition": {
            "u_acq": u_acq,
            "pool_size": int(acq_raw.get("pool_size", 200)),
            "candidate_source": acq_raw.get("candidate_source", "uniform"),
        },
        "stopping": {
            "base_queries": int(stop_raw.get("base_queries", 20)),
            "increment": int(stop_raw.get("increment", 5)),
            "drop_threshold": float(stop_raw.get("drop_threshold", 0.6)),
        },
        "var_grid_per_dim": int(raw.get("var_grid_per_dim", var_grid_default)),
        "posterior_cell_cap": int(raw.get("posterior_cell_cap", 20000)),
    }
    if cfg["calibration_count"] < 1:
        raise ValidationError("calibration_count must be >= 1")
    try:
        StoppingConfig(**cfg["stopping"])
        AcquisitionConfig(u_acq=u_acq, pool_size=cfg["acquisition"]["pool_size"])
        KernelConfig(gamma=cfg["kernel"]["gamma"], jitter=jitter)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    return cfg


class SessionEngine:
    """Live state for one session; mutations go through next_query/submit."""

    def __init__(self, config: dict, session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        self.created_at = _now()
        self.domain = Domain(np.asarray(config["bounds"], dtype=float))
        self.factors = default_uncertainty_factors(default_curve(config["rho"]))
        self.factors_provenance = "default"
        self.phase = "calibrating" if config["calibrate"] else "learning"
        self.transcript: list[dict] = []
        self.variance_trace: list[float] = []
        self.pending: dict | None = None
        self.calib_answers: list[dict] = []
        self._calib_task = thermal_task()
        self._calib_range = self._calib_task.value_range()
        if config["calibrate"]:
            self.calib_queries = generate_calibration_queries(
                self._calib_task,
                config["calibration_count"],
                seed=_derived_seed(config["seed"], _SEED_STREAM_CALIB, 0),
            )
        else:
            self.calib_queries = np.zeros((0, 2, self._calib_task.domain.dim))
        self.dataset = PreferenceDataset(np.zeros((0, self.domain.dim)))
        self._state = None  # lazy posterior fit

    # -- engine internals --------------------------------------------------

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(**self.config["kernel"])

    @property
    def stopping(self) -> StoppingConfig:
        return StoppingConfig(**self.config["stopping"])

    def _gmm(self):
        sigma = bandwidth_for_domain(
            self.domain, self.config["gmm"]["bandwidth_fraction"]
        )
        return build_gmm(self.dataset, sigma, self.config["gmm"]["weights"])

    def _posterior(self):
        if self._state is None:
            self._state = fit_posterior(self.dataset, self.kernel, self.factors)
        return self._state

    def _learning_answer_count(self) -> int:
        return sum(1 for t in self.transcript if t["phase"] == "learning")

    def _mean_scaled_variance(self) -> float:
        grid = self.domain.grid(self.config["var_grid_per_dim"])
        _, var = predict_marginals(self._posterior(), grid)
        g = gmm_density_batch(self._gmm(), grid)
        return float(np.mean(np.maximum(var / (g * g), 0.0)))

    def _generate_query(self) -> dict:
        n_answered = len(self.transcript)
        query_id = f"q-{n_answered + 1:06d}"
        if self.phase == "calibrating":
            idx = len(self.calib_answers)
            x1, x2 = self.calib_queries[idx]
            calib_values = [
                float(self._calib_task(x1)),
                float(self._calib_task(x2)),
            ]
        else:
            acq = AcquisitionConfig(
                u_acq=self.config["acquisition"]["u_acq"],
                pool_size=self.config["acquisition"]["pool_size"],
                rng_seed=_derived_seed(
                    self.config["seed"], _SEED_STREAM_ACQ, self._learning_answer_count()
                ),
                candidate_source=self.config["acquisition"]["candidate_source"],
            )
            x1, x2 = select_next_query(self._posterior(), self._gmm(), acq, self.domain)
            calib_values = None
        return {
            "query_id": query_id,
            "phase": self.phase,
            "x1": [float(v) for v in np.atleast_1d(x1)],
            "x2": [float(v) for v in np.atleast_1d(x2)],
            "calib_values": calib_values,
            "presented_at": _now(),
        }

    # -- operations ---------------------------------------------------------

    def next_query(self) -> dict:
        if self.phase == "stopped":
            raise SessionStoppedError(f"session {self.id} has stopped")
        if self.pending is None:
            self.pending = self._generate_query()
        return self.pending

    def submit_answer(self, query_id: str, choice: int, level: int) -> dict:
        if self.phase == "stopped":
            raise SessionStoppedError(f"session {self.id} has stopped")
        if choice not in (1, 2):
            raise ValidationError(f"choice must be 1 or 2, got {choice}")
        if level not in LEVELS:
            raise ValidationError(f"level must be in {list(LEVELS)}, got {level}")
        if self.pending is None:
            self.pending = self._generate_query()
        if query_id != self.pending["query_id"]:
            raise StaleQueryError(
                f"query {query_id!r} is not the pending query "
                f"{self.pending['query_id']!r}"
            )
        record = dict(self.pending)
        record.pop("presented_at", None)
        record["choice"] = int(choice)
        record["level"] = int(level)
        self.transcript.append(record)
        self.pending = None

        if record["phase"] == "calibrating":
            x1 = np.asarray(record["x1"])
            x2 = np.asarray(record["x2"])
            gap = abs(self._calib_task(x1) - self._calib_task(x2))
            self.calib_answers.append(
                {
                    "x1": record["x1"],
                    "x2": record["x2"],
                    "level": int(level),
                    "gap": float(gap),
                }
            )
            if len(self.calib_answers) >= self.config["calibration_count"]:
                self._finish_calibration()
        else:
            self.dataset.add_comparison(
                np.asarray(record["x1"]), np.asarray(record["x2"]), choice, level
            )
            self._state = None
            self.variance_trace.append(self._mean_scaled_variance())
            if should_stop(self.variance_trace, self.stopping):
                self.phase = "stopped"
        return self.status()

    def _finish_calibration(self):
        lo, hi = self._calib_range
        session = CalibrationSession(lo, hi)
        for a in self.calib_answers:
            session.record(a["x1"], a["x2"], a["level"], a["gap"])
        curve = default_curve(self.config["rho"])
        import warnings as _warnings

        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            self.factors = calibrate_user(session, curve)
        self.factors_provenance = "calibrated"
        self.phase = "learning"

    def posterior_grid(self, points_per_dim: int) -> dict:
        if self.phase == "calibrating":
            raise PendingQueryConflictError(
                "posterior unavailable while calibrating"
            )
        if points_per_dim < 1:
            raise ValidationError("grid must have at least one point per dimension")
        cells = points_per_dim ** self.domain.dim
        if cells > self.config["posterior_cell_cap"]:
            raise ValidationError(
                f"grid of {cells} cells exceeds the cap "
                f"{self.config['posterior_cell_cap']}"
            )
        grid = self.domain.grid(points_per_dim)
        mu, var = predict_marginals(self._posterior(), grid)
        g = gmm_density_batch(self._gmm(), grid)
        scaled = np.maximum(var / (g * g), 0.0)
        return {
            "schema_version": SCHEMA_VERSION,
            "phase": self.phase,
            "grid": [[float(v) for v in row] for row in grid],
            "mean": [float(v) for v in mu],
            "variance": [float(v) for v in scaled],
        }

    def snapshot(self) -> dict:
        state = self._posterior()
        return {
            "points": [[float(v) for v in row] for row in state.dataset.points],
            "f_lap": [float(v) for v in state.f_lap],
            "iterations": int(state.iterations),
        }

    def status(self) -> dict:
        total = (
            self.config["calibration_count"] if self.config["calibrate"] else None
        )
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "phase": self.phase,
            "answered": len(self.transcript),
            "calibration_answered": len(self.calib_answers),
            "calibration_total": total,
            "learning_answered": self._learning_answer_count(),
            "uncertainty_factors": {
                **self.factors.as_dict(),
                "provenance": self.factors_provenance,
            },
        }

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "created_at": self.created_at,
            "phase": self.phase,
            "config": self.config,
            "uncertainty_factors": {
                **self.factors.as_dict(),
                "provenance": self.factors_provenance,
            },
            "calibration": {
                "count": self.config["calibration_count"],
                "queries": [
                    [[float(v) for v in q[0]], [float(v) for v in q[1]]]
                    for q in self.calib_queries
                ],
                "answers": self.calib_answers,
            },
            "transcript": self.transcript,
            "variance_trace": [float(v) for v in self.variance_trace],
            "pending": self.pending,
            "posterior": self.snapshot(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEngine":
        if not isinstance(data, dict) or "schema_version" not in data:
            raise CorruptSessionFileError("missing schema_version")
        if data["schema_version"] != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"unsupported schema version {data['schema_version']}"
            )
        try:
            engine = cls(data["config"], session_id=data["id"])
            engine.created_at = data["created_at"]
            engine.phase = data["phase"]
            engine.transcript = list(data["transcript"])
            engine.variance_trace = [float(v) for v in data["variance_trace"]]
            engine.pending = data.get("pending")
            engine.calib_answers = list(data["calibration"]["answers"])
            uf = data["uncertainty_factors"]
            engine.factors = UncertaintyFactors(uf["u1"], uf["u2"], uf["u3"], uf["u4"])
            engine.factors_provenance = uf["provenance"]
            for t in engine.transcript:
                if t["phase"] == "learning":
                    engine.dataset.add_comparison(
                        np.asarray(t["x1"]), np.asarray(t["x2"]),
                        t["choice"], t["level"],
                    )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptSessionFileError(f"malformed session data: {exc}") from exc
        return engine


def replay_transcript(data: dict) -> SessionEngine:
    """Re-run a stored session's answers through a fresh engine."""
    engine = SessionEngine(data["config"], session_id=data["id"])
    for entry in data["transcript"]:
        query = engine.next_query()
        engine.submit_answer(query["query_id"], entry["choice"], entry["level"])
    return engine


def save_session(engine: SessionEngine, path: str) -> None:
    """Atomic canonical-JSON write: temp file in the same directory, then rename."""
    payload = canonical_dumps(engine.to_dict()) + "\n"
    tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_session(path: str) -> SessionEngine:
    if not os.path.exists(path):
        raise UnknownSessionError(f"no session file at {path}")
    import json

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptSessionFileError(f"not valid JSON: {exc}") from exc
    return SessionEngine.from_dict(data)


class SessionStore:
    """One JSON file per session under `data_dir`; one writer per session."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.json")

    def create(self, raw_config: dict) -> SessionEngine:
        config = normalize_config(raw_config)
        engine = SessionEngine(config)
        with self._lock_for(engine.id):
            save_session(engine, self.path(engine.id))
        return engine

    def load(self, session_id: str) -> SessionEngine:
        return load_session(self.path(session_id))

    def next_query(self, session_id: str) -> dict:
        with self._lock_for(session_id):
            engine = self.load(session_id)
            had_pending = engine.pending is not None
            query = engine.next_query()
            if not had_pending:
                save_session(engine, self.path(session_id))
            return query

    def submit_answer(self, session_id: str, query_id: str, choice: int, level: int):
        with self._lock_for(session_id):
            engine = self.load(session_id)
            status = engine.submit_answer(query_id, choice, level)
            save_session(engine, self.path(session_id))
            return status
