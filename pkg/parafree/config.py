"""Configuration management for parafree.

A run is described by one YAML file with the sections `operator`, `grid`,
`problem`, `analysis` and `output`. Validation is total: unknown keys, missing
required keys, wrong types and out-of-range values raise ConfigError naming the
offending dotted field before any computation starts.
"""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .core.elliptic_ops import Operator, OperatorKind
from .core.fb_solver import Mode, SolveParams
from .core.fixtures import FIXTURE_NAMES
from .core.grid_field import SpaceTimeGrid

THREADS_ENV = "PARAFREE_THREADS"

ESTIMATORS = (
    "thickness",
    "nondegeneracy",
    "quadratic_growth",
    "time_decay",
    "monotonicity",
    "blowup",
    "graph_fit",
    "density_decay",
    "decompose",
    "pointwise_bmo",
    "lp_bmo",
)


class ConfigError(ValueError):
    """Invalid run configuration; the message names the dotted field."""


def worker_count() -> int:
    """Worker cap from PARAFREE_THREADS, defaulting to the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from e
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _check_keys(section: str, data: Any, allowed: set[str], required: tuple[str, ...] = ()) -> dict:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown key")
    for key in required:
        if key not in data:
            raise ConfigError(f"Missing required field: {section}.{key}")
    return data


def _number(name: str, value: Any, minimum: Optional[float] = None, strict: bool = False,
            maximum: Optional[float] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{name}: must be finite, got {value!r}")
    if minimum is not None and (value <= minimum if strict else value < minimum):
        raise ConfigError(f"{name}: must be {'>' if strict else '>='} {minimum}, got {value!r}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{name}: must be <= {maximum}, got {value!r}")
    return value


def _integer(name: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name}: must be >= {minimum}, got {value}")
    return value


def _optional(name: str, value: Any, minimum: float = 0.0) -> Optional[float]:
    return None if value is None else _number(name, value, minimum, strict=True)


def _vector(name: str, value: Any, length: Optional[int] = None) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name}: expected a list of numbers, got {value!r}")
    out = [_number(f"{name}[{i}]", v) for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise ConfigError(f"{name}: expected {length} entries, got {len(out)}")
    return out


@dataclass
class OperatorConfig:
    """Operator block.

    Example YAML:
        operator:
          kind: bellman
          n: 2
          lambda0: 1.0
          lambda1: 2.0
          matrices:
            - [1.0, 0.0, 0.0, 1.0]
            - [2.0, 0.0, 0.0, 1.0]
    """
    kind: str
    n: int
    lambda0: float
    lambda1: float
    matrices: list[list[float]] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Any) -> 'OperatorConfig':
        data = _check_keys("operator", data, {"kind", "n", "lambda0", "lambda1", "matrices"},
                           ("kind", "n", "lambda0", "lambda1"))
        kinds = [k.value for k in OperatorKind]
        if data["kind"] not in kinds:
            raise ConfigError(f"operator.kind: expected one of {', '.join(kinds)}, got {data['kind']!r}")
        n = _integer("operator.n", data["n"], 1)
        if n > 2:
            raise ConfigError(f"operator.n: only 1 or 2 spatial dimensions are supported, got {n}")
        lambda0 = _number("operator.lambda0", data["lambda0"], 0.0, strict=True)
        lambda1 = _number("operator.lambda1", data["lambda1"], 0.0, strict=True)
        if lambda0 > lambda1:
            raise ConfigError(f"operator.lambda0: must not exceed operator.lambda1 ({lambda0} > {lambda1})")

        raw = data.get("matrices") or []
        if not isinstance(raw, list):
            raise ConfigError("operator.matrices: expected a list of row-major matrices")
        matrices = []
        for i, m in enumerate(raw):
            flat = [v for row in m for v in (row if isinstance(row, list) else [row])] if isinstance(m, list) else m
            matrices.append(_vector(f"operator.matrices[{i}]", flat, n * n))
        kind = data["kind"]
        if kind == "linear" and len(matrices) != 1:
            raise ConfigError("operator.matrices: a linear operator needs exactly one matrix")
        if kind in ("bellman", "bellman_min") and not matrices:
            raise ConfigError("operator.matrices: a Bellman operator needs at least one matrix")
        if kind in ("pucci_plus", "pucci_minus") and matrices:
            raise ConfigError("operator.matrices: Pucci operators take no matrices")
        for i, m in enumerate(matrices):
            a = np.asarray(m).reshape(n, n)
            if not np.array_equal(a, a.T):
                raise ConfigError(f"operator.matrices[{i}]: matrix is not symmetric")
            eig = np.linalg.eigvalsh(a)
            if eig.min() < lambda0 - 1e-12 or eig.max() > lambda1 + 1e-12:
                raise ConfigError(f"operator.matrices[{i}]: eigenvalues {eig.tolist()} "
                                  f"outside [lambda0, lambda1] = [{lambda0}, {lambda1}]")
        return cls(kind=kind, n=n, lambda0=lambda0, lambda1=lambda1, matrices=matrices)

    def build(self) -> Operator:
        arrays = [np.asarray(m).reshape(self.n, self.n) for m in self.matrices]
        kind = OperatorKind(self.kind)
        if kind == OperatorKind.LINEAR:
            return Operator.linear(arrays[0], self.lambda0, self.lambda1)
        if kind == OperatorKind.BELLMAN:
            return Operator.bellman(arrays, self.lambda0, self.lambda1, "max")
        if kind == OperatorKind.BELLMAN_MIN:
            return Operator.bellman(arrays, self.lambda0, self.lambda1, "min")
        if kind == OperatorKind.PUCCI_PLUS:
            return Operator.pucci_plus(self.lambda0, self.lambda1, self.n)
        return Operator.pucci_minus(self.lambda0, self.lambda1, self.n)


@dataclass
class GridConfig:
    """Grid block: box [-L, L]ⁿ × [t_start, t_end] with nx nodes per axis and dt ≤ κh²."""
    nx: int
    L: float = 1.0
    t_start: float = -1.0
    t_end: float = 0.0
    kappa: float = 0.25

    @classmethod
    def from_dict(cls, data: Any) -> 'GridConfig':
        data = _check_keys("grid", data, {"nx", "L", "t_start", "t_end", "kappa"}, ("nx",))
        nx = _integer("grid.nx", data["nx"], 5)
        L = _number("grid.L", data.get("L", 1.0), 0.0, strict=True)
        t_start = _number("grid.t_start", data.get("t_start", -1.0))
        t_end = _number("grid.t_end", data.get("t_end", 0.0))
        if t_end <= t_start:
            raise ConfigError(f"grid.t_end: must exceed grid.t_start ({t_end} <= {t_start})")
        kappa = _number("grid.kappa", data.get("kappa", 0.25), 0.0, strict=True)
        return cls(nx=nx, L=L, t_start=t_start, t_end=t_end, kappa=kappa)

    def build(self, n: int) -> SpaceTimeGrid:
        return SpaceTimeGrid.build(n, self.L, self.nx, self.t_start, self.t_end, self.kappa)


@dataclass
class ProblemConfig:
    """Problem block: mode, data source and solver parameters."""
    mode: str = "A"
    fixture: Optional[str] = "halfspace"
    initial: Optional[str] = None
    field_file: Optional[str] = None
    tilt_deg: float = 0.0
    sigma: float = 0.0
    K: float = 10.0
    theta_u: Optional[float] = None
    theta_g: Optional[float] = None
    outer_cap: int = 50
    policy_cap: int = 200
    linear_tol: float = 1e-10
    damping: float = 1.0
    net_size: int = 2

    @classmethod
    def from_dict(cls, data: Any, base_dir: Path) -> 'ProblemConfig':
        allowed = {f for f in cls.__dataclass_fields__}
        data = _check_keys("problem", data, allowed)
        mode = str(data.get("mode", "A"))
        if mode not in ("A", "B"):
            raise ConfigError(f"problem.mode: expected 'A' or 'B', got {mode!r}")
        fixture = data.get("fixture", None if data.get("field_file") else "halfspace")
        for name in ("fixture", "initial"):
            value = fixture if name == "fixture" else data.get("initial")
            if value is not None and value not in FIXTURE_NAMES:
                raise ConfigError(f"problem.{name}: expected one of {', '.join(FIXTURE_NAMES)}, got {value!r}")
        field_file = data.get("field_file")
        if field_file is not None:
            path = Path(field_file)
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"problem.field_file: file not found: {path}")
            field_file = str(path)
        if fixture is None and field_file is None:
            raise ConfigError("problem.fixture: either a fixture or problem.field_file is required")

        return cls(
            mode=mode,
            fixture=fixture,
            initial=data.get("initial"),
            field_file=field_file,
            tilt_deg=_number("problem.tilt_deg", data.get("tilt_deg", 0.0)),
            sigma=_number("problem.sigma", data.get("sigma", 0.0)),
            K=_number("problem.K", data.get("K", 10.0), 0.0, strict=True),
            theta_u=_optional("problem.theta_u", data.get("theta_u")),
            theta_g=_optional("problem.theta_g", data.get("theta_g")),
            outer_cap=_integer("problem.outer_cap", data.get("outer_cap", 50), 1),
            policy_cap=_integer("problem.policy_cap", data.get("policy_cap", 200), 1),
            linear_tol=_number("problem.linear_tol", data.get("linear_tol", 1e-10), 0.0, strict=True),
            damping=_number("problem.damping", data.get("damping", 1.0), 0.0, strict=True, maximum=1.0),
            net_size=_integer("problem.net_size", data.get("net_size", 2), 2),
        )

    def solve_params(self) -> SolveParams:
        return SolveParams(
            policy_cap=self.policy_cap,
            linear_tol=self.linear_tol,
            outer_cap=self.outer_cap,
            theta_u=self.theta_u,
            theta_g=self.theta_g,
            K=self.K,
            damping=self.damping,
            net_size=self.net_size,
        )

    @property
    def solve_mode(self) -> Mode:
        return Mode(self.mode)

    def fixture_options(self) -> dict:
        if self.fixture == "halfspace":
            return {"tilt_deg": self.tilt_deg}
        if self.fixture == "ramp":
            return {"sigma": self.sigma}
        return {}


@dataclass
class AnalysisConfig:
    """Analysis block: which estimators, at which points and scales."""
    estimators: list[str] = field(default_factory=lambda: list(ESTIMATORS))
    points: list[list[float]] = field(default_factory=list)
    scales: list[float] = field(default_factory=lambda: [0.25, 0.125, 0.0625])
    rho: float = 0.5
    p: float = 2.0
    C0: float = 1.0
    e: Optional[list[float]] = None
    epsilon: float = 0.1
    k_max: Optional[int] = None
    statement_names: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Any, n: int) -> 'AnalysisConfig':
        allowed = {f for f in cls.__dataclass_fields__}
        data = _check_keys("analysis", data, allowed)
        estimators = data.get("estimators", list(ESTIMATORS))
        if not isinstance(estimators, list):
            raise ConfigError("analysis.estimators: expected a list")
        for name in estimators:
            if name not in ESTIMATORS:
                raise ConfigError(f"analysis.estimators: unknown estimator {name!r}")
        points_raw = data.get("points", [])
        if not isinstance(points_raw, list):
            raise ConfigError("analysis.points: expected a list of [x..., t] points")
        points = [_vector(f"analysis.points[{i}]", p, n + 1) for i, p in enumerate(points_raw)]
        scales = _vector("analysis.scales", data.get("scales", [0.25, 0.125, 0.0625]))
        for i, s in enumerate(scales):
            _number(f"analysis.scales[{i}]", s, 0.0, strict=True)
        e = data.get("e")
        if e is not None:
            e = _vector("analysis.e", e, n + 1)
            if abs(float(np.linalg.norm(e)) - 1.0) > 1e-12:
                raise ConfigError(f"analysis.e: must be a unit vector, got {e}")
        k_max = data.get("k_max")
        names = data.get("statement_names", {})
        if not isinstance(names, dict):
            raise ConfigError("analysis.statement_names: expected a mapping of estimator to label")
        for key, label in names.items():
            if key not in ESTIMATORS + ("ladder",):
                raise ConfigError(f"analysis.statement_names: unknown estimator {key!r}")
            if not isinstance(label, str) or not label.strip():
                raise ConfigError(f"analysis.statement_names.{key}: expected a non-empty string")
        return cls(
            estimators=list(estimators),
            points=points,
            scales=scales,
            rho=_number("analysis.rho", data.get("rho", 0.5), 0.0, strict=True, maximum=0.999),
            p=_number("analysis.p", data.get("p", 2.0), 1.0),
            C0=_number("analysis.C0", data.get("C0", 1.0), 0.0),
            e=e,
            epsilon=_number("analysis.epsilon", data.get("epsilon", 0.1), 0.0),
            k_max=None if k_max is None else _integer("analysis.k_max", k_max, 0),
            statement_names={str(k): str(v) for k, v in names.items()},
        )

    def direction(self, n: int) -> list[float]:
        return self.e if self.e is not None else [1.0] + [0.0] * n


@dataclass
class RunConfig:
    """Configuration for one parafree run.

    Example YAML:
        operator:
          kind: linear
          n: 1
          lambda0: 1.0
          lambda1: 1.0
          matrices:
            - [1.0]
        grid:
          nx: 65
          t_start: -1.0
          t_end: 0.0
        problem:
          mode: A
          fixture: halfspace
        analysis:
          points:
            - [0.0, -0.25]
          scales: [0.25, 0.125]
        output: out/halfspace
    """
    operator: OperatorConfig
    grid: GridConfig
    problem: ProblemConfig
    analysis: AnalysisConfig
    output: str = "parafree-out"

    @classmethod
    def from_dict(cls, data: Any, base_dir: Path = Path(".")) -> 'RunConfig':
        data = _check_keys("config", data, {"operator", "grid", "problem", "analysis", "output"},
                           ("operator", "grid"))
        operator = OperatorConfig.from_dict(data["operator"])
        grid = GridConfig.from_dict(data["grid"])
        problem = ProblemConfig.from_dict(data.get("problem"), base_dir)
        analysis = AnalysisConfig.from_dict(data.get("analysis"), operator.n)
        output = data.get("output", "parafree-out")
        if not isinstance(output, str) or not output:
            raise ConfigError(f"output: expected a directory path, got {output!r}")
        out_path = Path(output)
        if not out_path.is_absolute():
            out_path = base_dir / out_path
        return cls(operator=operator, grid=grid, problem=problem, analysis=analysis, output=str(out_path))

    @classmethod
    def from_yaml(cls, path: str) -> 'RunConfig':
        """Load a run configuration from a YAML file.

        Args:
            path: Path to YAML config file

        Returns:
            RunConfig instance

        Raises:
            FileNotFoundError: If config file doesn't exist
            ConfigError: If any field is unknown, missing or out of range
        """
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")

        with open(config_path, 'r') as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"config: invalid YAML: {e}") from e

        return cls.from_dict(data, config_path.parent)

    def to_dict(self) -> dict:
        return {
            "operator": asdict(self.operator),
            "grid": asdict(self.grid),
            "problem": asdict(self.problem),
            "analysis": asdict(self.analysis),
            "output": self.output,
        }

    def to_yaml(self, path: str) -> None:
        """Save the configuration to a YAML file.

        Args:
            path: Path to save YAML config file
        """
        with open(path, 'w') as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)

    def build_operator(self) -> Operator:
        return self.operator.build()

    def build_grid(self) -> SpaceTimeGrid:
        return self.grid.build(self.operator.n)
