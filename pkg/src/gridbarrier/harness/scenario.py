"""Scenario files: flat ``key = value`` lines under ``[section]`` headers.

The format is deliberately boring -- sections, one assignment per line,
``#`` comments -- so fixtures diff cleanly. Every key is typed and every
semantic invariant is checked with the offending file line attached.

Setting the ``GRIDBARRIER_SEED`` environment variable overrides both the
network seed and the perturbation seed (the latter gets ``+1``), which is
how the fuzzing entry point randomizes otherwise frozen scenarios.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ParseError, ValidationError

SEED_ENV_VAR = "GRIDBARRIER_SEED"

_PERTURBATION_KINDS = ("none", "parametric", "topological", "both")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one experiment end to end."""

    # network source: exactly one of (network_file) or (n)
    network_file: str | None = None
    n: int | None = None
    net_seed: int = 0
    overload_factor: float = 1.5
    # model error
    perturb_kind: str = "none"
    magnitude: float = 0.0
    perturb_seed: int = 0
    # controller
    beta: float = 200.0
    kappa: float = 0.6
    c_p: float = 3.0
    c_q: float = 1.0
    x_limit_pct: float = 5.0
    max_steps: int = 3000
    eta: float | None = None
    convergence_tol: float = 1e-8
    # actuator limits
    reactive_fraction: float = 0.4
    upper_zero: bool = False
    # baselines
    with_primal_dual: bool = True
    with_lcqp: bool = True
    pd_eta_primal: float = 0.01
    pd_eta_dual: float = 0.01
    pd_regularization: float = 1e-4
    pd_max_steps: int = 20_000
    # display
    nominal_kv: float = 12.0
    # where relative paths in the file resolve from
    source_dir: str = field(default=".", compare=False)

    @property
    def x_limit_pu(self) -> float:
        return self.x_limit_pct / 100.0

    def resolve_network_file(self) -> Path | None:
        if self.network_file is None:
            return None
        path = Path(self.network_file)
        return path if path.is_absolute() else Path(self.source_dir) / path


# (section, key) -> (scenario attribute, converter)
def _to_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCHEMA: dict[tuple[str, str], tuple[str, object]] = {
    ("network", "file"): ("network_file", str),
    ("network", "n"): ("n", int),
    ("network", "seed"): ("net_seed", int),
    ("network", "overload_factor"): ("overload_factor", float),
    ("perturbation", "kind"): ("perturb_kind", str),
    ("perturbation", "magnitude"): ("magnitude", float),
    ("perturbation", "seed"): ("perturb_seed", int),
    ("controller", "beta"): ("beta", float),
    ("controller", "kappa"): ("kappa", float),
    ("controller", "c_p"): ("c_p", float),
    ("controller", "c_q"): ("c_q", float),
    ("controller", "x_limit_pct"): ("x_limit_pct", float),
    ("controller", "max_steps"): ("max_steps", int),
    ("controller", "eta"): ("eta", float),
    ("controller", "convergence_tol"): ("convergence_tol", float),
    ("limits", "reactive_fraction"): ("reactive_fraction", float),
    ("limits", "upper_zero"): ("upper_zero", _to_bool),
    ("baselines", "primal_dual"): ("with_primal_dual", _to_bool),
    ("baselines", "lcqp"): ("with_lcqp", _to_bool),
    ("baselines", "pd_eta_primal"): ("pd_eta_primal", float),
    ("baselines", "pd_eta_dual"): ("pd_eta_dual", float),
    ("baselines", "pd_regularization"): ("pd_regularization", float),
    ("baselines", "pd_max_steps"): ("pd_max_steps", int),
    ("output", "nominal_kv"): ("nominal_kv", float),
}

_SECTIONS = {section for section, _ in _SCHEMA}


def parse_scenario(text: str, source: str = "<scenario>", source_dir: str = ".") -> Scenario:
    """Parse scenario text; raise :class:`ParseError`/:class:`ValidationError`
    with the offending line number on any problem."""
    values: dict[str, object] = {}
    key_lines: dict[str, int] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", source, lineno)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", source, lineno)
        if section is None:
            raise ParseError("assignment before any [section] header", source, lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if (section, key) not in _SCHEMA:
            raise ParseError(f"unknown key {key!r} in section [{section}]", source, lineno)
        attr, conv = _SCHEMA[(section, key)]
        if attr in values:
            raise ParseError(f"duplicate key {key!r}", source, lineno)
        if value == "":
            continue  # blank value keeps the default (used for optional eta)
        try:
            values[attr] = conv(value)  # type: ignore[operator]
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", source, lineno) from exc
        key_lines[attr] = lineno

    scenario = Scenario(**values, source_dir=source_dir)
    _validate(scenario, source, key_lines)
    return scenario


def _validate(s: Scenario, source: str, lines: dict[str, int]) -> None:
    def fail(attr: str, message: str) -> None:
        raise ValidationError(message, source, lines.get(attr))

    if (s.network_file is None) == (s.n is None):
        fail("network_file", "exactly one network source required: 'file' or 'n'")
    if s.n is not None and s.n < 1:
        fail("n", f"n must be at least 1, got {s.n}")
    if s.net_seed < 0 or s.perturb_seed < 0:
        fail("net_seed", "seeds must be nonnegative")
    if s.overload_factor < 0.0:
        fail("overload_factor", f"overload_factor must be nonnegative, got {s.overload_factor}")
    if s.perturb_kind not in _PERTURBATION_KINDS:
        fail("perturb_kind", f"kind must be one of {_PERTURBATION_KINDS}, got {s.perturb_kind!r}")
    if s.magnitude < 0.0:
        fail("magnitude", f"magnitude must be nonnegative, got {s.magnitude}")
    if not (0.0 < s.x_limit_pct <= 20.0):
        fail("x_limit_pct", f"x_limit_pct must lie in (0, 20], got {s.x_limit_pct}")
    if not (0.0 < s.kappa <= 1.0):
        fail("kappa", f"kappa must lie in (0, 1], got {s.kappa}")
    if s.beta <= 0.0:
        fail("beta", f"beta must be positive, got {s.beta}")
    if s.c_p <= 0.0 or s.c_q <= 0.0:
        fail("c_p", "action costs c_p and c_q must be positive")
    if s.max_steps < 1:
        fail("max_steps", f"max_steps must be positive, got {s.max_steps}")
    if s.eta is not None and s.eta <= 0.0:
        fail("eta", f"eta must be positive when given, got {s.eta}")
    if s.convergence_tol <= 0.0:
        fail("convergence_tol", "convergence_tol must be positive")
    if s.reactive_fraction < 0.0:
        fail("reactive_fraction", "reactive_fraction must be nonnegative")
    if s.pd_eta_primal <= 0.0 or s.pd_eta_dual <= 0.0:
        fail("pd_eta_primal", "primal-dual step sizes must be positive")
    if s.pd_regularization < 0.0:
        fail("pd_regularization", "pd_regularization must be nonnegative")
    if s.pd_max_steps < 1:
        fail("pd_max_steps", "pd_max_steps must be positive")
    if s.nominal_kv <= 0.0:
        fail("nominal_kv", f"nominal_kv must be positive, got {s.nominal_kv}")


def apply_seed_override(scenario: Scenario, source: str = "<env>") -> Scenario:
    """Replace both seeds from ``GRIDBARRIER_SEED`` when it is set.

    The override belongs to whichever process actually executes the
    experiment, so the service applies it too -- a scenario shipped over
    the API is fuzzed by the server's environment, not the client's.
    """
    override = os.environ.get(SEED_ENV_VAR)
    if override is None:
        return scenario
    try:
        base = int(override)
    except ValueError as exc:
        raise ValidationError(
            f"{SEED_ENV_VAR} must be an integer, got {override!r}", source
        ) from exc
    return replace(scenario, net_seed=base, perturb_seed=base + 1)


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file, then apply the seed override from the
    environment if present."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read scenario: {exc}", str(path)) from exc
    scenario = parse_scenario(text, source=str(path), source_dir=str(path.parent))
    return apply_seed_override(scenario, source=str(path))
