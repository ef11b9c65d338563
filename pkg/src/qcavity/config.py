"""Scenario configs: strict JSON parsing, defaults, canonical form.

A config names one task, one model, and the physics parameters; the
parser is strict, so a misspelled key is an error with its full path
rather than a silently ignored knob. The canonical form re-emits a
parsed config with every default filled in and every float at 17
significant digits; its SHA-256 is the config identity recorded in run
manifests.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .gates import GATE_MODELS, SCAN_AXES
from .hilbert import HilbertSpec
from .models import SystemParams
from .output import canonical_json

TASKS = ("dump", "simulate", "gate", "scan", "berry")
MODELS = GATE_MODELS + ("geometric",)

GATE_LEVELS = (0, 1, 3)
GEOMETRIC_LEVELS = (0, 1, 2, 3)
DEFAULT_FOCK_CUTOFF = 2


class ConfigError(ValueError):
    """Config rejection with the offending key path."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)


@dataclass(frozen=True)
class LoopConfig:
    """The cap-loop family exposed to configs."""

    theta0: float
    windings: int
    T: float
    ramp_fraction: float
    Omega_bar: float


@dataclass(frozen=True)
class ScenarioConfig:
    task: str
    model: str
    params: SystemParams
    delta_form: bool
    fock_cutoff: int | None
    initial_ions: tuple[int, int]
    initial_photons: int
    t_final: float | None
    t_gate: float | None
    scan_axis: str | None
    scan_values: tuple[float, ...]
    omega_ratio: float | None
    loop: LoopConfig | None
    dt: float | None
    record_every: int | None
    trace_tolerance: float
    output: str
    seed: int

    def hilbert_spec(self) -> HilbertSpec:
        levels = GEOMETRIC_LEVELS if self.model == "geometric" else GATE_LEVELS
        cutoff = self.fock_cutoff if self.model == "full" else None
        return HilbertSpec(ion_levels=levels, fock_cutoff=cutoff)

    def with_overrides(self, out=None, dt=None) -> "ScenarioConfig":
        changes = {}
        if out is not None:
            changes["output"] = out
        if dt is not None:
            if (
                isinstance(dt, bool)
                or not isinstance(dt, (int, float))
                or not math.isfinite(dt)
                or dt <= 0
            ):
                raise ConfigError("control.dt", "must be a finite number > 0")
            changes["dt"] = float(dt)
        if not changes:
            return self
        from dataclasses import replace

        return replace(self, **changes)


# ---------------------------------------------------------------- getters

def _join(path, key):
    return f"{path}.{key}" if path else key


def _obj(raw, path, allowed):
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object")
    for key in raw:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")
    return raw


def _number(block, path, key, default=None):
    if key not in block:
        if default is None:
            raise ConfigError(_join(path, key), "required")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(_join(path, key), "must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(_join(path, key), "must be finite")
    return value


def _optional_number(block, path, key):
    if key not in block or block[key] is None:
        return None
    return _number(block, path, key)


def _positive(block, path, key, default=None):
    value = _number(block, path, key, default)
    if value <= 0:
        raise ConfigError(_join(path, key), "must be > 0")
    return value


def _nonnegative(block, path, key, default=None):
    value = _number(block, path, key, default)
    if value < 0:
        raise ConfigError(_join(path, key), "must be >= 0")
    return value


def _integer(block, path, key, default=None):
    if key not in block:
        if default is None:
            raise ConfigError(_join(path, key), "required")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(_join(path, key), "must be an integer")
    return value


def _choice(block, path, key, choices):
    if key not in block:
        raise ConfigError(_join(path, key), "required")
    value = block[key]
    if value not in choices:
        raise ConfigError(_join(path, key), f"must be one of {', '.join(choices)}")
    return value


# ---------------------------------------------------------------- blocks

def _parse_params(raw) -> tuple[SystemParams, bool]:
    block = _obj(
        raw, "params",
        ("g", "Omega", "kappa", "tau", "Delta", "omega0", "omega3", "omega_c"),
    )
    g = _positive(block, "params", "g", 1.0)
    Omega = _nonnegative(block, "params", "Omega", 0.0)
    kappa = _nonnegative(block, "params", "kappa", 0.0)
    tau = _nonnegative(block, "params", "tau", 0.0)
    has_delta = "Delta" in block
    has_omegas = any(k in block for k in ("omega0", "omega3", "omega_c"))
    if has_delta and has_omegas:
        raise ConfigError(
            "params.Delta", "mutually exclusive with omega0/omega3/omega_c"
        )
    if has_delta:
        delta = _number(block, "params", "Delta")
        if delta == 0.0:
            raise ConfigError("params.Delta", "must be nonzero")
        return (
            SystemParams.detuned(delta, g=g, Omega=Omega, kappa=kappa, tau=tau),
            True,
        )
    params = SystemParams(
        g=g, Omega=Omega, kappa=kappa, tau=tau,
        omega0=_number(block, "params", "omega0", 0.0),
        omega3=_number(block, "params", "omega3", 0.0),
        omega_c=_number(block, "params", "omega_c", 0.0),
    )
    return params, False


def _parse_initial(raw, model, fock_cutoff):
    block = _obj(raw, "initial", ("ions", "photons"))
    label = block.get("ions", "00")
    levels = GATE_LEVELS
    if not (
        isinstance(label, str)
        and len(label) == 2
        and all(c.isdigit() and int(c) in levels for c in label)
    ):
        raise ConfigError(
            "initial.ions",
            f"must be a two-character label over levels {levels}",
        )
    photons = _integer(block, "initial", "photons", 0)
    if photons != 0 and model != "full":
        raise ConfigError("initial.photons", f"model '{model}' has no cavity")
    if photons < 0 or (model == "full" and photons > fock_cutoff):
        raise ConfigError(
            "initial.photons",
            f"must lie in [0, {fock_cutoff}] for fock_cutoff {fock_cutoff}",
        )
    return (int(label[0]), int(label[1])), photons


def _parse_scan(raw, model, delta_form):
    block = _obj(raw, "scan", ("axis", "values", "omega_ratio"))
    axis = _choice(block, "scan", "axis", SCAN_AXES)
    values = block.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("scan.values", "must be a non-empty array")
    vals = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"scan.values[{i}]", "must be a number")
        vals.append(float(v))
    if any(v <= 0 for v in vals):
        raise ConfigError("scan.values", "must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("scan.values", "must be strictly increasing")
    if axis == "fock_cutoff":
        if model != "full":
            raise ConfigError("scan.axis", "fock_cutoff scans require model full")
        if any(v != int(v) for v in vals):
            raise ConfigError("scan.values", "fock_cutoff values must be integers")
    ratio = _optional_number(block, "scan", "omega_ratio")
    if ratio is not None:
        if ratio <= 0:
            raise ConfigError("scan.omega_ratio", "must be > 0")
        if axis == "Omega":
            raise ConfigError("scan.omega_ratio", "conflicts with an Omega scan")
        if axis != "Delta" and not delta_form:
            raise ConfigError(
                "scan.omega_ratio", "requires the Delta form of params"
            )
    return axis, tuple(vals), ratio


def _parse_loop(raw) -> LoopConfig:
    block = _obj(
        raw, "loop", ("theta0", "windings", "T", "ramp_fraction", "Omega_bar")
    )
    theta0 = _positive(block, "loop", "theta0")
    if theta0 >= math.pi:
        raise ConfigError("loop.theta0", "must lie in (0, pi)")
    windings = _integer(block, "loop", "windings", 1)
    if windings == 0:
        raise ConfigError("loop.windings", "must be nonzero")
    ramp = _positive(block, "loop", "ramp_fraction", 0.15)
    if ramp >= 0.5:
        raise ConfigError("loop.ramp_fraction", "must lie in (0, 0.5)")
    return LoopConfig(
        theta0=theta0,
        windings=windings,
        T=_positive(block, "loop", "T"),
        ramp_fraction=ramp,
        Omega_bar=_positive(block, "loop", "Omega_bar", 1.0),
    )


# ---------------------------------------------------------------- parser

_TOP_KEYS = (
    "task", "model", "params", "spec", "initial", "simulate", "gate",
    "scan", "loop", "control", "output", "seed",
)

_TASK_BLOCKS = {
    "dump": (),
    "simulate": ("initial", "simulate"),
    "gate": ("gate",),
    "scan": ("scan",),
    "berry": ("loop",),
}


def parse_config(text: str) -> ScenarioConfig:
    """Validates a JSON scenario and fills every documented default."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("", f"not valid JSON: {err}") from None
    raw = _obj(raw, "", _TOP_KEYS)

    task = _choice(raw, "", "task", TASKS)
    model = _choice(raw, "", "model", MODELS)
    if task == "berry" and model != "geometric":
        raise ConfigError("model", "task berry requires model geometric")
    if model == "geometric" and task != "berry":
        raise ConfigError("model", "model geometric supports only task berry")

    for block_name in ("initial", "simulate", "gate", "scan", "loop"):
        if block_name in raw and block_name not in _TASK_BLOCKS[task]:
            raise ConfigError(block_name, f"block not valid for task {task}")

    params, delta_form = _parse_params(raw.get("params", {}))

    spec_block = _obj(raw.get("spec", {}), "spec", ("fock_cutoff",))
    fock_cutoff = None
    if model == "full":
        fock_cutoff = _integer(spec_block, "spec", "fock_cutoff", DEFAULT_FOCK_CUTOFF)
        if fock_cutoff < 1:
            raise ConfigError("spec.fock_cutoff", "must be >= 1")
    elif "fock_cutoff" in spec_block:
        raise ConfigError("spec.fock_cutoff", f"model '{model}' has no cavity")

    initial_ions, initial_photons = (0, 0), 0
    t_final = None
    if task == "simulate":
        initial_ions, initial_photons = _parse_initial(
            raw.get("initial", {}), model, fock_cutoff
        )
        sim_block = _obj(raw.get("simulate", {}), "simulate", ("t_final",))
        t_final = _positive(sim_block, "simulate", "t_final")

    t_gate = None
    if task == "gate":
        gate_block = _obj(raw.get("gate", {}), "gate", ("t_gate",))
        t_gate = _optional_number(gate_block, "gate", "t_gate")
        if t_gate is not None and t_gate <= 0:
            raise ConfigError("gate.t_gate", "must be > 0")
        if t_gate is None and params.Omega <= 0:
            raise ConfigError(
                "params.Omega", "must be > 0 so the gate time can be derived"
            )

    scan_axis, scan_values, omega_ratio = None, (), None
    if task == "scan":
        if "scan" not in raw:
            raise ConfigError("scan", "required for task scan")
        scan_axis, scan_values, omega_ratio = _parse_scan(
            raw["scan"], model, delta_form
        )
        if omega_ratio is None and scan_axis != "Omega" and params.Omega <= 0:
            raise ConfigError(
                "params.Omega", "must be > 0 so the gate time can be derived"
            )

    loop = None
    if task == "berry":
        if "loop" not in raw:
            raise ConfigError("loop", "required for task berry")
        loop = _parse_loop(raw["loop"])

    ctrl_block = _obj(
        raw.get("control", {}), "control",
        ("dt", "record_every", "trace_tolerance"),
    )
    dt = _optional_number(ctrl_block, "control", "dt")
    if dt is not None and dt <= 0:
        raise ConfigError("control.dt", "must be > 0")
    record_every = None
    if ctrl_block.get("record_every") is not None:
        record_every = _integer(ctrl_block, "control", "record_every")
        if record_every < 1:
            raise ConfigError("control.record_every", "must be >= 1")
    trace_tolerance = _positive(ctrl_block, "control", "trace_tolerance", 1e-6)

    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        raise ConfigError("output", "must be a non-empty string")
    seed = _integer(raw, "", "seed", 0)

    return ScenarioConfig(
        task=task,
        model=model,
        params=params,
        delta_form=delta_form,
        fock_cutoff=fock_cutoff,
        initial_ions=initial_ions,
        initial_photons=initial_photons,
        t_final=t_final,
        t_gate=t_gate,
        scan_axis=scan_axis,
        scan_values=scan_values,
        omega_ratio=omega_ratio,
        loop=loop,
        dt=dt,
        record_every=record_every,
        trace_tolerance=trace_tolerance,
        output=output,
        seed=seed,
    )


# ------------------------------------------------------------- canonical

def canonical_dict(cfg: ScenarioConfig) -> dict:
    """The config with every default made explicit; parses back equal."""
    p = cfg.params
    if cfg.delta_form:
        params = {
            "g": p.g, "Omega": p.Omega, "kappa": p.kappa, "tau": p.tau,
            "Delta": p.Delta,
        }
    else:
        params = {
            "g": p.g, "Omega": p.Omega, "kappa": p.kappa, "tau": p.tau,
            "omega0": p.omega0, "omega3": p.omega3, "omega_c": p.omega_c,
        }
    doc = {
        "task": cfg.task,
        "model": cfg.model,
        "params": params,
        "control": {
            "dt": cfg.dt,
            "record_every": cfg.record_every,
            "trace_tolerance": cfg.trace_tolerance,
        },
        "output": cfg.output,
        "seed": cfg.seed,
    }
    if cfg.model == "full":
        doc["spec"] = {"fock_cutoff": cfg.fock_cutoff}
    if cfg.task == "simulate":
        doc["initial"] = {
            "ions": f"{cfg.initial_ions[0]}{cfg.initial_ions[1]}",
            "photons": cfg.initial_photons,
        }
        doc["simulate"] = {"t_final": cfg.t_final}
    if cfg.task == "gate":
        doc["gate"] = {"t_gate": cfg.t_gate}
    if cfg.task == "scan":
        doc["scan"] = {
            "axis": cfg.scan_axis,
            "values": list(cfg.scan_values),
            "omega_ratio": cfg.omega_ratio,
        }
    if cfg.task == "berry":
        doc["loop"] = {
            "theta0": cfg.loop.theta0,
            "windings": cfg.loop.windings,
            "T": cfg.loop.T,
            "ramp_fraction": cfg.loop.ramp_fraction,
            "Omega_bar": cfg.loop.Omega_bar,
        }
    return doc


def canonical_text(cfg: ScenarioConfig) -> str:
    return canonical_json(canonical_dict(cfg))


def config_sha256(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()


# -------------------------------------------------------------- reference

_REFERENCE = """\
Scenario config reference (strict JSON: unknown keys are rejected)

task                  required; one of dump, simulate, gate, scan, berry
model                 required; one of full, eliminated, dispersive,
                      reduced, geometric (geometric pairs with task berry)

params.g              coupling, > 0 (default 1.0)
params.Omega          drive on the 1-3 transition of ion 1, >= 0 (default 0.0)
params.kappa          cavity decay, >= 0 (default 0.0)
params.tau            excited-state decay, >= 0 (default 0.0)
params.Delta          detuning shortcut: sets omega0 = omega3 = 0 and
                      omega_c = Delta; nonzero; mutually exclusive with the
                      three omegas below
params.omega0         level-0 frequency (default 0.0)
params.omega3         level-3 frequency (default 0.0)
params.omega_c        cavity frequency (default 0.0)

spec.fock_cutoff      photon-number cutoff, >= 1; full model only (default 2)

initial.ions          simulate only: two-character level label over the
                      levels 0/1/3, e.g. "10" (default "00")
initial.photons       simulate only: starting photon number, full model
                      only, within the cutoff (default 0)

simulate.t_final      simulate only: evolution time, > 0; required

gate.t_gate           gate only: protocol time, > 0, or null to derive
                      pi*sqrt(2)/Omega (default null)

scan.axis             scan only: one of Delta, kappa, tau, Omega,
                      fock_cutoff; required
scan.values           scan only: positive, strictly increasing; required
scan.omega_ratio      scan only: re-derive Omega = ratio * g^2/Delta at
                      every point; conflicts with an Omega axis
                      (default null)

loop.theta0           berry only: cap opening angle in (0, pi); required
loop.windings         berry only: signed number of phi turns, nonzero
                      (default 1)
loop.T                berry only: loop wall time, > 0; required
loop.ramp_fraction    berry only: fraction of T per theta ramp, in
                      (0, 0.5) (default 0.15)
loop.Omega_bar        berry only: overall drive magnitude, > 0
                      (default 1.0)

control.dt            integrator step, > 0, or null for the default rule
                      1e-3 / max(norm(H), rates) (default null)
control.record_every  sample stride in steps, >= 1, or null for about 200
                      frames (default null)
control.trace_tolerance  trace/norm drift abort threshold (default 1e-6)

output                output directory (default "out")
seed                  integer, reserved; the pipeline is deterministic
                      (default 0)
"""


def config_reference() -> str:
    """The schema text behind the config-reference CLI command."""
    return _REFERENCE
