"""Named, configuration-driven simulation runs with CSV/JSON export.

A scenario is described by flat INI sections::

    [scenario]    id, description, base (optional registry id to start from)
    [channel]     kind = dephasing | amplitude-damping | random-unitary | identity,
                  plus the parameters of that kind
    [state]       initial = bell | psi0_AB | custom, theta, matrix, local, fidelity
    [time_grid]   t_max, n_points
    [analysis]    quantifiers, bases ("polar_deg/azimuth_deg, ..."), measures
    [output]      path, format = csv | json

``--set section.key=value`` overrides map one-to-one onto these keys.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .channels import (
    SPEED_OF_LIGHT,
    AmplitudeDampingFamily,
    DephasingFamily,
    IdentityFamily,
    RandomUnitaryFamily,
    SpectralProfile,
)
from .errors import ConfigError
from .qmat import BlochAngle, I2, pure
from .witness import (
    QUANTIFIERS,
    NonMarkovReport,
    QuantifierSeries,
    blp,
    default_blp_pairs,
    monotonicity_witness,
    n_qi,
    rhp,
    trajectory,
)

MARKOV_SIGMA_HZ = 6.50e12
CENTER_NM = 702.2
PHOTONIC_CENTERS_NM = (700.6, 703.3)
PHOTONIC_WEIGHTS = (0.65, 0.35)
CAVITY_REFLECTIVITY = 0.85

CSV_COLUMNS = ("scenario_id", "quantifier", "basis_theta", "basis_phi", "t", "value")
MEASURES = ("N_QI", "BLP", "RHP", "monotonicity")
BASIS_FREE = ("concurrence", "trace_distance_pair")


def cavity_component_sigma_hz(centers_nm=PHOTONIC_CENTERS_NM, reflectivity=CAVITY_REFLECTIVITY) -> float:
    """Gaussian std of one transmission peak: FWHM = FSR / finesse, FSR = peak spacing."""
    fsr = SPEED_OF_LIGHT * abs(1 / (centers_nm[0] * 1e-9) - 1 / (centers_nm[1] * 1e-9))
    finesse = math.pi * math.sqrt(reflectivity) / (1 - reflectivity)
    return fsr / finesse / (2 * math.sqrt(2 * math.log(2)))


def photonic_profile() -> SpectralProfile:
    return SpectralProfile.from_wavelengths(PHOTONIC_WEIGHTS, PHOTONIC_CENTERS_NM, cavity_component_sigma_hz())


# ---------------------------------------------------------------------------
# config


@dataclass
class ChannelConfig:
    kind: str = "dephasing"
    profile: str = "gaussian"  # gaussian | photonic | custom
    sigma_hz: float = MARKOV_SIGMA_HZ
    center_nm: float = CENTER_NM
    components: str = ""  # custom: "weight:center_nm:sigma_hz; ..."
    alpha_deg: float = 0.0
    path_scale: float = 1e-15
    compensate_carrier: bool = True
    gamma0: float = 0.2
    lam: float = 1.0
    c: float = 1.0
    lambda_nm: float = 0.0


@dataclass
class StateConfig:
    initial: str = "bell"  # bell | psi0_AB | custom
    theta: float = math.pi / 8
    matrix: str = ""  # custom: rows separated by ';', entries by ','
    local: str = "psi0_A"  # zero | psi0_A | plus | none
    fidelity: float = 1.0


@dataclass
class GridConfig:
    t_max: float = 1.0
    n_points: int = 200


@dataclass
class AnalysisConfig:
    quantifiers: tuple = ("qi_rec",)
    bases: tuple = (BlochAngle(0.0),)
    measures: tuple = ()


@dataclass
class OutputConfig:
    path: str = "out"
    format: str = "csv"


@dataclass
class ScenarioConfig:
    scenario_id: str
    description: str = ""
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    state: StateConfig = field(default_factory=StateConfig)
    time_grid: GridConfig = field(default_factory=GridConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


_SECTIONS = {"channel": ChannelConfig, "state": StateConfig, "time_grid": GridConfig,
             "analysis": AnalysisConfig, "output": OutputConfig}


def _num(x: float) -> str:
    # shortest round-tripping repr, without a trailing ".0"
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _format_basis(b: BlochAngle) -> str:
    return f"{_num(math.degrees(b.theta))}/{_num(math.degrees(b.phi))}"


def _parse_basis(text: str) -> BlochAngle:
    try:
        polar, _, azimuth = text.strip().partition("/")
        return BlochAngle(math.radians(float(polar)), math.radians(float(azimuth or 0)))
    except ValueError as exc:
        raise ConfigError(f"bad basis {text!r}: expected 'polar_deg/azimuth_deg'") from exc


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, tuple):
        return ", ".join(_format_basis(x) if isinstance(x, BlochAngle) else str(x) for x in v)
    return str(v)


def _parse_value(section: str, key: str, text: str, default):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(text)
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from exc
    if isinstance(default, tuple):
        items = [x.strip() for x in text.split(",") if x.strip()]
        if key == "bases":
            return tuple(_parse_basis(x) for x in items)
        return tuple(items)
    return text


def config_to_sections(cfg: ScenarioConfig) -> dict[str, dict[str, str]]:
    out = {"scenario": {"id": cfg.scenario_id, "description": cfg.description}}
    for name in _SECTIONS:
        sub = getattr(cfg, name)
        out[name] = {f.name: _format_value(getattr(sub, f.name)) for f in dataclasses.fields(sub)}
    return out


def config_from_sections(sections: dict[str, dict[str, str]], base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from string sections, on top of ``base`` if given."""
    cfg = dataclasses.replace(base) if base else None
    head = sections.get("scenario", {})
    sid = head.get("id") or (cfg.scenario_id if cfg else None)
    if not sid:
        raise ConfigError("[scenario] id is required")
    if cfg is None:
        cfg = ScenarioConfig(sid)
    cfg.scenario_id = sid
    cfg.description = head.get("description", cfg.description)
    for name, kind in _SECTIONS.items():
        sub = dataclasses.replace(getattr(cfg, name))
        known = {f.name for f in dataclasses.fields(kind)}
        for key, text in sections.get(name, {}).items():
            if key not in known:
                raise ConfigError(f"unknown key [{name}] {key}")
            setattr(sub, key, _parse_value(name, key, text, getattr(sub, key)))
        setattr(cfg, name, sub)
    for name in sections:
        if name not in _SECTIONS and name != "scenario":
            raise ConfigError(f"unknown section [{name}]")
    validate(cfg)
    return cfg


def apply_overrides(cfg: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply ``section.key=value`` strings."""
    if not overrides:
        return cfg
    sections: dict[str, dict[str, str]] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if section == "scenario" and name == "id":
            sections.setdefault("scenario", {})["id"] = value
            continue
        sections.setdefault(section, {})[name] = value
    return config_from_sections(sections, cfg)


def load_config(path: str) -> ScenarioConfig:
    # inline comments need leading whitespace, so "a; b" lists stay intact
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    sections = {s: dict(parser[s]) for s in parser.sections()}
    base_id = sections.get("scenario", {}).pop("base", None)
    base = get_scenario(base_id) if base_id else None
    return config_from_sections(sections, base)


def dump_config(cfg: ScenarioConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for name, items in config_to_sections(cfg).items():
        parser[name] = items
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def validate(cfg: ScenarioConfig) -> None:
    ch = cfg.channel
    if ch.kind not in ("dephasing", "amplitude-damping", "random-unitary", "identity"):
        raise ConfigError(f"unknown channel kind {ch.kind!r}")
    if ch.kind == "dephasing" and ch.profile not in ("gaussian", "photonic", "custom"):
        raise ConfigError(f"unknown spectral profile {ch.profile!r}")
    if cfg.state.initial not in ("bell", "psi0_AB", "custom"):
        raise ConfigError(f"unknown initial state {cfg.state.initial!r}")
    if cfg.state.local not in ("zero", "psi0_A", "plus", "none"):
        raise ConfigError(f"unknown local state {cfg.state.local!r}")
    if not 0.25 <= cfg.state.fidelity <= 1.0:
        raise ConfigError("fidelity must lie in [0.25, 1]")
    if cfg.time_grid.n_points < 2 or not cfg.time_grid.t_max > 0:
        raise ConfigError("time grid needs n_points >= 2 and t_max > 0")
    for q in cfg.analysis.quantifiers:
        if q not in QUANTIFIERS:
            raise ConfigError(f"unknown quantifier {q!r}")
    for m in cfg.analysis.measures:
        if m not in MEASURES:
            raise ConfigError(f"unknown measure {m!r}")
    if not cfg.analysis.bases:
        raise ConfigError("at least one basis is required")
    if cfg.output.format not in ("csv", "json"):
        raise ConfigError(f"unknown output format {cfg.output.format!r}")


# ---------------------------------------------------------------------------
# building blocks


def builtin_state(which: str, theta: float = math.pi / 8) -> np.ndarray:
    """Named initial states: ``bell`` (cos 2theta |00> + sin 2theta |11>), ``psi0_A``, ``psi0_AB``, ``zero``, ``plus``."""
    if which == "bell":
        return pure([math.cos(2 * theta), 0, 0, math.sin(2 * theta)])
    if which == "psi0_A":
        return pure([math.sqrt(3) / 2, 0.5])
    if which == "psi0_AB":
        return pure(np.array([math.sqrt(6), math.sqrt(2), math.sqrt(2), math.sqrt(6)]) / 4)
    if which == "zero":
        return pure([1, 0])
    if which == "plus":
        return pure([1, 1])
    raise ConfigError(f"unknown built-in state {which!r}")


def _with_white_noise(rho: np.ndarray, fidelity: float) -> np.ndarray:
    # fidelity of p|psi><psi| + (1-p) I/d with |psi> is p + (1-p)/d
    d = rho.shape[0]
    p = (d * fidelity - 1) / (d - 1)
    return p * rho + (1 - p) * np.eye(d) / d


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[complex(x.strip().replace(" ", "")) for x in row.split(",")] for row in text.split(";") if row.strip()]
        m = np.array(rows, dtype=complex)
    except ValueError as exc:
        raise ConfigError(f"cannot parse custom matrix: {exc}") from exc
    if m.shape != (4, 4):
        raise ConfigError("custom initial state must be a 4x4 matrix")
    from .qmat import density_matrix

    try:
        return density_matrix(m)
    except ValueError as exc:
        raise ConfigError(f"custom initial state: {exc}") from exc


def initial_states(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray | None]:
    st = cfg.state
    if st.initial == "custom":
        rho = _parse_matrix(st.matrix)
    else:
        rho = builtin_state(st.initial, st.theta)
    rho = _with_white_noise(rho, st.fidelity)
    local = None if st.local == "none" else _with_white_noise(builtin_state(st.local), st.fidelity)
    return rho, local


def build_family(ch: ChannelConfig):
    if ch.kind == "identity":
        return IdentityFamily()
    if ch.kind == "amplitude-damping":
        return AmplitudeDampingFamily(ch.gamma0, ch.lam)
    if ch.kind == "random-unitary":
        return RandomUnitaryFamily(ch.c, ch.lambda_nm)
    if ch.profile == "gaussian":
        profile = SpectralProfile.gaussian(ch.sigma_hz, ch.center_nm)
    elif ch.profile == "photonic":
        profile = photonic_profile()
    else:
        try:
            parts = [[float(x) for x in comp.split(":")] for comp in ch.components.split(";") if comp.strip()]
            profile = SpectralProfile.from_wavelengths([p[0] for p in parts], [p[1] for p in parts],
                                                       [p[2] for p in parts])
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad custom spectral components {ch.components!r}") from exc
    axis = BlochAngle.xz(math.radians(ch.alpha_deg))
    return DephasingFamily(profile, axis, ch.path_scale, ch.compensate_carrier)


def time_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.time_grid.t_max, cfg.time_grid.n_points)


# ---------------------------------------------------------------------------
# registry


def _xz_bases(polar_degrees):
    return tuple(BlochAngle(math.radians(d)) for d in polar_degrees)


_PLATE_BASES = _xz_bases([0, 22.5, 45, 67.5, 90])


def _registry() -> dict[str, ScenarioConfig]:
    all_measures = ("N_QI", "BLP", "RHP", "monotonicity")
    return {
        "markov-dephasing-main": ScenarioConfig(
            "markov-dephasing-main",
            "Gaussian spectrum (sigma 6.50e12 Hz), dephasing about the 20 degree plate axis, Bell input",
            ChannelConfig("dephasing", "gaussian", alpha_deg=20.0),
            StateConfig("bell", local="zero"),
            GridConfig(70.0),
            AnalysisConfig(("concurrence", "qi_rec", "extended_rec", "rec_local_A", "sic"), _PLATE_BASES,
                           all_measures),
        ),
        "photonic-nonmarkov": ScenarioConfig(
            "photonic-nonmarkov",
            "Two-Gaussian cavity spectrum (0.65/0.35 at 700.6/703.3 nm), sigma_z dephasing, Bell input",
            ChannelConfig("dephasing", "photonic", alpha_deg=0.0),
            StateConfig("bell", local="none"),
            GridConfig(1300.0),
            AnalysisConfig(("concurrence", "qi_rec", "sic", "rec_local_B"), _PLATE_BASES[:4], all_measures),
        ),
        "markov-ad-fig-a1": ScenarioConfig(
            "markov-ad-fig-a1",
            "Amplitude damping, gamma0 = 0.2 lambda (Markovian)",
            ChannelConfig("amplitude-damping", gamma0=0.2, lam=1.0),
            StateConfig("psi0_AB", local="psi0_A"),
            GridConfig(20.0),
            AnalysisConfig(("qi_rec", "extended_rec", "rec_local_A", "sic"), _PLATE_BASES, all_measures),
        ),
        "nonmarkov-ad-fig-a12": ScenarioConfig(
            "nonmarkov-ad-fig-a12",
            "Amplitude damping, gamma0 = 25 lambda (non-Markovian)",
            ChannelConfig("amplitude-damping", gamma0=25.0, lam=1.0),
            StateConfig("psi0_AB", local="none"),
            GridConfig(6.0),
            AnalysisConfig(("qi_rec", "sic"), _PLATE_BASES, all_measures),
        ),
        "markov-ru-fig-a2": ScenarioConfig(
            "markov-ru-fig-a2",
            "Multiple decoherence channels, Markovian rates",
            ChannelConfig("random-unitary", c=1.0, lambda_nm=0.0),
            StateConfig("psi0_AB", local="psi0_A"),
            GridConfig(3.0),
            AnalysisConfig(("qi_rec", "extended_rec", "rec_local_A", "sic"), _PLATE_BASES, all_measures),
        ),
        "nonmarkov-ru-fig-a22": ScenarioConfig(
            "nonmarkov-ru-fig-a22",
            "Multiple decoherence channels, lambda = 3.8 (non-Markovian)",
            ChannelConfig("random-unitary", c=1.0, lambda_nm=3.8),
            StateConfig("psi0_AB", local="none"),
            GridConfig(4 * math.pi),
            AnalysisConfig(("qi_rec", "sic"), _PLATE_BASES, all_measures),
        ),
    }


REGISTRY_IDS = tuple(_registry())


def get_scenario(scenario_id: str) -> ScenarioConfig:
    reg = _registry()
    if scenario_id not in reg:
        raise ConfigError(f"unknown scenario {scenario_id!r}; known: {', '.join(reg)}")
    return reg[scenario_id]


# ---------------------------------------------------------------------------
# running


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    series: list
    reports: list
    provenance: dict


def _series_task(args):
    family, rho, tgrid, name, basis, partner = args
    return trajectory(family, rho, tgrid, name, basis, partner=partner)


def series_tasks(cfg: ScenarioConfig):
    family = build_family(cfg.channel)
    rho, local = initial_states(cfg)
    tgrid = time_grid(cfg)
    plus, minus = default_blp_pairs(0)[1]
    tasks = []
    for name in cfg.analysis.quantifiers:
        if name == "concurrence":
            tasks.append((family, rho, tgrid, name, None, None))
        elif name == "trace_distance_pair":
            tasks.append((family, plus, tgrid, name, None, minus))
        else:
            source = local if (name == "rec_local_A" and local is not None) else rho
            for basis in cfg.analysis.bases:
                tasks.append((family, source, tgrid, name, basis, None))
    return tasks


def run_scenario(cfg: ScenarioConfig, *, jobs: int = 1, timestamp: str | None = None) -> ScenarioResult:
    """Evaluate every requested (quantifier, basis) series and measure.

    Deterministic for a fixed config; the default BLP pair set uses a fixed seed.
    """
    validate(cfg)
    tasks = series_tasks(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            series = list(pool.map(_series_task, tasks))
    else:
        series = [_series_task(t) for t in tasks]

    family = build_family(cfg.channel)
    tgrid = time_grid(cfg)
    reports: list[NonMarkovReport] = []
    for m in cfg.analysis.measures:
        if m == "N_QI":
            reports.append(n_qi(family, tgrid))
        elif m == "BLP":
            reports.append(blp(family, tgrid))
        elif m == "RHP":
            reports.append(rhp(family, tgrid))
        elif m == "monotonicity":
            reports.extend(monotonicity_witness(s) for s in series if s.name in ("qi_rec", "sic"))
    provenance = {
        "version": __version__,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return ScenarioResult(cfg, series, reports, provenance)


# ---------------------------------------------------------------------------
# export


def _g12(x: float) -> str:
    return f"{x:.12g}"


def _r12(x: float) -> float:
    return float(_g12(x))


def csv_text(result: ScenarioResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    sid = result.config.scenario_id
    for s in result.series:
        theta = _g12(s.basis.theta) if s.basis is not None else ""
        phi = _g12(s.basis.phi) if s.basis is not None else ""
        for t, v in zip(s.times, s.values):
            writer.writerow((sid, s.name, theta, phi, _g12(t), _g12(v)))
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, BlochAngle):
        return {"theta": _r12(x.theta), "phi": _r12(x.phi)}
    if isinstance(x, (float, np.floating)):
        return _r12(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def result_to_dict(result: ScenarioResult) -> dict:
    return {
        "config": config_to_sections(result.config),
        "series": [
            {"quantifier": s.name, "basis": _jsonable(s.basis), "t": _jsonable(s.times), "value": _jsonable(s.values)}
            for s in result.series
        ],
        "reports": [
            {
                "measure": r.measure,
                "value": _jsonable(r.value),
                "argmax": _jsonable(r.argmax),
                "violation_intervals": _jsonable(r.violation_intervals),
                "details": _jsonable({k: v for k, v in r.details.items() if k != "excess"}),
            }
            for r in result.reports
        ],
        "provenance": dict(result.provenance),
    }


def json_text(result: ScenarioResult) -> str:
    return json.dumps(result_to_dict(result), indent=1, ensure_ascii=False) + "\n"


def result_from_dict(data: dict) -> ScenarioResult:
    cfg = config_from_sections(data["config"])
    series = [
        QuantifierSeries(s["quantifier"], BlochAngle(**s["basis"]) if s["basis"] else None, s["t"], s["value"])
        for s in data["series"]
    ]
    reports = [
        NonMarkovReport(r["measure"], r["value"], r["argmax"], [tuple(i) for i in r["violation_intervals"]],
                        r["details"])
        for r in data["reports"]
    ]
    return ScenarioResult(cfg, series, reports, data["provenance"])


def load_result(path: str) -> ScenarioResult:
    with open(path, encoding="utf-8") as fh:
        return result_from_dict(json.load(fh))


def export(result: ScenarioResult, fmt: str | None = None, out_dir: str | None = None) -> str:
    """Write ``<out_dir>/<scenario_id>.<fmt>`` (UTF-8, LF) and return the path."""
    fmt = fmt or result.config.output.format
    out_dir = out_dir or result.config.output.path
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{result.config.scenario_id}.{fmt}")
    text = csv_text(result) if fmt == "csv" else json_text(result)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
