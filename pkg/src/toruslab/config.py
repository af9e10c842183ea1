"""Experiment configuration: TOML files with [matrix.S], [matrix.T], [game], [horizons].

Decimals are written as strings ("1/2", "0.25") so no value passes through a
binary float.  Validation errors name the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import tomlkit

from .errors import ConfigurationError
from .torus import IntMatrix

BOBS = ("stationary", "random", "greedy")
SOURCES = ("uniform", "cantor", "product", "ensemble")


@dataclass(frozen=True)
class GameSection:
    alpha: Fraction = Fraction(1, 2)
    beta: Fraction = Fraction(1, 2)
    rho: Fraction = Fraction(1, 4)
    rounds: int = 40
    bob: str = "stationary"
    targets: tuple[tuple[Fraction, ...], ...] = ()
    start: tuple[Fraction, ...] | None = None


@dataclass(frozen=True)
class Horizons:
    N_S: int = 10_000
    N_T: int = 200
    J: int = 3
    N_entropy: int = 10_000


@dataclass(frozen=True)
class PointSection:
    coords: tuple[Fraction, ...] | None = None
    bits: int = 512


@dataclass(frozen=True)
class EntropySection:
    eps: tuple[Fraction, ...] = (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16))
    windows: tuple[int, int] = (2, 12)


@dataclass(frozen=True)
class DimensionSection:
    source: str = "uniform"
    samples: int = 100_000
    dim: int = 2


@dataclass(frozen=True)
class LabConfig:
    experiment_id: str = "experiment"
    seed: int = 0
    seeds: tuple[int, ...] = ()
    S: IntMatrix | None = None
    T: IntMatrix | None = None
    game: GameSection = field(default_factory=GameSection)
    horizons: Horizons = field(default_factory=Horizons)
    point: PointSection = field(default_factory=PointSection)
    entropy: EntropySection = field(default_factory=EntropySection)
    dimension: DimensionSection = field(default_factory=DimensionSection)
    precision: int | None = None
    certificates: str | None = None
    text: str = field(default="", repr=False, compare=False)

    @property
    def run_seeds(self) -> tuple[int, ...]:
        return self.seeds or (self.seed,)

    def require(self, name: str) -> IntMatrix:
        m = getattr(self, name)
        if m is None:
            raise ConfigurationError(f"matrix.{name}: required by this command")
        return m


def _frac(v, path: str) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise ConfigurationError(f"{path}: write decimals as strings, got {v!r}")
    try:
        return Fraction(str(v).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"{path}: cannot parse {v!r} as a number") from None


def _int(v, path: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigurationError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigurationError(f"{path}: must be at least {minimum}, got {v}")
    return int(v)


def _table(doc: dict, key: str, path: str) -> dict:
    t = doc.get(key, {})
    if not isinstance(t, dict):
        raise ConfigurationError(f"{path}: expected a table")
    return t


def _check_keys(t: dict, allowed: set, path: str):
    extra = sorted(set(t) - allowed)
    if extra:
        raise ConfigurationError(f"{path}.{extra[0]}: unknown field")


def _matrix(t: dict, path: str) -> IntMatrix:
    _check_keys(t, {"rows"}, path)
    rows = t.get("rows")
    if not isinstance(rows, list) or not rows:
        raise ConfigurationError(f"{path}.rows: expected a nonempty list of integer rows")
    d = len(rows)
    out = []
    for i, r in enumerate(rows):
        if not isinstance(r, list):
            raise ConfigurationError(f"{path}.rows[{i}]: expected a list")
        if len(r) != d:
            raise ConfigurationError(f"{path}.rows[{i}]: expected {d} entries, got {len(r)}")
        out.append(tuple(_int(v, f"{path}.rows[{i}][{j}]") for j, v in enumerate(r)))
    try:
        return IntMatrix(tuple(out))
    except ValueError as e:
        raise ConfigurationError(f"{path}.rows: {e}") from None


def _vector(v, path: str, dim: int | None) -> tuple[Fraction, ...]:
    if not isinstance(v, list):
        raise ConfigurationError(f"{path}: expected a list")
    if dim is not None and len(v) != dim:
        raise ConfigurationError(f"{path}: expected {dim} entries, got {len(v)}")
    return tuple(_frac(x, f"{path}[{i}]") for i, x in enumerate(v))


def parse_config(text: str) -> LabConfig:
    try:
        doc = tomlkit.parse(text).unwrap()
    except Exception as e:
        raise ConfigurationError(f"config: not valid TOML ({e})") from None
    _check_keys(doc, {"experiment", "matrix", "game", "horizons", "point", "entropy", "dimension",
                      "precision", "verify"}, "config")
    exp = _table(doc, "experiment", "experiment")
    _check_keys(exp, {"id", "seed", "seeds"}, "experiment")
    seed = _int(exp.get("seed", 0), "experiment.seed")
    seeds = tuple(_int(s, f"experiment.seeds[{i}]") for i, s in enumerate(exp.get("seeds", [])))

    mats = _table(doc, "matrix", "matrix")
    _check_keys(mats, {"S", "T"}, "matrix")
    S = _matrix(mats["S"], "matrix.S") if "S" in mats else None
    T = _matrix(mats["T"], "matrix.T") if "T" in mats else None
    if S is not None and T is not None and S.dim != T.dim:
        raise ConfigurationError(f"matrix.T.rows: dimension {T.dim} differs from matrix.S ({S.dim})")
    dim = (S or T).dim if (S or T) else None

    g = _table(doc, "game", "game")
    _check_keys(g, {"alpha", "beta", "rho", "rounds", "bob", "targets", "start"}, "game")
    targets = tuple(_vector(y, f"game.targets[{i}]", dim) for i, y in enumerate(g.get("targets", [])))
    if dim is not None and not targets:
        targets = ((Fraction(0),) * dim,)
    bob = g.get("bob", "stationary")
    if bob not in BOBS:
        raise ConfigurationError(f"game.bob: expected one of {BOBS}, got {bob!r}")
    game = GameSection(
        alpha=_frac(g.get("alpha", "1/2"), "game.alpha"),
        beta=_frac(g.get("beta", "1/2"), "game.beta"),
        rho=_frac(g.get("rho", "1/4"), "game.rho"),
        rounds=_int(g.get("rounds", 40), "game.rounds", 1),
        bob=bob, targets=targets,
        start=_vector(g["start"], "game.start", dim) if "start" in g else None)
    if not 0 < game.alpha < 1 or not 0 < game.beta < 1:
        raise ConfigurationError("game.alpha: alpha and beta must lie in (0, 1)")
    if not 0 < game.rho <= Fraction(1, 4):
        raise ConfigurationError("game.rho: must lie in (0, 1/4]")

    h = _table(doc, "horizons", "horizons")
    _check_keys(h, {"N_S", "N_T", "J", "N_entropy"}, "horizons")
    hz = Horizons(_int(h.get("N_S", 10_000), "horizons.N_S", 1), _int(h.get("N_T", 200), "horizons.N_T", 0),
                  _int(h.get("J", 3), "horizons.J", 1), _int(h.get("N_entropy", 10_000), "horizons.N_entropy", 1))

    p = _table(doc, "point", "point")
    _check_keys(p, {"coords", "bits"}, "point")
    pt = PointSection(_vector(p["coords"], "point.coords", dim) if "coords" in p else None,
                      _int(p.get("bits", 512), "point.bits", 1))

    e = _table(doc, "entropy", "entropy")
    _check_keys(e, {"eps", "windows"}, "entropy")
    eps = tuple(_frac(v, f"entropy.eps[{i}]") for i, v in enumerate(e.get("eps", ["1/4", "1/8", "1/16"])))
    win = e.get("windows", [2, 12])
    if not isinstance(win, list) or len(win) != 2:
        raise ConfigurationError("entropy.windows: expected [first, last]")
    ent = EntropySection(eps, (_int(win[0], "entropy.windows[0]", 1), _int(win[1], "entropy.windows[1]", 1)))

    dm = _table(doc, "dimension", "dimension")
    _check_keys(dm, {"source", "samples", "dim"}, "dimension")
    source = dm.get("source", "uniform")
    if source not in SOURCES:
        raise ConfigurationError(f"dimension.source: expected one of {SOURCES}, got {source!r}")
    dims = DimensionSection(source, _int(dm.get("samples", 100_000), "dimension.samples", 1),
                            _int(dm.get("dim", 2), "dimension.dim", 1))

    precision = doc.get("precision")
    if precision is not None:
        precision = _int(precision, "precision", 1)
    ver = _table(doc, "verify", "verify")
    _check_keys(ver, {"certificates"}, "verify")
    return LabConfig(str(exp.get("id", "experiment")), seed, seeds, S, T, game, hz, pt, ent, dims,
                     precision, ver.get("certificates"), text)


def load_config(path) -> LabConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"config: cannot read {path} ({e.strerror})") from None
    return parse_config(text)


def with_overrides(cfg: LabConfig, seed: int | None = None, precision: int | None = None) -> LabConfig:
    """Apply command-line overrides and refresh the snapshot text to match."""
    if seed is None and precision is None:
        return cfg
    doc = tomlkit.parse(cfg.text) if cfg.text else tomlkit.document()
    if seed is not None:
        doc.setdefault("experiment", tomlkit.table())
        doc["experiment"]["seed"] = seed
        if "seeds" in doc["experiment"]:
            del doc["experiment"]["seeds"]
        cfg = replace(cfg, seed=seed, seeds=())
    if precision is not None:
        # top-level keys must precede tables
        items = [(k, v) for k, v in doc.items() if k != "precision"]
        new = tomlkit.document()
        new["precision"] = precision
        for k, v in items:
            new[k] = v
        doc = new
        cfg = replace(cfg, precision=precision)
    return replace(cfg, text=tomlkit.dumps(doc))


def snapshot(cfg: LabConfig) -> str:
    """The config text as stored in experiment records."""
    return tomlkit.dumps(tomlkit.parse(cfg.text)) if cfg.text else ""
