"""Command-line entry point: ``toruslab COMMAND --config PATH [options]``.

Each run writes line-delimited records (``<command>.jsonl``), a CSV summary
(``<command>.csv``) and an experiment record (``experiment-<command>.json``) into the
output directory.  Records and summaries depend only on the config and seed;
the wall time lives in the experiment record alone.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import LabConfig, load_config, snapshot, with_overrides
from .constructor import (ConstructionConfig, certificate_records, construct_ensemble, load_certificate,
                          verify_certificate)
from .dimension import box_dimension, cantor_sample, check_slicing
from .entropy import entropy_spectrum, orbit_closure_entropy
from .equidist import equidistribution_score
from .errors import (BudgetError, ClassificationError, ConfigurationError, ConstructionError,
                     IntegrityError, LabError, RejectedCertificate, RejectedInput)
from .games import (CenterKeeping, GreedyBob, RandomBob, avoid_strategy, avoidance_margin, limit_point,
                    make_params, play, round_robin_strategy, transcript_lines)
from .polynomials import char_poly
from .spectral import (NONERGODIC, choose_complements, is_ergodic, span_condition,
                       splitting)
from .torus import TorusPoint, exact_decimal, minimal_precision, random_point, reduce_mod1

COMMANDS = ("classify", "game", "equidist", "entropy", "dimension", "construct", "verify", "report")
EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_REJECTED, EXIT_OTHER = 0, 2, 3, 4, 1


@dataclass
class Outcome:
    records: list[dict]
    summary: list[dict]
    files: dict[str, str] = field(default_factory=dict)   # relative path -> text
    rejected: bool = False
    text: str = ""


def _dec(q) -> str:
    q = Fraction(q)
    try:
        return exact_decimal(q)
    except RejectedInput:
        return f"{q.numerator}/{q.denominator}"


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# classify

def _classify_one(name, M) -> dict:
    rec = {"matrix": name, "rows": M.to_lists(), "char_poly": str(char_poly(M)), "ergodic": is_ergodic(M)}
    if not rec["ergodic"]:
        rec.update(classification=NONERGODIC, dims=None, central_semisimple=None, rotation=[])
        return rec
    sp = splitting(M)
    rec.update(classification=sp.classification, dims=list(sp.dims),
               central_semisimple=int(sp.central_semisimple.shape[1]), rotation=list(sp.rotation_blocks),
               tolerance=sp.tolerance)
    return rec


def cmd_classify(cfg: LabConfig, args) -> Outcome:
    recs = [_classify_one(n, getattr(cfg, n)) for n in ("S", "T") if getattr(cfg, n) is not None]
    if not recs:
        raise ConfigurationError("matrix.S: at least one matrix is required")
    if len(recs) == 2 and recs[0]["ergodic"] and recs[1]["ergodic"]:
        sp_S, sp_T = splitting(cfg.S), splitting(cfg.T)
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            span = span_condition(sp_S, sp_T)
        rec = {"matrix": "pair", "span_condition": span.holds, "rank": span.rank,
               "warnings": [str(x.message) for x in w]}
        if span.holds:
            rec["condition_number"] = round(choose_complements(sp_S, sp_T).condition_number, 12)
        recs.append(rec)
    summary = [{"matrix": r["matrix"], "classification": r.get("classification", ""),
                "dims": "" if not r.get("dims") else "/".join(map(str, r["dims"])),
                "span_condition": r.get("span_condition", "")} for r in recs]
    return Outcome(recs, summary)


# game

def _start_center(cfg: LabConfig, d: int, seed: int):
    if cfg.game.start is not None:
        return cfg.game.start
    rng = random.Random(f"start:{seed}")
    return tuple(Fraction(rng.getrandbits(32), 1 << 32) for _ in range(d))


def _bob(cfg: LabConfig, M, seed):
    if cfg.game.bob == "random":
        return RandomBob(seed)
    if cfg.game.bob == "greedy":
        return GreedyBob(M, cfg.game.targets[0])
    return CenterKeeping()


def run_game(cfg: LabConfig, seed: int) -> tuple[dict, list[str]]:
    M = cfg.T if cfg.T is not None else cfg.require("S")
    g = cfg.game
    inner = [avoid_strategy(M, y, label=f"avoid[{i}]") for i, y in enumerate(g.targets)]
    alice = inner[0] if len(inner) == 1 else round_robin_strategy(inner)
    params = make_params(_start_center(cfg, M.dim, seed), g.rho, g.alpha, g.beta, torus=True)
    t = play(alice, _bob(cfg, M, seed), params, g.rounds)
    lines = transcript_lines(t)
    rec = {"seed": seed, "valid": t.valid, "rounds": g.rounds, "bob": g.bob,
           "transcript_sha256": _sha("\n".join(lines) + "\n")}
    if t.valid:
        lp = limit_point(t)
        delta_out = params.bob_radius(g.rounds) / 8
        margins = [avoidance_margin(M, lp.center, y, cfg.horizons.N_T)[0] for y in g.targets]
        rec.update(limit=[_dec(v) for v in lp.center], limit_error=_dec(lp.error),
                   margins=[float(m) for m in margins], delta_out=float(delta_out),
                   avoided=all(m >= delta_out for m in margins))
    else:
        rec.update(failure_round=t.failure.round, failure_actor=t.failure.actor,
                   violation=float(t.failure.violation))
    return rec, lines


def _game_job(job):
    return run_game(*job)


def _map(fn, jobs, parallel: int):
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(parallel) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_game(cfg: LabConfig, args) -> Outcome:
    results = _map(_game_job, [(cfg, s) for s in cfg.run_seeds], args.parallel)
    files, recs = {}, []
    for rec, lines in results:
        files[f"transcripts/{rec['transcript_sha256']}.jsonl"] = "\n".join(lines) + "\n"
        recs.append(rec)
    summary = [{"seed": r["seed"], "valid": r["valid"], "avoided": r.get("avoided", False),
                "min_margin": min(r["margins"]) if r.get("margins") else ""} for r in recs]
    return Outcome(recs, summary, files)


# equidist and entropy

def _point(cfg: LabConfig, M, N: int, seed: int) -> TorusPoint:
    p = max(minimal_precision(M, N), cfg.precision or 0)
    if cfg.point.coords is not None:
        return reduce_mod1(cfg.point.coords, p)
    return random_point(M.dim, cfg.point.bits, random.Random(seed), precision=p)


def cmd_equidist(cfg: LabConfig, args) -> Outcome:
    S, h = cfg.require("S"), cfg.horizons
    recs = []
    for seed in cfg.run_seeds:
        rep = equidistribution_score(_point(cfg, S, h.N_S, seed), S, h.N_S, h.J)
        recs.append({"seed": seed, "N": h.N_S, "J": h.J, "max_score": rep.max_score,
                     "argmax": list(rep.argmax()), "threshold": rep.threshold(),
                     "passes": rep.max_score <= rep.threshold(),
                     "scores": [[list(k), v] for k, v in sorted(rep.scores.items())]})
    summary = [{k: r[k] for k in ("seed", "N", "J", "max_score", "threshold", "passes")} for r in recs]
    return Outcome(recs, summary)


def cmd_entropy(cfg: LabConfig, args) -> Outcome:
    S, N = cfg.require("S"), cfg.horizons.N_entropy
    spec = entropy_spectrum(S)
    recs = [{"method": spec.method, "value": spec.value, "root_error": spec.error}]
    eps = [float(e) for e in cfg.entropy.eps]
    lo, hi = cfg.entropy.windows
    for seed in cfg.run_seeds:
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            est = orbit_closure_entropy(_point(cfg, S, N, seed), S, N, eps, range(lo, hi + 1))
        recs.append({"method": est.method, "seed": seed, "value": est.value, "scales": list(est.scales),
                     "fit_quality": est.fit_quality,
                     "counts": {str(k): v for k, v in est.counts.items()},
                     "warnings": [str(x.message) for x in w], "gap_to_spectrum": spec.value - est.value})
    summary = [{"method": r["method"], "seed": r.get("seed", ""), "value": r["value"]} for r in recs]
    return Outcome(recs, summary)


# dimension

def _dimension_record(est, **extra) -> dict:
    return {"value": est.value, "scales": list(est.scales), "counts": list(est.counts),
            "fit_quality": est.fit_quality, "ambient": est.ambient, "note": est.note, **extra}


def _construction_config(cfg: LabConfig, seed: int) -> ConstructionConfig:
    g, h = cfg.game, cfg.horizons
    if g.bob == "greedy":
        raise ConfigurationError("game.bob: greedy Bob cannot play on a leaf; use stationary or random")
    return ConstructionConfig(cfg.require("S"), cfg.require("T"), g.targets, g.rounds, h.N_S, h.N_T, h.J,
                              g.alpha, g.beta, g.rho, seed, g.bob, 3, cfg.precision)


def cmd_dimension(cfg: LabConfig, args) -> Outcome:
    d = cfg.dimension
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        if d.source == "uniform":
            rng = np.random.default_rng(cfg.seed)
            recs = [_dimension_record(box_dimension(rng.random((d.samples, d.dim))), source="uniform")]
        elif d.source == "cantor":
            recs = [_dimension_record(box_dimension(cantor_sample(d.samples, seed=cfg.seed)), source="cantor")]
        elif d.source == "product":
            A = cantor_sample(d.samples, seed=cfg.seed)
            C = np.random.default_rng(cfg.seed + 1).random(d.samples)
            chk = check_slicing(A, C)
            recs = [_dimension_record(chk.product, source="product", base=chk.base.value,
                                      fiber=chk.fiber.value, bound=chk.bound, holds=chk.holds)]
        else:
            ens = construct_ensemble(_construction_config(cfg, cfg.seed), cfg.run_seeds, args.parallel)
            recs = [_dimension_record(box_dimension(ens.points()), source="ensemble",
                                      accepted=len(ens.accepted), rejected=len(ens.rejected))]
    recs[0]["warnings"] = [str(x.message) for x in w]
    summary = [{"source": r["source"], "value": r["value"], "fit_quality": r["fit_quality"]} for r in recs]
    return Outcome(recs, summary)


# construct and verify

def cmd_construct(cfg: LabConfig, args) -> Outcome:
    base = _construction_config(cfg, cfg.seed)
    ens = construct_ensemble(base, cfg.run_seeds, args.parallel)
    certs = list(ens.accepted) + [e.certificate for e in ens.rejected if e.certificate is not None]
    certs.sort(key=lambda c: c.config.seed)
    files, recs = {}, []
    for c in certs:
        path = f"certificates/seed-{c.config.seed}.jsonl"
        files[path] = _jsonl(json.loads(s) for s in certificate_records(c))
        files[f"transcripts/{c.transcript_hash}.jsonl"] = "\n".join(c.transcript) + "\n"
        recs.append({"seed": c.config.seed, "accepted": c.accepted, "max_score": c.equi_report.max_score,
                     "score_threshold": c.config.score_threshold,
                     "avoid_margins": [float(m) for m in c.avoid_margins],
                     "delta_out": float(c.delta_out), "attempt": c.attempt, "certificate": path,
                     "transcript_sha256": c.transcript_hash, "precision": c.precision})
    summary = [{"seed": r["seed"], "accepted": r["accepted"], "max_score": r["max_score"],
                "min_margin": min(r["avoid_margins"])} for r in recs]
    return Outcome(recs, summary, files, rejected=bool(ens.rejected))


def _certificate_dir(cfg: LabConfig, out: Path) -> Path:
    return Path(cfg.certificates) if cfg.certificates else out / "certificates"


def cmd_verify(cfg: LabConfig, args) -> Outcome:
    cdir = _certificate_dir(cfg, Path(args.out))
    files = sorted(cdir.glob("*.jsonl"))
    if not files:
        raise ConfigurationError(f"verify.certificates: no certificates found in {cdir}")
    recs, rejected = [], False
    for f in files:
        lines = f.read_text().splitlines()
        sha = json.loads(lines[0])["transcript_sha256"]
        tpath = cdir.parent / "transcripts" / f"{sha}.jsonl"
        rec = {"certificate": f.name}
        try:
            cert = load_certificate(lines, tpath.read_text().splitlines() if tpath.exists() else [])
            rep = verify_certificate(cert, precision=cfg.precision or 2 * cert.precision)
            rec.update(ok=rep.ok, checks=rep.checks, max_score=rep.max_score,
                       avoid_margins=[float(m) for m in rep.avoid_margins], precision=rep.precision)
        except IntegrityError as e:
            rec.update(ok=False, integrity_error=str(e))
        rejected |= not rec["ok"]
        recs.append(rec)
    summary = [{"certificate": r["certificate"], "ok": r["ok"]} for r in recs]
    return Outcome(recs, summary, rejected=rejected)


def cmd_report(cfg: LabConfig, args) -> Outcome:
    out = Path(args.out)
    lines, rows = [], []
    for f in sorted(out.glob("*.jsonl")):
        if f.stem == "report":
            continue
        recs = [json.loads(s) for s in f.read_text().splitlines() if s.strip()]
        lines.append(f"{f.stem}: {len(recs)} records")
        for r in recs:
            keys = [k for k in ("matrix", "seed", "classification", "span_condition", "value", "max_score", "valid",
                                "avoided", "accepted", "ok") if k in r]
            desc = ", ".join(f"{k}={r[k]}" for k in keys)
            lines.append(f"  {desc}")
            rows.append({"command": f.stem, "summary": desc})
    if not rows:
        raise ConfigurationError(f"report: no records found in {out}")
    lines.append("box-counting and finite-horizon statistics only; see each record's notes")
    return Outcome([{"command": r["command"], "summary": r["summary"]} for r in rows], rows,
                   text="\n".join(lines) + "\n")


HANDLERS = {"classify": cmd_classify, "game": cmd_game, "equidist": cmd_equidist, "entropy": cmd_entropy,
            "dimension": cmd_dimension, "construct": cmd_construct, "verify": cmd_verify, "report": cmd_report}


def write_outputs(out: Path, command: str, outcome: Outcome) -> list[dict]:
    out.mkdir(parents=True, exist_ok=True)
    texts = {f"{command}.jsonl": _jsonl(outcome.records), f"{command}.csv": _csv(outcome.summary)}
    texts.update(outcome.files)
    refs = []
    for rel, text in sorted(texts.items()):
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        refs.append({"path": rel, "sha256": _sha(text)})
    return refs


def run(command: str, config_path, out, seed=None, precision=None, parallel: int = 1) -> dict:
    """Execute one command and return its experiment record."""
    if command not in COMMANDS:
        raise ConfigurationError(f"command: expected one of {COMMANDS}, got {command!r}")
    cfg = with_overrides(load_config(config_path), seed, precision)
    args = argparse.Namespace(out=str(out), parallel=parallel)
    t0 = time.perf_counter()
    outcome = HANDLERS[command](cfg, args)
    refs = write_outputs(Path(out), command, outcome)
    record = {"experiment_id": cfg.experiment_id, "command": command, "config": snapshot(cfg),
              "outputs": refs, "seed": cfg.seed, "seeds": list(cfg.run_seeds), "version": __version__,
              "rejected": outcome.rejected, "wall_time": round(time.perf_counter() - t0, 3)}
    (Path(out) / f"experiment-{command}.json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    record["text"] = outcome.text
    return record


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toruslab", description="Toral dynamics verification lab.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="TOML experiment configuration")
    ap.add_argument("--seed", type=int, help="override experiment.seed (and drop experiment.seeds)")
    ap.add_argument("--precision", type=int, help="override the working precision in bits")
    ap.add_argument("--out", default="lab-out", help="output directory")
    ap.add_argument("--parallel", type=int, default=1, help="worker processes for independent seeds")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rec = run(args.command, args.config, args.out, args.seed, args.precision, args.parallel)
    except BudgetError as e:
        print(f"budget error: {e} (minimal precision {e.minimal_precision})", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigurationError, RejectedInput, ClassificationError, ConstructionError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RejectedCertificate, IntegrityError) as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECTED
    except LabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OTHER
    if rec["text"]:
        print(rec["text"], end="")
    print(f"{rec['command']}: wrote {len(rec['outputs'])} files to {args.out}")
    return EXIT_REJECTED if rec["rejected"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
