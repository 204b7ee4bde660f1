"""JSON and CSV emission.

Exact rationals are written to JSON as ``{"num": ..., "den": ...}``; CSV cells
carry a float column and an exact ``num/den`` column side by side. Output is a
pure function of its inputs, so equal runs produce equal bytes.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import fields, is_dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from soficlab import __version__
from soficlab.bernoulli import Alignment, MomentEstimate, SearchResult
from soficlab.commutant import CommutantReport
from soficlab.perm import LengthReport
from soficlab.scale import STATS, LengthProfile, StandardMapEstimate, TransferMatrix
from soficlab.sofic import DefectReport, format_word

LIMIT_NOTE = (
    "finite-scale diagnostics only: limits along an ultrafilter are replaced by "
    "trends over the scale schedule"
)


def rational(x: Fraction | int) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def plain(obj: Any) -> Any:
    """Convert reports to JSON-ready values, encoding Fractions as num/den objects."""
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if is_dataclass(obj):
        return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def envelope(subcommand: str, config: dict, seed: int | None, payload: dict) -> dict:
    out = {
        "tool": "soficlab",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": plain(config),
        "note": LIMIT_NOTE,
    }
    out.update(plain(payload))
    return out


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


# -- per-type payloads -----------------------------------------------------


def length_payload(r: LengthReport) -> dict:
    return {
        "n": r.n,
        "hamming": r.hamming,
        "coxeter": r.coxeter,
        "displacement": r.displacement,
        "inversions": r.inversions,
        "moved_points": r.moved_points,
        "chain_holds": r.chain_holds(),
    }


def length_csv(reports: Sequence[tuple[str, LengthReport]]) -> str:
    header = ["label", "n", "hamming", "coxeter", "displacement", "hamming_exact",
              "coxeter_exact", "displacement_exact", "inversions", "moved_points"]
    rows = [
        (lab, r.n, float(r.hamming), float(r.coxeter), float(r.displacement),
         r.hamming, r.coxeter, r.displacement, r.inversions, r.moved_points)
        for lab, r in reports
    ]
    return to_csv(header, rows)


def profile_payload(p: LengthProfile) -> dict:
    return {
        "family": p.family,
        "scales": list(p.scales),
        "stats": {s: p.series(s) for s in STATS},
        "trend": {
            s: {"exponent": t.exponent, "intercept": t.intercept, "to_zero": t.to_zero}
            for s, t in p.trend.items()
        },
        "class": p.classification,
        "thresholds": {"exponent_max": p.thresholds.exponent_max, "last_max": p.thresholds.last_max},
    }


def profile_csv(p: LengthProfile) -> str:
    header = ["n", *STATS, *(f"{s}_exact" for s in STATS), "class"]
    rows = []
    for n, r in zip(p.scales, p.records):
        vals = [getattr(r, s) for s in STATS]
        rows.append([n, *(float(v) for v in vals), *vals, p.classification])
    return to_csv(header, rows)


def transfer_payload(t: TransferMatrix) -> dict:
    return {"m": t.m, "sizes": t.sizes, "counts": t.counts, "entries": t.rows()}


def transfer_csv(t: TransferMatrix) -> str:
    header = ["target_bin", *(f"from_{j + 1}" for j in range(t.m))]
    rows = [[i + 1, *(t.entry(i, j) for j in range(t.m))] for i in range(t.m)]
    return to_csv(header, rows)


def estimate_payload(e: StandardMapEstimate) -> dict:
    return {
        "bin_map": list(e.bins),
        "defect": e.defect,
        "confidence": e.confidence,
        "is_bijection": e.is_bijection(),
    }


def defect_payload(r: DefectReport) -> dict:
    return {
        "word_problem": r.word_problem,
        "partial": r.partial,
        "undecided_words": r.undecided,
        "radius": r.radius,
        "scales": list(r.scales),
        "summary": r.summary(),
        "max_relator_defect": r.max_defect("relator"),
        "max_freeness_defect": r.max_defect("freeness"),
        "records": [
            {"scale": x.scale, "word": list(x.word), "word_text": format_word(x.word),
             "kind": x.kind, "value": x.value}
            for x in r.records
        ],
    }


def defect_csv(r: DefectReport) -> str:
    rows = [(x.scale, format_word(x.word), x.kind, float(x.value), x.value) for x in r.records]
    return to_csv(["scale", "word", "kind", "value", "value_exact"], rows)


def moments_payload(e: MomentEstimate, found: bool | None = None) -> dict:
    return {
        "m": e.m,
        "n": e.n,
        "trials": e.trials,
        "seed": e.seed,
        "signs": list(e.signs),
        "mean": e.mean,
        "variance": e.variance,
        "stderr": e.stderr,
        "theory_mean": e.theory_mean,
        "deviation": e.deviation,
        "fails_per_constraint": list(e.fails_per_constraint),
        "found": found,
    }


def search_payload(r: SearchResult, m: int, n: int, seed: int) -> dict:
    return {
        "m": m,
        "n": n,
        "seed": seed,
        "found": r.found,
        "trials": r.trials_used,
        "max_deviation": r.max_deviation,
        "traces": list(r.traces) if r.traces else None,
        "theory_mean": Fraction(1, 2**m),
        "chebyshev_lambda": r.chebyshev_lambda,
        "sufficient_n": r.sufficient_n,
        "projection_trace": r.projection.trace() if r.found else None,
    }


def alignment_payload(a: Alignment) -> dict:
    return {
        "level": a.level,
        "bins": a.bins,
        "block_sizes": a.source.sizes(),
        "gm_defect_before": list(a.defect_before),
        "gm_defect_after": list(a.defect_after),
        "layout_defect_before": list(a.layout_defect_before) if a.layout_defect_before else None,
        "layout_defect_after": list(a.layout_defect_after) if a.layout_defect_after else None,
        "aligned_projection_trace": a.projection.trace(),
    }


COMMUTANT_FIELDS = [f.name for f in fields(CommutantReport)]


def commutant_csv(reports: Sequence[CommutantReport]) -> str:
    rows = []
    for r in reports:
        rows.append([float(v) if isinstance(v, Fraction) else v for v in (getattr(r, f) for f in COMMUTANT_FIELDS)])
    return to_csv(COMMUTANT_FIELDS, rows)
