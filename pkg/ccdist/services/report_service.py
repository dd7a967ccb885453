"""
JSON 報告與基準數據讀寫
"""

import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from ccdist.config import settings
from ccdist.errors import ReportError
from ccdist.models import (
    ClassificationFlags,
    CollinearSolution,
    ConstraintReport,
    DistanceVector,
    MassVector,
    MultiplierSet,
    Ordering,
    SymmetryVerdict,
    TrapezoidSolution,
)
from ccdist.services.distgeo import body_count, pair_label, pairs
from ccdist.services.log_service import LogLevel, LogType, log_service

SCHEMA_VERSION = 1


def distances_to_dict(r: DistanceVector) -> Dict[str, float]:
    return {pair_label(i, j, r.n): r.entries[k] for k, (i, j) in enumerate(pairs(r.n))}


def distances_from_dict(payload: Dict[str, float]) -> DistanceVector:
    n = body_count(len(payload))
    return DistanceVector(n=n, entries=[payload[pair_label(i, j, n)] for i, j in pairs(n)])


def trapezoid_payload(solution: TrapezoidSolution) -> Dict[str, Any]:
    """Solution section of a trapezoid report."""
    return {
        "distances": distances_to_dict(solution.r),
        "multipliers": solution.multipliers.model_dump(),
        "residual_norm": solution.residual_norm,
        "iterations": solution.iterations,
        "spectrum": {"zeta": list(solution.spectrum)},
        "constraints": solution.constraints.model_dump() if solution.constraints else None,
        "classification": solution.flags.model_dump() if solution.flags else None,
        "symmetry": solution.symmetry.model_dump(by_alias=True) if solution.symmetry else None,
    }


def trapezoid_from_payload(payload: Dict[str, Any]) -> TrapezoidSolution:
    constraints = payload.get("constraints")
    flags = payload.get("classification")
    symmetry = payload.get("symmetry")
    return TrapezoidSolution(
        r=distances_from_dict(payload["distances"]),
        multipliers=MultiplierSet(**payload["multipliers"]),
        residual_norm=payload["residual_norm"],
        iterations=payload.get("iterations", 0),
        spectrum=payload["spectrum"]["zeta"],
        constraints=ConstraintReport.model_validate(constraints) if constraints else None,
        flags=ClassificationFlags.model_validate(flags) if flags else None,
        symmetry=SymmetryVerdict.model_validate(symmetry) if symmetry else None,
    )


def collinear_payload(solution: CollinearSolution) -> Dict[str, Any]:
    return {
        "ordering": list(solution.ordering.perm),
        "gaps": list(solution.gaps),
        "distances": distances_to_dict(solution.distances) if solution.distances else None,
        "multipliers": {"delta": solution.delta, "sigma": dict(solution.sigma)},
        "residual_norm": solution.residual_norm,
        "iterations": solution.iterations,
        "spectrum": {"zeta": list(solution.spectrum)},
        "s_signs": dict(solution.s_signs),
    }


def collinear_from_payload(payload: Dict[str, Any]) -> CollinearSolution:
    distances = payload.get("distances")
    return CollinearSolution(
        ordering=Ordering(perm=tuple(payload["ordering"])),
        gaps=payload["gaps"],
        delta=payload["multipliers"]["delta"],
        sigma=payload["multipliers"]["sigma"],
        residual_norm=payload["residual_norm"],
        iterations=payload.get("iterations", 0),
        spectrum=payload["spectrum"]["zeta"],
        distances=distances_from_dict(distances) if distances else None,
        s_signs=payload.get("s_signs", {}),
    )


def build_report(
    command: str,
    masses: Optional[MassVector],
    body: Dict[str, Any],
    provenance: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Top-level document: schema_version, command, masses, the command's own
    sections, and provenance (seed, tolerances, generated_at).
    """
    report: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "masses": list(masses.masses) if masses else None,
    }
    report.update(body)
    stamp = {"generated_at": datetime.now(timezone.utc).isoformat()}
    stamp.update(provenance or {})
    report["provenance"] = stamp
    return report


def dumps(report: Dict[str, Any]) -> str:
    """Floats use the shortest repr that round-trips exactly; NaN and Infinity are rejected."""
    try:
        return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    except ValueError as e:
        raise ReportError(f"report is not strict JSON: {e}") from e


def emit_report(report: Dict[str, Any], path: Optional[str] = None) -> Optional[Path]:
    """Write to ``path`` or stdout."""
    text = dumps(report)
    if path is None:
        sys.stdout.write(text)
        return None
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    log_service.log(LogLevel.INFO, LogType.CLI, f"report written to {target}")
    return target


def load_report(path: str) -> Dict[str, Any]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {data.get('schema_version')!r} in {path}")
    return data


def fixture_path(base_ratio: float) -> Path:
    return Path(settings.fixtures_dir) / f"trapezoid_family_b{base_ratio:g}.json"
