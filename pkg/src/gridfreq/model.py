"""Grid case domain types, case-file parsing and aggregate quantities."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, fields

import jsonschema

from .governor import Tgov1Params

BALANCE_RTOL = 1e-6


class CaseParseError(ValueError):
    """Case document does not conform to the case-file schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CaseValidationError(ValueError):
    """One or more case invariants are violated."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid case: " + "; ".join(self.violations))


class RenewableKind(enum.Enum):
    PV = "pv"
    WIND_DFIG = "wind_dfig"


@dataclass(frozen=True)
class SynchronousUnit:
    id: str
    s_rated: float          # MVA
    p_gen: float            # MW
    h: float                # s, machine base
    governor: Tgov1Params | None = None
    responsive: bool = False

    @property
    def loading(self) -> float:
        return self.p_gen / self.s_rated

    @property
    def governed(self) -> bool:
        return self.governor is not None

    def violations(self) -> list[str]:
        out = []
        tag = f"unit {self.id}"
        if not self.s_rated > 0:
            out.append(f"{tag}: rated power must be positive")
        if not self.h > 0:
            out.append(f"{tag}: inertia must be positive")
        if not self.p_gen >= 0:
            out.append(f"{tag}: generation must be non-negative")
        if self.s_rated > 0 and self.p_gen > self.s_rated:
            out.append(f"{tag}: p_gen exceeds s_rated")
        if self.governor is None:
            if self.responsive:
                out.append(f"{tag}: responsive unit has no governor")
        else:
            out.extend(f"{tag}: {v}" for v in self.governor.violations())
            g = self.governor
            if self.s_rated > 0 and not g.v_min <= self.loading <= g.v_max:
                out.append(f"{tag}: initial loading outside valve limits")
        return out


@dataclass(frozen=True)
class RenewableUnit:
    id: str
    kind: RenewableKind
    p_gen: float            # MW, constant; no inertia, no governor


@dataclass(frozen=True)
class SystemCase:
    units: tuple[SynchronousUnit, ...]
    renewables: tuple[RenewableUnit, ...] = ()
    p_load: float = 0.0     # MW, losses folded in
    d_load: float = 1.0     # pu power per pu frequency
    f0: float = 60.0
    s_base_mva: float | None = None   # explicit override of the derived base

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "renewables", tuple(self.renewables))
        problems = self.violations()
        if problems:
            raise CaseValidationError(problems)

    @property
    def s_base(self) -> float:
        if self.s_base_mva is not None:
            return self.s_base_mva
        return sum(u.s_rated for u in self.units)

    @property
    def sync_generation(self) -> float:
        return sum(u.p_gen for u in self.units)

    @property
    def renewable_generation(self) -> float:
        return sum(r.p_gen for r in self.renewables)

    @property
    def total_generation(self) -> float:
        return self.sync_generation + self.renewable_generation

    def unit(self, unit_id: str) -> SynchronousUnit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise KeyError(unit_id)

    def violations(self) -> list[str]:
        out = []
        if not self.units:
            out.append("case needs at least one synchronous unit")
        ids = [u.id for u in self.units] + [r.id for r in self.renewables]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            out.append(f"duplicate unit ids: {', '.join(dupes)}")
        for u in self.units:
            out.extend(u.violations())
        for r in self.renewables:
            if not r.p_gen >= 0:
                out.append(f"renewable {r.id}: generation must be non-negative")
        if not self.p_load > 0:
            out.append("p_load must be positive")
        if not self.d_load >= 0:
            out.append("d_load must be non-negative")
        if not self.f0 > 0:
            out.append("f0 must be positive")
        if not self.s_base > 0:
            out.append("s_base must be positive")
        if self.p_load > 0:
            gap = self.total_generation - self.p_load
            if abs(gap) > BALANCE_RTOL * self.p_load:
                out.append(
                    f"power imbalance: generation {self.total_generation:.6f} MW "
                    f"vs load {self.p_load:.6f} MW (gap {gap:.6f} MW); "
                    "fold losses into p_load")
        return out


@dataclass(frozen=True)
class TripEvent:
    """Generation trip: a MW deficit, or the loss of a named unit."""
    t_event: float
    magnitude: float | None = None
    unit_id: str | None = None

    def __post_init__(self):
        if (self.magnitude is None) == (self.unit_id is None):
            raise ValueError("trip event needs exactly one of magnitude or unit_id")
        if not self.t_event >= 0:
            raise ValueError("t_event must be non-negative")
        if self.magnitude is not None and not self.magnitude > 0:
            raise ValueError("trip magnitude must be positive")

    def resolve(self, case: SystemCase) -> float:
        """Tripped MW for ``case``; raises ValueError when not resolvable."""
        if self.unit_id is not None:
            try:
                mw = case.unit(self.unit_id).p_gen
            except KeyError:
                raise ValueError(f"trip references unknown unit {self.unit_id!r}") from None
            if not mw > 0:
                raise ValueError(f"tripped unit {self.unit_id!r} carries no generation")
        else:
            mw = self.magnitude
        if not mw < case.total_generation:
            raise ValueError(
                f"trip of {mw} MW is not below total generation "
                f"{case.total_generation} MW")
        return mw


def system_inertia(case: SystemCase) -> float:
    """Aggregate inertia constant in seconds on the case's system base."""
    return sum(u.h * u.s_rated for u in case.units) / case.s_base


def penetration_shares(case: SystemCase) -> dict[str, float]:
    """Wind, PV and total renewable shares of total generation, in percent."""
    total = case.total_generation
    wind = sum(r.p_gen for r in case.renewables if r.kind is RenewableKind.WIND_DFIG)
    pv = sum(r.p_gen for r in case.renewables if r.kind is RenewableKind.PV)
    wind_pct = 100.0 * wind / total
    pv_pct = 100.0 * pv / total
    return {"wind_pct": wind_pct, "pv_pct": pv_pct,
            "total_renewable_pct": wind_pct + pv_pct}


# ---------------------------------------------------------------- case files

_NUM = {"type": "number"}
_GOVERNOR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {k: _NUM for k in ("r", "t1_s", "t2_s", "t3_s", "v_max", "v_min", "d_t")},
}
CASE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p_load_mw", "units"],
    "properties": {
        "f0": _NUM,
        "p_load_mw": _NUM,
        "d_load": _NUM,
        "s_base_mva": _NUM,
        "units": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "s_rated_mva", "p_gen_mw", "h_s"],
                "properties": {
                    "id": {"type": "string"},
                    "s_rated_mva": _NUM,
                    "p_gen_mw": _NUM,
                    "h_s": _NUM,
                    "governor": _GOVERNOR_SCHEMA,
                    "responsive": {"type": "boolean"},
                },
            },
        },
        "renewables": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "kind", "p_gen_mw"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": [k.value for k in RenewableKind]},
                    "p_gen_mw": _NUM,
                },
            },
        },
    },
}


def _json_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else part)
    return out


def case_from_dict(doc: dict) -> SystemCase:
    errors = sorted(jsonschema.Draft7Validator(CASE_SCHEMA).iter_errors(doc),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise CaseParseError(_json_path(err.absolute_path) or "<root>", err.message)

    units = []
    for u in doc["units"]:
        gov = u.get("governor")
        params = Tgov1Params(**gov) if gov is not None else None
        units.append(SynchronousUnit(
            id=u["id"], s_rated=float(u["s_rated_mva"]), p_gen=float(u["p_gen_mw"]),
            h=float(u["h_s"]), governor=params,
            responsive=u.get("responsive", params is not None)))
    renewables = [RenewableUnit(r["id"], RenewableKind(r["kind"]), float(r["p_gen_mw"]))
                  for r in doc.get("renewables", [])]
    s_base = doc.get("s_base_mva")
    return SystemCase(
        units=tuple(units), renewables=tuple(renewables),
        p_load=float(doc["p_load_mw"]), d_load=float(doc.get("d_load", 1.0)),
        f0=float(doc.get("f0", 60.0)),
        s_base_mva=None if s_base is None else float(s_base))


def parse_case(document: str) -> SystemCase:
    """Parse and validate case-file JSON text."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CaseParseError("<root>", f"not valid JSON: {exc}") from None
    return case_from_dict(doc)


def case_to_dict(case: SystemCase) -> dict:
    doc = {"f0": case.f0, "p_load_mw": case.p_load, "d_load": case.d_load}
    if case.s_base_mva is not None:
        doc["s_base_mva"] = case.s_base_mva
    units = []
    for u in case.units:
        entry = {"id": u.id, "s_rated_mva": u.s_rated, "p_gen_mw": u.p_gen, "h_s": u.h}
        if u.governor is not None:
            entry["governor"] = {f.name: getattr(u.governor, f.name)
                                 for f in fields(Tgov1Params)}
        entry["responsive"] = u.responsive
        units.append(entry)
    doc["units"] = units
    doc["renewables"] = [{"id": r.id, "kind": r.kind.value, "p_gen_mw": r.p_gen}
                         for r in case.renewables]
    return doc


def serialize_case(case: SystemCase) -> str:
    return json.dumps(case_to_dict(case), indent=2) + "\n"


def load_case(path) -> SystemCase:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())
