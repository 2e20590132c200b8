"""Deterministic synthetic operational-log generator.

Generates one OPC-UA/fieldbus-style event stream per testbed dataflow, for a
baseline profile and for a secured profile derived from an enabled control
set.  Event-class rates are met by exact quota counts (round(n * rate))
assigned to sessions through a counter-based Philox stream keyed by
(seed, flow index), so a fixed seed yields byte-identical output on every
platform and per-flow generation can run in any order.

Log CSV format: ``timestamp,src,dst,protocol,authMode,securityMode,event,clientIp``
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from io import StringIO
from pathlib import Path
from typing import Optional

import numpy as np

from icskg.config import CONTROL_NAMES, ControlOverrides
from icskg.errors import InvalidProfile, MissingColumn
from icskg.ingest import ControlProfileSpec, TestbedSpec

LOG_CSV_HEADER = ["timestamp", "src", "dst", "protocol", "authMode",
                  "securityMode", "event", "clientIp"]

AUTH_MODES = ("Anonymous", "Password", "Certificate")
SECURITY_MODES = ("None", "Sign", "SignAndEncrypt")
EVENTS = ("Read", "Write", "FailedWrite", "AuditWrite", "Session",
          "ConfigCheckPass", "ConfigCheckFail")

_BASE_TIME = datetime(2025, 1, 6, 0, 0, 0, tzinfo=timezone.utc)

# Per-session config checks are capped to keep streams bounded when
# misconfigRate far exceeds failCheckFrac.
_MAX_CHECKS_PER_SESSION = 10.0


@dataclass
class LogRecord:
    timestamp: str
    src: str
    dst: str
    protocol: str
    auth_mode: str
    security_mode: str
    event: str
    client_ip: str


@dataclass
class SynthProfile:
    seed: int = 42
    duration_hours: float = 24.0
    per_flow_session_rate: float = 50.0   # sessions per hour per dataflow
    anon_frac: float = 0.03
    insecure_mode_frac: float = 0.005
    cert_frac: float = 0.90
    misconfig_rate: float = 0.02
    failed_write_frac: float = 0.05
    audit_write_frac: float = 0.01
    fail_check_frac: float = 0.01
    client_ip_pool_size: int = 10

    def validate(self) -> None:
        rates = {
            "anonFrac": self.anon_frac,
            "insecureModeFrac": self.insecure_mode_frac,
            "certFrac": self.cert_frac,
            "misconfigRate": self.misconfig_rate,
            "failedWriteFrac": self.failed_write_frac,
            "auditWriteFrac": self.audit_write_frac,
            "failCheckFrac": self.fail_check_frac,
        }
        for name, value in rates.items():
            if not 0.0 <= value <= 1.0:
                raise InvalidProfile(f"{name} = {value} outside [0,1]")
        if self.anon_frac + self.cert_frac > 1.0 + 1e-12:
            raise InvalidProfile("anonFrac + certFrac exceeds 1")
        if self.failed_write_frac + self.audit_write_frac > 1.0 + 1e-12:
            raise InvalidProfile("failedWriteFrac + auditWriteFrac exceeds 1")
        if self.fail_check_frac == 0.0 and self.misconfig_rate > 0.0:
            raise InvalidProfile("misconfigRate > 0 requires failCheckFrac > 0")
        if self.fail_check_frac > 0.0:
            if self.misconfig_rate / self.fail_check_frac > _MAX_CHECKS_PER_SESSION:
                raise InvalidProfile(
                    "misconfigRate / failCheckFrac exceeds the per-session check cap")
        if self.duration_hours < 0 or self.per_flow_session_rate < 0:
            raise InvalidProfile("duration and session rate must be non-negative")
        if self.client_ip_pool_size < 1:
            raise InvalidProfile("clientIpPoolSize must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthProfile":
        mapping = {
            "seed": "seed",
            "durationHours": "duration_hours",
            "perFlowSessionRate": "per_flow_session_rate",
            "anonFrac": "anon_frac",
            "insecureModeFrac": "insecure_mode_frac",
            "certFrac": "cert_frac",
            "misconfigRate": "misconfig_rate",
            "failedWriteFrac": "failed_write_frac",
            "auditWriteFrac": "audit_write_frac",
            "failCheckFrac": "fail_check_frac",
            "clientIpPoolSize": "client_ip_pool_size",
        }
        kwargs = {}
        for key, attr in mapping.items():
            if key in raw:
                value = raw[key]
                kwargs[attr] = int(value) if attr in ("seed", "client_ip_pool_size") else float(value)
        profile = cls(**kwargs)
        profile.validate()
        return profile


@dataclass
class ControlProfile:
    """Enabled control set plus the rate overrides they imply."""

    controls: set[str] = field(default_factory=set)
    allowlist: list[tuple[str, str]] = field(default_factory=list)
    overrides: ControlOverrides = field(default_factory=ControlOverrides)

    def __post_init__(self) -> None:
        unknown = self.controls - set(CONTROL_NAMES)
        if unknown:
            raise InvalidProfile(f"unknown controls: {sorted(unknown)}")

    @classmethod
    def from_spec(cls, spec: ControlProfileSpec,
                  overrides: Optional[ControlOverrides] = None) -> "ControlProfile":
        return cls(controls=set(spec.controls), allowlist=list(spec.allowlist),
                   overrides=overrides or ControlOverrides())

    def allows(self, a: str, b: str) -> bool:
        return (a, b) in self.allowlist or (b, a) in self.allowlist

    def secured_profile(self, base: SynthProfile) -> SynthProfile:
        """Apply the enabled controls' overrides to a baseline profile.

        Combinators are min/max/scale so an enabled control can only move a
        rate in the safe direction; disabled controls leave rates untouched.
        """
        o = self.overrides
        p = replace(base)
        if "AccessControl" in self.controls:
            p.anon_frac = min(p.anon_frac, o.anon_frac_cap)
            p.cert_frac = max(p.cert_frac, o.cert_frac_floor)
        if "ConfigHardening" in self.controls:
            p.insecure_mode_frac = min(p.insecure_mode_frac, o.insecure_mode_cap)
            p.misconfig_rate = p.misconfig_rate * o.misconfig_scale
            p.fail_check_frac = p.fail_check_frac * o.fail_check_scale
        if "IDS" in self.controls:
            p.failed_write_frac = p.failed_write_frac * o.failed_write_scale
            p.audit_write_frac = p.audit_write_frac * o.audit_write_scale
        p.validate()
        return p


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _flow_rng(seed: int, flow_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, (0x1C5C4B << 32) | flow_index],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _quota_flags(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    flags = np.zeros(n, dtype=bool)
    flags[:count] = True
    rng.shuffle(flags)
    return flags


def _timestamp(offset_seconds: float) -> str:
    t = _BASE_TIME + timedelta(seconds=offset_seconds)
    return t.strftime("%Y-%m-%dT%H:%M:%S.") + f"{t.microsecond // 1000:03d}Z"


def _generate_flow(flow_index: int, src: str, dst: str, protocol: str,
                   profile: SynthProfile) -> list[LogRecord]:
    n = int(round(profile.per_flow_session_rate * profile.duration_hours))
    if n <= 0:
        return []
    rng = _flow_rng(profile.seed, flow_index)
    duration_s = profile.duration_hours * 3600.0
    slot = duration_s / n

    anon = _quota_flags(n, int(round(n * profile.anon_frac)), rng)
    # Certificates fill the non-anonymous remainder up to the configured share.
    cert_count = min(int(round(n * profile.cert_frac)), n - int(anon.sum()))
    cert = np.zeros(n, dtype=bool)
    non_anon = np.flatnonzero(~anon)
    picked = rng.permutation(non_anon)[:cert_count]
    cert[picked] = True
    insecure = _quota_flags(n, int(round(n * profile.insecure_mode_frac)), rng)
    sign_only = _quota_flags(n, n // 2, rng)

    ip_assign = np.arange(n) % profile.client_ip_pool_size
    rng.shuffle(ip_assign)

    failed = _quota_flags(n, int(round(n * profile.failed_write_frac)), rng)
    audit_count = min(int(round(n * profile.audit_write_frac)), n - int(failed.sum()))
    audit = np.zeros(n, dtype=bool)
    non_failed = np.flatnonzero(~failed)
    picked = rng.permutation(non_failed)[:audit_count]
    audit[picked] = True

    if profile.fail_check_frac > 0.0:
        checks_per_session = profile.misconfig_rate / profile.fail_check_frac
    else:
        checks_per_session = 1.0
    boundaries = np.floor(np.arange(n + 1) * checks_per_session).astype(np.int64)
    total_checks = int(boundaries[-1])
    check_fail = _quota_flags(total_checks,
                              int(round(total_checks * profile.fail_check_frac)), rng) \
        if total_checks else np.zeros(0, dtype=bool)

    records: list[LogRecord] = []
    for i in range(n):
        base_t = i * slot
        if anon[i]:
            auth = "Anonymous"
        elif cert[i]:
            auth = "Certificate"
        else:
            auth = "Password"
        if insecure[i]:
            sec = "None"
        else:
            sec = "Sign" if sign_only[i] else "SignAndEncrypt"
        ip = f"10.{(flow_index % 250) + 1}.0.{int(ip_assign[i]) + 1}"
        session_events = 2 + int(boundaries[i + 1] - boundaries[i])
        step = slot / (session_events + 1)

        records.append(LogRecord(_timestamp(base_t), src, dst, protocol,
                                 auth, sec, "Session", ip))
        if failed[i]:
            write_event = "FailedWrite"
        elif audit[i]:
            write_event = "AuditWrite"
        else:
            write_event = "Write"
        records.append(LogRecord(_timestamp(base_t + step), src, dst, protocol,
                                 auth, sec, write_event, ip))
        for j, c in enumerate(range(int(boundaries[i]), int(boundaries[i + 1]))):
            event = "ConfigCheckFail" if check_fail[c] else "ConfigCheckPass"
            records.append(LogRecord(_timestamp(base_t + step * (j + 2)), src, dst,
                                     protocol, auth, sec, event, ip))
    return records


def generate(testbed: TestbedSpec, profile: SynthProfile) -> list[LogRecord]:
    """Baseline log stream: one sub-stream per dataflow, merged by time."""
    profile.validate()
    merged: list[tuple[str, int, int, LogRecord]] = []
    for flow_index, flow in enumerate(testbed.dataflows):
        recs = _generate_flow(flow_index, flow.src, flow.dst, flow.protocol, profile)
        merged.extend((r.timestamp, flow_index, i, r) for i, r in enumerate(recs))
    merged.sort(key=lambda t: (t[0], t[1], t[2]))
    return [t[3] for t in merged]


def generate_secured(testbed: TestbedSpec, profile: SynthProfile,
                     controls: ControlProfile) -> list[LogRecord]:
    """Secured log stream reflecting the enabled controls.

    Rate overrides are applied before generation; with NetworkSegmentation
    enabled, cross-zone dataflows that are not allowlisted produce no
    records at all.  Flow indexes match :func:`generate` so an empty control
    set reproduces the baseline byte-for-byte.
    """
    secured = controls.secured_profile(profile)
    zones = {p.name: p.zone for p in testbed.products}
    segmented = "NetworkSegmentation" in controls.controls
    merged: list[tuple[str, int, int, LogRecord]] = []
    for flow_index, flow in enumerate(testbed.dataflows):
        if segmented and zones[flow.src] != zones[flow.dst] \
                and not controls.allows(flow.src, flow.dst):
            continue
        recs = _generate_flow(flow_index, flow.src, flow.dst, flow.protocol, secured)
        merged.extend((r.timestamp, flow_index, i, r) for i, r in enumerate(recs))
    merged.sort(key=lambda t: (t[0], t[1], t[2]))
    return [t[3] for t in merged]


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def records_to_csv(records: list[LogRecord]) -> bytes:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_CSV_HEADER)
    for r in records:
        writer.writerow([r.timestamp, r.src, r.dst, r.protocol, r.auth_mode,
                         r.security_mode, r.event, r.client_ip])
    return buf.getvalue().encode("utf-8")


def write_log_csv(records: list[LogRecord], path: str | Path) -> None:
    Path(path).write_bytes(records_to_csv(records))


def load_log_csv(path: str | Path) -> list[LogRecord]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(StringIO(text))
    header = reader.fieldnames or []
    for col in LOG_CSV_HEADER:
        if col not in header:
            raise MissingColumn(f"{path}: missing required column {col!r}")
    records = []
    for row in reader:
        records.append(LogRecord(
            timestamp=row["timestamp"],
            src=row["src"],
            dst=row["dst"],
            protocol=row["protocol"],
            auth_mode=row["authMode"],
            security_mode=row["securityMode"],
            event=row["event"],
            client_ip=row["clientIp"],
        ))
    return records
