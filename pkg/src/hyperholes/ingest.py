"""Flow-log ingestion: parsing, time windows, host filtering, synthetic logs."""

from __future__ import annotations

import csv
import io
import ipaddress
import json
import logging
import math
import random
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from typing import IO, Any, Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

FLOW_FIELDS = (
    "timestamp",
    "action",
    "host",
    "principal",
    "pid",
    "src_ip",
    "dest_ip",
    "src_port",
    "dest_port",
    "protocol",
    "image_path",
)
REQUIRED_FIELDS = ("timestamp", "host", "dest_ip")

DEFAULT_HEADER_MAP = {name: name for name in FLOW_FIELDS} | {"timestamp": "time"}
DEFAULT_FIELD_MAP = {name: name for name in FLOW_FIELDS}

_NULL_TOKENS = {"", "-", "none", "null", "nan"}
_FALLBACK_TIME_FORMATS = (
    "%Y-%m-%d %H:%M:%S.%f",
    "%Y-%m-%d %H:%M:%S",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d %H:%M:%S.%f",
    "%m/%d %H:%M:%S",
)


class FlowFormatError(ValueError):
    """Input cannot be parsed at all (bad header, unreadable stream)."""


class RowError(ValueError):
    """A single input row is unusable; the caller records it and moves on."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FlowRecord:
    timestamp: float
    host: str
    dest_ip: str
    action: str | None = None
    principal: str | None = None
    pid: int | None = None
    src_ip: str | None = None
    src_port: int | None = None
    dest_port: int | None = None
    protocol: str | None = None
    image_path: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.timestamp) and self.timestamp >= 0):
            raise RowError(f"timestamp must be finite and nonnegative, got {self.timestamp!r}")
        for name in ("src_port", "dest_port"):
            port = getattr(self, name)
            if port is not None and not 0 <= port <= 65535:
                raise RowError(f"{name} {port} outside [0, 65535]")
        if self.pid is not None and self.pid < 0:
            raise RowError(f"negative pid {self.pid}")

    def get(self, name: str) -> Any:
        return getattr(self, name)


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str


@dataclass
class ParseResult:
    """Parsed records plus the rows that were rejected along the way.

    Behaves as a read-only sequence of the accepted records.
    """

    records: list[FlowRecord] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)

    def __iter__(self) -> Iterator[FlowRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


# -- value coercion ---------------------------------------------------------


def _is_null(value: Any) -> bool:
    return value is None or (isinstance(value, str) and value.strip().lower() in _NULL_TOKENS)


def parse_timestamp(value: Any, default_year: int = 1970) -> float:
    """Normalize a timestamp to UTC epoch seconds (millisecond precision).

    Accepts epoch numbers, RFC 3339 strings and a few log-style layouts
    such as ``9/24 13:51:28`` (the year comes from ``default_year``).
    Naive datetimes are taken to be UTC.
    """
    if isinstance(value, bool) or _is_null(value):
        raise RowError("missing timestamp")
    if isinstance(value, (int, float)):
        ts = float(value)
    else:
        text = str(value).strip()
        try:
            ts = float(text)
        except ValueError:
            ts = _parse_datetime(text, default_year).timestamp()
    if not math.isfinite(ts) or ts < 0:
        raise RowError(f"timestamp out of range: {value!r}")
    return round(ts, 3)


def _parse_datetime(text: str, default_year: int) -> datetime:
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        dt = None
        for fmt in _FALLBACK_TIME_FORMATS:
            try:
                dt = datetime.strptime(text, fmt)
            except ValueError:
                continue
            if "%Y" not in fmt:
                dt = dt.replace(year=default_year)
            break
        if dt is None:
            raise RowError(f"unrecognized timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def _parse_int(value: Any, name: str, lo: int, hi: int | None) -> int | None:
    if _is_null(value):
        return None
    if isinstance(value, bool):
        raise RowError(f"{name}: boolean is not an integer")
    try:
        number = int(value) if isinstance(value, int) else int(str(value).strip())
    except (TypeError, ValueError):
        raise RowError(f"{name}: not an integer: {value!r}") from None
    if number < lo or (hi is not None and number > hi):
        raise RowError(f"{name} {number} outside [{lo}, {hi if hi is not None else 'inf'}]")
    return number


def _parse_ip(value: Any, name: str) -> str | None:
    if _is_null(value):
        return None
    text = str(value).strip()
    try:
        ipaddress.ip_address(text)
    except ValueError:
        raise RowError(f"{name}: not an IP literal: {text!r}") from None
    return text


def _parse_str(value: Any) -> str | None:
    return None if _is_null(value) else str(value).strip()


def make_record(raw: Mapping[str, Any], default_year: int = 1970) -> FlowRecord:
    """Build a FlowRecord from a field-name -> raw value mapping."""
    for name in REQUIRED_FIELDS:
        if _is_null(raw.get(name)):
            raise RowError(f"missing required field {name!r}")
    dest_ip = _parse_ip(raw["dest_ip"], "dest_ip")
    return FlowRecord(
        timestamp=parse_timestamp(raw["timestamp"], default_year),
        host=_parse_str(raw["host"]),
        dest_ip=dest_ip,
        action=_parse_str(raw.get("action")),
        principal=_parse_str(raw.get("principal")),
        pid=_parse_int(raw.get("pid"), "pid", 0, None),
        src_ip=_parse_ip(raw.get("src_ip"), "src_ip"),
        src_port=_parse_int(raw.get("src_port"), "src_port", 0, 65535),
        dest_port=_parse_int(raw.get("dest_port"), "dest_port", 0, 65535),
        protocol=_parse_str(raw.get("protocol")),
        image_path=_parse_str(raw.get("image_path")),
    )


def _text_stream(stream: IO | bytes | str) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8"), newline="")
    if isinstance(stream, str):
        return io.StringIO(stream, newline="")
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _release(original, text: IO[str]) -> None:
    # keep the caller's binary stream open
    if isinstance(text, io.TextIOWrapper) and text is not original:
        text.detach()


# -- parsers ----------------------------------------------------------------


def parse_flow_csv(
    stream: IO | bytes | str,
    header_map: Mapping[str, str] | None = None,
    *,
    default_year: int = 1970,
) -> ParseResult:
    """Parse a delimited flow log with a header row.

    ``header_map`` maps FlowRecord field names to column names and is
    merged over :data:`DEFAULT_HEADER_MAP`. Bad rows are collected as
    rejects; a header lacking a required column is fatal.
    """
    columns = dict(DEFAULT_HEADER_MAP)
    columns.update(header_map or {})
    unknown = set(columns) - set(FLOW_FIELDS)
    if unknown:
        raise FlowFormatError(f"header_map names unknown fields: {sorted(unknown)}")

    text = _text_stream(stream)
    try:
        reader = csv.reader(text, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FlowFormatError("empty stream: no header row") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise FlowFormatError(f"unreadable header: {exc}") from None
        if len(set(header)) != len(header):
            raise FlowFormatError(f"duplicate column names in header: {header}")
        position = {name: i for i, name in enumerate(header)}
        missing = [f for f in REQUIRED_FIELDS if columns[f] not in position]
        if missing:
            raise FlowFormatError(
                "header lacks required columns: "
                + ", ".join(f"{f} (as {columns[f]!r})" for f in missing)
            )
        wanted = {f: position[c] for f, c in columns.items() if c in position}

        result = ParseResult()
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except (csv.Error, UnicodeDecodeError) as exc:
                result.rejects.append(Reject(reader.line_num, f"unreadable row: {exc}"))
                continue
            line_no = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                result.rejects.append(
                    Reject(line_no, f"expected {len(header)} fields, got {len(row)}")
                )
                continue
            try:
                raw = {f: row[i] for f, i in wanted.items()}
                result.records.append(make_record(raw, default_year))
            except RowError as exc:
                result.rejects.append(Reject(line_no, str(exc)))
    finally:
        _release(stream, text)
    return result


def _lookup(obj: Any, path: str) -> Any:
    for key in path.split("."):
        if not isinstance(obj, Mapping) or key not in obj:
            return None
        obj = obj[key]
    return obj


def parse_flow_jsonl(
    stream: IO | bytes | str,
    field_map: Mapping[str, str] | None = None,
    *,
    default_year: int = 1970,
) -> ParseResult:
    """Parse one JSON object per line; ``field_map`` gives dotted key paths."""
    paths = dict(DEFAULT_FIELD_MAP)
    paths.update(field_map or {})
    unknown = set(paths) - set(FLOW_FIELDS)
    if unknown:
        raise FlowFormatError(f"field_map names unknown fields: {sorted(unknown)}")

    result = ParseResult()
    text = _text_stream(stream)
    seen = 0
    try:
        for line_no, line in enumerate(text, start=1):
            if not line.strip():
                continue
            seen += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                result.rejects.append(Reject(line_no, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict):
                result.rejects.append(Reject(line_no, "line is not a JSON object"))
                continue
            try:
                raw = {f: _lookup(obj, p) for f, p in paths.items()}
                result.records.append(make_record(raw, default_year))
            except RowError as exc:
                result.rejects.append(Reject(line_no, str(exc)))
    finally:
        _release(stream, text)
    if seen and not result.records:
        log.warning("all %d JSON lines were rejected", seen)
    return result


def write_rejects(rejects: Iterable[Reject], stream: IO[str]) -> None:
    for r in rejects:
        stream.write(json.dumps({"line_no": r.line_no, "reason": r.reason}) + "\n")


def write_flow_csv(records: Iterable[FlowRecord], stream: IO[str]) -> None:
    """Write records with the default column names; parse_flow_csv reads them back."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([DEFAULT_HEADER_MAP[f] for f in FLOW_FIELDS])
    for rec in records:
        row = []
        for f in FLOW_FIELDS:
            value = getattr(rec, f)
            row.append("" if value is None else repr(value) if f == "timestamp" else str(value))
        writer.writerow(row)


# -- windows ----------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    """Window layout. ``start=None`` means: earliest timestamp floored to ``width``."""

    start: float | None = None
    width: float = 600.0
    stride: float | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigError(f"window width must be positive, got {self.width}")
        if self.stride is None:
            object.__setattr__(self, "stride", self.width)
        elif not self.stride > 0:
            raise ConfigError(f"window stride must be positive, got {self.stride}")

    def resolve_start(self, records: Sequence[FlowRecord]) -> float | None:
        if self.start is not None:
            return float(self.start)
        if not records:
            return None
        earliest = min(r.timestamp for r in records)
        return math.floor(earliest / self.width) * self.width


@dataclass(frozen=True)
class Window:
    window_id: int
    start: float
    end: float
    records: tuple[FlowRecord, ...] = ()

    @property
    def interval(self) -> tuple[float, float]:
        return (self.start, self.end)


def partition_windows(
    records: Sequence[FlowRecord],
    spec: WindowSpec,
    *,
    until: float | None = None,
) -> list[Window]:
    """Split records into windows ``[start + i*stride, start + i*stride + width)``.

    Windows run up to the first one containing the latest timestamp (or
    ``until``, when given, so that two record sets can share a layout).
    Empty windows are kept. Records earlier than the start are dropped.
    """
    records = list(records)
    start = spec.resolve_start(records)
    if start is None:
        if until is None:
            return []
        start = math.floor(until / spec.width) * spec.width
    kept = [r for r in records if r.timestamp >= start]
    if len(kept) < len(records):
        log.warning("dropped %d records before window start %s", len(records) - len(kept), start)
    candidates = [r.timestamp for r in kept]
    if until is not None:
        candidates.append(until)
    if not candidates:
        return []
    last = max(candidates)
    width, stride = spec.width, spec.stride

    n = max(0, math.floor((last - start - width) / stride) + 1)
    while start + n * stride + width <= last:
        n += 1
    while n > 0 and start + (n - 1) * stride + width > last:
        n -= 1
    bounds = [(start + i * stride, start + i * stride + width) for i in range(n + 1)]

    buckets: list[list[FlowRecord]] = [[] for _ in bounds]
    for rec in kept:
        t = rec.timestamp
        lo = max(0, math.floor((t - start - width) / stride))
        hi = min(len(bounds) - 1, math.floor((t - start) / stride) + 1)
        for i in range(lo, hi + 1):
            t0, t1 = bounds[i]
            if t0 <= t < t1:
                buckets[i].append(rec)
    return [
        Window(i, t0, t1, tuple(bucket))
        for i, ((t0, t1), bucket) in enumerate(zip(bounds, buckets))
    ]


def filter_hosts(records: Iterable[FlowRecord], exclude: Iterable[str]) -> list[FlowRecord]:
    excluded = set(exclude)
    return [r for r in records if r.host not in excluded]


# -- synthetic logs ---------------------------------------------------------

_HOME_PORTS = (445, 389, 88, 135, 53, 139, 636, 3268)
_IMAGES = {
    80: "firefox.exe",
    443: "firefox.exe",
    445: "System",
    3389: "mstsc.exe",
    22: "ssh.exe",
}


def host_name(i: int) -> str:
    return f"SysClient{i:04d}"


def host_ip(i: int) -> str:
    return f"10.0.{(i + 1) // 256}.{(i + 1) % 256}"


def service_pool(n_services: int) -> list[tuple[str, int]]:
    """Internal services of the synthetic network; host i uses entry ``i % n_services``."""
    return [(f"10.1.0.{k + 1}", _HOME_PORTS[k % len(_HOME_PORTS)]) for k in range(n_services)]


def private_destinations(i: int) -> list[tuple[str, int]]:
    ip = f"198.18.{(i + 1) // 256}.{(i + 1) % 256}"
    return [(ip, 80), (ip, 443)]


@dataclass(frozen=True)
class Campaign:
    """One compromised host: C2 beaconing plus contact with shared services.

    ``active`` is an offset interval (seconds) relative to the synthetic
    log's start.
    """

    host: str
    c2_ip: str
    c2_port: int
    active: tuple[float, float]
    shared_services: tuple[tuple[str, int], ...]
    beacon_period: float = 60.0
    service_period: float = 120.0

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Campaign":
        return cls(
            host=data["host"],
            c2_ip=data["c2_ip"],
            c2_port=int(data["c2_port"]),
            active=(float(data["active"][0]), float(data["active"][1])),
            shared_services=tuple((str(ip), int(port)) for ip, port in data["shared_services"]),
            beacon_period=float(data.get("beacon_period", 60.0)),
            service_period=float(data.get("service_period", 120.0)),
        )


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic network: ``n_hosts`` workstations, each with one home service.

    Home services partition the hosts, and the remaining benign traffic goes
    to per-host private destinations, so benign hyperedges never form
    containment cycles.
    """

    n_hosts: int
    span: float
    benign_rate: float
    campaigns: tuple[Campaign, ...] = ()
    rng_seed: int = 0
    start: float = 0.0
    n_services: int = 10
    private_fraction: float = 0.25

    def __post_init__(self):
        if self.n_hosts <= 0:
            raise ConfigError("n_hosts must be positive")
        if self.span <= 0 or self.benign_rate < 0 or self.n_services <= 0:
            raise ConfigError("span and n_services must be positive, benign_rate nonnegative")
        if not 0.0 <= self.private_fraction <= 1.0:
            raise ConfigError("private_fraction must lie in [0, 1]")
        hosts = {host_name(i) for i in range(self.n_hosts)}
        for c in self.campaigns:
            t0, t1 = c.active
            if not 0 <= t0 < t1 <= self.span:
                raise ConfigError(f"campaign interval {c.active} not inside [0, {self.span}]")
            if c.host not in hosts:
                raise ConfigError(f"campaign host {c.host!r} is not a synthetic host")
            if c.beacon_period <= 0 or c.service_period <= 0:
                raise ConfigError("campaign periods must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown synth config keys: {sorted(extra)}")
        kwargs = dict(data)
        kwargs["campaigns"] = tuple(Campaign.from_dict(c) for c in data.get("campaigns", ()))
        return cls(**kwargs)


def _flow(rng: random.Random, t: float, i: int, dest: tuple[str, int]) -> FlowRecord:
    ip, port = dest
    return FlowRecord(
        timestamp=round(t, 3),
        host=host_name(i),
        dest_ip=ip,
        action=rng.choice(("START-FLOW", "MESSAGE-FLOW")),
        principal=f"user{i:04d}",
        pid=rng.randrange(1000, 10000),
        src_ip=host_ip(i),
        src_port=rng.randrange(49152, 65536),
        dest_port=port,
        protocol="TCP",
        image_path=_IMAGES.get(port, "svchost.exe"),
    )


def synth_generate(config: SynthConfig) -> list[FlowRecord]:
    """Deterministic synthetic flow log for ``config`` (sorted by time)."""
    rng = random.Random(config.rng_seed)
    pool = service_pool(config.n_services)
    out: list[FlowRecord] = []

    rate = config.benign_rate / 60.0
    for i in range(config.n_hosts):
        if rate <= 0:
            break
        t = rng.expovariate(rate)
        while t < config.span:
            if rng.random() < config.private_fraction:
                dest = rng.choice(private_destinations(i))
            else:
                dest = pool[i % len(pool)]
            out.append(_flow(rng, config.start + t, i, dest))
            t += rng.expovariate(rate)

    index = {host_name(i): i for i in range(config.n_hosts)}
    for c in config.campaigns:
        i = index[c.host]
        t0, t1 = c.active
        t = t0
        while t < t1:
            beat = min(t + rng.uniform(0, 0.1 * c.beacon_period), t1 - 0.001)
            out.append(_flow(rng, config.start + beat, i, (c.c2_ip, c.c2_port)))
            t += c.beacon_period
        for dest in c.shared_services:
            t = t0
            while t < t1:
                hit = min(t + rng.uniform(0, 0.1 * c.service_period), t1 - 0.001)
                out.append(_flow(rng, config.start + hit, i, dest))
                t += c.service_period

    out.sort(key=lambda r: (r.timestamp, r.host, r.dest_ip, r.dest_port or 0, r.src_port or 0))
    return out


def read_flows(
    path: str,
    fmt: str = "csv",
    mapping: Mapping[str, str] | None = None,
    default_year: int = 1970,
) -> ParseResult:
    with open(path, "rb") as fh:
        if fmt == "csv":
            return parse_flow_csv(fh, mapping, default_year=default_year)
        if fmt == "jsonl":
            return parse_flow_jsonl(fh, mapping, default_year=default_year)
    raise ConfigError(f"unknown input format {fmt!r}")


__all__ = [
    "Campaign",
    "ConfigError",
    "FlowFormatError",
    "FlowRecord",
    "ParseResult",
    "Reject",
    "RowError",
    "SynthConfig",
    "Window",
    "WindowSpec",
    "filter_hosts",
    "parse_flow_csv",
    "parse_flow_jsonl",
    "partition_windows",
    "read_flows",
    "service_pool",
    "synth_generate",
    "write_flow_csv",
    "write_rejects",
]
