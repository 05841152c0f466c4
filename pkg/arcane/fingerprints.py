from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from django.core.exceptions import ValidationError
from django.db import models
from django.utils.dateparse import parse_date, parse_datetime
from scipy.stats import entropy

from .utils.normalize import (
    is_country_code,
    normalize_country,
    normalize_locale,
    normalize_text,
    normalize_tools,
)

logger = logging.getLogger(__name__)

FINGERPRINT_DIMENSIONS = 24
ENGLISH_LOCALE = "en_US"
ORIGIN_COUNTRIES = ("KP", "RU", "CN", "IR")
MIN_UTC_OFFSET = -12
MAX_UTC_OFFSET = 14

DWELL_MEAN_SCALE_HOURS = 24.0
DWELL_STD_SCALE_HOURS = 12.0
TOOL_COUNT_SCALE = 10.0
CALLBACK_COUNT_SATURATION = 20

FEATURE_NAMES = (
    "tor_rate",
    "vpn_rate",
    "dwell_mean",
    "dwell_std",
    "timezone",
    "vm_rate",
    "asn_diversity",
    "ip_diversity",
    "tool_consistency",
    "tool_count",
    "non_english_locale",
    "origin_kp",
    "origin_ru",
    "origin_cn",
    "origin_ir",
    "hour_entropy",
    "country_consistency",
    "log_callback_count",
    "cluster_credential_theft",
    "cluster_c2_frameworks",
    "cluster_chinese_rats",
    "cluster_ad_recon",
    "cluster_nation_state_implants",
    "cluster_analyst_tools",
)


class OsFamily(models.TextChoices):
    WINDOWS = "windows", "Windows"
    LINUX = "linux", "Linux"
    MACOS = "macos", "macOS"
    OTHER = "other", "Other"


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_timestamp(raw) -> datetime | None:
    if isinstance(raw, datetime):
        return raw
    if not isinstance(raw, str):
        return None
    try:
        return parse_datetime(raw.strip())
    except ValueError:
        return None


def _parse_day(raw) -> date | None:
    if isinstance(raw, datetime):
        return raw.date()
    if isinstance(raw, date):
        return raw
    if not isinstance(raw, str):
        return None
    try:
        return parse_date(raw.strip())
    except ValueError:
        return None


@dataclass(frozen=True)
class CallbackTelemetry:
    timestamp: datetime
    source_ip: str
    asn_prefix: str
    is_tor: bool
    is_vpn: bool
    is_vm: bool
    os_family: str
    locale: str
    utc_offset: int
    country: str
    tools: frozenset[str]
    dwell_hours: float

    def __post_init__(self) -> None:
        if isinstance(self.tools, (list, tuple, set)):
            object.__setattr__(self, "tools", frozenset(self.tools))
        if isinstance(self.timestamp, datetime) and self.timestamp.tzinfo is not None:
            object.__setattr__(self, "timestamp", self.timestamp.astimezone(timezone.utc))
        self.full_clean()

    def full_clean(self) -> None:
        errors: dict[str, str] = {}
        if not isinstance(self.timestamp, datetime):
            errors["timestamp"] = "Timestamp must be a datetime."
        elif self.timestamp.tzinfo is None or self.timestamp.utcoffset() != timezone.utc.utcoffset(None):
            errors["timestamp"] = "Timestamp must be a UTC instant."
        if not self.source_ip:
            errors["source_ip"] = "Source IP is required."
        if not self.asn_prefix:
            errors["asn_prefix"] = "ASN prefix is required."
        if self.os_family not in OsFamily.values:
            errors["os_family"] = f"Unknown OS family {self.os_family!r}."
        if not self.locale:
            errors["locale"] = "Locale is required."
        if isinstance(self.utc_offset, bool) or not isinstance(self.utc_offset, int):
            errors["utc_offset"] = "UTC offset must be an integer number of hours."
        elif not MIN_UTC_OFFSET <= self.utc_offset <= MAX_UTC_OFFSET:
            errors["utc_offset"] = (
                f"UTC offset must lie in [{MIN_UTC_OFFSET}, {MAX_UTC_OFFSET}], got {self.utc_offset}."
            )
        if not is_country_code(self.country):
            errors["country"] = f"Country must be an ISO-3166 alpha-2 code, got {self.country!r}."
        if not isinstance(self.tools, frozenset) or not all(
            isinstance(tool, str) and tool for tool in self.tools
        ):
            errors["tools"] = "Tools must be a set of non-empty names."
        if (
            not isinstance(self.dwell_hours, (int, float))
            or not math.isfinite(self.dwell_hours)
            or self.dwell_hours < 0
        ):
            errors["dwell_hours"] = "Dwell hours must be a finite non-negative number."
        if errors:
            raise ValidationError(errors)

    def to_dict(self) -> dict:
        return {
            "timestamp": format_timestamp(self.timestamp),
            "source_ip": self.source_ip,
            "asn_prefix": self.asn_prefix,
            "is_tor": self.is_tor,
            "is_vpn": self.is_vpn,
            "is_vm": self.is_vm,
            "os_family": self.os_family,
            "locale": self.locale,
            "utc_offset": self.utc_offset,
            "country": self.country,
            "tools": sorted(self.tools),
            "dwell_hours": self.dwell_hours,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> CallbackTelemetry:
        required = (
            "timestamp",
            "source_ip",
            "asn_prefix",
            "is_tor",
            "is_vpn",
            "is_vm",
            "os_family",
            "locale",
            "utc_offset",
            "country",
            "tools",
            "dwell_hours",
        )
        missing = {name: "This field is required." for name in required if name not in payload}
        if missing:
            raise ValidationError(missing)

        timestamp = _parse_timestamp(payload["timestamp"])
        if timestamp is None:
            raise ValidationError({"timestamp": f"Invalid RFC 3339 timestamp: {payload['timestamp']!r}"})
        raw_tools = payload["tools"]
        if not isinstance(raw_tools, (list, tuple)):
            raise ValidationError({"tools": "Tools must be a list of names."})
        tools = normalize_tools(raw_tools)
        if len(set(tools)) != len(tools):
            raise ValidationError({"tools": "Tool list contains duplicates."})
        flags = {name: payload[name] for name in ("is_tor", "is_vpn", "is_vm")}
        not_bool = {name: "Must be true or false." for name, value in flags.items() if not isinstance(value, bool)}
        if not_bool:
            raise ValidationError(not_bool)

        return cls(
            timestamp=timestamp,
            source_ip=normalize_text(str(payload["source_ip"])),
            asn_prefix=normalize_text(str(payload["asn_prefix"])),
            is_tor=flags["is_tor"],
            is_vpn=flags["is_vpn"],
            is_vm=flags["is_vm"],
            os_family=str(payload["os_family"]).strip().lower(),
            locale=normalize_locale(str(payload["locale"])),
            utc_offset=payload["utc_offset"],
            country=normalize_country(str(payload["country"])),
            tools=frozenset(tools),
            dwell_hours=payload["dwell_hours"],
        )


@dataclass(frozen=True)
class CampaignFingerprint:
    values: tuple[float, ...]
    campaign_id: str
    campaign_date: date
    callback_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(item) for item in self.values))
        self.full_clean()

    def full_clean(self) -> None:
        errors: dict[str, str] = {}
        if len(self.values) != FINGERPRINT_DIMENSIONS:
            errors["values"] = (
                f"Fingerprint must have {FINGERPRINT_DIMENSIONS} dimensions, got {len(self.values)}."
            )
        elif not all(math.isfinite(item) and 0.0 <= item <= 1.0 for item in self.values):
            errors["values"] = "Every fingerprint component must lie in [0, 1]."
        if not isinstance(self.campaign_date, date):
            errors["campaign_date"] = "Campaign date must be a date."
        if isinstance(self.callback_count, bool) or not isinstance(self.callback_count, int) or self.callback_count < 1:
            errors["callback_count"] = "Callback count must be a positive integer."
        if errors:
            raise ValidationError(errors)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "campaign_date": self.campaign_date.isoformat(),
            "callback_count": self.callback_count,
            "values": list(self.values),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> CampaignFingerprint:
        campaign_date = _parse_day(payload.get("campaign_date"))
        if campaign_date is None:
            raise ValidationError({"campaign_date": "Invalid or missing campaign date."})
        values = payload.get("values")
        if not isinstance(values, (list, tuple)):
            raise ValidationError({"values": "Fingerprint values must be a list."})
        return cls(
            values=tuple(values),
            campaign_id=str(payload.get("campaign_id", "")),
            campaign_date=campaign_date,
            callback_count=payload.get("callback_count", 0),
        )


@dataclass(frozen=True)
class ToolCluster:
    name: str
    tools: frozenset[str]

    def matches(self, tools: Iterable[str]) -> bool:
        folded = {tool.casefold() for tool in tools}
        return any(tool.casefold() in folded for tool in self.tools)


@dataclass(frozen=True)
class ToolClusterCatalog:
    clusters: tuple[ToolCluster, ...]

    CLUSTER_COUNT = 6

    def __post_init__(self) -> None:
        if len(self.clusters) != self.CLUSTER_COUNT:
            raise ValueError(
                f"Tool cluster catalog needs exactly {self.CLUSTER_COUNT} clusters, got {len(self.clusters)}."
            )
        empty = [cluster.name for cluster in self.clusters if not cluster.tools]
        if empty:
            raise ValueError(f"Tool clusters without tools: {', '.join(empty)}")

    @property
    def names(self) -> list[str]:
        return [cluster.name for cluster in self.clusters]

    def indicators(self, tools: Iterable[str]) -> list[float]:
        present = list(tools)
        return [1.0 if cluster.matches(present) else 0.0 for cluster in self.clusters]

    def clusters_for(self, tools: Iterable[str]) -> list[ToolCluster]:
        present = list(tools)
        return [cluster for cluster in self.clusters if cluster.matches(present)]

    def all_tools(self) -> list[str]:
        return sorted({tool for cluster in self.clusters for tool in cluster.tools})

    @classmethod
    def from_mapping(cls, mapping: dict[str, Sequence[str]]) -> ToolClusterCatalog:
        return cls(
            clusters=tuple(
                ToolCluster(name=name, tools=frozenset(normalize_tools(tools)))
                for name, tools in mapping.items()
            )
        )


# Order maps onto fingerprint dims 18-23.
DEFAULT_TOOL_CLUSTERS = {
    "credential_theft": ["Mimikatz", "LaZagne", "Rubeus", "SafetyKatz"],
    "c2_frameworks": ["Cobalt Strike", "Metasploit", "Havoc", "Sliver"],
    "chinese_rats": ["PlugX", "Gh0st RAT", "ShadowPad"],
    "ad_recon": ["BloodHound", "Impacket", "SharpHound", "AdFind"],
    "nation_state_implants": ["Turla", "ComRAT", "AppleJeus", "Winnti"],
    "analyst_tools": ["Wireshark", "IDA Pro", "Ghidra"],
}

DEFAULT_CATALOG = ToolClusterCatalog.from_mapping(DEFAULT_TOOL_CLUSTERS)


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    left, right = set(a), set(b)
    union = left | right
    if not union:
        return 1.0
    return len(left & right) / len(union)


def hour_entropy(hours: Sequence[int]) -> float:
    if len(hours) == 0:
        raise ValueError("Hour entropy needs at least one hour.")
    if any(not 0 <= int(hour) <= 23 for hour in hours):
        raise ValueError("Hours must lie in [0, 23].")
    counts = np.bincount(np.asarray(hours, dtype=int), minlength=24)
    return float(min(1.0, max(0.0, entropy(counts, base=24))))


def _mean_pairwise_jaccard(tool_sets: list[frozenset[str]]) -> float:
    if len(tool_sets) < 2:
        return 1.0
    scores = [jaccard(a, b) for a, b in combinations(tool_sets, 2)]
    return float(np.mean(scores))


def _canonical_order(callbacks: Sequence[CallbackTelemetry]) -> list[CallbackTelemetry]:
    return sorted(
        callbacks,
        key=lambda item: (
            item.timestamp,
            item.source_ip,
            item.asn_prefix,
            item.country,
            item.locale,
            item.utc_offset,
            item.dwell_hours,
            item.is_tor,
            item.is_vpn,
            item.is_vm,
            item.os_family,
            tuple(sorted(item.tools)),
        ),
    )


def extract_fingerprint(
    callbacks: Sequence[CallbackTelemetry],
    catalog: ToolClusterCatalog = DEFAULT_CATALOG,
    *,
    campaign_id: str = "",
    campaign_date: date | None = None,
) -> CampaignFingerprint:
    if not callbacks:
        raise ValueError("Cannot fingerprint a campaign without callbacks.")
    for callback in callbacks:
        callback.full_clean()

    ordered = _canonical_order(callbacks)
    n = len(ordered)
    dwell = np.array([item.dwell_hours for item in ordered], dtype=float)
    offsets = np.array([item.utc_offset for item in ordered], dtype=float)
    countries = [item.country for item in ordered]
    tool_sets = [item.tools for item in ordered]
    all_tools = set().union(*tool_sets)

    values = [
        float(np.mean([item.is_tor for item in ordered])),
        float(np.mean([item.is_vpn for item in ordered])),
        float(np.clip(dwell.mean() / DWELL_MEAN_SCALE_HOURS, 0.0, 1.0)),
        float(np.clip(dwell.std() / DWELL_STD_SCALE_HOURS, 0.0, 1.0)),
        float((offsets.mean() - MIN_UTC_OFFSET) / (MAX_UTC_OFFSET - MIN_UTC_OFFSET)),
        float(np.mean([item.is_vm for item in ordered])),
        len({item.asn_prefix for item in ordered}) / n,
        len({item.source_ip for item in ordered}) / n,
        _mean_pairwise_jaccard(tool_sets),
        float(np.clip(np.mean([len(tools) for tools in tool_sets]) / TOOL_COUNT_SCALE, 0.0, 1.0)),
        float(np.mean([item.locale != ENGLISH_LOCALE for item in ordered])),
    ]
    values.extend(countries.count(origin) / n for origin in ORIGIN_COUNTRIES)
    values.append(hour_entropy([item.timestamp.hour for item in ordered]))
    values.append(1.0 - len(set(countries)) / n)
    values.append(min(math.log(n + 1) / math.log(CALLBACK_COUNT_SATURATION), 1.0))
    values.extend(catalog.indicators(all_tools))

    clipped = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    return CampaignFingerprint(
        values=tuple(float(item) for item in clipped),
        campaign_id=campaign_id,
        campaign_date=campaign_date or ordered[0].timestamp.date(),
        callback_count=n,
    )


def _as_vector(value: CampaignFingerprint | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(value, CampaignFingerprint):
        return value.vector
    return np.asarray(value, dtype=float)


def cosine_similarity(
    a: CampaignFingerprint | Sequence[float] | np.ndarray,
    b: CampaignFingerprint | Sequence[float] | np.ndarray,
) -> float:
    left, right = _as_vector(a), _as_vector(b)
    if left.shape != right.shape:
        raise ValueError(f"Vectors differ in shape: {left.shape} vs {right.shape}.")
    denominator = float(np.linalg.norm(left) * np.linalg.norm(right))
    if denominator == 0.0:
        logger.warning("[similarity] zero-norm fingerprint, similarity defined as 0")
        return 0.0
    return float(np.clip(np.dot(left, right) / denominator, 0.0, 1.0))


def cosine_similarities(
    query: CampaignFingerprint | Sequence[float] | np.ndarray,
    matrix: np.ndarray,
) -> np.ndarray:
    vector = _as_vector(query)
    rows = np.atleast_2d(np.asarray(matrix, dtype=float))
    if rows.size == 0:
        return np.zeros(0)
    norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(vector)
    dots = rows @ vector
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    if np.any(norms == 0):
        logger.warning("[similarity] zero-norm fingerprint, similarity defined as 0")
    return np.clip(scores, 0.0, 1.0)


def pairwise_similarity_matrix(vectors: np.ndarray) -> np.ndarray:
    rows = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = rows / safe[:, None]
    matrix = np.clip(unit @ unit.T, 0.0, 1.0)
    zero = norms == 0
    if np.any(zero):
        logger.warning("[similarity] %d zero-norm fingerprints, similarity defined as 0", int(zero.sum()))
        matrix[zero, :] = 0.0
        matrix[:, zero] = 0.0
    # symmetric by construction up to rounding; enforce exactly
    return (matrix + matrix.T) / 2.0
