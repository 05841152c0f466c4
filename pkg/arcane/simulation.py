from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml
from django.core.exceptions import ValidationError
from django.utils.dateparse import parse_date

from .fingerprints import (
    DEFAULT_CATALOG,
    CallbackTelemetry,
    OsFamily,
    ToolCluster,
    ToolClusterCatalog,
    format_timestamp,
)
from .services.seeds import make_rng, validate_seed
from .utils.normalize import (
    is_actor_id,
    is_country_code,
    normalize_country,
    normalize_locale,
    normalize_text,
    normalize_tools,
)

logger = logging.getLogger(__name__)

DEFAULT_ROSTER_PATH = Path(__file__).resolve().parent / "data" / "roster.yaml"
ROSTER_VERSION = 1

DEFAULT_CAMPAIGNS_PER_ACTOR = 12
DEFAULT_WINDOW_START = date(2024, 1, 1)
DEFAULT_WINDOW_END = date(2025, 6, 30)
DEFAULT_SEED = 20240101

MIN_CALLBACKS = 3
MAX_CALLBACKS = 8
CAMPAIGN_SPAN_DAYS = 14
OFF_HOURS_NOISE = 0.10
DWELL_LOG_SIGMA = 0.5
TOOL_INCLUSION_PROB = 0.8
OS_CONSISTENCY = 0.85
ANALYST_TOOL_PROB = 0.15
MAX_EVASION = 0.5

# Share of callbacks that leave through relay infrastructure abroad.
RELAY_EGRESS_PROB = 0.4

# A campaign skips one of these stages with STAGE_SKIP_PROB.
SKIPPABLE_CLUSTERS = ("ad_recon", "nation_state_implants")
STAGE_SKIP_PROB = 0.7

# Evasion effects as multiples of the level e: churn + e/8, locale spoof e/4,
# country spoof e/8. TOR always gets the full + e.
EVASION_CHURN_SHARE = 0.125
EVASION_LOCALE_SHARE = 0.25
EVASION_COUNTRY_SHARE = 0.125

GENERIC_TOOLS = (
    "PowerShell",
    "PsExec",
    "Rclone",
    "7-Zip",
    "ngrok",
    "Chisel",
    "AnyDesk",
    "certutil",
    "Plink",
    "WinRAR",
)

SPOOF_COUNTRIES = ("US", "DE", "NL", "FR", "GB", "SG", "JP", "BR", "CA", "SE", "CH", "RO", "UA", "TR", "IN")
SPOOF_LOCALES = ("de_DE", "fr_FR", "es_ES", "pt_BR", "ja_JP", "en_GB", "nl_NL", "tr_TR", "ko_KR", "it_IT")

TOR_EXIT_ASNS = ("AS60729", "AS208323", "AS53667", "AS24940", "AS16276")
VPN_PROVIDER_ASNS = ("AS9009", "AS60068", "AS212238", "AS136787", "AS51852")
SHARED_POOL_SIZE = 40
ACTOR_ASN_COUNT = 3
ACTOR_IP_POOL_SIZE = 16


@dataclass(frozen=True)
class ActorProfile:
    actor_id: str
    alias: str
    origin_country: str
    sophistication: float
    tor_prob: float
    vpn_prob: float
    tool_churn: float
    ip_rotation: float
    mean_dwell_hours: float
    preferred_locale: str
    base_toolset: tuple[str, ...]
    working_hours: tuple[int, int]
    utc_offset: int
    vm_prob: float = 0.4
    os_family: str = OsFamily.WINDOWS.value

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_toolset", tuple(self.base_toolset))
        object.__setattr__(self, "working_hours", tuple(self.working_hours))
        self.full_clean()

    def full_clean(self) -> None:
        errors: dict[str, str] = {}
        if not is_actor_id(self.actor_id):
            errors["actor_id"] = f"Invalid actor id {self.actor_id!r}."
        if not is_country_code(self.origin_country):
            errors["origin_country"] = f"Invalid origin country {self.origin_country!r}."
        for name in ("sophistication", "tor_prob", "vpn_prob", "tool_churn", "ip_rotation", "vm_prob"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                errors[name] = f"{name} must lie in [0, 1], got {value!r}."
        if not isinstance(self.mean_dwell_hours, (int, float)) or not self.mean_dwell_hours > 0:
            errors["mean_dwell_hours"] = "Mean dwell must be positive."
        if not self.base_toolset:
            errors["base_toolset"] = "Base toolset must not be empty."
        elif len(set(self.base_toolset)) != len(self.base_toolset):
            errors["base_toolset"] = "Base toolset contains duplicates."
        if len(self.working_hours) != 2 or not 0 <= self.working_hours[0] < self.working_hours[1] <= 24:
            errors["working_hours"] = "Working hours must be (start, end) with 0 <= start < end <= 24."
        if not -12 <= self.utc_offset <= 14:
            errors["utc_offset"] = "UTC offset must lie in [-12, 14]."
        if self.os_family not in OsFamily.values:
            errors["os_family"] = f"Unknown OS family {self.os_family!r}."
        if errors:
            raise ValidationError(errors)

    @property
    def max_evasion(self) -> float:
        return self.sophistication / 2.0

    def to_dict(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "alias": self.alias,
            "origin_country": self.origin_country,
            "sophistication": self.sophistication,
            "tor_prob": self.tor_prob,
            "vpn_prob": self.vpn_prob,
            "vm_prob": self.vm_prob,
            "tool_churn": self.tool_churn,
            "ip_rotation": self.ip_rotation,
            "mean_dwell_hours": self.mean_dwell_hours,
            "preferred_locale": self.preferred_locale,
            "os_family": self.os_family,
            "base_toolset": list(self.base_toolset),
            "working_hours": list(self.working_hours),
            "utc_offset": self.utc_offset,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> ActorProfile:
        required = (
            "actor_id",
            "alias",
            "origin_country",
            "sophistication",
            "tor_prob",
            "vpn_prob",
            "tool_churn",
            "ip_rotation",
            "mean_dwell_hours",
            "preferred_locale",
            "base_toolset",
            "working_hours",
            "utc_offset",
        )
        missing = {name: "This field is required." for name in required if name not in payload}
        if missing:
            raise ValidationError(missing)
        return cls(
            actor_id=normalize_text(str(payload["actor_id"])),
            alias=normalize_text(str(payload["alias"])).upper(),
            origin_country=normalize_country(str(payload["origin_country"])),
            sophistication=float(payload["sophistication"]),
            tor_prob=float(payload["tor_prob"]),
            vpn_prob=float(payload["vpn_prob"]),
            tool_churn=float(payload["tool_churn"]),
            ip_rotation=float(payload["ip_rotation"]),
            mean_dwell_hours=float(payload["mean_dwell_hours"]),
            preferred_locale=normalize_locale(str(payload["preferred_locale"])),
            base_toolset=tuple(normalize_tools(payload["base_toolset"])),
            working_hours=tuple(int(item) for item in payload["working_hours"]),
            utc_offset=int(payload["utc_offset"]),
            vm_prob=float(payload.get("vm_prob", 0.4)),
            os_family=str(payload.get("os_family", OsFamily.WINDOWS.value)).strip().lower(),
        )


@dataclass(frozen=True)
class Campaign:
    campaign_id: str
    actor_id: str
    start_date: date
    evasion_level: float
    callbacks: tuple[CallbackTelemetry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "callbacks", tuple(self.callbacks))
        errors: dict[str, str] = {}
        if not self.campaign_id:
            errors["campaign_id"] = "Campaign id is required."
        if not is_actor_id(self.actor_id):
            errors["actor_id"] = f"Invalid actor id {self.actor_id!r}."
        if not 0.0 <= self.evasion_level <= MAX_EVASION:
            errors["evasion_level"] = f"Evasion level must lie in [0, {MAX_EVASION}]."
        if not self.callbacks:
            errors["callbacks"] = "Campaign needs at least one callback."
        if errors:
            raise ValidationError(errors)

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "actor_id": self.actor_id,
            "start_date": self.start_date.isoformat(),
            "evasion_level": self.evasion_level,
            "callbacks": [callback.to_dict() for callback in self.callbacks],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> Campaign:
        start_date = parse_date(str(payload.get("start_date", "")))
        if start_date is None:
            raise ValidationError({"start_date": "Invalid or missing start date."})
        callbacks = payload.get("callbacks")
        if not isinstance(callbacks, list):
            raise ValidationError({"callbacks": "Callbacks must be a list."})
        return cls(
            campaign_id=str(payload.get("campaign_id", "")),
            actor_id=str(payload.get("actor_id", "")),
            start_date=start_date,
            evasion_level=float(payload.get("evasion_level", 0.0)),
            callbacks=tuple(CallbackTelemetry.from_dict(item) for item in callbacks),
        )


@dataclass(frozen=True)
class DatasetConfig:
    actors: tuple[ActorProfile, ...]
    campaigns_per_actor: int = DEFAULT_CAMPAIGNS_PER_ACTOR
    window_start: date = DEFAULT_WINDOW_START
    window_end: date = DEFAULT_WINDOW_END
    seed: int = DEFAULT_SEED
    evasion_enabled: bool = True
    evasion_override: float | None = None
    catalog: ToolClusterCatalog = field(default=DEFAULT_CATALOG, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "actors", tuple(self.actors))
        if not self.actors:
            raise ValueError("Dataset config needs at least one actor.")
        actor_ids = [actor.actor_id for actor in self.actors]
        if len(set(actor_ids)) != len(actor_ids):
            raise ValueError("Actor ids in the roster must be unique.")
        if self.campaigns_per_actor < 1:
            raise ValueError("campaigns_per_actor must be at least 1.")
        if not self.window_start < self.window_end:
            raise ValueError("window_start must precede window_end.")
        validate_seed(self.seed)
        if self.evasion_override is not None and not 0.0 <= self.evasion_override <= 1.0:
            raise ValueError("evasion_override must lie in [0, 1].")

    @property
    def actor_ids(self) -> tuple[str, ...]:
        return tuple(actor.actor_id for actor in self.actors)

    def to_dict(self) -> dict:
        return {
            "actors": [actor.to_dict() for actor in self.actors],
            "campaigns_per_actor": self.campaigns_per_actor,
            "window_start": self.window_start.isoformat(),
            "window_end": self.window_end.isoformat(),
            "seed": self.seed,
            "evasion_enabled": self.evasion_enabled,
            "evasion_override": self.evasion_override,
            "tool_clusters": {cluster.name: sorted(cluster.tools) for cluster in self.catalog.clusters},
        }


def load_roster(path: Path | str) -> list[ActorProfile]:
    roster_path = Path(path)
    try:
        payload = yaml.safe_load(roster_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ValueError(f"Roster file not found: {roster_path}") from exc
    except yaml.YAMLError as exc:
        raise ValueError(f"{roster_path}: invalid roster file: {exc}") from exc

    if isinstance(payload, dict):
        version = payload.get("version", ROSTER_VERSION)
        if version != ROSTER_VERSION:
            raise ValueError(f"{roster_path}: unsupported roster version {version!r}.")
        entries = payload.get("actors")
    else:
        entries = payload
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{roster_path}: roster must list at least one actor.")

    profiles: list[ActorProfile] = []
    for index, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ValueError(f"{roster_path}: actor #{index + 1} is not a mapping.")
        try:
            profiles.append(ActorProfile.from_dict(entry))
        except ValidationError as exc:
            raise ValueError(f"{roster_path}: actor #{index + 1}: {exc.message_dict}") from exc
    return profiles


@lru_cache(maxsize=1)
def _default_roster() -> tuple[ActorProfile, ...]:
    return tuple(load_roster(DEFAULT_ROSTER_PATH))


def default_actor_roster() -> list[ActorProfile]:
    return list(_default_roster())


def evasion_level(profile: ActorProfile, campaign_index: int, total_campaigns: int) -> float:
    if total_campaigns < 1:
        raise ValueError("total_campaigns must be at least 1.")
    if not 0 <= campaign_index < total_campaigns:
        raise ValueError(
            f"campaign_index {campaign_index} outside [0, {total_campaigns - 1}]."
        )
    if total_campaigns == 1:
        return 0.0
    return profile.max_evasion * campaign_index / (total_campaigns - 1)


def characteristic_clusters(
    profile: ActorProfile, catalog: ToolClusterCatalog = DEFAULT_CATALOG
) -> list[ToolCluster]:
    return catalog.clusters_for(profile.base_toolset)


def _campaign_evasion(config: DatasetConfig, profile: ActorProfile, index: int) -> float:
    if not config.evasion_enabled:
        return 0.0
    if config.evasion_override is not None:
        return config.evasion_override * profile.max_evasion
    return evasion_level(profile, index, config.campaigns_per_actor)


def _random_ip(rng: np.random.Generator, first_octet: int | None = None) -> str:
    octets = rng.integers(1, 255, size=4)
    if first_octet is not None:
        octets[0] = first_octet
    return ".".join(str(int(item)) for item in octets)


@dataclass(frozen=True)
class _Endpoint:
    ip: str
    asn: str


def _shared_pool(rng: np.random.Generator, asns: tuple[str, ...]) -> list[_Endpoint]:
    return [_Endpoint(ip=_random_ip(rng), asn=asns[index % len(asns)]) for index in range(SHARED_POOL_SIZE)]


def _actor_pool(rng: np.random.Generator) -> list[_Endpoint]:
    asns = [f"AS{int(rng.integers(10000, 65000))}" for _ in range(ACTOR_ASN_COUNT)]
    prefixes = [int(rng.integers(11, 223)) for _ in range(ACTOR_ASN_COUNT)]
    pool: list[_Endpoint] = []
    for index in range(ACTOR_IP_POOL_SIZE):
        slot = index % ACTOR_ASN_COUNT
        pool.append(_Endpoint(ip=_random_ip(rng, prefixes[slot]), asn=asns[slot]))
    return pool


def _campaign_dates(config: DatasetConfig, rng: np.random.Generator) -> list[date]:
    # Independent uniform days across the window, in chronological order.
    span_days = (config.window_end - config.window_start).days
    offsets = np.sort(rng.integers(0, span_days + 1, size=config.campaigns_per_actor))
    return [config.window_start + timedelta(days=int(offset)) for offset in offsets]


def _campaign_toolset(
    profile: ActorProfile,
    churn: float,
    tool_pool: list[str],
    clusters: list[ToolCluster],
    rng: np.random.Generator,
) -> list[str]:
    toolset = list(profile.base_toolset)
    for position in range(len(toolset)):
        if rng.random() >= churn:
            continue
        candidates = [tool for tool in tool_pool if tool not in toolset]
        if candidates:
            toolset[position] = candidates[int(rng.integers(len(candidates)))]
    for cluster in clusters:
        if cluster.matches(toolset):
            continue
        own = [tool for tool in profile.base_toolset if cluster.matches([tool])]
        toolset.append(own[int(rng.integers(len(own)))])
    skippable = [cluster for cluster in clusters if cluster.name in SKIPPABLE_CLUSTERS]
    if skippable and rng.random() < STAGE_SKIP_PROB:
        skipped = skippable[int(rng.integers(len(skippable)))]
        remaining = [tool for tool in toolset if not skipped.matches([tool])]
        if remaining:
            toolset = remaining
    return toolset


def _callback_hour(profile: ActorProfile, rng: np.random.Generator) -> int:
    start, end = profile.working_hours
    off_hours = [hour for hour in range(24) if not start <= hour < end]
    if off_hours and rng.random() < OFF_HOURS_NOISE:
        return off_hours[int(rng.integers(len(off_hours)))]
    return int(rng.integers(start, end))


def _callback_tools(toolset: list[str], is_vm: bool, catalog: ToolClusterCatalog, rng: np.random.Generator) -> frozenset[str]:
    chosen = [tool for tool in toolset if rng.random() < TOOL_INCLUSION_PROB]
    if not chosen:
        chosen = [toolset[int(rng.integers(len(toolset)))]]
    if is_vm and rng.random() < ANALYST_TOOL_PROB:
        analyst = sorted(catalog.clusters[-1].tools)
        chosen.append(analyst[int(rng.integers(len(analyst)))])
    return frozenset(chosen)


def _os_family(profile: ActorProfile, rng: np.random.Generator) -> str:
    if rng.random() < OS_CONSISTENCY:
        return profile.os_family
    others = [value for value in OsFamily.values if value != profile.os_family]
    return others[int(rng.integers(len(others)))]


def _generate_campaign(
    config: DatasetConfig,
    profile: ActorProfile,
    index: int,
    start_date: date,
    actor_pool: list[_Endpoint],
    tor_pool: list[_Endpoint],
    vpn_pool: list[_Endpoint],
    tool_pool: list[str],
    rng: np.random.Generator,
) -> Campaign:
    evasion = _campaign_evasion(config, profile, index)
    tor_prob = min(1.0, profile.tor_prob + evasion)
    churn = min(1.0, profile.tool_churn + EVASION_CHURN_SHARE * evasion)
    locale_spoof = EVASION_LOCALE_SHARE * evasion
    country_keep = 1.0 - EVASION_COUNTRY_SHARE * evasion
    clusters = characteristic_clusters(profile, config.catalog)
    toolset = _campaign_toolset(profile, churn, tool_pool, clusters, rng)
    home = actor_pool[int(rng.integers(len(actor_pool)))]
    dwell_mu = math.log(profile.mean_dwell_hours) - DWELL_LOG_SIGMA**2 / 2.0

    callbacks: list[CallbackTelemetry] = []
    for _ in range(int(rng.integers(MIN_CALLBACKS, MAX_CALLBACKS + 1))):
        is_tor = bool(rng.random() < tor_prob)
        is_vpn = bool(rng.random() < profile.vpn_prob)
        is_vm = bool(rng.random() < profile.vm_prob)
        if is_tor:
            endpoint = tor_pool[int(rng.integers(len(tor_pool)))]
        elif is_vpn:
            endpoint = vpn_pool[int(rng.integers(len(vpn_pool)))]
        elif rng.random() < profile.ip_rotation:
            endpoint = actor_pool[int(rng.integers(len(actor_pool)))]
        else:
            endpoint = home

        locale = profile.preferred_locale
        if rng.random() < locale_spoof:
            locale = "en_US" if rng.random() < 0.5 else SPOOF_LOCALES[int(rng.integers(len(SPOOF_LOCALES)))]
        country = profile.origin_country
        if rng.random() < RELAY_EGRESS_PROB:
            country = SPOOF_COUNTRIES[int(rng.integers(len(SPOOF_COUNTRIES)))]
        if rng.random() >= country_keep:
            country = SPOOF_COUNTRIES[int(rng.integers(len(SPOOF_COUNTRIES)))]

        day = start_date + timedelta(days=int(rng.integers(1, CAMPAIGN_SPAN_DAYS + 1)))
        local_hour = _callback_hour(profile, rng)
        minute = int(rng.integers(0, 60))
        timestamp = datetime.combine(day, time(0, 0), tzinfo=timezone.utc) + timedelta(
            hours=local_hour - profile.utc_offset, minutes=minute
        )
        callbacks.append(
            CallbackTelemetry(
                timestamp=timestamp,
                source_ip=endpoint.ip,
                asn_prefix=endpoint.asn,
                is_tor=is_tor,
                is_vpn=is_vpn,
                is_vm=is_vm,
                os_family=_os_family(profile, rng),
                locale=locale,
                utc_offset=profile.utc_offset,
                country=country,
                tools=_callback_tools(toolset, is_vm, config.catalog, rng),
                dwell_hours=round(float(rng.lognormal(dwell_mu, DWELL_LOG_SIGMA)), 4),
            )
        )

    callbacks.sort(key=lambda item: (format_timestamp(item.timestamp), item.source_ip))
    return Campaign(
        campaign_id=f"{profile.actor_id}-C{index + 1:02d}",
        actor_id=profile.actor_id,
        start_date=start_date,
        evasion_level=round(evasion, 12),
        callbacks=tuple(callbacks),
    )


def generate_dataset(config: DatasetConfig) -> list[Campaign]:
    infra_rng = make_rng(config.seed, "infrastructure")
    tor_pool = _shared_pool(infra_rng, TOR_EXIT_ASNS)
    vpn_pool = _shared_pool(infra_rng, VPN_PROVIDER_ASNS)
    tool_pool = sorted(set(config.catalog.all_tools()) | set(GENERIC_TOOLS))

    campaigns: list[Campaign] = []
    for actor_index, profile in enumerate(config.actors):
        rng = make_rng(config.seed, "actor", actor_index)
        actor_pool = _actor_pool(rng)
        for index, start_date in enumerate(_campaign_dates(config, rng)):
            campaigns.append(
                _generate_campaign(
                    config,
                    profile,
                    index,
                    start_date,
                    actor_pool,
                    tor_pool,
                    vpn_pool,
                    tool_pool,
                    rng,
                )
            )

    campaigns.sort(key=lambda item: (item.start_date, item.campaign_id))
    logger.info(
        "[sim] generated %d campaigns, %d callbacks (seed=%d)",
        len(campaigns),
        sum(len(item.callbacks) for item in campaigns),
        config.seed,
    )
    return campaigns
