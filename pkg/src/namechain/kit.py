"""Sample resource types and the standard type registry.

Heterogeneity is the point: some of these resources are static pieces of
data interpreted in place, others are proxies for network services, and
the type registry is what lets one element handle the mix uniformly.

Type            Specification bytes (all UTF-8 text)
--------------  ------------------------------------------------------
string          the string itself; empty namespace
file            a URL; empty namespace
file collection a URL prefix; maps any token p to the file <prefix>p
file set        "name=url" lines; maps listed names to files
location        "host:port <32 hex>" (location manager, location id);
                maps "occupant" to the user currently there
calendar        "host:port" (calendar server); maps period names such
                as "today" to time periods
time period     "host:port <start-ms> <end-ms>"; maps a tag to the
                first event in the period carrying it
event           static text, one field per line: tag= (repeatable),
                moderator=<32 hex>, location=<resource literal>,
                file.<name>=<url> (repeatable), start=<ms>, end=<ms>;
                maps "moderator", "location" and "files"
user            "host:port <32 hex>" (user database, user id); maps
                "email" and "files" by interpreting the fetched record

Location and calendar resolution happens on the hosting server (their
client resolvers forward one step over the wire).  The user database has
no resolution support of its own, so the user type's resolver fetches
the record and maps local names client-side.

Validity policy: static data lives 24 hours, calendar period names until
the period ends, time-period tag lookups until the event starts (at
least 10 minutes), location occupancy 30 seconds, user record mappings
1 hour.  Shorter lifetimes track faster-changing bindings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import wire
from .names import (
    LocalName,
    Name,
    NameSyntaxError,
    _TOKEN_RE,
    parse_resource_literal,
    serialize_resource_literal,
)
from .resolver import (
    Clock,
    NotBoundError,
    Validity,
    system_clock,
    validity_from_duration,
)
from .resources import MalformedSpecError, ResourceDescription, TypeRegistry, derive_type_id

STRING_TYPE = derive_type_id("namechain.type.string.v1")
FILE_TYPE = derive_type_id("namechain.type.file.v1")
FILE_COLLECTION_TYPE = derive_type_id("namechain.type.file-collection.v1")
FILE_SET_TYPE = derive_type_id("namechain.type.file-set.v1")
LOCATION_TYPE = derive_type_id("namechain.type.location.v1")
CALENDAR_TYPE = derive_type_id("namechain.type.calendar.v1")
TIME_PERIOD_TYPE = derive_type_id("namechain.type.time-period.v1")
EVENT_TYPE = derive_type_id("namechain.type.event.v1")
USER_TYPE = derive_type_id("namechain.type.user.v1")

KIT_TYPE_DESCRIPTORS = (
    "namechain.type.string.v1",
    "namechain.type.file.v1",
    "namechain.type.file-collection.v1",
    "namechain.type.location.v1",
    "namechain.type.calendar.v1",
    "namechain.type.time-period.v1",
    "namechain.type.event.v1",
    "namechain.type.user.v1",
)

ENTITY_ID_LENGTH = wire.ENTITY_ID_LENGTH

# The one calendar a calendar server hosts answers RESOLVE under this
# well-known resource id.
CALENDAR_RESOURCE_ID = bytes(ENTITY_ID_LENGTH)

DAY_MS = 86_400_000
STATIC_TTL_MS = DAY_MS
OCCUPANT_TTL_MS = 30_000
USER_TTL_MS = 3_600_000
PERIOD_TAG_MIN_TTL_MS = 600_000

PERIOD_NAMES = ("today", "tomorrow", "thisweek")


def day_bounds(now: int) -> tuple[int, int]:
    """UTC day [start, end) containing `now`."""
    day = now // DAY_MS
    return day * DAY_MS, (day + 1) * DAY_MS


def week_bounds(now: int) -> tuple[int, int]:
    """UTC week [start, end) containing `now`, starting Monday."""
    day = now // DAY_MS
    monday = day - (day + 3) % 7  # epoch day 0 was a Thursday
    return monday * DAY_MS, (monday + 7) * DAY_MS


def period_bounds(period_name: str, now: int) -> Optional[tuple[int, int]]:
    if period_name == "today":
        return day_bounds(now)
    if period_name == "tomorrow":
        start, end = day_bounds(now)
        return end, end + DAY_MS
    if period_name == "thisweek":
        return week_bounds(now)
    return None


# --- description constructors

def string_description(text: str) -> ResourceDescription:
    return ResourceDescription(STRING_TYPE, text.encode("utf-8"))


def file_description(url: str) -> ResourceDescription:
    return ResourceDescription(FILE_TYPE, url.encode("utf-8"))


def file_collection_description(url_prefix: str) -> ResourceDescription:
    return ResourceDescription(FILE_COLLECTION_TYPE, url_prefix.encode("utf-8"))


def file_set_description(files: tuple[tuple[str, str], ...]) -> ResourceDescription:
    return ResourceDescription(FILE_SET_TYPE, encode_file_set_spec(files))


def location_description(manager_address: str, location_id: bytes) -> ResourceDescription:
    return ResourceDescription(LOCATION_TYPE, wire.encode_addr_id_spec(manager_address, location_id))


def calendar_description(server_address: str) -> ResourceDescription:
    return ResourceDescription(CALENDAR_TYPE, server_address.encode("utf-8"))


def time_period_description(server_address: str, start: int, end: int) -> ResourceDescription:
    if start >= end:
        raise ValueError("time period start must precede end")
    return ResourceDescription(TIME_PERIOD_TYPE, f"{server_address} {start} {end}".encode("utf-8"))


def user_description(userdb_address: str, user_id: bytes) -> ResourceDescription:
    return ResourceDescription(USER_TYPE, wire.encode_addr_id_spec(userdb_address, user_id))


def event_description(fields: "EventFields") -> ResourceDescription:
    return ResourceDescription(EVENT_TYPE, encode_event_spec(fields))


# --- specification codecs

def _decode_utf8(spec: bytes, owner_type: bytes) -> str:
    try:
        return spec.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedSpecError(owner_type, "specification is not UTF-8") from None


def parse_calendar_spec(spec: bytes) -> str:
    address = _decode_utf8(spec, CALENDAR_TYPE)
    try:
        wire.parse_address(address)
    except ValueError as exc:
        raise MalformedSpecError(CALENDAR_TYPE, str(exc)) from None
    return address


def parse_time_period_spec(spec: bytes) -> tuple[str, int, int]:
    text = _decode_utf8(spec, TIME_PERIOD_TYPE)
    parts = text.split(" ")
    if len(parts) != 3:
        raise MalformedSpecError(TIME_PERIOD_TYPE, "expected 'host:port <start-ms> <end-ms>'")
    try:
        wire.parse_address(parts[0])
        start, end = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise MalformedSpecError(TIME_PERIOD_TYPE, str(exc)) from None
    if start >= end:
        raise MalformedSpecError(TIME_PERIOD_TYPE, "start must precede end")
    return parts[0], start, end


def encode_file_set_spec(files: tuple[tuple[str, str], ...]) -> bytes:
    lines = []
    for name, url in sorted(files):
        _require_token(name, FILE_SET_TYPE, "file name")
        _require_url(url, FILE_SET_TYPE)
        lines.append(f"{name}={url}\n")
    return "".join(lines).encode("utf-8")


def parse_file_set_spec(spec: bytes) -> dict[str, str]:
    text = _decode_utf8(spec, FILE_SET_TYPE)
    files: dict[str, str] = {}
    for line in text.splitlines():
        name, sep, url = line.partition("=")
        if not sep or not name or not url:
            raise MalformedSpecError(FILE_SET_TYPE, f"malformed line {line!r}")
        if name in files:
            raise MalformedSpecError(FILE_SET_TYPE, f"duplicate file name {name!r}")
        files[name] = url
    return files


def _require_token(value: str, owner_type: bytes, what: str) -> None:
    # Same token alphabet as the name syntax.
    if not _TOKEN_RE.fullmatch(value):
        raise MalformedSpecError(owner_type, f"{what} must be a token, got {value!r}")


def _require_url(value: str, owner_type: bytes) -> None:
    if not value or any(c.isspace() for c in value):
        raise MalformedSpecError(owner_type, f"URL must be non-empty and whitespace-free, got {value!r}")


@dataclass(frozen=True)
class EventFields:
    """Decoded static event data."""

    tags: tuple[str, ...]
    moderator: bytes
    location: ResourceDescription
    files: tuple[tuple[str, str], ...]
    start: int
    end: int


def encode_event_spec(fields: EventFields) -> bytes:
    lines = [f"tag={t}\n" for t in fields.tags]
    lines.append(f"moderator={fields.moderator.hex()}\n")
    lines.append(f"location={serialize_resource_literal(fields.location)}\n")
    lines.extend(f"file.{name}={url}\n" for name, url in fields.files)
    lines.append(f"start={fields.start}\n")
    lines.append(f"end={fields.end}\n")
    return "".join(lines).encode("utf-8")


def parse_event_spec(spec: bytes) -> EventFields:
    text = _decode_utf8(spec, EVENT_TYPE)
    tags: list[str] = []
    files: list[tuple[str, str]] = []
    seen_files: set[str] = set()
    once: dict[str, str] = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if not sep or not key:
            raise MalformedSpecError(EVENT_TYPE, f"malformed line {line!r}")
        if key == "tag":
            _require_token(value, EVENT_TYPE, "tag")
            tags.append(value)
        elif key.startswith("file."):
            name = key[5:]
            _require_token(name, EVENT_TYPE, "file name")
            _require_url(value, EVENT_TYPE)
            if name in seen_files:
                raise MalformedSpecError(EVENT_TYPE, f"duplicate file name {name!r}")
            seen_files.add(name)
            files.append((name, value))
        elif key in ("moderator", "location", "start", "end"):
            if key in once:
                raise MalformedSpecError(EVENT_TYPE, f"duplicate field {key!r}")
            once[key] = value
        else:
            raise MalformedSpecError(EVENT_TYPE, f"unknown field {key!r}")
    for required in ("moderator", "location", "start", "end"):
        if required not in once:
            raise MalformedSpecError(EVENT_TYPE, f"missing field {required!r}")
    moderator_hex = once["moderator"]
    if len(moderator_hex) != 2 * ENTITY_ID_LENGTH or moderator_hex != moderator_hex.lower():
        raise MalformedSpecError(EVENT_TYPE, "moderator must be 32 lowercase hex digits")
    try:
        moderator = bytes.fromhex(moderator_hex)
    except ValueError:
        raise MalformedSpecError(EVENT_TYPE, "moderator is not hex") from None
    try:
        location = parse_resource_literal(once["location"])
    except NameSyntaxError as exc:
        raise MalformedSpecError(EVENT_TYPE, f"bad location literal: {exc}") from None
    try:
        start, end = int(once["start"]), int(once["end"])
    except ValueError:
        raise MalformedSpecError(EVENT_TYPE, "start and end must be integers") from None
    if start >= end:
        raise MalformedSpecError(EVENT_TYPE, "start must precede end")
    return EventFields(tuple(tags), moderator, location, tuple(files), start, end)


def files_common_prefix(files: tuple[tuple[str, str], ...]) -> Optional[str]:
    """Prefix P with url == P + name for every entry, if one exists."""
    if not files:
        return None
    prefix: Optional[str] = None
    for name, url in files:
        if not url.endswith(name):
            return None
        candidate = url[: len(url) - len(name)]
        if prefix is None:
            prefix = candidate
        elif prefix != candidate:
            return None
    return prefix


# --- resolver implementations

EventsQuery = Callable[[str, int, int, str], list[bytes]]
UserFetch = Callable[[str, bytes], tuple[str, str]]


class EmptyNamespaceResolver:
    """For resources that name nothing (strings, single files)."""

    def __init__(self, kind: str) -> None:
        self.kind = kind

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        raise NotBoundError(local.primary, f"a {self.kind} names no other resources")


class FileCollectionResolver:
    """Maps any token to a file by prepending the collection's URL prefix."""

    def __init__(self, url_prefix: str, clock: Clock) -> None:
        self.url_prefix = url_prefix
        self.clock = clock

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        description = file_description(self.url_prefix + local.primary)
        return description, validity_from_duration(self.clock(), STATIC_TTL_MS)


class FileSetResolver:
    """Maps explicitly listed file names to their URLs."""

    def __init__(self, files: dict[str, str], clock: Clock) -> None:
        self.files = files
        self.clock = clock

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        url = self.files.get(local.primary)
        if url is None:
            raise NotBoundError(local.primary, "not in this file set")
        return file_description(url), validity_from_duration(self.clock(), STATIC_TTL_MS)


class EventResolver:
    """Resolves names from an event by interpreting its static data."""

    def __init__(self, fields: EventFields, clock: Clock, userdb_address: Optional[str]) -> None:
        self.fields = fields
        self.clock = clock
        self.userdb_address = userdb_address

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        validity = validity_from_duration(self.clock(), STATIC_TTL_MS)
        if local.primary == "moderator":
            if self.userdb_address is None:
                raise NotBoundError(local.primary, "no user database configured")
            return user_description(self.userdb_address, self.fields.moderator), validity
        if local.primary == "location":
            return self.fields.location, validity
        if local.primary == "files":
            prefix = files_common_prefix(self.fields.files)
            if prefix is not None:
                return file_collection_description(prefix), validity
            return file_set_description(self.fields.files), validity
        raise NotBoundError(local.primary, "events bind moderator, location and files")


class UserResolver:
    """Separate resolution code for users: fetch the record, map names.

    The user database itself has no resolution support; this resolver
    queries it for the record and interprets the fields.
    """

    def __init__(
        self, userdb_address: str, user_id: bytes, clock: Clock, fetch: UserFetch
    ) -> None:
        self.userdb_address = userdb_address
        self.user_id = user_id
        self.clock = clock
        self.fetch = fetch

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        if local.primary not in ("email", "files"):
            raise NotBoundError(local.primary, "users bind email and files")
        email, fileprefix = self.fetch(self.userdb_address, self.user_id)
        validity = validity_from_duration(self.clock(), USER_TTL_MS)
        if local.primary == "email":
            return string_description(email), validity
        return file_collection_description(fileprefix), validity


class TimePeriodResolver:
    """Maps a tag to the first event in the period carrying that tag.

    Events are ordered by start instant, ties broken by event id; the
    query source already returns them in that order.
    """

    def __init__(
        self, server_address: str, start: int, end: int, clock: Clock, query: EventsQuery
    ) -> None:
        self.server_address = server_address
        self.start = start
        self.end = end
        self.clock = clock
        self.query = query

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        specs = self.query(self.server_address, self.start, self.end, local.primary)
        if not specs:
            raise NotBoundError(local.primary, "no event in the period carries this tag")
        spec = specs[0]
        event = parse_event_spec(spec)
        # The mapping can only change once the event begins; never issue
        # for less than the floor.
        now = self.clock()
        expires_at = max(event.start, now + PERIOD_TAG_MIN_TTL_MS)
        return ResourceDescription(EVENT_TYPE, spec), Validity(expires_at)


class CalendarResolver:
    """Native calendar namespace: period names to time periods."""

    def __init__(self, server_address: str, clock: Clock) -> None:
        self.server_address = server_address
        self.clock = clock

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        bounds = period_bounds(local.primary, self.clock())
        if bounds is None:
            raise NotBoundError(local.primary, f"calendars bind {', '.join(PERIOD_NAMES)}")
        start, end = bounds
        # The mapping from the period name drifts when the period ends.
        return time_period_description(self.server_address, start, end), Validity(end)


class LocationProxyResolver:
    """Client side of a location: one resolution step over the wire."""

    def __init__(self, manager_address: str, location_id: bytes, timeout: float) -> None:
        self.manager_address = manager_address
        self.location_id = location_id
        self.timeout = timeout

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        resolution = wire.resolve_remote(
            self.manager_address, self.location_id, _single(local), self.timeout
        )
        return resolution.description, resolution.validity


class CalendarProxyResolver:
    """Client side of a calendar: one resolution step over the wire."""

    def __init__(self, server_address: str, timeout: float) -> None:
        self.server_address = server_address
        self.timeout = timeout

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        resolution = wire.resolve_remote(
            self.server_address, CALENDAR_RESOURCE_ID, _single(local), self.timeout
        )
        return resolution.description, resolution.validity


def _single(local: LocalName) -> Name:
    return Name((local,))


class LocationStateResolver:
    """Native occupant binding, backed by live occupancy state.

    Multiple occupants resolve to the earliest arrival; an empty
    location leaves the name unbound.
    """

    def __init__(
        self,
        occupants: Callable[[], list[bytes]],
        userdb_address: str,
        clock: Clock,
        identity: str = "location",
    ) -> None:
        self.occupants = occupants
        self.userdb_address = userdb_address
        self.clock = clock
        self.identity = identity

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        if local.primary != "occupant":
            raise NotBoundError(local.primary, "locations bind occupant")
        present = self.occupants()
        if not present:
            raise NotBoundError(local.primary, "location is empty")
        description = user_description(self.userdb_address, present[0])
        return description, validity_from_duration(self.clock(), OCCUPANT_TTL_MS)


# --- pretty-printers for the command line

def _pretty_string(spec: bytes) -> str:
    return f'string "{spec.decode("utf-8")}"'


def _pretty_file(spec: bytes) -> str:
    return f"file {spec.decode('utf-8')}"


def _pretty_collection(spec: bytes) -> str:
    return f"file collection with prefix {spec.decode('utf-8')}"


def _pretty_file_set(spec: bytes) -> str:
    files = parse_file_set_spec(spec)
    return f"file set of {len(files)}: {', '.join(sorted(files))}"


def _pretty_location(spec: bytes) -> str:
    address, location_id = wire.parse_addr_id_spec(spec, LOCATION_TYPE)
    return f"location {location_id.hex()} managed at {address}"


def _pretty_calendar(spec: bytes) -> str:
    return f"calendar at {parse_calendar_spec(spec)}"


def _pretty_time_period(spec: bytes) -> str:
    address, start, end = parse_time_period_spec(spec)
    return f"time period [{start}, {end}) on calendar at {address}"


def _pretty_event(spec: bytes) -> str:
    fields = parse_event_spec(spec)
    tags = ",".join(fields.tags) or "untagged"
    return f"event tagged {tags}, start={fields.start}, end={fields.end}"


def _pretty_user(spec: bytes) -> str:
    address, user_id = wire.parse_addr_id_spec(spec, USER_TYPE)
    return f"user {user_id.hex()} in database at {address}"


def build_registry(
    clock: Clock = system_clock,
    userdb_address: Optional[str] = None,
    *,
    timeout: float = wire.DEFAULT_TIMEOUT,
    events_query: Optional[EventsQuery] = None,
    user_fetch: Optional[UserFetch] = None,
) -> TypeRegistry:
    """Registry with every sample type plus the remote proxy type.

    userdb_address is deployment knowledge the event type needs: event
    data carries only the moderator's identifier, not where user records
    live.  events_query and user_fetch default to wire queries and exist
    so servers can short-circuit lookups into their own state (and tests
    can avoid sockets).
    """
    query = events_query if events_query is not None else wire.query_events
    fetch = user_fetch if user_fetch is not None else wire.get_user

    registry = TypeRegistry()

    def string_factory(spec: bytes) -> EmptyNamespaceResolver:
        _decode_utf8(spec, STRING_TYPE)
        return EmptyNamespaceResolver("string")

    def file_factory(spec: bytes) -> EmptyNamespaceResolver:
        _require_url(_decode_utf8(spec, FILE_TYPE), FILE_TYPE)
        return EmptyNamespaceResolver("file")

    def collection_factory(spec: bytes) -> FileCollectionResolver:
        prefix = _decode_utf8(spec, FILE_COLLECTION_TYPE)
        _require_url(prefix, FILE_COLLECTION_TYPE)
        return FileCollectionResolver(prefix, clock)

    def file_set_factory(spec: bytes) -> FileSetResolver:
        return FileSetResolver(parse_file_set_spec(spec), clock)

    def location_factory(spec: bytes) -> LocationProxyResolver:
        address, location_id = wire.parse_addr_id_spec(spec, LOCATION_TYPE)
        return LocationProxyResolver(address, location_id, timeout)

    def calendar_factory(spec: bytes) -> CalendarProxyResolver:
        return CalendarProxyResolver(parse_calendar_spec(spec), timeout)

    def time_period_factory(spec: bytes) -> TimePeriodResolver:
        address, start, end = parse_time_period_spec(spec)
        return TimePeriodResolver(address, start, end, clock, query)

    def event_factory(spec: bytes) -> EventResolver:
        return EventResolver(parse_event_spec(spec), clock, userdb_address)

    def user_factory(spec: bytes) -> UserResolver:
        address, user_id = wire.parse_addr_id_spec(spec, USER_TYPE)
        return UserResolver(address, user_id, clock, fetch)

    registry.register(STRING_TYPE, string_factory, usable=True, label="string", pretty=_pretty_string)
    registry.register(FILE_TYPE, file_factory, usable=True, label="file", pretty=_pretty_file)
    registry.register(
        FILE_COLLECTION_TYPE, collection_factory, label="file-collection", pretty=_pretty_collection
    )
    registry.register(FILE_SET_TYPE, file_set_factory, label="file-set", pretty=_pretty_file_set)
    registry.register(LOCATION_TYPE, location_factory, label="location", pretty=_pretty_location)
    registry.register(CALENDAR_TYPE, calendar_factory, label="calendar", pretty=_pretty_calendar)
    registry.register(
        TIME_PERIOD_TYPE, time_period_factory, label="time-period", pretty=_pretty_time_period
    )
    registry.register(EVENT_TYPE, event_factory, label="event", pretty=_pretty_event)
    registry.register(USER_TYPE, user_factory, label="user", pretty=_pretty_user)
    wire.register_remote_type(registry, timeout)
    return registry
