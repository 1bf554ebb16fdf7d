"""Deployment configuration: users, locations, events, initial resources.

The file format is line-oriented UTF-8: ``[section]`` headers, ``key =
value`` assignments, ``#`` comments and blank lines.  Section kinds:

    [addresses]          userdb / location / calendar = host:port
    [user <alias>]       id = <32 hex>, email = <token>, files = <url prefix>
    [location <alias>]   id = <32 hex>, occupants = <user aliases, arrival order>
    [event <alias>]      id = <32 hex>, tags = <tokens>, moderator = <user alias>,
                         location = <location alias>, file.<name> = <url>,
                         start = <ms>, end = <ms>
    [calendar <alias>]   (no keys; the calendar server hosts all events)
    [initial <alias>]    resource = [<type-id hex> <spec hex>]

Aliases exist only in configuration; on the wire and in descriptions
everything is identified by the 16-byte ids.  Every cross-reference must
be defined, and malformed input is rejected with the offending line
number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import kit, wire
from .names import NameSyntaxError, parse_resource_literal, serialize_resource_literal
from .resources import ResourceDescription


class ConfigError(Exception):
    """Configuration is malformed or inconsistent."""

    def __init__(self, line: Optional[int], reason: str) -> None:
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class UserRecord:
    alias: str
    user_id: bytes
    email: str
    fileprefix: str


@dataclass(frozen=True)
class LocationRecord:
    alias: str
    location_id: bytes
    occupants: tuple[str, ...]  # user aliases, arrival order


@dataclass(frozen=True)
class EventRecord:
    alias: str
    event_id: bytes
    tags: tuple[str, ...]
    moderator: str  # user alias
    location: str  # location alias
    files: tuple[tuple[str, str], ...]
    start: int
    end: int


@dataclass
class DeploymentConfig:
    addresses: dict[str, str] = field(default_factory=dict)
    users: dict[str, UserRecord] = field(default_factory=dict)
    locations: dict[str, LocationRecord] = field(default_factory=dict)
    events: dict[str, EventRecord] = field(default_factory=dict)
    calendars: tuple[str, ...] = ()
    initials: dict[str, ResourceDescription] = field(default_factory=dict)

    def event_fields(self, record: EventRecord) -> kit.EventFields:
        """Static event data with aliases replaced by identifiers."""
        moderator = self.users[record.moderator].user_id
        location = self.locations[record.location]
        location_desc = kit.location_description(self.addresses["location"], location.location_id)
        return kit.EventFields(
            record.tags, moderator, location_desc, record.files, record.start, record.end
        )

    def initial_description(self, alias_or_literal: str) -> ResourceDescription:
        """Look up a configured initial resource, or parse a literal."""
        if alias_or_literal.startswith("["):
            return parse_resource_literal(alias_or_literal)
        try:
            return self.initials[alias_or_literal]
        except KeyError:
            known = ", ".join(sorted(self.initials)) or "none"
            raise ValueError(
                f"unknown initial resource {alias_or_literal!r} (configured: {known})"
            ) from None


_ROLES = ("userdb", "location", "calendar")
_ID_HEX_LEN = 2 * wire.ENTITY_ID_LENGTH


def _parse_id(value: str, line: int, what: str) -> bytes:
    if len(value) != _ID_HEX_LEN or value != value.lower():
        raise ConfigError(line, f"{what} must be {_ID_HEX_LEN} lowercase hex digits")
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise ConfigError(line, f"{what} is not hex") from None


class _Section:
    def __init__(self, kind: str, arg: str, line: int) -> None:
        self.kind = kind
        self.arg = arg
        self.line = line
        self.items: list[tuple[str, str, int]] = []

    def single(self, key: str, required: bool = True) -> tuple[str, int]:
        found = [(v, ln) for k, v, ln in self.items if k == key]
        if not found:
            if required:
                raise ConfigError(self.line, f"[{self.kind} {self.arg}] is missing {key!r}".strip())
            return "", self.line
        if len(found) > 1:
            raise ConfigError(found[1][1], f"duplicate key {key!r}")
        return found[0]

    def reject_unknown(self, known: tuple[str, ...], prefixes: tuple[str, ...] = ()) -> None:
        for key, _, line in self.items:
            if key in known or any(key.startswith(p) for p in prefixes):
                continue
            raise ConfigError(line, f"unknown key {key!r} in [{self.kind}] section")


def parse_config(text: str) -> DeploymentConfig:
    sections: list[_Section] = []
    current: Optional[_Section] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(lineno, "unterminated section header")
            header = line[1:-1].strip()
            parts = header.split(None, 1)
            if not parts:
                raise ConfigError(lineno, "empty section header")
            kind = parts[0]
            arg = parts[1].strip() if len(parts) > 1 else ""
            if kind == "addresses":
                if arg:
                    raise ConfigError(lineno, "[addresses] takes no argument")
            elif kind in ("user", "location", "event", "calendar", "initial"):
                if not arg:
                    raise ConfigError(lineno, f"[{kind}] needs an alias")
            else:
                raise ConfigError(lineno, f"unknown section kind {kind!r}")
            current = _Section(kind, arg, lineno)
            sections.append(current)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(lineno, "expected 'key = value'")
        if current is None:
            raise ConfigError(lineno, "assignment before any section header")
        current.items.append((key.strip(), value.strip(), lineno))

    cfg = DeploymentConfig()
    calendars: list[str] = []
    for section in sections:
        if section.kind == "addresses":
            for key, value, line in section.items:
                if key not in _ROLES:
                    raise ConfigError(line, f"unknown role {key!r} (expected one of {_ROLES})")
                if key in cfg.addresses:
                    raise ConfigError(line, f"duplicate address for role {key!r}")
                try:
                    wire.parse_address(value)
                except ValueError as exc:
                    raise ConfigError(line, str(exc)) from None
                cfg.addresses[key] = value
        elif section.kind == "user":
            section.reject_unknown(("id", "email", "files"))
            if section.arg in cfg.users:
                raise ConfigError(section.line, f"duplicate user alias {section.arg!r}")
            id_text, id_line = section.single("id")
            email, email_line = section.single("email")
            files, files_line = section.single("files")
            if not email or any(c.isspace() for c in email):
                raise ConfigError(email_line, "email must be non-empty and whitespace-free")
            if not files or any(c.isspace() for c in files):
                raise ConfigError(files_line, "files must be a whitespace-free URL prefix")
            cfg.users[section.arg] = UserRecord(
                section.arg, _parse_id(id_text, id_line, "user id"), email, files
            )
        elif section.kind == "location":
            section.reject_unknown(("id", "occupants"))
            if section.arg in cfg.locations:
                raise ConfigError(section.line, f"duplicate location alias {section.arg!r}")
            id_text, id_line = section.single("id")
            occupants_text, _ = section.single("occupants", required=False)
            occupants = tuple(occupants_text.split())
            cfg.locations[section.arg] = LocationRecord(
                section.arg, _parse_id(id_text, id_line, "location id"), occupants
            )
        elif section.kind == "event":
            section.reject_unknown(
                ("id", "tags", "moderator", "location", "start", "end"), prefixes=("file.",)
            )
            if section.arg in cfg.events:
                raise ConfigError(section.line, f"duplicate event alias {section.arg!r}")
            id_text, id_line = section.single("id")
            tags_text, _ = section.single("tags", required=False)
            moderator, _ = section.single("moderator")
            location, _ = section.single("location")
            start_text, start_line = section.single("start")
            end_text, end_line = section.single("end")
            files: list[tuple[str, str]] = []
            seen_files: set[str] = set()
            for key, value, line in section.items:
                if not key.startswith("file."):
                    continue
                name = key[5:]
                if name in seen_files:
                    raise ConfigError(line, f"duplicate file name {name!r}")
                seen_files.add(name)
                files.append((name, value))
            try:
                start, end = int(start_text), int(end_text)
            except ValueError:
                raise ConfigError(start_line, "start and end must be integer milliseconds") from None
            if start >= end:
                raise ConfigError(end_line, "event start must precede end")
            cfg.events[section.arg] = EventRecord(
                section.arg,
                _parse_id(id_text, id_line, "event id"),
                tuple(tags_text.split()),
                moderator,
                location,
                tuple(files),
                start,
                end,
            )
        elif section.kind == "calendar":
            if section.items:
                raise ConfigError(section.items[0][2], "[calendar] sections take no keys")
            if section.arg in calendars:
                raise ConfigError(section.line, f"duplicate calendar alias {section.arg!r}")
            calendars.append(section.arg)
        elif section.kind == "initial":
            section.reject_unknown(("resource",))
            if section.arg in cfg.initials:
                raise ConfigError(section.line, f"duplicate initial alias {section.arg!r}")
            literal, line = section.single("resource")
            try:
                cfg.initials[section.arg] = parse_resource_literal(literal)
            except NameSyntaxError as exc:
                raise ConfigError(line, f"bad resource literal: {exc}") from None
    cfg.calendars = tuple(calendars)
    _validate(cfg, sections)
    return cfg


def _validate(cfg: DeploymentConfig, sections: list[_Section]) -> None:
    section_line = {("%s %s" % (s.kind, s.arg)).strip(): s.line for s in sections}
    for role in _ROLES:
        if role not in cfg.addresses:
            raise ConfigError(None, f"missing address for role {role!r}")
    for kind, records in (
        ("user", cfg.users.values()),
        ("location", cfg.locations.values()),
        ("event", cfg.events.values()),
    ):
        seen: dict[bytes, str] = {}
        for record in records:
            entity_id = getattr(record, f"{kind}_id")
            if entity_id in seen:
                raise ConfigError(
                    section_line.get(f"{kind} {record.alias}"),
                    f"{kind} {record.alias!r} reuses the id of {seen[entity_id]!r}",
                )
            seen[entity_id] = record.alias
    for location in cfg.locations.values():
        for occupant in location.occupants:
            if occupant not in cfg.users:
                raise ConfigError(
                    section_line.get(f"location {location.alias}"),
                    f"location {location.alias!r} lists undefined user {occupant!r}",
                )
    for event in cfg.events.values():
        line = section_line.get(f"event {event.alias}")
        if event.moderator not in cfg.users:
            raise ConfigError(line, f"event {event.alias!r} names undefined user {event.moderator!r}")
        if event.location not in cfg.locations:
            raise ConfigError(
                line, f"event {event.alias!r} names undefined location {event.location!r}"
            )
        # Surface bad tags and file entries now rather than at serve time.
        try:
            kit.encode_event_spec(cfg.event_fields(event))
        except Exception as exc:
            raise ConfigError(line, f"event {event.alias!r}: {exc}") from None


def load_config(path: str) -> DeploymentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def format_config(cfg: DeploymentConfig) -> str:
    out = ["[addresses]"]
    for role in _ROLES:
        if role in cfg.addresses:
            out.append(f"{role} = {cfg.addresses[role]}")
    for user in cfg.users.values():
        out += [
            "",
            f"[user {user.alias}]",
            f"id = {user.user_id.hex()}",
            f"email = {user.email}",
            f"files = {user.fileprefix}",
        ]
    for location in cfg.locations.values():
        out += [
            "",
            f"[location {location.alias}]",
            f"id = {location.location_id.hex()}",
            f"occupants = {' '.join(location.occupants)}",
        ]
    for event in cfg.events.values():
        out += [
            "",
            f"[event {event.alias}]",
            f"id = {event.event_id.hex()}",
            f"tags = {' '.join(event.tags)}",
            f"moderator = {event.moderator}",
            f"location = {event.location}",
        ]
        out += [f"file.{name} = {url}" for name, url in event.files]
        out += [f"start = {event.start}", f"end = {event.end}"]
    for calendar in cfg.calendars:
        out += ["", f"[calendar {calendar}]"]
    for alias, description in cfg.initials.items():
        out += ["", f"[initial {alias}]", f"resource = {serialize_resource_literal(description)}"]
    return "\n".join(out) + "\n"


def demo_deployment(addresses: dict[str, str], now: int) -> DeploymentConfig:
    """The evaluation deployment: two users, two rooms, meetings today.

    Events exist for both today and tomorrow so a run that straddles
    midnight still finds a meeting in whatever "today" has become.
    """
    day_start, day_end = kit.day_bounds(now)
    alice = UserRecord("alice", bytes(range(0, 16)), "alice@example.org", "http://files.example.net/alice/")
    bob = UserRecord("bob", bytes(range(16, 32)), "bob@example.org", "http://files.example.net/bob/")
    room101 = LocationRecord("room101", bytes(range(32, 48)), ("alice",))
    room102 = LocationRecord("room102", bytes(range(48, 64)), ())
    standup_files = (
        ("agenda.txt", "http://files.example.net/standup/agenda.txt"),
        ("notes.txt", "http://files.example.net/standup/notes.txt"),
    )
    events = {
        "standup": EventRecord(
            "standup", bytes(range(64, 80)), ("meeting", "weekly"), "alice", "room101",
            standup_files, day_start, day_start + 3_600_000,
        ),
        "review": EventRecord(
            "review", bytes(range(80, 96)), ("meeting",), "bob", "room102",
            (), day_start + 7_200_000, day_start + 10_800_000,
        ),
        "standup-next": EventRecord(
            "standup-next", bytes(range(96, 112)), ("meeting", "weekly"), "alice", "room101",
            standup_files, day_end, day_end + 3_600_000,
        ),
    }
    cfg = DeploymentConfig(
        addresses=dict(addresses),
        users={"alice": alice, "bob": bob},
        locations={"room101": room101, "room102": room102},
        events=events,
        calendars=("main",),
    )
    cfg.initials = {
        "calendar": wire.remote_description(addresses["calendar"], kit.CALENDAR_RESOURCE_ID),
        "location": wire.remote_description(addresses["location"], room101.location_id),
    }
    return cfg
