"""Generic recursive name resolution.

Every resource (or the separate resolver acting for it) exposes one
capability: resolve a single local name to a resource description plus a
validity period.  The engine here chains those capabilities: it resolves
the head of a name against the initial resource, instantiates a resolver
for the intermediate description via the type registry, dispatches the
remaining chain to it, and intersects the validity periods of all steps.
The final description is returned untouched, so no element along the way
needs to understand it.

Name-valued attributes are anchored to the initial resource: before any
dispatch, the engine replaces every nested name anywhere in the chain
with the resource description it resolves to, so downstream resources
only ever see literal values.

A resolver that can handle whole names by itself (typically a proxy for
a networked element with native resolution support) may additionally
offer ``resolve_name(name) -> Resolution``; the engine then hands the
entire remaining chain over in one step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, runtime_checkable

from .names import LocalName, Name, NameValue, ResourceValue
from .resources import ResourceDescription, TypeRegistry

Clock = Callable[[], int]

DEFAULT_MAX_DEPTH = 32


def system_clock() -> int:
    """Current instant in milliseconds since the Unix epoch, UTC."""
    return time.time_ns() // 1_000_000


class NegativeDurationError(ValueError):
    """Validity durations must be non-negative."""


@dataclass(frozen=True)
class Validity:
    """Absolute instant (ms since epoch) after which a mapping is stale."""

    expires_at: int


def intersect(a: Validity, b: Validity) -> Validity:
    """Intersection of two validity periods: the earlier expiry wins."""
    return a if a.expires_at <= b.expires_at else b


def validity_from_duration(now: int, duration_ms: int) -> Validity:
    if duration_ms < 0:
        raise NegativeDurationError(f"duration must be >= 0, got {duration_ms}")
    return Validity(now + duration_ms)


@dataclass(frozen=True)
class Resolution:
    """Result of resolving a name: final description plus end-to-end validity."""

    description: ResourceDescription
    validity: Validity


class ResolutionError(Exception):
    """Base class for failures of the resolution process."""


class NotBoundError(ResolutionError):
    """A resource has no binding for the requested local name."""

    def __init__(self, local: str, detail: str = "", step: Optional[int] = None) -> None:
        super().__init__()
        self.local = local
        self.detail = detail
        self.step = step

    def __str__(self) -> str:
        msg = f"no binding for {self.local!r}"
        if self.detail:
            msg += f" ({self.detail})"
        if self.step is not None:
            msg += f" at step {self.step}"
        return msg


class UnknownTypeError(ResolutionError):
    """No registered factory can resolve names from the intermediate resource."""

    def __init__(self, type_id: bytes, step: Optional[int] = None) -> None:
        super().__init__()
        self.type_id = type_id
        self.step = step

    def __str__(self) -> str:
        msg = f"cannot resolve names from resource of unknown type {self.type_id.hex()}"
        if self.step is not None:
            msg += f" at step {self.step}"
        return msg


class DepthExceededError(ResolutionError):
    """Resolution did not finish within the configured step budget."""

    def __init__(self, max_depth: Optional[int] = None, detail: str = "") -> None:
        super().__init__()
        self.max_depth = max_depth
        self.detail = detail

    def __str__(self) -> str:
        msg = "resolution exceeded the maximum step count"
        if self.max_depth is not None:
            msg += f" ({self.max_depth})"
        if self.detail:
            msg += f": {self.detail}"
        return msg


class TransportError(ResolutionError):
    """A networked resource could not be reached or answered garbage."""

    def __init__(self, detail: str, step: Optional[int] = None) -> None:
        super().__init__()
        self.detail = detail
        self.step = step

    def __str__(self) -> str:
        msg = f"transport failure: {self.detail}"
        if self.step is not None:
            msg += f" at step {self.step}"
        return msg


@runtime_checkable
class Resolver(Protocol):
    """Behavioral contract every resource's resolution code satisfies.

    resolve_local receives a local name whose attribute values are all
    literal (tokens or resource descriptions, never nested names) and
    either returns a description plus the validity the resource assigns
    to that one mapping, or raises NotBoundError.
    """

    def resolve_local(self, local: LocalName) -> tuple[ResourceDescription, Validity]:
        ...


@dataclass
class ResolveContext:
    """Everything one top-level resolve call needs.

    max_depth caps the total number of single-step resolutions (local or
    delegated) performed on behalf of one call, attribute resolution
    included, so resolution terminates even on cyclic name graphs.
    """

    registry: TypeRegistry
    initial: Resolver
    clock: Clock = field(default=system_clock)
    max_depth: int = DEFAULT_MAX_DEPTH


class _Budget:
    __slots__ = ("remaining", "limit")

    def __init__(self, limit: int) -> None:
        self.remaining = limit
        self.limit = limit

    def spend(self) -> None:
        if self.remaining <= 0:
            raise DepthExceededError(self.limit)
        self.remaining -= 1


def _stamp_step(exc: ResolutionError, step: int) -> None:
    if getattr(exc, "step", None) is None and hasattr(exc, "step"):
        exc.step = step


def _literalize(ctx: ResolveContext, name: Name, budget: _Budget) -> Name:
    """Replace every name-valued attribute with the description it resolves to."""
    out_locals = []
    changed = False
    for local in name.locals:
        new_attrs = []
        for label, value in local.attributes:
            if isinstance(value, NameValue):
                inner = _literalize(ctx, value.name, budget)
                resolved = _dispatch(ctx, ctx.initial, inner, 0, budget, pre_resolved=True)
                new_attrs.append((label, ResourceValue(resolved.description)))
                changed = True
            else:
                new_attrs.append((label, value))
        out_locals.append(LocalName(local.primary, tuple(new_attrs)))
    if not changed:
        return name
    return Name(tuple(out_locals))


def _dispatch(
    ctx: ResolveContext,
    resolver: Resolver,
    name: Name,
    step: int,
    budget: _Budget,
    pre_resolved: bool,
) -> Resolution:
    resolve_name = getattr(resolver, "resolve_name", None)
    if resolve_name is not None:
        # Whole-chain delegation: the element behind this resolver runs
        # the same procedure itself and anchors any remaining name-valued
        # attributes to itself, which is exactly the initial resource's
        # role from here on.
        budget.spend()
        try:
            return resolve_name(name)
        except ResolutionError as exc:
            _stamp_step(exc, step)
            raise
    if not pre_resolved:
        name = _literalize(ctx, name, budget)
    head = name.locals[0]
    budget.spend()
    try:
        description, validity = resolver.resolve_local(head)
    except ResolutionError as exc:
        _stamp_step(exc, step)
        raise
    tail = name.locals[1:]
    if not tail:
        return Resolution(description, validity)
    nxt = ctx.registry.instantiate(description)
    if nxt is None:
        raise UnknownTypeError(description.type_id, step=step + 1)
    sub = _dispatch(ctx, nxt, Name(tail), step + 1, budget, pre_resolved=True)
    return Resolution(sub.description, intersect(validity, sub.validity))


def resolve(ctx: ResolveContext, name: Name) -> Resolution:
    """Resolve a name relative to the context's initial resource.

    Raises NotBoundError, UnknownTypeError, DepthExceededError or
    TransportError; errors carry the chain step (0-based) they occurred
    at when known.
    """
    budget = _Budget(ctx.max_depth)
    return _dispatch(ctx, ctx.initial, name, 0, budget, pre_resolved=False)
