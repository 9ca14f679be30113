"""Typed model of a smart home: rooms, devices, sensors, and live device state.

A home is described by two JSON documents. The devices document maps rooms to
devices to named settings, each declared with a type label. The sensors
document maps scopes (a room name, or "global") to sensor names and types.
Both documents round-trip byte-identically through canonical serialization.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from hashlib import sha256
from importlib import resources
from pathlib import Path
from typing import Any, Iterator

logger = logging.getLogger(__name__)

GLOBAL_SCOPE = "global"

# Canonical nested declaration for a color setting in template documents.
COLOR_DECL = {"r": "int", "g": "int", "b": "int"}


class TemplateError(ValueError):
    """A template document pair failed validation."""


class StateError(ValueError):
    """A state document cannot be interpreted against its template."""


class SettingType(Enum):
    BOOL = "bool"
    FLOAT = "float"
    INT = "int"
    STR = "str"
    TIME = "time"
    COLOR = "color-rgb"


_SCALAR_LABELS = {t.value: t for t in SettingType}

_TIME_RE = re.compile(
    r"^\s*(\d{1,2}):(\d{2})(?::(\d{2}))?\s*(am|pm)?\s*$", re.IGNORECASE
)


def parse_time_of_day(text: str) -> int:
    """Parse a clock string ("7:00am", "19:30", "07:00:30") to minutes past midnight."""
    m = _TIME_RE.match(text)
    if not m:
        raise ValueError(f"not a time of day: {text!r}")
    hour, minute = int(m.group(1)), int(m.group(2))
    meridiem = m.group(4)
    if minute > 59 or (m.group(3) is not None and int(m.group(3)) > 59):
        raise ValueError(f"not a time of day: {text!r}")
    if meridiem:
        if not 1 <= hour <= 12:
            raise ValueError(f"not a time of day: {text!r}")
        hour = hour % 12
        if meridiem.lower() == "pm":
            hour += 12
    elif hour > 23:
        raise ValueError(f"not a time of day: {text!r}")
    return hour * 60 + minute


def format_time_of_day(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def default_value(stype: SettingType):
    """Neutral initial value for a setting of the given type."""
    return {
        SettingType.BOOL: False,
        SettingType.FLOAT: 0.0,
        SettingType.INT: 0,
        SettingType.STR: "",
        SettingType.TIME: 0,
        SettingType.COLOR: {"r": 0, "g": 0, "b": 0},
    }[stype]


def coerce_value(stype: SettingType, raw):
    """Coerce a JSON value to the canonical runtime value for its type.

    Raises ValueError when the value does not fit. Booleans are never
    accepted for numeric types, and numbers are never accepted as booleans.
    """
    if stype is SettingType.BOOL:
        if isinstance(raw, bool):
            return raw
    elif stype is SettingType.FLOAT:
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
    elif stype is SettingType.INT:
        if isinstance(raw, bool):
            pass
        elif isinstance(raw, int):
            return raw
        elif isinstance(raw, float) and raw.is_integer():
            return int(raw)
    elif stype is SettingType.STR:
        if isinstance(raw, str):
            return raw
    elif stype is SettingType.TIME:
        if isinstance(raw, bool):
            pass
        elif isinstance(raw, int):
            if 0 <= raw < 24 * 60:
                return raw
        elif isinstance(raw, str):
            return parse_time_of_day(raw)
    elif stype is SettingType.COLOR:
        if isinstance(raw, dict) and set(raw) == {"r", "g", "b"}:
            channels = {}
            for key in ("r", "g", "b"):
                v = raw[key]
                if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 255:
                    raise ValueError(f"bad color channel {key}={v!r}")
                channels[key] = v
            return channels
    raise ValueError(f"value {raw!r} does not fit setting type {stype.value}")


def value_to_json(stype: SettingType, value):
    if stype is SettingType.TIME:
        return format_time_of_day(value)
    return value


def _parse_setting_decl(decl, where: str) -> SettingType:
    if isinstance(decl, str):
        if decl in _SCALAR_LABELS and decl != SettingType.COLOR.value:
            return _SCALAR_LABELS[decl]
        if decl == SettingType.COLOR.value:
            return SettingType.COLOR
        raise TemplateError(f"unknown setting type {decl!r} at {where}")
    if isinstance(decl, dict):
        if decl == COLOR_DECL:
            return SettingType.COLOR
        raise TemplateError(f"unsupported composite setting at {where}: {decl!r}")
    raise TemplateError(f"bad setting declaration at {where}: {decl!r}")


def _setting_decl_to_json(stype: SettingType):
    if stype is SettingType.COLOR:
        return dict(COLOR_DECL)
    return stype.value


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise TemplateError(f"duplicate key {key!r} in document")
        seen[key] = value
    return seen


def _load_doc(text: str, label: str) -> dict:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except TemplateError:
        raise
    except (json.JSONDecodeError, TypeError) as exc:
        raise TemplateError(f"{label} document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TemplateError(f"{label} document must be a JSON object")
    return doc


def _require_name(name, what: str):
    if not isinstance(name, str) or not name:
        raise TemplateError(f"{what} name must be a non-empty string, got {name!r}")


@dataclass(frozen=True)
class HomeTemplate:
    """Parsed device and sensor layout for one home.

    devices: room -> device -> setting -> SettingType
    sensors: scope -> sensor -> SettingType, where scope is a room or "global"
    """

    devices: dict[str, dict[str, dict[str, SettingType]]]
    sensors: dict[str, dict[str, SettingType]]

    def room_names(self) -> set[str]:
        return set(self.devices)

    def device_name_set(self) -> set[str]:
        return {name for room in self.devices.values() for name in room}

    def iter_devices(self) -> Iterator[tuple[str, str, dict[str, SettingType]]]:
        for room, devices in self.devices.items():
            for name, settings in devices.items():
                yield room, name, settings

    def iter_sensors(self) -> Iterator[tuple[str, str, SettingType]]:
        for scope, sensors in self.sensors.items():
            for name, stype in sensors.items():
                yield scope, name, stype

    def has_device(self, room: str, device: str) -> bool:
        return device in self.devices.get(room, {})

    def setting_type(self, room: str, device: str, setting: str) -> SettingType:
        try:
            return self.devices[room][device][setting]
        except KeyError:
            raise KeyError(f"no setting {room}/{device}/{setting}") from None

    def sensor_type(self, scope: str, name: str) -> SettingType:
        try:
            return self.sensors[scope][name]
        except KeyError:
            raise KeyError(f"no sensor {scope}/{name}") from None

    def devices_doc(self) -> dict:
        return {
            room: {
                device: {s: _setting_decl_to_json(t) for s, t in settings.items()}
                for device, settings in devices.items()
            }
            for room, devices in self.devices.items()
        }

    def sensors_doc(self) -> dict:
        return {
            scope: {name: t.value for name, t in sensors.items()}
            for scope, sensors in self.sensors.items()
        }

    def serialize(self) -> tuple[str, str]:
        """Canonical text pair: sorted keys, compact separators."""
        dump = lambda doc: json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return dump(self.devices_doc()), dump(self.sensors_doc())

    def digest(self) -> str:
        devices_text, sensors_text = self.serialize()
        return sha256(f"{devices_text}\n{sensors_text}".encode()).hexdigest()


def devices_doc_from(devices: dict[str, dict[str, dict[str, SettingType]]]) -> dict:
    """Plain JSON document for a (possibly filtered) devices mapping."""
    return {
        room: {
            device: {s: _setting_decl_to_json(t) for s, t in settings.items()}
            for device, settings in room_devices.items()
        }
        for room, room_devices in devices.items()
    }


def sensors_doc_from(sensors: dict[str, dict[str, SettingType]]) -> dict:
    return {
        scope: {name: t.value for name, t in entries.items()}
        for scope, entries in sensors.items()
    }


def template_from_docs(devices_doc, sensors_doc) -> HomeTemplate:
    """Validate pre-parsed documents and build a template."""
    if not isinstance(devices_doc, dict):
        raise TemplateError("devices document must be a JSON object")
    if not isinstance(sensors_doc, dict):
        raise TemplateError("sensors document must be a JSON object")

    devices: dict[str, dict[str, dict[str, SettingType]]] = {}
    for room, room_devices in devices_doc.items():
        _require_name(room, "room")
        if room == GLOBAL_SCOPE:
            raise TemplateError(f"room name {GLOBAL_SCOPE!r} is reserved")
        if not isinstance(room_devices, dict):
            raise TemplateError(f"room {room!r} must map device names to settings")
        devices[room] = {}
        for device, settings in room_devices.items():
            _require_name(device, "device")
            if not isinstance(settings, dict) or not settings:
                raise TemplateError(
                    f"device {room}/{device} must declare at least one setting"
                )
            parsed = {}
            for setting, decl in settings.items():
                _require_name(setting, "setting")
                parsed[setting] = _parse_setting_decl(decl, f"{room}/{device}/{setting}")
            devices[room][device] = parsed

    sensors: dict[str, dict[str, SettingType]] = {}
    for scope, scope_sensors in sensors_doc.items():
        _require_name(scope, "sensor scope")
        if scope != GLOBAL_SCOPE and scope not in devices:
            raise TemplateError(f"sensor scope {scope!r} is not a room of this home")
        if not isinstance(scope_sensors, dict):
            raise TemplateError(f"sensor scope {scope!r} must map names to types")
        sensors[scope] = {}
        for name, decl in scope_sensors.items():
            _require_name(name, "sensor")
            sensors[scope][name] = _parse_setting_decl(decl, f"sensors:{scope}/{name}")
    return HomeTemplate(devices=devices, sensors=sensors)


def parse_template(devices_text: str, sensors_text: str) -> HomeTemplate:
    """Parse and validate the two JSON documents describing a home."""
    return template_from_docs(
        _load_doc(devices_text, "devices"), _load_doc(sensors_text, "sensors")
    )


# ---------------------------------------------------------------------------
# Built-in homes and the device lexicon


class BuiltinHome(str, Enum):
    H1 = "h1"
    H2 = "h2"
    H3 = "h3"


def fixture_root() -> Path:
    return Path(str(resources.files("hearth"))) / "fixtures"


def load_home(home_id: str | BuiltinHome, root: Path | None = None) -> HomeTemplate:
    """Load a home template from the fixture tree by id (h1, h2, h3, ...)."""
    home_id = home_id.value if isinstance(home_id, BuiltinHome) else home_id
    base = (root or fixture_root()) / "homes" / home_id
    devices_path = base / "devices.json"
    sensors_path = base / "sensors.json"
    if not devices_path.exists():
        raise FileNotFoundError(f"no home fixture named {home_id!r} under {base.parent}")
    return parse_template(
        devices_path.read_text(encoding="utf-8"),
        sensors_path.read_text(encoding="utf-8"),
    )


def load_lexicon(path: Path | None = None) -> list[tuple[str, str]]:
    """Ordered (substring pattern, tag) pairs used to tag device names."""
    path = path or fixture_root() / "lexicon.json"
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise TemplateError("lexicon must be a JSON object of pattern -> tag")
    pairs = []
    for pattern, tag in doc.items():
        if not pattern or not isinstance(tag, str):
            raise TemplateError(f"bad lexicon entry {pattern!r}: {tag!r}")
        pairs.append((pattern.lower(), tag))
    return pairs


def device_tag(name: str, lexicon: list[tuple[str, str]]) -> str | None:
    """Tag for a device name: first lexicon pattern contained in it, or None."""
    lowered = name.lower()
    for pattern, tag in lexicon:
        if pattern in lowered:
            return tag
    return None


@dataclass(frozen=True)
class CatalogEntry:
    room: str
    device: str
    tag: str


def device_catalog(
    template: HomeTemplate,
    lexicon: list[tuple[str, str]] | None = None,
    strict: bool = True,
) -> list[CatalogEntry]:
    """Tag every device in the template via the lexicon.

    With strict=True an unmapped device name raises TemplateError; otherwise
    it is logged and skipped.
    """
    lexicon = lexicon if lexicon is not None else load_lexicon()
    entries = []
    for room, device, _settings in template.iter_devices():
        tag = device_tag(device, lexicon)
        if tag is None:
            if strict:
                raise TemplateError(f"device {room}/{device} matches no lexicon entry")
            logger.warning("device %s/%s matches no lexicon entry", room, device)
            continue
        entries.append(CatalogEntry(room=room, device=device, tag=tag))
    return entries


# ---------------------------------------------------------------------------
# Live device state


@dataclass(frozen=True)
class StateViolation:
    kind: str  # "missing" | "unknown" | "type"
    path: tuple[str, ...]
    message: str


def validate_state_doc(template: HomeTemplate, doc) -> list[StateViolation]:
    """Check a state document for totality and well-typed values."""
    violations = []
    if not isinstance(doc, dict):
        return [StateViolation("type", (), "state document must be a JSON object")]
    for room, device, settings in template.iter_devices():
        for setting, stype in settings.items():
            path = (room, device, setting)
            try:
                raw = doc[room][device][setting]
            except (KeyError, TypeError):
                violations.append(
                    StateViolation("missing", path, "no value for " + "/".join(path))
                )
                continue
            try:
                coerce_value(stype, raw)
            except ValueError as exc:
                violations.append(StateViolation("type", path, str(exc)))
    for room, room_doc in doc.items():
        if room not in template.devices:
            violations.append(StateViolation("unknown", (room,), f"unknown room {room!r}"))
            continue
        if not isinstance(room_doc, dict):
            continue
        for device, device_doc in room_doc.items():
            if device not in template.devices[room]:
                violations.append(
                    StateViolation("unknown", (room, device), f"unknown device {device!r}")
                )
                continue
            if not isinstance(device_doc, dict):
                continue
            for setting in device_doc:
                if setting not in template.devices[room][device]:
                    violations.append(
                        StateViolation(
                            "unknown",
                            (room, device, setting),
                            f"unknown setting {setting!r}",
                        )
                    )
    return violations


@dataclass
class DeviceState:
    """Current value of every device setting in one home."""

    template: HomeTemplate
    values: dict[str, dict[str, dict[str, Any]]] = field(default_factory=dict)

    @classmethod
    def initial(cls, template: HomeTemplate) -> DeviceState:
        values = {
            room: {
                device: {s: default_value(t) for s, t in settings.items()}
                for device, settings in devices.items()
            }
            for room, devices in template.devices.items()
        }
        return cls(template=template, values=values)

    def get(self, room: str, device: str, setting: str):
        try:
            return self.values[room][device][setting]
        except KeyError:
            raise StateError(f"no setting {room}/{device}/{setting}") from None

    def set(self, room: str, device: str, setting: str, value) -> None:
        try:
            stype = self.template.devices[room][device][setting]
        except KeyError:
            raise StateError(f"no setting {room}/{device}/{setting}") from None
        try:
            self.values[room][device][setting] = coerce_value(stype, value)
        except ValueError as exc:
            raise StateError(str(exc)) from exc

    def copy(self) -> DeviceState:
        return DeviceState(template=self.template, values=copy.deepcopy(self.values))

    def to_doc(self) -> dict:
        return {
            room: {
                device: {
                    s: value_to_json(self.template.devices[room][device][s], v)
                    for s, v in settings.items()
                }
                for device, settings in devices.items()
            }
            for room, devices in self.values.items()
        }

    @classmethod
    def from_doc(cls, template: HomeTemplate, doc) -> DeviceState:
        violations = validate_state_doc(template, doc)
        if violations:
            raise StateError(
                "state document rejected: "
                + "; ".join(v.message for v in violations[:5])
            )
        state = cls.initial(template)
        for room, device, settings in template.iter_devices():
            for setting, stype in settings.items():
                state.values[room][device][setting] = coerce_value(
                    stype, doc[room][device][setting]
                )
        return state

    def __eq__(self, other) -> bool:
        if not isinstance(other, DeviceState):
            return NotImplemented
        return self.values == other.values and self.template == other.template
