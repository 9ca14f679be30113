"""Live home state: apply plans, install routines, react to sensor snapshots.

The simulator is the single source of truth for device state. Routines are
edge-triggered: a routine fires when its trigger predicate flips from false
to true between consecutive snapshots, so a condition that stays true fires
exactly once. Optional adapters mirror setting writes out to real devices.
"""

from __future__ import annotations

import copy
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .home import (
    DeviceState,
    HomeTemplate,
    SettingType,
    coerce_value,
    value_to_json,
)
from .plans import ImmediatePlan, RoutinePlan, plan_to_doc

logger = logging.getLogger(__name__)


class SimulatorError(RuntimeError):
    pass


class TypeMismatch(SimulatorError):
    """Snapshot does not cover the sensor layout or carries bad values."""


class AdapterUnreachable(SimulatorError):
    pass


class DeviceAdapter(Protocol):
    def set_setting(self, room: str, device: str, setting: str, value) -> None: ...
    def read_state(self, room: str, device: str) -> dict: ...


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: float
    kind: str  # PlanApplied | RoutineInstalled | RoutineFired | SettingChanged
    payload: dict


@dataclass(frozen=True)
class TickResult:
    fired: tuple[str, ...]
    events: tuple[Event, ...]


@dataclass
class _Routine:
    routine_id: str
    plan: RoutinePlan
    key: str  # canonical trigger+action text for duplicate detection
    enabled: bool = True
    last_match: bool = False  # trigger truth at the previous snapshot


@dataclass
class _Binding:
    adapter: DeviceAdapter
    desynced: bool = False


class HomeSimulator:
    """Single-writer simulator; mutations serialize, reads get consistent copies."""

    def __init__(self, template: HomeTemplate, state: DeviceState | None = None):
        self.template = template
        self._state = state.copy() if state is not None else DeviceState.initial(template)
        self._events: list[Event] = []
        self._routines: dict[str, _Routine] = {}
        self._bindings: dict[tuple[str, str], _Binding] = {}
        self._lock = threading.Lock()
        self._seq = 0
        self._next_routine = 1
        self._clock = 0.0  # timestamp of the latest snapshot
        self._seen_snapshot = False

    # -- reads ---------------------------------------------------------------

    @property
    def state(self) -> DeviceState:
        with self._lock:
            return self._state.copy()

    @property
    def events(self) -> tuple[Event, ...]:
        with self._lock:
            return tuple(self._events)

    def routines(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "id": r.routine_id,
                    "plan": plan_to_doc(self.template, r.plan),
                    "enabled": r.enabled,
                    "firing": "once per edge",
                }
                for r in self._routines.values()
            ]

    # -- mutations -----------------------------------------------------------

    def apply_plan(self, plan: ImmediatePlan) -> tuple[Event, ...]:
        with self._lock:
            return tuple(self._apply_assignments(plan.assignments, source="user"))

    def install_routine(self, plan: RoutinePlan) -> str:
        with self._lock:
            doc = plan_to_doc(self.template, plan)
            key = json.dumps(
                {"trigger": doc["trigger"], "action": doc["action"]}, sort_keys=True
            )
            for routine in self._routines.values():
                if routine.key == key:
                    logger.warning(
                        "routine identical to %s already installed", routine.routine_id
                    )
                    return routine.routine_id
            rid = f"r{self._next_routine}"
            self._next_routine += 1
            self._routines[rid] = _Routine(routine_id=rid, plan=plan, key=key)
            self._emit("RoutineInstalled", {"routine_id": rid, "plan": doc})
            return rid

    def remove_routine(self, routine_id: str) -> bool:
        with self._lock:
            return self._routines.pop(routine_id, None) is not None

    def set_routine_enabled(self, routine_id: str, enabled: bool) -> None:
        with self._lock:
            self._routines[routine_id].enabled = enabled

    def tick(self, snapshot: dict) -> TickResult:
        """Feed one sensor snapshot; fire routines whose trigger just became true."""
        with self._lock:
            timestamp, sensors = self._check_snapshot(snapshot)
            self._clock = timestamp
            self._seen_snapshot = True
            fired = []
            events_before = len(self._events)
            for routine in self._routines.values():
                now = routine.enabled and self._trigger_holds(routine.plan.trigger, sensors)
                if now and not routine.last_match:
                    fired.append(routine.routine_id)
                    self._emit("RoutineFired", {"routine_id": routine.routine_id})
                    self._apply_assignments(
                        routine.plan.action, source="routine",
                        routine_id=routine.routine_id,
                    )
                routine.last_match = now
            return TickResult(
                fired=tuple(fired), events=tuple(self._events[events_before:])
            )

    def bind_adapter(self, room: str, device: str, adapter: DeviceAdapter) -> None:
        if not self.template.has_device(room, device):
            raise SimulatorError(f"no device {room}/{device} to bind")
        with self._lock:
            self._bindings[(room, device)] = _Binding(adapter=adapter)

    def adapter_desynced(self, room: str, device: str) -> bool:
        with self._lock:
            return self._bindings[(room, device)].desynced

    # -- internals (lock held) -------------------------------------------------

    def _apply_assignments(self, assignments, source: str, routine_id: str | None = None):
        events = []
        for room in assignments:
            for device in assignments[room]:
                for setting, value in assignments[room][device].items():
                    before = self._state.values[room][device][setting]
                    if before == value:
                        continue
                    self._state.values[room][device][setting] = copy.deepcopy(value)
                    stype = self.template.devices[room][device][setting]
                    events.append(
                        self._emit(
                            "SettingChanged",
                            {
                                "room": room,
                                "device": device,
                                "setting": setting,
                                "before": value_to_json(stype, before),
                                "after": value_to_json(stype, value),
                            },
                        )
                    )
                    self._forward(room, device, setting, value)
        payload = {"source": source, "changed": len(events)}
        if routine_id is not None:
            payload["routine_id"] = routine_id
        events.append(self._emit("PlanApplied", payload))
        return events

    def _emit(self, kind: str, payload: dict) -> Event:
        event = Event(seq=self._seq, timestamp=self._clock, kind=kind, payload=payload)
        self._seq += 1
        self._events.append(event)
        return event

    def _check_snapshot(self, snapshot) -> tuple[float, dict]:
        if not isinstance(snapshot, dict) or "sensors" not in snapshot:
            raise TypeMismatch("snapshot must be an object with timestamp and sensors")
        timestamp = snapshot.get("timestamp")
        if not isinstance(timestamp, (int, float)) or isinstance(timestamp, bool):
            raise TypeMismatch("snapshot timestamp must be a number")
        if self._seen_snapshot and timestamp <= self._clock:
            raise TypeMismatch(
                f"snapshot timestamp {timestamp} not after {self._clock}"
            )
        raw = snapshot["sensors"]
        if not isinstance(raw, dict):
            raise TypeMismatch("snapshot sensors must be an object")
        sensors: dict = {}
        for scope, names in self.template.sensors.items():
            if scope not in raw or not isinstance(raw[scope], dict):
                raise TypeMismatch(f"snapshot missing sensor scope {scope!r}")
            sensors[scope] = {}
            for name, stype in names.items():
                if name not in raw[scope]:
                    raise TypeMismatch(f"snapshot missing sensor {scope}/{name}")
                try:
                    sensors[scope][name] = coerce_value(stype, raw[scope][name])
                except ValueError as exc:
                    raise TypeMismatch(f"sensor {scope}/{name}: {exc}") from exc
        for scope, names in raw.items():
            if scope not in self.template.sensors:
                raise TypeMismatch(f"snapshot names unknown scope {scope!r}")
            for name in names:
                if name not in self.template.sensors[scope]:
                    raise TypeMismatch(f"snapshot names unknown sensor {scope}/{name}")
        return float(timestamp), sensors

    def _trigger_holds(self, trigger: dict, sensors: dict) -> bool:
        for scope, wanted_by_name in trigger.items():
            for name, wanted in wanted_by_name.items():
                actual = sensors[scope][name]
                stype = self.template.sensor_type(scope, name)
                if stype is SettingType.STR:
                    if str(wanted).lower() not in str(actual).lower():
                        return False
                elif actual != wanted:
                    return False
        return True

    def _forward(self, room: str, device: str, setting: str, value) -> None:
        binding = self._bindings.get((room, device))
        if binding is None:
            return
        was_desynced = binding.desynced
        try:
            binding.adapter.set_setting(room, device, setting, value)
        except Exception as exc:
            binding.desynced = True
            logger.warning("adapter for %s/%s unreachable: %s", room, device, exc)
            return
        if was_desynced:
            # the adapter answered again; push the full device to resync it
            try:
                for s, v in self._state.values[room][device].items():
                    binding.adapter.set_setting(room, device, s, v)
                binding.desynced = False
            except Exception as exc:
                logger.warning("resync of %s/%s failed: %s", room, device, exc)


def fold_events(template: HomeTemplate, events) -> DeviceState:
    """Replay SettingChanged events from the initial state."""
    state = DeviceState.initial(template)
    for event in events:
        if event.kind != "SettingChanged":
            continue
        p = event.payload
        state.set(p["room"], p["device"], p["setting"], p["after"])
    return state


class LoopbackAdapter:
    """In-process adapter that just records what it was told."""

    def __init__(self):
        self.settings: dict[tuple[str, str], dict] = {}

    def set_setting(self, room, device, setting, value):
        self.settings.setdefault((room, device), {})[setting] = value

    def read_state(self, room, device):
        return dict(self.settings.get((room, device), {}))


class HttpBridgeAdapter:
    """Generic HTTP bridge: POSTs writes to a device endpoint."""

    def __init__(self, base_url: str, client=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=10.0)

    def set_setting(self, room, device, setting, value):
        resp = self._client.post(
            f"{self.base_url}/set",
            json={"room": room, "device": device, "setting": setting, "value": value},
        )
        if resp.status_code != 200:
            raise AdapterUnreachable(f"bridge returned {resp.status_code}")

    def read_state(self, room, device):
        resp = self._client.get(
            f"{self.base_url}/state", params={"room": room, "device": device}
        )
        if resp.status_code != 200:
            raise AdapterUnreachable(f"bridge returned {resp.status_code}")
        return resp.json()


def load_timeline(path: str | Path) -> list[dict]:
    """Read a scripted sensor timeline (JSON array of snapshots)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise ValueError("timeline file must be a JSON array of snapshots")
    return doc
