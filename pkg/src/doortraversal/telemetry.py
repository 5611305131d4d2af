"""Run metrics, execution logs, and live tracking samples.

The metrics CSV (`time_s,progress_m,phase,event`) carries one row per tick;
action start/end events, phase boundaries, and collisions ride in the event
column. The execution log is line-delimited JSON. Tracking reports the
Cartesian distance to the goal as a single scalar per action per tick.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

METRICS_CSV_HEADER = "time_s,progress_m,phase,event"
TRACKING_CSV_HEADER = "tick,time_s,action_id,distance_m,orientation_error_rad,time_remaining_s"


@dataclass
class TrackingSample:
    tick: int
    action_id: int
    cartesian_distance_to_goal: float
    orientation_error_rad: float
    nominal_time_remaining: float

    def csv_row(self, time_s: float) -> str:
        return (f"{self.tick},{time_s:.6f},{self.action_id},"
                f"{self.cartesian_distance_to_goal:.6f},{self.orientation_error_rad:.6f},"
                f"{self.nominal_time_remaining:.6f}")


@dataclass
class LogEvent:
    tick: int
    level: str
    node_id: int
    message: str

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "level": self.level,
                           "nodeId": self.node_id, "message": self.message})


class RunMetrics:
    """Per-tick progress rows plus the event stream, in deterministic order."""

    def __init__(self):
        self.rows: list[tuple[float, float, str, str]] = []
        self.log_events: list[LogEvent] = []
        self.tracking: list[tuple[float, TrackingSample]] = []
        self.phase_boundaries: list[tuple[float, str]] = []
        self._last_phase: str | None = None
        self._lock = threading.Lock()

    def record_tick(self, time_s: float, progress_m: float, phase: str,
                    events: list[str]) -> None:
        if phase != self._last_phase:
            self.phase_boundaries.append((time_s, phase))
            events = [f"phase:{phase}"] + list(events)
            self._last_phase = phase
        with self._lock:
            self.rows.append((time_s, progress_m, phase, "|".join(events)))

    def log(self, tick: int, level: str, node_id: int, message: str) -> None:
        with self._lock:
            self.log_events.append(LogEvent(tick, level, node_id, message))

    def record_tracking(self, time_s: float, samples: list[TrackingSample]) -> None:
        with self._lock:
            self.tracking.extend((time_s, s) for s in samples)

    @property
    def total_duration(self) -> float:
        return self.rows[-1][0] if self.rows else 0.0

    @property
    def final_progress(self) -> float:
        return self.rows[-1][1] if self.rows else 0.0

    def event_names(self) -> list[str]:
        names = []
        for _, _, _, ev in self.rows:
            if ev:
                names.extend(ev.split("|"))
        return names

    def metrics_csv(self) -> str:
        lines = [METRICS_CSV_HEADER]
        for time_s, progress, phase, event in self.rows:
            lines.append(f"{time_s:.6f},{progress:.6f},{phase},{event}")
        return "\n".join(lines) + "\n"

    def tracking_csv(self) -> str:
        lines = [TRACKING_CSV_HEADER]
        for time_s, sample in self.tracking:
            lines.append(sample.csv_row(time_s))
        return "\n".join(lines) + "\n"

    def events_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.log_events)

    def export(self, metrics_path=None, events_path=None, tracking_path=None) -> None:
        if metrics_path:
            with open(metrics_path, "w", encoding="utf-8") as fh:
                fh.write(self.metrics_csv())
        if events_path:
            with open(events_path, "w", encoding="utf-8") as fh:
                fh.write(self.events_jsonl())
        if tracking_path:
            with open(tracking_path, "w", encoding="utf-8") as fh:
                fh.write(self.tracking_csv())
