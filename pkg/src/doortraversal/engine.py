"""Concurrent layered dispatch of an action sequence.

The dispatcher keeps actions starting in order but potentially earlier: while
the next action's execute-after dependency has completed (or it has none), it
is started asynchronously and the index advances. The pass is non-blocking and
returns the first time the next action is not ready; started actions progress
via per-tick integration elsewhere, the engine never waits on them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .behavior import ActionStatus, BehaviorNode


class ExecutionMode(str, Enum):
    MANUAL_STEP = "ManualStep"
    MANUAL_STEP_CONCURRENT = "ManualStepConcurrent"
    AUTONOMOUS = "Autonomous"


@dataclass
class ConditionReport:
    action_id: int
    entry_passed: bool
    exit_result: str = "NotYetEvaluated"  # Success | Failure | NotYetEvaluated
    detail: str = ""


@dataclass
class ExecutionQueue:
    """The ordered action set plus the index of the next action to execute."""

    actions: list[BehaviorNode]
    next_index: int = 0
    frozen: bool = False
    by_id: dict[int, BehaviorNode] = field(init=False)

    def __post_init__(self):
        self.by_id = {a.id: a for a in self.actions}

    def executing(self) -> list[BehaviorNode]:
        return [a for a in self.actions if a.state.status is ActionStatus.EXECUTING]

    def finished(self) -> bool:
        return self.next_index >= len(self.actions) and not self.executing()

    def index_of(self, node_id: int) -> int:
        for i, a in enumerate(self.actions):
            if a.id == node_id:
                return i
        raise KeyError(node_id)

    def rewind_to(self, index: int) -> None:
        """Reset actions from `index` on to Pending and resume dispatch there."""
        for action in self.actions[index:]:
            action.state.reset()
        self.next_index = index
        self.frozen = False


def should_execute(action: BehaviorNode, queue: ExecutionQueue) -> bool:
    """True when the action's execute-after dependency is complete (or absent)."""
    dep_id = action.execute_after_id
    if dep_id is None:
        return True
    dep = queue.by_id.get(dep_id)
    if dep is None:
        return True
    return dep.state.status in (ActionStatus.SUCCEEDED, ActionStatus.FAILED)


def update_dispatch(
    queue: ExecutionQueue,
    mode: ExecutionMode,
    executor,
    tick: int,
    step_requested: bool = False,
) -> list[int]:
    """One dispatch pass; returns ids of newly started actions.

    Autonomous mode starts every ready action. A manual step starts exactly one
    action (non-concurrent mode, and only while nothing is executing) or the
    whole ready layer (concurrent mode).
    """
    if queue.frozen:
        return []
    if mode is not ExecutionMode.AUTONOMOUS and not step_requested:
        return []
    if mode is ExecutionMode.MANUAL_STEP and queue.executing():
        return []

    started: list[int] = []
    while queue.next_index < len(queue.actions):
        action = queue.actions[queue.next_index]
        if not should_execute(action, queue):
            break
        entry = executor.evaluate_entry(action)
        if not entry.entry_passed:
            action.state.status = ActionStatus.FAILED
            action.state.start_tick = tick
            action.state.end_tick = tick
            action.state.entry_passed = False
            action.state.exit_detail = entry.detail
            report_failure(action, queue)
            break
        action.state.status = ActionStatus.EXECUTING
        action.state.start_tick = tick
        action.state.entry_passed = True
        executor.start(action, tick)
        queue.next_index += 1
        started.append(action.id)
        if mode is ExecutionMode.MANUAL_STEP:
            break
    return started


def check_completions(queue: ExecutionQueue, executor, tick: int) -> list[ConditionReport]:
    """Poll executing actions' exit conditions; returns reports for finished ones."""
    reports: list[ConditionReport] = []
    for action in queue.actions:
        if action.state.status is not ActionStatus.EXECUTING:
            continue
        outcome = executor.poll(action, tick)
        if outcome is None:
            continue
        success, detail = outcome
        action.state.end_tick = tick
        action.state.exit_detail = detail
        if success:
            action.state.status = ActionStatus.SUCCEEDED
            reports.append(ConditionReport(action.id, True, "Success", detail))
        else:
            action.state.status = ActionStatus.FAILED
            reports.append(ConditionReport(action.id, True, "Failure", detail))
            report_failure(action, queue)
    return reports


def report_failure(action: BehaviorNode, queue: ExecutionQueue) -> None:
    """Freeze dispatch; the coordinator decides retry / alternative strategy."""
    queue.frozen = True


# ---------------------------------------------------------------------------
# Duration-model executor and the discrete-event scheduling oracle
# ---------------------------------------------------------------------------

class DurationModelExecutor:
    """Executor where every action simply runs for its nominal duration.

    Drives the real dispatch code path for scheduling-level questions (layered
    vs serial makespans) without a simulation world.
    """

    def __init__(self, tick_rate: float):
        self.tick_rate = tick_rate
        self._duration_ticks: dict[int, int] = {}

    def duration_ticks(self, action: BehaviorNode) -> int:
        return max(1, round(action.state.nominal_duration * self.tick_rate))

    def evaluate_entry(self, action: BehaviorNode) -> ConditionReport:
        return ConditionReport(action.id, True)

    def start(self, action: BehaviorNode, tick: int) -> None:
        self._duration_ticks[action.id] = self.duration_ticks(action)

    def poll(self, action: BehaviorNode, tick: int):
        if tick - action.state.start_tick >= self._duration_ticks[action.id]:
            return True, ""
        return None


def run_duration_model(
    actions: list[BehaviorNode],
    tick_rate: float,
    serial: bool = False,
    max_ticks: int = 10_000_000,
) -> dict[int, tuple[int, int]]:
    """Execute a queue under the duration model; returns {id: (start, end)} ticks.

    `serial=True` replaces every execute-after link with the immediately
    preceding action (pure sequential execution with identical durations).
    """
    saved_links = {a.id: a.execute_after_id for a in actions}
    if serial:
        for prev, action in zip([None] + actions[:-1], actions):
            action.execute_after_id = prev.id if prev is not None else None
    for action in actions:
        action.state.reset()
    queue = ExecutionQueue(actions=list(actions))
    executor = DurationModelExecutor(tick_rate)
    tick = 0
    while not queue.finished() and tick < max_ticks:
        check_completions(queue, executor, tick)
        update_dispatch(queue, ExecutionMode.AUTONOMOUS, executor, tick)
        tick += 1
    check_completions(queue, executor, tick)
    result = {a.id: (a.state.start_tick, a.state.end_tick) for a in actions}
    for action in actions:
        action.execute_after_id = saved_links[action.id]
    return result


def discrete_event_schedule(
    durations_ticks: list[int],
    execute_after: list[int | None],
) -> list[tuple[int, int]]:
    """Independent oracle: start_i = max(start_{i-1}, end_of_dependency)."""
    starts: list[int] = []
    ends: list[int] = []
    for i, (duration, dep) in enumerate(zip(durations_ticks, execute_after)):
        start = 0 if i == 0 else starts[i - 1]
        if dep is not None:
            start = max(start, ends[dep])
        starts.append(start)
        ends.append(start + duration)
    return list(zip(starts, ends))


def makespan_seconds(schedule: dict[int, tuple[int, int]], tick_rate: float) -> float:
    if not schedule:
        return 0.0
    end = max(end for _, end in schedule.values())
    start = min(start for start, _ in schedule.values())
    return (end - start) / tick_rate
