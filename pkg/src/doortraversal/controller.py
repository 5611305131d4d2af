"""Per-tick behavior coordination: updates every node, manages the active
execution queue, and applies the door-traversal retry / alternative-strategy
policy when actions fail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .behavior import (
    DEFAULT_MAX_RETRIES,
    ActionStatus,
    BehaviorNode,
    CoordinatorState,
    NodeKind,
    TraversalPhase,
    alternative_subtree,
    behavior_complete,
    current_phase,
    select_door_subtree,
)
from .engine import (
    ConditionReport,
    ExecutionMode,
    ExecutionQueue,
    check_completions,
    update_dispatch,
)


class BehaviorOutcome(str, Enum):
    RUNNING = "Running"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"
    ABORTED = "Aborted"


@dataclass
class TickResult:
    started_ids: list[int] = field(default_factory=list)
    finished: list[ConditionReport] = field(default_factory=list)
    phase: TraversalPhase = TraversalPhase.APPROACH
    events: list[str] = field(default_factory=list)


class BehaviorController:
    """Owns the tree between ticks; operator commands are applied elsewhere."""

    def __init__(self, root: BehaviorNode, mode: ExecutionMode = ExecutionMode.AUTONOMOUS):
        self.root = root
        self.mode = mode
        self.queue: ExecutionQueue | None = None
        self.coordinator_state = CoordinatorState()
        self.outcome = BehaviorOutcome.RUNNING
        self._pending_steps = 0
        if root.kind is not NodeKind.DOOR_TRAVERSAL_COORDINATOR:
            self.queue = ExecutionQueue(actions=root.action_leaves())

    # -- operator-facing controls ------------------------------------------

    def request_step(self) -> None:
        self._pending_steps += 1

    def set_mode(self, mode: ExecutionMode) -> None:
        self.mode = mode

    def abort(self) -> None:
        if self.queue is not None:
            self.queue.frozen = True
        self.outcome = BehaviorOutcome.ABORTED

    def rebuild_queue(self) -> None:
        """Re-derive the action list after structural edits, keeping progress."""
        if self.root.kind is NodeKind.DOOR_TRAVERSAL_COORDINATOR:
            selected = self.coordinator_state.selected_child_id
            if selected is None:
                return
            subtree = self.root.find(selected)
            actions = subtree.action_leaves() if subtree else []
        else:
            actions = self.root.action_leaves()
        next_index = 0
        for i, action in enumerate(actions):
            if action.state.status is ActionStatus.PENDING:
                next_index = i
                break
            next_index = i + 1
        frozen = self.queue.frozen if self.queue else False
        self.queue = ExecutionQueue(actions=actions, next_index=next_index, frozen=frozen)

    # -- tick ---------------------------------------------------------------

    def tick(self, detections, executor, tick: int) -> TickResult:
        """Update all nodes once, poll completions, apply policy, dispatch."""
        result = TickResult()
        for node in self.root.walk():
            node.state.last_visited_tick = tick

        if self.outcome in (BehaviorOutcome.ABORTED, BehaviorOutcome.FAILED):
            result.phase = self.coordinator_state.phase
            return result

        if self.root.kind is NodeKind.DOOR_TRAVERSAL_COORDINATOR and self.queue is None:
            selected = select_door_subtree(self.root, detections)
            if selected is not None:
                self.coordinator_state.selected_child_id = selected
                self.coordinator_state.tried_child_ids.add(selected)
                subtree = self.root.find(selected)
                self.queue = ExecutionQueue(actions=subtree.action_leaves())
                result.events.append(f"selectSubtree:{selected}")

        if self.queue is None:
            result.phase = TraversalPhase.APPROACH
            return result

        result.finished = check_completions(self.queue, executor, tick)
        if self.queue.frozen:
            self._handle_failure(result)

        step = False
        if self.mode is not ExecutionMode.AUTONOMOUS and self._pending_steps > 0:
            self._pending_steps -= 1
            step = True
        result.started_ids = update_dispatch(self.queue, self.mode, executor, tick,
                                             step_requested=step)
        for node in self.queue.actions:
            state = node.state
            if state.status is ActionStatus.FAILED and state.entry_passed is False \
                    and state.end_tick == tick:
                result.finished.append(ConditionReport(node.id, False, "Failure",
                                                       state.exit_detail))

        active = self._active_subtree()
        result.phase = current_phase(active) if active is not None else TraversalPhase.APPROACH
        self.coordinator_state.phase = result.phase
        if active is not None and behavior_complete(active):
            self.outcome = BehaviorOutcome.SUCCEEDED
        return result

    def _active_subtree(self) -> BehaviorNode | None:
        if self.root.kind is not NodeKind.DOOR_TRAVERSAL_COORDINATOR:
            return self.root
        if self.coordinator_state.selected_child_id is None:
            return None
        return self.root.find(self.coordinator_state.selected_child_id)

    def _handle_failure(self, result: TickResult) -> None:
        """Retry from the configured resume point, switch strategy, or fail."""
        failed = [a for a in self.queue.actions if a.state.status is ActionStatus.FAILED]
        if not failed:
            return
        action = failed[-1]
        max_retries = int(self.root.parameters.get("maxRetries", DEFAULT_MAX_RETRIES))
        phase = action.phase
        state = self.coordinator_state
        retries = state.retry_counts.get(phase, 0)
        if retries < max_retries:
            state.retry_counts[phase] = retries + 1
            resume_id = action.parameters.get("retryFromId", action.id)
            try:
                index = self.queue.index_of(int(resume_id))
            except KeyError:
                index = self.queue.index_of(action.id)
            self.queue.rewind_to(index)
            result.events.append(f"retry:{action.id}:from:{resume_id}")
            return
        if self.root.kind is NodeKind.DOOR_TRAVERSAL_COORDINATOR:
            alt = alternative_subtree(self.root, state)
            if alt is not None:
                state.selected_child_id = alt
                state.tried_child_ids.add(alt)
                subtree = self.root.find(alt)
                for node in subtree.action_leaves():
                    node.state.reset()
                self.queue = ExecutionQueue(actions=subtree.action_leaves())
                result.events.append(f"strategySwitch:{alt}")
                return
        self.outcome = BehaviorOutcome.FAILED
        result.events.append(f"behaviorFailed:{action.id}")
