"""Behavior tree data model, JSON persistence, tick semantics, and the
door-traversal coordination logic.

Unlike classic behavior trees there is no Success/Failure/Running return
propagation: every node is updated once per tick, root-down, and parents read
their children's state fields directly. Sequencing is expressed with
execute-after links on action nodes; an absent link in JSON defaults to the
immediately preceding sibling (a pure sequence), and the explicit sentinel -1
means "no dependency".
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

NO_EXECUTE_AFTER = -1
SCHEMA_VERSION = 1
DEFAULT_MAX_RETRIES = 2


class NodeKind(str, Enum):
    DOOR_TRAVERSAL_COORDINATOR = "DoorTraversalCoordinator"
    ACTION_SEQUENCE = "ActionSequence"
    FOOTSTEP_PLAN = "FootstepPlanAction"
    ARM_TRAJECTORY = "ArmTrajectoryAction"
    SCREW_TRAJECTORY = "ScrewTrajectoryAction"
    CHEST_PELVIS_TRAJECTORY = "ChestPelvisTrajectoryAction"
    HAND_CONFIGURATION = "HandConfigurationAction"
    WAIT = "WaitAction"


ACTION_KINDS = {
    NodeKind.FOOTSTEP_PLAN,
    NodeKind.ARM_TRAJECTORY,
    NodeKind.SCREW_TRAJECTORY,
    NodeKind.CHEST_PELVIS_TRAJECTORY,
    NodeKind.HAND_CONFIGURATION,
    NodeKind.WAIT,
}


class ActionStatus(str, Enum):
    PENDING = "Pending"
    EXECUTING = "Executing"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"


class TraversalPhase(str, Enum):
    APPROACH = "Approach"
    UNLATCH_AND_OPEN = "UnlatchAndOpen"
    WALK_THROUGH = "WalkThrough"
    DONE = "Done"


class BehaviorLoadError(ValueError):
    """Malformed behavior documents (unknown kinds, dangling links, ...)."""


@dataclass
class ActionNodeState:
    status: ActionStatus = ActionStatus.PENDING
    start_tick: int = -1
    end_tick: int = -1
    nominal_duration: float = 0.0
    entry_passed: bool | None = None
    exit_detail: str = ""
    last_visited_tick: int = -1

    def reset(self):
        self.status = ActionStatus.PENDING
        self.start_tick = -1
        self.end_tick = -1
        self.entry_passed = None
        self.exit_detail = ""


@dataclass
class BehaviorNode:
    id: int
    kind: NodeKind
    name: str
    children: list["BehaviorNode"] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    execute_after_id: int | None = None  # None = start immediately
    state: ActionNodeState = field(default_factory=ActionNodeState)

    @property
    def is_action(self) -> bool:
        return self.kind in ACTION_KINDS

    @property
    def phase(self) -> str:
        return self.parameters.get("phase", TraversalPhase.APPROACH.value)

    def find(self, node_id: int) -> "BehaviorNode | None":
        if self.id == node_id:
            return self
        for child in self.children:
            found = child.find(node_id)
            if found is not None:
                return found
        return None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def action_leaves(self) -> list["BehaviorNode"]:
        """Ordered action nodes under this node (document order)."""
        leaves = []
        for node in self.walk():
            if node.is_action:
                leaves.append(node)
        return leaves


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def _node_to_dict(node: BehaviorNode) -> dict:
    doc = {"id": node.id, "kind": node.kind.value, "name": node.name}
    if node.parameters:
        doc["parameters"] = node.parameters
    if node.is_action:
        doc["executeAfterId"] = NO_EXECUTE_AFTER if node.execute_after_id is None else node.execute_after_id
    doc["children"] = [_node_to_dict(c) for c in node.children]
    return doc


def save_tree(root: BehaviorNode) -> str:
    validate_tree(root)
    return json.dumps({"version": SCHEMA_VERSION, "root": _node_to_dict(root)}, indent=2) + "\n"


def save_tree_to_path(root: BehaviorNode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_tree(root))


def _node_from_dict(doc: dict) -> BehaviorNode:
    kind_name = doc.get("kind")
    try:
        kind = NodeKind(kind_name)
    except ValueError:
        raise BehaviorLoadError(f"unknown node kind '{kind_name}'") from None
    node = BehaviorNode(
        id=int(doc["id"]),
        kind=kind,
        name=doc.get("name", ""),
        parameters=doc.get("parameters", {}),
        children=[_node_from_dict(c) for c in doc.get("children", [])],
    )
    if node.is_action:
        if "executeAfterId" in doc:
            raw = doc["executeAfterId"]
            node.execute_after_id = None if raw in (None, NO_EXECUTE_AFTER) else int(raw)
        else:
            node._default_link = True  # resolved against siblings after parsing
    return node


def _resolve_default_links(node: BehaviorNode) -> None:
    previous: BehaviorNode | None = None
    for child in node.children:
        if child.is_action and getattr(child, "_default_link", False):
            child.execute_after_id = previous.id if previous is not None else None
            del child._default_link
        if child.is_action:
            previous = child
        _resolve_default_links(child)


def load_tree(text: str) -> BehaviorNode:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BehaviorLoadError(f"behavior document is not valid JSON: {exc}") from None
    if doc.get("version") != SCHEMA_VERSION:
        raise BehaviorLoadError(f"unsupported behavior schema version {doc.get('version')!r}")
    root = _node_from_dict(doc["root"])
    _resolve_default_links(root)
    validate_tree(root)
    return root


def load_tree_from_path(path) -> BehaviorNode:
    with open(path, "r", encoding="utf-8") as fh:
        return load_tree(fh.read())


def validate_tree(root: BehaviorNode) -> None:
    ids: set[int] = set()
    for node in root.walk():
        if node.id in ids:
            raise BehaviorLoadError(f"duplicate node id {node.id}")
        ids.add(node.id)
    for node in root.walk():
        earlier: set[int] = set()
        for child in node.children:
            if child.is_action and child.execute_after_id is not None:
                dep = child.execute_after_id
                if dep not in earlier:
                    if dep in ids:
                        raise BehaviorLoadError(
                            f"executeAfterId {dep} on node {child.id} must reference an earlier sibling"
                        )
                    raise BehaviorLoadError(f"dangling executeAfterId {dep} on node {child.id}")
            if child.is_action:
                earlier.add(child.id)
        if node.kind is NodeKind.DOOR_TRAVERSAL_COORDINATOR:
            seen_tags: set[tuple[str, str]] = set()
            for child in node.children:
                tag = (child.parameters.get("doorType", ""), child.parameters.get("strategy", ""))
                if tag in seen_tags:
                    raise BehaviorLoadError(
                        f"coordinator {node.id} has two subtrees tagged {tag[0]!r}/{tag[1] or 'default'!r}"
                    )
                seen_tags.add(tag)


def next_free_id(root: BehaviorNode) -> int:
    return max(node.id for node in root.walk()) + 1


def reset_tree_state(root: BehaviorNode) -> None:
    for node in root.walk():
        node.state.reset()


# ---------------------------------------------------------------------------
# Coordinator state and tick
# ---------------------------------------------------------------------------

@dataclass
class CoordinatorState:
    phase: TraversalPhase = TraversalPhase.APPROACH
    selected_child_id: int | None = None
    tried_child_ids: set[int] = field(default_factory=set)
    retry_counts: dict[str, int] = field(default_factory=dict)
    failed: bool = False


def select_door_subtree(coordinator: BehaviorNode, detections) -> int | None:
    """Child subtree whose doorType tag matches a stable detection, else None."""
    stable_types = [d.mechanism_type for d in detections if d.stable]
    for child in coordinator.children:
        if child.parameters.get("doorType") in stable_types:
            return child.id
    return None


def alternative_subtree(coordinator: BehaviorNode, state: CoordinatorState) -> int | None:
    current = coordinator.find(state.selected_child_id) if state.selected_child_id else None
    door_type = current.parameters.get("doorType") if current else None
    for child in coordinator.children:
        if child.id in state.tried_child_ids:
            continue
        if child.parameters.get("doorType") == door_type and child.parameters.get("strategy"):
            return child.id
    return None


def behavior_complete(node: BehaviorNode) -> bool:
    leaves = node.action_leaves()
    return bool(leaves) and all(a.state.status is ActionStatus.SUCCEEDED for a in leaves)


def current_phase(node: BehaviorNode) -> TraversalPhase:
    """Phase of the most recently started action; Done once all succeeded."""
    if behavior_complete(node):
        return TraversalPhase.DONE
    latest, latest_tick = None, -1
    for action in node.action_leaves():
        if action.state.start_tick >= latest_tick and action.state.status is not ActionStatus.PENDING:
            latest, latest_tick = action, action.state.start_tick
    if latest is None:
        return TraversalPhase.APPROACH
    return TraversalPhase(latest.phase)
