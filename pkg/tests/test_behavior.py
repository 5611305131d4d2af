from __future__ import annotations

import json

import pytest

from doortraversal.behavior import (
    ActionStatus,
    BehaviorLoadError,
    BehaviorNode,
    NodeKind,
    load_tree,
    save_tree,
    validate_tree,
)


def wait_node(node_id, name="wait", duration=1.0, execute_after=None, **params):
    return BehaviorNode(
        id=node_id,
        kind=NodeKind.WAIT,
        name=name,
        parameters={"durationS": duration, **params},
        execute_after_id=execute_after,
    )


def sequence(node_id, name, children, **params):
    return BehaviorNode(id=node_id, kind=NodeKind.ACTION_SEQUENCE, name=name,
                        children=children, parameters=params)


def test_empty_sequence_round_trips():
    root = sequence(0, "empty", [])
    text = save_tree(root)
    again = load_tree(text)
    assert again.kind is NodeKind.ACTION_SEQUENCE
    assert again.children == []
    assert save_tree(again) == text


def test_round_trip_preserves_structure_and_links():
    root = sequence(
        0,
        "behavior",
        [
            wait_node(1, "a", 0.5),
            wait_node(2, "b", 1.0, execute_after=1),
            wait_node(3, "c", 2.0, execute_after=1),
        ],
    )
    text = save_tree(root)
    again = load_tree(text)
    assert [c.id for c in again.children] == [1, 2, 3]
    assert again.children[1].execute_after_id == 1
    assert again.children[2].execute_after_id == 1
    assert save_tree(load_tree(save_tree(again))) == text


def test_missing_execute_after_defaults_to_previous_sibling():
    doc = {
        "version": 1,
        "root": {
            "id": 0, "kind": "ActionSequence", "name": "seq",
            "children": [
                {"id": 1, "kind": "WaitAction", "name": "a",
                 "parameters": {"durationS": 1.0}, "children": []},
                {"id": 2, "kind": "WaitAction", "name": "b",
                 "parameters": {"durationS": 1.0}, "children": []},
            ],
        },
    }
    root = load_tree(json.dumps(doc))
    assert root.children[0].execute_after_id is None
    assert root.children[1].execute_after_id == 1


def test_unknown_kind_names_the_kind():
    doc = {"version": 1, "root": {"id": 0, "kind": "TeleportAction", "name": "x", "children": []}}
    with pytest.raises(BehaviorLoadError, match="TeleportAction"):
        load_tree(json.dumps(doc))


def test_forward_execute_after_rejected():
    doc = {
        "version": 1,
        "root": {
            "id": 0, "kind": "ActionSequence", "name": "seq",
            "children": [
                {"id": 1, "kind": "WaitAction", "name": "a", "executeAfterId": 2,
                 "parameters": {"durationS": 1.0}, "children": []},
                {"id": 2, "kind": "WaitAction", "name": "b", "executeAfterId": -1,
                 "parameters": {"durationS": 1.0}, "children": []},
            ],
        },
    }
    with pytest.raises(BehaviorLoadError, match="earlier sibling"):
        load_tree(json.dumps(doc))


def test_dangling_execute_after_names_the_id():
    doc = {
        "version": 1,
        "root": {
            "id": 0, "kind": "ActionSequence", "name": "seq",
            "children": [
                {"id": 1, "kind": "WaitAction", "name": "a", "executeAfterId": 99,
                 "parameters": {"durationS": 1.0}, "children": []},
            ],
        },
    }
    with pytest.raises(BehaviorLoadError, match="99"):
        load_tree(json.dumps(doc))


def test_duplicate_ids_rejected():
    root = sequence(0, "seq", [wait_node(1), wait_node(1)])
    with pytest.raises(BehaviorLoadError, match="duplicate"):
        validate_tree(root)


def test_duplicate_coordinator_tags_rejected():
    root = BehaviorNode(
        id=0, kind=NodeKind.DOOR_TRAVERSAL_COORDINATOR, name="coord",
        children=[
            sequence(1, "a", [wait_node(2)], doorType="LeverHandle"),
            sequence(3, "b", [wait_node(4)], doorType="LeverHandle"),
        ],
    )
    with pytest.raises(BehaviorLoadError, match="LeverHandle"):
        validate_tree(root)


def test_action_leaves_document_order():
    root = sequence(0, "outer", [
        wait_node(1),
        sequence(2, "inner", [wait_node(3), wait_node(4)]),
        wait_node(5),
    ])
    assert [n.id for n in root.action_leaves()] == [1, 3, 4, 5]
