"""Shared fixtures: the four-task worked example and a graph builder."""

import pathlib

import pytest

import reclaim as rc

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def example4() -> rc.ExecutionGraph:
    # Two processors running [T1, T2] and [T3, T4], one cross edge
    # T1 -> T3, costs 3/2/1/2, deadline 1.5.
    return rc.build_execution_graph(
        [rc.Task("T1", 3.0), rc.Task("T2", 2.0), rc.Task("T3", 1.0), rc.Task("T4", 2.0)],
        [("T1", "T3")],
        [["T1", "T2"], ["T3", "T4"]],
        1.5,
    )


@pytest.fixture
def example4_path() -> str:
    return str(DATA / "example4.json")


@pytest.fixture
def build():
    """Build an ExecutionGraph from plain data (tasks as (id, cost) pairs)."""

    def _build(tasks, precedence, allocation, deadline):
        return rc.build_execution_graph(
            [rc.Task(i, w) for i, w in tasks],
            precedence,
            [list(q) for q in allocation],
            deadline,
        )

    return _build
