"""Shipped bubble maps used by the tests, the self-test and the examples."""

from __future__ import annotations

import json
from importlib import resources

from .bubbles import BubbleMap, map_from_json

__all__ = ["FIXTURES", "load_fixture", "load_fixture_json"]

FIXTURES = ("chain_n1", "chain_n2", "chain3", "chain_d3", "star", "mark")


def load_fixture_json(name: str) -> dict:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return json.loads(resources.files("bubbleglue").joinpath("fixtures", f"{name}.json").read_text())


def load_fixture(name: str) -> BubbleMap:
    return map_from_json(load_fixture_json(name))
