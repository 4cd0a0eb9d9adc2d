"""Shared utility helpers used across connsum modules."""

from __future__ import annotations

import json
import time
from collections.abc import Callable, Iterable
from functools import wraps
from typing import Any

import networkx as nx

from connsum.errors import get_component_logger


def timed(component: str) -> Callable:
    """Measure function runtime and log duration with structured metadata.

    Params:
        component (str): Component name used in structured logs.
    Returns:
        Callable: Decorator wrapping the target callable.
    """

    log = get_component_logger(component)

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception:
                log.debug(
                    "Function execution failed",
                    function_name=func.__name__,
                    duration_s=round(time.perf_counter() - start_time, 4),
                )
                raise
            log.debug(
                "Function execution complete",
                function_name=func.__name__,
                duration_s=round(time.perf_counter() - start_time, 4),
            )
            return result

        return wrapper

    return decorator


def format_signature(signature: Iterable[int]) -> str:
    """Render an end signature as `{2, 3}` or `∅`.

    Params:
        signature (Iterable[int]): Palette indices carried by an end.
    Returns:
        str: Set notation for human-readable reports.
    """

    colours = sorted(signature)
    if not colours:
        return "∅"
    return "{" + ", ".join(str(k) for k in colours) + "}"


def format_signature_multiset(signatures: Iterable[Iterable[int]]) -> str:
    """Render a multiset of signatures, non-empty signatures first, e.g. `{{2},∅}`."""

    ordered = sorted((tuple(sorted(s)) for s in signatures), key=lambda s: (not s, s))
    return "{" + ",".join(format_signature(s) for s in ordered) + "}"


def graph_to_dot(graph: nx.Graph) -> str:
    """Render a networkx graph as GraphViz DOT text through pydot."""

    return nx.nx_pydot.to_pydot(graph).to_string()


def dump_json(payload: Any) -> str:
    """Serialise a payload to stable JSON text (sorted keys, UTF-8 preserved).

    Params:
        payload (Any): JSON-compatible structure.
    Returns:
        str: Byte-stable JSON document for equal inputs.
    """

    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2)
