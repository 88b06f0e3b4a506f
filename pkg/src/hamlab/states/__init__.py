"""Guiding-state backends and the state-file format.

State files are JSON with fields kind, n, payload. Kinds: subset (payload:
bit strings), mps (site tensors as nested [re, im] lists), stabilizer and
product_circuit (gate lists), iqp (phase terms).
"""

from __future__ import annotations

import json

from ..errors import ParseError, ValidationError
from .access import SamplableAccess, ham_row, sampling_estimate_quadratic
from .base import EvaluatableState, observable_matrix, product_on_union
from .iqp import IqpState, iqp_estimate
from .mps import (
    MatmulCounter,
    MpsState,
    ghz_mps,
    mps_from_payload,
    mps_to_payload,
    random_mps,
)
from .shallow import ProductCircuitState
from .stabilizer import StabilizerState, random_clifford_gates
from .subset import SubsetState

__all__ = [
    "EvaluatableState",
    "SubsetState",
    "MpsState",
    "StabilizerState",
    "ProductCircuitState",
    "IqpState",
    "SamplableAccess",
    "MatmulCounter",
    "observable_matrix",
    "product_on_union",
    "iqp_estimate",
    "sampling_estimate_quadratic",
    "ham_row",
    "ghz_mps",
    "random_mps",
    "random_clifford_gates",
    "mps_to_payload",
    "mps_from_payload",
    "state_to_json",
    "state_from_json",
    "parse_state",
    "state_to_text",
]

_KINDS = ("subset", "mps", "stabilizer", "product_circuit", "iqp")


def state_to_json(state: EvaluatableState) -> dict:
    if isinstance(state, SubsetState):
        kind, payload = "subset", state.to_payload()
    elif isinstance(state, MpsState):
        kind, payload = "mps", mps_to_payload(state)
    elif isinstance(state, StabilizerState):
        kind, payload = "stabilizer", state.to_payload()
    elif isinstance(state, ProductCircuitState):
        kind, payload = "product_circuit", state.to_payload()
    elif isinstance(state, IqpState):
        kind, payload = "iqp", state.to_payload()
    else:
        raise ValidationError(f"cannot serialize {type(state).__name__}")
    return {"kind": kind, "n": state.n, "payload": payload}


def state_from_json(doc: dict) -> EvaluatableState:
    try:
        kind = doc["kind"]
        n = int(doc["n"])
        payload = doc["payload"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"state document missing kind/n/payload: {exc}") from exc
    if kind == "subset":
        return SubsetState.from_payload(n, payload)
    if kind == "mps":
        return mps_from_payload(n, payload)
    if kind == "stabilizer":
        return StabilizerState.from_payload(n, payload)
    if kind == "product_circuit":
        return ProductCircuitState.from_payload(n, payload)
    if kind == "iqp":
        return IqpState.from_payload(n, payload)
    raise ParseError(f"unknown state kind {kind!r}; expected one of {_KINDS}")


def parse_state(text: str) -> EvaluatableState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"state file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("state file must hold a JSON object")
    try:
        return state_from_json(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed state payload: {exc}") from exc


def state_to_text(state: EvaluatableState) -> str:
    return json.dumps(state_to_json(state), indent=1)
