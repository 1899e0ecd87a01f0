"""Protocol conformance checks runnable against any backend server.

Each check takes a ``post(path, payload) -> (status, body_text)`` callable so
the same suite drives an in-process backend, a live HTTP server, or a test
client. Checks return a list of human-readable failures; empty means pass.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterable

from . import protocol

Post = Callable[[str, dict], tuple[int, str]]

RequestTriple = tuple[str, str, dict]  # (role, path, payload)


def sample_requests(image_b64: str) -> list[RequestTriple]:
    """One representative request per endpoint, for fixture-free servers."""
    return [
        ("caption", "/caption", {"model": "m-caption", "image_b64": image_b64}),
        ("dense_caption", "/dense", {"model": "m-dense", "image_b64": image_b64}),
        ("embed_text", "/embed", {"model": "m-embed", "text": "a red book"}),
        ("embed_image", "/embed", {"model": "m-embed", "image_b64": image_b64}),
        ("chat", "/chat", {"model": "m-chat",
                           "messages": [{"role": "user", "content": "ping"}],
                           "temperature": 0.7, "max_tokens": 64}),
    ]


def requests_from_fixture_dir(fixture_dir: str | Path) -> list[RequestTriple]:
    """Recover every recorded request from a cache/fixture directory."""
    triples = []
    root = Path(fixture_dir)
    for role_dir in sorted(root.iterdir()):
        if not role_dir.is_dir() or role_dir.name not in protocol.ROLES:
            continue
        for entry_file in sorted(role_dir.glob("*.json")):
            entry = json.loads(entry_file.read_text("utf-8"))
            triples.append((role_dir.name, protocol.ROLE_PATHS[role_dir.name],
                            entry["request"]))
    return triples


def check_schema_conformance(post: Post, requests: Iterable[RequestTriple]) -> list[str]:
    """Every endpoint must answer 200 with a schema-valid JSON body."""
    failures = []
    for role, path, payload in requests:
        status, body = post(path, payload)
        if status != 200:
            failures.append(f"{role}: expected 200, got {status}")
            continue
        try:
            parsed = json.loads(body)
        except json.JSONDecodeError as exc:
            failures.append(f"{role}: body is not JSON ({exc})")
            continue
        for violation in protocol.validate_response(role, parsed):
            failures.append(f"{role}: schema violation: {violation}")
    return failures


def check_determinism(post: Post, requests: Iterable[RequestTriple]) -> list[str]:
    """Identical request bytes must produce identical response bytes."""
    failures = []
    for role, path, payload in requests:
        first = post(path, payload)
        second = post(path, payload)
        if first != second:
            failures.append(f"{role}: two identical requests differed")
    return failures


def check_miss_behavior(post: Post) -> list[str]:
    """A fixture server must answer an unknown request with 404 + its key."""
    payload = {"model": "contract-miss-probe",
               "text": "request that no fixture store contains"}
    key = protocol.request_key("embed_text", payload["model"], payload)
    status, body = post("/embed", payload)
    failures = []
    if status != 404:
        failures.append(f"miss probe: expected 404, got {status}")
    elif key not in body:
        failures.append("miss probe: 404 body does not echo the request key")
    return failures


def run_contract_checks(post: Post, requests: Iterable[RequestTriple], *,
                        fixture_backed: bool = False) -> list[str]:
    requests = list(requests)
    failures = check_schema_conformance(post, requests)
    failures += check_determinism(post, requests)
    if fixture_backed:
        failures += check_miss_behavior(post)
    return failures
