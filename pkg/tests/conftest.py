"""Shared fixtures. The whole suite runs with outbound networking fenced
off: any socket connection attempt fails the test."""

from __future__ import annotations

import socket
from pathlib import Path

import pytest

from specmut.corpus import load_corpus

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_CONFIG = REPO_ROOT / "src" / "specmut" / "fixtures" / "corpus" / "config.json"


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    def refuse(self, *args, **kwargs):
        raise AssertionError("network access attempted during a hermetic test")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket.socket, "connect_ex", refuse)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(CORPUS_CONFIG)


@pytest.fixture()
def corpus_config_path():
    return CORPUS_CONFIG
