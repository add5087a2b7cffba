"""Bundled Matpower cases used by the test and benchmark suites."""

from __future__ import annotations

from importlib import resources


def case_names() -> list[str]:
    files = resources.files(__name__)
    return sorted(
        p.name[:-2] for p in files.iterdir() if p.name.endswith(".m")
    )


def case_text(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.m").read_text()
