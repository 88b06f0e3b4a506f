"""Report emission: stable key = value text, CSV tables, optional figures.

A report is a header (comment lines, including the timestamp) followed by
a body of `key = value` rows grouped into [sections]. The body is fully
determined by the inputs, so replaying a run and comparing bodies is a
byte-level check; only header comment lines may differ.
"""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

SCHEMA = 1


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if v is None:
        return "none"
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


class Report:
    def __init__(self, command: str):
        self.command = command
        self._sections: list[tuple[str, list[tuple[str, str]]]] = []

    def add(self, section: str, key: str, value) -> "Report":
        for name, rows in self._sections:
            if name == section:
                rows.append((key, format_value(value)))
                return self
        self._sections.append((section, [(key, format_value(value))]))
        return self

    def add_all(self, section: str, mapping: dict) -> "Report":
        for k, v in mapping.items():
            self.add(section, k, v)
        return self

    def render(self, timestamp: bool = True) -> str:
        lines = [f"# hamlab {self.command} report"]
        if timestamp:
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            lines.append(f"# generated = {stamp}")
        lines += ["", f"schema = {SCHEMA}", f"command = {self.command}"]
        for name, rows in self._sections:
            lines.append("")
            lines.append(f"[{name}]")
            lines += [f"{k} = {v}" for k, v in rows]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.render())


def body(text: str) -> str:
    """The replay-comparable part: everything except header comment lines."""
    return "\n".join(l for l in text.splitlines() if not l.startswith("# "))


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def render_figure(path, draw) -> None:
    """Render one matplotlib figure to `path`; `draw(ax)` fills the axes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=120)
    draw(ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
