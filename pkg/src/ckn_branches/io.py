"""Run configuration and tabular output."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import ParameterError, ProblemParams

CURVE_HEADER = ("mu", "Lambda", "J", "tau", "nu", "symmetric")


def fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class CurveTable:
    rows: list = field(default_factory=list)  # (mu, Lambda, J, tau, nu, symmetric)

    def append(self, mu, lam, J, tau, nu, symmetric: bool):
        self.rows.append((float(mu), float(lam), float(J), float(tau), float(nu), bool(symmetric)))

    def validate(self):
        mus = [r[0] for r in self.rows]
        if any(b <= a for a, b in zip(mus, mus[1:])):
            raise ValueError("mu must be strictly increasing within a curve table")

    def column(self, name: str):
        i = CURVE_HEADER.index(name)
        return [r[i] for r in self.rows]


def write_curve(table: CurveTable, path) -> Path:
    """CSV with a fixed header, 17 significant digits, LF line endings."""
    table.validate()
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            for r in table.rows:
                w.writerow([fmt(v) for v in r[:5]] + ["1" if r[5] else "0"])
    except OSError as exc:
        raise OSError(f"cannot write curve table to {path}: {exc}") from exc
    return path


def read_curve(path) -> CurveTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != CURVE_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        t = CurveTable()
        for row in rd:
            t.rows.append(tuple(float(v) for v in row[:5]) + (row[5] == "1",))
    return t


def read_config(path) -> dict:
    """Flat `key = value` file; blank lines and `#` comments are ignored."""
    out = {}
    path = Path(path)
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{n}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def parse_range(text: str) -> tuple[float, float, float]:
    """'start:stop:step' -> floats; stop is inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"range must be start:stop:step, got {text!r}")
    a, b, h = (float(x) for x in parts)
    if not (h > 0 and b >= a):
        raise ParameterError(f"bad range {text!r}")
    return a, b, h


def range_values(text: str) -> list[float]:
    """Mesh a + k h up to b (inclusive), computed in exact decimal arithmetic."""
    from fractions import Fraction
    a, b, h = (Fraction(x) for x in text.split(":"))
    n = int((b - a) / h + Fraction(1, 10 ** 9))
    return [float(a + k * h) for k in range(n + 1)]


def default_out_dir(cli_value: str | None = None) -> Path:
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get("CKN_OUT_DIR", "."))


@dataclass
class RunConfig:
    d: int
    p: float
    thetas: tuple = (1.0,)
    mu_range: str | None = None
    n_s: int | None = None
    n_zeta: int | None = None
    out_dir: Path = Path(".")
    options: dict = field(default_factory=dict)

    def validate(self):
        for th in self.thetas:
            ProblemParams(self.d, self.p, th)
        if self.mu_range is not None:
            a, _, _ = parse_range(self.mu_range)
            if a <= 0:
                raise ParameterError("mu must be positive")
        if self.n_s is not None and (self.n_s < 5 or self.n_s % 2 == 0):
            raise ParameterError("n_s must be odd and >= 5")
        if self.n_zeta is not None and self.n_zeta < 32:
            raise ParameterError("n_zeta must be >= 32")
        return self
