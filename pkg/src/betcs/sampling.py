"""Seeded stream generation for experiments and the CLI.

Streams come from an explicit PCG64 generator so replicate r of seed s is
the same on any machine and any worker layout: each replicate gets its own
SeedSequence spawned from (seed, r).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def make_rng(seed, replicate=None):
    """PCG64 generator; replicate indices derive independent child streams."""
    if replicate is None:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, replicate)))
    )


def bernoulli(rng, p, size):
    """Bernoulli draws via a 64-bit integer threshold (no float comparisons)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    threshold = int(round(p * 2.0**64))
    if threshold >= 2**64:
        return np.ones(size)
    raw = rng.integers(0, 2**64, size=size, dtype=np.uint64, endpoint=False)
    return (raw < np.uint64(threshold)).astype(float)


def _gamma_mt_one(rng, d, c):
    # Marsaglia-Tsang squeeze for shape a >= 1 (d = a - 1/3, c = 1/sqrt(9d))
    while True:
        x = rng.standard_normal()
        base = 1.0 + c * x
        if base <= 0.0:
            continue
        v = base * base * base
        u = rng.random()
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if np.log(u) < 0.5 * x2 + d * (1.0 - v + np.log(v)):
            return d * v


def gamma(rng, a, size):
    """Gamma(a, 1) via Marsaglia-Tsang, boosting shapes below one.

    Draws are consumed strictly one element at a time, so the first n values
    do not depend on size; extending a stream keeps its prefix intact.
    """
    if a <= 0.0:
        raise ValueError("shape must be positive")
    boost = a < 1.0
    shape = a + 1.0 if boost else a
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(size)
    for i in range(size):
        g = _gamma_mt_one(rng, d, c)
        if boost:
            g *= rng.random() ** (1.0 / a)
        out[i] = g
    return out


def beta(rng, a, b, size):
    """Beta(a, b) from a pair of gammas, interleaved per element."""
    ab = a < 1.0
    bb = b < 1.0
    sa = a + 1.0 if ab else a
    sb = b + 1.0 if bb else b
    da, ca = sa - 1.0 / 3.0, 1.0 / np.sqrt(9.0 * (sa - 1.0 / 3.0))
    db, cb = sb - 1.0 / 3.0, 1.0 / np.sqrt(9.0 * (sb - 1.0 / 3.0))
    out = np.empty(size)
    for i in range(size):
        x = _gamma_mt_one(rng, da, ca)
        if ab:
            x *= rng.random() ** (1.0 / a)
        y = _gamma_mt_one(rng, db, cb)
        if bb:
            y *= rng.random() ** (1.0 / b)
        out[i] = x / (x + y)
    return out


def _read_stream_file(path):
    """Outcome file parser: one plain decimal per line, or JSONL {"y": value}."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if lines and lines[0].startswith("{"):
        import json

        return np.array([float(json.loads(ln)["y"]) for ln in lines])
    return np.array([float(ln) for ln in lines])


class StreamSpec:
    """Parsed description of a [0,1]-valued outcome source.

    Accepted forms: "bern:P", "beta:A,B", "file:PATH" (one value per line,
    or JSON lines carrying a "y" field).
    """

    def __init__(self, kind, params):
        self.kind = kind
        self.params = params

    @classmethod
    def parse(cls, text):
        head, sep, rest = text.partition(":")
        head = head.strip().lower()
        if not sep:
            raise ValueError(f"malformed stream spec {text!r}; expected kind:params")
        if head == "bern":
            p = float(rest)
            if not 0.0 <= p <= 1.0:
                raise ValueError("bernoulli parameter must lie in [0, 1]")
            return cls("bern", (p,))
        if head == "beta":
            parts = [float(v) for v in rest.split(",")]
            if len(parts) != 2 or parts[0] <= 0 or parts[1] <= 0:
                raise ValueError("beta spec needs two positive parameters a,b")
            return cls("beta", tuple(parts))
        if head == "file":
            path = Path(rest)
            if not path.exists():
                raise ValueError(f"stream file not found: {path}")
            return cls("file", (str(path),))
        raise ValueError(f"unknown stream kind {head!r}; expected bern, beta, or file")

    @property
    def mean(self):
        """True mean when known (None for file streams)."""
        if self.kind == "bern":
            return self.params[0]
        if self.kind == "beta":
            a, b = self.params
            return a / (a + b)
        return None

    def draw(self, horizon, seed, replicate=None):
        """Generate the stream; file streams ignore the seed."""
        if self.kind == "file":
            vals = _read_stream_file(self.params[0])
            if np.any((vals < 0.0) | (vals > 1.0)) or not np.all(np.isfinite(vals)):
                raise ValueError("file stream values must be finite and in [0, 1]")
            if len(vals) < horizon:
                raise ValueError(
                    f"file stream has {len(vals)} values, fewer than horizon {horizon}"
                )
            return vals[:horizon]
        rng = make_rng(seed, replicate)
        if self.kind == "bern":
            return bernoulli(rng, self.params[0], horizon)
        return beta(rng, self.params[0], self.params[1], horizon)

    def __repr__(self):
        body = ",".join(repr(v) for v in self.params)
        return f"StreamSpec({self.kind!r}, ({body}))"
