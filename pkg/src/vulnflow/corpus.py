"""Synthetic labeled corpus for training and localization benchmarks.

Each sample is a small function with one risky statement (the trigger),
a capacity declaration that makes it dangerous, and sink-free
distractor statements. The safe twin of a sample patches the capacity
to a large value and keeps everything else. By construction:

  * the trigger is reachable from the capacity line within two
    dependence hops, so a budget-3 path can cover both;
  * vulnerable capacities {32, 50, 64} and safe ones {128, 256} never
    appear in the other class, so token models can separate classes;
  * distractors contain no risky APIs, subscripts, arithmetic, or
    increments, so the trigger is each sample's only sink point.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .builder import build_pdg
from .graph import LabeledSample, ProgramDependenceGraph

CWES = ("CWE119", "CWE125", "CWE190", "CWE78", "CWE787")

VULNERABLE_SIZES = (32, 50, 64)
SAFE_SIZES = (128, 256)
_DISTRACTOR_LITERALS = (1, 2, 3, 7, 9)
_NAME_STEMS = ("mode", "flag", "count", "state", "level", "tick", "slot", "mark")
_BUF_STEMS = ("buf", "data", "line", "pack", "msg", "field")

_TRIGGER_PATTERNS = (
    re.compile(r"\bmemcpy\s*\("),
    re.compile(r"\bsystem\s*\("),
    re.compile(r"\w+\s*\[\s*[A-Za-z_]\w*\s*\]\s*="),       # write at variable index
    re.compile(r"=\s*\w+\s*\[\s*[A-Za-z_]\w*\s*\]\s*;"),   # read at variable index
    re.compile(r"=\s*\w+\s*\*\s*\w+\s*;"),                 # multiplicative growth
)
_CAPACITY_PATTERN = re.compile(r"\b(32|50|64)\b")


class PlantedOracleDetector:
    """Scores high exactly when a graph shows a trigger and a small capacity.

    Generated distractors can never match either pattern, so on corpus
    samples this is a perfect detector, and the only candidate paths it
    up-scores are those containing both planted lines.
    """

    def __init__(self, hi: float = 0.95, lo: float = 0.05):
        self.hi = hi
        self.lo = lo

    def score(self, pdg: ProgramDependenceGraph) -> float:
        codes = [n.code for n in pdg.nodes]
        has_trigger = any(p.search(c) for c in codes for p in _TRIGGER_PATTERNS)
        has_capacity = any(_CAPACITY_PATTERN.search(c) for c in codes)
        return self.hi if has_trigger and has_capacity else self.lo


@dataclass(frozen=True)
class _Core:
    lines: tuple[str, ...]
    capacity_index: int  # index into lines of the capacity declaration
    trigger_index: int   # index into lines of the trigger statement


def _fresh_name(rng: random.Random, stems: Sequence[str], taken: set[str]) -> str:
    while True:
        name = f"{rng.choice(stems)}{rng.randrange(1, 10)}"
        if name not in taken:
            taken.add(name)
            return name


def _core_cwe787(rng: random.Random, size: int, taken: set[str]) -> _Core:
    buf = _fresh_name(rng, _BUF_STEMS, taken)
    src = _fresh_name(rng, _BUF_STEMS, taken)
    return _Core(
        lines=(
            f"char {buf}[{size}];",
            f"char {src}[200];",
            f"memset({src}, 65, 199);",
            f"memcpy({buf}, {src}, 100);",
        ),
        capacity_index=0,
        trigger_index=3,
    )


def _core_cwe119(rng: random.Random, size: int, taken: set[str]) -> _Core:
    buf = _fresh_name(rng, _BUF_STEMS, taken)
    pos = _fresh_name(rng, _NAME_STEMS, taken)
    return _Core(
        lines=(
            f"char {buf}[{size}];",
            f"int {pos} = 100;",
            f"{buf}[{pos}] = 65;",
        ),
        capacity_index=0,
        trigger_index=2,
    )


def _core_cwe125(rng: random.Random, size: int, taken: set[str]) -> _Core:
    buf = _fresh_name(rng, _BUF_STEMS, taken)
    pos = _fresh_name(rng, _NAME_STEMS, taken)
    out = _fresh_name(rng, _NAME_STEMS, taken)
    return _Core(
        lines=(
            f"char {buf}[{size}];",
            f"int {pos} = 100;",
            f"int {out} = 0;",
            f"{out} = {buf}[{pos}];",
        ),
        capacity_index=0,
        trigger_index=3,
    )


def _core_cwe78(rng: random.Random, size: int, taken: set[str]) -> _Core:
    cmd = _fresh_name(rng, _BUF_STEMS, taken)
    return _Core(
        lines=(
            f"char {cmd}[{size}];",
            f"readInput({cmd}, 99);",
            f"system({cmd});",
        ),
        capacity_index=0,
        trigger_index=2,
    )


def _core_cwe190(rng: random.Random, size: int, taken: set[str]) -> _Core:
    acc = _fresh_name(rng, _NAME_STEMS, taken)
    rate = _fresh_name(rng, _NAME_STEMS, taken)
    return _Core(
        lines=(
            f"unsigned int {acc} = {size};",
            f"int {rate} = 100;",
            f"{acc} = {acc} * {rate};",
        ),
        capacity_index=0,
        trigger_index=2,
    )


_CORE_BUILDERS = {
    "CWE787": _core_cwe787,
    "CWE119": _core_cwe119,
    "CWE125": _core_cwe125,
    "CWE78": _core_cwe78,
    "CWE190": _core_cwe190,
}

_MIN_NODES = 6


def _distractors(rng: random.Random, count: int, taken: set[str]) -> list[str]:
    """Sink-free filler: plain declarations and scalar copies."""
    names: list[str] = []
    lines: list[str] = []
    for _ in range(count):
        if names and rng.random() < 0.4:
            target = rng.choice(names)
            if len(names) > 1 and rng.random() < 0.5:
                source = rng.choice([n for n in names if n != target])
                lines.append(f"{target} = {source};")
            else:
                lines.append(f"{target} = {rng.choice(_DISTRACTOR_LITERALS)};")
        else:
            name = _fresh_name(rng, _NAME_STEMS, taken)
            names.append(name)
            lines.append(f"int {name} = {rng.choice(_DISTRACTOR_LITERALS)};")
    return lines


def generate_sample(rng: random.Random, cwe: str, vulnerable: bool,
                    sample_id: str) -> tuple[LabeledSample, str]:
    """One function body; returns the labeled graph and its source text."""
    taken: set[str] = set()
    size = rng.choice(VULNERABLE_SIZES if vulnerable else SAFE_SIZES)
    core = _CORE_BUILDERS[cwe](rng, size, taken)
    filler_target = max(_MIN_NODES - len(core.lines), 2)
    filler = _distractors(rng, filler_target + rng.randrange(0, 2), taken)

    # Interleave: core order is load-bearing, filler goes anywhere.
    body: list[tuple[str, Optional[int]]] = [(line, i) for i, line in enumerate(core.lines)]
    for line in filler:
        body.insert(rng.randrange(0, len(body) + 1), (line, None))

    guard: Optional[str] = None
    if rng.random() < 0.3:
        guard = _fresh_name(rng, _NAME_STEMS, taken)

    source_lines = [f"void sample_{sample_id.replace('-', '_')}() {{"]
    if guard is not None:
        source_lines.append(f"int {guard} = 1;")
    capacity_line = trigger_line = -1
    for text, core_index in body:
        if guard is not None and core_index == core.trigger_index:
            source_lines.append(f"if ({guard} == 1) {{")
            source_lines.append(text)
            trigger_line = len(source_lines)
            source_lines.append("}")
            continue
        source_lines.append(text)
        if core_index == core.trigger_index:
            trigger_line = len(source_lines)
        if core_index == core.capacity_index:
            capacity_line = len(source_lines)
    source_lines.append("}")
    source = "\n".join(source_lines) + "\n"

    if vulnerable:
        if rng.random() < 0.5:
            vuln_lines: tuple[int, ...] = (trigger_line,)
        else:
            vuln_lines = tuple(sorted({capacity_line, trigger_line}))
    else:
        vuln_lines = ()
    pdg = build_pdg(source, graph_id=sample_id)
    sample = LabeledSample(sample_id=sample_id, pdg=pdg,
                           label=1 if vulnerable else 0,
                           vuln_lines=vuln_lines, cwe=cwe)
    return sample, source


def _schedule(count: int, cwe_mix: Optional[dict[str, float]]) -> list[str]:
    if cwe_mix:
        names = sorted(cwe_mix)
        unknown = [n for n in names if n not in _CORE_BUILDERS]
        if unknown:
            raise ValueError(f"unknown cwe(s) in mix: {', '.join(unknown)}")
        weights = [cwe_mix[n] for n in names]
        if any(w < 0 for w in weights) or sum(weights) <= 0:
            raise ValueError("cwe mix weights must be non-negative and sum > 0")
    else:
        names = list(CWES)
        weights = [1.0] * len(names)
    total = sum(weights)
    # Largest remainder keeps the realized mix as close as integers allow.
    exact = [count * w / total for w in weights]
    counts = [int(e) for e in exact]
    leftovers = sorted(range(len(names)), key=lambda i: (counts[i] - exact[i], names[i]))
    for i in range(count - sum(counts)):
        counts[leftovers[i % len(names)]] += 1
    out: list[str] = []
    for name, n in zip(names, counts):
        out.extend([name] * n)
    return out


def generate_corpus(seed: int, count: int,
                    cwe_mix: Optional[dict[str, float]] = None
                    ) -> list[tuple[LabeledSample, str]]:
    """Deterministic corpus: same seed and count, same bytes out.

    Labels alternate so both classes are present whenever count >= 2.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = random.Random(seed)
    schedule = _schedule(count, cwe_mix)
    rng.shuffle(schedule)
    out: list[tuple[LabeledSample, str]] = []
    per_cwe: dict[str, int] = {}
    for i, cwe in enumerate(schedule):
        per_cwe[cwe] = per_cwe.get(cwe, 0) + 1
        sample_id = f"{cwe}-{per_cwe[cwe]:04d}"
        out.append(generate_sample(rng, cwe, vulnerable=(i % 2 == 0),
                                   sample_id=sample_id))
    return out
