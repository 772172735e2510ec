"""Word error rate scoring and rhythm report tables."""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .rhythm import RhythmProfile

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

DENSITY_POINTS = 512
DENSITY_T_MAX = 1.2


@dataclass
class UtteranceScore:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.ref_len


@dataclass
class WerReport:
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int
    per_utterance: list[UtteranceScore] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.ref_words


def _normalize(tokens, casefold: bool, strip_punct: bool) -> list[str]:
    if isinstance(tokens, str):
        tokens = tokens.split()
    out = []
    for tok in tokens:
        if casefold:
            tok = tok.casefold()
        if strip_punct:
            tok = tok.translate(_PUNCT_TABLE)
        if tok:
            out.append(tok)
    return out


def _align(ref: list[str], hyp: list[str]) -> tuple[int, int, int]:
    """Levenshtein alignment with unit costs; returns (subs, ins, dels).

    Cost ties prefer the diagonal move, i.e. substitution over an
    insertion-plus-deletion pair.
    """
    n, m = len(ref), len(hyp)
    cost = np.empty((n + 1, m + 1), dtype=np.intp)
    cost[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = cost[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            cost[i, j] = min(diag, cost[i - 1, j] + 1, cost[i, j - 1] + 1)
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i, j] == cost[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and cost[i, j] == cost[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return int(subs), int(ins), int(dels)


def wer(refs, hyps, casefold: bool = True, strip_punct: bool = True) -> WerReport:
    """Corpus word error rate: error counts pooled over utterances, then divided.

    ``refs`` and ``hyps`` are parallel lists of token lists (strings are
    split on whitespace).  Every reference must be nonempty after
    normalization.
    """
    if len(refs) != len(hyps):
        raise ValueError(f"got {len(refs)} references but {len(hyps)} hypotheses")
    per_utt = []
    for u, (ref, hyp) in enumerate(zip(refs, hyps)):
        ref_norm = _normalize(ref, casefold, strip_punct)
        hyp_norm = _normalize(hyp, casefold, strip_punct)
        if not ref_norm:
            raise ValueError(f"reference {u} is empty after normalization")
        s, i, d = _align(ref_norm, hyp_norm)
        per_utt.append(UtteranceScore(s, i, d, len(ref_norm)))
    return WerReport(
        substitutions=sum(u.substitutions for u in per_utt),
        insertions=sum(u.insertions for u in per_utt),
        deletions=sum(u.deletions for u in per_utt),
        ref_words=sum(u.ref_len for u in per_utt),
        per_utterance=per_utt,
    )


@dataclass
class RateReport:
    """Per-speaker rates plus sampled syllable-duration densities for plotting."""

    rows: list[dict]
    grid: np.ndarray
    densities: dict[str, np.ndarray]

    def rates_tsv(self) -> str:
        lines = ["speaker\tlabel\tsyllable_rate\tsonorant_rate"]
        for row in self.rows:
            lines.append(
                f"{row['speaker']}\t{row['label']}\t"
                f"{row['syllable_rate']:.6g}\t{row['sonorant_rate']:.6g}"
            )
        return "\n".join(lines) + "\n"

    def densities_tsv(self) -> str:
        speakers = [s for s in self.densities]
        lines = ["duration_s\t" + "\t".join(speakers)]
        for i, t in enumerate(self.grid):
            vals = "\t".join(
                f"{self.densities[s][i]:.6g}" if self.densities[s].size else "" for s in speakers
            )
            lines.append(f"{t:.6g}\t{vals}")
        return "\n".join(lines) + "\n"


def rate_report(
    profiles: list[RhythmProfile],
    labels: list[str] | None = None,
    n_points: int = DENSITY_POINTS,
    t_max: float = DENSITY_T_MAX,
) -> RateReport:
    """Tabulate speaking rates per profile and sample the syllable-duration
    densities on a fixed grid; speakers without a fitted model get an empty
    density column."""
    if not profiles:
        raise ValueError("need at least one profile")
    if labels is None:
        labels = [""] * len(profiles)
    if len(labels) != len(profiles):
        raise ValueError("labels and profiles must have equal length")
    grid = np.linspace(0.0, t_max, n_points)
    rows = []
    densities: dict[str, np.ndarray] = {}
    for profile, label in zip(profiles, labels):
        rows.append(
            {
                "speaker": profile.speaker_id,
                "label": label,
                "syllable_rate": profile.syllable_rate,
                "sonorant_rate": profile.sonorant_rate,
            }
        )
        if profile.syllable_gamma is not None:
            densities[profile.speaker_id] = profile.syllable_gamma.pdf(grid)
        else:
            densities[profile.speaker_id] = np.empty(0)
    return RateReport(rows, grid, densities)
