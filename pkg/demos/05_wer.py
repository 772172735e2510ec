#!/usr/bin/env python3
"""Word error rate scoring on toy transcripts.

Counts are pooled over the corpus before dividing, the usual convention for
ASR scoring, so long utterances weigh more than short ones.
"""

from rhythmvc import wer

refs = [
    "the cat sat on the mat",
    "a quick brown fox",
    "speech conversion helps recognition",
]
hyps = [
    "the cat sat on a mat",
    "a quick brown fox",
    "speech conversion recognition",
]

report = wer(refs, hyps)
print(f"corpus WER: {report.wer:.2f}%")
print(
    f"substitutions {report.substitutions}, insertions {report.insertions},"
    f" deletions {report.deletions}, reference words {report.ref_words}"
)
print("\nper utterance:")
for i, utt in enumerate(report.per_utterance):
    print(
        f"  utt{i}: wer {utt.wer:6.2f}%  (S={utt.substitutions}"
        f" I={utt.insertions} D={utt.deletions}, N={utt.ref_len})"
    )

# normalization folds case and strips punctuation by default
clean = wer(["Hello, World!"], ["hello world"])
print(f"\nwith normalization: {clean.wer:.1f}%")
strict = wer(["Hello, World!"], ["hello world"], casefold=False, strip_punct=False)
print(f"without normalization: {strict.wer:.1f}%")
