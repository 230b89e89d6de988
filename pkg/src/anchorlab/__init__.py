"""anchorlab: two-stage EEG-to-text decoding at desk scale.

Stage 1 aligns word-aligned EEG feature sequences with a fixed keyword
vocabulary through a contrastive objective and decodes ordered semantic
anchors; Stage 2 reconstructs one sentence per anchor sequence with
TF-IDF retrieval grounding and a chat-completion endpoint (or an offline
deterministic fallback). The evaluation harness covers anchor grounding,
Top-k sentence retrieval, text-overlap metrics, permutation tests, and
repeated-measures statistics.
"""

__version__ = "0.1.0"
