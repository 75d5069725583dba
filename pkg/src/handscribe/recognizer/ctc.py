"""Connectionist temporal classification: loss with exact gradients via
the forward-backward recursion, plus greedy and prefix beam-search
decoding. All probability arithmetic happens in log space.
"""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleLabelError
from .charset import CharSet

NEG_INF = -np.inf


def log_softmax(logits: np.ndarray) -> np.ndarray:
    x = np.asarray(logits, dtype=np.float64)
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def min_frames(label: list[int]) -> int:
    """Fewest timesteps that can emit the label: its length plus one blank
    between each repeated pair."""
    repeats = sum(1 for i in range(1, len(label)) if label[i] == label[i - 1])
    return len(label) + repeats


def check_label(label, num_classes: int, blank: int, num_frames: int) -> list[int]:
    label = [int(i) for i in label]
    for idx in label:
        if not 0 <= idx < num_classes or idx == blank:
            raise InfeasibleLabelError(f"label index {idx} invalid for {num_classes} classes (blank {blank})")
    if min_frames(label) > num_frames:
        raise InfeasibleLabelError(
            f"label needs {min_frames(label)} frames but only {num_frames} are available"
        )
    return label


def ctc_loss(logits: np.ndarray, label, blank: int | None = None) -> tuple[float, np.ndarray]:
    """Negative log-probability of `label` under softmax(logits), with the
    exact gradient with respect to the raw logits.

    logits: (T, C) array; label: class indices (may be empty); blank
    defaults to the last class.
    """
    logits = np.asarray(logits)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (T, C), got {logits.shape}")
    n_frames, n_classes = logits.shape
    if blank is None:
        blank = n_classes - 1
    label = check_label(label, n_classes, blank, n_frames)

    logp = log_softmax(logits)
    ext = [blank]
    for idx in label:
        ext.extend((idx, blank))
    n_states = len(ext)
    ext_arr = np.array(ext)

    # Skip transitions s-2 -> s are allowed into non-blank states that
    # differ from the previous non-blank.
    can_skip = np.zeros(n_states, dtype=bool)
    for s in range(2, n_states):
        can_skip[s] = ext[s] != blank and ext[s] != ext[s - 2]

    alpha = np.full((n_frames, n_states), NEG_INF)
    alpha[0, 0] = logp[0, ext[0]]
    if n_states > 1:
        alpha[0, 1] = logp[0, ext[1]]
    for t in range(1, n_frames):
        stay = alpha[t - 1]
        step = np.full(n_states, NEG_INF)
        step[1:] = alpha[t - 1, :-1]
        acc = np.logaddexp(stay, step)
        skip = np.full(n_states, NEG_INF)
        skip[2:] = alpha[t - 1, :-2]
        acc = np.where(can_skip, np.logaddexp(acc, skip), acc)
        alpha[t] = acc + logp[t, ext_arr]

    if n_states > 1:
        log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    else:
        log_z = alpha[-1, -1]
    if log_z == NEG_INF:
        raise InfeasibleLabelError("label has zero probability mass")

    beta = np.full((n_frames, n_states), NEG_INF)
    beta[-1, -1] = 0.0
    if n_states > 1:
        beta[-1, -2] = 0.0
    for t in range(n_frames - 2, -1, -1):
        future = beta[t + 1] + logp[t + 1, ext_arr]
        stay = future
        step = np.full(n_states, NEG_INF)
        step[:-1] = future[1:]
        acc = np.logaddexp(stay, step)
        skip = np.full(n_states, NEG_INF)
        skip[:-2] = np.where(can_skip[2:], future[2:], NEG_INF)
        beta[t] = np.logaddexp(acc, skip)

    # State posteriors, folded per class: gamma[t, k] = P(state with class
    # k at frame t | label). Gradient of -log Z wrt raw logits is then
    # softmax - gamma.
    posterior = alpha + beta - log_z
    gamma = np.full((n_frames, n_classes), NEG_INF)
    for s in range(n_states):
        k = ext[s]
        gamma[:, k] = np.logaddexp(gamma[:, k], posterior[:, s])

    grad = np.exp(logp) - np.exp(gamma)
    return float(-log_z), grad.astype(logits.dtype if logits.dtype.kind == "f" else np.float64)


def greedy_decode(logits: np.ndarray, charset: CharSet) -> str:
    """Best-path decoding: per-frame argmax (ties to the lower class),
    collapse consecutive repeats, drop blanks."""
    path = np.asarray(logits).argmax(axis=-1)
    return collapse_path(path, charset)


def collapse_path(path, charset: CharSet) -> str:
    blank = charset.blank_index
    out = []
    prev = None
    for idx in path:
        if idx != blank and idx != prev:
            out.append(charset.chars[idx])
        prev = idx
    return "".join(out)


def greedy_path_logprob(logits: np.ndarray) -> float:
    logp = log_softmax(logits)
    return float(logp.max(axis=-1).sum())


def beam_search(logits: np.ndarray, blank: int, beam_width: int) -> list[tuple[tuple[int, ...], float]]:
    """Prefix beam search. Returns surviving prefixes with their total log
    probabilities, best first.

    Per frame every beam is extended by every class; duplicate prefixes
    merge by probability sum; the top `beam_width` prefixes by total
    probability survive. Ties order lexicographically for determinism.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    logp = log_softmax(logits)
    n_frames, n_classes = logp.shape

    # prefix -> (log P ending in blank, log P ending in its last char)
    beams: dict[tuple[int, ...], tuple[float, float]] = {(): (0.0, NEG_INF)}
    for t in range(n_frames):
        frame = logp[t]
        grown: dict[tuple[int, ...], list[float]] = {}

        def bump(prefix, p_blank=NEG_INF, p_char=NEG_INF):
            slot = grown.setdefault(prefix, [NEG_INF, NEG_INF])
            slot[0] = np.logaddexp(slot[0], p_blank)
            slot[1] = np.logaddexp(slot[1], p_char)

        for prefix, (p_b, p_nb) in beams.items():
            total = np.logaddexp(p_b, p_nb)
            bump(prefix, p_blank=total + frame[blank])
            if prefix:
                bump(prefix, p_char=p_nb + frame[prefix[-1]])
            for cls in range(n_classes):
                if cls == blank:
                    continue
                if prefix and cls == prefix[-1]:
                    # extending with the same char requires a blank gap,
                    # so only blank-ending mass carries over
                    bump(prefix + (cls,), p_char=p_b + frame[cls])
                else:
                    bump(prefix + (cls,), p_char=total + frame[cls])

        ranked = sorted(
            grown.items(),
            key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]),
        )
        beams = {prefix: (slot[0], slot[1]) for prefix, slot in ranked[:beam_width]}

    finals = [(prefix, float(np.logaddexp(p_b, p_nb))) for prefix, (p_b, p_nb) in beams.items()]
    finals.sort(key=lambda kv: (-kv[1], kv[0]))
    return finals


def beam_decode(logits: np.ndarray, charset: CharSet, beam_width: int = 25) -> str:
    """Most probable labeling found by prefix beam search."""
    finals = beam_search(logits, charset.blank_index, beam_width)
    return charset.decode(finals[0][0])


def beam_decode_scored(logits: np.ndarray, charset: CharSet, beam_width: int = 25) -> tuple[str, float]:
    finals = beam_search(logits, charset.blank_index, beam_width)
    prefix, logprob = finals[0]
    return charset.decode(prefix), logprob
