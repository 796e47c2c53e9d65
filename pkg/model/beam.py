"""
model/beam.py
Beam search and greedy decoding.

Both are generic over a step function mapping k prefixes (token tuples
without the start token) to next-token log-probabilities [k, V]. Scores are
log P / lp(|Y|) with lp(|Y|) = ((5 + |Y|) / 6) ** gamma.
"""
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from tensor_core import InvalidInputError, Tensor, log_softmax, no_grad

StepFn = Callable[[Sequence[tuple[int, ...]]], np.ndarray]

DEFAULT_BEAM = 4
DEFAULT_LENGTH_PENALTY = 0.6


@dataclass(frozen=True)
class Hypothesis:
    tokens:   tuple[int, ...]
    log_prob: float

    def score(self, gamma: float) -> float:
        return self.log_prob / length_penalty(len(self.tokens), gamma)


def length_penalty(length: int, gamma: float) -> float:
    return ((5.0 + length) / 6.0) ** gamma


def _best(pool: list[Hypothesis], gamma: float) -> Hypothesis:
    # max() keeps the first of equal scores, so earlier-found hypotheses win ties
    return max(pool, key=lambda h: h.score(gamma))


def greedy_decode(step_fn: StepFn, max_len: int, end_id: int) -> Hypothesis:
    """Pick the arg-max token at every step until END or max_len tokens."""
    hyp = Hypothesis((), 0.0)
    for _ in range(max_len):
        logp = np.asarray(step_fn([hyp.tokens]))
        total = (np.array([hyp.log_prob])[:, None] + logp).ravel()
        token = int(np.argmax(total))
        hyp = Hypothesis(hyp.tokens + (token,), float(total[token]))
        if token == end_id:
            break
    return hyp


def beam_search(
    step_fn: StepFn,
    beam: int = DEFAULT_BEAM,
    gamma: float = DEFAULT_LENGTH_PENALTY,
    max_len: int = 84,
    end_id: int = 1,
) -> Hypothesis:
    """
    Standard beam search. Each step expands every alive hypothesis, ranks the
    top 2*beam candidates, moves END-terminated ones to the finished pool and
    keeps the best `beam` others alive. Search stops once `beam` hypotheses
    have finished or max_len is reached.

    For beam > 1 the finished pool is seeded with the greedy hypothesis, so
    the result never scores below greedy decoding.
    """
    if beam < 1:
        raise InvalidInputError(f"beam size must be >= 1, got {beam}")
    if max_len < 1:
        raise InvalidInputError(f"max_len must be >= 1, got {max_len}")

    finished: list[Hypothesis] = []
    if beam > 1:
        finished.append(greedy_decode(step_fn, max_len, end_id))
    found = 0
    alive = [Hypothesis((), 0.0)]

    for _ in range(max_len):
        logp = np.asarray(step_fn([h.tokens for h in alive]))
        vocab = logp.shape[-1]
        total = (np.array([h.log_prob for h in alive])[:, None] + logp).ravel()
        order = np.argsort(-total, kind="stable")[: 2 * beam]

        next_alive: list[Hypothesis] = []
        for idx in order:
            parent, token = divmod(int(idx), vocab)
            hyp = Hypothesis(alive[parent].tokens + (token,), float(total[idx]))
            if token == end_id:
                finished.append(hyp)
                found += 1
            else:
                next_alive.append(hyp)
            if len(next_alive) == beam:
                break
        alive = next_alive
        if found >= beam or not alive:
            break
    else:
        finished.extend(alive)

    if not finished:
        finished = alive
    return _best(finished, gamma)


def strip_special(tokens: Sequence[int], end_id: int) -> list[int]:
    """Tokens up to (excluding) the first END."""
    out: list[int] = []
    for t in tokens:
        if t == end_id:
            break
        out.append(int(t))
    return out


def model_step_fn(model, memory: Tensor, memory_mask: np.ndarray, start_id: int) -> StepFn:
    """Step function over a single example's memory [1, S, d]."""

    def step(prefixes: Sequence[tuple[int, ...]]) -> np.ndarray:
        k = len(prefixes)
        ids = np.array([(start_id,) + tuple(p) for p in prefixes], dtype=np.int64)
        mem = Tensor(np.repeat(memory.data, k, axis=0), dtype=memory.dtype)
        mask = np.repeat(memory_mask, k, axis=0)
        logits = model.decode(ids, mem, mask)
        return log_softmax(logits[:, -1], axis=-1).data.astype(np.float64)

    return step


def generate(
    model,
    batch,
    beam: int = DEFAULT_BEAM,
    gamma: float = DEFAULT_LENGTH_PENALTY,
    max_len: Optional[int] = None,
    path: Literal["mas", "vis2sum"] = "mas",
    end_id: int = 1,
    start_id: int = 2,
) -> list[list[int]]:
    """Decode every example of a batch; returns token ids without END."""
    if max_len is None:
        max_len = model.config.max_summary_len
    was_training = model.training
    model.eval()
    outputs: list[list[int]] = []
    try:
        with no_grad():
            for row in range(batch.size):
                single = batch.select([row])
                memory, mask = model.mas_memory(single) if path == "mas" else model.vis2sum_memory(single)
                step = model_step_fn(model, memory, mask, start_id)
                if beam == 1:
                    hyp = greedy_decode(step, max_len, end_id)
                else:
                    hyp = beam_search(step, beam, gamma, max_len, end_id)
                outputs.append(strip_special(hyp.tokens, end_id))
    finally:
        model.train(was_training)
    return outputs
