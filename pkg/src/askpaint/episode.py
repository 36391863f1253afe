"""Episode state machine for the question/answer refinement loop.

An episode alternates model forward passes with answers. Pass 0 consumes
all-zero question/hint/prediction buffers and yields the first prediction
and question; every later pass consumes the input image, the pending
question, the hint built from its answer (zeros if unanswered), and the
previous prediction.

Conventions used throughout the package:

  * ``step_t`` counts forward passes performed so far.
  * ``max_answers`` caps the number of answered questions, so an episode
    performs at most ``max_answers + 1`` forward passes.
  * ``advance`` is functional: it returns a new state and never mutates
    the one passed in, so earlier history entries are immutable.

States are shape-polymorphic: unbatched tensors (channels, H, W) run a
single image; a leading batch dimension runs many episodes in lockstep
(as the trainer does).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import torch

from .errors import StateError, ValidationError
from .model import ColorizerNet
from .oracle import (
    OracleConfig,
    broadcast_hint,
    compute_answer,
    perturb_answer,
    validate_question,
)

# answer_fn(pass_index, pending_question, state) -> answer tensor (..., K)
AnswerFn = Callable[[int, torch.Tensor, "EpisodeState"], torch.Tensor]


@dataclass(frozen=True)
class EpisodeState:
    input_x: torch.Tensor
    step_t: int
    max_answers: int
    current_question: torch.Tensor
    current_hint: torch.Tensor
    current_prediction: torch.Tensor
    question_history: tuple[torch.Tensor, ...]
    answer_history: tuple[torch.Tensor, ...]
    prediction_history: tuple[torch.Tensor, ...]

    @property
    def forward_passes(self) -> int:
        return self.step_t

    @property
    def exhausted(self) -> bool:
        return self.step_t >= self.max_answers + 1

    @property
    def color_channels(self) -> int:
        return self.current_prediction.shape[-3]


def init_episode(
    input_x: torch.Tensor,
    max_answers: int,
    color_channels: int = 2,
) -> EpisodeState:
    """Fresh episode at step 0: zero question, hint, and prediction buffers."""
    if not torch.isfinite(input_x).all():
        raise ValidationError("input contains non-finite values")
    if max_answers < 0:
        raise ValidationError(f"max_answers must be >= 0, got {max_answers}")
    if input_x.dim() < 3:
        raise ValidationError("input must be (channels, H, W) with optional batch dims")
    spatial = input_x.shape[-2:]
    batch = input_x.shape[:-3]
    return EpisodeState(
        input_x=input_x,
        step_t=0,
        max_answers=max_answers,
        current_question=input_x.new_zeros(*batch, *spatial),
        current_hint=input_x.new_zeros(*batch, color_channels, *spatial),
        current_prediction=input_x.new_zeros(*batch, color_channels, *spatial),
        question_history=(),
        answer_history=(),
        prediction_history=(),
    )


def advance(
    state: EpisodeState,
    model: ColorizerNet,
    answer: torch.Tensor | None = None,
) -> EpisodeState:
    """Run one forward pass, optionally answering the pending question first.

    With an answer, the hint consumed by this pass is
    ``broadcast_hint(pending_question, answer)``; without one the pass sees
    the zero hint. The new prediction and question are appended to the
    histories and the pass counter advances.
    """
    if state.exhausted:
        raise StateError(
            f"episode already ran {state.step_t} forward passes "
            f"(cap is max_answers + 1 = {state.max_answers + 1})"
        )
    hint = state.current_hint
    new_answers = state.answer_history
    if answer is not None:
        if state.step_t == 0:
            raise StateError("no pending question to answer before the first forward pass")
        if answer.shape[-1] != state.color_channels:
            raise ValidationError(
                f"answer has {answer.shape[-1]} channels, episode expects {state.color_channels}"
            )
        if not torch.isfinite(answer).all():
            raise ValidationError("answer contains non-finite values")
        hint = broadcast_hint(state.current_question, answer)
        new_answers = state.answer_history + (answer,)
    prediction, question = model.step(
        state.input_x, state.current_question, hint, state.current_prediction
    )
    return replace(
        state,
        step_t=state.step_t + 1,
        current_question=question,
        current_hint=torch.zeros_like(state.current_hint),
        current_prediction=prediction,
        question_history=state.question_history + (question,),
        answer_history=new_answers,
        prediction_history=state.prediction_history + (prediction,),
    )


def rollout(
    input_x: torch.Tensor,
    ground_truth_y: torch.Tensor | None,
    n_answers: int,
    model: ColorizerNet,
    oracle_config: OracleConfig | None = None,
    answer_fn: AnswerFn | None = None,
    max_answers: int | None = None,
) -> tuple[torch.Tensor, EpisodeState]:
    """Full episode: ``n_answers + 1`` forward passes.

    Each intermediate question is answered by the masked-average oracle
    against ``ground_truth_y`` (perturbed per ``oracle_config.noise``), or
    by ``answer_fn`` when supplied, which makes the same loop serve
    training, evaluation, and scripted/human steering. ``n_answers = 0``
    is plain one-shot colorization and never reads the ground truth.
    """
    cfg = oracle_config or OracleConfig()
    cap = n_answers if max_answers is None else max_answers
    if n_answers < 0 or n_answers > cap:
        raise ValidationError(f"n_answers {n_answers} out of range [0, {cap}]")
    if n_answers > 0 and ground_truth_y is None and answer_fn is None:
        raise ValidationError("ground truth is required when answers come from the oracle")
    state = init_episode(input_x, cap, color_channels=model.config.color_channels)
    state = advance(state, model)
    for i in range(n_answers):
        if answer_fn is not None:
            answer = answer_fn(state.step_t, state.current_question, state)
        else:
            answer = compute_answer(state.current_question, ground_truth_y, eps=cfg.eps)
            if cfg.stop_gradient:
                answer = answer.detach()
            if cfg.noise is not None:
                answer = perturb_answer(answer, cfg.noise, generator=cfg.generator)
        state = advance(state, model, answer)
    return state.current_prediction, state


def check_question_invariants(state: EpisodeState) -> None:
    """Assert every stored question map is finite and within [0, 1]."""
    for q in state.question_history:
        validate_question(q)
