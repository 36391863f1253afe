"""Verify a live steering session against an offline replay.

Fetches a session's float arrays from a running service, replays the same
answer sequence through the same checkpoint offline, and compares every
prediction and question exactly. Exit status 0 means the service added no
hidden state.

Usage:
  python -m askpaint.replaycheck --base-url http://127.0.0.1:8000 \
      --session-id ID --checkpoint-dir CHECKPOINT_DIR
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request
from pathlib import Path

import torch

from .checkpoint import load_checkpoint
from .episode import rollout


def fetch_session(base_url: str, session_id: str) -> dict:
    url = f"{base_url}/sessions/{session_id}?include_arrays=1"
    with urllib.request.urlopen(url) as resp:
        return json.load(resp)


def verify_session(detail: dict, checkpoint_dir: Path) -> list[str]:
    """Return a list of mismatch descriptions (empty means identical)."""
    arrays = detail["arrays"]
    model = load_checkpoint(checkpoint_dir / f"{detail['checkpoint_id']}.ckpt")
    input_x = torch.tensor(arrays["input_x"], dtype=torch.float32)
    answers = [torch.tensor(a, dtype=torch.float32) for a in arrays["answers"]]

    def answer_fn(step, question, state):
        return answers[len(state.answer_history)]

    with torch.no_grad():
        _, state = rollout(
            input_x, None, len(answers), model,
            answer_fn=answer_fn, max_answers=detail["max_answers"],
        )
    problems = []
    served_preds = [torch.tensor(p, dtype=torch.float32) for p in arrays["predictions"]]
    served_questions = [torch.tensor(q, dtype=torch.float32) for q in arrays["questions"]]
    if len(served_preds) != len(state.prediction_history):
        problems.append(
            f"history length mismatch: served {len(served_preds)}, replay {len(state.prediction_history)}"
        )
        return problems
    for i, (offline, served) in enumerate(zip(state.prediction_history, served_preds)):
        if not torch.equal(offline, served):
            problems.append(f"prediction {i} differs (max dev {(offline - served).abs().max():.3e})")
    for i, (offline, served) in enumerate(zip(state.question_history, served_questions)):
        if not torch.equal(offline, served):
            problems.append(f"question {i} differs (max dev {(offline - served).abs().max():.3e})")
    return problems


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--base-url", required=True)
    parser.add_argument("--session-id", required=True)
    parser.add_argument("--checkpoint-dir", required=True)
    args = parser.parse_args(argv)
    detail = fetch_session(args.base_url, args.session_id)
    problems = verify_session(detail, Path(args.checkpoint_dir))
    if problems:
        for p in problems:
            print(f"MISMATCH: {p}", file=sys.stderr)
        return 1
    print(f"session {args.session_id}: {detail['step']} passes replay identically")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
