import { describe, expect, it } from "vitest";
import {
  applyAnswer,
  beginAnswer,
  failAnswer,
  setOverlayOpacity,
  viewFromCreate,
  viewFromDetail,
} from "../src/state.js";
import type { AnswerResponse, CreateSessionResponse, SessionDetail } from "../src/types.js";

const createResp: CreateSessionResponse = {
  session_id: "abc",
  checkpoint_id: "toy",
  color_space: "lab_ab",
  max_answers: 2,
  step: 1,
  exhausted: false,
  prediction: { png_base64: "PRED0", blob: "b0" },
  question: { png_base64: "Q0", blob: "b1", values: [[0.5]] },
};

function answerResp(step: number, exhausted: boolean): AnswerResponse {
  return {
    session_id: "abc",
    step,
    exhausted,
    answer: { mode: "custom", model_space: [0.1, -0.1], display_color: [200, 10, 10] },
    prediction: { png_base64: `PRED${step - 1}`, blob: "x" },
    question: exhausted ? null : { png_base64: `Q${step - 1}`, blob: "y", values: [[0.2]] },
  };
}

describe("session view state machine", () => {
  it("builds the initial view from a create response", () => {
    const view = viewFromCreate(createResp);
    expect(view.step).toBe(1);
    expect(view.history).toHaveLength(1);
    expect(view.history[0].answerColor).toBeNull();
    expect(view.currentQuestionPng).toBe("Q0");
    expect(view.pendingAnswer).toBe(false);
  });

  it("appends history and tracks the server step on answers", () => {
    let view = viewFromCreate(createResp);
    view = applyAnswer(beginAnswer(view), answerResp(2, false));
    expect(view.step).toBe(2);
    expect(view.history).toHaveLength(2);
    expect(view.history[1].answerColor).toEqual([200, 10, 10]);
    view = applyAnswer(beginAnswer(view), answerResp(3, true));
    expect(view.exhausted).toBe(true);
    expect(view.currentQuestionPng).toBeNull();
  });

  it("enforces a single in-flight answer", () => {
    const view = beginAnswer(viewFromCreate(createResp));
    expect(() => beginAnswer(view)).toThrow(/in flight/);
    const recovered = failAnswer(view);
    expect(() => beginAnswer(recovered)).not.toThrow();
  });

  it("rejects answers on an exhausted session", () => {
    let view = viewFromCreate(createResp);
    view = applyAnswer(beginAnswer(view), answerResp(2, true));
    expect(() => beginAnswer(view)).toThrow(/exhausted/);
  });

  it("view state never desyncs from the server step", () => {
    let view = viewFromCreate(createResp);
    // even if responses arrive with surprising step numbers the view
    // mirrors the server rather than counting locally
    view = applyAnswer(beginAnswer(view), answerResp(3, false));
    expect(view.step).toBe(3);
  });

  it("rebuilds an identical view from a session detail (page reload)", () => {
    let live = viewFromCreate(createResp);
    live = applyAnswer(beginAnswer(live), answerResp(2, false));
    const detail: SessionDetail = {
      session_id: "abc",
      checkpoint_id: "toy",
      color_space: "lab_ab",
      status: "active",
      step: 2,
      max_answers: 2,
      exhausted: false,
      history: {
        predictions: [
          { png_base64: "PRED0", blob: "p0" },
          { png_base64: "PRED1", blob: "p1" },
        ],
        questions: [
          { png_base64: "Q0", blob: "q0" },
          { png_base64: "Q1", blob: "q1" },
        ],
        answers: [{ mode: "custom", model_space: [0.1, -0.1], display_color: [200, 10, 10] }],
      },
    };
    const restored = viewFromDetail(detail);
    expect(restored.step).toBe(live.step);
    expect(restored.history.map((h) => h.predictionPng)).toEqual(
      live.history.map((h) => h.predictionPng),
    );
    expect(restored.history.map((h) => h.answerColor)).toEqual(
      live.history.map((h) => h.answerColor),
    );
    expect(restored.currentPredictionPng).toBe(live.currentPredictionPng);
  });

  it("clamps overlay opacity to [0, 1]", () => {
    const view = viewFromCreate(createResp);
    expect(setOverlayOpacity(view, 1.7).overlayOpacity).toBe(1);
    expect(setOverlayOpacity(view, -2).overlayOpacity).toBe(0);
    expect(setOverlayOpacity(view, 0.3).overlayOpacity).toBeCloseTo(0.3);
  });
});
