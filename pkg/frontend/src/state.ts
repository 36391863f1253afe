/**
 * The whole client state is one immutable view derived from server
 * responses; reloading the page and refetching the session reproduces it
 * exactly. Server fields are displayed unmodified — the only client-side
 * knob is the overlay opacity.
 */

import type { AnswerResponse, CreateSessionResponse, SessionDetail } from "./types.js";

export interface HistoryEntry {
  /** Answer consumed before this step's prediction; null for the first pass. */
  answerColor: [number, number, number] | null;
  answerMode: "custom" | "oracle" | null;
  predictionPng: string;
  questionPng: string | null;
}

export interface SessionView {
  sessionId: string;
  checkpointId: string;
  step: number;
  maxAnswers: number;
  exhausted: boolean;
  currentPredictionPng: string;
  currentQuestionPng: string | null;
  currentQuestionValues: number[][] | null;
  history: HistoryEntry[];
  overlayOpacity: number;
  pendingAnswer: boolean;
}

export function viewFromCreate(resp: CreateSessionResponse): SessionView {
  return {
    sessionId: resp.session_id,
    checkpointId: resp.checkpoint_id,
    step: resp.step,
    maxAnswers: resp.max_answers,
    exhausted: resp.exhausted,
    currentPredictionPng: resp.prediction.png_base64,
    currentQuestionPng: resp.exhausted ? null : resp.question.png_base64,
    currentQuestionValues: resp.exhausted ? null : (resp.question.values ?? null),
    history: [
      {
        answerColor: null,
        answerMode: null,
        predictionPng: resp.prediction.png_base64,
        questionPng: resp.question.png_base64,
      },
    ],
    overlayOpacity: 0.5,
    pendingAnswer: false,
  };
}

/** Guard for the single in-flight answer request. */
export function beginAnswer(view: SessionView): SessionView {
  if (view.pendingAnswer) throw new Error("an answer request is already in flight");
  if (view.exhausted) throw new Error("session is exhausted");
  return { ...view, pendingAnswer: true };
}

export function failAnswer(view: SessionView): SessionView {
  return { ...view, pendingAnswer: false };
}

export function applyAnswer(view: SessionView, resp: AnswerResponse): SessionView {
  const entry: HistoryEntry = {
    answerColor: resp.answer.display_color,
    answerMode: resp.answer.mode,
    predictionPng: resp.prediction.png_base64,
    questionPng: resp.question ? resp.question.png_base64 : null,
  };
  return {
    ...view,
    step: resp.step,
    exhausted: resp.exhausted,
    currentPredictionPng: resp.prediction.png_base64,
    currentQuestionPng: resp.question ? resp.question.png_base64 : null,
    currentQuestionValues: resp.question ? (resp.question.values ?? null) : null,
    history: [...view.history, entry],
    pendingAnswer: false,
  };
}

export function viewFromDetail(detail: SessionDetail): SessionView {
  const { predictions, questions, answers } = detail.history;
  const history: HistoryEntry[] = predictions.map((pred, i) => ({
    answerColor: i >= 1 && answers[i - 1] ? answers[i - 1].display_color : null,
    answerMode: i >= 1 && answers[i - 1] ? answers[i - 1].mode : null,
    predictionPng: pred.png_base64,
    questionPng: questions[i] ? questions[i].png_base64 : null,
  }));
  const last = history[history.length - 1];
  return {
    sessionId: detail.session_id,
    checkpointId: detail.checkpoint_id,
    step: detail.step,
    maxAnswers: detail.max_answers,
    exhausted: detail.exhausted,
    currentPredictionPng: last.predictionPng,
    currentQuestionPng: detail.exhausted ? null : last.questionPng,
    currentQuestionValues: null,
    history,
    overlayOpacity: 0.5,
    pendingAnswer: false,
  };
}

export function setOverlayOpacity(view: SessionView, opacity: number): SessionView {
  return { ...view, overlayOpacity: Math.min(1, Math.max(0, opacity)) };
}
